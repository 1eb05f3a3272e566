//! CSV and JSON ingestion, seeded synthetic datasets, and train/test splits.
//!
//! All randomness uses `ChaCha8Rng::seed_from_u64(seed)`. Synthetic rows are drawn feature by
//! feature: one uniform `u` in `[0,1)` per coordinate gives `x_j = +1` iff `u < p_j`, then one
//! more uniform `v` per row flips the clean label iff `v < eta`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::fourier::{cube_point, ProductDistribution};
use crate::learners::sign;
use crate::oracle::ExactProblem;
use crate::subset::FeatureSubset;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    #[default]
    Auto,
    Pm1,
    ZeroOne,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub n: usize,
    pub d: usize,
    /// The encoding actually used (`pm1` or `zero_one`).
    pub encoding: Encoding,
    pub header: Option<Vec<String>>,
    /// Feature columns holding a single value; these break parity estimates later on.
    pub degenerate_columns: Vec<usize>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => Error::Csv(csv::Error::from(kind_to_io(kind))),
    }
}

fn kind_to_io(kind: csv::ErrorKind) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{kind:?}"))
}

/// Loads a CSV whose last column is the label. Rows and columns in errors are 1-based and count
/// the header line when present.
pub fn load_csv(path: impl AsRef<Path>, encoding: Encoding) -> Result<LabeledDataset> {
    Ok(load_csv_with_report(path, encoding)?.0)
}

pub fn load_csv_with_report(
    path: impl AsRef<Path>,
    encoding: Encoding,
) -> Result<(LabeledDataset, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut records = Vec::new();
    for rec in reader.records() {
        records.push(rec.map_err(|e| csv_err(path, e))?);
    }
    parse_records(&records, encoding)
}

/// Parses an in-memory CSV body, for callers that already hold the text.
pub fn parse_csv(text: &str, encoding: Encoding) -> Result<(LabeledDataset, LoadReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let records = reader.records().collect::<std::result::Result<Vec<_>, _>>()?;
    parse_records(&records, encoding)
}

fn parse_records(
    records: &[csv::StringRecord],
    encoding: Encoding,
) -> Result<(LabeledDataset, LoadReport)> {
    let Some(first) = records.first() else {
        return Err(Error::invalid("CSV holds no rows"));
    };
    let header = first
        .iter()
        .any(|c| c.parse::<f64>().is_err())
        .then(|| first.iter().map(str::to_string).collect::<Vec<_>>());
    let offset = usize::from(header.is_some());
    let body = &records[offset..];
    if body.is_empty() {
        return Err(Error::invalid("CSV holds a header but no data rows"));
    }
    let width = first.len();
    if width < 2 {
        return Err(Error::invalid("CSV needs at least one feature column and a label column"));
    }

    let mut cells: Vec<i8> = Vec::with_capacity(body.len() * width);
    // First cell seen holding -1 and holding 0, as (row, column).
    let mut seen_neg: Option<(usize, usize)> = None;
    let mut seen_zero: Option<(usize, usize)> = None;
    for (r, rec) in body.iter().enumerate() {
        let row = r + offset + 1;
        if rec.len() != width {
            return Err(Error::Parse {
                row,
                column: rec.len().min(width) + 1,
                message: format!("expected {width} cells, found {}", rec.len()),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            let column = c + 1;
            let v = parse_cell(cell).ok_or_else(|| Error::Parse {
                row,
                column,
                message: format!("cell {cell:?} is not one of -1, 0, 1, +1"),
            })?;
            match v {
                -1 => seen_neg = seen_neg.or(Some((row, column))),
                0 => seen_zero = seen_zero.or(Some((row, column))),
                _ => {}
            }
            cells.push(v);
        }
    }

    let used = match encoding {
        Encoding::Auto => match (seen_neg, seen_zero) {
            (Some(a), Some(b)) => {
                let (row, column) = a.max(b);
                return Err(Error::MixedEncoding { row, column });
            }
            (None, Some(_)) => Encoding::ZeroOne,
            _ => Encoding::Pm1,
        },
        Encoding::Pm1 => {
            if let Some((row, column)) = seen_zero {
                return Err(Error::MixedEncoding { row, column });
            }
            Encoding::Pm1
        }
        Encoding::ZeroOne => {
            if let Some((row, column)) = seen_neg {
                return Err(Error::MixedEncoding { row, column });
            }
            Encoding::ZeroOne
        }
    };
    if used == Encoding::ZeroOne {
        for v in &mut cells {
            *v = if *v == 0 { -1 } else { 1 };
        }
    }

    let d = width - 1;
    let mut features = Vec::with_capacity(body.len() * d);
    let mut labels = Vec::with_capacity(body.len());
    for row in cells.chunks_exact(width) {
        features.extend_from_slice(&row[..d]);
        labels.push(row[d]);
    }
    let data = LabeledDataset::new(d, features, labels)?;
    let degenerate_columns = data
        .column_bias()
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == 0.0 || b == 1.0)
        .map(|(j, _)| j)
        .collect();
    let report = LoadReport {
        n: data.n(),
        d,
        encoding: used,
        header,
        degenerate_columns,
    };
    Ok((data, report))
}

fn parse_cell(cell: &str) -> Option<i8> {
    match cell {
        "1" | "+1" | "1.0" | "+1.0" => Some(1),
        "-1" | "-1.0" => Some(-1),
        "0" | "0.0" | "-0" => Some(0),
        _ => None,
    }
}

/// Writes the dataset with features first and the label last.
pub fn save_csv(
    path: impl AsRef<Path>,
    data: &LabeledDataset,
    encoding: Encoding,
    header: bool,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    if header {
        let mut names: Vec<String> = (0..data.d()).map(|j| format!("x{j}")).collect();
        names.push("y".into());
        w.write_record(&names).map_err(|e| csv_err(path, e))?;
    }
    let fmt = |v: i8| -> &'static str {
        match (encoding, v) {
            (Encoding::ZeroOne, 1) => "1",
            (Encoding::ZeroOne, _) => "0",
            (_, 1) => "1",
            _ => "-1",
        }
    };
    for (row, &y) in data.rows().zip(data.labels()) {
        let rec: Vec<&str> = row.iter().map(|&v| fmt(v)).chain([fmt(y)]).collect();
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn save_json(path: impl AsRef<Path>, data: &LabeledDataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, data)?;
    w.flush().map_err(io_err(path))
}

pub fn load_json(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LabelRule {
    /// `y = x_index`.
    Dictator {
        #[serde(default)]
        index: usize,
    },
    /// `y = prod_{j in S} x_j`.
    Parity { subset: Vec<usize> },
    /// `y = sign(sum_{j in S} x_j)`, ties to `+1`.
    Majority { subset: Vec<usize> },
    /// `y = table[b]` where bit `i` of `b` is set iff `x_{junta[i]} = +1`.
    JuntaTable { junta: Vec<usize>, table: Vec<i8> },
    /// `y = sign(w . x - threshold)`.
    LinearThreshold { weights: Vec<f64>, threshold: f64 },
}

impl LabelRule {
    fn validate(&self, d: usize) -> Result<()> {
        let check = |idx: &[usize]| -> Result<()> {
            if let Some(&j) = idx.iter().find(|&&j| j >= d) {
                return Err(Error::invalid(format!("feature index {j} out of range for d = {d}")));
            }
            let mut sorted = idx.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != idx.len() {
                return Err(Error::invalid("repeated feature index in label rule"));
            }
            Ok(())
        };
        match self {
            LabelRule::Dictator { index } => check(&[*index]),
            LabelRule::Parity { subset } | LabelRule::Majority { subset } => check(subset),
            LabelRule::JuntaTable { junta, table } => {
                check(junta)?;
                if junta.len() > 20 {
                    return Err(Error::invalid("junta tables are limited to 20 features"));
                }
                if table.len() != 1 << junta.len() {
                    return Err(Error::DimensionMismatch {
                        expected: 1 << junta.len(),
                        got: table.len(),
                    });
                }
                if table.iter().any(|&v| v != 1 && v != -1) {
                    return Err(Error::invalid("junta table entries must be ±1"));
                }
                Ok(())
            }
            LabelRule::LinearThreshold { weights, threshold } => {
                if weights.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: weights.len(),
                    });
                }
                if !threshold.is_finite() || weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::invalid("non-finite linear threshold parameters"));
                }
                Ok(())
            }
        }
    }

    /// Noise-free label of a ±1 point.
    pub fn label(&self, x: &[i8]) -> i8 {
        match self {
            LabelRule::Dictator { index } => x[*index],
            LabelRule::Parity { subset } => subset.iter().map(|&j| x[j]).product(),
            LabelRule::Majority { subset } => {
                sign(subset.iter().map(|&j| x[j] as f64).sum())
            }
            LabelRule::JuntaTable { junta, table } => {
                let b: usize = junta
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| usize::from(x[j] > 0) << i)
                    .sum();
                table[b]
            }
            LabelRule::LinearThreshold { weights, threshold } => sign(
                weights.iter().zip(x).map(|(w, &v)| w * v as f64).sum::<f64>() - threshold,
            ),
        }
    }

    /// Features the rule reads.
    pub fn relevant(&self, d: usize) -> FeatureSubset {
        let idx: Vec<usize> = match self {
            LabelRule::Dictator { index } => vec![*index],
            LabelRule::Parity { subset } | LabelRule::Majority { subset } => subset.clone(),
            LabelRule::JuntaTable { junta, .. } => junta.clone(),
            LabelRule::LinearThreshold { weights, .. } => {
                (0..d).filter(|&j| weights[j] != 0.0).collect()
            }
        };
        FeatureSubset::from_indices(idx).unwrap_or(FeatureSubset::EMPTY)
    }
}

/// Recipe for a seeded synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub d: usize,
    /// `Pr(x_j = +1)`; all 0.5 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub biases: Option<Vec<f64>>,
    pub label_rule: LabelRule,
    #[serde(default)]
    pub noise_rate: f64,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(d: usize, label_rule: LabelRule, noise_rate: f64, n: usize, seed: u64) -> Self {
        SyntheticSpec {
            d,
            biases: None,
            label_rule,
            noise_rate,
            n,
            seed,
        }
    }

    pub fn biases(&self) -> Vec<f64> {
        self.biases.clone().unwrap_or_else(|| vec![0.5; self.d])
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::invalid("d must be at least 1"));
        }
        if self.n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if !(0.0..0.5).contains(&self.noise_rate) {
            return Err(Error::domain(format!("noise rate {} (must lie in [0, 0.5))", self.noise_rate)));
        }
        let biases = self.biases();
        if biases.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: biases.len(),
            });
        }
        if let Some((j, p)) = biases.iter().enumerate().find(|(_, p)| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::domain(format!("bias p_{j} = {p} (must lie in (0,1))")));
        }
        self.label_rule.validate(self.d)
    }

    /// The exact problem this spec samples from.
    pub fn exact_problem(&self) -> Result<ExactProblem> {
        self.validate()?;
        let dist = ProductDistribution::new(self.biases())?;
        crate::fourier::check_enum_dim(self.d)?;
        let clean: Vec<i8> = (0..1usize << self.d)
            .map(|idx| {
                let x: Vec<i8> = cube_point(self.d, idx).iter().map(|&v| v as i8).collect();
                self.label_rule.label(&x)
            })
            .collect();
        if self.noise_rate == 0.0 {
            ExactProblem::deterministic(dist, clean)
        } else {
            let eta = self.noise_rate;
            let channel = clean
                .iter()
                .map(|&f| if f > 0 { 1.0 - eta } else { eta })
                .collect();
            ExactProblem::channel(dist, channel)
        }
    }
}

/// Draws `spec.n` rows; identical specs give identical datasets.
pub fn generate(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let biases = spec.biases();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut features = Vec::with_capacity(spec.n * spec.d);
    let mut labels = Vec::with_capacity(spec.n);
    let mut row = vec![0i8; spec.d];
    for _ in 0..spec.n {
        for (x, &p) in row.iter_mut().zip(&biases) {
            *x = if rng.gen::<f64>() < p { 1 } else { -1 };
        }
        let clean = spec.label_rule.label(&row);
        let flip = rng.gen::<f64>() < spec.noise_rate;
        features.extend_from_slice(&row);
        labels.push(if flip { -clean } else { clean });
    }
    LabeledDataset::new(spec.d, features, labels)
}

/// Seeded shuffle, then the first `ceil(n * test_fraction)` shuffled rows form the test side.
/// The test size is kept within `[1, n - 1]` so neither side is empty.
pub fn split(
    data: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::domain(format!("test fraction {test_fraction} (must lie in (0,1))")));
    }
    let n = data.n();
    if n < 2 {
        return Err(Error::EmptySplit {
            train: n,
            test: 0,
        });
    }
    // Absorb binary round-off such as 10 * 0.3 = 3.0000000000000004 before the ceiling.
    let raw = n as f64 * test_fraction * (1.0 - 1e-12);
    let test_size = (raw.ceil() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = data.subset_rows(&idx[..test_size]);
    let train = data.subset_rows(&idx[test_size..]);
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pm1_with_header() {
        let (ds, rep) = parse_csv("a,b,y\n1,-1,1\n-1,-1,-1\n+1,1,1\n-1,1,-1\n", Encoding::Auto).unwrap();
        assert_eq!((ds.n(), ds.d()), (4, 2));
        assert_eq!(ds.row(0), &[1, -1]);
        assert_eq!(ds.labels(), &[1, -1, 1, -1]);
        assert_eq!(rep.encoding, Encoding::Pm1);
        assert_eq!(rep.header.unwrap(), vec!["a", "b", "y"]);
        assert!(rep.degenerate_columns.is_empty());
    }

    #[test]
    fn zero_one_is_remapped() {
        let (ds, rep) = parse_csv("0,1,1\n1,1,0\n", Encoding::Auto).unwrap();
        assert_eq!(rep.encoding, Encoding::ZeroOne);
        assert_eq!(ds.row(0), &[-1, 1]);
        assert_eq!(ds.labels(), &[1, -1]);
        assert_eq!(rep.degenerate_columns, vec![1]);
    }

    #[test]
    fn errors_name_locations() {
        match parse_csv("x,y\n1,1\n2,1\n", Encoding::Auto) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (3, 1)),
            other => panic!("unexpected {other:?}"),
        }
        match parse_csv("1,0\n-1,1\n", Encoding::Auto) {
            Err(Error::MixedEncoding { row, column }) => assert_eq!((row, column), (2, 1)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_csv("0,1\n1,1\n", Encoding::Pm1), Err(Error::MixedEncoding { .. })));
        assert!(matches!(parse_csv("1,1\n1\n", Encoding::Auto), Err(Error::Csv(_)) | Err(Error::Parse { .. })));
    }

    #[test]
    fn file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec::new(4, LabelRule::Majority { subset: vec![0, 1, 2] }, 0.1, 50, 3);
        let ds = generate(&spec).unwrap();
        for (enc, header) in [(Encoding::ZeroOne, false), (Encoding::Pm1, true)] {
            let p = dir.path().join("d.csv");
            save_csv(&p, &ds, enc, header).unwrap();
            assert_eq!(load_csv(&p, Encoding::Auto).unwrap(), ds);
            assert_eq!(load_csv(&p, enc).unwrap(), ds);
        }
        let j = dir.path().join("d.json");
        save_json(&j, &ds).unwrap();
        assert_eq!(load_json(&j).unwrap(), ds);
        assert!(matches!(load_csv(dir.path().join("missing.csv"), Encoding::Auto), Err(Error::Io { .. })));
    }

    #[test]
    fn generation_is_deterministic_and_clean_without_noise() {
        let spec = SyntheticSpec::new(5, LabelRule::Dictator { index: 0 }, 0.0, 200, 42);
        let a = generate(&spec).unwrap();
        assert_eq!(a, generate(&spec).unwrap());
        assert!(a.rows().zip(a.labels()).all(|(r, &y)| r[0] == y));
        let other = generate(&SyntheticSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn spec_validation() {
        let bad_noise = SyntheticSpec::new(3, LabelRule::Dictator { index: 0 }, 0.5, 10, 0);
        assert!(generate(&bad_noise).is_err());
        let bad_rule = SyntheticSpec::new(3, LabelRule::Parity { subset: vec![0, 3] }, 0.0, 10, 0);
        assert!(generate(&bad_rule).is_err());
        let bad_table = SyntheticSpec::new(3, LabelRule::JuntaTable { junta: vec![0, 1], table: vec![1, -1] }, 0.0, 10, 0);
        assert!(generate(&bad_table).is_err());
        let spec_json = r#"{"d": 3, "label_rule": {"rule": "parity", "subset": [0, 2]}, "n": 10, "seed": 5}"#;
        let spec: SyntheticSpec = serde_json::from_str(spec_json).unwrap();
        assert_eq!(spec.noise_rate, 0.0);
        assert_eq!(generate(&spec).unwrap().n(), 10);
    }

    #[test]
    fn rules() {
        let x = [1i8, -1, -1, 1];
        assert_eq!(LabelRule::Parity { subset: vec![0, 1] }.label(&x), -1);
        assert_eq!(LabelRule::Majority { subset: vec![0, 1, 3] }.label(&x), 1);
        assert_eq!(LabelRule::Majority { subset: vec![0, 1] }.label(&x), 1);
        let jt = LabelRule::JuntaTable { junta: vec![3, 1], table: vec![-1, 1, -1, -1] };
        assert_eq!(jt.label(&x), 1);
        let lt = LabelRule::LinearThreshold { weights: vec![1.0, 1.0, 0.0, 0.5], threshold: 0.4 };
        assert_eq!(lt.label(&x), 1);
        assert_eq!(lt.relevant(4), FeatureSubset(0b1011));
    }

    #[test]
    fn exact_problem_matches_rule() {
        let spec = SyntheticSpec::new(3, LabelRule::Majority { subset: vec![0, 1, 2] }, 0.2, 1, 0);
        let p = spec.exact_problem().unwrap();
        let r = crate::oracle::exact_popt(&p, 3).unwrap();
        assert!((r.popt - 0.2).abs() < 1e-12);
    }

    #[test]
    fn split_sizes() {
        let ds = generate(&SyntheticSpec::new(2, LabelRule::Dictator { index: 0 }, 0.0, 10, 1)).unwrap();
        let (train, test) = split(&ds, 0.3, 9).unwrap();
        assert_eq!((test.n(), train.n()), (3, 7));
        assert_eq!(split(&ds, 0.3, 9).unwrap(), (train, test));
        let two = ds.subset_rows(&[0, 1]);
        let (train, test) = split(&two, 0.999, 0).unwrap();
        assert_eq!((test.n(), train.n()), (1, 1));
        assert!(matches!(split(&ds.subset_rows(&[0]), 0.5, 0), Err(Error::EmptySplit { .. })));
        assert!(split(&ds, 1.0, 0).is_err());
    }
}
