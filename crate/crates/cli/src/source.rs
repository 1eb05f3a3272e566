//! Where a command's rows come from: a dataset file, a synthetic recipe, or shorthand flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pacfourier::data::{self, Encoding, LabelRule, SyntheticSpec};
use pacfourier::fourier::MAX_ENUM_DIM;
use pacfourier::oracle::ExactProblem;
use pacfourier::LabeledDataset;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Row count for shorthand synthetic sources without `--rows`.
pub const DEFAULT_ROWS: usize = 1000;

const DATA_STREAM: u64 = 1;
pub const SPLIT_STREAM: u64 = 2;
/// Streams from here on are reserved for per-cell sweeps.
pub const CELL_STREAM_BASE: u64 = 1 << 32;

/// Seed for an independent random stream derived from the run seed (SplitMix64 finalizer).
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(stream))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EncodingArg {
    Auto,
    Pm1,
    #[value(name = "zero_one")]
    ZeroOne,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Auto => Encoding::Auto,
            EncodingArg::Pm1 => Encoding::Pm1,
            EncodingArg::ZeroOne => Encoding::ZeroOne,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Dictator,
    Parity,
    Majority,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct DataOpts {
    /// Dataset file; `.json` is read as a dataset mirror, anything else as CSV with the label last
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Cell encoding of a CSV dataset
    #[arg(long, value_enum)]
    pub encoding: Option<EncodingArg>,
    /// Synthetic dataset recipe (JSON with d, biases, label_rule, noise_rate, n)
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Inline synthetic recipe (config file only)
    #[arg(skip)]
    pub synthetic: Option<SyntheticSpec>,
    /// Shorthand synthetic label rule
    #[arg(long, value_enum)]
    pub rule: Option<RuleKind>,
    /// Features the shorthand rule reads [default: 0 for dictator, 0,1,2 otherwise]
    #[arg(long, value_delimiter = ',')]
    pub relevant: Option<Vec<usize>>,
    /// Dimension of a shorthand synthetic source
    #[arg(long)]
    pub dim: Option<usize>,
    /// Row count of a synthetic source
    #[arg(long)]
    pub rows: Option<usize>,
    /// Label flip probability of a synthetic source
    #[arg(long)]
    pub noise: Option<f64>,
    /// Common Pr(x_j = +1) for every feature of a synthetic source
    #[arg(long)]
    pub bias: Option<f64>,
}

/// Rows plus, for synthetic sources, the recipe they came from.
pub struct Loaded {
    pub data: LabeledDataset,
    pub spec: Option<SyntheticSpec>,
}

impl Loaded {
    /// The exact problem behind a synthetic source, when the cube is small enough to enumerate.
    pub fn exact_problem(&self) -> CliResult<Option<ExactProblem>> {
        match &self.spec {
            Some(spec) if spec.d <= MAX_ENUM_DIM => Ok(Some(spec.exact_problem()?)),
            _ => Ok(None),
        }
    }
}

fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{what} {} does not exist", path.display())))
    }
}

impl DataOpts {
    fn shorthand(&self, rule: RuleKind) -> CliResult<SyntheticSpec> {
        let d = self
            .dim
            .ok_or_else(|| CliError::usage("--dim is required with --rule"))?;
        let relevant = self.relevant.clone().unwrap_or_else(|| match rule {
            RuleKind::Dictator => vec![0],
            _ => vec![0, 1, 2],
        });
        let label_rule = match rule {
            RuleKind::Dictator => match relevant.as_slice() {
                [index] => LabelRule::Dictator { index: *index },
                _ => return Err(CliError::usage("a dictator reads exactly one feature")),
            },
            RuleKind::Parity => LabelRule::Parity { subset: relevant },
            RuleKind::Majority => LabelRule::Majority { subset: relevant },
        };
        Ok(SyntheticSpec::new(d, label_rule, 0.0, DEFAULT_ROWS, 0))
    }

    /// The synthetic recipe selected by these options, with row count, noise and bias overrides
    /// applied and the seed taken from the run seed. `None` when the source is a dataset file.
    pub fn synthetic_spec(&self, seed: u64) -> CliResult<Option<SyntheticSpec>> {
        if self.data.is_some() {
            return Ok(None);
        }
        let mut spec = if let Some(path) = &self.spec {
            require_file(path, "synthetic spec")?;
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<SyntheticSpec>(&text)
                .map_err(|e| CliError::usage(format!("synthetic spec {}: {e}", path.display())))?
        } else if let Some(spec) = &self.synthetic {
            spec.clone()
        } else if let Some(rule) = self.rule {
            self.shorthand(rule)?
        } else {
            return Err(CliError::usage(
                "no dataset: pass --data, --spec or --rule (or set one in --config)",
            ));
        };
        if let Some(d) = self.dim {
            if d != spec.d {
                return Err(CliError::usage(format!("--dim {d} disagrees with the recipe's d = {}", spec.d)));
            }
        }
        if let Some(n) = self.rows {
            spec.n = n;
        }
        if let Some(eta) = self.noise {
            spec.noise_rate = eta;
        }
        if let Some(p) = self.bias {
            spec.biases = Some(vec![p; spec.d]);
        }
        spec.seed = stream_seed(seed, DATA_STREAM);
        spec.validate()?;
        Ok(Some(spec))
    }

    pub fn load(&self, seed: u64) -> CliResult<Loaded> {
        if let Some(path) = &self.data {
            require_file(path, "dataset")?;
            let data = if path.extension().is_some_and(|e| e == "json") {
                data::load_json(path)?
            } else {
                data::load_csv(path, self.encoding.unwrap_or(EncodingArg::Auto).into())?
            };
            return Ok(Loaded { data, spec: None });
        }
        let spec = self.synthetic_spec(seed)?.expect("no dataset file");
        Ok(Loaded {
            data: data::generate(&spec)?,
            spec: Some(spec),
        })
    }
}
