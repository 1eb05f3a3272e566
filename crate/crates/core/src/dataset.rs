use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` rows of ±1 features with ±1 labels, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DatasetRepr", into = "DatasetRepr")]
pub struct LabeledDataset {
    d: usize,
    features: Vec<i8>,
    labels: Vec<i8>,
}

#[derive(Serialize, Deserialize)]
struct DatasetRepr {
    d: usize,
    features: Vec<Vec<i8>>,
    labels: Vec<i8>,
}

impl From<LabeledDataset> for DatasetRepr {
    fn from(ds: LabeledDataset) -> Self {
        DatasetRepr {
            d: ds.d,
            features: ds.rows().map(<[i8]>::to_vec).collect(),
            labels: ds.labels,
        }
    }
}

impl TryFrom<DatasetRepr> for LabeledDataset {
    type Error = Error;

    fn try_from(r: DatasetRepr) -> Result<Self> {
        LabeledDataset::from_rows(r.d, r.features, r.labels)
    }
}

fn check_pm1(v: i8, row: usize, column: usize) -> Result<()> {
    if v == 1 || v == -1 {
        Ok(())
    } else {
        Err(Error::Parse {
            row,
            column,
            message: format!("value {v} is not -1 or +1"),
        })
    }
}

impl LabeledDataset {
    /// Builds a dataset from a flat row-major feature buffer.
    pub fn new(d: usize, features: Vec<i8>, labels: Vec<i8>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dataset needs at least one feature"));
        }
        if labels.is_empty() {
            return Err(Error::invalid("dataset needs at least one row"));
        }
        if features.len() != labels.len() * d {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * d,
                got: features.len(),
            });
        }
        for (i, &v) in features.iter().enumerate() {
            check_pm1(v, i / d, i % d)?;
        }
        for (i, &y) in labels.iter().enumerate() {
            check_pm1(y, i, d)?;
        }
        Ok(LabeledDataset {
            d,
            features,
            labels,
        })
    }

    pub fn from_rows(d: usize, rows: Vec<Vec<i8>>, labels: Vec<i8>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        LabeledDataset::new(d, rows.concat(), labels)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[i8]> {
        self.features.chunks_exact(self.d)
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn features(&self) -> &[i8] {
        &self.features
    }

    /// Row `i` as floating-point coordinates.
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&v| v as f64).collect()
    }

    /// Rows selected by `idx`, in that order.
    pub fn subset_rows(&self, idx: &[usize]) -> LabeledDataset {
        let mut features = Vec::with_capacity(idx.len() * self.d);
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        LabeledDataset {
            d: self.d,
            features,
            labels,
        }
    }

    /// Fraction of `+1` in each column.
    pub fn column_bias(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.d];
        for row in self.rows() {
            for (c, &v) in counts.iter_mut().zip(row) {
                *c += (v == 1) as usize;
            }
        }
        counts
            .into_iter()
            .map(|c| c as f64 / self.n() as f64)
            .collect()
    }
}
