//! Least squares over an arbitrary finite set of real functions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lstsq::{group_rows, min_norm_weighted};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::fourier::{parity_eval, FeatureMoments};
use crate::subset::{enumerate_subsets, FeatureSubset};

/// Largest admissible number of basis functions.
pub const MAX_BASIS_FUNCTIONS: usize = 100_000;

/// A finite list of real functions on `R^d`.
pub trait BasisSet: Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn eval_row(&self, x: &[f64], out: &mut [f64]);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BasisFunction {
    Constant,
    Monomial { exponents: Vec<u32> },
    /// Parity built from the basis moments.
    Parity { subset: FeatureSubset },
}

/// Serializable basis made of constants, monomials and parities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericBasis {
    dim: usize,
    functions: Vec<BasisFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    moments: Option<FeatureMoments>,
}

impl GenericBasis {
    pub fn new(
        dim: usize,
        functions: Vec<BasisFunction>,
        moments: Option<FeatureMoments>,
    ) -> Result<Self> {
        if functions.len() > MAX_BASIS_FUNCTIONS {
            return Err(Error::BasisTooLarge {
                size: functions.len() as u128,
                max: MAX_BASIS_FUNCTIONS as u128,
            });
        }
        if let Some(m) = &moments {
            m.check_dim(dim)?;
        }
        for f in &functions {
            match f {
                BasisFunction::Constant => {}
                BasisFunction::Monomial { exponents } => {
                    if exponents.len() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: exponents.len(),
                        });
                    }
                }
                BasisFunction::Parity { subset } => {
                    if moments.is_none() {
                        return Err(Error::invalid("parity basis functions need moments"));
                    }
                    if subset.span() > dim {
                        return Err(Error::invalid(format!(
                            "subset {subset} lies outside dimension {dim}"
                        )));
                    }
                }
            }
        }
        Ok(GenericBasis {
            dim,
            functions,
            moments,
        })
    }

    /// Parities `psi_S` for every `|S| <= k`, ascending by mask.
    pub fn parities(moments: FeatureMoments, k: usize) -> Result<Self> {
        let d = moments.dim();
        let functions = enumerate_subsets(d, k)?
            .into_iter()
            .map(|subset| BasisFunction::Parity { subset })
            .collect();
        GenericBasis::new(d, functions, Some(moments))
    }

    /// Every monomial of degree `<= k`, in the order used by the polynomial learner.
    pub fn monomials(d: usize, k: usize) -> Result<Self> {
        let basis = super::polynomial::MonomialBasis::new(d, k)?;
        let functions = (0..basis.len())
            .map(|t| BasisFunction::Monomial {
                exponents: basis.exponents(t, d),
            })
            .collect();
        GenericBasis::new(d, functions, None)
    }

    pub fn functions(&self) -> &[BasisFunction] {
        &self.functions
    }
}

impl BasisSet for GenericBasis {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.functions.len()
    }

    fn eval_row(&self, x: &[f64], out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&self.functions) {
            *o = match f {
                BasisFunction::Constant => 1.0,
                BasisFunction::Monomial { exponents } => exponents
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(j, &e)| x[j].powi(e as i32))
                    .product(),
                BasisFunction::Parity { subset } => {
                    parity_eval(self.moments.as_ref().expect("validated"), *subset, x)
                }
            };
        }
    }
}

/// Coefficients `c` minimizing `(1/n) sum_i (y_i - sum_t c_t e_t(x_i))^2`; minimum-norm on ties.
pub fn fit_basis_coefficients<B: BasisSet + ?Sized>(
    data: &LabeledDataset,
    basis: &B,
) -> Result<Vec<f64>> {
    if basis.dim() != data.d() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: data.d(),
        });
    }
    if basis.len() > MAX_BASIS_FUNCTIONS {
        return Err(Error::BasisTooLarge {
            size: basis.len() as u128,
            max: MAX_BASIS_FUNCTIONS as u128,
        });
    }
    let groups = group_rows(data.rows(), data.labels());
    let m = basis.len();
    let mut design = DMatrix::<f64>::zeros(groups.rows.len(), m);
    let mut buf = vec![0.0; m];
    for (u, row) in groups.rows.iter().enumerate() {
        let x: Vec<f64> = row.iter().map(|&v| v as f64).collect();
        basis.eval_row(&x, &mut buf);
        for (t, v) in buf.iter().enumerate() {
            design[(u, t)] = *v;
        }
    }
    Ok(min_norm_weighted(&design, &groups.counts, &groups.label_sums))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(GenericBasis::new(2, vec![BasisFunction::Parity { subset: FeatureSubset(1) }], None).is_err());
        assert!(GenericBasis::new(
            2,
            vec![BasisFunction::Monomial { exponents: vec![1] }],
            None
        )
        .is_err());
        let b = GenericBasis::parities(FeatureMoments::uniform(3), 2).unwrap();
        assert_eq!(b.len(), 7);
    }

    #[test]
    fn constant_basis_fits_mean_label() {
        let data = LabeledDataset::from_rows(1, vec![vec![1], vec![-1], vec![1], vec![1]], vec![1, 1, -1, 1]).unwrap();
        let b = GenericBasis::new(1, vec![BasisFunction::Constant], None).unwrap();
        let c = fit_basis_coefficients(&data, &b).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let b = GenericBasis::new(
            2,
            vec![
                BasisFunction::Constant,
                BasisFunction::Monomial { exponents: vec![1, 2] },
                BasisFunction::Parity { subset: FeatureSubset(3) },
            ],
            Some(FeatureMoments::uniform(2)),
        )
        .unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(serde_json::from_str::<GenericBasis>(&s).unwrap(), b);
    }
}
