//! Sign predictors from low-degree Fourier estimates, polynomial least squares and generic bases.

mod basis;
mod lstsq;
mod polynomial;
mod threshold;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use basis::{fit_basis_coefficients, BasisFunction, BasisSet, GenericBasis, MAX_BASIS_FUNCTIONS};
pub use lstsq::{min_norm_weighted, RELATIVE_CUTOFF};
pub use polynomial::{monomial_count, MonomialPolynomial, MonomialTerm, MAX_BASIS};
pub use threshold::{select_threshold, select_threshold_with_errors, threshold_errors};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::estimation::{
    empirical_coefficients, empirical_moments, level, level_table, split_for_moments, ROW_CHUNK,
};
use crate::fourier::{FeatureMoments, FourierExpansion};

/// `+1` for `v >= 0`, `-1` otherwise.
#[inline]
pub fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PredictorBody {
    Fourier {
        expansion: FourierExpansion,
        moments: FeatureMoments,
    },
    Monomial {
        polynomial: MonomialPolynomial,
    },
    Basis {
        basis: GenericBasis,
        coefficients: Vec<f64>,
    },
}

impl PredictorBody {
    pub fn dim(&self) -> usize {
        match self {
            PredictorBody::Fourier { moments, .. } => moments.dim(),
            PredictorBody::Monomial { polynomial } => polynomial.dim(),
            PredictorBody::Basis { basis, .. } => basis.dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            PredictorBody::Fourier { expansion, moments } => expansion.eval(moments, x),
            PredictorBody::Monomial { polynomial } => polynomial.eval(x),
            PredictorBody::Basis {
                basis,
                coefficients,
            } => {
                let mut buf = vec![0.0; basis.len()];
                basis.eval_row(x, &mut buf);
                buf.iter().zip(coefficients).map(|(e, c)| e * c).sum()
            }
        }
    }
}

/// `x -> sign(body(x) - theta)` with `sign(0) = +1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignPredictor {
    #[serde(flatten)]
    pub body: PredictorBody,
    pub theta: f64,
}

impl SignPredictor {
    pub fn new(body: PredictorBody, theta: f64) -> Self {
        SignPredictor { body, theta }
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: d,
            });
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        self.check_dim(x.len())?;
        Ok(sign(self.body.eval(x) - self.theta))
    }

    /// Body values at every row, in row order.
    pub fn body_values(&self, data: &LabeledDataset) -> Result<Vec<f64>> {
        self.check_dim(data.d())?;
        let d = data.d();
        let values = match &self.body {
            PredictorBody::Fourier { expansion, moments } => {
                let levels = level_table(moments);
                data.features()
                    .par_chunks(ROW_CHUNK * d)
                    .flat_map_iter(|rows| {
                        let mut z = vec![0.0; d];
                        rows.chunks_exact(d)
                            .map(|row| {
                                for (j, zj) in z.iter_mut().enumerate() {
                                    *zj = level(&levels, j, row[j]);
                                }
                                expansion.eval_standardized(&z)
                            })
                            .collect::<Vec<_>>()
                    })
                    .collect()
            }
            body => data
                .features()
                .par_chunks(d)
                .map(|row| {
                    let x: Vec<f64> = row.iter().map(|&v| v as f64).collect();
                    body.eval(&x)
                })
                .collect(),
        };
        Ok(values)
    }

    pub fn predictions(&self, data: &LabeledDataset) -> Result<Vec<i8>> {
        Ok(self
            .body_values(data)?
            .into_iter()
            .map(|v| sign(v - self.theta))
            .collect())
    }
}

pub fn predict(model: &SignPredictor, x: &[f64]) -> Result<i8> {
    model.predict(x)
}

/// Fraction of rows whose prediction differs from the label.
pub fn misclassification(model: &SignPredictor, data: &LabeledDataset) -> Result<f64> {
    let preds = model.predictions(data)?;
    let wrong = preds
        .iter()
        .zip(data.labels())
        .filter(|(p, y)| p != y)
        .count();
    Ok(wrong as f64 / data.n() as f64)
}

/// `(1/n) sum_i (y_i - v_i)^2`.
pub fn empirical_square_loss(values: &[f64], labels: &[i8]) -> f64 {
    let n = labels.len() as f64;
    values
        .iter()
        .zip(labels)
        .map(|(v, &y)| (y as f64 - v).powi(2))
        .sum::<f64>()
        / n
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FourierOptions {
    /// Choose the threshold by empirical error instead of fixing it at 0.
    #[serde(default)]
    pub refit_threshold: bool,
    /// Estimate moments on this leading fraction of rows and coefficients on the remainder.
    #[serde(default)]
    pub moment_fraction: Option<f64>,
}

/// Low-degree estimate `sum_{|S| <= k} a_S psi_S` with empirical moments, thresholded at 0.
pub fn fit_fourier(data: &LabeledDataset, k: usize) -> Result<SignPredictor> {
    fit_fourier_with(data, k, &FourierOptions::default())
}

pub fn fit_fourier_with(
    data: &LabeledDataset,
    k: usize,
    opts: &FourierOptions,
) -> Result<SignPredictor> {
    let (moments, coef_rows) = match opts.moment_fraction {
        None => (empirical_moments(data)?, None),
        Some(f) => {
            let (m, rest) = split_for_moments(data, f)?;
            (m, Some(rest))
        }
    };
    let rows = coef_rows.as_ref().unwrap_or(data);
    let expansion = empirical_coefficients(rows, &moments, k)?;
    let mut model = SignPredictor::new(PredictorBody::Fourier { expansion, moments }, 0.0);
    if opts.refit_threshold {
        let values = model.body_values(data)?;
        model.theta = select_threshold(&values, data.labels());
    }
    Ok(model)
}

/// Least-squares polynomial of degree `<= k` in the raw coordinates, then the error-minimizing
/// threshold in `[-1, 1]`.
pub fn fit_l2_polyreg(data: &LabeledDataset, k: usize) -> Result<SignPredictor> {
    let polynomial = fit_l2_polynomial(data, k)?;
    let model = SignPredictor::new(PredictorBody::Monomial { polynomial }, 0.0);
    let values = model.body_values(data)?;
    let theta = select_threshold(&values, data.labels());
    Ok(SignPredictor { theta, ..model })
}

/// The regression step alone.
pub fn fit_l2_polynomial(data: &LabeledDataset, k: usize) -> Result<MonomialPolynomial> {
    let d = data.d();
    let basis = polynomial::MonomialBasis::new(d, k)?;
    let dense = DenseMonomials(&basis, d);
    let coefs = fit_basis_coefficients(data, &dense)?;
    Ok(MonomialPolynomial::from_basis(d, k, &basis, &coefs))
}

struct DenseMonomials<'a>(&'a polynomial::MonomialBasis, usize);

impl BasisSet for DenseMonomials<'_> {
    fn dim(&self) -> usize {
        self.1
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn eval_row(&self, x: &[f64], out: &mut [f64]) {
        self.0.eval_row(x, out)
    }
}

/// Least squares over `basis`, predicting `sign(h)` with threshold 0.
pub fn fit_generic_basis(data: &LabeledDataset, basis: GenericBasis) -> Result<SignPredictor> {
    let coefficients = fit_basis_coefficients(data, &basis)?;
    Ok(SignPredictor::new(
        PredictorBody::Basis {
            basis,
            coefficients,
        },
        0.0,
    ))
}

/// `U(x) = x^3 + 1.5 x^2 + 1.25 x`, which turns a 2-norm estimation error into slack on the
/// misclassification probability.
pub fn bound_u(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!("U argument {x}")));
    }
    Ok(x * x * x + 1.5 * x * x + 1.25 * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subset::FeatureSubset;

    fn full_cube(d: usize, label: impl Fn(&[i8]) -> i8) -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for idx in 0..1usize << d {
            let row: Vec<i8> = (0..d).map(|j| if idx >> j & 1 == 1 { 1 } else { -1 }).collect();
            labels.push(label(&row));
            rows.push(row);
        }
        LabeledDataset::from_rows(d, rows, labels).unwrap()
    }

    fn maj3(r: &[i8]) -> i8 {
        sign((r[0] + r[1] + r[2]) as f64)
    }

    #[test]
    fn u_values() {
        assert_eq!(bound_u(0.0).unwrap(), 0.0);
        assert_eq!(bound_u(1.0).unwrap(), 3.75);
        assert!(bound_u(-0.1).is_err());
        assert!(bound_u(f64::NAN).is_err());
    }

    #[test]
    fn sign_convention() {
        assert_eq!(sign(0.0), 1);
        assert_eq!(sign(-0.0), 1);
        assert_eq!(sign(-1e-300), -1);
    }

    #[test]
    fn constant_body_predicts_plus() {
        let e = FourierExpansion::from_terms(2, [(FeatureSubset::EMPTY, 0.5)]).unwrap();
        let m = SignPredictor::new(
            PredictorBody::Fourier {
                expansion: e,
                moments: FeatureMoments::uniform(2),
            },
            0.0,
        );
        assert_eq!(m.predict(&[-1.0, -1.0]).unwrap(), 1);
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn fourier_zero_degree_is_majority_label() {
        let data = full_cube(3, |r| if r[0] > 0 && r[1] > 0 { 1 } else { -1 });
        let m = fit_fourier(&data, 0).unwrap();
        assert!(m.predictions(&data).unwrap().iter().all(|&p| p == -1));
    }

    #[test]
    fn polyreg_interpolates_maj3() {
        let data = full_cube(3, maj3);
        let m = fit_l2_polyreg(&data, 3).unwrap();
        assert_eq!(misclassification(&m, &data).unwrap(), 0.0);
        let PredictorBody::Monomial { polynomial } = &m.body else { unreachable!() };
        let e = polynomial.to_parity_expansion(&FeatureMoments::uniform(3)).unwrap();
        for (s, c) in e.iter() {
            let want = match s.len() {
                1 => 0.5,
                3 => -0.5,
                _ => 0.0,
            };
            assert!((c - want).abs() < 1e-9, "{s}: {c}");
        }
    }

    #[test]
    fn polyreg_constant_labels() {
        let data = full_cube(2, |_| 1);
        let m = fit_l2_polyreg(&data, 1).unwrap();
        let values = m.body_values(&data).unwrap();
        assert!(values.iter().all(|v| (v - 1.0).abs() < 1e-9));
        assert_eq!(misclassification(&m, &data).unwrap(), 0.0);
        assert!((-1.0..=1.0).contains(&m.theta));
    }

    #[test]
    fn basis_fits_agree_with_polyreg_and_coefficients() {
        let data = full_cube(4, |r| sign((2 * r[0] + r[1] - r[2] + r[3]) as f64 - 0.5));
        let poly = fit_l2_polynomial(&data, 2).unwrap();
        let generic = fit_generic_basis(&data, GenericBasis::monomials(4, 2).unwrap()).unwrap();
        let PredictorBody::Basis { coefficients, .. } = &generic.body else { unreachable!() };
        for (t, c) in poly.terms().iter().zip(coefficients) {
            assert!((t.coef - c).abs() < 1e-9);
        }
        let moments = FeatureMoments::uniform(4);
        let parities = fit_generic_basis(&data, GenericBasis::parities(moments.clone(), 2).unwrap()).unwrap();
        let exact = empirical_coefficients(&data, &moments, 2).unwrap();
        let PredictorBody::Basis { coefficients, .. } = &parities.body else { unreachable!() };
        for ((_, a), c) in exact.iter().zip(coefficients) {
            assert!((a - c).abs() < 1e-9);
        }
    }

    #[test]
    fn refit_threshold_flag() {
        let data = full_cube(3, |r| if r[0] > 0 || r[1] > 0 { 1 } else { -1 });
        let plain = fit_fourier(&data, 0).unwrap();
        assert_eq!(plain.theta, 0.0);
        let opts = FourierOptions {
            refit_threshold: true,
            ..Default::default()
        };
        let refit = fit_fourier_with(&data, 1, &opts).unwrap();
        assert!(misclassification(&refit, &data).unwrap() <= misclassification(&fit_fourier(&data, 1).unwrap(), &data).unwrap());
    }

    #[test]
    fn moment_split_flag() {
        let data = full_cube(3, maj3);
        let doubled = data.subset_rows(&(0..16).map(|i| i % 8).collect::<Vec<_>>());
        let opts = FourierOptions {
            moment_fraction: Some(0.5),
            ..Default::default()
        };
        let m = fit_fourier_with(&doubled, 3, &opts).unwrap();
        assert_eq!(misclassification(&m, &data).unwrap(), 0.0);
    }

    #[test]
    fn predictor_json_kinds() {
        let data = full_cube(2, |r| r[0]);
        for (model, kind) in [
            (fit_fourier(&data, 1).unwrap(), "fourier"),
            (fit_l2_polyreg(&data, 1).unwrap(), "monomial"),
            (fit_generic_basis(&data, GenericBasis::monomials(2, 1).unwrap()).unwrap(), "basis"),
        ] {
            let v = serde_json::to_value(&model).unwrap();
            assert_eq!(v["kind"], kind);
            assert!(v.get("theta").is_some());
            let back: SignPredictor = serde_json::from_value(v).unwrap();
            assert_eq!(back, model);
        }
    }

    #[test]
    fn error_equals_inner_product_form() {
        let data = full_cube(3, |r| if r[2] > 0 { r[0] } else { -r[1] });
        let model = fit_fourier(&data, 1).unwrap();
        let preds = model.predictions(&data).unwrap();
        let n = data.n() as f64;
        let inner: f64 = preds.iter().zip(data.labels()).map(|(&g, &y)| (g * y) as f64).sum::<f64>() / n;
        let sq: f64 = preds.iter().zip(data.labels()).map(|(&g, &y)| ((y - g) as f64).powi(2)).sum::<f64>() / n;
        let err = misclassification(&model, &data).unwrap();
        assert!((err - (0.5 - 0.5 * inner)).abs() < 1e-12);
        assert!((err - 0.25 * sq).abs() < 1e-12);
    }
}
