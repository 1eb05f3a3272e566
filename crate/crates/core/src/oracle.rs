//! Exact quantities by enumerating the cube: optimal junta error, brute-force junta ERM,
//! norm sandwich, and the exact error of any predictor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{
    check_enum_dim, compress, cube_point, exact_coefficients_dense, expected_abs, product_probs,
    FeatureMoments, FourierExpansion, ProductDistribution,
};
use crate::learners::{sign, PredictorBody, SignPredictor};
use crate::subset::{count_subsets, enumerate_subsets, FeatureSubset};

/// Upper limit on `(number of candidate subsets) * 2^d` for the enumeration routes.
pub const ORACLE_WORK_LIMIT: u128 = 20_000_000_000;

/// Largest `k` for junta ERM.
pub const MAX_ERM_K: usize = 4;

/// Largest `k` for which the literal scan over all `2^(2^k)` Boolean functions also runs.
pub const MAX_LITERAL_SCAN_K: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "label", rename_all = "lowercase")]
pub enum LabelModel {
    /// `Y = f(x)` with `f` tabulated over the cube.
    Deterministic { table: Vec<i8> },
    /// `Pr(Y = +1 | x) = eta[x]`.
    Channel { eta: Vec<f64> },
}

/// A product distribution on the cube together with a label model, for `d <= 22`.
/// Tables are indexed by point mask: bit `j` set means `x_j = +1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemRepr", into = "ProblemRepr")]
pub struct ExactProblem {
    dist: ProductDistribution,
    label: LabelModel,
}

#[derive(Serialize, Deserialize)]
struct ProblemRepr {
    biases: Vec<f64>,
    #[serde(flatten)]
    label: LabelModel,
}

impl From<ExactProblem> for ProblemRepr {
    fn from(p: ExactProblem) -> Self {
        ProblemRepr {
            biases: p.dist.biases().to_vec(),
            label: p.label,
        }
    }
}

impl TryFrom<ProblemRepr> for ExactProblem {
    type Error = Error;

    fn try_from(r: ProblemRepr) -> Result<Self> {
        ExactProblem::new(ProductDistribution::new(r.biases)?, r.label)
    }
}

impl ExactProblem {
    pub fn new(dist: ProductDistribution, label: LabelModel) -> Result<Self> {
        check_enum_dim(dist.dim())?;
        let size = 1usize << dist.dim();
        match &label {
            LabelModel::Deterministic { table } => {
                if table.len() != size {
                    return Err(Error::DimensionMismatch {
                        expected: size,
                        got: table.len(),
                    });
                }
                if let Some(i) = table.iter().position(|&v| v != 1 && v != -1) {
                    return Err(Error::invalid(format!("table[{i}] = {} is not ±1", table[i])));
                }
            }
            LabelModel::Channel { eta } => {
                if eta.len() != size {
                    return Err(Error::DimensionMismatch {
                        expected: size,
                        got: eta.len(),
                    });
                }
                if let Some(i) = eta.iter().position(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::domain(format!("eta[{i}] = {}", eta[i])));
                }
            }
        }
        Ok(ExactProblem { dist, label })
    }

    pub fn deterministic(dist: ProductDistribution, table: Vec<i8>) -> Result<Self> {
        ExactProblem::new(dist, LabelModel::Deterministic { table })
    }

    pub fn channel(dist: ProductDistribution, eta: Vec<f64>) -> Result<Self> {
        ExactProblem::new(dist, LabelModel::Channel { eta })
    }

    /// Uses the distribution's own label channel.
    pub fn from_distribution(dist: ProductDistribution) -> Result<Self> {
        let eta = dist
            .label_channel()
            .ok_or_else(|| Error::invalid("distribution carries no label channel"))?
            .to_vec();
        ExactProblem::channel(dist, eta)
    }

    pub fn dist(&self) -> &ProductDistribution {
        &self.dist
    }

    pub fn label(&self) -> &LabelModel {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dist.dim()
    }

    /// `E[Y | x]` at every point.
    pub fn label_mean(&self) -> Vec<f64> {
        match &self.label {
            LabelModel::Deterministic { table } => table.iter().map(|&v| v as f64).collect(),
            LabelModel::Channel { eta } => eta.iter().map(|e| 2.0 * e - 1.0).collect(),
        }
    }

    fn probs(&self) -> Vec<f64> {
        self.dist.point_probs().expect("dimension checked at construction")
    }
}

fn check_k(problem: &ExactProblem, k: usize) -> Result<()> {
    let d = problem.dim();
    if k > d {
        return Err(Error::invalid(format!("k = {k} exceeds d = {d}")));
    }
    let work = count_subsets(d, k) << d;
    if work > ORACLE_WORK_LIMIT {
        return Err(Error::BudgetExceeded {
            evaluations: work,
            max: ORACLE_WORK_LIMIT,
        });
    }
    Ok(())
}

/// Coefficients `E[Y psi_S(X)]` for all `S` contained in `j`.
pub fn exact_projection(problem: &ExactProblem, j: FeatureSubset) -> Result<FourierExpansion> {
    if j.span() > problem.dim() {
        return Err(Error::invalid(format!("subset {j} lies outside dimension {}", problem.dim())));
    }
    let dense = exact_coefficients_dense(&problem.dist, &problem.label_mean())?;
    FourierExpansion::from_terms(
        problem.dim(),
        j.submasks().map(|s| (s, dense[s.0 as usize])),
    )
}

/// Full expansion of `E[Y | x]`.
pub fn exact_label_expansion(problem: &ExactProblem) -> Result<FourierExpansion> {
    exact_projection(problem, FeatureSubset::full(problem.dim())?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoptResult {
    pub popt: f64,
    pub argmax_j: FeatureSubset,
    pub norm1: f64,
}

/// `1/2 - 1/2 max_{|J| <= k} ||Y^J||_1`, computed from exact coefficients.
pub fn exact_popt(problem: &ExactProblem, k: usize) -> Result<PoptResult> {
    check_k(problem, k)?;
    let dense = exact_coefficients_dense(&problem.dist, &problem.label_mean())?;
    let moments = problem.dist.moments();
    let candidates = enumerate_subsets(problem.dim(), k)?;
    let norms: Vec<f64> = candidates
        .par_iter()
        .map(|&j| {
            let proj = FourierExpansion::from_terms(
                problem.dim(),
                j.submasks().map(|s| (s, dense[s.0 as usize])),
            )?;
            subcube_abs(&problem.dist, &moments, &proj, j)
        })
        .collect::<Result<_>>()?;
    let best = argmax_first(&norms);
    Ok(PoptResult {
        popt: 0.5 - 0.5 * norms[best],
        argmax_j: candidates[best],
        norm1: norms[best],
    })
}

/// `E|e(X)|` where `e` is supported inside `j`, enumerating the sub-cube on `j`.
fn subcube_abs(
    dist: &ProductDistribution,
    moments: &FeatureMoments,
    e: &FourierExpansion,
    j: FeatureSubset,
) -> Result<f64> {
    let values = e.values_on_subcube(moments, j)?;
    let marg: Vec<f64> = j.indices().iter().map(|&i| dist.biases()[i]).collect();
    let probs = product_probs(&marg);
    Ok(probs.iter().zip(&values).map(|(p, v)| p * v.abs()).sum())
}

/// First index of the maximum.
fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// `Pr(x_J = b)` and `Pr(x_J = b) E[Y | x_J = b]` for every sub-cube point `b`.
fn conditional_tables(probs: &[f64], mean: &[f64], j: FeatureSubset) -> (Vec<f64>, Vec<f64>) {
    let feats = j.indices();
    let mut mass = vec![0.0; 1 << feats.len()];
    let mut bias = vec![0.0; 1 << feats.len()];
    for (idx, (&p, &m)) in probs.iter().zip(mean).enumerate() {
        let b = compress(idx as u32, &feats);
        mass[b] += p;
        bias[b] += p * m;
    }
    (mass, bias)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErmResult {
    pub error: f64,
    pub best_j: FeatureSubset,
    /// Values of the best junta on the sub-cube of `best_j`, indexed by compressed point mask.
    pub best_g: Vec<i8>,
    /// Minimum found by scanning every Boolean function on `2^|J|` points, when `k <= 3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub literal_scan_error: Option<f64>,
}

/// Minimum exact error over all juntas on at most `k` features, choosing each junta pointwise
/// as the sign of the conditional label bias.
pub fn erm_exhaustive(problem: &ExactProblem, k: usize) -> Result<ErmResult> {
    if k > MAX_ERM_K {
        let evaluations = if k >= 7 {
            u128::MAX
        } else {
            crate::subset::binomial(problem.dim(), k) << (1u32 << k)
        };
        return Err(Error::BudgetExceeded {
            evaluations,
            max: crate::subset::binomial(problem.dim(), MAX_ERM_K) << (1u32 << MAX_ERM_K),
        });
    }
    check_k(problem, k)?;
    let probs = problem.probs();
    let mean = problem.label_mean();
    let candidates = enumerate_subsets(problem.dim(), k)?;
    let per_j: Vec<(f64, Vec<i8>, Option<f64>)> = candidates
        .par_iter()
        .map(|&j| {
            let (mass, bias) = conditional_tables(&probs, &mean, j);
            // Error of g at cell b: Pr(x_J = b, Y != g(b)) = (mass - g * bias) / 2.
            let g: Vec<i8> = bias.iter().map(|&b| sign(b)).collect();
            let err: f64 = mass
                .iter()
                .zip(&bias)
                .zip(&g)
                .map(|((&m, &b), &s)| 0.5 * (m - s as f64 * b))
                .sum();
            let literal = (k <= MAX_LITERAL_SCAN_K).then(|| literal_scan(&mass, &bias));
            (err, g, literal)
        })
        .collect();
    let errors: Vec<f64> = per_j.iter().map(|r| -r.0).collect();
    let best = argmax_first(&errors);
    let literal_scan_error = if k <= MAX_LITERAL_SCAN_K {
        per_j
            .iter()
            .map(|r| r.2.expect("scan ran"))
            .min_by(f64::total_cmp)
    } else {
        None
    };
    let (error, best_g, _) = per_j[best].clone();
    Ok(ErmResult {
        error,
        best_j: candidates[best],
        best_g,
        literal_scan_error,
    })
}

/// Smallest error over every Boolean function of the sub-cube cells.
fn literal_scan(mass: &[f64], bias: &[f64]) -> f64 {
    let cells = mass.len();
    (0u64..1 << cells)
        .map(|g| {
            (0..cells)
                .map(|b| {
                    let s = if g >> b & 1 == 1 { 1.0 } else { -1.0 };
                    0.5 * (mass[b] - s * bias[b])
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub popt: f64,
    pub upper: f64,
}

/// `1/2 (1 - max ||Y^J||_2) <= Popt <= 1/2 (1 - max ||Y^J||_2^2)` over `|J| <= k`.
pub fn sandwich(problem: &ExactProblem, k: usize) -> Result<Sandwich> {
    let popt = exact_popt(problem, k)?.popt;
    let dense = exact_coefficients_dense(&problem.dist, &problem.label_mean())?;
    let max_sq = enumerate_subsets(problem.dim(), k)?
        .into_iter()
        .map(|j| j.submasks().map(|s| dense[s.0 as usize].powi(2)).sum::<f64>())
        .fold(0.0f64, f64::max);
    Ok(Sandwich {
        lower: 0.5 * (1.0 - max_sq.sqrt()),
        popt,
        upper: 0.5 * (1.0 - max_sq),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactError {
    /// `sum_x Pr(x) Pr(Y != g(x) | x)`.
    pub enumeration: f64,
    /// `1/2 - 1/2 <Y^J, g>` with `J` the features the predictor reads.
    pub inner_product: f64,
    /// `1/4 (||Y^J - g||^2 + 1 - ||Y^J||^2)`.
    pub norm_form: f64,
    pub support: FeatureSubset,
}

/// Features the predictor body can depend on.
pub fn predictor_support(model: &SignPredictor) -> FeatureSubset {
    let d = model.dim();
    match &model.body {
        PredictorBody::Fourier { expansion, .. } => expansion.support(),
        PredictorBody::Monomial { polynomial } => FeatureSubset(
            polynomial
                .terms()
                .iter()
                .filter(|t| t.coef != 0.0)
                .flat_map(|t| t.exponents.iter().enumerate().filter(|(_, &e)| e > 0).map(|(j, _)| j))
                .fold(0u32, |m, j| m | 1 << j),
        ),
        PredictorBody::Basis { .. } => FeatureSubset::full(d).expect("dimension within mask width"),
    }
}

/// Sign values of the predictor on the sub-cube of `support`.
fn predictor_on_subcube(model: &SignPredictor, support: FeatureSubset) -> Result<Vec<i8>> {
    if let PredictorBody::Fourier { expansion, moments } = &model.body {
        return Ok(expansion
            .values_on_subcube(moments, support)?
            .into_iter()
            .map(|v| sign(v - model.theta))
            .collect());
    }
    let feats = support.indices();
    let d = model.dim();
    Ok((0..1usize << feats.len())
        .into_par_iter()
        .map(|b| {
            // Features outside the support do not matter; fix them at -1.
            let mut x = vec![-1.0; d];
            for (i, &j) in feats.iter().enumerate() {
                if b >> i & 1 == 1 {
                    x[j] = 1.0;
                }
            }
            sign(model.body.eval(&x) - model.theta)
        })
        .collect())
}

/// Exact misclassification probability of `model`, by enumeration and by both coefficient forms.
pub fn exact_error(problem: &ExactProblem, model: &SignPredictor) -> Result<ExactError> {
    let d = problem.dim();
    if model.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: model.dim(),
        });
    }
    let support = predictor_support(model);
    let feats = support.indices();
    check_enum_dim(feats.len())?;
    let g = predictor_on_subcube(model, support)?;
    let probs = problem.probs();
    let mean = problem.label_mean();

    let enumeration: f64 = match &problem.label {
        LabelModel::Deterministic { table } => probs
            .iter()
            .zip(table)
            .enumerate()
            .filter(|(idx, (_, &f))| g[compress(*idx as u32, &feats)] != f)
            .fold(0.0, |acc, (_, (p, _))| acc + p),
        LabelModel::Channel { eta } => probs
            .iter()
            .zip(eta)
            .enumerate()
            .map(|(idx, (p, e))| {
                let wrong = if g[compress(idx as u32, &feats)] > 0 { 1.0 - e } else { *e };
                p * wrong
            })
            .sum(),
    };

    // Coefficients of Y^J come from the full cube; those of g from the sub-cube, where g lives.
    let y_proj = {
        let dense = exact_coefficients_dense(&problem.dist, &mean)?;
        support.submasks().map(|s| dense[s.0 as usize]).collect::<Vec<f64>>()
    };
    let marg: Vec<f64> = feats.iter().map(|&j| problem.dist.biases()[j]).collect();
    let sub_dist = ProductDistribution::new(marg)?;
    let g_coefs = exact_coefficients_dense(&sub_dist, &g.iter().map(|&v| v as f64).collect::<Vec<_>>())?;

    let inner: f64 = y_proj.iter().zip(&g_coefs).map(|(a, b)| a * b).sum();
    let diff_sq: f64 = y_proj.iter().zip(&g_coefs).map(|(a, b)| (a - b).powi(2)).sum();
    let y_sq: f64 = y_proj.iter().map(|a| a * a).sum();
    Ok(ExactError {
        enumeration,
        inner_product: 0.5 - 0.5 * inner,
        norm_form: 0.25 * (diff_sq + 1.0 - y_sq),
        support,
    })
}

/// `sign(Y^J)` as a predictor with the distribution's own moments.
pub fn projection_predictor(problem: &ExactProblem, j: FeatureSubset) -> Result<SignPredictor> {
    Ok(SignPredictor::new(
        PredictorBody::Fourier {
            expansion: exact_projection(problem, j)?,
            moments: problem.dist.moments(),
        },
        0.0,
    ))
}

/// `E|Y^J(X)|`.
pub fn exact_projection_norm1(problem: &ExactProblem, j: FeatureSubset) -> Result<f64> {
    expected_abs(&problem.dist, &problem.dist.moments(), &exact_projection(problem, j)?)
}

/// Point `idx` of the cube as a ±1 vector.
pub fn point(d: usize, idx: usize) -> Vec<f64> {
    cube_point(d, idx)
}
