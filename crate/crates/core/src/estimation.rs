//! Empirical moments and coefficients, leave-one-out projections, and the concentration
//! formulas that size samples and bound coefficient error.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::fourier::{FeatureMoments, FourierExpansion};
use crate::subset::{binomial, enumerate_subsets, FeatureSubset};

/// Rows per work unit in parallel sums. Partial sums are combined in chunk order, so results do
/// not depend on the thread count.
pub(crate) const ROW_CHUNK: usize = 2048;

/// Largest `|J|` for which all `2^|J|` sub-parities are enumerated per row.
pub const MAX_PROJECTION_WIDTH: usize = 20;

/// `mu_j = mean of column j`, `sigma_j = sqrt(1 - mu_j^2)`.
pub fn empirical_moments(data: &LabeledDataset) -> Result<FeatureMoments> {
    if data.n() < 2 {
        return Err(Error::invalid(format!(
            "moment estimation needs at least 2 rows, got {}",
            data.n()
        )));
    }
    let n = data.n() as f64;
    let mut sums = vec![0i64; data.d()];
    for row in data.rows() {
        for (s, &v) in sums.iter_mut().zip(row) {
            *s += v as i64;
        }
    }
    let means: Vec<f64> = sums.iter().map(|&s| s as f64 / n).collect();
    if let Some(index) = means.iter().position(|m| m.abs() >= 1.0) {
        return Err(Error::DegenerateFeature {
            index,
            mean: means[index],
        });
    }
    FeatureMoments::from_means(means)
}

/// Moments from the first `ceil(fraction * n)` rows; coefficients are then estimated from the rest.
pub fn split_for_moments(
    data: &LabeledDataset,
    fraction: f64,
) -> Result<(FeatureMoments, LabeledDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::domain(format!("moment fraction {fraction}")));
    }
    let head = ((data.n() as f64) * fraction).ceil() as usize;
    if head < 2 || head >= data.n() {
        return Err(Error::EmptySplit {
            train: head,
            test: data.n().saturating_sub(head),
        });
    }
    let idx: Vec<usize> = (0..data.n()).collect();
    let moments = empirical_moments(&data.subset_rows(&idx[..head]))?;
    Ok((moments, data.subset_rows(&idx[head..])))
}

/// Standardized level table: `levels[j] = (z_j(-1), z_j(+1))`.
pub(crate) fn level_table(moments: &FeatureMoments) -> Vec<(f64, f64)> {
    (0..moments.dim()).map(|j| moments.levels(j)).collect()
}

#[inline]
pub(crate) fn level(levels: &[(f64, f64)], j: usize, v: i8) -> f64 {
    if v > 0 {
        levels[j].1
    } else {
        levels[j].0
    }
}

/// Evaluates many parities on one row, reusing `psi_{S minus max(S)}` whenever that subset
/// appears earlier in the list. For an ascending list of all `|S| <= k` every step is a single
/// multiplication.
pub(crate) struct ParityPlan {
    subsets: Vec<FeatureSubset>,
    steps: Vec<Step>,
}

enum Step {
    Empty,
    Extend { parent: usize, feature: usize },
    Direct,
}

impl ParityPlan {
    pub fn new(subsets: Vec<FeatureSubset>) -> Self {
        let mut first = HashMap::with_capacity(subsets.len());
        let steps = subsets
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                first.entry(s).or_insert(i);
                if s.is_empty() {
                    return Step::Empty;
                }
                let top = s.span() - 1;
                let parent = FeatureSubset(s.0 & !(1 << top));
                match first.get(&parent) {
                    Some(&parent) => Step::Extend {
                        parent,
                        feature: top,
                    },
                    None => Step::Direct,
                }
            })
            .collect();
        ParityPlan { subsets, steps }
    }

    pub fn eval_row(&self, levels: &[(f64, f64)], row: &[i8], out: &mut [f64]) {
        for (i, step) in self.steps.iter().enumerate() {
            out[i] = match *step {
                Step::Empty => 1.0,
                Step::Extend { parent, feature } => out[parent] * level(levels, feature, row[feature]),
                Step::Direct => {
                    let mut p = 1.0;
                    let mut m = self.subsets[i].0;
                    while m != 0 {
                        let j = m.trailing_zeros() as usize;
                        p *= level(levels, j, row[j]);
                        m &= m - 1;
                    }
                    p
                }
            };
        }
    }
}

/// `(1/n) sum_i y_i psi_S(x_i)` for each listed subset, in list order.
pub fn coefficients_for(
    data: &LabeledDataset,
    moments: &FeatureMoments,
    subsets: &[FeatureSubset],
) -> Result<Vec<f64>> {
    moments.check_dim(data.d())?;
    if let Some(s) = subsets.iter().find(|s| s.span() > data.d()) {
        return Err(Error::invalid(format!(
            "subset {s} lies outside dimension {}",
            data.d()
        )));
    }
    let plan = ParityPlan::new(subsets.to_vec());
    let levels = level_table(moments);
    let m = subsets.len();
    let partials: Vec<Vec<f64>> = data
        .features()
        .par_chunks(ROW_CHUNK * data.d())
        .zip(data.labels().par_chunks(ROW_CHUNK))
        .map(|(rows, labels)| {
            let mut acc = vec![0.0; m];
            let mut psi = vec![0.0; m];
            for (row, &y) in rows.chunks_exact(data.d()).zip(labels) {
                plan.eval_row(&levels, row, &mut psi);
                let y = y as f64;
                for (a, p) in acc.iter_mut().zip(&psi) {
                    *a += y * p;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; m];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    let n = data.n() as f64;
    Ok(total.into_iter().map(|t| t / n).collect())
}

/// Empirical coefficients `a_S` for every `|S| <= k`, with degree cap `k`.
pub fn empirical_coefficients(
    data: &LabeledDataset,
    moments: &FeatureMoments,
    k: usize,
) -> Result<FourierExpansion> {
    let subsets = enumerate_subsets(data.d(), k)?;
    let coefs = coefficients_for(data, moments, &subsets)?;
    let mut e = FourierExpansion::with_degree_cap(data.d(), k)?;
    for (s, c) in subsets.into_iter().zip(coefs) {
        e.insert(s, c)?;
    }
    Ok(e)
}

/// Empirical coefficients of every subset of `j`.
pub fn projection_coefficients(
    data: &LabeledDataset,
    moments: &FeatureMoments,
    j: FeatureSubset,
) -> Result<FourierExpansion> {
    check_width(j)?;
    let subsets: Vec<FeatureSubset> = j.submasks().collect();
    let coefs = coefficients_for(data, moments, &subsets)?;
    FourierExpansion::from_terms(data.d(), subsets.into_iter().zip(coefs))
}

fn check_width(j: FeatureSubset) -> Result<()> {
    if j.len() > MAX_PROJECTION_WIDTH {
        return Err(Error::invalid(format!(
            "|J| = {} exceeds {MAX_PROJECTION_WIDTH}",
            j.len()
        )));
    }
    Ok(())
}

/// Values of all sub-parities of `J` at one row, indexed by compressed mask.
fn subparities(feats: &[usize], levels: &[(f64, f64)], row: &[i8], out: &mut [f64]) {
    out[0] = 1.0;
    for (bit, &j) in feats.iter().enumerate() {
        let z = level(levels, j, row[j]);
        let half = 1 << bit;
        for t in 0..half {
            out[half + t] = out[t] * z;
        }
    }
}

/// Per-row values of the empirical projection onto `J`, in-sample and leave-one-out.
pub(crate) struct ProjectionValues {
    pub full: Vec<f64>,
    pub loo: Vec<f64>,
}

pub(crate) fn projection_values(
    data: &LabeledDataset,
    moments: &FeatureMoments,
    j: FeatureSubset,
    coefs: &FourierExpansion,
) -> ProjectionValues {
    let feats = j.indices();
    let levels = level_table(moments);
    // Coefficients in compressed order; `submasks` ascends, matching the compressed index.
    let a: Vec<f64> = j.submasks().map(|s| coefs.get(s)).collect();
    let n = data.n() as f64;
    let scale = n / (n - 1.0);
    let pairs: Vec<(f64, f64)> = data
        .features()
        .par_chunks(ROW_CHUNK * data.d())
        .zip(data.labels().par_chunks(ROW_CHUNK))
        .flat_map_iter(|(rows, labels)| {
            let mut psi = vec![0.0; a.len()];
            rows.chunks_exact(data.d())
                .zip(labels)
                .map(|(row, &y)| {
                    subparities(&feats, &levels, row, &mut psi);
                    let mut full = 0.0;
                    let mut sq = 0.0;
                    for (c, p) in a.iter().zip(&psi) {
                        full += c * p;
                        sq += p * p;
                    }
                    (full, scale * (full - y as f64 * sq / n))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let (full, loo) = pairs.into_iter().unzip();
    ProjectionValues { full, loo }
}

/// Entry `i` is the projection onto `J` estimated without sample `i`, evaluated at `x_i`:
/// `n/(n-1) * sum_{S in J} (a_S - y_i psi_S(x_i) / n) psi_S(x_i)`.
pub fn loo_projection_values(
    data: &LabeledDataset,
    moments: &FeatureMoments,
    j: FeatureSubset,
) -> Result<Vec<f64>> {
    if data.n() < 2 {
        return Err(Error::invalid("leave-one-out needs at least 2 rows"));
    }
    let coefs = projection_coefficients(data, moments, j)?;
    Ok(projection_values(data, moments, j, &coefs).loo)
}

fn check_bound_args(n: usize, d: usize, k: usize, delta: f64, c_k: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("sample count n = 0"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta = {delta}")));
    }
    if k == 0 || k > d {
        return Err(Error::domain(format!("degree k = {k} with d = {d} (need 1 <= k <= d)")));
    }
    if !(c_k >= 1.0 && c_k.is_finite()) {
        return Err(Error::domain(format!("c_k = {c_k}")));
    }
    Ok(())
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

/// `ln(2 d^k / ((k-1)! delta))`.
fn union_log(d: usize, k: usize, delta: f64) -> f64 {
    (2.0 * (d as f64).powi(k as i32) / (factorial(k - 1) * delta)).ln()
}

/// Per-coefficient deviation `eps = sqrt((2 c_k / n) ln(2 d^k / ((k-1)! delta)))`, holding for all
/// `|S| <= k` simultaneously with probability at least `1 - delta`.
pub fn coefficient_deviation_bound(n: usize, d: usize, k: usize, delta: f64, c_k: f64) -> Result<f64> {
    check_bound_args(n, d, k, delta, c_k)?;
    Ok((2.0 * c_k / n as f64 * union_log(d, k, delta)).sqrt())
}

/// Deviation of the whole low-degree part in 2-norm:
/// `sqrt(2 d^k c_k / ((k-1)! n) ln(2 d^k / ((k-1)! delta)))`.
pub fn two_norm_deviation_bound(n: usize, d: usize, k: usize, delta: f64, c_k: f64) -> Result<f64> {
    check_bound_args(n, d, k, delta, c_k)?;
    let dk = (d as f64).powi(k as i32);
    Ok((2.0 * dk * c_k / (factorial(k - 1) * n as f64) * union_log(d, k, delta)).sqrt())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {v} (must lie in (0,1))")))
    }
}

/// Samples needed for all empirical means to be within `eps0` with probability `1 - delta0`:
/// `ceil((2 / eps0^2) ln(2 d / delta0))`.
pub fn moment_sample_size(epsilon0: f64, delta0: f64, d: usize) -> Result<u64> {
    check_unit("epsilon0", epsilon0)?;
    check_unit("delta0", delta0)?;
    if d == 0 {
        return Err(Error::domain("dimension d = 0"));
    }
    let n0 = 2.0 / (epsilon0 * epsilon0) * (2.0 * d as f64 / delta0).ln();
    Ok(n0.ceil() as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationBudget {
    pub epsilon0: f64,
    pub delta0: f64,
    pub n0: u64,
}

impl ConcentrationBudget {
    pub fn new(epsilon0: f64, delta0: f64, d: usize) -> Result<Self> {
        Ok(ConcentrationBudget {
            epsilon0,
            delta0,
            n0: moment_sample_size(epsilon0, delta0, d)?,
        })
    }
}

/// Reported values of `c_k` saturate here.
pub const CK_CAP: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CkEstimate {
    pub value: f64,
    pub capped: bool,
}

/// `max_{|S| <= k} prod_{j in S} (1 + |mu_j|) / (1 - |mu_j|)`, i.e. the product of the `k` largest
/// factors (each factor is at least 1).
pub fn ck_estimate(moments: &FeatureMoments, k: usize) -> CkEstimate {
    let mut factors: Vec<f64> = moments
        .means()
        .iter()
        .map(|m| (1.0 + m.abs()) / (1.0 - m.abs()))
        .collect();
    factors.sort_by(|a, b| b.total_cmp(a));
    let value: f64 = factors.iter().take(k).product();
    if value.is_finite() && value <= CK_CAP {
        CkEstimate {
            value,
            capped: false,
        }
    } else {
        CkEstimate {
            value: CK_CAP,
            capped: true,
        }
    }
}

/// Azuma-based size for uniform score deviation `eps'` over all `|J| = k`:
/// `32 2^{2k} c_k^2 / eps'^2 * ln(C(d,k) / (2 delta))`. The requirement is `n - 1 >=` this value.
pub fn azuma_score_sample_size(epsilon: f64, delta: f64, d: usize, k: usize, c_k: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon = {epsilon}")));
    }
    check_unit("delta", delta)?;
    if k > d {
        return Err(Error::domain(format!("k = {k} exceeds d = {d}")));
    }
    if !(c_k >= 1.0 && c_k.is_finite()) {
        return Err(Error::domain(format!("c_k = {c_k}")));
    }
    let pow = 4f64.powi(k as i32);
    let ln = (binomial(d, k) as f64 / (2.0 * delta)).ln();
    Ok(32.0 * pow * c_k * c_k / (epsilon * epsilon) * ln)
}

/// Smallest `n` with `sqrt((2 c_k / n) ln(2 d^k / ((k-1)! delta))) <= epsilon`.
pub fn coefficient_sample_size(epsilon: f64, d: usize, k: usize, delta: f64, c_k: f64) -> Result<u64> {
    check_bound_args(1, d, k, delta, c_k)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon = {epsilon}")));
    }
    Ok((2.0 * c_k * union_log(d, k, delta) / (epsilon * epsilon)).ceil().max(1.0) as u64)
}
