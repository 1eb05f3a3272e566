//! Parities, coefficients, projections and norms under a product distribution on `{-1,+1}^d`.
//!
//! Points of the cube are indexed by a mask whose bit `j` is set exactly when `x_j = +1`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::{check_dim, FeatureSubset};

/// Largest dimension for operations that enumerate the whole cube.
pub const MAX_ENUM_DIM: usize = 22;

pub(crate) fn check_enum_dim(d: usize) -> Result<()> {
    if d > MAX_ENUM_DIM {
        Err(Error::DimensionTooLarge {
            d,
            max: MAX_ENUM_DIM,
        })
    } else {
        Ok(())
    }
}

/// Per-feature mean and standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMoments {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl FeatureMoments {
    pub fn new(means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        if means.len() != stds.len() {
            return Err(Error::DimensionMismatch {
                expected: means.len(),
                got: stds.len(),
            });
        }
        for (index, (&m, &s)) in means.iter().zip(&stds).enumerate() {
            if !(s > 0.0 && s.is_finite()) || !m.is_finite() {
                return Err(Error::DegenerateFeature { index, mean: m });
            }
        }
        Ok(FeatureMoments { means, stds })
    }

    /// Means `mu_j` of ±1 features, with `sigma_j = sqrt(1 - mu_j^2)`.
    pub fn from_means(means: Vec<f64>) -> Result<Self> {
        let stds = means.iter().map(|m| (1.0 - m * m).max(0.0).sqrt()).collect();
        FeatureMoments::new(means, stds)
    }

    pub fn from_biases(biases: &[f64]) -> Result<Self> {
        for (j, &p) in biases.iter().enumerate() {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::domain(format!("bias p_{j} = {p} (must lie in (0,1))")));
            }
        }
        FeatureMoments::from_means(biases.iter().map(|p| 2.0 * p - 1.0).collect())
    }

    pub fn uniform(d: usize) -> Self {
        FeatureMoments {
            means: vec![0.0; d],
            stds: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    /// Standardized value `(x - mu_j) / sigma_j`.
    #[inline]
    pub fn z(&self, j: usize, x: f64) -> f64 {
        (x - self.means[j]) / self.stds[j]
    }

    /// Standardized values of `x_j = -1` and `x_j = +1`.
    #[inline]
    pub fn levels(&self, j: usize) -> (f64, f64) {
        (self.z(j, -1.0), self.z(j, 1.0))
    }

    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(j, &v)| self.z(j, v)).collect()
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: d,
            });
        }
        Ok(())
    }
}

/// `prod_{j in S} (x_j - mu_j) / sigma_j`; the empty parity is 1.
pub fn parity_eval(moments: &FeatureMoments, s: FeatureSubset, x: &[f64]) -> f64 {
    s.indices()
        .into_iter()
        .map(|j| moments.z(j, x[j]))
        .product()
}

/// Independent ±1 features with `Pr(x_j = +1) = p_j`, optionally carrying a label channel
/// `eta(x) = Pr(Y = +1 | x)` tabulated over the cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductDistribution {
    biases: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label_channel: Option<Vec<f64>>,
}

impl ProductDistribution {
    pub fn new(biases: Vec<f64>) -> Result<Self> {
        check_dim(biases.len())?;
        FeatureMoments::from_biases(&biases)?;
        Ok(ProductDistribution {
            biases,
            label_channel: None,
        })
    }

    pub fn uniform(d: usize) -> Result<Self> {
        ProductDistribution::new(vec![0.5; d])
    }

    pub fn with_channel(mut self, eta: Vec<f64>) -> Result<Self> {
        check_enum_dim(self.dim())?;
        if eta.len() != 1 << self.dim() {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.dim(),
                got: eta.len(),
            });
        }
        if let Some((i, v)) = eta.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain(format!("channel value eta[{i}] = {v}")));
        }
        self.label_channel = Some(eta);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.biases.len()
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn label_channel(&self) -> Option<&[f64]> {
        self.label_channel.as_deref()
    }

    pub fn moments(&self) -> FeatureMoments {
        FeatureMoments::from_biases(&self.biases).expect("biases validated at construction")
    }

    /// Probability of every cube point, indexed by point mask.
    pub fn point_probs(&self) -> Result<Vec<f64>> {
        check_enum_dim(self.dim())?;
        Ok(product_probs(&self.biases))
    }

    /// The point with index `idx` as a ±1 vector.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        cube_point(self.dim(), idx)
    }
}

pub(crate) fn cube_point(d: usize, idx: usize) -> Vec<f64> {
    (0..d)
        .map(|j| if idx >> j & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

/// Point probabilities of independent ±1 coordinates with the given biases.
pub(crate) fn product_probs(biases: &[f64]) -> Vec<f64> {
    let mut probs = Vec::with_capacity(1 << biases.len());
    probs.push(1.0);
    for &p in biases {
        let len = probs.len();
        for i in 0..len {
            let base = probs[i];
            probs[i] = base * (1.0 - p);
            probs.push(base * p);
        }
    }
    probs
}

/// Sparse real expansion `sum_S c_S psi_S` over subsets of `[dim]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExpansionRepr", into = "ExpansionRepr")]
pub struct FourierExpansion {
    dim: usize,
    terms: BTreeMap<FeatureSubset, f64>,
    degree_cap: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    subset: FeatureSubset,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct ExpansionRepr {
    dim: usize,
    terms: Vec<TermRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    degree_cap: Option<usize>,
}

impl From<FourierExpansion> for ExpansionRepr {
    fn from(e: FourierExpansion) -> Self {
        ExpansionRepr {
            dim: e.dim,
            terms: e
                .terms
                .into_iter()
                .map(|(subset, coef)| TermRepr { subset, coef })
                .collect(),
            degree_cap: e.degree_cap,
        }
    }
}

impl TryFrom<ExpansionRepr> for FourierExpansion {
    type Error = Error;

    fn try_from(r: ExpansionRepr) -> Result<Self> {
        let mut e = FourierExpansion::new(r.dim)?;
        e.degree_cap = r.degree_cap;
        for t in r.terms {
            e.insert(t.subset, t.coef)?;
        }
        Ok(e)
    }
}

impl FourierExpansion {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(FourierExpansion {
            dim,
            terms: BTreeMap::new(),
            degree_cap: None,
        })
    }

    pub fn with_degree_cap(dim: usize, k: usize) -> Result<Self> {
        let mut e = FourierExpansion::new(dim)?;
        e.degree_cap = Some(k);
        Ok(e)
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (FeatureSubset, f64)>,
    {
        let mut e = FourierExpansion::new(dim)?;
        for (s, c) in terms {
            e.insert(s, c)?;
        }
        Ok(e)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree_cap(&self) -> Option<usize> {
        self.degree_cap
    }

    /// Sets or overwrites the coefficient of `s`.
    pub fn insert(&mut self, s: FeatureSubset, coef: f64) -> Result<()> {
        if s.span() > self.dim {
            return Err(Error::invalid(format!(
                "subset {s} lies outside dimension {}",
                self.dim
            )));
        }
        if let Some(k) = self.degree_cap {
            if s.len() > k {
                return Err(Error::invalid(format!(
                    "subset {s} exceeds degree cap {k}"
                )));
            }
        }
        self.terms.insert(s, coef);
        Ok(())
    }

    pub fn get(&self, s: FeatureSubset) -> f64 {
        self.terms.get(&s).copied().unwrap_or(0.0)
    }

    /// Terms in ascending mask order.
    pub fn iter(&self) -> impl Iterator<Item = (FeatureSubset, f64)> + '_ {
        self.terms.iter().map(|(s, c)| (*s, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Union of all stored subsets.
    pub fn support(&self) -> FeatureSubset {
        FeatureSubset(self.terms.keys().fold(0, |acc, s| acc | s.0))
    }

    /// Keeps the terms whose subset is contained in `j`.
    pub fn project(&self, j: FeatureSubset) -> FourierExpansion {
        FourierExpansion {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(s, _)| s.is_subset_of(j))
                .map(|(s, c)| (*s, *c))
                .collect(),
            degree_cap: self.degree_cap,
        }
    }

    /// Keeps the terms with at most `k` features.
    pub fn truncate_degree(&self, k: usize) -> FourierExpansion {
        FourierExpansion {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(s, _)| s.len() <= k)
                .map(|(s, c)| (*s, *c))
                .collect(),
            degree_cap: Some(self.degree_cap.map_or(k, |c| c.min(k))),
        }
    }

    pub fn eval(&self, moments: &FeatureMoments, x: &[f64]) -> f64 {
        let z = moments.standardize(x);
        self.eval_standardized(&z)
    }

    /// Evaluation given already standardized coordinates.
    pub fn eval_standardized(&self, z: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(s, c)| {
                let mut p = *c;
                let mut m = s.0;
                while m != 0 {
                    p *= z[m.trailing_zeros() as usize];
                    m &= m - 1;
                }
                p
            })
            .sum()
    }

    /// `sum_S c_S^2`, accumulated in ascending mask order.
    pub fn norm2_sq(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum()
    }

    /// `sum_S a_S b_S`.
    pub fn inner(&self, other: &FourierExpansion) -> f64 {
        self.terms
            .iter()
            .map(|(s, c)| c * other.get(*s))
            .sum()
    }

    /// Term-wise difference `self - other`; the result carries no degree cap.
    pub fn sub(&self, other: &FourierExpansion) -> FourierExpansion {
        let mut terms = self.terms.clone();
        for (s, c) in &other.terms {
            *terms.entry(*s).or_insert(0.0) -= c;
        }
        FourierExpansion {
            dim: self.dim.max(other.dim),
            terms,
            degree_cap: None,
        }
    }

    /// Values at every point of the sub-cube on `support`, indexed by the compressed point mask
    /// (bit `i` of the index is the `i`-th smallest feature of `support`).
    pub fn values_on_subcube(
        &self,
        moments: &FeatureMoments,
        support: FeatureSubset,
    ) -> Result<Vec<f64>> {
        if !self.support().is_subset_of(support) {
            return Err(Error::invalid(format!(
                "expansion support {} is not inside {support}",
                self.support()
            )));
        }
        let feats = support.indices();
        check_enum_dim(feats.len())?;
        let mut a = vec![0.0; 1 << feats.len()];
        for (s, c) in &self.terms {
            a[compress(s.0, &feats)] = *c;
        }
        // Inverse of the tensor-product transform, one coordinate at a time.
        for (bit, &j) in feats.iter().enumerate() {
            let (zlo, zhi) = moments.levels(j);
            let step = 1 << bit;
            for base in (0..a.len()).step_by(step << 1) {
                for i in base..base + step {
                    let (c0, c1) = (a[i], a[i + step]);
                    a[i] = c0 + c1 * zlo;
                    a[i + step] = c0 + c1 * zhi;
                }
            }
        }
        Ok(a)
    }
}

/// Maps the bits of `mask` at positions `feats` to consecutive low bits.
pub(crate) fn compress(mask: u32, feats: &[usize]) -> usize {
    feats
        .iter()
        .enumerate()
        .map(|(i, &j)| ((mask >> j & 1) as usize) << i)
        .sum()
}

fn check_table(dist: &ProductDistribution, table: &[f64]) -> Result<()> {
    check_enum_dim(dist.dim())?;
    if table.len() != 1 << dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: 1 << dist.dim(),
            got: table.len(),
        });
    }
    Ok(())
}

/// `E[f(X) psi_S(X)]` by direct summation over the cube.
pub fn exact_coefficient(dist: &ProductDistribution, table: &[f64], s: FeatureSubset) -> Result<f64> {
    check_table(dist, table)?;
    let moments = dist.moments();
    let probs = dist.point_probs()?;
    let feats = s.indices();
    if feats.iter().any(|&j| j >= dist.dim()) {
        return Err(Error::invalid(format!("subset {s} lies outside dimension {}", dist.dim())));
    }
    let levels: Vec<(f64, f64)> = feats.iter().map(|&j| moments.levels(j)).collect();
    let mut acc = 0.0;
    for (idx, (&p, &f)) in probs.iter().zip(table).enumerate() {
        let mut psi = 1.0;
        for (&j, &(lo, hi)) in feats.iter().zip(&levels) {
            psi *= if idx >> j & 1 == 1 { hi } else { lo };
        }
        acc += p * f * psi;
    }
    Ok(acc)
}

/// Every coefficient `E[f(X) psi_S(X)]`, `S` ranging over all `2^d` subsets, as a dense vector
/// indexed by mask. Runs in `O(d 2^d)` by transforming one coordinate at a time.
pub fn exact_coefficients_dense(dist: &ProductDistribution, table: &[f64]) -> Result<Vec<f64>> {
    check_table(dist, table)?;
    let moments = dist.moments();
    let probs = dist.point_probs()?;
    let mut a: Vec<f64> = probs.iter().zip(table).map(|(p, f)| p * f).collect();
    for j in 0..dist.dim() {
        let (zlo, zhi) = moments.levels(j);
        let step = 1 << j;
        for base in (0..a.len()).step_by(step << 1) {
            for i in base..base + step {
                let (lo, hi) = (a[i], a[i + step]);
                a[i] = lo + hi;
                a[i + step] = lo * zlo + hi * zhi;
            }
        }
    }
    Ok(a)
}

/// The full expansion of a tabulated function.
pub fn exact_expansion(dist: &ProductDistribution, table: &[f64]) -> Result<FourierExpansion> {
    let dense = exact_coefficients_dense(dist, table)?;
    FourierExpansion::from_terms(
        dist.dim(),
        dense
            .into_iter()
            .enumerate()
            .map(|(s, c)| (FeatureSubset(s as u32), c)),
    )
}

/// `E|e(X)|` under `dist`, with parities built from the distribution's own moments.
pub fn norm1_exact(dist: &ProductDistribution, expansion: &FourierExpansion) -> Result<f64> {
    check_enum_dim(dist.dim())?;
    expected_abs(dist, &dist.moments(), expansion)
}

/// `E|e(X)|` under `dist` for an expansion whose parities use `moments`.
pub fn expected_abs(
    dist: &ProductDistribution,
    moments: &FeatureMoments,
    expansion: &FourierExpansion,
) -> Result<f64> {
    let support = expansion.support();
    let feats = support.indices();
    if support.span() > dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            got: support.span(),
        });
    }
    let values = expansion.values_on_subcube(moments, support)?;
    let marg: Vec<f64> = feats.iter().map(|&j| dist.biases()[j]).collect();
    let probs = product_probs(&marg);
    Ok(probs.iter().zip(&values).map(|(p, v)| p * v.abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maj3() -> Vec<f64> {
        (0..8usize)
            .map(|i| if i.count_ones() >= 2 { 1.0 } else { -1.0 })
            .collect()
    }

    fn subset(ix: &[usize]) -> FeatureSubset {
        FeatureSubset::from_indices(ix.iter().copied()).unwrap()
    }

    #[test]
    fn parity_values() {
        let u = FeatureMoments::uniform(4);
        assert_eq!(parity_eval(&u, subset(&[0, 1]), &[1.0, -1.0, 1.0, 1.0]), -1.0);
        let m = FeatureMoments::from_biases(&[0.75]).unwrap();
        let v = parity_eval(&m, subset(&[0]), &[1.0]);
        assert!((v - 0.5 / 0.75f64.sqrt()).abs() < 1e-12);
        assert!((v - 0.57735).abs() < 1e-5);
        assert_eq!(parity_eval(&m, FeatureSubset::EMPTY, &[-1.0]), 1.0);
    }

    #[test]
    fn moments_reject_degenerate() {
        assert!(FeatureMoments::from_biases(&[0.5, 1.0]).is_err());
        assert!(matches!(
            FeatureMoments::from_means(vec![0.2, -1.0]),
            Err(Error::DegenerateFeature { index: 1, .. })
        ));
        let m = FeatureMoments::from_biases(&[0.3]).unwrap();
        assert!((m.means()[0] + 0.4).abs() < 1e-15);
        assert!((m.stds()[0].powi(2) - (1.0 - 0.16)).abs() < 1e-12);
    }

    #[test]
    fn dictator_and_maj3_coefficients() {
        let uni = ProductDistribution::uniform(3).unwrap();
        let dict: Vec<f64> = (0..8).map(|i| if i & 1 == 1 { 1.0 } else { -1.0 }).collect();
        for s in 0..8u32 {
            let c = exact_coefficient(&uni, &dict, FeatureSubset(s)).unwrap();
            assert!((c - if s == 1 { 1.0 } else { 0.0 }).abs() < 1e-15);
        }
        let f = maj3();
        assert!((exact_coefficient(&uni, &f, subset(&[0])).unwrap() - 0.5).abs() < 1e-15);
        assert!((exact_coefficient(&uni, &f, subset(&[0, 1, 2])).unwrap() + 0.5).abs() < 1e-15);
        let xor: Vec<f64> = (0..8usize)
            .map(|i| if (i & 1) ^ (i >> 1 & 1) == 0 { 1.0 } else { -1.0 })
            .collect();
        assert!(exact_coefficient(&uni, &xor, subset(&[0])).unwrap().abs() < 1e-15);
    }

    #[test]
    fn dense_transform_matches_direct_sums() {
        let dist = ProductDistribution::new(vec![0.2, 0.65, 0.4, 0.9]).unwrap();
        let table: Vec<f64> = (0..16).map(|i| ((i * 7 + 3) % 5) as f64 - 2.0).collect();
        let dense = exact_coefficients_dense(&dist, &table).unwrap();
        for s in 0..16u32 {
            let direct = exact_coefficient(&dist, &table, FeatureSubset(s)).unwrap();
            assert!((dense[s as usize] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_and_evaluation() {
        let uni = ProductDistribution::uniform(3).unwrap();
        let e = exact_expansion(&uni, &maj3()).unwrap();
        let p = e.project(subset(&[0]));
        assert_eq!(p.len(), 2);
        assert!(p.get(FeatureSubset::EMPTY).abs() < 1e-15);
        assert!((p.get(subset(&[0])) - 0.5).abs() < 1e-15);
        assert_eq!(e.project(FeatureSubset::full(3).unwrap()), e);
        assert_eq!(e.project(FeatureSubset::EMPTY).len(), 1);

        let m = FeatureMoments::uniform(3);
        assert!((e.eval(&m, &[1.0, 1.0, -1.0]) - 1.0).abs() < 1e-12);
        let dict = FourierExpansion::from_terms(3, [(subset(&[0]), 1.0)]).unwrap();
        assert_eq!(dict.eval(&m, &[-1.0, 1.0, 1.0]), -1.0);
        assert_eq!(FourierExpansion::new(3).unwrap().eval(&m, &[1.0; 3]), 0.0);
    }

    #[test]
    fn norms() {
        let uni = ProductDistribution::uniform(3).unwrap();
        let e = exact_expansion(&uni, &maj3()).unwrap();
        assert!((e.norm2_sq() - 1.0).abs() < 1e-12);
        let p = e.project(subset(&[0, 1]));
        assert!((norm1_exact(&uni, &p).unwrap() - 0.5).abs() < 1e-12);
        let zero = FourierExpansion::new(3).unwrap();
        assert_eq!(zero.norm2_sq(), 0.0);
        assert_eq!(norm1_exact(&uni, &zero).unwrap(), 0.0);
    }

    #[test]
    fn subcube_values_match_pointwise_eval() {
        let dist = ProductDistribution::new(vec![0.3, 0.8, 0.55]).unwrap();
        let m = dist.moments();
        let e = FourierExpansion::from_terms(
            3,
            [
                (FeatureSubset(0), 0.1),
                (subset(&[0]), -0.4),
                (subset(&[0, 2]), 0.7),
                (subset(&[2]), 0.2),
            ],
        )
        .unwrap();
        let full = FeatureSubset::full(3).unwrap();
        let vals = e.values_on_subcube(&m, full).unwrap();
        for (idx, v) in vals.iter().enumerate() {
            assert!((v - e.eval(&m, &cube_point(3, idx))).abs() < 1e-12);
        }
        let sup = e.values_on_subcube(&m, subset(&[0, 2])).unwrap();
        assert_eq!(sup.len(), 4);
        assert!((sup[0b11] - e.eval(&m, &[1.0, -1.0, 1.0])).abs() < 1e-12);
        assert!(e.values_on_subcube(&m, subset(&[0])).is_err());
    }

    #[test]
    fn json_shape() {
        let e = FourierExpansion::from_terms(4, [(subset(&[2, 0]), 0.25), (FeatureSubset(0), -1.0)])
            .unwrap();
        let v: serde_json::Value = serde_json::to_value(&e).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"dim": 4, "terms": [
                {"subset": [], "coef": -1.0},
                {"subset": [0, 2], "coef": 0.25}
            ]})
        );
        let back: FourierExpansion = serde_json::from_value(v).unwrap();
        assert_eq!(back, e);
        let bad = serde_json::json!({"dim": 2, "terms": [{"subset": [3], "coef": 1.0}]});
        assert!(serde_json::from_value::<FourierExpansion>(bad).is_err());
    }

    #[test]
    fn degree_cap_enforced() {
        let mut e = FourierExpansion::with_degree_cap(5, 1).unwrap();
        assert!(e.insert(subset(&[1]), 1.0).is_ok());
        assert!(e.insert(subset(&[1, 2]), 1.0).is_err());
    }

    #[test]
    fn point_probabilities_sum_to_one() {
        let dist = ProductDistribution::new(vec![0.1, 0.7, 0.35, 0.5, 0.93]).unwrap();
        let total: f64 = dist.point_probs().unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(ProductDistribution::uniform(23).unwrap().point_probs().is_err());
    }
}
