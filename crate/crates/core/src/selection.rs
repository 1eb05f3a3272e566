//! Ranking feature subsets by estimated projection norms and predicting with the best one.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::estimation::{
    coefficients_for, empirical_moments, level, level_table, loo_projection_values,
    projection_coefficients, projection_values, MAX_PROJECTION_WIDTH,
};
use crate::fourier::{FeatureMoments, FourierExpansion};
use crate::learners::{PredictorBody, SignPredictor};
use crate::subset::{binomial, enumerate_subsets, subsets_of_size, FeatureSubset};

/// Largest number of candidate subsets an exhaustive search may score.
pub const MAX_EXHAUSTIVE: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMethod {
    /// Mean absolute leave-one-out projection value, estimating `||f^J||_1`.
    Score1,
    /// Sum of squared empirical coefficients over subsets of `J`, estimating `||f^J||_2^2`.
    Score2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    Exhaustive,
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectOptions {
    pub method: ScoreMethod,
    pub search: SearchMethod,
    /// Use the in-sample mean `|f^J(x_i)|` instead of the leave-one-out form for score 1.
    #[serde(default)]
    pub naive_score1: bool,
    /// Keep every evaluated score in the report.
    #[serde(default)]
    pub keep_scores: bool,
}

impl SelectOptions {
    pub fn new(method: ScoreMethod, search: SearchMethod) -> Self {
        SelectOptions {
            method,
            search,
            naive_score1: false,
            keep_scores: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredSubset {
    pub subset: FeatureSubset,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub method: ScoreMethod,
    pub search: SearchMethod,
    pub k: usize,
    pub chosen: FeatureSubset,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub all_scores: Option<Vec<ScoredSubset>>,
    pub predictor: SignPredictor,
}

impl SelectionReport {
    /// Writes `subset,score` rows in evaluation order.
    pub fn write_scores_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["subset", "score"])?;
        for s in self.all_scores.iter().flatten() {
            w.write_record([s.subset.to_string(), format!("{}", s.score)])?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            source: e,
        })?;
        Ok(())
    }
}

/// `(1/n) sum_i |f_(i)^J(x_i)|` with the leave-one-out projection values.
pub fn score1(data: &LabeledDataset, moments: &FeatureMoments, j: FeatureSubset) -> Result<f64> {
    let loo = loo_projection_values(data, moments, j)?;
    Ok(mean_abs(&loo))
}

/// `(1/n) sum_i |f^J(x_i)|` with the full-sample projection.
pub fn score1_naive(data: &LabeledDataset, moments: &FeatureMoments, j: FeatureSubset) -> Result<f64> {
    let coefs = projection_coefficients(data, moments, j)?;
    Ok(mean_abs(&projection_values(data, moments, j, &coefs).full))
}

/// `sum_{S in J} a_S^2`.
pub fn score2(data: &LabeledDataset, moments: &FeatureMoments, j: FeatureSubset) -> Result<f64> {
    Ok(projection_coefficients(data, moments, j)?.norm2_sq())
}

fn mean_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64
}

/// Shared state for scoring many candidates against one dataset.
struct Scorer<'a> {
    data: &'a LabeledDataset,
    levels: Vec<(f64, f64)>,
    coefs: HashMap<FeatureSubset, f64>,
    opts: SelectOptions,
}

impl<'a> Scorer<'a> {
    fn new(data: &'a LabeledDataset, moments: &FeatureMoments, k: usize, opts: SelectOptions) -> Result<Self> {
        let subsets = enumerate_subsets(data.d(), k)?;
        let values = coefficients_for(data, moments, &subsets)?;
        Ok(Scorer {
            data,
            levels: level_table(moments),
            coefs: subsets.into_iter().zip(values).collect(),
            opts,
        })
    }

    fn coef(&self, s: FeatureSubset) -> f64 {
        self.coefs.get(&s).copied().unwrap_or(0.0)
    }

    fn score(&self, j: FeatureSubset) -> f64 {
        match self.opts.method {
            ScoreMethod::Score2 => j.submasks().map(|s| self.coef(s).powi(2)).sum(),
            ScoreMethod::Score1 => self.score1(j),
        }
    }

    /// Single-threaded; candidates are scored in parallel instead.
    fn score1(&self, j: FeatureSubset) -> f64 {
        let feats = j.indices();
        let a: Vec<f64> = j.submasks().map(|s| self.coef(s)).collect();
        let n = self.data.n() as f64;
        let scale = n / (n - 1.0);
        let mut psi = vec![0.0; a.len()];
        let mut total = 0.0;
        for (row, &y) in self.data.rows().zip(self.data.labels()) {
            psi[0] = 1.0;
            for (bit, &f) in feats.iter().enumerate() {
                let z = level(&self.levels, f, row[f]);
                let half = 1 << bit;
                for t in 0..half {
                    psi[half + t] = psi[t] * z;
                }
            }
            let mut full = 0.0;
            let mut sq = 0.0;
            for (c, p) in a.iter().zip(&psi) {
                full += c * p;
                sq += p * p;
            }
            total += if self.opts.naive_score1 {
                full.abs()
            } else {
                (scale * (full - y as f64 * sq / n)).abs()
            };
        }
        total / n
    }

    /// Scores in candidate order, then the first maximum.
    fn best(&self, candidates: &[FeatureSubset]) -> (Vec<f64>, usize) {
        let scores: Vec<f64> = candidates.par_iter().map(|&j| self.score(j)).collect();
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] || (s == scores[best] && candidates[i] < candidates[best]) {
                best = i;
            }
        }
        (scores, best)
    }
}

pub fn select(
    data: &LabeledDataset,
    k: usize,
    method: ScoreMethod,
    search: SearchMethod,
) -> Result<SelectionReport> {
    select_with(data, k, &SelectOptions::new(method, search))
}

pub fn select_with(data: &LabeledDataset, k: usize, opts: &SelectOptions) -> Result<SelectionReport> {
    let d = data.d();
    if k > d {
        return Err(Error::invalid(format!("k = {k} exceeds d = {d}")));
    }
    if k > MAX_PROJECTION_WIDTH {
        return Err(Error::invalid(format!("k = {k} exceeds {MAX_PROJECTION_WIDTH}")));
    }
    if opts.method == ScoreMethod::Score1 && data.n() < 2 {
        return Err(Error::invalid("score 1 needs at least 2 rows"));
    }
    if opts.search == SearchMethod::Exhaustive {
        let evaluations = binomial(d, k);
        if evaluations > MAX_EXHAUSTIVE {
            return Err(Error::BudgetExceeded {
                evaluations,
                max: MAX_EXHAUSTIVE,
            });
        }
    }
    let moments = empirical_moments(data)?;
    let scorer = Scorer::new(data, &moments, k, *opts)?;
    let mut log = Vec::new();

    let (chosen, score) = match opts.search {
        SearchMethod::Exhaustive => {
            let candidates = subsets_of_size(d, k)?;
            let (scores, best) = scorer.best(&candidates);
            let pick = (candidates[best], scores[best]);
            log.extend(candidates.into_iter().zip(scores));
            pick
        }
        SearchMethod::Greedy => {
            let mut current = FeatureSubset::EMPTY;
            let mut score = scorer.score(current);
            for _ in 0..k {
                let candidates: Vec<FeatureSubset> = (0..d)
                    .filter(|&j| !current.contains(j))
                    .map(|j| current.with(j))
                    .collect();
                let (scores, best) = scorer.best(&candidates);
                current = candidates[best];
                score = scores[best];
                log.extend(candidates.into_iter().zip(scores));
            }
            (current, score)
        }
    };

    let expansion = FourierExpansion::from_terms(
        d,
        chosen.submasks().map(|s| (s, scorer.coef(s))),
    )?;
    let predictor = SignPredictor::new(PredictorBody::Fourier { expansion, moments }, 0.0);
    Ok(SelectionReport {
        method: opts.method,
        search: opts.search,
        k,
        chosen,
        score,
        all_scores: opts.keep_scores.then(|| {
            log.into_iter()
                .map(|(subset, score)| ScoredSubset { subset, score })
                .collect()
        }),
        predictor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::misclassification;

    fn cube(d: usize, label: impl Fn(&[i8]) -> i8) -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for idx in 0..1usize << d {
            let row: Vec<i8> = (0..d).map(|j| if idx >> j & 1 == 1 { 1 } else { -1 }).collect();
            labels.push(label(&row));
            rows.push(row);
        }
        LabeledDataset::from_rows(d, rows, labels).unwrap()
    }

    #[test]
    fn constant_labels_score_one() {
        let data = cube(3, |_| 1);
        let m = FeatureMoments::uniform(3);
        assert!((score1(&data, &m, FeatureSubset::EMPTY).unwrap() - 1.0).abs() < 1e-12);
        assert!((score2(&data, &m, FeatureSubset::EMPTY).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dictator_score2() {
        let data = cube(3, |r| r[0]);
        let m = FeatureMoments::uniform(3);
        assert!((score2(&data, &m, FeatureSubset(1)).unwrap() - 1.0).abs() < 1e-12);
        assert!(score2(&data, &m, FeatureSubset(2)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn score2_monotone_and_parseval() {
        let data = cube(4, |r| if r[0] * r[1] > 0 || r[3] > 0 { 1 } else { -1 });
        let m = empirical_moments(&data).unwrap();
        let small = score2(&data, &m, FeatureSubset(0b0011)).unwrap();
        let big = score2(&data, &m, FeatureSubset(0b1011)).unwrap();
        assert!(small <= big);
        let proj = projection_coefficients(&data, &m, FeatureSubset(0b1011)).unwrap();
        assert_eq!(big, proj.norm2_sq());
    }

    #[test]
    fn exhaustive_finds_parity_pair_greedy_may_not() {
        let data = cube(6, |r| r[2] * r[4]);
        let ex = select(&data, 2, ScoreMethod::Score2, SearchMethod::Exhaustive).unwrap();
        assert_eq!(ex.chosen, FeatureSubset(0b10100));
        assert_eq!(misclassification(&ex.predictor, &data).unwrap(), 0.0);
        let ex1 = select(&data, 2, ScoreMethod::Score1, SearchMethod::Exhaustive).unwrap();
        assert_eq!(ex1.chosen, FeatureSubset(0b10100));
        let gr = select(&data, 2, ScoreMethod::Score2, SearchMethod::Greedy).unwrap();
        // All singleton scores tie at zero, so the first round picks feature 0.
        assert!(gr.chosen.contains(0));
    }

    #[test]
    fn full_budget_selects_everything() {
        let data = cube(3, |r| r[0] * r[1]);
        for method in [ScoreMethod::Score1, ScoreMethod::Score2] {
            for search in [SearchMethod::Exhaustive, SearchMethod::Greedy] {
                let r = select(&data, 3, method, search).unwrap();
                assert_eq!(r.chosen, FeatureSubset(0b111));
            }
        }
    }

    #[test]
    fn scorer_matches_standalone_scores() {
        let data = cube(5, |r| if r[0] + r[1] + r[3] > 0 { 1 } else { -1 });
        let m = empirical_moments(&data).unwrap();
        for naive in [false, true] {
            let opts = SelectOptions {
                naive_score1: naive,
                keep_scores: true,
                ..SelectOptions::new(ScoreMethod::Score1, SearchMethod::Exhaustive)
            };
            let r = select_with(&data, 3, &opts).unwrap();
            for s in r.all_scores.as_ref().unwrap() {
                let direct = if naive {
                    score1_naive(&data, &m, s.subset).unwrap()
                } else {
                    score1(&data, &m, s.subset).unwrap()
                };
                assert!((s.score - direct).abs() < 1e-12);
            }
            assert_eq!(r.chosen, FeatureSubset(0b1011));
        }
    }

    #[test]
    fn budget_and_csv() {
        let data = LabeledDataset::new(30, vec![1; 60], vec![1, -1]).unwrap();
        assert!(matches!(
            select(&data, 15, ScoreMethod::Score2, SearchMethod::Exhaustive),
            Err(Error::BudgetExceeded { .. })
        ));
        let data = cube(3, |r| r[1]);
        let opts = SelectOptions {
            keep_scores: true,
            ..SelectOptions::new(ScoreMethod::Score2, SearchMethod::Exhaustive)
        };
        let r = select_with(&data, 1, &opts).unwrap();
        let mut buf = Vec::new();
        r.write_scores_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("subset,score\n{0},"));
    }
}
