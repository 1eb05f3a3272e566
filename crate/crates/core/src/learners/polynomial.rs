//! Polynomials in the raw coordinates, `sum_alpha c_alpha x^alpha` with `|alpha| <= k`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{FeatureMoments, FourierExpansion};
use crate::subset::{binomial, FeatureSubset};

/// Largest admissible monomial basis.
pub const MAX_BASIS: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialTerm {
    pub exponents: Vec<u32>,
    pub coef: f64,
}

impl MonomialTerm {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialPolynomial {
    dim: usize,
    degree: usize,
    terms: Vec<MonomialTerm>,
}

/// Number of monomials of total degree at most `k` in `d` variables, `C(d + k, k)`.
pub fn monomial_count(d: usize, k: usize) -> u128 {
    binomial(d + k, k)
}

/// All monomials of degree `<= k` as sorted feature multisets, graded then lexicographic.
/// `parents[t]` is the index of the monomial with the last factor removed, `None` for the constant.
pub(crate) struct MonomialBasis {
    pub multisets: Vec<Vec<usize>>,
    pub parents: Vec<Option<usize>>,
}

impl MonomialBasis {
    pub fn new(d: usize, k: usize) -> Result<Self> {
        let size = monomial_count(d, k);
        if size > MAX_BASIS {
            return Err(Error::BasisTooLarge {
                size,
                max: MAX_BASIS,
            });
        }
        let mut multisets: Vec<Vec<usize>> = vec![Vec::new()];
        let mut parents = vec![None];
        let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
        index.insert(Vec::new(), 0);
        let mut prev_start = 0;
        for _ in 1..=k {
            let prev_end = multisets.len();
            for p in prev_start..prev_end {
                let last = multisets[p].last().copied().unwrap_or(0);
                for j in last..d {
                    let mut m = multisets[p].clone();
                    m.push(j);
                    index.insert(m.clone(), multisets.len());
                    multisets.push(m);
                    parents.push(Some(p));
                }
            }
            prev_start = prev_end;
        }
        Ok(MonomialBasis { multisets, parents })
    }

    pub fn len(&self) -> usize {
        self.multisets.len()
    }

    /// All monomial values at `x`.
    pub fn eval_row(&self, x: &[f64], out: &mut [f64]) {
        for t in 0..self.len() {
            out[t] = match self.parents[t] {
                None => 1.0,
                Some(p) => out[p] * x[*self.multisets[t].last().unwrap()],
            };
        }
    }

    pub fn exponents(&self, t: usize, d: usize) -> Vec<u32> {
        let mut e = vec![0u32; d];
        for &j in &self.multisets[t] {
            e[j] += 1;
        }
        e
    }
}

impl MonomialPolynomial {
    pub fn new(dim: usize, degree: usize, terms: Vec<MonomialTerm>) -> Result<Self> {
        for t in &terms {
            if t.exponents.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: t.exponents.len(),
                });
            }
            if t.degree() as usize > degree {
                return Err(Error::invalid(format!(
                    "monomial {:?} exceeds degree {degree}",
                    t.exponents
                )));
            }
        }
        Ok(MonomialPolynomial { dim, degree, terms })
    }

    pub(crate) fn from_basis(d: usize, k: usize, basis: &MonomialBasis, coefs: &[f64]) -> Self {
        let terms = coefs
            .iter()
            .enumerate()
            .map(|(t, &c)| MonomialTerm {
                exponents: basis.exponents(t, d),
                coef: c,
            })
            .collect();
        MonomialPolynomial {
            dim: d,
            degree: k,
            terms,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[MonomialTerm] {
        &self.terms
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.exponents
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .fold(t.coef, |acc, (j, &e)| acc * x[j].powi(e as i32))
            })
            .sum()
    }

    /// The function this polynomial takes on `{-1,+1}^d`, written in the parity basis of `moments`.
    ///
    /// On the cube `x^alpha` equals the plain product over the odd exponents, and each
    /// `x_j = mu_j + sigma_j z_j`, so the product expands over subsets.
    pub fn to_parity_expansion(&self, moments: &FeatureMoments) -> Result<FourierExpansion> {
        moments.check_dim(self.dim)?;
        let mut acc: HashMap<FeatureSubset, f64> = HashMap::new();
        for t in &self.terms {
            let odd = FeatureSubset::from_indices(
                t.exponents
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e % 2 == 1)
                    .map(|(j, _)| j),
            )?;
            for sub in odd.submasks() {
                let mut c = t.coef;
                for j in odd.indices() {
                    c *= if sub.contains(j) {
                        moments.stds()[j]
                    } else {
                        moments.means()[j]
                    };
                }
                *acc.entry(sub).or_insert(0.0) += c;
            }
        }
        FourierExpansion::from_terms(self.dim, acc)
    }
}
