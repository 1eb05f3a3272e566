//! Feature subsets as bit masks over `0..d`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Widest dimension a mask can address.
pub const MAX_MASK_DIM: usize = 30;

/// A set of feature indices stored as a bit mask; bit `j` set means feature `j` is in the set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureSubset(pub u32);

impl FeatureSubset {
    pub const EMPTY: FeatureSubset = FeatureSubset(0);

    /// All features `0..d`.
    pub fn full(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(FeatureSubset(if d == 0 { 0 } else { u32::MAX >> (32 - d) }))
    }

    pub fn singleton(j: usize) -> Self {
        FeatureSubset(1 << j)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Result<Self> {
        let mut mask = 0u32;
        for j in indices {
            if j >= MAX_MASK_DIM {
                return Err(Error::DimensionTooLarge {
                    d: j + 1,
                    max: MAX_MASK_DIM,
                });
            }
            mask |= 1 << j;
        }
        Ok(FeatureSubset(mask))
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    /// Indices in ascending order.
    pub fn indices(self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut m = self.0;
        while m != 0 {
            out.push(m.trailing_zeros() as usize);
            m &= m - 1;
        }
        out
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, j: usize) -> bool {
        j < 32 && self.0 & (1 << j) != 0
    }

    pub fn is_subset_of(self, other: FeatureSubset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn with(self, j: usize) -> Self {
        FeatureSubset(self.0 | (1 << j))
    }

    /// Highest index plus one, or 0 for the empty set.
    pub fn span(self) -> usize {
        32 - self.0.leading_zeros() as usize
    }

    /// Every subset of `self`, ascending by mask, starting with the empty set.
    pub fn submasks(self) -> Submasks {
        Submasks {
            outer: self.0,
            next: Some(0),
        }
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.indices().into_iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

// Serialized as the ascending index list, matching the expansion JSON.
impl Serialize for FeatureSubset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.indices().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FeatureSubset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let idx = Vec::<usize>::deserialize(d)?;
        FeatureSubset::from_indices(idx).map_err(serde::de::Error::custom)
    }
}

pub struct Submasks {
    outer: u32,
    next: Option<u32>,
}

impl Iterator for Submasks {
    type Item = FeatureSubset;

    fn next(&mut self) -> Option<FeatureSubset> {
        let cur = self.next?;
        // Standard increment restricted to the bits of `outer`.
        let succ = (cur.wrapping_sub(self.outer)) & self.outer;
        self.next = if succ == 0 { None } else { Some(succ) };
        Some(FeatureSubset(cur))
    }
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d > MAX_MASK_DIM {
        Err(Error::DimensionTooLarge {
            d,
            max: MAX_MASK_DIM,
        })
    } else {
        Ok(())
    }
}

/// Number of subsets of `[d]` with at most `k` elements.
pub fn count_subsets(d: usize, k: usize) -> u128 {
    (0..=k.min(d)).map(|m| binomial(d, m)).sum()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All subsets of size exactly `m` of `[d]`, ascending by mask.
pub fn subsets_of_size(d: usize, m: usize) -> Result<Vec<FeatureSubset>> {
    check_dim(d)?;
    if m > d {
        return Ok(Vec::new());
    }
    if m == 0 {
        return Ok(vec![FeatureSubset::EMPTY]);
    }
    let limit: u64 = 1u64 << d;
    let mut out = Vec::with_capacity(binomial(d, m) as usize);
    let mut s: u64 = (1u64 << m) - 1;
    while s < limit {
        out.push(FeatureSubset(s as u32));
        // Gosper's hack: next integer with the same popcount.
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
    Ok(out)
}

/// All subsets of `[d]` with at most `k` elements, ascending by mask, including the empty set.
pub fn enumerate_subsets(d: usize, k: usize) -> Result<Vec<FeatureSubset>> {
    check_dim(d)?;
    if k > d {
        return Err(Error::invalid(format!("k = {k} exceeds d = {d}")));
    }
    let mut out = Vec::with_capacity(count_subsets(d, k) as usize);
    for m in 0..=k {
        out.extend(subsets_of_size(d, m)?);
    }
    out.sort_unstable();
    Ok(out)
}
