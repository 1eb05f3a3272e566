//! Brute-force reference computations written directly from the definitions, independent of the
//! library's transforms.
#![allow(dead_code)]

use pacfourier::oracle::ExactProblem;
use pacfourier::ProductDistribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Point `idx` of the cube: coordinate `j` is `+1` iff bit `j` is set.
pub fn cube_point(d: usize, idx: usize) -> Vec<f64> {
    (0..d).map(|j| if idx >> j & 1 == 1 { 1.0 } else { -1.0 }).collect()
}

pub fn point_prob(biases: &[f64], idx: usize) -> f64 {
    biases
        .iter()
        .enumerate()
        .map(|(j, &p)| if idx >> j & 1 == 1 { p } else { 1.0 - p })
        .product()
}

/// `prod_{j in S} (x_j - mu_j) / sigma_j` with `mu = 2p - 1`, `sigma = sqrt(1 - mu^2)`.
pub fn biased_parity(biases: &[f64], mask: u32, x: &[f64]) -> f64 {
    (0..biases.len())
        .filter(|j| mask >> j & 1 == 1)
        .map(|j| {
            let mu = 2.0 * biases[j] - 1.0;
            (x[j] - mu) / (1.0 - mu * mu).sqrt()
        })
        .product()
}

/// `E[f psi_S]` by summing over the cube.
pub fn brute_coefficient(biases: &[f64], table: &[f64], mask: u32) -> f64 {
    let d = biases.len();
    (0..1usize << d)
        .map(|idx| point_prob(biases, idx) * table[idx] * biased_parity(biases, mask, &cube_point(d, idx)))
        .sum()
}

/// `E[f | x_J]` at every point, by conditioning directly.
pub fn conditional_mean(biases: &[f64], table: &[f64], j_mask: u32) -> Vec<f64> {
    let d = biases.len();
    let keep = j_mask as usize;
    (0..1usize << d)
        .map(|idx| {
            let (mut num, mut den) = (0.0, 0.0);
            for other in 0..1usize << d {
                if other & keep == idx & keep {
                    let p = point_prob(biases, other);
                    num += p * table[other];
                    den += p;
                }
            }
            num / den
        })
        .collect()
}

pub fn random_biases(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(lo..hi)).collect()
}

pub fn random_sign_table(rng: &mut ChaCha8Rng, d: usize) -> Vec<i8> {
    (0..1usize << d).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
}

/// Half deterministic tables, half channels with `Pr(Y = +1 | x)` uniform on `[0, 1]`.
pub fn random_problem(rng: &mut ChaCha8Rng, d: usize) -> ExactProblem {
    let dist = ProductDistribution::new(random_biases(rng, d, 0.1, 0.9)).unwrap();
    if rng.gen::<bool>() {
        ExactProblem::deterministic(dist, random_sign_table(rng, d)).unwrap()
    } else {
        let eta = (0..1usize << d).map(|_| rng.gen::<f64>()).collect();
        ExactProblem::channel(dist, eta).unwrap()
    }
}

/// `n` uniform ±1 rows with uniform labels.
pub fn random_dataset(rng: &mut ChaCha8Rng, d: usize, n: usize) -> pacfourier::LabeledDataset {
    let mut pm = || if rng.gen::<bool>() { 1i8 } else { -1 };
    let features: Vec<i8> = (0..n * d).map(|_| pm()).collect();
    let labels: Vec<i8> = (0..n).map(|_| pm()).collect();
    pacfourier::LabeledDataset::new(d, features, labels).unwrap()
}
