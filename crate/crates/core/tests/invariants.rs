mod common;

use common::*;
use pacfourier::data::{parse_csv, save_csv, split, Encoding};
use pacfourier::fourier::{exact_coefficients_dense, exact_expansion, norm1_exact, parity_eval};
use pacfourier::learners::{
    empirical_square_loss, fit_l2_polynomial, select_threshold_with_errors, sign, threshold_errors,
    MonomialPolynomial, MonomialTerm, PredictorBody, SignPredictor,
};
use pacfourier::oracle::{erm_exhaustive, exact_error, exact_popt, sandwich, ExactProblem};
use pacfourier::subset::{count_subsets, enumerate_subsets};
use pacfourier::{FeatureMoments, FeatureSubset, FourierExpansion, LabeledDataset, ProductDistribution};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn biases(d: impl Into<proptest::collection::SizeRange>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..0.95, d)
}

fn dist_and_table(max_d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max_d).prop_flat_map(|d| {
        (
            biases(d),
            prop::collection::vec(prop::sample::select(vec![-1.0, 1.0]), 1 << d),
        )
    })
}

fn dist_and_real_table(max_d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max_d).prop_flat_map(|d| (biases(d), prop::collection::vec(-1.0f64..1.0, 1 << d)))
}

fn inner(biases: &[f64], f: &[f64], g: &[f64]) -> f64 {
    (0..f.len()).map(|i| point_prob(biases, i) * f[i] * g[i]).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parities_are_orthonormal(b in biases(1..=6usize)) {
        let d = b.len();
        let moments = FeatureMoments::from_biases(&b).unwrap();
        for s in 0..1u32 << d {
            for t in s..1u32 << d {
                let ip: f64 = (0..1usize << d)
                    .map(|idx| {
                        let x = cube_point(d, idx);
                        point_prob(&b, idx)
                            * parity_eval(&moments, FeatureSubset(s), &x)
                            * parity_eval(&moments, FeatureSubset(t), &x)
                    })
                    .sum();
                let want = if s == t { 1.0 } else { 0.0 };
                prop_assert!((ip - want).abs() < 1e-10, "<psi_{s}, psi_{t}> = {ip}");
            }
        }
    }

    #[test]
    fn coefficients_match_the_definition((b, table) in dist_and_real_table(6)) {
        let dist = ProductDistribution::new(b.clone()).unwrap();
        let dense = exact_coefficients_dense(&dist, &table).unwrap();
        for (s, &c) in dense.iter().enumerate() {
            prop_assert!((c - brute_coefficient(&b, &table, s as u32)).abs() < 1e-10);
        }
        // Reconstruction: f = sum_S f_S psi_S at every point.
        let e = exact_expansion(&dist, &table).unwrap();
        let moments = dist.moments();
        for idx in 0..table.len() {
            let x = cube_point(b.len(), idx);
            prop_assert!((e.eval(&moments, &x) - table[idx]).abs() < 1e-9);
        }
    }

    #[test]
    fn plancherel((b, f) in dist_and_real_table(6), seed in any::<u64>()) {
        let dist = ProductDistribution::new(b.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = random_sign_table(&mut rng, b.len()).into_iter().map(f64::from).collect();
        let fe = exact_expansion(&dist, &f).unwrap();
        let ge = exact_expansion(&dist, &g).unwrap();
        prop_assert!((fe.inner(&ge) - inner(&b, &f, &g)).abs() < 1e-9);
        prop_assert!((fe.norm2_sq() - inner(&b, &f, &f)).abs() < 1e-9);
        prop_assert!((ge.norm2_sq() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn projection_is_conditional_expectation((b, table) in dist_and_real_table(5), j in any::<u32>()) {
        let d = b.len();
        let j = FeatureSubset(j & ((1 << d) - 1));
        let dist = ProductDistribution::new(b.clone()).unwrap();
        let full = exact_expansion(&dist, &table).unwrap();
        let proj = full.project(j);
        let want = conditional_mean(&b, &table, j.0);
        let moments = dist.moments();
        for idx in 0..table.len() {
            prop_assert!((proj.eval(&moments, &cube_point(d, idx)) - want[idx]).abs() < 1e-9);
        }
        // Idempotence and Pythagoras.
        prop_assert_eq!(proj.project(j), proj.clone());
        let rest = full.sub(&proj);
        prop_assert!((full.norm2_sq() - proj.norm2_sq() - rest.norm2_sq()).abs() < 1e-9);
        prop_assert!(proj.inner(&rest).abs() < 1e-9);
    }

    #[test]
    fn norm_chain_for_bounded_functions((b, table) in dist_and_real_table(6), j in any::<u32>()) {
        let d = b.len();
        let dist = ProductDistribution::new(b).unwrap();
        let proj = exact_expansion(&dist, &table).unwrap().project(FeatureSubset(j & ((1 << d) - 1)));
        let n1 = norm1_exact(&dist, &proj).unwrap();
        let n2 = proj.norm2_sq().sqrt();
        prop_assert!(n1 <= n2 + 1e-12);
        prop_assert!(n2 <= 1.0 + 1e-12);
    }

    #[test]
    fn mismatch_from_coefficients((b, f) in dist_and_table(6), seed in any::<u64>()) {
        let dist = ProductDistribution::new(b.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = random_sign_table(&mut rng, b.len()).into_iter().map(f64::from).collect();
        let mismatch: f64 = (0..f.len()).filter(|&i| f[i] != g[i]).map(|i| point_prob(&b, i)).sum();
        let diff = exact_expansion(&dist, &f).unwrap().sub(&exact_expansion(&dist, &g).unwrap());
        prop_assert!((mismatch - 0.25 * diff.norm2_sq()).abs() < 1e-9);
    }

    #[test]
    fn subcube_values_match_pointwise_evaluation((b, table) in dist_and_real_table(6), j in any::<u32>()) {
        let d = b.len();
        let j = FeatureSubset(j & ((1 << d) - 1));
        let dist = ProductDistribution::new(b).unwrap();
        let moments = dist.moments();
        let proj = exact_expansion(&dist, &table).unwrap().project(j);
        let values = proj.values_on_subcube(&moments, j).unwrap();
        let feats = j.indices();
        for (c, v) in values.iter().enumerate() {
            // Features outside J are irrelevant to the projection; put them at -1.
            let mut x = vec![-1.0; d];
            for (i, &f) in feats.iter().enumerate() {
                if c >> i & 1 == 1 {
                    x[f] = 1.0;
                }
            }
            prop_assert!((proj.eval(&moments, &x) - v).abs() < 1e-9);
        }
    }

    #[test]
    fn error_identities_hold_for_any_predictor(seed in any::<u64>(), d in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_problem(&mut rng, d);
        let g: Vec<f64> = random_sign_table(&mut rng, d).into_iter().map(f64::from).collect();
        let expansion = exact_expansion(problem.dist(), &g).unwrap();
        let model = SignPredictor::new(
            PredictorBody::Fourier { expansion, moments: problem.dist().moments() },
            0.0,
        );
        let e = exact_error(&problem, &model).unwrap();
        let mean = problem.label_mean();
        let direct: f64 = (0..1usize << d)
            .map(|i| point_prob(problem.dist().biases(), i) * (1.0 - g[i] * mean[i]) / 2.0)
            .sum();
        prop_assert!((e.enumeration - direct).abs() < 1e-9);
        prop_assert!((e.inner_product - direct).abs() < 1e-9);
        prop_assert!((e.norm_form - direct).abs() < 1e-9);
    }

    #[test]
    fn popt_equals_erm(seed in any::<u64>(), d in 1usize..=6, k in 0usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_problem(&mut rng, d);
        let k = k.min(d);
        let popt = exact_popt(&problem, k).unwrap();
        let erm = erm_exhaustive(&problem, k).unwrap();
        prop_assert!((popt.popt - erm.error).abs() < 1e-9);
        if let Some(lit) = erm.literal_scan_error {
            prop_assert!((lit - erm.error).abs() < 1e-9);
        }
    }

    #[test]
    fn threshold_is_optimal(
        values in prop::collection::vec(-2.0f64..2.0, 1..60),
        label_bits in prop::collection::vec(any::<bool>(), 60),
    ) {
        let labels: Vec<i8> = values.iter().zip(&label_bits).map(|(_, &b)| if b { 1 } else { -1 }).collect();
        let (theta, errors) = select_threshold_with_errors(&values, &labels);
        prop_assert!((-1.0..=1.0).contains(&theta));
        prop_assert_eq!(errors, threshold_errors(&values, &labels, theta));
        // No threshold in [-1, 1] does better.
        for i in 0..=400 {
            let t = -1.0 + i as f64 / 200.0;
            prop_assert!(threshold_errors(&values, &labels, t) >= errors);
        }
        for &v in &values {
            if v.abs() <= 1.0 {
                prop_assert!(threshold_errors(&values, &labels, v) >= errors);
            }
        }
    }

    #[test]
    fn least_squares_is_stationary(seed in any::<u64>(), d in 1usize..=4, k in 1usize..=2, n in 5usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_dataset(&mut rng, d, n);
        let poly = fit_l2_polynomial(&data, k).unwrap();
        let loss = |p: &MonomialPolynomial| {
            let values: Vec<f64> = (0..n).map(|i| p.eval(&data.point(i))).collect();
            empirical_square_loss(&values, data.labels())
        };
        let base = loss(&poly);
        for t in 0..poly.terms().len() {
            for step in [1e-3, -1e-3, 0.1, -0.1] {
                let mut terms: Vec<MonomialTerm> = poly.terms().to_vec();
                terms[t].coef += step;
                let moved = MonomialPolynomial::new(d, k, terms).unwrap();
                prop_assert!(loss(&moved) >= base - 1e-9);
            }
        }
    }

    #[test]
    fn csv_round_trip(seed in any::<u64>(), d in 1usize..=8, n in 1usize..40, zero_one in any::<bool>(), header in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_dataset(&mut rng, d, n);
        let enc = if zero_one { Encoding::ZeroOne } else { Encoding::Pm1 };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        save_csv(&path, &data, enc, header).unwrap();
        let (back, report) = parse_csv(&std::fs::read_to_string(&path).unwrap(), enc).unwrap();
        prop_assert_eq!(back, data);
        prop_assert_eq!(report.header.is_some(), header);
    }

    #[test]
    fn split_partitions_rows(n in 2usize..200, f in 0.01f64..0.99, seed in any::<u64>()) {
        let rows: Vec<Vec<i8>> = (0..n).map(|i| (0..10).map(|j| if i >> j & 1 == 1 { 1 } else { -1 }).collect()).collect();
        let data = LabeledDataset::from_rows(10, rows, vec![1; n]).unwrap();
        let (train, test) = split(&data, f, seed).unwrap();
        prop_assert_eq!(train.n() + test.n(), n);
        prop_assert!(test.n() >= 1 && train.n() >= 1);
        let mut seen: Vec<&[i8]> = train.rows().chain(test.rows()).collect();
        seen.sort();
        let mut all: Vec<&[i8]> = data.rows().collect();
        all.sort();
        prop_assert_eq!(seen, all);
    }

    #[test]
    fn subset_enumeration_counts(d in 0usize..=12, k in 0usize..=12) {
        prop_assume!(k <= d);
        let subs = enumerate_subsets(d, k).unwrap();
        prop_assert_eq!(subs.len() as u128, count_subsets(d, k));
        prop_assert!(subs.iter().all(|s| s.len() <= k && s.span() <= d));
        prop_assert!(subs.windows(2).all(|w| w[0].0 < w[1].0));
        for s in subs.iter().take(20) {
            prop_assert_eq!(s.submasks().count(), 1 << s.len());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn sandwich_orders_popt(seed in any::<u64>(), d in 1usize..=6, k in 0usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_problem(&mut rng, d);
        let s = sandwich(&problem, k.min(d)).unwrap();
        prop_assert!(s.lower <= s.popt + 1e-12, "{s:?}");
        prop_assert!(s.popt <= s.upper + 1e-12, "{s:?}");
    }
}

#[test]
fn sign_of_zero_is_positive() {
    assert_eq!(sign(0.0), 1);
    assert_eq!(sign(-1e-300), -1);
}

#[test]
fn problem_json_round_trips() {
    let dist = ProductDistribution::new(vec![0.3, 0.7]).unwrap();
    let p = ExactProblem::channel(dist, vec![0.1, 0.9, 0.5, 0.2]).unwrap();
    let text = serde_json::to_string(&p).unwrap();
    let back: ExactProblem = serde_json::from_str(&text).unwrap();
    assert_eq!(exact_popt(&back, 1).unwrap(), exact_popt(&p, 1).unwrap());
    let e = FourierExpansion::from_terms(3, [(FeatureSubset(0b101), 0.5), (FeatureSubset::EMPTY, -0.25)]).unwrap();
    let back: FourierExpansion = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
    assert_eq!(back, e);
}
