/// Threshold in `[-1, 1]` minimizing the empirical error of `sign(value - theta)`, together with
/// the number of misclassified rows.
///
/// Candidates are `-1`, the midpoints between consecutive distinct sorted values (clipped to
/// `[-1, 1]`) and `1`; ties go to the smallest candidate.
pub fn select_threshold_with_errors(values: &[f64], labels: &[i8]) -> (f64, usize) {
    assert_eq!(values.len(), labels.len(), "values and labels differ in length");
    let mut pairs: Vec<(f64, i8)> = values.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sorted: Vec<f64> = pairs.iter().map(|p| p.0).collect();

    // below_pos[i] / below_neg[i]: labels +1 / -1 among the i smallest values.
    let mut below_pos = Vec::with_capacity(pairs.len() + 1);
    let mut below_neg = Vec::with_capacity(pairs.len() + 1);
    below_pos.push(0usize);
    below_neg.push(0usize);
    for &(_, y) in &pairs {
        below_pos.push(below_pos.last().unwrap() + (y > 0) as usize);
        below_neg.push(below_neg.last().unwrap() + (y <= 0) as usize);
    }
    let total_neg = *below_neg.last().unwrap();

    let mut candidates = vec![-1.0];
    for w in sorted.windows(2) {
        if w[0] < w[1] {
            candidates.push((0.5 * (w[0] + w[1])).clamp(-1.0, 1.0));
        }
    }
    candidates.push(1.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let mut best = (candidates[0], usize::MAX);
    for theta in candidates {
        // Rows with value < theta are predicted -1.
        let k = sorted.partition_point(|&v| v < theta);
        let errors = below_pos[k] + (total_neg - below_neg[k]);
        if errors < best.1 {
            best = (theta, errors);
        }
    }
    best
}

pub fn select_threshold(values: &[f64], labels: &[i8]) -> f64 {
    select_threshold_with_errors(values, labels).0
}

/// Misclassified rows of `sign(value - theta)` with `sign(0) = +1`.
pub fn threshold_errors(values: &[f64], labels: &[i8], theta: f64) -> usize {
    values
        .iter()
        .zip(labels)
        .filter(|(&v, &y)| (if v - theta >= 0.0 { 1 } else { -1 }) != y)
        .count()
}
