//! Minimum-norm weighted least squares on small dense systems.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const RELATIVE_CUTOFF: f64 = 1e-10;

/// Distinct rows with their multiplicity and label sum.
pub(crate) struct GroupedRows<'a> {
    pub rows: Vec<&'a [i8]>,
    pub counts: Vec<f64>,
    pub label_sums: Vec<f64>,
}

/// Collapses duplicate rows; groups come out in lexicographic row order.
pub(crate) fn group_rows<'a>(
    rows: impl Iterator<Item = &'a [i8]>,
    labels: &[i8],
) -> GroupedRows<'a> {
    let mut groups: BTreeMap<&'a [i8], (f64, f64)> = BTreeMap::new();
    for (row, &y) in rows.zip(labels) {
        let g = groups.entry(row).or_insert((0.0, 0.0));
        g.0 += 1.0;
        g.1 += y as f64;
    }
    let mut out = GroupedRows {
        rows: Vec::with_capacity(groups.len()),
        counts: Vec::with_capacity(groups.len()),
        label_sums: Vec::with_capacity(groups.len()),
    };
    for (row, (c, s)) in groups {
        out.rows.push(row);
        out.counts.push(c);
        out.label_sums.push(s);
    }
    out
}

/// Moore-Penrose inverse of a symmetric positive semidefinite matrix applied to `rhs`.
fn psd_pinv_solve(mut m: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    // Enforce exact symmetry before the eigensolver.
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let eig = m.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let cutoff = top * RELATIVE_CUTOFF;
    let proj = eig.eigenvectors.transpose() * rhs;
    let scaled = DVector::from_iterator(
        n,
        proj.iter()
            .zip(eig.eigenvalues.iter())
            .map(|(p, &l)| if l > cutoff && l > 0.0 { p / l } else { 0.0 }),
    );
    &eig.eigenvectors * scaled
}

/// Minimizes `sum_u w_u (t_u / w_u - phi_u . c)^2` where `design` holds `phi_u` as rows,
/// `weights` the `w_u` and `targets` the sums `t_u`. Returns the minimum-norm minimizer.
///
/// With more columns than rows the problem is solved through the row-space kernel instead of
/// the normal equations.
pub fn min_norm_weighted(design: &DMatrix<f64>, weights: &[f64], targets: &[f64]) -> Vec<f64> {
    let (rows, cols) = design.shape();
    if cols <= rows {
        let mut gram = DMatrix::<f64>::zeros(cols, cols);
        let mut rhs = DVector::<f64>::zeros(cols);
        for u in 0..rows {
            let w = weights[u];
            let phi = design.row(u);
            for a in 0..cols {
                let wa = w * phi[a];
                if wa == 0.0 {
                    continue;
                }
                for b in a..cols {
                    gram[(a, b)] += wa * phi[b];
                }
            }
            for a in 0..cols {
                rhs[a] += targets[u] * phi[a];
            }
        }
        for a in 0..cols {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        psd_pinv_solve(gram, &rhs).iter().copied().collect()
    } else {
        // With A = W^{1/2} Phi and b = W^{-1/2} t: c = A^T (A A^T)^+ b.
        let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let mut a = design.clone();
        for (u, &w) in sw.iter().enumerate() {
            a.row_mut(u).scale_mut(w);
        }
        let b = DVector::from_iterator(rows, targets.iter().zip(&sw).map(|(t, s)| t / s));
        let kernel = &a * a.transpose();
        let alpha = psd_pinv_solve(kernel, &b);
        (a.transpose() * alpha).iter().copied().collect()
    }
}
