use super::KernelChoice;
use crate::numerics::DenseMatrix;

/// Largest subsample used by the median heuristic.
const MEDIAN_SUBSAMPLE: usize = 1000;

/// `γ = 1 / (2 median²)` over pairwise Euclidean distances of an evenly
/// strided subsample of at most 1000 columns. Falls back to 1 when the
/// median distance is zero.
pub fn median_heuristic_gamma(x: &DenseMatrix) -> f64 {
    let n = x.ncols();
    let picks: Vec<usize> = if n <= MEDIAN_SUBSAMPLE {
        (0..n).collect()
    } else {
        (0..MEDIAN_SUBSAMPLE).map(|i| i * n / MEDIAN_SUBSAMPLE).collect()
    };
    let mut dists = Vec::with_capacity(picks.len() * picks.len().saturating_sub(1) / 2);
    for (a, &i) in picks.iter().enumerate() {
        for &j in &picks[a + 1..] {
            dists.push((x.column(i) - x.column(j)).norm());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 0 {
        0.5 * (dists[mid - 1] + dists[mid])
    } else {
        dists[mid]
    };
    if median > 0.0 {
        1.0 / (2.0 * median * median)
    } else {
        1.0
    }
}

/// Gram matrix over the columns of `x`, or `None` for [`KernelChoice::None`].
/// Returns the matrix together with the `gamma` actually used (RBF only).
pub fn kernel_matrix(x: &DenseMatrix, choice: KernelChoice) -> Option<(DenseMatrix, Option<f64>)> {
    match choice {
        KernelChoice::None => None,
        KernelChoice::Linear => Some((x.transpose() * x, None)),
        KernelChoice::Rbf { gamma } => {
            let gamma = gamma.unwrap_or_else(|| median_heuristic_gamma(x));
            let n = x.ncols();
            let sq: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
            let gram = x.transpose() * x;
            let k = DenseMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    1.0
                } else {
                    let d2 = (sq[i] + sq[j] - 2.0 * gram[(i, j)]).max(0.0);
                    (-gamma * d2).exp()
                }
            });
            // exact symmetry regardless of rounding in the Gram entries
            let k = DenseMatrix::from_fn(n, n, |i, j| if i <= j { k[(i, j)] } else { k[(j, i)] });
            Some((k, Some(gamma)))
        }
    }
}
