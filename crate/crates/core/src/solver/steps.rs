use nalgebra::DVector;

use super::{SolverConfig, SolverError};
use crate::data::LabelMatrix;
use crate::numerics::{
    default_ridge, solve_spd, sym_geig_smallest, symmetrize, DenseMatrix, NumericsError,
};

fn mismatch(msg: String) -> SolverError {
    SolverError::Numerics(NumericsError::DimensionMismatch(msg))
}

/// `X H`: each feature row minus its mean over samples.
pub fn centered(x: &DenseMatrix) -> DenseMatrix {
    let n = x.ncols() as f64;
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        let mean = row.sum() / n;
        row.add_scalar_mut(-mean);
    }
    out
}

/// Left and right matrices of the alignment pencil:
/// `S = X M Xᵀ + αI`, `B = X H Xᵀ`.
pub fn projection_pencil(x: &DenseMatrix, m: &DenseMatrix, alpha: f64) -> (DenseMatrix, DenseMatrix) {
    let d = x.nrows();
    let mut s = symmetrize(&(x * m * x.transpose()));
    for i in 0..d {
        s[(i, i)] += alpha;
    }
    let xc = centered(x);
    let b = symmetrize(&(&xc * xc.transpose()));
    (s, b)
}

/// Initial projection: the `k` smallest generalized eigenvectors of
/// `(X M0 Xᵀ + αI) a = λ X H Xᵀ a`. A `ridge` of `None` uses the default
/// trace-relative pencil ridge.
pub fn init_projection(
    x: &DenseMatrix,
    m0: &DenseMatrix,
    alpha: f64,
    k: usize,
    ridge: Option<f64>,
) -> Result<DenseMatrix, SolverError> {
    if m0.shape() != (x.ncols(), x.ncols()) {
        return Err(mismatch(format!(
            "MMD matrix is {}x{} for {} samples",
            m0.nrows(),
            m0.ncols(),
            x.ncols()
        )));
    }
    if k > x.nrows().min(x.ncols()) {
        return Err(mismatch(format!(
            "k = {k} exceeds min(features, samples) = {}",
            x.nrows().min(x.ncols())
        )));
    }
    let (s, b) = projection_pencil(x, m0, alpha);
    let ridge = ridge.unwrap_or_else(|| default_ridge(&b));
    Ok(sym_geig_smallest(&s, &b, k, ridge)?.vectors)
}

/// `e = (Yᵀ1 − AᵀX1) / n`.
pub fn update_offset(
    x: &DenseMatrix,
    a: &DenseMatrix,
    y: &DenseMatrix,
) -> Result<DVector<f64>, SolverError> {
    let n = x.ncols();
    if a.nrows() != x.nrows() || y.nrows() != n || y.ncols() != a.ncols() {
        return Err(mismatch(format!(
            "X {}x{}, A {}x{}, Y {}x{}",
            x.nrows(),
            x.ncols(),
            a.nrows(),
            a.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    let label_sums = y.row_sum().transpose();
    let projected_sums = a.transpose() * x.column_sum();
    Ok((label_sums - projected_sums) / n as f64)
}

/// Smoothed row norms `sqrt(‖a^j‖² + ε)`.
fn smoothed_row_norms(a: &DenseMatrix, epsilon: f64) -> Vec<f64> {
    a.row_iter().map(|r| (r.norm_squared() + epsilon).sqrt()).collect()
}

/// `tr(AᵀXM*XᵀA) + α‖A‖_F² + β(Σ_j sqrt(‖a^j‖² + ε))² + ‖XᵀA + 1eᵀ − Y‖_F²`.
#[allow(clippy::too_many_arguments)]
pub fn objective(
    x: &DenseMatrix,
    a: &DenseMatrix,
    e: &DVector<f64>,
    y: &DenseMatrix,
    mstar: &DenseMatrix,
    alpha: f64,
    beta: f64,
    epsilon: f64,
) -> Result<f64, SolverError> {
    let n = x.ncols();
    if a.nrows() != x.nrows()
        || e.len() != a.ncols()
        || y.shape() != (n, a.ncols())
        || mstar.shape() != (n, n)
    {
        return Err(mismatch("objective operands do not conform".into()));
    }
    let p = a.transpose() * x;
    let alignment = (&p * mstar).component_mul(&p).sum();
    let frob = a.norm_squared();
    let l21: f64 = smoothed_row_norms(a, epsilon).iter().sum();
    let mut residual = p.transpose() - y;
    for mut row in residual.row_iter_mut() {
        row += e.transpose();
    }
    Ok(alignment + alpha * frob + beta * l21 * l21 + residual.norm_squared())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionUpdate {
    pub projection: DenseMatrix,
    /// Smoothed objective (offset profiled out) after every inner solve.
    pub inner_objectives: Vec<f64>,
}

/// Alternates the closed-form projection solve
/// `A = (XHXᵀ + βG + αI + XM*Xᵀ)⁻¹ XHY` with the reweighting
/// `g_jj = Σ_i sqrt(‖a^i‖² + ε) / sqrt(‖a^j‖² + ε)`, starting from `G = I`.
///
/// Stops after `cfg.inner_iters` solves or once the relative change of the
/// smoothed objective drops below `cfg.tol`. The offset is eliminated by
/// centering, so the objective is evaluated with the optimal offset for each
/// iterate.
pub fn update_projection(
    x: &DenseMatrix,
    y: &DenseMatrix,
    mstar: &DenseMatrix,
    cfg: &SolverConfig,
) -> Result<ProjectionUpdate, SolverError> {
    let (d, n) = x.shape();
    if y.nrows() != n || mstar.shape() != (n, n) {
        return Err(mismatch(format!(
            "X {d}x{n}, Y {}x{}, M* {}x{}",
            y.nrows(),
            y.ncols(),
            mstar.nrows(),
            mstar.ncols()
        )));
    }
    let xc = centered(x);
    let mut base = symmetrize(&(&xc * xc.transpose() + x * mstar * x.transpose()));
    for i in 0..d {
        base[(i, i)] += cfg.alpha;
    }
    let rhs = &xc * y;

    let mut weights = vec![1.0; d];
    let mut trace = Vec::with_capacity(cfg.inner_iters);
    let mut projection = DenseMatrix::zeros(d, y.ncols());
    for _ in 0..cfg.inner_iters {
        let mut system = base.clone();
        for (i, g) in weights.iter().enumerate() {
            system[(i, i)] += cfg.beta * g;
        }
        projection = solve_spd(&system, &rhs)?;
        if projection.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite("projection"));
        }
        let e = update_offset(x, &projection, y)?;
        let value = objective(x, &projection, &e, y, mstar, cfg.alpha, cfg.beta, cfg.epsilon)?;

        let norms = smoothed_row_norms(&projection, cfg.epsilon);
        let total: f64 = norms.iter().sum();
        for (g, s) in weights.iter_mut().zip(&norms) {
            *g = total / s;
        }

        let converged = trace
            .last()
            .is_some_and(|&prev: &f64| (prev - value).abs() <= cfg.tol * prev.abs().max(f64::MIN_POSITIVE));
        trace.push(value);
        if converged {
            break;
        }
    }
    Ok(ProjectionUpdate {
        projection,
        inner_objectives: trace,
    })
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // fold the rounding residue into the largest entry so the row sums to 1
    let sum: f64 = out.iter().sum();
    if let Some(imax) = (0..out.len()).max_by(|&a, &b| out[a].total_cmp(&out[b]).then(b.cmp(&a))) {
        out[imax] += 1.0 - sum;
    }
    out
}

/// Refines the target rows (`n_source..n`) of the label matrix: each becomes
/// `Aᵀx_i + e` shifted onto the hyperplane `1ᵀy = 1`, then projected onto
/// the simplex. Source rows are copied unchanged.
pub fn update_labels(
    x: &DenseMatrix,
    a: &DenseMatrix,
    e: &DVector<f64>,
    current: &LabelMatrix,
    n_source: usize,
) -> Result<LabelMatrix, SolverError> {
    let n = x.ncols();
    let k = a.ncols();
    if a.nrows() != x.nrows() || e.len() != k || current.rows() != n || current.width() != k || n_source > n {
        return Err(mismatch("label update operands do not conform".into()));
    }
    let mut values = current.values().clone();
    let target = x.columns(n_source, n - n_source);
    let predicted = a.transpose() * target;
    for (j, col) in predicted.column_iter().enumerate() {
        let v: Vec<f64> = col.iter().zip(e.iter()).map(|(p, o)| p + o).collect();
        let shift = (1.0 - v.iter().sum::<f64>()) / k as f64;
        let on_plane: Vec<f64> = v.iter().map(|x| x + shift).collect();
        let row = project_to_simplex(&on_plane);
        for (c, val) in row.into_iter().enumerate() {
            values[(n_source + j, c)] = val;
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFinite("label matrix"));
    }
    Ok(LabelMatrix::from_parts_unchecked(values, current.class_count()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{encode_labels, PortableRng};
    use crate::mmd::{build_marginal, build_weights};

    fn gaussian(rng: &mut PortableRng, r: usize, c: usize) -> DenseMatrix {
        DenseMatrix::from_fn(r, c, |_, _| rng.gaussian())
    }

    #[test]
    fn offset_examples() {
        let y = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let x = DenseMatrix::zeros(3, 2);
        let a = DenseMatrix::from_element(3, 2, 0.7);
        let e = update_offset(&x, &a, &y).unwrap();
        assert_eq!(e.as_slice(), &[0.5, 0.5]);

        // AᵀX1 = (0.4, 0.6)
        let x = DenseMatrix::from_row_slice(1, 2, &[0.2, 0.2]);
        let a = DenseMatrix::from_row_slice(1, 2, &[1.0, 1.5]);
        let e = update_offset(&x, &a, &y).unwrap();
        assert!((e[0] - 0.3).abs() < 1e-15 && (e[1] - 0.2).abs() < 1e-15);

        // XᵀA = Y
        let x = DenseMatrix::identity(2, 2);
        let e = update_offset(&x, &y, &y).unwrap();
        assert_eq!(e.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn simplex_projection_examples() {
        assert_eq!(project_to_simplex(&[2.0, -1.0]), vec![1.0, 0.0]);
        let p = project_to_simplex(&[0.55, 0.35, 0.05, 0.05]);
        for (a, b) in p.iter().zip([0.55, 0.35, 0.05, 0.05]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn label_update_example_row() {
        // one source row, one target row; A = I, e = 0 so v = x
        let x = DenseMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.5, 0.3, 0.0, 0.0]);
        let a = DenseMatrix::identity(4, 4);
        let e = DVector::zeros(4);
        let y = encode_labels(&[1, 2], 2, 4).unwrap();
        let out = update_labels(&x, &a, &e, &y, 1).unwrap();
        let expected = [0.55, 0.35, 0.05, 0.05];
        for c in 0..4 {
            assert!((out.values()[(1, c)] - expected[c]).abs() < 1e-15);
        }
        assert_eq!(out.values().row(0), y.values().row(0));
    }

    #[test]
    fn label_update_keeps_simplex() {
        let mut rng = PortableRng::new(2);
        let x = gaussian(&mut rng, 5, 12);
        let a = gaussian(&mut rng, 5, 4) * 3.0;
        let e = DVector::from_fn(4, |_, _| rng.gaussian());
        let labels: Vec<usize> = (0..12).map(|i| 1 + i % 3).collect();
        let y = encode_labels(&labels, 3, 4).unwrap();
        let out = update_labels(&x, &a, &e, &y, 6).unwrap();
        for r in out.values().row_iter() {
            assert!(r.iter().all(|&v| v >= 0.0));
            assert!((r.sum() - 1.0).abs() <= 1e-9);
        }
        for i in 0..6 {
            for c in 0..4 {
                assert_eq!(out.values()[(i, c)].to_bits(), y.values()[(i, c)].to_bits());
            }
        }
    }

    #[test]
    fn objective_of_zero_projection_counts_rows() {
        let x = DenseMatrix::from_element(3, 5, 1.0);
        let a = DenseMatrix::zeros(3, 4);
        let y = encode_labels(&[1, 2, 3, 1, 2], 3, 4).unwrap();
        let m = build_marginal(2, 3);
        let v = objective(&x, &a, &DVector::zeros(4), y.values(), &m, 1.0, 0.0, 1e-8).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
    }

    #[test]
    fn objective_term_by_term() {
        let mut rng = PortableRng::new(21);
        let x = gaussian(&mut rng, 4, 9);
        let a = gaussian(&mut rng, 4, 3);
        let e = DVector::from_fn(3, |_, _| rng.gaussian());
        let y = encode_labels(&[1, 2, 3, 1, 2, 3, 3, 2, 1], 3, 3).unwrap();
        let w = build_weights(&[1, 2, 3, 1, 2], &[3, 2, 1, 1], 3);
        let (alpha, beta) = (0.7, 0.0);
        let got = objective(&x, &a, &e, y.values(), &w.mstar, alpha, beta, 1e-8).unwrap();
        let mut expected = (a.transpose() * &x * &w.mstar * x.transpose() * &a).trace();
        expected += alpha * a.iter().map(|v| v * v).sum::<f64>();
        for i in 0..9 {
            for j in 0..3 {
                let mut pred = e[j];
                for f in 0..4 {
                    pred += x[(f, i)] * a[(f, j)];
                }
                expected += (pred - y.values()[(i, j)]).powi(2);
            }
        }
        assert!((got - expected).abs() <= 1e-10 * expected.abs().max(1.0));
    }

    #[test]
    fn objective_permutation_symmetry() {
        let mut rng = PortableRng::new(5);
        let x = gaussian(&mut rng, 3, 6);
        let a = gaussian(&mut rng, 3, 2);
        let e = DVector::from_fn(2, |_, _| rng.gaussian());
        let y = encode_labels(&[1, 2, 1, 2, 2, 1], 2, 2).unwrap();
        let w = build_weights(&[1, 2, 1], &[2, 2, 1], 2);
        let base = objective(&x, &a, &e, y.values(), &w.mstar, 1.0, 1.1, 1e-8).unwrap();
        let perm = [5, 3, 4, 0, 2, 1];
        let xp = DenseMatrix::from_fn(3, 6, |r, c| x[(r, perm[c])]);
        let yp = DenseMatrix::from_fn(6, 2, |r, c| y.values()[(perm[r], c)]);
        let mp = DenseMatrix::from_fn(6, 6, |r, c| w.mstar[(perm[r], perm[c])]);
        let permuted = objective(&xp, &a, &e, &yp, &mp, 1.0, 1.1, 1e-8).unwrap();
        assert!((base - permuted).abs() <= 1e-12 * base.abs());
    }

    #[test]
    fn ridge_regression_when_unregularized_by_l21() {
        let mut rng = PortableRng::new(13);
        let x = gaussian(&mut rng, 5, 15);
        let labels: Vec<usize> = (0..15).map(|i| 1 + i % 3).collect();
        let y = encode_labels(&labels, 3, 3).unwrap();
        let cfg = SolverConfig {
            alpha: 0.5,
            beta: 0.0,
            ..Default::default()
        };
        let zero = DenseMatrix::zeros(15, 15);
        let got = update_projection(&x, y.values(), &zero, &cfg).unwrap().projection;
        // normal equations of min ‖H(XᵀA − Y)‖² + α‖A‖², solved by Gaussian
        // elimination on the explicit centering matrix
        let h = DenseMatrix::identity(15, 15) - DenseMatrix::from_element(15, 15, 1.0 / 15.0);
        let lhs = &x * &h * x.transpose() + DenseMatrix::identity(5, 5) * 0.5;
        let rhs = &x * &h * y.values();
        let expected = lhs.lu().solve(&rhs).unwrap();
        assert!((got - expected).amax() <= 1e-8);
    }

    #[test]
    fn single_sample_gives_zero_projection() {
        let x = DenseMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let y = encode_labels(&[1], 1, 2).unwrap();
        let cfg = SolverConfig::default();
        let out = update_projection(&x, y.values(), &DenseMatrix::zeros(1, 1), &cfg).unwrap();
        assert!(out.projection.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inner_objective_is_monotone() {
        let mut rng = PortableRng::new(31);
        let x = gaussian(&mut rng, 8, 120);
        let labels: Vec<usize> = (0..120).map(|i| 1 + i % 3).collect();
        let y = encode_labels(&labels, 3, 4).unwrap();
        let w = build_weights(&labels[..60], &labels[60..], 3);
        let cfg = SolverConfig {
            inner_iters: 50,
            tol: 0.0,
            ..Default::default()
        };
        let out = update_projection(&x, y.values(), &w.mstar, &cfg).unwrap();
        assert!(out.inner_objectives.len() >= 2);
        for pair in out.inner_objectives.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-9), "{pair:?}");
        }
    }

    #[test]
    fn init_projection_is_b_orthonormal() {
        let mut rng = PortableRng::new(3);
        let x = gaussian(&mut rng, 6, 20);
        let m0 = build_marginal(12, 8);
        let a = init_projection(&x, &m0, 1.0, 3, Some(0.0)).unwrap();
        let xc = centered(&x);
        let gram = a.transpose() * &xc * xc.transpose() * &a;
        assert!((gram - DenseMatrix::identity(3, 3)).amax() < 1e-8);
    }

    #[test]
    fn init_projection_rejects_large_k() {
        let x = DenseMatrix::from_element(3, 5, 1.0);
        assert!(init_projection(&x, &build_marginal(2, 3), 1.0, 4, None).is_err());
    }
}
