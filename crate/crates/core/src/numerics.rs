//! Dense kernels used by the solver: SPD solves, the symmetric-definite
//! generalized eigenproblem, and the row-sparsity norm.
//!
//! Storage, matrix products and the symmetric eigendecomposition come from
//! `nalgebra`; the Cholesky factorization is a local blocked variant.
//! Everything here is single-threaded and deterministic for a fixed input.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

/// Column-major dense `f64` matrix used throughout the crate.
pub type DenseMatrix = DMatrix<f64>;

/// Relative tolerance for the symmetry precondition of the solvers.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Scale factor for the default pencil ridge, relative to `trace(B) / d`.
pub const DEFAULT_RIDGE_SCALE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not positive definite (pivot {pivot} is not positive)")]
    NotPositiveDefinite { pivot: usize },
    #[error("regularized pencil matrix is not positive definite")]
    SingularPencil,
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Generalized eigenvectors (as columns) with their eigenvalues, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub vectors: DenseMatrix,
    pub values: Vec<f64>,
}

/// Returns the first non-finite entry, if any.
pub fn check_finite(m: &DenseMatrix) -> Result<(), NumericsError> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if !m[(r, c)].is_finite() {
                return Err(NumericsError::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Largest absolute entry of `m - mᵀ`.
pub fn asymmetry(m: &DenseMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for c in 0..m.ncols() {
        for r in (c + 1)..m.nrows() {
            worst = worst.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    worst
}

fn ensure_symmetric(m: &DenseMatrix, what: &str) -> Result<(), NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOL * scale {
        return Err(NumericsError::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// `(m + mᵀ) / 2`, used to wash out rounding asymmetry of products like `X M Xᵀ`.
pub fn symmetrize(m: &DenseMatrix) -> DenseMatrix {
    (m + m.transpose()) * 0.5
}

/// Sum of the Euclidean norms of the rows of `m`.
pub fn l21_norm(m: &DenseMatrix) -> f64 {
    m.row_iter().map(|row| row.norm()).sum()
}

/// Default pencil ridge: `1e-9 * trace(B) / d`, falling back to `1e-9` when
/// the trace is not positive (e.g. an all-zero centered Gram matrix).
pub fn default_ridge(b: &DenseMatrix) -> f64 {
    let d = b.nrows().max(1) as f64;
    let mean_diag = b.trace() / d;
    if mean_diag > 0.0 && mean_diag.is_finite() {
        DEFAULT_RIDGE_SCALE * mean_diag
    } else {
        DEFAULT_RIDGE_SCALE
    }
}

// Jacobi scaling vector `1/sqrt(diag)`; a non-positive diagonal entry already
// rules out positive definiteness.
fn jacobi_scaling(s: &DenseMatrix) -> Result<DVector<f64>, usize> {
    let mut d = DVector::zeros(s.nrows());
    for i in 0..s.nrows() {
        let v = s[(i, i)];
        if !(v > 0.0) {
            return Err(i);
        }
        d[i] = 1.0 / v.sqrt();
    }
    Ok(d)
}

fn scale_sym(s: &DenseMatrix, d: &DVector<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(s.nrows(), s.ncols(), |r, c| d[r] * s[(r, c)] * d[c])
}

const CHOLESKY_BLOCK: usize = 64;

/// Lower Cholesky factor of a symmetric matrix (only the lower triangle is
/// read). Right-looking and blocked so the trailing updates run through the
/// matrix-product kernel. On failure returns the index of the first
/// non-positive pivot.
fn cholesky_lower(mut a: DenseMatrix) -> Result<DenseMatrix, usize> {
    let n = a.nrows();
    let mut j = 0;
    while j < n {
        let jb = CHOLESKY_BLOCK.min(n - j);
        for c in j..j + jb {
            let mut diag = a[(c, c)];
            for p in j..c {
                diag -= a[(c, p)] * a[(c, p)];
            }
            if !(diag > 0.0) {
                return Err(c);
            }
            let lcc = diag.sqrt();
            a[(c, c)] = lcc;
            for r in (c + 1)..(j + jb) {
                let mut v = a[(r, c)];
                for p in j..c {
                    v -= a[(r, p)] * a[(c, p)];
                }
                a[(r, c)] = v / lcc;
            }
        }
        let rest = n - j - jb;
        if rest > 0 {
            let l11 = a.view((j, j), (jb, jb)).lower_triangle();
            // L21ᵀ = L11⁻¹ A21ᵀ
            let l21t = l11
                .solve_lower_triangular(&a.view((j + jb, j), (rest, jb)).transpose())
                .ok_or(j)?;
            let l21 = l21t.transpose();
            a.view_mut((j + jb, j + jb), (rest, rest)).gemm(-1.0, &l21, &l21t, 1.0);
            a.view_mut((j + jb, j), (rest, jb)).copy_from(&l21);
        }
        j += jb;
    }
    Ok(a.lower_triangle())
}

/// Solves `S X = B` for symmetric positive-definite `S`.
///
/// The system is Jacobi-scaled before the Cholesky factorization.
pub fn solve_spd(s: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
    if s.nrows() != b.nrows() {
        return Err(NumericsError::DimensionMismatch(format!(
            "system is {}x{} but right-hand side has {} rows",
            s.nrows(),
            s.ncols(),
            b.nrows()
        )));
    }
    ensure_symmetric(s, "system matrix")?;
    let d = jacobi_scaling(s).map_err(|pivot| NumericsError::NotPositiveDefinite { pivot })?;
    let scaled = symmetrize(&scale_sym(s, &d));
    let l = cholesky_lower(scaled).map_err(|pivot| NumericsError::NotPositiveDefinite { pivot })?;
    let mut rhs = b.clone();
    for (i, mut row) in rhs.row_iter_mut().enumerate() {
        row *= d[i];
    }
    let half = l.solve_lower_triangular(&rhs).ok_or(NumericsError::NotPositiveDefinite { pivot: 0 })?;
    let mut x = l
        .tr_solve_lower_triangular(&half)
        .ok_or(NumericsError::NotPositiveDefinite { pivot: 0 })?;
    for (i, mut row) in x.row_iter_mut().enumerate() {
        row *= d[i];
    }
    Ok(x)
}

/// Computes the `k` smallest solutions of `S a = λ (B + ridge·I) a`.
///
/// When `S` is positive definite the pencil is reduced through the Cholesky
/// factor of (Jacobi-scaled) `S` and the largest reciprocal eigenvalues are
/// taken, which stays accurate when `B` is rank deficient. Otherwise it is
/// reduced through the factor of the regularized right-hand matrix. Columns
/// of the result have unit `(B + ridge·I)`-norm and their largest-magnitude
/// entry is positive.
pub fn sym_geig_smallest(
    s: &DenseMatrix,
    b: &DenseMatrix,
    k: usize,
    ridge: f64,
) -> Result<EigenPairs, NumericsError> {
    let d = s.nrows();
    if b.nrows() != d || b.ncols() != d || s.ncols() != d {
        return Err(NumericsError::DimensionMismatch(format!(
            "pencil matrices must both be {d}x{d}, got {}x{} and {}x{}",
            s.nrows(),
            s.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if k == 0 || k > d {
        return Err(NumericsError::DimensionMismatch(format!(
            "requested {k} eigenpairs from a {d}-dimensional pencil"
        )));
    }
    ensure_symmetric(s, "left pencil matrix")?;
    ensure_symmetric(b, "right pencil matrix")?;
    check_finite(s)?;
    check_finite(b)?;

    let mut reg = b.clone();
    for i in 0..d {
        reg[(i, i)] += ridge;
    }
    let (mut vectors, values) = match reduce(s, &reg) {
        Some(Reduced { vectors, values }) => {
            // S a = λ R a  ⇔  R a = (1/λ) S a; the largest 1/λ come last
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
            order.truncate(k);
            let mut picked = DenseMatrix::zeros(d, k);
            let mut lambdas = Vec::with_capacity(k);
            for (j, &idx) in order.iter().enumerate() {
                let mu = values[idx];
                if !(mu > 0.0) {
                    return Err(NumericsError::SingularPencil);
                }
                picked.set_column(j, &(vectors.column(idx) / mu.sqrt()));
                lambdas.push(1.0 / mu);
            }
            (picked, lambdas)
        }
        None => {
            let Reduced { vectors, values } = reduce(&reg, s).ok_or(NumericsError::SingularPencil)?;
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
            order.truncate(k);
            let mut picked = DenseMatrix::zeros(d, k);
            for (j, &idx) in order.iter().enumerate() {
                picked.set_column(j, &vectors.column(idx));
            }
            (picked, order.iter().map(|&i| values[i]).collect())
        }
    };
    for mut col in vectors.column_iter_mut() {
        let mut pivot = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(EigenPairs { vectors, values })
}

struct Reduced {
    vectors: DenseMatrix,
    values: Vec<f64>,
}

// All solutions of `other v = μ factor v` with `vᵀ factor v = 1`, via the
// Cholesky factor of the Jacobi-scaled `factor`. `None` if `factor` is not
// numerically positive definite.
fn reduce(factor: &DenseMatrix, other: &DenseMatrix) -> Option<Reduced> {
    let scaling = jacobi_scaling(factor).ok()?;
    let l = cholesky_lower(symmetrize(&scale_sym(factor, &scaling))).ok()?;
    let other = symmetrize(&scale_sym(other, &scaling));
    // C = L⁻¹ other L⁻ᵀ
    let half = l.solve_lower_triangular(&other)?;
    let reduced = symmetrize(&l.solve_lower_triangular(&half.transpose())?);
    if reduced.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let eig = SymmetricEigen::new(reduced);
    let mut vectors = l.tr_solve_lower_triangular(&eig.eigenvectors)?;
    for (i, mut row) in vectors.row_iter_mut().enumerate() {
        row *= scaling[i];
    }
    Some(Reduced {
        vectors,
        values: eig.eigenvalues.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Small portable LCG so unit tests do not depend on the data module.
    pub(crate) struct TestRng(u64);
    impl TestRng {
        pub fn new(seed: u64) -> Self {
            Self(seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
        }
        pub fn uniform(&mut self) -> f64 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((self.0 >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
        }
        pub fn matrix(&mut self, r: usize, c: usize) -> DenseMatrix {
            DenseMatrix::from_fn(r, c, |_, _| self.uniform())
        }
    }

    fn random_spd(rng: &mut TestRng, d: usize) -> DenseMatrix {
        let r = rng.matrix(d, d);
        r.transpose() * &r + DenseMatrix::identity(d, d)
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let b = DenseMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = solve_spd(&DenseMatrix::identity(3, 3), &b).unwrap();
        assert!((x - b).amax() < 1e-15);
    }

    #[test]
    fn solve_diagonal() {
        let s = DenseMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let b = DenseMatrix::from_column_slice(2, 1, &[2.0, 4.0]);
        let x = solve_spd(&s, &b).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15 && (x[(1, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn solve_random_spd_residual() {
        let mut rng = TestRng::new(7);
        for _ in 0..100 {
            let s = random_spd(&mut rng, 8);
            let b = rng.matrix(8, 3);
            let x = solve_spd(&s, &b).unwrap();
            let res = (&s * &x - &b).norm() / b.norm();
            assert!(res <= 1e-8, "residual {res}");
        }
    }

    #[test]
    fn blocked_factor_spans_several_blocks() {
        let mut rng = TestRng::new(19);
        let s = random_spd(&mut rng, 150);
        let l = cholesky_lower(s.clone()).unwrap();
        assert!((&l * l.transpose() - &s).amax() <= 1e-10 * s.amax());
        let b = rng.matrix(150, 2);
        let x = solve_spd(&s, &b).unwrap();
        assert!((&s * &x - &b).norm() / b.norm() <= 1e-8);

        // leading 140x140 block is PD, the full matrix is not
        let mut bad = DenseMatrix::identity(150, 150);
        bad[(140, 141)] = 2.0;
        bad[(141, 140)] = 2.0;
        assert_eq!(cholesky_lower(bad), Err(141));
    }

    #[test]
    fn solve_rejects_indefinite() {
        let s = DenseMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let b = DenseMatrix::from_element(2, 1, 1.0);
        assert_eq!(
            solve_spd(&s, &b),
            Err(NumericsError::NotPositiveDefinite { pivot: 1 })
        );
        let s = DenseMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert_eq!(
            solve_spd(&s, &b),
            Err(NumericsError::NotPositiveDefinite { pivot: 0 })
        );
    }

    #[test]
    fn solve_dimension_mismatch() {
        let s = DenseMatrix::identity(3, 3);
        let b = DenseMatrix::zeros(2, 1);
        assert!(matches!(solve_spd(&s, &b), Err(NumericsError::DimensionMismatch(_))));
    }

    #[test]
    fn geig_diagonal_pencil() {
        let s = DenseMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let pairs = sym_geig_smallest(&s, &DenseMatrix::identity(2, 2), 1, 0.0).unwrap();
        assert!((pairs.values[0] - 1.0).abs() < 1e-14);
        assert!(pairs.vectors[(0, 0)].abs() < 1e-14);
        assert!((pairs.vectors[(1, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn geig_identical_pencil() {
        let mut rng = TestRng::new(3);
        let b = random_spd(&mut rng, 6);
        let pairs = sym_geig_smallest(&b, &b, 6, 0.0).unwrap();
        for v in pairs.values {
            assert!((v - 1.0).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn geig_random_residual_and_orthonormality() {
        let mut rng = TestRng::new(11);
        for _ in 0..20 {
            let r = rng.matrix(10, 10);
            let s = symmetrize(&(&r + r.transpose()));
            let b = random_spd(&mut rng, 10);
            let pairs = sym_geig_smallest(&s, &b, 3, 0.0).unwrap();
            let bound = 1e-8 * (s.norm() + b.norm());
            for j in 0..3 {
                let a = pairs.vectors.column(j);
                let res = (&s * a - (&b * a) * pairs.values[j]).norm();
                assert!(res <= bound, "residual {res} > {bound}");
            }
            assert!(pairs.values.windows(2).all(|w| w[0] <= w[1]));
            let gram = pairs.vectors.transpose() * &b * &pairs.vectors;
            assert!((gram - DenseMatrix::identity(3, 3)).amax() < 1e-8);
            for col in pairs.vectors.column_iter() {
                let imax = col.iamax();
                assert!(col[imax] > 0.0);
            }
        }
    }

    #[test]
    fn geig_rank_deficient_right_matrix() {
        // more features than samples: B has rank 5 in 12 dimensions
        let mut rng = TestRng::new(17);
        let x = rng.matrix(12, 6);
        let mean = x.column_mean();
        let xc = DenseMatrix::from_fn(12, 6, |r, c| x[(r, c)] - mean[r]);
        let b = symmetrize(&(&xc * xc.transpose()));
        let s = random_spd(&mut rng, 12);
        let ridge = default_ridge(&b);
        let pairs = sym_geig_smallest(&s, &b, 4, ridge).unwrap();
        let reg = &b + DenseMatrix::identity(12, 12) * ridge;
        let scale = s.norm() + b.norm();
        for (j, &lambda) in pairs.values.iter().enumerate() {
            let v = pairs.vectors.column(j);
            assert!((&s * v - &reg * v * lambda).norm() <= 1e-8 * scale);
        }
        let gram = pairs.vectors.transpose() * &reg * &pairs.vectors;
        assert!((gram - DenseMatrix::identity(4, 4)).amax() <= 1e-8);
        assert!(pairs.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn geig_singular_pencil() {
        let s = DenseMatrix::identity(2, 2);
        let b = DenseMatrix::zeros(2, 2);
        assert_eq!(sym_geig_smallest(&s, &b, 1, 0.0), Err(NumericsError::SingularPencil));
        assert!(sym_geig_smallest(&s, &b, 1, 1e-3).is_ok());
    }

    #[test]
    fn geig_rejects_asymmetric() {
        let s = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let b = DenseMatrix::identity(2, 2);
        assert!(matches!(
            sym_geig_smallest(&s, &b, 1, 0.0),
            Err(NumericsError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn l21_examples() {
        assert_eq!(l21_norm(&DenseMatrix::zeros(3, 3)), 0.0);
        let m = DenseMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 0.0]);
        assert_eq!(l21_norm(&m), 5.0);
    }

    #[test]
    fn l21_matches_direct_summation() {
        let mut rng = TestRng::new(5);
        let m = rng.matrix(5, 4);
        let mut expected = 0.0;
        for i in 0..5 {
            let mut sq = 0.0;
            for j in 0..4 {
                sq += m[(i, j)] * m[(i, j)];
            }
            expected += sq.sqrt();
        }
        assert!((l21_norm(&m) - expected).abs() < 1e-14);
    }

    #[test]
    fn default_ridge_scales_with_trace() {
        let b = DenseMatrix::identity(4, 4) * 8.0;
        assert!((default_ridge(&b) - 8e-9).abs() < 1e-24);
        assert_eq!(default_ridge(&DenseMatrix::zeros(3, 3)), DEFAULT_RIDGE_SCALE);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn l21_dominates_frobenius(vals in proptest::collection::vec(-10.0f64..10.0, 12)) {
                let m = DenseMatrix::from_row_slice(4, 3, &vals);
                let l21 = l21_norm(&m);
                prop_assert!(l21 + 1e-12 >= m.norm());
                let nonzero_rows = m.row_iter().filter(|r| r.norm() > 0.0).count();
                if nonzero_rows <= 1 {
                    prop_assert!((l21 - m.norm()).abs() < 1e-12);
                }
            }
        }
    }
}
