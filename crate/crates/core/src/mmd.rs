//! Coefficient matrices for the marginal, conditional and repulsive MMD
//! terms, and their composite `M* = M0 + Σ_c M_c − M_rep`.
//!
//! Samples are ordered source first (`0..n_s`) then target. Every term is a
//! sum of matrices `u uᵀ` with `u = 1_P/|P| − 1_Q/|Q|` for two disjoint
//! sample groups `P` and `Q`, so each entry depends only on which
//! (domain, class) group its row and column fall into. The builders
//! accumulate a small group-by-group table and expand it once.

use thiserror::Error;

use crate::numerics::DenseMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MmdError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// `M0`, `Σ_c M_c`, `M_rep` and `M*` for one labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct MmdWeights {
    pub m0: DenseMatrix,
    pub mc_sum: DenseMatrix,
    pub m_rep: DenseMatrix,
    pub mstar: DenseMatrix,
}

// Group table over 2C (domain, class) groups: source class c -> c,
// target class c -> C + c (0-based classes).
struct GroupTable {
    classes: usize,
    counts: Vec<usize>,
    weights: Vec<f64>,
}

impl GroupTable {
    fn new(labels_s: &[usize], pseudo_t: &[usize], classes: usize) -> Self {
        let mut counts = vec![0; 2 * classes];
        for &l in labels_s {
            if (1..=classes).contains(&l) {
                counts[l - 1] += 1;
            }
        }
        for &l in pseudo_t {
            if (1..=classes).contains(&l) {
                counts[classes + l - 1] += 1;
            }
        }
        Self {
            classes,
            counts,
            weights: vec![0.0; 4 * classes * classes],
        }
    }

    fn source(&self, c: usize) -> usize {
        c
    }

    fn target(&self, c: usize) -> usize {
        self.classes + c
    }

    /// Adds `u uᵀ` for the pair of groups `(p, q)`; no-op if either is empty.
    fn add_pair(&mut self, p: usize, q: usize) {
        let (np, nq) = (self.counts[p], self.counts[q]);
        if np == 0 || nq == 0 {
            return;
        }
        let g = 2 * self.classes;
        let a = 1.0 / np as f64;
        let b = 1.0 / nq as f64;
        self.weights[p * g + p] += a * a;
        self.weights[q * g + q] += b * b;
        self.weights[p * g + q] -= a * b;
        self.weights[q * g + p] -= a * b;
    }

    fn expand(&self, labels_s: &[usize], pseudo_t: &[usize]) -> DenseMatrix {
        let groups: Vec<Option<usize>> = labels_s
            .iter()
            .map(|&l| (1..=self.classes).contains(&l).then(|| self.source(l - 1)))
            .chain(
                pseudo_t
                    .iter()
                    .map(|&l| (1..=self.classes).contains(&l).then(|| self.target(l - 1))),
            )
            .collect();
        let n = groups.len();
        let g = 2 * self.classes;
        DenseMatrix::from_fn(n, n, |i, j| match (groups[i], groups[j]) {
            (Some(a), Some(b)) => self.weights[a * g + b],
            _ => 0.0,
        })
    }
}

/// Marginal MMD matrix: `1/n_s²` on the source block, `1/n_t²` on the target
/// block and `−1/(n_s n_t)` across domains.
pub fn build_marginal(n_s: usize, n_t: usize) -> DenseMatrix {
    let n = n_s + n_t;
    let ss = 1.0 / (n_s * n_s) as f64;
    let tt = 1.0 / (n_t * n_t) as f64;
    let st = -1.0 / (n_s * n_t) as f64;
    DenseMatrix::from_fn(n, n, |i, j| match (i < n_s, j < n_s) {
        (true, true) => ss,
        (false, false) => tt,
        _ => st,
    })
}

/// `Σ_c M_c` over classes `1..=classes`. A class empty in either domain adds
/// nothing. Labels outside `1..=classes` belong to no sub-domain.
pub fn build_conditional(labels_s: &[usize], pseudo_t: &[usize], classes: usize) -> DenseMatrix {
    let mut table = GroupTable::new(labels_s, pseudo_t, classes);
    for c in 0..classes {
        table.add_pair(table.source(c), table.target(c));
    }
    table.expand(labels_s, pseudo_t)
}

/// Repulsive matrix `M_{S→S} + M_{S→T} + M_{T→S}`, summed over all ordered
/// class pairs `(c, r)` with `r ≠ c`.
pub fn build_repulsive(labels_s: &[usize], pseudo_t: &[usize], classes: usize) -> DenseMatrix {
    let mut table = GroupTable::new(labels_s, pseudo_t, classes);
    for c in 0..classes {
        for r in (0..classes).filter(|&r| r != c) {
            table.add_pair(table.source(c), table.source(r));
            table.add_pair(table.source(c), table.target(r));
            table.add_pair(table.target(c), table.source(r));
        }
    }
    table.expand(labels_s, pseudo_t)
}

fn check_square(m: &DenseMatrix, n: usize, what: &str) -> Result<(), MmdError> {
    if m.shape() != (n, n) {
        return Err(MmdError::DimensionMismatch(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// `M* = m0 + mc_sum − m_rep`.
pub fn assemble_mstar(
    m0: DenseMatrix,
    mc_sum: DenseMatrix,
    m_rep: DenseMatrix,
) -> Result<MmdWeights, MmdError> {
    let n = m0.nrows();
    check_square(&m0, n, "M0")?;
    check_square(&mc_sum, n, "conditional sum")?;
    check_square(&m_rep, n, "repulsive matrix")?;
    let mstar = &m0 + &mc_sum - &m_rep;
    Ok(MmdWeights {
        m0,
        mc_sum,
        m_rep,
        mstar,
    })
}

/// Builds every constituent for the given source labels and target
/// pseudo-labels.
pub fn build_weights(labels_s: &[usize], pseudo_t: &[usize], classes: usize) -> MmdWeights {
    let m0 = build_marginal(labels_s.len(), pseudo_t.len());
    let mc = build_conditional(labels_s, pseudo_t, classes);
    let rep = build_repulsive(labels_s, pseudo_t, classes);
    assemble_mstar(m0, mc, rep).expect("builders agree on n")
}

/// `trace(Aᵀ X M Xᵀ A)`.
pub fn mmd_value(x: &DenseMatrix, a: &DenseMatrix, m: &DenseMatrix) -> Result<f64, MmdError> {
    if a.nrows() != x.nrows() {
        return Err(MmdError::DimensionMismatch(format!(
            "projection has {} rows but data has {} features",
            a.nrows(),
            x.nrows()
        )));
    }
    check_square(m, x.ncols(), "MMD matrix")?;
    let p = a.transpose() * x;
    let pm = &p * m;
    Ok(pm.component_mul(&p).sum())
}
