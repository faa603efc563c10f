//! Small dense linear-algebra helpers shared by the solver and the theory code.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_CAP: f64 = 1e-4;
const PIVOT_FLOOR: f64 = 100.0;

/// Cholesky factor of `m + jitter * I`.
pub(crate) struct JitteredCholesky {
    chol: Cholesky<f64, Dyn>,
    pub jitter: f64,
}

impl JitteredCholesky {
    /// Factor `m`, escalating diagonal jitter on failure.
    ///
    /// The bare matrix is tried first. After that the jitter starts at
    /// `1e-10 * trace / dim` and grows tenfold up to `1e-4 * trace / dim`.
    /// A factorization counts as failed when some squared pivot falls below
    /// `PIVOT_FLOOR * eps` times its diagonal entry. The test is per row, so a
    /// block-diagonal matrix passes exactly when each block does.
    pub fn new(m: &DMatrix<f64>, context: &'static str) -> Result<Self> {
        let dim = m.nrows();
        if dim == 0 {
            return Ok(Self {
                chol: Cholesky::new_unchecked(DMatrix::zeros(0, 0)),
                jitter: 0.0,
            });
        }
        let trace = m.trace();
        let scale = if trace > 0.0 { trace / dim as f64 } else { 1.0 };

        if let Some(chol) = try_factor(m, 0.0) {
            return Ok(Self { chol, jitter: 0.0 });
        }
        let mut jitter = JITTER_START * scale;
        while jitter <= JITTER_CAP * scale * (1.0 + 1e-12) {
            if let Some(chol) = try_factor(m, jitter) {
                log::debug!("{context}: factorized with jitter {jitter:e}");
                return Ok(Self { chol, jitter });
            }
            jitter *= 10.0;
        }
        Err(Error::Factorization {
            context,
            jitter: jitter / 10.0,
        })
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// `C^{-1} b` for the lower-triangular factor `C`.
    pub fn solve_lower(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol
            .l_dirty()
            .solve_lower_triangular(b)
            .expect("Cholesky factor has a nonzero diagonal")
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }
}

fn try_factor(m: &DMatrix<f64>, jitter: f64) -> Option<Cholesky<f64, Dyn>> {
    let dim = m.nrows();
    let mut a = m.clone();
    for i in 0..dim {
        a[(i, i)] += jitter;
    }
    if !a.iter().all(|v| v.is_finite()) {
        return None;
    }
    let diag: Vec<f64> = (0..dim).map(|i| a[(i, i)]).collect();
    let chol = Cholesky::new(a)?;
    let l = chol.l_dirty();
    if (0..dim).all(|i| l[(i, i)] * l[(i, i)] >= PIVOT_FLOOR * f64::EPSILON * diag[i] && diag[i] > 0.0) {
        Some(chol)
    } else {
        None
    }
}

/// Largest absolute difference between `m` and its transpose.
pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub(crate) fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Copy of the rows of `m` listed in `idx`, in order.
pub(crate) fn select_rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |r, c| m[(idx[r], c)])
}
