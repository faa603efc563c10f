//! Data adjacency graphs and their Laplacians.
//!
//! Training uses the normalized Laplacian `V^{-1/2} (V - W) V^{-1/2}` over all
//! labeled and unlabeled points. The complexity analysis in [`crate::theory`]
//! instead uses the unnormalized Laplacian of the graph over unlabeled points
//! only ([`unlabeled_laplacian`]). Callers pick one explicitly.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, invalid, Result};
use crate::kernel::median_width;
use crate::linalg::{all_finite, asymmetry, select_rows};

/// Default neighbor count for the k-NN graph.
pub const DEFAULT_NEIGHBORS: usize = 6;

/// How to build the adjacency graph of one view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConfig {
    pub k: usize,
    /// Heat-kernel width; `None` means the median pairwise distance of the
    /// points the graph is built on.
    pub sigma: Option<f64>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_NEIGHBORS,
            sigma: None,
        }
    }
}

impl GraphConfig {
    /// The width to use for `x`, falling back to the median distance.
    pub fn resolve_sigma(&self, x: &DMatrix<f64>) -> Result<f64> {
        match self.sigma {
            Some(s) => Ok(s),
            None => {
                let s = median_width(x)?;
                if s > 0.0 {
                    Ok(s)
                } else {
                    Err(invalid("all points coincide; set the graph width explicitly"))
                }
            }
        }
    }
}

/// Adjacency matrix with its degree vector and Laplacians.
#[derive(Debug, Clone)]
pub struct LaplacianBundle {
    pub adjacency: DMatrix<f64>,
    pub degree: DVector<f64>,
    pub laplacian: DMatrix<f64>,
    pub normalized: DMatrix<f64>,
}

/// Symmetrized k-nearest-neighbor heat-kernel adjacency.
///
/// `W_ij = exp(-|x_i - x_j|^2 / 2 sigma^2)` when `j` is among the `k` nearest
/// neighbors of `i` or vice versa, and 0 otherwise. Distance ties are broken
/// by row index.
pub fn adjacency(x: &DMatrix<f64>, k: usize, sigma: f64) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if k == 0 {
        return Err(invalid("neighbor count k must be at least 1"));
    }
    if k >= n {
        return Err(invalid(format!("neighbor count k = {k} needs more than {k} points, got {n}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("graph width must be positive, got {sigma}")));
    }
    let mut d2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (x.row(i) - x.row(j)).norm_squared();
            d2[(i, j)] = d;
            d2[(j, i)] = d;
        }
    }
    let mut w = DMatrix::zeros(n, n);
    let denom = 2.0 * sigma * sigma;
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| d2[(i, a)].total_cmp(&d2[(i, b)]).then(a.cmp(&b)));
        for &j in &order[..k] {
            let v = (-d2[(i, j)] / denom).exp();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(w)
}

/// Degree matrix, Laplacian and normalized Laplacian of `w`.
///
/// Isolated vertices get a zero row and column in the normalized Laplacian.
pub fn laplacian(w: &DMatrix<f64>) -> Result<LaplacianBundle> {
    if !w.is_square() {
        return Err(invalid(format!("adjacency must be square, got {}x{}", w.nrows(), w.ncols())));
    }
    if !all_finite(w) {
        return Err(invalid("adjacency contains non-finite entries"));
    }
    let asym = asymmetry(w);
    if asym > 1e-12 {
        return Err(invalid(format!("adjacency is asymmetric (max difference {asym:e})")));
    }
    if let Some(v) = w.iter().find(|&&v| v < 0.0) {
        return Err(invalid(format!("adjacency has a negative entry {v}")));
    }
    let n = w.nrows();
    let degree = DVector::from_fn(n, |i, _| w.row(i).sum());
    let mut lap = -w.clone();
    for i in 0..n {
        lap[(i, i)] += degree[i];
    }
    let inv_sqrt = degree.map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 });
    let normalized = DMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * lap[(i, j)] * inv_sqrt[j]);
    Ok(LaplacianBundle {
        adjacency: w.clone(),
        degree,
        laplacian: lap,
        normalized,
    })
}

/// Build the adjacency of `x` under `cfg` and return its Laplacians.
pub fn build(x: &DMatrix<f64>, cfg: &GraphConfig) -> Result<LaplacianBundle> {
    let sigma = cfg.resolve_sigma(x)?;
    laplacian(&adjacency(x, cfg.k, sigma)?)
}

/// Quadratic form `f' L f`.
pub fn manifold_energy(f: &DVector<f64>, l: &DMatrix<f64>) -> Result<f64> {
    check_dim("manifold energy", l.nrows(), f.len())?;
    check_dim("manifold energy", l.ncols(), f.len())?;
    Ok(f.dot(&(l * f)))
}

/// Unnormalized Laplacian of the graph over the rows `unlabeled_idx` of `x`.
///
/// With fewer than `k + 1` points the neighbor count is reduced to `u - 1`;
/// a single point yields `[[0]]`.
pub fn unlabeled_laplacian(x: &DMatrix<f64>, unlabeled_idx: &[usize], k: usize, sigma: f64) -> Result<DMatrix<f64>> {
    if let Some(&bad) = unlabeled_idx.iter().find(|&&i| i >= x.nrows()) {
        return Err(invalid(format!("unlabeled index {bad} out of range for {} rows", x.nrows())));
    }
    let u = unlabeled_idx.len();
    if k == 0 {
        return Err(invalid("neighbor count k must be at least 1"));
    }
    if u <= 1 {
        return Ok(DMatrix::zeros(u, u));
    }
    let sub = select_rows(x, unlabeled_idx);
    let w = adjacency(&sub, k.min(u - 1), sigma)?;
    Ok(laplacian(&w)?.laplacian)
}
