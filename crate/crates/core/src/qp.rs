//! The training quadratic program.
//!
//! With kernel expansions `f_v = K_v alpha_v` over all `l + u` training points,
//! training minimizes
//!
//! ```text
//! (1/2l) sum_i (xi_1^i + xi_2^i) + a' Q a
//! s.t.   y_i (K_v alpha_v)_i >= 1 - xi_v^i,  xi_v^i >= 0,   i <= l, v = 1, 2
//! ```
//!
//! over the stacked coefficients `a = (alpha_1; alpha_2)`, where `Q` collects
//! the norm, manifold and view-disagreement penalties ([`assemble`]).
//!
//! Writing `c(lambda) = D lambda` with `D = diag(K_1l' Y, K_2l' Y)`,
//! stationarity in `a` gives `a = Q^{-1} c / 2`, and stationarity in the slacks
//! bounds each multiplier by `1/2l`. The dual is
//!
//! ```text
//! max  1' lambda - (1/4) lambda' G lambda,   G = D' Q^{-1} D,   0 <= lambda <= 1/2l
//! ```
//!
//! which [`DualProblem::solve`] maximizes by projected gradient ascent.
//! The single-view variant drops the second view and the disagreement term.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{all_finite, symmetrize, JitteredCholesky};

/// Regularization coefficients for the norm, manifold and view-disagreement
/// terms. The manifold and disagreement coefficients already include the
/// `1/(l+u)^2` and `1/(l+u)` normalizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

impl Hyperparams {
    pub fn new(gamma1: f64, gamma2: f64, gamma3: f64) -> Result<Self> {
        let hp = Self {
            gamma1,
            gamma2,
            gamma3,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma1", self.gamma1), ("gamma2", self.gamma2), ("gamma3", self.gamma3)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            gamma1: self.gamma1 * factor,
            gamma2: self.gamma2 * factor,
            gamma3: self.gamma3 * factor,
        }
    }
}

/// Symmetric matrix `Q` over stacked expansion coefficients.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    pub q: DMatrix<f64>,
    /// Number of views stacked in `q` (1 or 2).
    pub views: usize,
    /// Training points per view, `l + u`.
    pub n: usize,
    features: Option<FeatureForm>,
}

/// Numerical rank cutoff for Gram eigenvalues, relative to the largest.
const RANK_TOL: f64 = 1e-12;

/// `K = Phi Phi'` from the eigendecomposition of a Gram matrix, keeping the
/// eigenvalues above `RANK_TOL` times the largest.
#[derive(Debug, Clone)]
struct FeatureMap {
    gram: DMatrix<f64>,
    phi: DMatrix<f64>,
    /// `U diag(s)^{-1/2}`: maps feature weights `w` to coefficients with `K alpha = Phi w`.
    psi: DMatrix<f64>,
    eig: DVector<f64>,
    manifold: DMatrix<f64>,
}

impl FeatureMap {
    fn new(k: &DMatrix<f64>, lap: &DMatrix<f64>) -> Self {
        let mut sym = k.clone();
        symmetrize(&mut sym);
        let e = sym.symmetric_eigen();
        let top = e.eigenvalues.max().max(0.0);
        let keep: Vec<usize> = (0..k.nrows()).filter(|&j| e.eigenvalues[j] > RANK_TOL * top).collect();
        let n = k.nrows();
        let phi = DMatrix::from_fn(n, keep.len(), |i, c| e.eigenvectors[(i, keep[c])] * e.eigenvalues[keep[c]].sqrt());
        let psi = DMatrix::from_fn(n, keep.len(), |i, c| e.eigenvectors[(i, keep[c])] / e.eigenvalues[keep[c]].sqrt());
        let eig = DVector::from_iterator(keep.len(), keep.iter().map(|&j| e.eigenvalues[j]));
        let manifold = sandwich(&phi, lap);
        Self {
            gram: k.clone(),
            phi,
            psi,
            eig,
            manifold,
        }
    }

    fn rank(&self) -> usize {
        self.eig.len()
    }
}

/// The penalty in feature coordinates `w_v`, with `alpha_v = Psi_v w_v`:
/// `P = blockdiag(g1 I + g2 Phi' L Phi + g3 Phi' Phi) - g3 (Phi_1' Phi_2 off the diagonal)`.
/// `P >= g1 I`, and the dual matrix built from it is a Gram matrix.
#[derive(Debug, Clone)]
struct FeatureForm {
    maps: Vec<FeatureMap>,
    p: DMatrix<f64>,
}

impl FeatureForm {
    fn matches(&self, labeled_grams: &[&DMatrix<f64>], l: usize) -> bool {
        self.maps.len() == labeled_grams.len()
            && self
                .maps
                .iter()
                .zip(labeled_grams)
                .all(|(m, kl)| kl.nrows() == l && kl.ncols() == m.gram.ncols() && m.gram.rows(0, l) == **kl)
    }

    /// `(coef, G, jitter)` for labels `y`.
    fn solve_labels(&self, y: &[f64], n: usize) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
        let l = y.len();
        let views = self.maps.len();
        let dim = self.p.nrows();
        let mut a = DMatrix::zeros(dim, views * l);
        let mut offset = 0;
        for (v, m) in self.maps.iter().enumerate() {
            for i in 0..l {
                for c in 0..m.rank() {
                    a[(offset + c, v * l + i)] = m.phi[(i, c)] * y[i];
                }
            }
            offset += m.rank();
        }
        let factor = JitteredCholesky::new(&self.p, "quadratic form")?;
        let z = factor.solve_lower(&a);
        let mut g = z.transpose() * &z;
        symmetrize(&mut g);
        let w = factor.solve(&a);
        let mut coef = DMatrix::zeros(views * n, views * l);
        let mut offset = 0;
        for (v, m) in self.maps.iter().enumerate() {
            let block = &m.psi * w.rows(offset, m.rank());
            coef.view_mut((v * n, 0), (n, views * l)).copy_from(&block);
            offset += m.rank();
        }
        Ok((coef, g, factor.jitter))
    }
}

impl QuadraticForm {
    /// `a' Q a` for stacked coefficients.
    pub fn value(&self, stacked: &DVector<f64>) -> f64 {
        stacked.dot(&(&self.q * stacked))
    }
}

/// Products of Gram matrices and Laplacians that do not depend on the
/// hyperparameters; [`QuadraticTerms::assemble`] combines them cheaply.
#[derive(Debug, Clone)]
pub struct QuadraticTerms {
    n: usize,
    grams: Vec<DMatrix<f64>>,
    maps: Vec<FeatureMap>,
    klk: Vec<DMatrix<f64>>,
    kk: Vec<DMatrix<f64>>,
    cross: Option<DMatrix<f64>>,
    feature_cross: Option<DMatrix<f64>>,
}

impl QuadraticTerms {
    pub fn two_view(k1: &DMatrix<f64>, k2: &DMatrix<f64>, l1: &DMatrix<f64>, l2: &DMatrix<f64>) -> Result<Self> {
        let n = k1.nrows();
        for m in [k1, k2, l1, l2] {
            check_dim("quadratic form rows", n, m.nrows())?;
            check_dim("quadratic form columns", n, m.ncols())?;
            if !all_finite(m) {
                return Err(invalid("non-finite entry in a Gram matrix or Laplacian"));
            }
        }
        let maps = vec![FeatureMap::new(k1, l1), FeatureMap::new(k2, l2)];
        let feature_cross = maps[0].phi.transpose() * &maps[1].phi;
        Ok(Self {
            n,
            klk: vec![sandwich(k1, l1), sandwich(k2, l2)],
            kk: vec![square(k1), square(k2)],
            grams: vec![k1.clone(), k2.clone()],
            cross: Some(k1 * k2),
            maps,
            feature_cross: Some(feature_cross),
        })
    }

    pub fn single_view(k: &DMatrix<f64>, l: &DMatrix<f64>) -> Result<Self> {
        let n = k.nrows();
        for m in [k, l] {
            check_dim("quadratic form rows", n, m.nrows())?;
            check_dim("quadratic form columns", n, m.ncols())?;
            if !all_finite(m) {
                return Err(invalid("non-finite entry in a Gram matrix or Laplacian"));
            }
        }
        Ok(Self {
            n,
            klk: vec![sandwich(k, l)],
            kk: Vec::new(),
            grams: vec![k.clone()],
            cross: None,
            maps: vec![FeatureMap::new(k, l)],
            feature_cross: None,
        })
    }

    pub fn views(&self) -> usize {
        self.grams.len()
    }

    pub fn assemble(&self, hp: &Hyperparams) -> QuadraticForm {
        let n = self.n;
        let views = self.views();
        let mut q = DMatrix::zeros(views * n, views * n);
        let ranks: Vec<usize> = self.maps.iter().map(FeatureMap::rank).collect();
        let total: usize = ranks.iter().sum();
        let mut p = DMatrix::zeros(total, total);
        let mut offset = 0;
        for (v, map) in self.maps.iter().enumerate() {
            let r = map.rank();
            let mut block = &self.grams[v] * hp.gamma1 + &self.klk[v] * hp.gamma2;
            let mut pblock = &map.manifold * hp.gamma2;
            for c in 0..r {
                pblock[(c, c)] += hp.gamma1;
            }
            if let Some(kk) = self.kk.get(v) {
                block += kk * hp.gamma3;
                for c in 0..r {
                    pblock[(c, c)] += hp.gamma3 * map.eig[c];
                }
            }
            q.view_mut((v * n, v * n), (n, n)).copy_from(&block);
            p.view_mut((offset, offset), (r, r)).copy_from(&pblock);
            offset += r;
        }
        if let (Some(cross), Some(fc)) = (&self.cross, &self.feature_cross) {
            let off = cross * (-hp.gamma3);
            q.view_mut((0, n), (n, n)).copy_from(&off);
            q.view_mut((n, 0), (n, n)).copy_from(&off.transpose());
            let foff = fc * (-hp.gamma3);
            p.view_mut((0, ranks[0]), (ranks[0], ranks[1])).copy_from(&foff);
            p.view_mut((ranks[0], 0), (ranks[1], ranks[0])).copy_from(&foff.transpose());
        }
        QuadraticForm {
            q,
            views,
            n,
            features: Some(FeatureForm {
                maps: self.maps.clone(),
                p,
            }),
        }
    }
}

fn sandwich(k: &DMatrix<f64>, l: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = k.transpose() * (l * k);
    symmetrize(&mut m);
    m
}

fn square(k: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = k.transpose() * k;
    symmetrize(&mut m);
    m
}

/// Two-view quadratic form.
///
/// Diagonal blocks are `g1 K_v + g2 K_v L_v K_v + g3 K_v K_v` and the
/// off-diagonal block is `-g3 K_1 K_2`, so `a' Q a` equals the norm, manifold
/// and disagreement penalties of the primal.
pub fn assemble(
    k1: &DMatrix<f64>,
    k2: &DMatrix<f64>,
    l1: &DMatrix<f64>,
    l2: &DMatrix<f64>,
    hp: &Hyperparams,
) -> Result<QuadraticForm> {
    hp.validate()?;
    Ok(QuadraticTerms::two_view(k1, k2, l1, l2)?.assemble(hp))
}

/// Single-view quadratic form `g1 K + g2 K L K`.
pub fn assemble_single(k: &DMatrix<f64>, l: &DMatrix<f64>, hp: &Hyperparams) -> Result<QuadraticForm> {
    hp.validate()?;
    Ok(QuadraticTerms::single_view(k, l)?.assemble(hp))
}

/// Stopping rule for [`DualProblem::solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on the Euclidean norm of the projected gradient.
    pub tol: f64,
    pub max_iter: usize,
    /// Keep the dual value of every iterate in [`DualSolution::trace`].
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50_000,
            record_trace: false,
        }
    }
}

/// Maximizer of the box-constrained dual.
#[derive(Debug, Clone)]
pub struct DualSolution {
    /// Multipliers stacked by view, `l` per view.
    pub lambda: DVector<f64>,
    pub views: usize,
    pub l: usize,
    pub dual_value: f64,
    pub iterations: usize,
    /// Norm of the projected gradient at the returned point.
    pub kkt_residual: f64,
    /// Diagonal jitter that was needed to factor the quadratic form.
    pub jitter: f64,
    /// Dual value per iterate, starting from `lambda = 0`; empty unless requested.
    pub trace: Vec<f64>,
}

impl DualSolution {
    /// Multipliers for view `v` (0-based).
    pub fn view_lambda(&self, v: usize) -> DVector<f64> {
        self.lambda.rows(v * self.l, self.l).into_owned()
    }

    pub fn lambda1(&self) -> DVector<f64> {
        self.view_lambda(0)
    }

    pub fn lambda2(&self) -> DVector<f64> {
        self.view_lambda(1)
    }
}

/// The dual problem of one training instance.
pub struct DualProblem {
    jitter: f64,
    /// Maps `lambda` to `2 a`: `Psi P^{-1} A` in feature coordinates when the
    /// labeled Gram rows match the form, otherwise `(Q + jitter I)^{-1} D`.
    /// Shape `(views n) x (views l)`.
    coef: DMatrix<f64>,
    d: DMatrix<f64>,
    g: DMatrix<f64>,
    lipschitz: f64,
    upper: f64,
    views: usize,
    n: usize,
    l: usize,
}

impl DualProblem {
    /// `labeled_grams[v]` holds the first `l` rows of view `v`'s Gram matrix.
    pub fn new(form: &QuadraticForm, labeled_grams: &[&DMatrix<f64>], y: &[f64]) -> Result<Self> {
        Self::with_loss_weight(form, labeled_grams, y, 1.0)
    }

    /// Like [`DualProblem::new`] with the hinge-loss term multiplied by
    /// `weight`, which scales the box to `[0, weight / 2l]`.
    pub fn with_loss_weight(
        form: &QuadraticForm,
        labeled_grams: &[&DMatrix<f64>],
        y: &[f64],
        weight: f64,
    ) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(invalid(format!("loss weight must be positive, got {weight}")));
        }
        let l = y.len();
        let (views, n) = (form.views, form.n);
        if l == 0 {
            return Err(invalid("at least one labeled example is required"));
        }
        if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(invalid(format!("labels must be +1 or -1, got {bad}")));
        }
        check_dim("labeled Gram blocks", views, labeled_grams.len())?;
        for kl in labeled_grams {
            check_dim("labeled Gram rows", l, kl.nrows())?;
            check_dim("labeled Gram columns", n, kl.ncols())?;
        }
        if !all_finite(&form.q) {
            return Err(invalid("quadratic form has non-finite entries"));
        }
        let mut d = DMatrix::zeros(views * n, views * l);
        for (v, kl) in labeled_grams.iter().enumerate() {
            for i in 0..l {
                for r in 0..n {
                    d[(v * n + r, v * l + i)] = kl[(i, r)] * y[i];
                }
            }
        }
        let features = form.features.as_ref().filter(|f| f.matches(labeled_grams, l));
        let (coef, g, jitter) = match features {
            Some(f) => f.solve_labels(y, n)?,
            None => {
                let factor = JitteredCholesky::new(&form.q, "quadratic form")?;
                let coef = factor.solve(&d);
                let mut g = d.transpose() * &coef;
                symmetrize(&mut g);
                (coef, g, factor.jitter)
            }
        };
        if jitter > 0.0 {
            log::debug!("quadratic form needed jitter {jitter:e}");
        }
        let lipschitz = 0.5 * g.symmetric_eigenvalues().max().max(0.0);
        Ok(Self {
            jitter,
            coef,
            d,
            g,
            lipschitz,
            upper: weight / (2.0 * l as f64),
            views,
            n,
            l,
        })
    }

    pub fn dim(&self) -> usize {
        self.views * self.l
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    /// Diagonal jitter added to the quadratic form before factoring.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `1' lambda - lambda' G lambda / 4`.
    pub fn objective(&self, lambda: &DVector<f64>) -> f64 {
        lambda.sum() - 0.25 * lambda.dot(&(&self.g * lambda))
    }

    pub fn gradient(&self, lambda: &DVector<f64>) -> DVector<f64> {
        let mut g = &self.g * lambda * (-0.5);
        g.add_scalar_mut(1.0);
        g
    }

    fn project(&self, lambda: &mut DVector<f64>) {
        lambda.iter_mut().for_each(|v| *v = v.clamp(0.0, self.upper));
    }

    fn projected_gradient(&self, lambda: &DVector<f64>, grad: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(lambda.len(), |i, _| {
            let g = grad[i];
            if (lambda[i] <= 0.0 && g < 0.0) || (lambda[i] >= self.upper && g > 0.0) {
                0.0
            } else {
                g
            }
        })
    }

    /// Exact maximization along `p` restricted to the box: the quadratic's
    /// peak or the first bound hit, whichever comes first. Returns the step
    /// and the index that became active, if any.
    fn line_search(&self, lambda: &DVector<f64>, grad: &DVector<f64>, p: &DVector<f64>) -> Option<(f64, Option<usize>)> {
        let slope = grad.dot(p);
        if slope.is_nan() || slope <= 0.0 {
            return None;
        }
        let curv = p.dot(&(&self.g * p));
        let mut t = if curv > 0.0 { 2.0 * slope / curv } else { f64::INFINITY };
        let mut hit = None;
        for i in 0..p.len() {
            let room = if p[i] > 0.0 {
                (self.upper - lambda[i]) / p[i]
            } else if p[i] < 0.0 {
                -lambda[i] / p[i]
            } else {
                continue;
            };
            if room < t {
                t = room;
                hit = Some(i);
            }
        }
        t.is_finite().then_some((t, hit))
    }

    /// Subspace steps on the variables strictly inside the box: a Newton
    /// step on the range of the free block, then a move along its null
    /// space, where the dual is linear. Each step is an exact line search
    /// and is kept only if the dual value increases.
    fn subspace_steps(&self, mut lambda: DVector<f64>, mut value: f64) -> (DVector<f64>, f64) {
        for _ in 0..=lambda.len() {
            let grad = self.gradient(&lambda);
            let free: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 0.0 && lambda[i] < self.upper).collect();
            if free.is_empty() {
                break;
            }
            let g_ff = DMatrix::from_fn(free.len(), free.len(), |a, b| 0.5 * self.g[(free[a], free[b])]);
            let rhs = DVector::from_fn(free.len(), |a, _| grad[free[a]]);
            let svd = g_ff.clone().svd(true, true);
            let cutoff = svd.singular_values.max() * 1e-13;
            let Ok(newton) = svd.solve(&rhs, cutoff) else { break };
            let flat = &rhs - &g_ff * &newton;
            let mut moved = false;
            let mut blocked = false;
            for dir in [newton, flat] {
                let mut p = DVector::zeros(lambda.len());
                for (a, &i) in free.iter().enumerate() {
                    p[i] = dir[a];
                }
                let grad = self.gradient(&lambda);
                let Some((t, hit)) = self.line_search(&lambda, &grad, &p) else { continue };
                let mut cand = &lambda + &p * t;
                if let Some(i) = hit {
                    cand[i] = if p[i] > 0.0 { self.upper } else { 0.0 };
                    blocked = true;
                }
                self.project(&mut cand);
                let v = self.objective(&cand);
                if v > value {
                    lambda = cand;
                    value = v;
                    moved = true;
                }
            }
            if !moved || !blocked {
                break;
            }
        }
        (lambda, value)
    }

    /// Projected gradient ascent from `lambda = 0`, each step followed by
    /// subspace steps on the free variables.
    ///
    /// Gradient steps start from the Barzilai-Borwein length and are halved
    /// until the dual value does not decrease, down to `1 / Lip` where ascent
    /// is guaranteed. If even that step cannot improve the value the iterate
    /// is at the floating-point optimum and is returned.
    pub fn solve(&self, opts: &SolverOptions) -> Result<DualSolution> {
        let dim = self.dim();
        let min_step = if self.lipschitz > 0.0 { 1.0 / self.lipschitz } else { f64::MAX };
        let mut lambda = DVector::zeros(dim);
        let mut value = 0.0;
        let mut grad = self.gradient(&lambda);
        let mut trace = Vec::new();
        if opts.record_trace {
            trace.push(value);
        }
        let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
        let mut iterations = 0;
        let mut residual;
        loop {
            residual = self.projected_gradient(&lambda, &grad).norm();
            if residual <= opts.tol {
                break;
            }
            if iterations >= opts.max_iter {
                return Err(Error::NotConverged {
                    iterations,
                    residual,
                    best_value: value,
                    best_lambda: lambda.iter().copied().collect(),
                });
            }
            let mut step = match &prev {
                Some((lp, gp)) => {
                    let s = &lambda - lp;
                    let yk = gp - &grad;
                    let curv = s.dot(&yk);
                    if curv > 0.0 {
                        (s.norm_squared() / curv).max(min_step)
                    } else {
                        min_step
                    }
                }
                None => min_step,
            };
            let mut accepted = None;
            loop {
                let mut cand = &lambda + &grad * step;
                self.project(&mut cand);
                let cand_value = self.objective(&cand);
                if cand_value >= value {
                    accepted = Some((cand, cand_value));
                    break;
                }
                if step <= min_step {
                    break;
                }
                step = (0.5 * step).max(min_step);
            }
            let Some((mut cand, mut cand_value)) = accepted else {
                log::debug!("dual ascent stalled at residual {residual:e} after {iterations} iterations");
                break;
            };
            (cand, cand_value) = self.subspace_steps(cand, cand_value);
            if cand == lambda {
                break;
            }
            iterations += 1;
            let new_grad = self.gradient(&cand);
            prev = Some((std::mem::replace(&mut lambda, cand), std::mem::replace(&mut grad, new_grad)));
            value = cand_value;
            if opts.record_trace {
                trace.push(value);
            }
        }
        Ok(DualSolution {
            lambda,
            views: self.views,
            l: self.l,
            dual_value: value,
            iterations,
            kkt_residual: residual,
            jitter: self.jitter,
            trace,
        })
    }

    /// Expansion coefficients solving `2 Q a = D lambda`, one vector per view.
    pub fn recover(&self, sol: &DualSolution) -> Result<Vec<DVector<f64>>> {
        check_dim("dual solution", self.dim(), sol.lambda.len())?;
        let stacked = &self.coef * &sol.lambda * 0.5;
        Ok((0..self.views)
            .map(|v| stacked.rows(v * self.n, self.n).into_owned())
            .collect())
    }

    /// Right-hand side `D lambda` of the stationarity system `2 Q a = D lambda`.
    pub fn stationarity_rhs(&self, lambda: &DVector<f64>) -> DVector<f64> {
        &self.d * lambda
    }
}

/// Solve the two-view dual; `k1l`, `k2l` are the labeled rows of the Gram matrices.
pub fn solve_dual(
    form: &QuadraticForm,
    k1l: &DMatrix<f64>,
    k2l: &DMatrix<f64>,
    y: &[f64],
    tol: f64,
) -> Result<DualSolution> {
    let opts = SolverOptions {
        tol,
        ..SolverOptions::default()
    };
    DualProblem::new(form, &[k1l, k2l], y)?.solve(&opts)
}

/// Two-view expansion coefficients from a dual solution of the same instance.
pub fn recover_alphas(
    form: &QuadraticForm,
    k1l: &DMatrix<f64>,
    k2l: &DMatrix<f64>,
    y: &[f64],
    sol: &DualSolution,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let mut alphas = DualProblem::new(form, &[k1l, k2l], y)?.recover(sol)?;
    let a2 = alphas.pop().expect("two views");
    let a1 = alphas.pop().expect("two views");
    Ok((a1, a2))
}

/// Per-view primal ingredients: Gram matrix over the training points
/// (labeled first) and the Laplacian used by the manifold term.
#[derive(Debug, Clone, Copy)]
pub struct PrimalView<'a> {
    pub alpha: &'a DVector<f64>,
    pub gram: &'a DMatrix<f64>,
    pub laplacian: &'a DMatrix<f64>,
}

/// Hinge slacks `max(0, 1 - y_i f(x_i))` over the first `y.len()` outputs.
pub fn hinge_slacks(f: &DVector<f64>, y: &[f64]) -> Vec<f64> {
    y.iter()
        .enumerate()
        .map(|(i, &yi)| (1.0 - yi * f[i]).max(0.0))
        .collect()
}

/// Primal objective for one or two views, evaluated term by term from the
/// expansions. The disagreement term applies only with two views.
pub fn primal_value(views: &[PrimalView<'_>], y: &[f64], hp: &Hyperparams) -> Result<f64> {
    let l = y.len();
    if l == 0 {
        return Err(invalid("at least one labeled example is required"));
    }
    let mut slack = 0.0;
    let mut norm = 0.0;
    let mut manifold = 0.0;
    let mut outputs = Vec::with_capacity(views.len());
    for pv in views {
        let n = pv.alpha.len();
        check_dim("gram rows", n, pv.gram.nrows())?;
        check_dim("gram columns", n, pv.gram.ncols())?;
        check_dim("laplacian", n, pv.laplacian.nrows())?;
        check_dim("laplacian", n, pv.laplacian.ncols())?;
        if l > n {
            return Err(invalid(format!("{l} labels for {n} training points")));
        }
        let f = pv.gram * pv.alpha;
        slack += hinge_slacks(&f, y).iter().sum::<f64>();
        norm += pv.alpha.dot(&f);
        manifold += f.dot(&(pv.laplacian * &f));
        outputs.push(f);
    }
    let disagreement = match outputs.as_slice() {
        [f1, f2] => {
            check_dim("view outputs", f1.len(), f2.len())?;
            (f1 - f2).norm_squared()
        }
        _ => 0.0,
    };
    Ok(slack / (2.0 * l as f64) + hp.gamma1 * norm + hp.gamma2 * manifold + hp.gamma3 * disagreement)
}

/// Two-view primal objective `F0`.
#[allow(clippy::too_many_arguments)]
pub fn primal_objective(
    alpha1: &DVector<f64>,
    alpha2: &DVector<f64>,
    k1: &DMatrix<f64>,
    k2: &DMatrix<f64>,
    l1: &DMatrix<f64>,
    l2: &DMatrix<f64>,
    y: &[f64],
    hp: &Hyperparams,
) -> Result<f64> {
    primal_value(
        &[
            PrimalView {
                alpha: alpha1,
                gram: k1,
                laplacian: l1,
            },
            PrimalView {
                alpha: alpha2,
                gram: k2,
                laplacian: l2,
            },
        ],
        y,
        hp,
    )
}
