//! Rademacher complexity of the regularized two-view class and the resulting
//! generalization bound.
//!
//! The class contains every pair `(f1, f2)` whose penalty
//! `g1 (|f1|^2 + |f2|^2) + g2 (f1u' L1u f1u + f2u' L2u f2u) + g3 |f1u - f2u|^2`
//! is at most 1, where the manifold and disagreement terms only see the
//! unlabeled points and `L1u`, `L2u` are unnormalized Laplacians of the
//! unlabeled-only graphs. [`complexity_u`] evaluates the closed-form
//! `U / (sqrt(2) l) <= R <= U / l` sandwich; [`mc_rademacher`] estimates the
//! complexity itself by sampling sign vectors.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_dim, invalid, Error, Result};
use crate::graph::unlabeled_laplacian;
use crate::linalg::{symmetrize, JitteredCholesky};
use crate::model::{TrainedModel, View};
use crate::qp::Hyperparams;

/// Tolerance below zero accepted for `U^2` before it is reported as an error.
pub const NEGATIVE_U2_TOLERANCE: f64 = 1e-8;

/// Closed-form bounds on the empirical Rademacher complexity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityReport {
    pub trace_s: f64,
    /// `tr(J' (I + g3 Theta)^{-1} J)`
    pub trace_correction: f64,
    pub u_squared: f64,
    pub u: f64,
    pub lower: f64,
    pub upper: f64,
    pub hp: Hyperparams,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    /// Jitter added to each view's inner matrix.
    pub jitter: [f64; 2],
}

/// Inputs shared by [`complexity_u`] and [`mc_rademacher`].
#[derive(Debug, Clone)]
pub struct ComplexityInputs {
    /// Gram matrices over the `l + u` points, labeled first.
    pub k1: DMatrix<f64>,
    pub k2: DMatrix<f64>,
    /// Unnormalized Laplacians over the unlabeled points only.
    pub l1u: DMatrix<f64>,
    pub l2u: DMatrix<f64>,
    pub n_labeled: usize,
}

impl ComplexityInputs {
    pub fn new(k1: DMatrix<f64>, k2: DMatrix<f64>, l1u: DMatrix<f64>, l2u: DMatrix<f64>, n_labeled: usize) -> Result<Self> {
        let n = k1.nrows();
        for k in [&k1, &k2] {
            check_dim("complexity gram rows", n, k.nrows())?;
            check_dim("complexity gram columns", n, k.ncols())?;
        }
        if n_labeled == 0 || n_labeled > n {
            return Err(invalid(format!("need 1 <= l <= {n}, got l = {n_labeled}")));
        }
        let u = n - n_labeled;
        for lap in [&l1u, &l2u] {
            check_dim("unlabeled laplacian rows", u, lap.nrows())?;
            check_dim("unlabeled laplacian columns", u, lap.ncols())?;
        }
        Ok(Self {
            k1,
            k2,
            l1u,
            l2u,
            n_labeled,
        })
    }

    /// Gram matrices and unlabeled-only Laplacians of a trained two-view
    /// model, using the graph settings recorded in the model.
    pub fn from_model(model: &TrainedModel) -> Result<Self> {
        let l = model.n_labeled();
        let mut grams = Vec::with_capacity(2);
        let mut laps = Vec::with_capacity(2);
        for view in View::BOTH {
            let e = model.expansion(view)?;
            let n = e.train.nrows();
            let sigma = e
                .graph
                .sigma
                .ok_or_else(|| invalid("model graph width is unresolved"))?;
            let unlabeled: Vec<usize> = (l..n).collect();
            grams.push(crate::kernel::gram_sym(&e.kernel, &e.train));
            laps.push(unlabeled_laplacian(&e.train, &unlabeled, e.graph.k, sigma)?);
        }
        let l2u = laps.pop().expect("two views");
        let l1u = laps.pop().expect("two views");
        let k2 = grams.pop().expect("two views");
        let k1 = grams.pop().expect("two views");
        Self::new(k1, k2, l1u, l2u, l)
    }

    pub fn n(&self) -> usize {
        self.k1.nrows()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.n() - self.n_labeled
    }

    fn views(&self) -> [(&DMatrix<f64>, &DMatrix<f64>); 2] {
        [(&self.k1, &self.l1u), (&self.k2, &self.l2u)]
    }

    /// `g1 K + g2 K_u' L_u K_u` for one view.
    fn inner(&self, k: &DMatrix<f64>, lu: &DMatrix<f64>, hp: &Hyperparams) -> DMatrix<f64> {
        let l = self.n_labeled;
        let u = self.n_unlabeled();
        let ku = k.rows(l, u);
        let mut a = k * hp.gamma1 + ku.transpose() * (lu * ku) * hp.gamma2;
        symmetrize(&mut a);
        a
    }
}

/// Evaluate `U^2 = tr(S) - g3 tr(J' (I + g3 Theta)^{-1} J)` and the sandwich.
pub fn complexity_u(inputs: &ComplexityInputs, hp: &Hyperparams) -> Result<ComplexityReport> {
    hp.validate()?;
    let l = inputs.n_labeled;
    let u = inputs.n_unlabeled();
    let mut s = DMatrix::zeros(l, l);
    let mut theta = DMatrix::zeros(u, u);
    let mut j = DMatrix::zeros(u, l);
    let mut jitter = [0.0; 2];
    for (v, (k, lu)) in inputs.views().into_iter().enumerate() {
        let factor = JitteredCholesky::new(&inputs.inner(k, lu, hp), "complexity inner matrix")?;
        jitter[v] = factor.jitter;
        // A^{-1} K' restricted to labeled and unlabeled columns
        let x = factor.solve(&k.transpose());
        let kl = k.rows(0, l);
        let ku = k.rows(l, u);
        let xl = x.columns(0, l);
        s += kl * xl;
        theta += ku * x.columns(l, u);
        let part = ku * xl;
        if v == 0 {
            j += part;
        } else {
            j -= part;
        }
    }
    let trace_s = s.trace();
    let trace_correction = if u == 0 {
        0.0
    } else {
        symmetrize(&mut theta);
        let mut m = theta * hp.gamma3;
        for i in 0..u {
            m[(i, i)] += 1.0;
        }
        let factor = JitteredCholesky::new(&m, "I + g3 Theta")?;
        let y = factor.solve(&j);
        j.component_mul(&y).sum()
    };
    let mut u_squared = trace_s - hp.gamma3 * trace_correction;
    if u_squared < 0.0 {
        if u_squared < -NEGATIVE_U2_TOLERANCE * trace_s.abs().max(1.0) {
            return Err(Error::NegativeComplexity {
                u_squared,
                trace_correction,
                jitter: jitter[0].max(jitter[1]),
            });
        }
        u_squared = 0.0;
    }
    let big_u = u_squared.sqrt();
    let upper = big_u / l as f64;
    Ok(ComplexityReport {
        trace_s,
        trace_correction,
        u_squared,
        u: big_u,
        lower: upper / std::f64::consts::SQRT_2,
        upper,
        hp: *hp,
        n_labeled: l,
        n_unlabeled: u,
        jitter,
    })
}

/// Sample mean and standard error of the Monte-Carlo complexity estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub draws: usize,
    pub jitter: f64,
}

/// Monte-Carlo estimate of `E_sigma sup |(1/l) sum_i sigma_i (f1(x_i) + f2(x_i))|`.
///
/// In stacked coefficients `a = (alpha_1; alpha_2)` the class is the ellipsoid
/// `a' M a <= 1` and the functional is `c' a` with `c = [K1l, K2l]' sigma`, so
/// each draw contributes `sqrt(c' M^{-1} c) / l` exactly. Draw `i` uses
/// ChaCha8 stream `i` of `seed`, which makes the result independent of
/// scheduling.
pub fn mc_rademacher(inputs: &ComplexityInputs, hp: &Hyperparams, n_draws: usize, seed: u64) -> Result<McEstimate> {
    hp.validate()?;
    if n_draws == 0 {
        return Err(invalid("at least one Rademacher draw is required"));
    }
    let n = inputs.n();
    let l = inputs.n_labeled;
    let u = inputs.n_unlabeled();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for (v, (k, lu)) in inputs.views().into_iter().enumerate() {
        m.view_mut((v * n, v * n), (n, n)).copy_from(&inputs.inner(k, lu, hp));
    }
    if u > 0 && hp.gamma3 > 0.0 {
        let mut d = DMatrix::zeros(u, 2 * n);
        d.view_mut((0, 0), (u, n)).copy_from(&inputs.k1.rows(l, u));
        d.view_mut((0, n), (u, n)).copy_from(&(-inputs.k2.rows(l, u)));
        m += d.transpose() * d * hp.gamma3;
    }
    symmetrize(&mut m);
    let factor = JitteredCholesky::new(&m, "Rademacher ellipsoid")?;
    let mut b = DMatrix::zeros(l, 2 * n);
    b.view_mut((0, 0), (l, n)).copy_from(&inputs.k1.rows(0, l));
    b.view_mut((0, n), (l, n)).copy_from(&inputs.k2.rows(0, l));
    let bt = b.transpose();

    let values: Vec<f64> = (0..n_draws)
        .into_par_iter()
        .map(|draw| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(draw as u64);
            let sigma = DVector::from_fn(l, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
            let c = &bt * sigma;
            let x = factor.solve_vec(&c);
            c.dot(&x).max(0.0).sqrt() / l as f64
        })
        .collect();
    // Welford's update; a constant sequence keeps its exact value as the mean
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let count = values.len() as f64;
    let std_error = if n_draws > 1 {
        (m2 / (count - 1.0) / count).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error,
        draws: n_draws,
        jitter: factor.jitter,
    })
}

/// The three summands of the generalization bound for `g = (f1 + f2) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// `(1/2l) sum_i (xi_1^i + xi_2^i)`
    pub slack_mean: f64,
    /// `2 R`
    pub complexity_term: f64,
    /// `3 sqrt(ln(2/delta) / 2l)`
    pub confidence_term: f64,
    pub delta: f64,
    pub total: f64,
}

/// Bound from its ingredients.
pub fn bound_from_parts(slack_mean: f64, r_hat: f64, delta: f64, l: usize) -> Result<BoundReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if l == 0 {
        return Err(invalid("bound needs at least one labeled example"));
    }
    if !(slack_mean >= 0.0 && r_hat >= 0.0) {
        return Err(invalid(format!(
            "slack mean and complexity must be non-negative, got {slack_mean} and {r_hat}"
        )));
    }
    let complexity_term = 2.0 * r_hat;
    let confidence_term = 3.0 * ((2.0 / delta).ln() / (2.0 * l as f64)).sqrt();
    Ok(BoundReport {
        slack_mean,
        complexity_term,
        confidence_term,
        delta,
        total: slack_mean + complexity_term + confidence_term,
    })
}

/// Bound for a trained two-view model, with slacks taken from its training fit.
pub fn generalization_bound(model: &TrainedModel, r_hat: f64, delta: f64) -> Result<BoundReport> {
    bound_from_parts(model.slack_mean()?, r_hat, delta, model.n_labeled())
}
