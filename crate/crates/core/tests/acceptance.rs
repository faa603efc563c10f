//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use mvlapsvm::experiment::{report_emit, run_experiment, ExperimentConfig, Method, ReportFormat};
use mvlapsvm::graph::{adjacency, laplacian, manifold_energy, unlabeled_laplacian};
use mvlapsvm::kernel::{gram_sym, KernelSpec};
use mvlapsvm::model::{Coupling, PreparedViews, TrainedModel, TrainingData, View};
use mvlapsvm::qp::{primal_objective, DualProblem, Hyperparams, QuadraticTerms, SolverOptions};
use mvlapsvm::theory::{complexity_u, mc_rademacher, ComplexityInputs};
use mvlapsvm::{DMatrix, DVector};
use rand::Rng;

// tolerances
const MIN_SYNTHETIC_ACCURACY: f64 = 93.0;
const DUALITY_INSTANCES: usize = 60;
const DUALITY_REL_GAP: f64 = 1e-5;
const LAPLACIAN_GRAPHS: usize = 100;
const LAPLACIAN_REL: f64 = 1e-10;
const SPECTRUM_SLACK: f64 = 1e-8;
const DECOUPLING_TOL: f64 = 1e-6;
const SVM_GRID_STEP: f64 = 1e-3;
const SANDWICH_INSTANCES: usize = 50;
const SANDWICH_DRAWS: usize = 2000;
const SANDWICH_SE: f64 = 3.0;
const GRADIENT_REL: f64 = 1e-6;
const BOUND_TRIALS: usize = 20;
const BOUND_MIN_HOLDS: usize = 18;
const BOUND_DELTA: f64 = 0.05;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn check(cond: bool, pass: String, fail: String) -> Outcome {
    if cond {
        Ok(pass)
    } else {
        Err(fail)
    }
}

fn hp(a: f64, b: f64, c: f64) -> Hyperparams {
    Hyperparams::new(a, b, c).unwrap()
}

fn alphas(m: &TrainedModel, view: View) -> Vec<f64> {
    m.expansion(view).unwrap().alpha.iter().copied().collect()
}

fn synthetic_reproduction() -> Outcome {
    let config = ExperimentConfig::default();
    let report = run_experiment(&config).map_err(|e| e.to_string())?;
    eprint!("{}", report_emit(&report, ReportFormat::Text));
    let t = |m: Method| report.method(m).unwrap().summary.test_mean;
    let mv = t(Method::MvLapSvm);
    let lap = [Method::LapSvm, Method::LapSvmView1, Method::LapSvmView2];
    let best_lap = lap.iter().map(|&m| t(m)).fold(f64::NEG_INFINITY, f64::max);
    let detail = format!(
        "MvLapSVM T = {mv:.2}, best LapSVM T = {best_lap:.2} over {} repetitions",
        config.repetitions
    );
    check(mv >= MIN_SYNTHETIC_ACCURACY && mv >= best_lap, detail.clone(), detail)
}

fn strong_duality() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for i in 0..DUALITY_INSTANCES {
        let l = r.random_range(2..=10);
        let u = r.random_range(0..=20);
        let data = random_training(l, u, 1000 + i as u64);
        let width = r.random_range(0.3..1.5);
        let kernels = [KernelSpec::gaussian(width).unwrap(), KernelSpec::linear(true)];
        let p = PreparedViews::new(data.clone(), kernels, graphs()).map_err(|e| e.to_string())?;
        let h = hp(
            log_uniform(&mut r, -4.0, 1.0),
            log_uniform(&mut r, -4.0, 1.0),
            log_uniform(&mut r, -4.0, 1.0),
        );
        let m = p.fit(&h, Coupling::Joint).map_err(|e| format!("instance {i}: {e}"))?;
        let primal = primal_objective(
            &m.expansion(View::First).unwrap().alpha,
            &m.expansion(View::Second).unwrap().alpha,
            p.gram(View::First),
            p.gram(View::Second),
            p.laplacian(View::First),
            p.laplacian(View::Second),
            &data.labels,
            &h,
        )
        .map_err(|e| e.to_string())?;
        let gap = (primal - m.diagnostics.dual_value).abs() / primal.abs();
        worst = worst.max(gap);
    }
    let detail = format!("worst relative gap {worst:.2e} over {DUALITY_INSTANCES} instances");
    check(worst <= DUALITY_REL_GAP, detail.clone(), detail)
}

fn objective_anchor() -> Outcome {
    let mut r = rng(3);
    let mut bad = Vec::new();
    for i in 0..25 {
        let l = r.random_range(1..=12);
        let u = r.random_range(0..=15);
        let data = random_training(l, u, 2000 + i);
        let p = PreparedViews::new(data.clone(), kernels(), graphs()).map_err(|e| e.to_string())?;
        let zero = DVector::zeros(l + u);
        let h = hp(
            log_uniform(&mut r, -6.0, 2.0),
            log_uniform(&mut r, -6.0, 2.0),
            log_uniform(&mut r, -6.0, 2.0),
        );
        let v = primal_objective(
            &zero,
            &zero,
            p.gram(View::First),
            p.gram(View::Second),
            p.laplacian(View::First),
            p.laplacian(View::Second),
            &data.labels,
            &h,
        )
        .map_err(|e| e.to_string())?;
        if v != 1.0 {
            bad.push(v);
        }
    }
    check(bad.is_empty(), "F0(0) = 1 exactly on 25 datasets".into(), format!("values {bad:?}"))
}

fn laplacian_identity() -> Outcome {
    let mut r = rng(4);
    let (mut worst_rel, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..LAPLACIAN_GRAPHS {
        let n = r.random_range(3..=30);
        let d = r.random_range(1..=4);
        let x = DMatrix::from_fn(n, d, |_, _| r.random_range(-2.0..2.0));
        let k = r.random_range(1..n);
        let sigma = r.random_range(0.1..2.0);
        let w = adjacency(&x, k, sigma).map_err(|e| e.to_string())?;
        let bundle = laplacian(&w).map_err(|e| e.to_string())?;
        let f = DVector::from_fn(n, |_, _| r.random_range(-3.0..3.0));
        let energy = manifold_energy(&f, &bundle.laplacian).map_err(|e| e.to_string())?;
        let mut pairwise = 0.0;
        for i in 0..n {
            for j in 0..n {
                pairwise += w[(i, j)] * (f[i] - f[j]).powi(2);
            }
        }
        pairwise *= 0.5;
        worst_rel = worst_rel.max((energy - pairwise).abs() / pairwise.abs().max(f64::MIN_POSITIVE));
        let eig = bundle.normalized.symmetric_eigen().eigenvalues;
        lo = lo.min(eig.min());
        hi = hi.max(eig.max());
    }
    let detail = format!("worst relative error {worst_rel:.2e}, normalized spectrum in [{lo:.3e}, {hi:.12}]");
    check(
        worst_rel <= LAPLACIAN_REL && lo >= -SPECTRUM_SLACK && hi <= 2.0 + SPECTRUM_SLACK,
        detail.clone(),
        detail,
    )
}

fn reduction_oracles() -> Outcome {
    // disagreement weight 0 decouples into per-view Laplacian SVMs
    let mut worst: f64 = 0.0;
    let mut r = rng(5);
    for seed in 0..10 {
        let p = well_conditioned(r.random_range(2..=10), r.random_range(0..=20), 3000 + seed);
        let h = hp(log_uniform(&mut r, -3.0, 0.0), log_uniform(&mut r, -3.0, 0.0), 0.0);
        let joint = p.fit(&h, Coupling::Joint).map_err(|e| e.to_string())?;
        for view in View::BOTH {
            let single = p.fit(&h, Coupling::Single(view)).map_err(|e| e.to_string())?;
            let b = alphas(&single, view);
            worst = worst.max(max_abs_diff(&alphas(&joint, view), &b) / max_abs(&b).max(1.0));
        }
    }
    if worst > DECOUPLING_TOL {
        return Err(format!("decoupled coefficients differ by {worst:.2e}"));
    }

    // no graph, no disagreement, single view: brute-force SVM dual
    let mut worst_excess: f64 = 0.0;
    let mut interior = 0;
    for (case, (x, y, kernel, c)) in svm_oracle_cases().into_iter().enumerate() {
        let l = y.len();
        let gamma1 = 1.0 / (4.0 * l as f64 * c);
        let data = TrainingData::new(x.clone(), x.clone(), y.clone()).map_err(|e| e.to_string())?;
        let p = PreparedViews::new(data, [kernel; 2], graphs())
            .map_err(|e| e.to_string())?
            .with_solver(SolverOptions {
                tol: 1e-12,
                ..SolverOptions::default()
            });
        let m = p.fit(&hp(gamma1, 0.0, 0.0), Coupling::Single(View::First)).map_err(|e| e.to_string())?;
        let k = gram_sym(&kernel, &x);
        let (grid_beta, grid_value) = svm_dual_grid(&k, &y, c, SVM_GRID_STEP);
        interior += grid_beta.iter().filter(|&&b| b > 0.0 && b < c).count();
        let ours = m.diagnostics.dual_value / (2.0 * gamma1);
        let hess_max = DMatrix::from_fn(l, l, |i, j| y[i] * y[j] * k[(i, j)]).symmetric_eigen().eigenvalues.max();
        let tol = 0.5 * hess_max * l as f64 * (SVM_GRID_STEP / 2.0).powi(2) + 1e-12;
        if ours < grid_value - 1e-12 * grid_value.abs() || ours - grid_value > tol {
            return Err(format!("case {case}: dual {ours:.9} vs grid {grid_value:.9} (tolerance {tol:.1e})"));
        }
        worst_excess = worst_excess.max(ours - grid_value);
    }
    Ok(format!(
        "decoupling error {worst:.2e}; SVM dual within {worst_excess:.2e} of the {SVM_GRID_STEP} grid optimum on 4 instances ({interior} interior multipliers)"
    ))
}

fn sandwich_inputs(l: usize, u: usize, seed: u64) -> ComplexityInputs {
    let mut r = rng(seed);
    let n = l + u;
    let x1 = DMatrix::from_fn(n, 2, |_, _| r.random_range(-1.0..1.0));
    let x2 = DMatrix::from_fn(n, 2, |_, _| r.random_range(-1.0..1.0));
    let k1 = gram_sym(&KernelSpec::gaussian(r.random_range(0.3..1.2)).unwrap(), &x1);
    let k2 = gram_sym(&KernelSpec::gaussian(r.random_range(0.3..1.2)).unwrap(), &x2);
    let idx: Vec<usize> = (l..n).collect();
    let k = 3.min(u.saturating_sub(1)).max(1);
    let l1u = unlabeled_laplacian(&x1, &idx, k, 0.5).unwrap();
    let l2u = unlabeled_laplacian(&x2, &idx, k, 0.5).unwrap();
    ComplexityInputs::new(k1, k2, l1u, l2u, l).unwrap()
}

fn rademacher_sandwich() -> Outcome {
    let mut r = rng(6);
    let mut misses = Vec::new();
    for i in 0..SANDWICH_INSTANCES {
        let l = r.random_range(1..=8);
        let u = r.random_range(0..=12);
        let inputs = sandwich_inputs(l, u, 4000 + i as u64);
        let h = hp(
            log_uniform(&mut r, -2.0, 1.0),
            log_uniform(&mut r, -2.0, 1.0),
            log_uniform(&mut r, -2.0, 1.0),
        );
        let rep = complexity_u(&inputs, &h).map_err(|e| e.to_string())?;
        let mc = mc_rademacher(&inputs, &h, SANDWICH_DRAWS, i as u64).map_err(|e| e.to_string())?;
        let slack = SANDWICH_SE * mc.std_error;
        if mc.mean < rep.lower - slack || mc.mean > rep.upper + slack {
            misses.push(format!("instance {i}: {} not in [{}, {}]", mc.mean, rep.lower, rep.upper));
        }
    }
    let one = DMatrix::from_element(1, 1, 1.0);
    let unit = ComplexityInputs::new(one.clone(), one, DMatrix::zeros(0, 0), DMatrix::zeros(0, 0), 1).unwrap();
    let h = hp(1.0, 1.0, 1.0);
    let u = complexity_u(&unit, &h).map_err(|e| e.to_string())?.u;
    let mc = mc_rademacher(&unit, &h, SANDWICH_DRAWS, 0).map_err(|e| e.to_string())?.mean;
    if u != std::f64::consts::SQRT_2 || mc != std::f64::consts::SQRT_2 {
        misses.push(format!("unit instance: U = {u}, MC = {mc}"));
    }
    check(
        misses.is_empty(),
        format!("{SANDWICH_INSTANCES} instances inside the sandwich; unit instance U = MC = sqrt 2"),
        misses.join("; "),
    )
}

fn gradient_check() -> Outcome {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for inst in 0..10 {
        let l = r.random_range(2..=10);
        let u = r.random_range(0..=15);
        let data = random_training(l, u, 5000 + inst);
        let p = PreparedViews::new(data.clone(), kernels(), graphs()).map_err(|e| e.to_string())?;
        let terms = QuadraticTerms::two_view(
            p.gram(View::First),
            p.gram(View::Second),
            p.laplacian(View::First),
            p.laplacian(View::Second),
        )
        .map_err(|e| e.to_string())?;
        let form = terms.assemble(&hp(
            log_uniform(&mut r, -3.0, 1.0),
            log_uniform(&mut r, -3.0, 1.0),
            log_uniform(&mut r, -3.0, 1.0),
        ));
        let k1l = p.gram(View::First).rows(0, l).into_owned();
        let k2l = p.gram(View::Second).rows(0, l).into_owned();
        let dual = DualProblem::new(&form, &[&k1l, &k2l], &data.labels).map_err(|e| e.to_string())?;
        let c = dual.upper_bound();
        let h = 1e-4 * c;
        for _ in 0..10 {
            let lam = DVector::from_fn(dual.dim(), |_, _| r.random_range(0.05 * c..0.95 * c));
            let g = dual.gradient(&lam);
            let mut fd = DVector::zeros(dual.dim());
            for j in 0..dual.dim() {
                let mut plus = lam.clone();
                let mut minus = lam.clone();
                plus[j] += h;
                minus[j] -= h;
                fd[j] = (dual.objective(&plus) - dual.objective(&minus)) / (2.0 * h);
            }
            worst = worst.max((&g - &fd).amax() / g.amax().max(1e-300));
        }
    }
    let detail = format!("worst relative deviation {worst:.2e} over 100 points");
    check(worst <= GRADIENT_REL, detail.clone(), detail)
}

fn bound_sanity() -> Outcome {
    let config = ExperimentConfig {
        methods: vec![Method::MvLapSvm],
        repetitions: BOUND_TRIALS,
        bounds: true,
        delta: BOUND_DELTA,
        seed: 1000,
        ..Default::default()
    };
    let report = run_experiment(&config).map_err(|e| e.to_string())?;
    let runs = &report.methods[0].runs;
    let holds = runs
        .iter()
        .filter(|run| run.bound.is_some_and(|b| b.total >= 1.0 - run.test_accuracy / 100.0))
        .count();
    let tightest = runs
        .iter()
        .filter_map(|run| run.bound.map(|b| b.total))
        .fold(f64::INFINITY, f64::min);
    let detail = format!("bound above test error in {holds} of {BOUND_TRIALS} trials (smallest bound {tightest:.3})");
    check(holds >= BOUND_MIN_HOLDS, detail.clone(), detail)
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("synthetic reproduction", synthetic_reproduction),
        ("strong duality", strong_duality),
        ("objective anchor", objective_anchor),
        ("laplacian identity", laplacian_identity),
        ("reduction oracles", reduction_oracles),
        ("rademacher sandwich", rademacher_sandwich),
        ("gradient check", gradient_check),
        ("bound sanity", bound_sanity),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {n} ({name}): PASS: {msg} [{secs:.1}s]"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL: {msg} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
