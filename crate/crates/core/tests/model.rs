mod common;

use common::*;
use mvlapsvm::data::{gen_two_moons_two_lines, make_split, SplitSpec};
use mvlapsvm::graph::GraphConfig;
use mvlapsvm::kernel::{gram_sym, KernelSpec};
use mvlapsvm::model::{train, train_cosvm, train_lapsvm, Coupling, PreparedViews, Predictor, TrainedModel, TrainingData, View};
use mvlapsvm::qp::{hinge_slacks, DualProblem, Hyperparams, QuadraticTerms, SolverOptions};
use mvlapsvm::theory::{complexity_u, ComplexityInputs};
use mvlapsvm::{DMatrix, DVector};
use rand::Rng;

fn alphas(m: &TrainedModel, view: View) -> Vec<f64> {
    m.expansion(view).unwrap().alpha.iter().copied().collect()
}

fn hp(a: f64, b: f64, c: f64) -> Hyperparams {
    Hyperparams::new(a, b, c).unwrap()
}

#[test]
fn identical_views_give_identical_predictors() {
    let base = random_training(6, 10, 1);
    let data = TrainingData::new(base.view1.clone(), base.view1.clone(), base.labels.clone()).unwrap();
    let k = KernelSpec::gaussian(0.7).unwrap();
    let p = PreparedViews::new(data, [k; 2], graphs()).unwrap();
    let m = p.fit(&hp(0.1, 0.05, 0.3), Coupling::Joint).unwrap();
    let f1 = m.training_outputs(View::First).unwrap();
    let f2 = m.training_outputs(View::Second).unwrap();
    assert!((f1 - f2).amax() <= 1e-6);
}

#[test]
fn no_disagreement_term_decouples_views() {
    for seed in 0..5 {
        let p = well_conditioned(8, 15, seed);
        let h = hp(0.05, 0.02, 0.0);
        let joint = p.fit(&h, Coupling::Joint).unwrap();
        assert_eq!(joint.diagnostics.jitter, 0.0);
        for view in View::BOTH {
            let single = p.fit(&h, Coupling::Single(view)).unwrap();
            let a = alphas(&joint, view);
            let b = alphas(&single, view);
            assert!(max_abs_diff(&a, &b) <= 1e-6 * max_abs(&b).max(1.0), "seed {seed} {view:?}");
        }
    }
}

#[test]
fn no_disagreement_term_decouples_outputs_with_singular_gram() {
    // the linear view has a rank-deficient Gram matrix, so only outputs are unique
    for seed in 0..5 {
        let p = prepared(8, 15, seed);
        let h = hp(0.05, 0.02, 0.0);
        let joint = p.fit(&h, Coupling::Joint).unwrap();
        for view in View::BOTH {
            let single = p.fit(&h, Coupling::Single(view)).unwrap();
            let a = joint.training_outputs(view).unwrap();
            let b = single.training_outputs(view).unwrap();
            assert!((&a - &b).amax() <= 1e-6 * b.amax().max(1.0), "seed {seed} {view:?}");
        }
    }
}

#[test]
fn well_separated_data_is_classified_perfectly() {
    let ds = gen_two_moons_two_lines(100, 0.05, 3).unwrap();
    let split = make_split(
        &ds,
        &SplitSpec {
            n_labeled: 10,
            n_unlabeled: 100,
            n_validation: 0,
            n_test: 90,
            seed: 3,
        },
    )
    .unwrap();
    let m = train(
        &ds,
        &split,
        [KernelSpec::gaussian(0.5).unwrap(), KernelSpec::linear(true)],
        [GraphConfig::default(); 2],
        &hp(1e-4, 1e-2, 1e-2),
    )
    .unwrap();
    let pick = |v: &mvlapsvm::DMatrix<f64>| {
        DMatrix::from_fn(split.test_idx.len(), v.ncols(), |i, j| v[(split.test_idx[i], j)])
    };
    let scores = m.scores(Predictor::Combined, &pick(ds.view1()), &pick(ds.view2())).unwrap();
    for (s, &i) in scores.iter().zip(&split.test_idx) {
        assert_eq!(mvlapsvm::model::classify(*s), ds.labels()[i]);
    }
}

#[test]
fn negating_labels_negates_coefficients() {
    let data = random_training(7, 9, 4);
    let neg: Vec<f64> = data.labels.iter().map(|y| -y).collect();
    let flipped = TrainingData::new(data.view1.clone(), data.view2.clone(), neg).unwrap();
    let h = hp(0.02, 0.1, 0.05);
    let a = PreparedViews::new(data, kernels(), graphs()).unwrap().fit(&h, Coupling::Joint).unwrap();
    let b = PreparedViews::new(flipped, kernels(), graphs()).unwrap().fit(&h, Coupling::Joint).unwrap();
    for view in View::BOTH {
        let na: Vec<f64> = alphas(&a, view).iter().map(|x| -x).collect();
        assert!(max_abs_diff(&na, &alphas(&b, view)) <= 1e-8 * max_abs(&na).max(1.0));
    }
}

#[test]
fn lapsvm_ignores_the_other_view() {
    let mut ds = gen_two_moons_two_lines(40, 0.2, 5).unwrap();
    let spec = SplitSpec {
        n_labeled: 6,
        n_unlabeled: 30,
        n_validation: 0,
        n_test: 0,
        seed: 5,
    };
    let split = make_split(&ds, &spec).unwrap();
    let k = KernelSpec::gaussian(0.6).unwrap();
    let h = hp(0.01, 0.1, 0.5);
    let before = train_lapsvm(View::First, &ds, &split, k, GraphConfig::default(), &h).unwrap();
    let mut r = rng(99);
    ds.view_mut(2).iter_mut().for_each(|v| *v = r.random_range(-50.0..50.0));
    let after = train_lapsvm(View::First, &ds, &split, k, GraphConfig::default(), &h).unwrap();
    assert_eq!(before, after);
    assert!(!before.has_view(View::Second));
    assert_eq!(before.hp.gamma3, 0.0);
}

#[test]
fn cosvm_is_the_model_without_manifold_term() {
    let ds = gen_two_moons_two_lines(30, 0.2, 6).unwrap();
    let split = make_split(
        &ds,
        &SplitSpec {
            n_labeled: 6,
            n_unlabeled: 20,
            n_validation: 0,
            n_test: 0,
            seed: 6,
        },
    )
    .unwrap();
    let ks = [KernelSpec::gaussian(0.6).unwrap(), KernelSpec::linear(true)];
    let gs = [GraphConfig::default(); 2];
    let co = train_cosvm(&ds, &split, ks, gs, &hp(0.01, 0.7, 0.2)).unwrap();
    let mv = train(&ds, &split, ks, gs, &hp(0.01, 0.0, 0.2)).unwrap();
    assert_eq!(co, mv);
}

/// Single view, no unlabeled points, no manifold term: the model is a
/// bias-free soft-margin SVM with `C = 1 / (4 l gamma1)` and dual variables
/// `b_i = y_i alpha_i`.
#[test]
fn single_view_without_graph_matches_brute_force_svm() {
    for (case, (x, y, kernel, c)) in svm_oracle_cases().into_iter().enumerate() {
        let l = y.len();
        let gamma1 = 1.0 / (4.0 * l as f64 * c);
        let data = TrainingData::new(x.clone(), x.clone(), y.clone()).unwrap();
        let p = PreparedViews::new(data, [kernel; 2], [GraphConfig { k: 1, sigma: Some(1.0) }; 2])
            .unwrap()
            .with_solver(SolverOptions {
                tol: 1e-12,
                ..SolverOptions::default()
            });
        let m = p.fit(&hp(gamma1, 0.0, 0.0), Coupling::Single(View::First)).unwrap();
        let beta: Vec<f64> = alphas(&m, View::First).iter().zip(&y).map(|(a, yi)| a * yi).collect();

        let k = gram_sym(&kernel, &x);
        let h = 1e-3;
        let (grid_beta, grid_value) = svm_dual_grid(&k, &y, c, h);
        assert!(beta.iter().any(|&b| b > 1e-6 && b < c - 1e-6), "case {case}: all multipliers at a bound");
        let ours = m.diagnostics.dual_value / (2.0 * gamma1);

        let hess = DMatrix::from_fn(l, l, |i, j| y[i] * y[j] * k[(i, j)]);
        let eig = hess.clone().symmetric_eigen().eigenvalues;
        let (lo, hi) = (eig.min().max(0.0), eig.max());
        // bounds stay on the grid, so rounding to the nearest grid point
        // loses at most the curvature term
        let gap_tol = 0.5 * hi * l as f64 * (h / 2.0).powi(2) + 1e-12;
        assert!(ours >= grid_value - 1e-12 * grid_value.abs(), "case {case}: {ours} < {grid_value}");
        assert!(ours - grid_value <= gap_tol, "case {case}: {ours} vs {grid_value}");
        // outputs are unique even when K is singular; strong concavity along
        // range(K) bounds their distance from the grid maximizer
        let f_ours = m.training_outputs(View::First).unwrap();
        let yb = DVector::from_fn(l, |i, _| y[i] * grid_beta[i]);
        let f_grid = &k * yb;
        let k_max = k.clone().symmetric_eigen().eigenvalues.max();
        assert!((&f_ours - &f_grid).amax() <= (2.0 * k_max * gap_tol).sqrt() + 1e-9, "case {case}");
        if lo > 1e-3 {
            let b = DVector::from_column_slice(&beta);
            let recomputed = b.sum() - 0.5 * (b.transpose() * &hess * &b)[(0, 0)];
            assert!((recomputed - ours).abs() <= 1e-9 * ours.abs().max(1.0), "case {case}");
            assert!(beta.iter().all(|&v| v >= -1e-9 && v <= c + 1e-9));
            let radius = (2.0 * gap_tol / lo).sqrt() + 1e-9;
            assert!(max_abs_diff(&beta, &grid_beta) <= radius, "case {case}");
        }
    }
}

#[test]
fn common_rescaling_leaves_the_solution_unchanged() {
    let p = well_conditioned(6, 12, 7).with_solver(SolverOptions {
        tol: 1e-12,
        ..SolverOptions::default()
    });
    let h = hp(0.03, 0.2, 0.4);
    let base = p.fit(&h, Coupling::Joint).unwrap();
    for factor in [0.1, 3.0, 50.0] {
        let scaled = p.fit_weighted(&h.scaled(factor), Coupling::Joint, factor).unwrap();
        for view in View::BOTH {
            let a = alphas(&base, view);
            assert!(max_abs_diff(&a, &alphas(&scaled, view)) <= 1e-6 * max_abs(&a).max(1.0), "factor {factor}");
        }
        let rel = (scaled.diagnostics.primal_value / factor - base.diagnostics.primal_value).abs();
        assert!(rel <= 1e-6 * base.diagnostics.primal_value);
    }
}

#[test]
fn disagreement_shrinks_as_its_weight_grows() {
    let p = prepared(8, 20, 8).with_solver(SolverOptions {
        tol: 1e-11,
        ..SolverOptions::default()
    });
    let mut last = f64::INFINITY;
    for g3 in [0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0] {
        let m = p.fit(&hp(0.05, 0.05, g3), Coupling::Joint).unwrap();
        let d = (m.training_outputs(View::First).unwrap() - m.training_outputs(View::Second).unwrap()).norm_squared();
        assert!(d <= last * (1.0 + 1e-6) + 1e-12, "gamma3 {g3}: {d} > {last}");
        last = d;
    }
}

#[test]
fn unlabeled_points_are_inert_without_graph_and_disagreement() {
    let full = random_training(6, 25, 9);
    let labeled_only = TrainingData::new(
        full.view1.rows(0, 6).into_owned(),
        full.view2.rows(0, 6).into_owned(),
        full.labels.clone(),
    )
    .unwrap();
    let h = hp(0.05, 0.0, 0.0);
    let opts = SolverOptions {
        tol: 1e-12,
        ..SolverOptions::default()
    };
    let with_u = PreparedViews::new(full.clone(), kernels(), graphs()).unwrap().with_solver(opts).fit(&h, Coupling::Joint).unwrap();
    let without = PreparedViews::new(labeled_only, kernels(), graphs()).unwrap().with_solver(opts).fit(&h, Coupling::Joint).unwrap();
    for view in View::BOTH {
        let a = with_u.expansion(view).unwrap().scores(&full.view(view).rows(0, 6).into_owned()).unwrap();
        let b = without.expansion(view).unwrap().scores(&full.view(view).rows(0, 6).into_owned()).unwrap();
        assert!((a - b).amax() <= 1e-6);
    }
}

#[test]
fn complementary_slackness_at_the_solution() {
    for seed in 0..5 {
        let data = random_training(8, 12, 20 + seed);
        let p = PreparedViews::new(data.clone(), kernels(), graphs()).unwrap();
        let terms = QuadraticTerms::two_view(
            p.gram(View::First),
            p.gram(View::Second),
            p.laplacian(View::First),
            p.laplacian(View::Second),
        )
        .unwrap();
        let form = terms.assemble(&hp(0.02, 0.1, 0.3));
        let k1l = p.gram(View::First).rows(0, 8).into_owned();
        let k2l = p.gram(View::Second).rows(0, 8).into_owned();
        let dual = DualProblem::new(&form, &[&k1l, &k2l], &data.labels).unwrap();
        let sol = dual.solve(&SolverOptions::default()).unwrap();
        let alphas = dual.recover(&sol).unwrap();
        for (v, alpha) in alphas.iter().enumerate() {
            let f = p.gram(View::BOTH[v]) * alpha;
            let xi = hinge_slacks(&f, &data.labels);
            let lam = sol.view_lambda(v);
            let c = dual.upper_bound();
            for i in 0..8 {
                let margin = data.labels[i] * f[i] - 1.0 + xi[i];
                assert!((lam[i] * margin).abs() <= 1e-6, "seed {seed} view {v} point {i}");
                // a slack only appears at the upper bound
                assert!(((c - lam[i]) * xi[i]).abs() <= 1e-6, "seed {seed} view {v} point {i}");
            }
        }
    }
}

#[test]
fn complexity_decreases_in_every_coefficient() {
    let data = random_training(5, 10, 30);
    let p = PreparedViews::new(data, kernels(), graphs()).unwrap();
    let m = p.fit(&hp(0.1, 0.1, 0.1), Coupling::Joint).unwrap();
    let inputs = ComplexityInputs::from_model(&m).unwrap();
    let base = hp(0.1, 0.1, 0.1);
    let u0 = complexity_u(&inputs, &base).unwrap().u;
    for bump in [
        hp(0.2, 0.1, 0.1),
        hp(0.1, 0.2, 0.1),
        hp(0.1, 0.1, 0.2),
        hp(0.1, 10.0, 0.1),
        hp(0.1, 0.1, 10.0),
    ] {
        let u = complexity_u(&inputs, &bump).unwrap().u;
        assert!(u <= u0 * (1.0 + 1e-10), "{bump:?}: {u} > {u0}");
    }
}
