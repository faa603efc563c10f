//! Training and prediction.
//!
//! [`PreparedViews`] builds Gram matrices and normalized Laplacians for a
//! fixed training set once, so that many hyperparameter settings can be fit
//! cheaply. [`train`], [`train_lapsvm`] and [`train_cosvm`] are the one-shot
//! entry points.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::data::{MultiViewDataset, SplitDataset};
use crate::error::{check_dim, invalid, Error, Result};
use crate::graph::{self, GraphConfig};
use crate::kernel::{gram, gram_sym, KernelSpec};
use crate::linalg::select_rows;
use crate::qp::{hinge_slacks, primal_value, DualProblem, Hyperparams, PrimalView, QuadraticTerms, SolverOptions};

/// One of the two views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum View {
    First,
    Second,
}

impl View {
    pub const BOTH: [View; 2] = [View::First, View::Second];

    pub fn index(self) -> usize {
        match self {
            View::First => 0,
            View::Second => 1,
        }
    }

    /// 1-based view number as used in files and messages.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_number(n: usize) -> Result<Self> {
        match n {
            1 => Ok(View::First),
            2 => Ok(View::Second),
            _ => Err(invalid(format!("view must be 1 or 2, got {n}"))),
        }
    }
}

/// Prediction function used to classify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Predictor {
    /// `(f1 + f2) / 2`
    Combined,
    View1,
    View2,
}

impl Predictor {
    /// Tie-break order for model selection: combined, then view 1, then view 2.
    pub const PREFERENCE: [Predictor; 3] = [Predictor::Combined, Predictor::View1, Predictor::View2];

    pub fn name(self) -> &'static str {
        match self {
            Predictor::Combined => "combined",
            Predictor::View1 => "view1",
            Predictor::View2 => "view2",
        }
    }
}

impl FromStr for Predictor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "combined" => Ok(Predictor::Combined),
            "view1" => Ok(Predictor::View1),
            "view2" => Ok(Predictor::View2),
            other => Err(invalid(format!("unknown predictor {other:?}"))),
        }
    }
}

/// Sign with `sgn(0) = +1`.
pub fn classify(score: f64) -> i8 {
    if score >= 0.0 {
        1
    } else {
        -1
    }
}

/// Kernel expansion of one view over the training points.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewExpansion {
    pub kernel: KernelSpec,
    /// Graph used for the manifold term, with its width resolved.
    pub graph: GraphConfig,
    /// Training inputs, labeled rows first.
    pub train: DMatrix<f64>,
    pub alpha: DVector<f64>,
}

impl ViewExpansion {
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        check_dim("prediction input", self.train.ncols(), x.len())?;
        let mut s = 0.0;
        for (i, &a) in self.alpha.iter().enumerate() {
            if a != 0.0 {
                s += a * self.kernel.eval(self.train.row(i).transpose().as_slice(), x)?;
            }
        }
        Ok(s)
    }

    pub fn scores(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(gram(&self.kernel, x, &self.train)? * &self.alpha)
    }
}

/// Solver and objective values recorded at training time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub primal_value: f64,
    pub dual_value: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub jitter: f64,
    /// `sum_i (xi_1^i + xi_2^i)` over the labeled points.
    pub slack_sum: f64,
}

impl Diagnostics {
    /// `|primal - dual| / |primal|`, or the absolute gap when the primal is 0.
    pub fn relative_gap(&self) -> f64 {
        let scale = self.primal_value.abs();
        if scale > 0.0 {
            self.duality_gap.abs() / scale
        } else {
            self.duality_gap.abs()
        }
    }
}

/// A trained classifier. Holds one expansion per trained view.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub view1: Option<ViewExpansion>,
    pub view2: Option<ViewExpansion>,
    pub hp: Hyperparams,
    /// Labels of the first `l` training rows.
    pub labels: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl TrainedModel {
    pub fn expansion(&self, view: View) -> Result<&ViewExpansion> {
        match view {
            View::First => self.view1.as_ref(),
            View::Second => self.view2.as_ref(),
        }
        .ok_or_else(|| invalid(format!("model was not trained on view {}", view.number())))
    }

    pub fn has_view(&self, view: View) -> bool {
        self.expansion(view).is_ok()
    }

    pub fn n_labeled(&self) -> usize {
        self.labels.len()
    }

    /// Training points per view, `l + u`.
    pub fn n_train(&self) -> usize {
        self.view1
            .as_ref()
            .or(self.view2.as_ref())
            .map_or(0, |e| e.train.nrows())
    }

    /// Predictors this model can evaluate, in preference order.
    pub fn predictors(&self) -> Vec<Predictor> {
        Predictor::PREFERENCE
            .into_iter()
            .filter(|p| match p {
                Predictor::Combined => self.view1.is_some() && self.view2.is_some(),
                Predictor::View1 => self.view1.is_some(),
                Predictor::View2 => self.view2.is_some(),
            })
            .collect()
    }

    pub fn predict_view(&self, x: &[f64], view: View) -> Result<f64> {
        self.expansion(view)?.score(x)
    }

    /// `(f1(x1) + f2(x2)) / 2`
    pub fn predict_combined(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        Ok(0.5 * (self.predict_view(x1, View::First)? + self.predict_view(x2, View::Second)?))
    }

    /// Scores of `predictor` for every row of the two view matrices.
    pub fn scores(&self, predictor: Predictor, x1: &DMatrix<f64>, x2: &DMatrix<f64>) -> Result<DVector<f64>> {
        match predictor {
            Predictor::View1 => self.expansion(View::First)?.scores(x1),
            Predictor::View2 => self.expansion(View::Second)?.scores(x2),
            Predictor::Combined => {
                check_dim("prediction rows", x1.nrows(), x2.nrows())?;
                let f1 = self.expansion(View::First)?.scores(x1)?;
                let f2 = self.expansion(View::Second)?.scores(x2)?;
                Ok((f1 + f2) * 0.5)
            }
        }
    }

    /// `f_v` at the training points.
    pub fn training_outputs(&self, view: View) -> Result<DVector<f64>> {
        let e = self.expansion(view)?;
        Ok(gram_sym(&e.kernel, &e.train) * &e.alpha)
    }

    /// Hinge slacks of `view` at the labeled training points.
    pub fn slacks(&self, view: View) -> Result<Vec<f64>> {
        Ok(hinge_slacks(&self.training_outputs(view)?, &self.labels))
    }

    /// `(1/2l) sum_i (xi_1^i + xi_2^i)`.
    pub fn slack_mean(&self) -> Result<f64> {
        let mut total = 0.0;
        for view in View::BOTH {
            total += self.slacks(view)?.iter().sum::<f64>();
        }
        Ok(total / (2.0 * self.n_labeled() as f64))
    }
}

/// Training inputs of both views with labeled rows first.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub view1: DMatrix<f64>,
    pub view2: DMatrix<f64>,
    /// Labels of the first `labels.len()` rows, as `+1.0` / `-1.0`.
    pub labels: Vec<f64>,
}

impl TrainingData {
    pub fn new(view1: DMatrix<f64>, view2: DMatrix<f64>, labels: Vec<f64>) -> Result<Self> {
        check_dim("training view rows", view1.nrows(), view2.nrows())?;
        if labels.is_empty() {
            return Err(invalid("training needs at least one labeled example"));
        }
        if labels.len() > view1.nrows() {
            return Err(invalid(format!("{} labels for {} training rows", labels.len(), view1.nrows())));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(invalid(format!("training labels must be +1 or -1, got {bad}")));
        }
        Ok(Self { view1, view2, labels })
    }

    /// Labeled and unlabeled rows of `split`, labeled first. Only the labels
    /// at `labeled_idx` are read.
    pub fn from_split(dataset: &MultiViewDataset, split: &SplitDataset) -> Result<Self> {
        let idx = split.training_idx();
        if let Some(&bad) = idx.iter().find(|&&i| i >= dataset.len()) {
            return Err(invalid(format!("split index {bad} out of range")));
        }
        let labels = split
            .labeled_idx
            .iter()
            .map(|&i| match dataset.labels()[i] {
                0 => Err(invalid(format!("labeled index {i} has no label"))),
                y => Ok(f64::from(y)),
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::new(select_rows(dataset.view1(), &idx), select_rows(dataset.view2(), &idx), labels)
    }

    pub fn n_labeled(&self) -> usize {
        self.labels.len()
    }

    pub fn n_train(&self) -> usize {
        self.view1.nrows()
    }

    pub fn view(&self, view: View) -> &DMatrix<f64> {
        match view {
            View::First => &self.view1,
            View::Second => &self.view2,
        }
    }
}

/// Which views a fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// One joint problem over both views.
    Joint,
    /// Each view solved on its own with the disagreement term dropped.
    Independent,
    /// A single view.
    Single(View),
}

/// Gram matrices and Laplacians of one training set, reusable across fits.
pub struct PreparedViews {
    data: TrainingData,
    kernels: [KernelSpec; 2],
    graphs: [GraphConfig; 2],
    grams: [DMatrix<f64>; 2],
    laplacians: [DMatrix<f64>; 2],
    joint: OnceLock<Result<QuadraticTerms, String>>,
    single: [OnceLock<Result<QuadraticTerms, String>>; 2],
    solver: SolverOptions,
}

impl PreparedViews {
    /// Graph widths left unset are resolved to the median pairwise distance
    /// of that view's training inputs.
    pub fn new(data: TrainingData, kernels: [KernelSpec; 2], graphs: [GraphConfig; 2]) -> Result<Self> {
        let mut resolved = graphs;
        let mut grams = Vec::with_capacity(2);
        let mut laplacians = Vec::with_capacity(2);
        for view in View::BOTH {
            let v = view.index();
            let x = data.view(view);
            let sigma = graphs[v].resolve_sigma(x)?;
            resolved[v].sigma = Some(sigma);
            let k = graphs[v].k.min(x.nrows().saturating_sub(1)).max(1);
            resolved[v].k = k;
            grams.push(gram_sym(&kernels[v], x));
            laplacians.push(graph::laplacian(&graph::adjacency(x, k, sigma)?)?.normalized);
        }
        let [g1, g2]: [DMatrix<f64>; 2] = grams.try_into().expect("two views");
        let [l1, l2]: [DMatrix<f64>; 2] = laplacians.try_into().expect("two views");
        Ok(Self {
            data,
            kernels,
            graphs: resolved,
            grams: [g1, g2],
            laplacians: [l1, l2],
            joint: OnceLock::new(),
            single: [OnceLock::new(), OnceLock::new()],
            solver: SolverOptions::default(),
        })
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn data(&self) -> &TrainingData {
        &self.data
    }

    pub fn gram(&self, view: View) -> &DMatrix<f64> {
        &self.grams[view.index()]
    }

    /// Normalized Laplacian used for training.
    pub fn laplacian(&self, view: View) -> &DMatrix<f64> {
        &self.laplacians[view.index()]
    }

    pub fn kernel(&self, view: View) -> KernelSpec {
        self.kernels[view.index()]
    }

    pub fn graph(&self, view: View) -> GraphConfig {
        self.graphs[view.index()]
    }

    fn joint_terms(&self) -> Result<&QuadraticTerms> {
        self.joint
            .get_or_init(|| {
                QuadraticTerms::two_view(&self.grams[0], &self.grams[1], &self.laplacians[0], &self.laplacians[1])
                    .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| invalid(e.clone()))
    }

    fn single_terms(&self, view: View) -> Result<&QuadraticTerms> {
        let v = view.index();
        self.single[v]
            .get_or_init(|| QuadraticTerms::single_view(&self.grams[v], &self.laplacians[v]).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| invalid(e.clone()))
    }

    fn expansion(&self, view: View, alpha: DVector<f64>) -> ViewExpansion {
        ViewExpansion {
            kernel: self.kernel(view),
            graph: self.graph(view),
            train: self.data.view(view).clone(),
            alpha,
        }
    }

    /// Fit one hyperparameter setting.
    pub fn fit(&self, hp: &Hyperparams, coupling: Coupling) -> Result<TrainedModel> {
        self.fit_weighted(hp, coupling, 1.0)
    }

    /// Fit with the hinge-loss term multiplied by `loss_weight`.
    pub fn fit_weighted(&self, hp: &Hyperparams, coupling: Coupling, loss_weight: f64) -> Result<TrainedModel> {
        hp.validate()?;
        let l = self.data.n_labeled();
        let y = &self.data.labels;
        let solve = |terms: &QuadraticTerms, hp: &Hyperparams, views: &[View]| -> Result<(Vec<DVector<f64>>, Diagnostics)> {
            let form = terms.assemble(hp);
            let labeled: Vec<DMatrix<f64>> = views
                .iter()
                .map(|&v| self.grams[v.index()].rows(0, l).into_owned())
                .collect();
            let refs: Vec<&DMatrix<f64>> = labeled.iter().collect();
            let dual = DualProblem::with_loss_weight(&form, &refs, y, loss_weight)?;
            let sol = dual.solve(&self.solver)?;
            let alphas = dual.recover(&sol)?;
            let primal_views: Vec<PrimalView<'_>> = views
                .iter()
                .zip(&alphas)
                .map(|(&v, alpha)| PrimalView {
                    alpha,
                    gram: &self.grams[v.index()],
                    laplacian: &self.laplacians[v.index()],
                })
                .collect();
            // primal_value weights the loss by 1; rescale the regularizer instead
            let primal = loss_weight * primal_value(&primal_views, y, &hp.scaled(1.0 / loss_weight))?;
            let slack_sum = primal_views
                .iter()
                .map(|pv| hinge_slacks(&(pv.gram * pv.alpha), y).iter().sum::<f64>())
                .sum();
            let diag = Diagnostics {
                primal_value: primal,
                dual_value: sol.dual_value,
                duality_gap: primal - sol.dual_value,
                iterations: sol.iterations,
                kkt_residual: sol.kkt_residual,
                jitter: sol.jitter,
                slack_sum,
            };
            Ok((alphas, diag))
        };

        let (view1, view2, diagnostics) = match coupling {
            Coupling::Joint => {
                let (mut alphas, diag) = solve(self.joint_terms()?, hp, &View::BOTH)?;
                let a2 = alphas.pop().expect("two views");
                let a1 = alphas.pop().expect("two views");
                (Some(self.expansion(View::First, a1)), Some(self.expansion(View::Second, a2)), diag)
            }
            Coupling::Independent => {
                let hp0 = Hyperparams { gamma3: 0.0, ..*hp };
                let (mut a1, d1) = solve(self.single_terms(View::First)?, &hp0, &[View::First])?;
                let (mut a2, d2) = solve(self.single_terms(View::Second)?, &hp0, &[View::Second])?;
                let diag = Diagnostics {
                    primal_value: d1.primal_value + d2.primal_value,
                    dual_value: d1.dual_value + d2.dual_value,
                    duality_gap: d1.duality_gap + d2.duality_gap,
                    iterations: d1.iterations.max(d2.iterations),
                    kkt_residual: d1.kkt_residual.hypot(d2.kkt_residual),
                    jitter: d1.jitter.max(d2.jitter),
                    slack_sum: d1.slack_sum + d2.slack_sum,
                };
                (
                    Some(self.expansion(View::First, a1.remove(0))),
                    Some(self.expansion(View::Second, a2.remove(0))),
                    diag,
                )
            }
            Coupling::Single(view) => {
                let hp0 = Hyperparams { gamma3: 0.0, ..*hp };
                let (mut a, diag) = solve(self.single_terms(view)?, &hp0, &[view])?;
                let e = Some(self.expansion(view, a.remove(0)));
                match view {
                    View::First => (e, None, diag),
                    View::Second => (None, e, diag),
                }
            }
        };
        let hp = match coupling {
            Coupling::Joint => *hp,
            _ => Hyperparams { gamma3: 0.0, ..*hp },
        };
        Ok(TrainedModel {
            view1,
            view2,
            hp,
            labels: y.clone(),
            diagnostics,
        })
    }
}

/// Train a two-view model on the labeled and unlabeled points of `split`.
pub fn train(
    dataset: &MultiViewDataset,
    split: &SplitDataset,
    kernels: [KernelSpec; 2],
    graphs: [GraphConfig; 2],
    hp: &Hyperparams,
) -> Result<TrainedModel> {
    PreparedViews::new(TrainingData::from_split(dataset, split)?, kernels, graphs)?.fit(hp, Coupling::Joint)
}

/// Single-view Laplacian SVM: the disagreement coefficient is ignored and
/// only `view` is read.
pub fn train_lapsvm(
    view: View,
    dataset: &MultiViewDataset,
    split: &SplitDataset,
    kernel: KernelSpec,
    graph_cfg: GraphConfig,
    hp: &Hyperparams,
) -> Result<TrainedModel> {
    let data = TrainingData::from_split(dataset, split)?;
    // the unused view is replaced by a copy so that its contents cannot matter
    let x = data.view(view).clone();
    let data = TrainingData::new(x.clone(), x, data.labels)?;
    let prepared = PreparedViews::new(data, [kernel; 2], [graph_cfg; 2])?;
    prepared.fit(hp, Coupling::Single(view))
}

/// Co-SVM: the two-view model with the manifold coefficient forced to 0.
pub fn train_cosvm(
    dataset: &MultiViewDataset,
    split: &SplitDataset,
    kernels: [KernelSpec; 2],
    graphs: [GraphConfig; 2],
    hp: &Hyperparams,
) -> Result<TrainedModel> {
    train(dataset, split, kernels, graphs, &Hyperparams { gamma2: 0.0, ..*hp })
}

const MODEL_TAG: &str = "mvlapsvm-model 1";

/// Serialize to the flat text model format.
pub fn model_to_string(model: &TrainedModel) -> String {
    let mut out = String::new();
    let hp = &model.hp;
    let d = &model.diagnostics;
    writeln!(out, "{MODEL_TAG}").unwrap();
    writeln!(out, "gamma {:?} {:?} {:?}", hp.gamma1, hp.gamma2, hp.gamma3).unwrap();
    writeln!(out, "labels {}", join(model.labels.iter())).unwrap();
    writeln!(
        out,
        "diagnostics {:?} {:?} {:?} {} {:?} {:?} {:?}",
        d.primal_value, d.dual_value, d.duality_gap, d.iterations, d.kkt_residual, d.jitter, d.slack_sum
    )
    .unwrap();
    for view in View::BOTH {
        let Ok(e) = model.expansion(view) else { continue };
        writeln!(out, "view {}", view.number()).unwrap();
        writeln!(out, "kernel {}", e.kernel).unwrap();
        writeln!(out, "graph {} {:?}", e.graph.k, e.graph.sigma.unwrap_or(f64::NAN)).unwrap();
        writeln!(out, "rows {} {}", e.train.nrows(), e.train.ncols()).unwrap();
        writeln!(out, "alpha {}", join(e.alpha.iter())).unwrap();
        for r in 0..e.train.nrows() {
            writeln!(out, "x {}", join(e.train.row(r).iter())).unwrap();
        }
    }
    out.push_str("end\n");
    out
}

fn join<'a>(values: impl Iterator<Item = &'a f64>) -> String {
    values.map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

fn parse_floats(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::ModelFormat(format!("line {line}: bad number {t:?}")))
        })
        .collect()
}

/// Parse the text model format.
pub fn model_from_str(text: &str) -> Result<TrainedModel> {
    let fmt_err = |line: usize, msg: &str| Error::ModelFormat(format!("line {line}: {msg}"));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, tag)) if tag == MODEL_TAG => {}
        _ => return Err(Error::ModelFormat(format!("missing header {MODEL_TAG:?}"))),
    }
    let mut hp = None;
    let mut labels = None;
    let mut diagnostics = Diagnostics::default();
    let mut views: [Option<ViewExpansion>; 2] = [None, None];
    let mut ended = false;
    while let Some((ln, line)) = lines.next() {
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        match key {
            "" => {}
            "gamma" => {
                let g = parse_floats(rest, ln)?;
                if g.len() != 3 {
                    return Err(fmt_err(ln, "gamma needs three values"));
                }
                hp = Some(Hyperparams::new(g[0], g[1], g[2])?);
            }
            "labels" => labels = Some(parse_floats(rest, ln)?),
            "diagnostics" => {
                let v = parse_floats(rest, ln)?;
                if v.len() != 7 {
                    return Err(fmt_err(ln, "diagnostics needs seven values"));
                }
                diagnostics = Diagnostics {
                    primal_value: v[0],
                    dual_value: v[1],
                    duality_gap: v[2],
                    iterations: v[3] as usize,
                    kkt_residual: v[4],
                    jitter: v[5],
                    slack_sum: v[6],
                };
            }
            "view" => {
                let view = View::from_number(rest.parse().map_err(|_| fmt_err(ln, "bad view number"))?)?;
                let mut next = |want: &str| -> Result<(usize, String)> {
                    match lines.next() {
                        Some((n, l)) => match l.split_once(' ') {
                            Some((k, r)) if k == want => Ok((n, r.to_string())),
                            _ => Err(fmt_err(n, &format!("expected {want:?}"))),
                        },
                        None => Err(Error::ModelFormat(format!("truncated before {want:?}"))),
                    }
                };
                let (kn, kernel) = next("kernel")?;
                let kernel: KernelSpec = kernel.parse().map_err(|e: Error| fmt_err(kn, &e.to_string()))?;
                let (gn, graph) = next("graph")?;
                let g = parse_floats(&graph, gn)?;
                if g.len() != 2 {
                    return Err(fmt_err(gn, "graph needs k and sigma"));
                }
                let graph = GraphConfig {
                    k: g[0] as usize,
                    sigma: if g[1].is_nan() { None } else { Some(g[1]) },
                };
                let (rn, rows) = next("rows")?;
                let dims = parse_floats(&rows, rn)?;
                if dims.len() != 2 {
                    return Err(fmt_err(rn, "rows needs two counts"));
                }
                let (n, d) = (dims[0] as usize, dims[1] as usize);
                let (an, alpha) = next("alpha")?;
                let alpha = parse_floats(&alpha, an)?;
                if alpha.len() != n {
                    return Err(fmt_err(an, &format!("expected {n} coefficients, found {}", alpha.len())));
                }
                let mut train = DMatrix::zeros(n, d);
                for r in 0..n {
                    let (xn, x) = next("x")?;
                    let x = parse_floats(&x, xn)?;
                    if x.len() != d {
                        return Err(fmt_err(xn, &format!("expected {d} features, found {}", x.len())));
                    }
                    train.row_mut(r).copy_from_slice(&x);
                }
                views[view.index()] = Some(ViewExpansion {
                    kernel,
                    graph,
                    train,
                    alpha: DVector::from_vec(alpha),
                });
            }
            "end" => {
                ended = true;
                break;
            }
            other => return Err(fmt_err(ln, &format!("unknown key {other:?}"))),
        }
    }
    if !ended {
        return Err(Error::ModelFormat("missing \"end\"".into()));
    }
    let hp = hp.ok_or_else(|| Error::ModelFormat("missing gamma line".into()))?;
    let labels = labels.ok_or_else(|| Error::ModelFormat("missing labels line".into()))?;
    let [view1, view2] = views;
    if view1.is_none() && view2.is_none() {
        return Err(Error::ModelFormat("model has no views".into()));
    }
    Ok(TrainedModel {
        view1,
        view2,
        hp,
        labels,
        diagnostics,
    })
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    model_from_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(l: usize, u: usize, seed: u64) -> TrainingData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = l + u;
        let v1 = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
        let v2 = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
        let labels = (0..l).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        TrainingData::new(v1, v2, labels).unwrap()
    }

    fn gaussian(w: f64) -> KernelSpec {
        KernelSpec::gaussian(w).unwrap()
    }

    #[test]
    fn classify_tie_break() {
        assert_eq!(classify(0.3), 1);
        assert_eq!(classify(-0.3), -1);
        assert_eq!(classify(0.0), 1);
    }

    #[test]
    fn predictions_of_zero_model() {
        let data = random_data(3, 2, 1);
        let e = ViewExpansion {
            kernel: gaussian(1.0),
            graph: GraphConfig::default(),
            train: data.view1.clone(),
            alpha: DVector::zeros(5),
        };
        assert_eq!(e.score(&[0.3, 0.1]).unwrap(), 0.0);
        assert!(e.score(&[0.3]).is_err());
    }

    #[test]
    fn one_hot_expansion() {
        let train = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -0.5, 0.5, 3.0, 0.0]);
        let mut alpha = DVector::zeros(3);
        alpha[1] = 0.7;
        let e = ViewExpansion {
            kernel: KernelSpec::linear(true),
            graph: GraphConfig::default(),
            train,
            alpha,
        };
        // k(x_j, x_j) = 0.25 + 0.25 + 1
        assert_relative_eq!(e.score(&[-0.5, 0.5]).unwrap(), 1.5 * 0.7, epsilon = 1e-15);
    }

    #[test]
    fn combined_is_the_mean() {
        let data = random_data(4, 4, 2);
        let prepared = PreparedViews::new(data.clone(), [gaussian(0.8), KernelSpec::linear(true)], [GraphConfig { k: 3, sigma: None }; 2]).unwrap();
        let model = prepared.fit(&Hyperparams::new(0.1, 0.1, 0.1).unwrap(), Coupling::Joint).unwrap();
        let (x1, x2) = ([0.2, -0.4], [0.9, 0.1]);
        let f1 = model.predict_view(&x1, View::First).unwrap();
        let f2 = model.predict_view(&x2, View::Second).unwrap();
        assert_relative_eq!(model.predict_combined(&x1, &x2).unwrap(), 0.5 * (f1 + f2), epsilon = 1e-15);
        let batch = model
            .scores(Predictor::Combined, &DMatrix::from_row_slice(1, 2, &x1), &DMatrix::from_row_slice(1, 2, &x2))
            .unwrap();
        assert_relative_eq!(batch[0], 0.5 * (f1 + f2), epsilon = 1e-12);
    }

    #[test]
    fn batch_scores_match_naive_summation() {
        let data = random_data(4, 6, 3);
        let prepared = PreparedViews::new(data.clone(), [gaussian(0.5), gaussian(1.5)], [GraphConfig { k: 3, sigma: None }; 2]).unwrap();
        let model = prepared.fit(&Hyperparams::new(0.05, 0.2, 0.5).unwrap(), Coupling::Joint).unwrap();
        let e = model.expansion(View::Second).unwrap();
        let x = [0.33, -0.71];
        let mut naive = 0.0;
        for i in 0..e.train.nrows() {
            let d2 = (e.train[(i, 0)] - x[0]).powi(2) + (e.train[(i, 1)] - x[1]).powi(2);
            naive += e.alpha[i] * (-d2 / (2.0 * 1.5 * 1.5)).exp();
        }
        assert_relative_eq!(model.predict_view(&x, View::Second).unwrap(), naive, max_relative = 1e-12);
    }

    #[test]
    fn single_view_model_has_no_combined_predictor() {
        let data = random_data(4, 3, 4);
        let prepared = PreparedViews::new(data, [gaussian(1.0); 2], [GraphConfig { k: 2, sigma: None }; 2]).unwrap();
        let model = prepared.fit(&Hyperparams::new(0.1, 0.1, 5.0).unwrap(), Coupling::Single(View::Second)).unwrap();
        assert_eq!(model.predictors(), vec![Predictor::View2]);
        assert!(model.predict_combined(&[0.0, 0.0], &[0.0, 0.0]).is_err());
        assert_eq!(model.hp.gamma3, 0.0);
    }

    #[test]
    fn model_text_round_trip() {
        let data = random_data(3, 4, 5);
        let prepared = PreparedViews::new(data, [gaussian(0.7), KernelSpec::linear(true)], [GraphConfig::default(); 2]).unwrap();
        let model = prepared.fit(&Hyperparams::new(1e-2, 1.0, 1e-4).unwrap(), Coupling::Joint).unwrap();
        let back = model_from_str(&model_to_string(&model)).unwrap();
        assert_eq!(back, model);

        let single = prepared.fit(&Hyperparams::new(1e-2, 1.0, 0.0).unwrap(), Coupling::Single(View::First)).unwrap();
        assert_eq!(model_from_str(&model_to_string(&single)).unwrap(), single);
    }

    #[test]
    fn model_parse_errors() {
        assert!(model_from_str("not a model").is_err());
        assert!(model_from_str("mvlapsvm-model 1\ngamma 1 1\nend\n").is_err());
        assert!(model_from_str("mvlapsvm-model 1\ngamma 1 1 1\nlabels 1\n").is_err());
        let truncated = "mvlapsvm-model 1\ngamma 1 1 1\nlabels 1\nview 1\nkernel linear\ngraph 6 0.5\nrows 2 1\nalpha 0.1 0.2\nx 1.0\nend\n";
        assert!(model_from_str(truncated).is_err());
    }

    #[test]
    fn training_data_validation() {
        let v = DMatrix::zeros(3, 2);
        assert!(TrainingData::new(v.clone(), v.clone(), vec![]).is_err());
        assert!(TrainingData::new(v.clone(), v.clone(), vec![1.0, 0.0]).is_err());
        assert!(TrainingData::new(v.clone(), DMatrix::zeros(2, 2), vec![1.0]).is_err());
        assert!(TrainingData::new(v.clone(), v, vec![1.0; 4]).is_err());
    }
}
