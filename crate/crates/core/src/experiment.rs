//! Repeated-split experiments with validation-based model selection.
//!
//! Each repetition draws a fresh split (seed `seed + repetition`), fits every
//! point of the hyperparameter grid on the labeled and unlabeled training
//! points, picks the hyperparameters and predictor with the best validation
//! accuracy, and reports accuracy on the test set and on the unlabeled
//! training points.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::{gen_two_moons_two_lines, load_dataset, make_split, DatasetPaths, Label, MultiViewDataset, SplitDataset, SplitSpec};
use crate::error::{invalid, Error, Result};
use crate::graph::GraphConfig;
use crate::kernel::{gram, median_width, KernelSpec};
use crate::linalg::select_rows;
use crate::model::{classify, Coupling, PreparedViews, Predictor, TrainedModel, TrainingData, View};
use crate::qp::{Hyperparams, SolverOptions};
use crate::theory::{complexity_u, generalization_bound, mc_rademacher, BoundReport, ComplexityInputs, ComplexityReport, McEstimate};

/// Regularization values searched for every coefficient by default.
pub const DEFAULT_GRID: [f64; 7] = [1e-10, 1e-6, 1e-4, 1e-2, 1.0, 10.0, 100.0];

/// A training method. The baselines are specializations of the two-view model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Manifold and disagreement regularization over both views.
    MvLapSvm,
    /// Independent Laplacian SVMs on each view (no disagreement term).
    LapSvm,
    /// Laplacian SVM on view 1 only.
    LapSvmView1,
    /// Laplacian SVM on view 2 only.
    LapSvmView2,
    /// Both views with disagreement but no manifold term.
    CoSvm,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::MvLapSvm,
        Method::LapSvm,
        Method::LapSvmView1,
        Method::LapSvmView2,
        Method::CoSvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::MvLapSvm => "mvlapsvm",
            Method::LapSvm => "lapsvm",
            Method::LapSvmView1 => "lapsvm_v1",
            Method::LapSvmView2 => "lapsvm_v2",
            Method::CoSvm => "cosvm",
        }
    }

    pub fn coupling(self) -> Coupling {
        match self {
            Method::MvLapSvm | Method::CoSvm => Coupling::Joint,
            Method::LapSvm => Coupling::Independent,
            Method::LapSvmView1 => Coupling::Single(View::First),
            Method::LapSvmView2 => Coupling::Single(View::Second),
        }
    }

    /// Grid points for this method in ascending lexicographic order.
    /// Coefficients a method does not use are fixed at 0.
    pub fn grid_points(self, grid: &Grid) -> Vec<Hyperparams> {
        let zero = [0.0];
        let g1 = grid.gamma1.as_slice();
        let g2: &[f64] = match self {
            Method::CoSvm => &zero,
            _ => &grid.gamma2,
        };
        let g3: &[f64] = match self {
            Method::MvLapSvm | Method::CoSvm => &grid.gamma3,
            _ => &zero,
        };
        let mut points = Vec::with_capacity(g1.len() * g2.len() * g3.len());
        for &a in g1 {
            for &b in g2 {
                for &c in g3 {
                    points.push(Hyperparams {
                        gamma1: a,
                        gamma2: b,
                        gamma3: c,
                    });
                }
            }
        }
        points
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| invalid(format!("unknown method {s:?}")))
    }
}

/// Candidate values per coefficient, kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub gamma3: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            gamma1: DEFAULT_GRID.to_vec(),
            gamma2: DEFAULT_GRID.to_vec(),
            gamma3: DEFAULT_GRID.to_vec(),
        }
    }
}

impl Grid {
    pub fn new(gamma1: Vec<f64>, gamma2: Vec<f64>, gamma3: Vec<f64>) -> Result<Self> {
        Ok(Self {
            gamma1: normalize_axis("gamma1", gamma1)?,
            gamma2: normalize_axis("gamma2", gamma2)?,
            gamma3: normalize_axis("gamma3", gamma3)?,
        })
    }

    pub fn single(hp: Hyperparams) -> Self {
        Self {
            gamma1: vec![hp.gamma1],
            gamma2: vec![hp.gamma2],
            gamma3: vec![hp.gamma3],
        }
    }
}

fn normalize_axis(name: &str, mut values: Vec<f64>) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(invalid(format!("{name} grid is empty")));
    }
    if let Some(bad) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(invalid(format!("{name} grid value {bad} is not a non-negative number")));
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    Ok(values)
}

/// Kernel choice before its width is resolved against training data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    Linear { augment_bias: bool },
    /// `None` uses the median pairwise distance of the view's training inputs.
    Gaussian { width: Option<f64> },
}

impl KernelChoice {
    pub fn resolve(&self, train: &DMatrix<f64>) -> Result<KernelSpec> {
        match *self {
            KernelChoice::Linear { augment_bias } => Ok(KernelSpec::linear(augment_bias)),
            KernelChoice::Gaussian { width: Some(w) } => KernelSpec::gaussian(w),
            KernelChoice::Gaussian { width: None } => {
                let w = median_width(train)?;
                if w == 0.0 {
                    return Err(invalid("training inputs coincide; set the gaussian width explicitly"));
                }
                KernelSpec::gaussian(w)
            }
        }
    }
}

impl fmt::Display for KernelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelChoice::Gaussian { width: None } => f.write_str("gaussian"),
            KernelChoice::Gaussian { width: Some(w) } => write!(f, "gaussian:{w:?}"),
            KernelChoice::Linear { augment_bias: true } => f.write_str("linear"),
            KernelChoice::Linear { augment_bias: false } => f.write_str("linear:nobias"),
        }
    }
}

impl FromStr for KernelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "gaussian" {
            return Ok(KernelChoice::Gaussian { width: None });
        }
        Ok(match s.parse::<KernelSpec>()? {
            KernelSpec::Linear { augment_bias } => KernelChoice::Linear { augment_bias },
            KernelSpec::Gaussian { width } => KernelChoice::Gaussian { width: Some(width) },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic { n_per_class: usize, noise: f64, seed: u64 },
    Csv(DatasetPaths),
}

impl DataSource {
    pub fn load(&self) -> Result<MultiViewDataset> {
        match self {
            DataSource::Synthetic {
                n_per_class,
                noise,
                seed,
            } => gen_two_moons_two_lines(*n_per_class, *noise, *seed),
            DataSource::Csv(paths) => load_dataset(paths),
        }
    }
}

/// Split sizes; the seed comes from the repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub labeled: usize,
    pub unlabeled: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn with_seed(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            n_labeled: self.labeled,
            n_unlabeled: self.unlabeled,
            n_validation: self.validation,
            n_test: self.test,
            seed,
        }
    }
}

/// Everything that defines an experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub split: SplitSizes,
    pub kernels: [KernelChoice; 2],
    pub graphs: [GraphConfig; 2],
    pub grid: Grid,
    pub methods: Vec<Method>,
    pub repetitions: usize,
    pub seed: u64,
    pub delta: f64,
    /// Attach complexity and bound reports to two-view runs.
    pub bounds: bool,
    /// Monte-Carlo draws for the complexity estimate; 0 skips it.
    pub mc_draws: usize,
    pub solver_tol: f64,
}

/// Default synthetic noise standard deviation.
pub const DEFAULT_NOISE: f64 = 0.45;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic {
                n_per_class: 205,
                noise: DEFAULT_NOISE,
                seed: 0,
            },
            split: SplitSizes {
                labeled: 10,
                unlabeled: 200,
                validation: 100,
                test: 100,
            },
            kernels: [KernelChoice::Gaussian { width: None }, KernelChoice::Linear { augment_bias: true }],
            graphs: [GraphConfig::default(); 2],
            grid: Grid::default(),
            methods: Method::ALL.to_vec(),
            repetitions: 10,
            seed: 0,
            delta: 0.05,
            bounds: false,
            mc_draws: 0,
            solver_tol: SolverOptions::default().tol,
        }
    }
}

/// Labels and per-view Gram matrices of an evaluation set against the
/// training points.
pub struct EvalSet {
    grams: [DMatrix<f64>; 2],
    labels: Vec<Label>,
}

impl EvalSet {
    fn new(dataset: &MultiViewDataset, idx: &[usize], prepared: &PreparedViews) -> Result<Self> {
        let mut grams = Vec::with_capacity(2);
        for view in View::BOTH {
            let x = select_rows(dataset.view(view.number()), idx);
            grams.push(gram(&prepared.kernel(view), &x, prepared.data().view(view))?);
        }
        let [g1, g2]: [DMatrix<f64>; 2] = grams.try_into().expect("two views");
        Ok(Self {
            grams: [g1, g2],
            labels: idx.iter().map(|&i| dataset.labels()[i]).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of examples `predictor` classifies correctly.
    pub fn correct(&self, model: &TrainedModel, predictor: Predictor) -> Result<usize> {
        let view_scores = |view: View| -> Result<nalgebra::DVector<f64>> {
            Ok(&self.grams[view.index()] * &model.expansion(view)?.alpha)
        };
        let scores = match predictor {
            Predictor::View1 => view_scores(View::First)?,
            Predictor::View2 => view_scores(View::Second)?,
            Predictor::Combined => (view_scores(View::First)? + view_scores(View::Second)?) * 0.5,
        };
        Ok(scores
            .iter()
            .zip(&self.labels)
            .filter(|(&s, &y)| classify(s) == y)
            .count())
    }

    /// Accuracy in percent; an empty set scores 0.
    pub fn accuracy(&self, model: &TrainedModel, predictor: Predictor) -> Result<f64> {
        if self.is_empty() {
            return Ok(0.0);
        }
        Ok(100.0 * self.correct(model, predictor)? as f64 / self.len() as f64)
    }
}

/// One split with its training matrices and evaluation sets.
pub struct Repetition {
    pub split: SplitDataset,
    pub prepared: PreparedViews,
    pub validation: EvalSet,
    pub test: EvalSet,
    pub unlabeled: EvalSet,
}

impl Repetition {
    /// Only labeled and unlabeled training rows enter the Gram matrices and
    /// Laplacians; validation and test rows are only ever predicted.
    pub fn new(dataset: &MultiViewDataset, split: SplitDataset, config: &ExperimentConfig) -> Result<Self> {
        let data = TrainingData::from_split(dataset, &split)?;
        let kernels = [
            config.kernels[0].resolve(&data.view1)?,
            config.kernels[1].resolve(&data.view2)?,
        ];
        let prepared = PreparedViews::new(data, kernels, config.graphs)?.with_solver(SolverOptions {
            tol: config.solver_tol,
            ..SolverOptions::default()
        });
        let validation = EvalSet::new(dataset, &split.validation_idx, &prepared)?;
        let test = EvalSet::new(dataset, &split.test_idx, &prepared)?;
        let unlabeled = EvalSet::new(dataset, &split.unlabeled_idx, &prepared)?;
        Ok(Self {
            split,
            prepared,
            validation,
            test,
            unlabeled,
        })
    }
}

/// Outcome of model selection on the validation set.
#[derive(Debug, Clone)]
pub struct Selection {
    pub hp: Hyperparams,
    pub predictor: Predictor,
    pub validation_correct: usize,
    pub model: TrainedModel,
    /// Grid points whose fit failed and were skipped.
    pub failed_points: usize,
}

/// Fit every grid point and choose the `(hyperparameters, predictor)` pair
/// with the most correct validation predictions. Ties go to the combined
/// predictor, then view 1, then view 2, and then to the lexicographically
/// smallest `(gamma1, gamma2, gamma3)`.
pub fn grid_search(rep: &Repetition, method: Method, grid: &Grid) -> Result<Selection> {
    let points = method.grid_points(grid);
    if points.is_empty() {
        return Err(invalid("hyperparameter grid is empty"));
    }
    let coupling = method.coupling();
    let outcomes: Vec<Option<Vec<(Predictor, usize)>>> = points
        .par_iter()
        .map(|hp| {
            let model = match rep.prepared.fit(hp, coupling) {
                Ok(m) => m,
                Err(e) => {
                    log::warn!("{method}: skipping grid point {hp:?}: {e}");
                    return None;
                }
            };
            model
                .predictors()
                .into_iter()
                .map(|p| rep.validation.correct(&model, p).map(|c| (p, c)))
                .collect::<Result<Vec<_>>>()
                .ok()
        })
        .collect();

    let failed_points = outcomes.iter().filter(|o| o.is_none()).count();
    let rank = |p: Predictor| Predictor::PREFERENCE.iter().position(|&q| q == p).expect("known predictor");
    let best = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.as_ref().map(|v| (i, v)))
        .flat_map(|(i, v)| v.iter().map(move |&(p, c)| (c, rank(p), i, p)))
        .min_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let Some((validation_correct, _, idx, predictor)) = best else {
        return Err(invalid(format!("{method}: every grid point failed to train")));
    };
    let hp = points[idx];
    let model = rep.prepared.fit(&hp, coupling)?;
    Ok(Selection {
        hp: model.hp,
        predictor,
        validation_correct,
        model,
        failed_points,
    })
}

/// Result of one method on one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub repetition: usize,
    pub split_seed: u64,
    pub hp: Hyperparams,
    pub predictor: Predictor,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
    pub unlabeled_accuracy: f64,
    pub complexity: Option<ComplexityReport>,
    pub mc: Option<McEstimate>,
    pub bound: Option<BoundReport>,
}

/// Mean and sample standard deviation of test and unlabeled accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub test_mean: f64,
    pub test_std: f64,
    pub unlabeled_mean: f64,
    pub unlabeled_std: f64,
}

impl Summary {
    pub fn from_runs(runs: &[RunRecord]) -> Self {
        let test: Vec<f64> = runs.iter().map(|r| r.test_accuracy).collect();
        let unl: Vec<f64> = runs.iter().map(|r| r.unlabeled_accuracy).collect();
        let (test_mean, test_std) = mean_std(&test);
        let (unlabeled_mean, unlabeled_std) = mean_std(&unl);
        Self {
            test_mean,
            test_std,
            unlabeled_mean,
            unlabeled_std,
        }
    }
}

/// Mean and sample (n - 1) standard deviation; a single value has std 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub method: Method,
    pub runs: Vec<RunRecord>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub methods: Vec<MethodReport>,
    pub repetitions: usize,
}

impl ExperimentReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }
}

fn run_method(rep: &Repetition, method: Method, config: &ExperimentConfig, r: usize, split_seed: u64) -> Result<RunRecord> {
    let sel = grid_search(rep, method, &config.grid)?;
    let test_accuracy = rep.test.accuracy(&sel.model, sel.predictor)?;
    let unlabeled_accuracy = rep.unlabeled.accuracy(&sel.model, sel.predictor)?;
    let validation_accuracy = if rep.validation.is_empty() {
        0.0
    } else {
        100.0 * sel.validation_correct as f64 / rep.validation.len() as f64
    };
    let (mut complexity, mut mc, mut bound) = (None, None, None);
    if config.bounds && sel.model.has_view(View::First) && sel.model.has_view(View::Second) {
        let inputs = ComplexityInputs::from_model(&sel.model)?;
        let report = complexity_u(&inputs, &sel.hp)?;
        bound = Some(generalization_bound(&sel.model, report.upper, config.delta)?);
        if config.mc_draws > 0 {
            mc = Some(mc_rademacher(&inputs, &sel.hp, config.mc_draws, split_seed)?);
        }
        complexity = Some(report);
    }
    Ok(RunRecord {
        repetition: r,
        split_seed,
        hp: sel.hp,
        predictor: sel.predictor,
        validation_accuracy,
        test_accuracy,
        unlabeled_accuracy,
        complexity,
        mc,
        bound,
    })
}

/// Run every repetition and method.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let dataset = config.source.load()?;
    let mut runs: Vec<Vec<RunRecord>> = vec![Vec::new(); config.methods.len()];
    for r in 0..config.repetitions {
        let split_seed = config.seed.wrapping_add(r as u64);
        let attempt = || -> Result<Vec<RunRecord>> {
            let split = make_split(&dataset, &config.split.with_seed(split_seed))?;
            let rep = Repetition::new(&dataset, split, config)?;
            config
                .methods
                .iter()
                .map(|&m| run_method(&rep, m, config, r, split_seed))
                .collect()
        };
        match attempt() {
            Ok(records) => {
                for (slot, rec) in runs.iter_mut().zip(records) {
                    slot.push(rec);
                }
                log::info!("repetition {} of {} done", r + 1, config.repetitions);
            }
            Err(e) => {
                let partial = assemble_report(config, runs, r);
                return Err(Error::InvalidArgument(format!(
                    "repetition {r} failed after {r} completed repetitions: {e}\n{}",
                    report_emit(&partial, ReportFormat::Tsv)
                )));
            }
        }
    }
    Ok(assemble_report(config, runs, config.repetitions))
}

fn assemble_report(config: &ExperimentConfig, runs: Vec<Vec<RunRecord>>, repetitions: usize) -> ExperimentReport {
    ExperimentReport {
        methods: config
            .methods
            .iter()
            .zip(runs)
            .map(|(&method, runs)| MethodReport {
                method,
                summary: Summary::from_runs(&runs),
                runs,
            })
            .collect(),
        repetitions,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Text,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(ReportFormat::Tsv),
            "text" => Ok(ReportFormat::Text),
            _ => Err(invalid(format!("unknown report format {s:?}"))),
        }
    }
}

pub const TSV_HEADER: &str = "method\tT_mean\tT_std\tU_mean\tU_std";

/// Render the per-method summary with two decimals.
pub fn report_emit(report: &ExperimentReport, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Tsv => {
            out.push_str(TSV_HEADER);
            out.push('\n');
            for m in &report.methods {
                let s = &m.summary;
                writeln!(
                    out,
                    "{}\t{:.2}\t{:.2}\t{:.2}\t{:.2}",
                    m.method, s.test_mean, s.test_std, s.unlabeled_mean, s.unlabeled_std
                )
                .unwrap();
            }
        }
        ReportFormat::Text => {
            writeln!(out, "accuracy (%) over {} repetitions, mean (std)", report.repetitions).unwrap();
            writeln!(out, "{:<12} {:>16} {:>16}", "method", "test", "unlabeled").unwrap();
            for m in &report.methods {
                let s = &m.summary;
                writeln!(
                    out,
                    "{:<12} {:>16} {:>16}",
                    m.method.name(),
                    format!("{:.2} ({:.2})", s.test_mean, s.test_std),
                    format!("{:.2} ({:.2})", s.unlabeled_mean, s.unlabeled_std)
                )
                .unwrap();
            }
        }
    }
    out
}

/// Per-repetition log as TSV, including selections and bound terms when present.
pub fn runs_tsv(report: &ExperimentReport) -> String {
    let mut out = String::from(
        "method\trepetition\tseed\tgamma1\tgamma2\tgamma3\tpredictor\tvalidation\ttest\tunlabeled\tU\tR_lower\tR_upper\tbound\n",
    );
    for m in &report.methods {
        for r in &m.runs {
            let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
            writeln!(
                out,
                "{}\t{}\t{}\t{:e}\t{:e}\t{:e}\t{}\t{:.2}\t{:.2}\t{:.2}\t{}\t{}\t{}\t{}",
                m.method,
                r.repetition,
                r.split_seed,
                r.hp.gamma1,
                r.hp.gamma2,
                r.hp.gamma3,
                r.predictor.name(),
                r.validation_accuracy,
                r.test_accuracy,
                r.unlabeled_accuracy,
                opt(r.complexity.map(|c| c.u)),
                opt(r.complexity.map(|c| c.lower)),
                opt(r.complexity.map(|c| c.upper)),
                opt(r.bound.map(|b| b.total)),
            )
            .unwrap();
        }
    }
    out
}

/// One parsed row of the summary TSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub summary: Summary,
}

pub fn parse_summary_tsv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == TSV_HEADER => {}
        _ => return Err(Error::Config { line: 1, message: "missing summary header".into() }),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let cols: Vec<&str> = l.split('\t').collect();
            let bad = |message: String| Error::Config { line: i + 1, message };
            if cols.len() != 5 {
                return Err(bad(format!("expected 5 columns, found {}", cols.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}")));
            Ok(SummaryRow {
                method: cols[0].to_string(),
                summary: Summary {
                    test_mean: num(cols[1])?,
                    test_std: num(cols[2])?,
                    unlabeled_mean: num(cols[3])?,
                    unlabeled_std: num(cols[4])?,
                },
            })
        })
        .collect()
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("{s:?}: {e}")))
        .collect()
}

fn parse_value<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("{value:?}: {e}"))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(invalid("repetitions must be at least 1"));
        }
        if self.grid.gamma1.is_empty() || self.grid.gamma2.is_empty() || self.grid.gamma3.is_empty() {
            return Err(invalid("hyperparameter grid lists must be non-empty"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.split.labeled == 0 {
            return Err(invalid("at least one labeled example is required"));
        }
        Ok(())
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        match key.trim() {
            "data.source" => {
                self.source = match value {
                    "synthetic" => DataSource::Synthetic {
                        n_per_class: 205,
                        noise: DEFAULT_NOISE,
                        seed: 0,
                    },
                    "csv" => DataSource::Csv(DatasetPaths::in_dir(".")),
                    other => return Err(format!("unknown data source {other:?}")),
                }
            }
            k @ ("data.n_per_class" | "data.noise" | "data.seed") => match &mut self.source {
                DataSource::Synthetic {
                    n_per_class,
                    noise,
                    seed,
                } => match k {
                    "data.n_per_class" => *n_per_class = parse_value(value)?,
                    "data.noise" => *noise = parse_value(value)?,
                    _ => *seed = parse_value(value)?,
                },
                DataSource::Csv(_) => return Err(format!("{k} only applies to synthetic data")),
            },
            k @ ("data.dir" | "data.view1" | "data.view2" | "data.labels") => {
                if !matches!(self.source, DataSource::Csv(_)) {
                    self.source = DataSource::Csv(DatasetPaths::in_dir("."));
                }
                let DataSource::Csv(paths) = &mut self.source else { unreachable!() };
                match k {
                    "data.dir" => *paths = DatasetPaths::in_dir(value),
                    "data.view1" => paths.view1 = value.into(),
                    "data.view2" => paths.view2 = value.into(),
                    _ => paths.labels = value.into(),
                }
            }
            "split.labeled" => self.split.labeled = parse_value(value)?,
            "split.unlabeled" => self.split.unlabeled = parse_value(value)?,
            "split.validation" => self.split.validation = parse_value(value)?,
            "split.test" => self.split.test = parse_value(value)?,
            "kernel1" => self.kernels[0] = parse_value(value)?,
            "kernel2" => self.kernels[1] = parse_value(value)?,
            k @ ("graph1.k" | "graph2.k") => self.graphs[usize::from(k.starts_with("graph2"))].k = parse_value(value)?,
            k @ ("graph1.sigma" | "graph2.sigma") => {
                self.graphs[usize::from(k.starts_with("graph2"))].sigma = if value == "auto" {
                    None
                } else {
                    Some(parse_value(value)?)
                }
            }
            "grid" => {
                let v: Vec<f64> = parse_list(value)?;
                self.grid = Grid::new(v.clone(), v.clone(), v).map_err(|e| e.to_string())?;
            }
            "grid.gamma1" => self.grid.gamma1 = normalize_axis("gamma1", parse_list(value)?).map_err(|e| e.to_string())?,
            "grid.gamma2" => self.grid.gamma2 = normalize_axis("gamma2", parse_list(value)?).map_err(|e| e.to_string())?,
            "grid.gamma3" => self.grid.gamma3 = normalize_axis("gamma3", parse_list(value)?).map_err(|e| e.to_string())?,
            "methods" => {
                let m: Vec<Method> = parse_list(value)?;
                self.methods = m;
            }
            "repetitions" => self.repetitions = parse_value(value)?,
            "seed" => self.seed = parse_value(value)?,
            "delta" => self.delta = parse_value(value)?,
            "bounds" => self.bounds = parse_value(value)?,
            "mc_draws" => self.mc_draws = parse_value(value)?,
            "solver.tol" => self.solver_tol = parse_value(value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Parse a flat `key = value` file on top of the defaults. Blank lines
    /// and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        config.apply(text)?;
        Ok(config)
    }

    /// Apply the settings in `text` to this config.
    pub fn apply(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                message: format!("expected key = value, found {line:?}"),
            })?;
            self.set(key, value).map_err(|message| Error::Config { line: i + 1, message })?;
        }
        Ok(())
    }

    /// Render as a config file that [`ExperimentConfig::parse`] reads back.
    pub fn to_kv_string(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        let sigma = |g: &GraphConfig| g.sigma.map_or_else(|| "auto".to_string(), |s| format!("{s:?}"));
        let mut out = String::new();
        match &self.source {
            DataSource::Synthetic {
                n_per_class,
                noise,
                seed,
            } => {
                writeln!(out, "data.source = synthetic").unwrap();
                writeln!(out, "data.n_per_class = {n_per_class}").unwrap();
                writeln!(out, "data.noise = {noise:?}").unwrap();
                writeln!(out, "data.seed = {seed}").unwrap();
            }
            DataSource::Csv(p) => {
                writeln!(out, "data.source = csv").unwrap();
                writeln!(out, "data.view1 = {}", p.view1.display()).unwrap();
                writeln!(out, "data.view2 = {}", p.view2.display()).unwrap();
                writeln!(out, "data.labels = {}", p.labels.display()).unwrap();
            }
        }
        writeln!(out, "split.labeled = {}", self.split.labeled).unwrap();
        writeln!(out, "split.unlabeled = {}", self.split.unlabeled).unwrap();
        writeln!(out, "split.validation = {}", self.split.validation).unwrap();
        writeln!(out, "split.test = {}", self.split.test).unwrap();
        writeln!(out, "kernel1 = {}", self.kernels[0]).unwrap();
        writeln!(out, "kernel2 = {}", self.kernels[1]).unwrap();
        for (i, g) in self.graphs.iter().enumerate() {
            writeln!(out, "graph{}.k = {}", i + 1, g.k).unwrap();
            writeln!(out, "graph{}.sigma = {}", i + 1, sigma(g)).unwrap();
        }
        writeln!(out, "grid.gamma1 = {}", list(&self.grid.gamma1)).unwrap();
        writeln!(out, "grid.gamma2 = {}", list(&self.grid.gamma2)).unwrap();
        writeln!(out, "grid.gamma3 = {}", list(&self.grid.gamma3)).unwrap();
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        writeln!(out, "methods = {}", methods.join(",")).unwrap();
        writeln!(out, "repetitions = {}", self.repetitions).unwrap();
        writeln!(out, "seed = {}", self.seed).unwrap();
        writeln!(out, "delta = {:?}", self.delta).unwrap();
        writeln!(out, "bounds = {}", self.bounds).unwrap();
        writeln!(out, "mc_draws = {}", self.mc_draws).unwrap();
        writeln!(out, "solver.tol = {:e}", self.solver_tol).unwrap();
        out
    }
}
