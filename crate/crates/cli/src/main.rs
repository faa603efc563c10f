use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mvlapsvm::data::{gen_two_moons_two_lines, load_dataset, make_split, save_dataset, DatasetPaths, MultiViewDataset, SplitDataset, SplitSpec, UNLABELED};
use mvlapsvm::experiment::{report_emit, run_experiment, runs_tsv, ExperimentConfig, Grid, KernelChoice, Method, ReportFormat, DEFAULT_NOISE};
use mvlapsvm::graph::{GraphConfig, DEFAULT_NEIGHBORS};
use mvlapsvm::model::{classify, load_model, save_model, PreparedViews, Predictor, TrainingData};
use mvlapsvm::qp::{Hyperparams, SolverOptions};
use mvlapsvm::theory::{complexity_u, generalization_bound, mc_rademacher, ComplexityInputs};

/// Two-view semi-supervised classification with manifold and
/// disagreement regularization.
#[derive(Parser)]
#[command(name = "mvlapsvm", version)]
struct Cli {
    /// Log verbosity (-v info, -vv debug). RUST_LOG overrides it.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the two-moons/two-lines dataset as view1.csv, view2.csv, labels.csv.
    Gen(GenArgs),
    /// Train one model. Rows labeled 0 are used as unlabeled points.
    Train(TrainArgs),
    /// Score a dataset with a saved model.
    Predict(PredictArgs),
    /// Report the complexity term and generalization bound of a saved model.
    Complexity(ComplexityArgs),
    /// Run the repeated-split experiment with validation-based selection.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Directory holding view1.csv, view2.csv and labels.csv.
    #[arg(long, default_value = ".")]
    data: PathBuf,
    /// View 1 file (overrides --data).
    #[arg(long)]
    view1: Option<PathBuf>,
    /// View 2 file (overrides --data).
    #[arg(long)]
    view2: Option<PathBuf>,
    /// Labels file with +1, -1 or 0 (overrides --data).
    #[arg(long)]
    labels: Option<PathBuf>,
}

impl DataArgs {
    fn paths(&self) -> DatasetPaths {
        let mut p = DatasetPaths::in_dir(&self.data);
        if let Some(v) = &self.view1 {
            p.view1 = v.clone();
        }
        if let Some(v) = &self.view2 {
            p.view2 = v.clone();
        }
        if let Some(v) = &self.labels {
            p.labels = v.clone();
        }
        p
    }

    fn load(&self) -> Result<MultiViewDataset> {
        let p = self.paths();
        load_dataset(&p).with_context(|| format!("loading dataset from {}", p.view1.parent().unwrap_or(Path::new(".")).display()))
    }
}

#[derive(Args)]
struct GenArgs {
    /// Examples per class.
    #[arg(long, default_value_t = 205)]
    n_per_class: usize,
    /// Standard deviation of the Gaussian noise on every coordinate.
    #[arg(long, default_value_t = DEFAULT_NOISE)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// mvlapsvm, lapsvm, lapsvm_v1, lapsvm_v2 or cosvm.
    #[arg(long, default_value = "mvlapsvm")]
    method: Method,
    /// Norm regularization.
    #[arg(long, default_value_t = 1e-4)]
    gamma1: f64,
    /// Manifold regularization.
    #[arg(long, default_value_t = 1e-4)]
    gamma2: f64,
    /// Disagreement regularization.
    #[arg(long, default_value_t = 1e-4)]
    gamma3: f64,
    /// Kernel of view 1: gaussian (median width), gaussian:<width>, linear, linear:nobias.
    #[arg(long, default_value = "gaussian")]
    kernel1: KernelChoice,
    /// Kernel of view 2.
    #[arg(long, default_value = "linear")]
    kernel2: KernelChoice,
    /// Graph neighbors per view.
    #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
    k: usize,
    /// Heat-kernel width of the view 1 graph (median distance if omitted).
    #[arg(long)]
    sigma1: Option<f64>,
    /// Heat-kernel width of the view 2 graph (median distance if omitted).
    #[arg(long)]
    sigma2: Option<f64>,
    /// Draw this many labeled rows at random and hide the other labels.
    #[arg(long, requires = "unlabeled")]
    labeled: Option<usize>,
    /// Unlabeled rows to draw together with --labeled.
    #[arg(long, requires = "labeled")]
    unlabeled: Option<usize>,
    /// Seed for --labeled/--unlabeled.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dual solver tolerance on the projected gradient.
    #[arg(long, default_value_t = SolverOptions::default().tol)]
    tol: f64,
    /// Model output file.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, short)]
    model: PathBuf,
    /// combined, view1 or view2 (default: combined when both views are trained).
    #[arg(long)]
    predictor: Option<Predictor>,
    /// Write `score,label` rows here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long, short)]
    model: PathBuf,
    /// Confidence parameter of the bound.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Monte-Carlo draws for an independent estimate (0 skips it).
    #[arg(long, default_value_t = 0)]
    mc_draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Key-value config file; see --dump-config for every key and its default.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. --set repetitions=3 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Summary format: tsv or text.
    #[arg(long, default_value = "tsv")]
    format: ReportFormat,
    /// Write the summary here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write per-repetition selections and bound terms as TSV.
    #[arg(long)]
    runs: Option<PathBuf>,
    /// Print the effective config and exit.
    #[arg(long)]
    dump_config: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mvlapsvm: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Complexity(a) => complexity(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let ds = gen_two_moons_two_lines(a.n_per_class, a.noise, a.seed)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    save_dataset(&ds, &DatasetPaths::in_dir(&a.out))?;
    eprintln!("wrote {} examples to {}", ds.len(), a.out.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let ds = a.data.load()?;
    let split = match (a.labeled, a.unlabeled) {
        (Some(l), Some(u)) => make_split(
            &ds,
            &SplitSpec {
                n_labeled: l,
                n_unlabeled: u,
                n_validation: 0,
                n_test: 0,
                seed: a.seed,
            },
        )?,
        _ => {
            let (unl, lab): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| ds.labels()[i] == UNLABELED);
            if lab.is_empty() {
                bail!("the dataset has no labeled rows");
            }
            SplitDataset {
                labeled_idx: lab,
                unlabeled_idx: unl,
                validation_idx: vec![],
                test_idx: vec![],
            }
        }
    };
    let data = TrainingData::from_split(&ds, &split)?;
    let kernels = [a.kernel1.resolve(&data.view1)?, a.kernel2.resolve(&data.view2)?];
    let graphs = [
        GraphConfig { k: a.k, sigma: a.sigma1 },
        GraphConfig { k: a.k, sigma: a.sigma2 },
    ];
    let hp = Hyperparams::new(a.gamma1, a.gamma2, a.gamma3)?;
    let hp = a.method.grid_points(&Grid::single(hp))[0];
    let prepared = PreparedViews::new(data, kernels, graphs)?.with_solver(SolverOptions {
        tol: a.tol,
        ..SolverOptions::default()
    });
    let model = prepared.fit(&hp, a.method.coupling())?;
    save_model(&model, &a.out)?;
    let d = &model.diagnostics;
    eprintln!(
        "trained {} on {} labeled + {} unlabeled rows: primal {:.6e}, dual {:.6e}, {} iterations",
        a.method,
        split.labeled_idx.len(),
        split.unlabeled_idx.len(),
        d.primal_value,
        d.dual_value,
        d.iterations
    );
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let ds = a.data.load()?;
    let predictor = match a.predictor {
        Some(p) => p,
        None => model.predictors()[0],
    };
    let scores = model.scores(predictor, ds.view1(), ds.view2())?;
    let mut out = String::new();
    let (mut known, mut correct) = (0usize, 0usize);
    for (s, &y) in scores.iter().zip(ds.labels()) {
        let c = classify(*s);
        out.push_str(&format!("{s:?},{c}\n"));
        if y != UNLABELED {
            known += 1;
            correct += usize::from(c == y);
        }
    }
    write_output(a.out.as_deref(), &out)?;
    if known > 0 {
        eprintln!(
            "{}: accuracy {:.2}% on {known} labeled rows",
            predictor.name(),
            100.0 * correct as f64 / known as f64
        );
    }
    Ok(())
}

fn complexity(a: ComplexityArgs) -> Result<()> {
    let model = load_model(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let inputs = ComplexityInputs::from_model(&model)?;
    let r = complexity_u(&inputs, &model.hp)?;
    println!("labeled\t{}", r.n_labeled);
    println!("unlabeled\t{}", r.n_unlabeled);
    println!("trace_s\t{:.10e}", r.trace_s);
    println!("trace_correction\t{:.10e}", r.trace_correction);
    println!("U\t{:.10e}", r.u);
    println!("R_lower\t{:.10e}", r.lower);
    println!("R_upper\t{:.10e}", r.upper);
    if a.mc_draws > 0 {
        let mc = mc_rademacher(&inputs, &model.hp, a.mc_draws, a.seed)?;
        println!("R_mc\t{:.10e}", mc.mean);
        println!("R_mc_stderr\t{:.10e}", mc.std_error);
    }
    let b = generalization_bound(&model, r.upper, a.delta)?;
    println!("slack_mean\t{:.10e}", b.slack_mean);
    println!("bound\t{:.10e}", b.total);
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut config = ExperimentConfig::default();
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        config.apply(&text).with_context(|| format!("in {}", path.display()))?;
    }
    for kv in &a.overrides {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--set expects KEY=VALUE, got {kv:?}");
        };
        config.set(k, v).map_err(anyhow::Error::msg).with_context(|| format!("--set {kv}"))?;
    }
    if a.dump_config {
        print!("{}", config.to_kv_string());
        return Ok(());
    }
    let report = run_experiment(&config)?;
    write_output(a.out.as_deref(), &report_emit(&report, a.format))?;
    if let Some(path) = &a.runs {
        fs::write(path, runs_tsv(&report)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
