mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use slfs::dataset::MissingPolicy;
use slfs::evaluation::{ClassifierKind, KnnMetric, SelectorKind};
use slfs::IrrelevanceMode;

use commands::Failure;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "slfs", version, about = "Tree-structured feature selection and its induced classifier")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit MDLP cut points and write the discretized table
    Discretize(Flags),
    /// Run feature selection and write the tree, trace and selection
    Select(Flags),
    /// Select features and fit the induced classifier
    Train(Flags),
    /// Classify rows with a trained model (--model)
    Predict(Flags),
    /// Stratified k-fold comparison of selectors and classifiers
    Benchmark(Flags),
    /// Write the tree of a selection (--selection) or model (--model) as DOT
    ExportDot(Flags),
    /// Repeat a recorded run
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    MiZero,
    Eq7,
}

#[derive(Clone, Copy, ValueEnum)]
enum MissingArg {
    Impute,
    Drop,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Hamming,
    Euclidean,
}

fn parse_selector(s: &str) -> Result<SelectorKind, String> {
    s.parse()
}

fn parse_classifier(s: &str) -> Result<ClassifierKind, String> {
    s.parse()
}

#[derive(Args, Default)]
struct Flags {
    /// JSON file with any subset of the settings below; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV with a header row
    #[arg(long)]
    data: Option<PathBuf>,
    /// Class column name or zero-based index [default: class]
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    delimiter: Option<char>,
    /// Missing-value marker [default: ?]
    #[arg(long)]
    missing_marker: Option<String>,
    #[arg(long, value_enum)]
    missing: Option<MissingArg>,
    /// Weight of the class-likelihood term [default: 1]
    #[arg(long)]
    lambda: Option<f64>,
    /// Maximum tree depth below the class [default: 2]
    #[arg(long)]
    max_depth: Option<usize>,
    /// Maximum children per node [default: 15]
    #[arg(long)]
    nch: Option<usize>,
    /// Irrelevance threshold in bits [default: 0.01]
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    irrelevance_mode: Option<ModeArg>,
    /// Feature arrival order: column | shuffle | shuffle:SEED
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    folds: Option<usize>,
    /// Master seed for fold assignment and shuffled arrival [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); results do not depend on it
    #[arg(long)]
    jobs: Option<usize>,
    /// Additive smoothing for the Bayesian classifiers [default: 1]
    #[arg(long)]
    alpha: Option<f64>,
    /// Condition deep tables on (parent, class)
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    augmented: Option<bool>,
    /// Comma-separated: slfs, mrmr, chi2, all
    #[arg(long, value_delimiter = ',', value_parser = parse_selector)]
    selectors: Option<Vec<SelectorKind>>,
    /// Comma-separated: knnK, nb, bnslfs, majority
    #[arg(long, value_delimiter = ',', value_parser = parse_classifier)]
    classifiers: Option<Vec<ClassifierKind>>,
    /// Feature count for mRMR and chi-square [default: SLFS count per fold]
    #[arg(long)]
    baseline_m: Option<usize>,
    #[arg(long, value_enum)]
    knn_metric: Option<MetricArg>,
    /// Fit cut points once on all rows instead of per training fold
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    global_discretization: Option<bool>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    selection: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Defaults to the manifest's directory
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Absolute form of an existing path so manifests replay from any cwd.
fn absolute(p: PathBuf) -> PathBuf {
    std::fs::canonicalize(&p).unwrap_or(p)
}

impl Flags {
    fn resolve(self) -> Result<RunConfig, Failure> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Usage(format!("cannot read --config {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| Failure::Usage(format!("invalid --config {}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { c.$field = v; } )* };
        }
        set!(class, delimiter, missing_marker, lambda, max_depth, nch, epsilon, order, folds, seed, jobs, alpha, augmented, selectors, classifiers, global_discretization, out_dir);
        if let Some(v) = self.data {
            c.data = Some(v);
        }
        if let Some(v) = self.model {
            c.model = Some(v);
        }
        if let Some(v) = self.selection {
            c.selection = Some(v);
        }
        if let Some(v) = self.baseline_m {
            c.baseline_m = Some(v);
        }
        if let Some(m) = self.missing {
            c.missing = match m {
                MissingArg::Impute => MissingPolicy::Impute,
                MissingArg::Drop => MissingPolicy::DropRows,
            };
        }
        if let Some(m) = self.irrelevance_mode {
            c.irrelevance_mode = match m {
                ModeArg::MiZero => IrrelevanceMode::MiZero,
                ModeArg::Eq7 => IrrelevanceMode::Eq7Inequalities,
            };
        }
        if let Some(m) = self.knn_metric {
            c.knn_metric = Some(match m {
                MetricArg::Hamming => KnnMetric::HammingOnCodes,
                MetricArg::Euclidean => KnnMetric::EuclideanOnRaw,
            });
        }
        c.data = c.data.map(absolute);
        c.model = c.model.map(absolute);
        c.selection = c.selection.map(absolute);
        // validate early so bad values exit before any work
        c.slfs_config().map_err(Failure::Usage)?;
        c.delimiter_byte().map_err(Failure::Usage)?;
        Ok(c)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, outcome) = match cli.command {
        Cmd::Replay(a) => ("replay", commands::replay(&a.manifest, a.out_dir)),
        cmd => {
            let (name, flags) = match cmd {
                Cmd::Discretize(f) => ("discretize", f),
                Cmd::Select(f) => ("select", f),
                Cmd::Train(f) => ("train", f),
                Cmd::Predict(f) => ("predict", f),
                Cmd::Benchmark(f) => ("benchmark", f),
                Cmd::ExportDot(f) => ("export-dot", f),
                Cmd::Replay(_) => unreachable!(),
            };
            let outcome = flags.resolve().and_then(|cfg| {
                let work = || commands::run(name, &cfg);
                if cfg.jobs > 0 {
                    match rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build() {
                        Ok(pool) => pool.install(work),
                        Err(e) => Err(Failure::Other(e.into())),
                    }
                } else {
                    work()
                }
            });
            (name, outcome)
        }
    };
    match outcome {
        Ok(_) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            let mut cmd = Cli::command();
            cmd.build();
            let sub = cmd.find_subcommand_mut(name).expect("known subcommand");
            sub.error(ErrorKind::ValueValidation, msg).exit()
        }
        Err(f) => {
            let code = f.code();
            match f {
                Failure::Data(e) | Failure::Schema(e) | Failure::Other(e) => eprintln!("error: {e:#}"),
                Failure::Usage(_) => unreachable!(),
            }
            ExitCode::from(code as u8)
        }
    }
}
