use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use slfs::dataset::MissingPolicy;
use slfs::evaluation::{BenchmarkConfig, ClassifierKind, KnnMetric, SelectorKind};
use slfs::{ArrivalOrder, IrrelevanceMode, SlfsConfig};

/// Fully resolved settings of one run. The `--config` file has the same
/// shape; any field left out keeps its default, and flags win over both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub class: String,
    pub delimiter: char,
    pub missing_marker: String,
    pub missing: MissingPolicy,
    pub lambda: f64,
    pub max_depth: usize,
    pub nch: usize,
    pub epsilon: f64,
    pub irrelevance_mode: IrrelevanceMode,
    /// `column`, `shuffle` (uses `seed`) or `shuffle:SEED`.
    pub order: String,
    pub folds: usize,
    pub seed: u64,
    pub jobs: usize,
    pub alpha: f64,
    pub augmented: bool,
    pub selectors: Vec<SelectorKind>,
    pub classifiers: Vec<ClassifierKind>,
    pub baseline_m: Option<usize>,
    pub knn_metric: Option<KnnMetric>,
    pub global_discretization: bool,
    pub model: Option<PathBuf>,
    pub selection: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let slfs = SlfsConfig::default();
        let bench = BenchmarkConfig::default();
        Self {
            data: None,
            class: "class".into(),
            delimiter: ',',
            missing_marker: "?".into(),
            missing: MissingPolicy::Impute,
            lambda: slfs.lambda,
            max_depth: slfs.max_depth,
            nch: slfs.nch,
            epsilon: slfs.epsilon,
            irrelevance_mode: slfs.irrelevance_mode,
            order: "column".into(),
            folds: bench.folds,
            seed: bench.seed,
            jobs: 0,
            alpha: bench.alpha,
            augmented: false,
            selectors: bench.selectors,
            classifiers: bench.classifiers,
            baseline_m: None,
            knn_metric: None,
            global_discretization: false,
            model: None,
            selection: None,
            out_dir: PathBuf::from("."),
        }
    }
}

pub fn parse_order(s: &str, seed: u64) -> Result<ArrivalOrder, String> {
    match s {
        "column" => Ok(ArrivalOrder::ColumnOrder),
        "shuffle" => Ok(ArrivalOrder::Shuffled(seed)),
        _ => s
            .strip_prefix("shuffle:")
            .and_then(|n| n.parse().ok())
            .map(ArrivalOrder::Shuffled)
            .ok_or_else(|| format!("invalid --order {s:?} (column | shuffle | shuffle:SEED)")),
    }
}

impl RunConfig {
    pub fn slfs_config(&self) -> Result<SlfsConfig, String> {
        let cfg = SlfsConfig {
            lambda: self.lambda,
            max_depth: self.max_depth,
            nch: self.nch,
            epsilon: self.epsilon,
            irrelevance_mode: self.irrelevance_mode,
            arrival_order: parse_order(&self.order, self.seed)?,
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn benchmark_config(&self) -> Result<BenchmarkConfig, String> {
        if self.folds < 2 {
            return Err(format!("--folds must be >= 2, got {}", self.folds));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(format!("--alpha must be >= 0, got {}", self.alpha));
        }
        Ok(BenchmarkConfig {
            slfs: self.slfs_config()?,
            selectors: self.selectors.clone(),
            classifiers: self.classifiers.clone(),
            folds: self.folds,
            seed: self.seed,
            stratified: true,
            baseline_m: self.baseline_m,
            alpha: self.alpha,
            augmented: self.augmented,
            knn_metric: self.knn_metric,
            global_discretization: self.global_discretization,
        })
    }

    pub fn delimiter_byte(&self) -> Result<u8, String> {
        u8::try_from(self.delimiter)
            .ok()
            .filter(u8::is_ascii)
            .ok_or_else(|| format!("delimiter must be a single ASCII character, got {:?}", self.delimiter))
    }
}
