//! Baseline selectors, reference classifiers and the k-fold benchmark.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bn_classifier::{posterior_from_log_scores, CptModel, ModelError};
use crate::dataset::{ColumnData, DataError, DiscreteDataset, Encoder, RawTable};
use crate::discretizer::{class_codes, discretize_all, CutList};
use crate::info_metrics::{MiCache, Var};
use crate::slfs::{run_slfs, SlfsConfig, SlfsError};
use crate::tbn::{Node, Tbn};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation setting: {0}")]
    Config(String),
    #[error("training slice is empty")]
    EmptyTraining,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Slfs(#[from] SlfsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

// ---------------------------------------------------------------------------
// folds

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index of every row.
    pub assignments: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldPlan {
    /// Shuffles rows (per class when stratified, classes in code order) with
    /// one seeded generator, concatenates, and deals position `i` to fold
    /// `i % k`.
    pub fn new(labels: &[u32], k: usize, seed: u64, stratified: bool) -> Result<Self, EvalError> {
        let n = labels.len();
        if k < 2 || k > n {
            return Err(EvalError::Config(format!(
                "fold count must be in [2, {n}], got {k}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order: Vec<usize> = if stratified {
            let n_classes = labels.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
            let mut order = Vec::with_capacity(n);
            for c in 0..n_classes {
                let mut rows: Vec<usize> = (0..n).filter(|&r| labels[r] as usize == c).collect();
                rows.shuffle(&mut rng);
                order.extend(rows);
            }
            order
        } else {
            let mut rows: Vec<usize> = (0..n).collect();
            rows.shuffle(&mut rng);
            rows
        };
        let mut assignments = vec![0; n];
        for (i, r) in order.into_iter().enumerate() {
            assignments[r] = i % k;
        }
        Ok(Self {
            k,
            assignments,
            seed,
            stratified,
        })
    }

    /// (training rows, held-out rows), both ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignments.len()).partition(|&r| self.assignments[r] != fold)
    }
}

// ---------------------------------------------------------------------------
// baseline selectors

/// Greedy max-relevance min-redundancy (difference form). Ties go to the
/// smaller feature index.
pub fn mrmr_select(data: &DiscreteDataset, m: usize) -> Result<Vec<usize>, EvalError> {
    mrmr_select_with(&MiCache::new(data), m, true)
}

/// `redundancy = false` drops the penalty, which gives a plain MI ranking.
pub fn mrmr_select_with(cache: &MiCache, m: usize, redundancy: bool) -> Result<Vec<usize>, EvalError> {
    let p = cache.dataset().n_features();
    if m < 1 || m > p {
        return Err(EvalError::Config(format!("mRMR target must be in [1, {p}], got {m}")));
    }
    let relevance: Vec<f64> = (0..p).map(|f| cache.mi(Var::Feature(f), Var::Class)).collect();
    let mut redundancy_sum = vec![0.0; p];
    let mut chosen = vec![false; p];
    let mut selected = Vec::with_capacity(m);
    while selected.len() < m {
        let s = selected.len() as f64;
        let mut best: Option<(usize, f64)> = None;
        for f in (0..p).filter(|&f| !chosen[f]) {
            let score = if redundancy && s > 0.0 {
                relevance[f] - redundancy_sum[f] / s
            } else {
                relevance[f]
            };
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((f, score));
            }
        }
        let (f, _) = best.expect("m <= p leaves a candidate");
        chosen[f] = true;
        selected.push(f);
        if redundancy {
            for g in (0..p).filter(|&g| !chosen[g]) {
                redundancy_sum[g] += cache.mi(Var::Feature(g), Var::Feature(f));
            }
        }
    }
    Ok(selected)
}

/// Pearson chi-square of the feature-by-class table.
pub fn chi2_statistic(x: &[u32], y: &[u32]) -> f64 {
    let ax = x.iter().map(|&v| v as usize + 1).max().unwrap_or(0);
    let ay = y.iter().map(|&v| v as usize + 1).max().unwrap_or(0);
    let mut table = vec![0u64; ax * ay];
    for (&a, &b) in x.iter().zip(y) {
        table[a as usize * ay + b as usize] += 1;
    }
    let n = x.len() as f64;
    let rows: Vec<u64> = (0..ax).map(|a| table[a * ay..(a + 1) * ay].iter().sum()).collect();
    let cols: Vec<u64> = (0..ay).map(|b| (0..ax).map(|a| table[a * ay + b]).sum()).collect();
    let mut chi = 0.0;
    for a in 0..ax {
        for b in 0..ay {
            let e = rows[a] as f64 * cols[b] as f64 / n;
            if e > 0.0 {
                let d = table[a * ay + b] as f64 - e;
                chi += d * d / e;
            }
        }
    }
    chi
}

/// Features by descending chi-square, ties to the smaller index.
pub fn chi2_rank(data: &DiscreteDataset) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = (0..data.n_features())
        .map(|f| (f, chi2_statistic(data.feature(f), data.class_codes())))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}

// ---------------------------------------------------------------------------
// reference classifiers

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnMetric {
    HammingOnCodes,
    /// Squared Euclidean on numeric columns; a categorical mismatch adds 1.
    EuclideanOnRaw,
}

/// Majority vote among the `k` nearest training rows. Distance ties go to
/// the lower row index, vote ties to the smaller class.
pub fn knn_classify(
    train: &[Vec<f64>],
    labels: &[u32],
    categorical: &[bool],
    test: &[f64],
    k: usize,
    metric: KnnMetric,
) -> Result<u32, EvalError> {
    if train.is_empty() {
        return Err(EvalError::EmptyTraining);
    }
    if k == 0 || k > train.len() {
        return Err(EvalError::Config(format!(
            "k must be in [1, {}], got {k}",
            train.len()
        )));
    }
    let dist = |row: &[f64]| -> f64 {
        row.iter()
            .zip(test)
            .enumerate()
            .map(|(c, (&a, &b))| match metric {
                KnnMetric::HammingOnCodes => (a != b) as u8 as f64,
                KnnMetric::EuclideanOnRaw if categorical.get(c).copied().unwrap_or(false) => {
                    (a != b) as u8 as f64
                }
                KnnMetric::EuclideanOnRaw => (a - b) * (a - b),
            })
            .sum()
    };
    let mut order: Vec<(f64, usize)> = train.iter().enumerate().map(|(i, r)| (dist(r), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let n_classes = labels.iter().map(|&c| c as usize + 1).max().unwrap_or(1);
    let mut votes = vec![0usize; n_classes];
    for &(_, i) in &order[..k] {
        votes[labels[i] as usize] += 1;
    }
    let mut best = 0;
    for c in 1..n_classes {
        if votes[c] > votes[best] {
            best = c;
        }
    }
    Ok(best as u32)
}

/// Naive Bayes over discrete codes with additive smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayes {
    features: Vec<usize>,
    log_prior: Vec<f64>,
    prior: Vec<f64>,
    /// Per feature: `[class][code]` log probabilities, plus the unseen-code
    /// log probability per class.
    tables: Vec<(Vec<Vec<f64>>, Vec<f64>)>,
}

impl NaiveBayes {
    pub fn fit(data: &DiscreteDataset, features: &[usize], alpha: f64) -> Self {
        let k = data.n_classes();
        let y = data.class_codes();
        let mut class_n = vec![0usize; k];
        for &c in y {
            class_n[c as usize] += 1;
        }
        let n = y.len() as f64;
        let prior: Vec<f64> = class_n
            .iter()
            .map(|&c| {
                let d = n + alpha * k as f64;
                if d == 0.0 { 1.0 / k as f64 } else { (c as f64 + alpha) / d }
            })
            .collect();
        let mut features = features.to_vec();
        features.sort_unstable();
        let tables = features
            .iter()
            .map(|&f| {
                let ar = data.arity(f);
                let mut counts = vec![vec![0usize; ar]; k];
                for (&v, &c) in data.feature(f).iter().zip(y) {
                    counts[c as usize][v as usize] += 1;
                }
                let mut unseen = Vec::with_capacity(k);
                let logs = counts
                    .iter()
                    .enumerate()
                    .map(|(c, row)| {
                        let d = class_n[c] as f64 + alpha * ar as f64;
                        unseen.push(if d == 0.0 { f64::NEG_INFINITY } else { (alpha / d).ln() });
                        row.iter()
                            .map(|&m| if d == 0.0 { (1.0 / ar as f64).ln() } else { ((m as f64 + alpha) / d).ln() })
                            .collect()
                    })
                    .collect();
                (logs, unseen)
            })
            .collect();
        Self {
            features,
            log_prior: prior.iter().map(|p| p.ln()).collect(),
            prior,
            tables,
        }
    }

    pub fn predict(&self, row: &[u32]) -> (usize, Vec<f64>) {
        let scores: Vec<f64> = (0..self.log_prior.len())
            .map(|c| {
                let mut s = self.log_prior[c];
                for (&f, (logs, unseen)) in self.features.iter().zip(&self.tables) {
                    s += logs[c].get(row[f] as usize).copied().unwrap_or(unseen[c]);
                }
                s
            })
            .collect();
        posterior_from_log_scores(&scores, &self.prior)
    }
}

/// Most frequent class, ties to the smaller code.
pub fn majority_class(labels: &[u32]) -> u32 {
    let n = labels.iter().map(|&c| c as usize + 1).max().unwrap_or(1);
    let mut counts = vec![0usize; n];
    for &c in labels {
        counts[c as usize] += 1;
    }
    let mut best = 0;
    for c in 1..n {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    best as u32
}

// ---------------------------------------------------------------------------
// benchmark

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectorKind {
    Slfs,
    Mrmr,
    Chi2,
    All,
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectorKind::Slfs => "slfs",
            SelectorKind::Mrmr => "mrmr",
            SelectorKind::Chi2 => "chi2",
            SelectorKind::All => "all",
        })
    }
}

impl FromStr for SelectorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "slfs" => Ok(SelectorKind::Slfs),
            "mrmr" => Ok(SelectorKind::Mrmr),
            "chi2" => Ok(SelectorKind::Chi2),
            "all" => Ok(SelectorKind::All),
            _ => Err(format!("unknown selector {s:?} (slfs, mrmr, chi2, all)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ClassifierKind {
    Knn(usize),
    NaiveBayes,
    Bnslfs,
    Majority,
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifierKind::Knn(k) => write!(f, "knn{k}"),
            ClassifierKind::NaiveBayes => f.write_str("nb"),
            ClassifierKind::Bnslfs => f.write_str("bnslfs"),
            ClassifierKind::Majority => f.write_str("majority"),
        }
    }
}

impl FromStr for ClassifierKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "nb" => Ok(ClassifierKind::NaiveBayes),
            "bnslfs" => Ok(ClassifierKind::Bnslfs),
            "majority" => Ok(ClassifierKind::Majority),
            _ => s
                .strip_prefix("knn")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k > 0)
                .map(ClassifierKind::Knn)
                .ok_or_else(|| format!("unknown classifier {s:?} (knnK, nb, bnslfs, majority)")),
        }
    }
}

impl TryFrom<String> for ClassifierKind {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<ClassifierKind> for String {
    fn from(c: ClassifierKind) -> String {
        c.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub slfs: SlfsConfig,
    pub selectors: Vec<SelectorKind>,
    pub classifiers: Vec<ClassifierKind>,
    pub folds: usize,
    pub seed: u64,
    pub stratified: bool,
    /// Feature count for mRMR and chi-square; `None` matches the SLFS count
    /// of the same fold.
    pub baseline_m: Option<usize>,
    /// Smoothing for both Bayesian classifiers.
    pub alpha: f64,
    pub augmented: bool,
    /// `None` picks Hamming for all-categorical data, Euclidean otherwise.
    pub knn_metric: Option<KnnMetric>,
    /// Fit cuts once on the whole table instead of per training fold.
    pub global_discretization: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            slfs: SlfsConfig::default(),
            selectors: vec![SelectorKind::Slfs, SelectorKind::Mrmr, SelectorKind::Chi2],
            classifiers: vec![
                ClassifierKind::Knn(3),
                ClassifierKind::Knn(5),
                ClassifierKind::Knn(7),
                ClassifierKind::NaiveBayes,
                ClassifierKind::Bnslfs,
            ],
            folds: 10,
            seed: 0,
            stratified: true,
            baseline_m: None,
            alpha: 1.0,
            augmented: false,
            knn_metric: None,
            global_discretization: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub dataset: String,
    pub selector: SelectorKind,
    pub classifier: ClassifierKind,
    pub fold: usize,
    pub n_selected: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub dataset: String,
    pub selector: SelectorKind,
    pub classifier: ClassifierKind,
    pub mean_accuracy: f64,
    /// Sample standard deviation over folds.
    pub std_accuracy: f64,
    pub mean_selected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub dataset: String,
    pub folds: usize,
    pub seed: u64,
    pub rows: Vec<FoldRow>,
    pub cells: Vec<CellSummary>,
    /// Per-fold wall time; kept out of serialized output so reports are
    /// byte-stable across runs.
    #[serde(skip)]
    pub wall_times: Vec<Duration>,
}

impl BenchmarkReport {
    pub fn cell(&self, selector: SelectorKind, classifier: ClassifierKind) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.selector == selector && c.classifier == classifier)
    }

    /// One line per (dataset, selector, classifier, fold).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,selector,classifier,fold,n_selected,accuracy\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:.6}\n",
                r.dataset, r.selector, r.classifier, r.fold, r.n_selected, r.accuracy
            ));
        }
        out
    }
}

struct FoldData {
    train_d: DiscreteDataset,
    test_d: DiscreteDataset,
    train_raw: Vec<Vec<f64>>,
    test_raw: Vec<Vec<f64>>,
    categorical: Vec<bool>,
}

/// Raw numeric view for KNN: numeric cells as values, categorical cells as
/// their codes. Missing numeric cells become 0 (impute beforehand).
fn raw_rows(table: &RawTable, codes: &DiscreteDataset) -> Vec<Vec<f64>> {
    (0..table.n_rows())
        .map(|r| {
            table
                .features
                .iter()
                .enumerate()
                .map(|(f, c)| match &c.data {
                    ColumnData::Numeric(v) => v[r].unwrap_or(0.0),
                    ColumnData::Categorical(_) => codes.feature(f)[r] as f64,
                })
                .collect()
        })
        .collect()
}

fn prepare_fold(
    table: &RawTable,
    labels: &[String],
    train: &[usize],
    test: &[usize],
    global_cuts: Option<&[CutList]>,
) -> Result<FoldData, EvalError> {
    let train_tab = table.select_rows(train);
    let test_tab = table.select_rows(test);
    let fitted;
    let cuts = match global_cuts {
        Some(c) => c,
        None => {
            fitted = discretize_all(&train_tab, &class_codes(&train_tab, labels));
            &fitted
        }
    };
    let enc = Encoder::fit_with_classes(&train_tab, cuts, labels.to_vec())?;
    let train_d = enc.transform(&train_tab)?;
    let test_d = enc.transform(&test_tab)?;
    let categorical = table
        .features
        .iter()
        .map(|c| matches!(c.data, ColumnData::Categorical(_)))
        .collect();
    Ok(FoldData {
        train_raw: raw_rows(&train_tab, &train_d),
        test_raw: raw_rows(&test_tab, &test_d),
        train_d,
        test_d,
        categorical,
    })
}

/// Tree used by the BN classifier for a plain feature list: every feature
/// hangs off the class.
pub fn flat_tree(features: &[usize]) -> Tbn {
    let mut t = Tbn::new(1, features.len().max(1));
    let mut fs = features.to_vec();
    fs.sort_unstable();
    for f in fs {
        t.add_edge(Node::Class, f).expect("flat tree has room");
    }
    t
}

fn accuracy(pred: impl Iterator<Item = u32>, truth: &[u32]) -> f64 {
    let correct = pred.zip(truth).filter(|(p, t)| p == *t).count();
    correct as f64 / truth.len() as f64
}

fn classify(
    fd: &FoldData,
    features: &[usize],
    tree: &Tbn,
    kind: ClassifierKind,
    cfg: &BenchmarkConfig,
    metric: KnnMetric,
) -> Result<f64, EvalError> {
    let truth = fd.test_d.class_codes();
    Ok(match kind {
        ClassifierKind::Majority => {
            let m = majority_class(fd.train_d.class_codes());
            accuracy(truth.iter().map(|_| m), truth)
        }
        ClassifierKind::NaiveBayes => {
            let nb = NaiveBayes::fit(&fd.train_d, features, cfg.alpha);
            accuracy((0..truth.len()).map(|r| nb.predict(&fd.test_d.row(r)).0 as u32), truth)
        }
        ClassifierKind::Bnslfs => {
            let model = CptModel::fit_with(tree, &fd.train_d, cfg.alpha, cfg.augmented)?;
            let mut preds = Vec::with_capacity(truth.len());
            for r in 0..truth.len() {
                preds.push(model.predict(&fd.test_d.row(r))?.0 as u32);
            }
            accuracy(preds.into_iter(), truth)
        }
        ClassifierKind::Knn(k) => {
            let (train, test): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match metric {
                KnnMetric::HammingOnCodes => (
                    (0..fd.train_d.n_rows())
                        .map(|r| features.iter().map(|&f| fd.train_d.feature(f)[r] as f64).collect())
                        .collect(),
                    (0..fd.test_d.n_rows())
                        .map(|r| features.iter().map(|&f| fd.test_d.feature(f)[r] as f64).collect())
                        .collect(),
                ),
                KnnMetric::EuclideanOnRaw => (
                    fd.train_raw.iter().map(|row| features.iter().map(|&f| row[f]).collect()).collect(),
                    fd.test_raw.iter().map(|row| features.iter().map(|&f| row[f]).collect()).collect(),
                ),
            };
            let cat: Vec<bool> = features.iter().map(|&f| fd.categorical[f]).collect();
            let labels = fd.train_d.class_codes();
            let k = k.min(train.len());
            let mut preds = Vec::with_capacity(test.len());
            for row in &test {
                preds.push(knn_classify(&train, labels, &cat, row, k, metric)?);
            }
            accuracy(preds.into_iter(), truth)
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    name: &str,
    table: &RawTable,
    labels: &[String],
    plan: &FoldPlan,
    fold: usize,
    cfg: &BenchmarkConfig,
    global_cuts: Option<&[CutList]>,
    metric: KnnMetric,
) -> Result<Vec<FoldRow>, EvalError> {
    let (train, test) = plan.split(fold);
    if train.is_empty() {
        return Err(EvalError::EmptyTraining);
    }
    let fd = prepare_fold(table, labels, &train, &test, global_cuts)?;
    let present = {
        let mut seen = vec![false; labels.len()];
        fd.train_d.class_codes().iter().for_each(|&c| seen[c as usize] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if present < labels.len() {
        log::warn!("fold {fold}: {} classes absent from training rows", labels.len() - present);
    }

    let p = fd.train_d.n_features();
    let cache = MiCache::new(&fd.train_d);
    let needs_slfs = cfg.selectors.contains(&SelectorKind::Slfs)
        || (cfg.baseline_m.is_none()
            && cfg.selectors.iter().any(|s| matches!(s, SelectorKind::Mrmr | SelectorKind::Chi2)));
    let slfs = if needs_slfs {
        Some(run_slfs(&fd.train_d, &cfg.slfs)?)
    } else {
        None
    };
    let m = cfg
        .baseline_m
        .unwrap_or_else(|| slfs.as_ref().map_or(p, |s| s.selected.len()))
        .clamp(1, p.max(1));

    let mut rows = Vec::new();
    for &sel in &cfg.selectors {
        let (features, tree) = match sel {
            SelectorKind::Slfs => {
                let s = slfs.as_ref().expect("slfs ran");
                (s.selected.clone(), s.tbn.clone())
            }
            SelectorKind::Mrmr => {
                let f = mrmr_select_with(&cache, m, true)?;
                let t = flat_tree(&f);
                (f, t)
            }
            SelectorKind::Chi2 => {
                let f: Vec<usize> = chi2_rank(&fd.train_d).into_iter().take(m).map(|(f, _)| f).collect();
                let t = flat_tree(&f);
                (f, t)
            }
            SelectorKind::All => {
                let f: Vec<usize> = (0..p).collect();
                let t = flat_tree(&f);
                (f, t)
            }
        };
        for &clf in &cfg.classifiers {
            rows.push(FoldRow {
                dataset: name.to_string(),
                selector: sel,
                classifier: clf,
                fold,
                n_selected: features.len(),
                accuracy: classify(&fd, &features, &tree, clf, cfg, metric)?,
            });
        }
    }
    Ok(rows)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every selector x classifier cell over the folds of `plan`. Folds run
/// in parallel on the current rayon pool; rows come back ordered by
/// (selector, classifier, fold) regardless of scheduling.
pub fn benchmark(
    name: &str,
    table: &RawTable,
    plan: &FoldPlan,
    cfg: &BenchmarkConfig,
) -> Result<BenchmarkReport, EvalError> {
    cfg.slfs.validate()?;
    if cfg.selectors.is_empty() || cfg.classifiers.is_empty() {
        return Err(EvalError::Config("need at least one selector and one classifier".into()));
    }
    if plan.assignments.len() != table.n_rows() {
        return Err(EvalError::Config(format!(
            "fold plan covers {} rows, table has {}",
            plan.assignments.len(),
            table.n_rows()
        )));
    }
    let labels = table.class_labels();
    let global_cuts = if cfg.global_discretization {
        Some(discretize_all(table, &class_codes(table, &labels)))
    } else {
        None
    };
    let metric = cfg.knn_metric.unwrap_or(if table.is_categorical() {
        KnnMetric::HammingOnCodes
    } else {
        KnnMetric::EuclideanOnRaw
    });

    let per_fold: Vec<(Vec<FoldRow>, Duration)> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let start = Instant::now();
            let rows = run_fold(name, table, &labels, plan, fold, cfg, global_cuts.as_deref(), metric)?;
            Ok((rows, start.elapsed()))
        })
        .collect::<Result<_, EvalError>>()?;

    let wall_times = per_fold.iter().map(|(_, d)| *d).collect();
    let mut rows: Vec<FoldRow> = per_fold.into_iter().flat_map(|(r, _)| r).collect();
    let sel_pos = |s: SelectorKind| cfg.selectors.iter().position(|&x| x == s);
    let clf_pos = |c: ClassifierKind| cfg.classifiers.iter().position(|&x| x == c);
    rows.sort_by_key(|r| (sel_pos(r.selector), clf_pos(r.classifier), r.fold));

    let mut cells = Vec::new();
    for &sel in &cfg.selectors {
        for &clf in &cfg.classifiers {
            let cell: Vec<&FoldRow> = rows
                .iter()
                .filter(|r| r.selector == sel && r.classifier == clf)
                .collect();
            let accs: Vec<f64> = cell.iter().map(|r| r.accuracy).collect();
            let (mean, std) = mean_std(&accs);
            cells.push(CellSummary {
                dataset: name.to_string(),
                selector: sel,
                classifier: clf,
                mean_accuracy: mean,
                std_accuracy: std,
                mean_selected: cell.iter().map(|r| r.n_selected as f64).sum::<f64>() / cell.len() as f64,
            });
        }
    }
    Ok(BenchmarkReport {
        dataset: name.to_string(),
        folds: plan.k,
        seed: plan.seed,
        rows,
        cells,
        wall_times,
    })
}

/// Single-cell convenience: (mean, std) accuracy of one selector/classifier
/// pair.
pub fn cross_validate(
    table: &RawTable,
    selector: SelectorKind,
    classifier: ClassifierKind,
    plan: &FoldPlan,
    cfg: &BenchmarkConfig,
) -> Result<(f64, f64), EvalError> {
    let cfg = BenchmarkConfig {
        selectors: vec![selector],
        classifiers: vec![classifier],
        ..cfg.clone()
    };
    let report = benchmark("", table, plan, &cfg)?;
    let c = &report.cells[0];
    Ok((c.mean_accuracy, c.std_accuracy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{read_csv, ClassColumn, CsvOptions};
    use crate::info_metrics::mutual_info;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ds(features: Vec<Vec<u32>>, y: Vec<u32>) -> DiscreteDataset {
        DiscreteDataset::from_codes(features, y).unwrap()
    }

    fn table(csv: &str) -> RawTable {
        read_csv(csv.as_bytes(), &ClassColumn::Name("y".into()), &CsvOptions::default()).unwrap()
    }

    proptest! {
        #[test]
        fn folds_partition_and_balance(
            labels in prop::collection::vec(0u32..3, 10..120),
            k in 2usize..10,
            seed in any::<u64>(),
        ) {
            prop_assume!(k <= labels.len());
            let plan = FoldPlan::new(&labels, k, seed, true).unwrap();
            prop_assert_eq!(plan.assignments.len(), labels.len());
            prop_assert!(plan.assignments.iter().all(|&f| f < k));
            for c in 0..3 {
                let mut sizes = vec![0usize; k];
                for (r, &f) in plan.assignments.iter().enumerate() {
                    if labels[r] == c { sizes[f] += 1; }
                }
                let lo = *sizes.iter().min().unwrap();
                let hi = *sizes.iter().max().unwrap();
                prop_assert!(hi - lo <= 1);
            }
            for fold in 0..k {
                let (tr, te) = plan.split(fold);
                prop_assert_eq!(tr.len() + te.len(), labels.len());
                prop_assert!(te.iter().all(|&r| plan.assignments[r] == fold));
            }
            prop_assert_eq!(&plan, &FoldPlan::new(&labels, k, seed, true).unwrap());
        }
    }

    #[test]
    fn fold_count_validated() {
        assert!(FoldPlan::new(&[0, 1, 0], 1, 0, true).is_err());
        assert!(FoldPlan::new(&[0, 1, 0], 4, 0, true).is_err());
        assert!(FoldPlan::new(&[0, 1, 0], 3, 0, false).is_ok());
    }

    /// Recomputes the greedy criterion from scratch at every step.
    fn mrmr_oracle(d: &DiscreteDataset, m: usize) -> Vec<usize> {
        let mi = |a: &[u32], b: &[u32]| mutual_info(a, b).unwrap();
        let mut s: Vec<usize> = Vec::new();
        while s.len() < m {
            let mut best = (usize::MAX, f64::NEG_INFINITY);
            for f in 0..d.n_features() {
                if s.contains(&f) {
                    continue;
                }
                let rel = mi(d.feature(f), d.class_codes());
                let red = if s.is_empty() {
                    0.0
                } else {
                    s.iter().map(|&g| mi(d.feature(f), d.feature(g))).sum::<f64>() / s.len() as f64
                };
                if rel - red > best.1 {
                    best = (f, rel - red);
                }
            }
            s.push(best.0);
        }
        s
    }

    #[test]
    fn mrmr_skips_duplicates() {
        // s and w independent fair bits, y = s OR w; column 1 duplicates s.
        let s: Vec<u32> = (0..12).map(|i| (i % 4 >= 2) as u32).collect();
        let w: Vec<u32> = (0..12).map(|i| (i % 2) as u32).collect();
        let y: Vec<u32> = s.iter().zip(&w).map(|(a, b)| a | b).collect();
        let d = ds(vec![s.clone(), s, w], y);
        let got = mrmr_select(&d, 2).unwrap();
        assert_eq!(got, vec![0, 2]);
        assert_eq!(mrmr_select(&d, 1).unwrap(), vec![0]);
        assert!(mrmr_select(&d, 0).is_err());
        assert!(mrmr_select(&d, 4).is_err());
    }

    #[test]
    fn mrmr_matches_stepwise_oracle() {
        let y = vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 1];
        let d = ds(
            vec![
                vec![0, 1, 1, 0, 1, 1, 0, 1, 1, 0, 0, 1],
                vec![0, 1, 2, 0, 1, 2, 1, 1, 2, 0, 1, 0],
                vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0],
                vec![0, 0, 1, 1, 2, 2, 0, 0, 1, 1, 2, 2],
                vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 0, 1],
            ],
            y,
        );
        assert_eq!(mrmr_select(&d, 3).unwrap(), mrmr_oracle(&d, 3));
        assert_eq!(mrmr_select(&d, 5).unwrap(), mrmr_oracle(&d, 5));
    }

    #[test]
    fn relevance_only_mrmr_is_mi_ranking() {
        let y = vec![0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1];
        let f0 = vec![0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 0, 0];
        let f1 = vec![0, 1, 0, 1, 1, 0, 1, 1, 1, 1, 1, 1];
        let f2 = vec![0, 0, 0, 1, 1, 0, 1, 0, 0, 1, 1, 0];
        let d = ds(vec![f0, f1, f2], y);
        let cache = MiCache::new(&d);
        let mut by_mi: Vec<usize> = (0..3).collect();
        by_mi.sort_by(|&a, &b| {
            cache
                .mi(Var::Feature(b), Var::Class)
                .total_cmp(&cache.mi(Var::Feature(a), Var::Class))
        });
        assert_eq!(mrmr_select_with(&cache, 3, false).unwrap(), by_mi);
    }

    #[test]
    fn chi2_examples() {
        let y = vec![0, 0, 0, 0, 1, 1, 1, 1];
        assert_abs_diff_eq!(chi2_statistic(&y, &y), 8.0, epsilon = 1e-12);
        let indep = vec![0, 1, 0, 1, 0, 1, 0, 1];
        assert_eq!(chi2_statistic(&indep, &y), 0.0);
        let d = ds(vec![indep, y.clone(), y.clone()], y);
        let r = chi2_rank(&d);
        assert_eq!(r.iter().map(|x| x.0).collect::<Vec<_>>(), vec![1, 2, 0]);
        assert_eq!(r[0].1, r[1].1);
    }

    #[test]
    fn knn_examples() {
        let train = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![5.0, 5.0], vec![5.0, 6.0]];
        let labels = vec![1, 1, 0, 0];
        assert_eq!(knn_classify(&train, &labels, &[], &[0.0, 0.0], 3, KnnMetric::EuclideanOnRaw).unwrap(), 1);
        // neighbours (a, a, b) -> a
        let train = vec![vec![1.0], vec![2.0], vec![3.0]];
        assert_eq!(knn_classify(&train, &[0, 0, 1], &[], &[0.0], 3, KnnMetric::EuclideanOnRaw).unwrap(), 0);
        assert!(knn_classify(&[], &[], &[], &[0.0], 3, KnnMetric::HammingOnCodes).is_err());
        assert!(knn_classify(&train, &[0, 0, 1], &[], &[0.0], 4, KnnMetric::HammingOnCodes).is_err());
        // vote tie between classes 1 and 0 -> 0
        let train = vec![vec![0.0], vec![0.0]];
        assert_eq!(knn_classify(&train, &[1, 0], &[], &[0.0], 2, KnnMetric::HammingOnCodes).unwrap(), 0);
        // categorical column: mismatch costs 1 regardless of code gap
        let train = vec![vec![0.0, 9.0], vec![1.5, 1.0]];
        let got = knn_classify(&train, &[0, 1], &[false, true], &[0.0, 1.0], 1, KnnMetric::EuclideanOnRaw);
        assert_eq!(got.unwrap(), 0);
        let got = knn_classify(&train, &[0, 1], &[false, false], &[0.0, 1.0], 1, KnnMetric::EuclideanOnRaw);
        assert_eq!(got.unwrap(), 1);
    }

    #[test]
    fn knn_matches_sorted_distance_oracle() {
        let pts = [(0.0, 0.0), (1.0, 0.5), (3.0, 3.0), (0.2, 2.0), (2.5, 0.1), (4.0, 4.0)];
        let labels = [0u32, 0, 1, 1, 0, 1];
        let train: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
        for q in [(1.0, 1.0), (3.0, 2.0), (0.0, 3.0), (2.0, 2.0)] {
            let mut d: Vec<(f64, usize)> = pts
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| ((a - q.0).hypot(b - q.1), i))
                .collect();
            d.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
            let ones = d[..3].iter().filter(|x| labels[x.1] == 1).count();
            let expected = if ones >= 2 { 1 } else { 0 };
            let got = knn_classify(&train, &labels, &[], &[q.0, q.1], 3, KnnMetric::EuclideanOnRaw).unwrap();
            assert_eq!(got, expected, "query {q:?}");
        }
    }

    #[test]
    fn majority_ties_to_smaller_class() {
        assert_eq!(majority_class(&[1, 0, 1, 0]), 0);
        assert_eq!(majority_class(&[1, 1, 0]), 1);
    }

    #[test]
    fn naive_bayes_matches_flat_tree_model() {
        let y = vec![0, 0, 1, 1, 1, 0, 1, 0];
        let d = ds(
            vec![
                vec![0, 1, 1, 1, 0, 0, 1, 0],
                vec![2, 0, 1, 1, 2, 0, 1, 0],
            ],
            y,
        );
        let nb = NaiveBayes::fit(&d, &[1, 0], 1.0);
        let model = CptModel::fit(&flat_tree(&[0, 1]), &d, 1.0).unwrap();
        for r in 0..8 {
            let row = d.row(r);
            let (a, pa) = nb.predict(&row);
            let (b, pb) = model.predict(&row).unwrap();
            assert_eq!(a, b);
            for c in 0..2 {
                assert_abs_diff_eq!(pa[c], pb[c], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn classifier_names_round_trip() {
        for s in ["knn3", "knn5", "knn7", "nb", "bnslfs", "majority"] {
            let c: ClassifierKind = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert!("knn0".parse::<ClassifierKind>().is_err());
        assert!("svm".parse::<ClassifierKind>().is_err());
        let cfg = BenchmarkConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"knn3\""));
        assert_eq!(serde_json::from_str::<BenchmarkConfig>(&json).unwrap(), cfg);
    }

    #[test]
    fn majority_cv_equals_prevalence() {
        // 3:1 prevalence in every training fold of a stratified 4-fold plan
        let mut csv = String::from("x,y\n");
        for i in 0..12 {
            csv.push_str(&format!("{},{}\n", i, if i % 4 == 0 { "b" } else { "a" }));
        }
        let t = table(&csv);
        let labels: Vec<u32> = (0..12).map(|i| if i % 4 == 0 { 1 } else { 0 }).collect();
        let plan = FoldPlan::new(&labels, 3, 7, true).unwrap();
        let cfg = BenchmarkConfig::default();
        let (mean, _) = cross_validate(&t, SelectorKind::All, ClassifierKind::Majority, &plan, &cfg).unwrap();
        assert_abs_diff_eq!(mean, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn leave_one_out_by_hand() {
        // rows: a, a, a, b. Holding out an "a" leaves (a,a,b) -> predicts a;
        // holding out the "b" leaves (a,a,a) -> predicts a. Accuracies 1,1,1,0.
        let t = table("x,y\n1,a\n2,a\n3,a\n4,b\n");
        let plan = FoldPlan::new(&[0, 0, 0, 1], 4, 1, false).unwrap();
        let cfg = BenchmarkConfig {
            selectors: vec![SelectorKind::All],
            classifiers: vec![ClassifierKind::Majority],
            ..Default::default()
        };
        let report = benchmark("toy", &t, &plan, &cfg).unwrap();
        let mut accs: Vec<f64> = report.rows.iter().map(|r| r.accuracy).collect();
        accs.sort_by(f64::total_cmp);
        assert_eq!(accs, vec![0.0, 1.0, 1.0, 1.0]);
        assert_abs_diff_eq!(report.cells[0].mean_accuracy, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(report.cells[0].std_accuracy, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn benchmark_shape_and_determinism() {
        let mut csv = String::from("a,b,c,y\n");
        for i in 0..60u32 {
            let y = i % 2;
            let a = y * 10 + (i * 7) % 5;
            let b = (i * 13) % 11;
            let c = if (i * 3) % 7 == 0 { 1 - y } else { y };
            csv.push_str(&format!("{a},{b},{c},{}\n", if y == 1 { "p" } else { "n" }));
        }
        let t = table(&csv);
        let labels = class_codes(&t, &t.class_labels());
        let plan = FoldPlan::new(&labels, 5, 3, true).unwrap();
        let cfg = BenchmarkConfig::default();
        let r1 = benchmark("toy", &t, &plan, &cfg).unwrap();
        let r2 = benchmark("toy", &t, &plan, &cfg).unwrap();
        assert_eq!(r1.cells.len(), 15);
        assert_eq!(r1.rows.len(), 75);
        assert_eq!(r1.to_csv(), r2.to_csv());
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
        assert!(r1.rows.iter().all(|r| (0.0..=1.0).contains(&r.accuracy)));
        let slfs_nb = r1.cell(SelectorKind::Slfs, ClassifierKind::NaiveBayes).unwrap();
        assert!(slfs_nb.mean_accuracy > 0.9, "{slfs_nb:?}");
    }
}
