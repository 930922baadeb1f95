use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};
use slfs::bn_classifier::CptModel;
use slfs::dataset::{handle_missing, ColumnEncoding, ColumnKind};
use slfs::discretizer::class_codes;
use slfs::evaluation::{benchmark, FoldPlan};
use slfs::{
    discretize_all, load_csv, run_slfs, ClassColumn, CsvOptions, DataError, DiscreteDataset, Encoder,
    EvalError, RawTable, SelectionResult, SlfsConfig,
};

use crate::config::RunConfig;
use crate::manifest::{sha256_file, write_atomic, InputFile, RunManifest};

/// A failed command and the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Exit 2, printed with usage text.
    Usage(String),
    /// Exit 3.
    Data(anyhow::Error),
    /// Exit 4: input columns do not match a trained model.
    Schema(anyhow::Error),
    /// Exit 1.
    Other(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Schema(_) => 4,
            Failure::Other(_) => 1,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn data_failure(e: DataError) -> Failure {
    match e {
        DataError::Schema(_) => Failure::Schema(e.into()),
        _ => Failure::Data(e.into()),
    }
}

fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::Config(m) => Failure::Usage(m),
        EvalError::Slfs(slfs::SlfsError::Config(m)) => Failure::Usage(m),
        EvalError::Data(d) => data_failure(d),
        other => Failure::Other(other.into()),
    }
}

/// Selection output: the engine result plus names for readability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionFile {
    pub feature_names: Vec<String>,
    pub selected_names: Vec<String>,
    pub config: SlfsConfig,
    #[serde(flatten)]
    pub result: SelectionResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub encoder: Encoder,
    pub selection: SelectionFile,
    pub model: CptModel,
}

#[derive(Serialize)]
struct CutEntry<'a> {
    feature: usize,
    name: &'a str,
    cuts: &'a [f64],
}

struct Run<'a> {
    cfg: &'a RunConfig,
    manifest: RunManifest,
    started: Instant,
}

impl<'a> Run<'a> {
    fn new(command: &str, cfg: &'a RunConfig) -> Self {
        Self {
            cfg,
            manifest: RunManifest::new(command, cfg),
            started: Instant::now(),
        }
    }

    fn input(&mut self, role: &str, path: &Path) -> Result<(), Failure> {
        let sha256 = sha256_file(path).map_err(Failure::Data)?;
        self.manifest.inputs.push(InputFile {
            role: role.into(),
            path: path.to_path_buf(),
            sha256,
        });
        Ok(())
    }

    fn output(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
        write_atomic(&self.cfg.out_dir, name, contents.as_ref())?;
        self.manifest.outputs.push(name.into());
        Ok(())
    }

    fn time(&mut self, stage: &str, since: Instant) {
        self.manifest
            .timings_secs
            .insert(stage.into(), since.elapsed().as_secs_f64());
    }

    fn finish(mut self) -> Result<RunManifest, Failure> {
        self.time("total", self.started);
        let json = serde_json::to_vec_pretty(&self.manifest).context("serializing manifest")?;
        write_atomic(&self.cfg.out_dir, "manifest.json", &json)?;
        Ok(self.manifest)
    }

    fn data_path(&self) -> Result<PathBuf, Failure> {
        self.cfg
            .data
            .clone()
            .ok_or_else(|| Failure::Usage("--data is required (or set \"data\" in --config)".into()))
    }

    fn csv_options(&self, hints: HashMap<String, ColumnKind>) -> Result<CsvOptions, Failure> {
        Ok(CsvOptions {
            delimiter: self.cfg.delimiter_byte().map_err(Failure::Usage)?,
            missing_marker: self.cfg.missing_marker.clone(),
            schema_hints: hints,
        })
    }

    fn load_table(&mut self) -> Result<RawTable, Failure> {
        let path = self.data_path()?;
        self.input("data", &path)?;
        let t0 = Instant::now();
        let opts = self.csv_options(HashMap::new())?;
        let table = load_csv(&path, &ClassColumn::parse(&self.cfg.class), &opts).map_err(data_failure)?;
        let table = handle_missing(&table, self.cfg.missing).map_err(data_failure)?;
        self.time("load", t0);
        Ok(table)
    }

    /// Cuts and encoder fitted on the whole table.
    fn encode(&mut self, table: &RawTable) -> Result<(Encoder, DiscreteDataset), Failure> {
        let t0 = Instant::now();
        let labels = table.class_labels();
        let cuts = discretize_all(table, &class_codes(table, &labels));
        let enc = Encoder::fit(table, &cuts).map_err(data_failure)?;
        let data = enc.transform(table).map_err(data_failure)?;
        self.time("discretize", t0);
        Ok((enc, data))
    }

    fn select(&mut self, data: &DiscreteDataset) -> Result<SelectionFile, Failure> {
        let cfg = self.cfg.slfs_config().map_err(Failure::Usage)?;
        let t0 = Instant::now();
        let result = run_slfs(data, &cfg).map_err(|e| Failure::Other(e.into()))?;
        self.time("select", t0);
        let names = data.feature_names().to_vec();
        Ok(SelectionFile {
            selected_names: result.selected.iter().map(|&f| names[f].clone()).collect(),
            feature_names: names,
            config: cfg,
            result,
        })
    }
}

pub fn run(command: &str, cfg: &RunConfig) -> Result<RunManifest, Failure> {
    match command {
        "discretize" => discretize(cfg),
        "select" => select(cfg),
        "train" => train(cfg),
        "predict" => predict(cfg),
        "benchmark" => bench(cfg),
        "export-dot" => export_dot(cfg),
        other => Err(Failure::Usage(format!("unknown command {other:?}"))),
    }
}

fn discretize(cfg: &RunConfig) -> Result<RunManifest, Failure> {
    let mut run = Run::new("discretize", cfg);
    let table = run.load_table()?;
    let (enc, data) = run.encode(&table)?;
    let names = table.feature_names();
    let entries: Vec<CutEntry> = enc
        .columns
        .iter()
        .enumerate()
        .filter_map(|(f, c)| match c {
            ColumnEncoding::Bins { cuts } => Some(CutEntry {
                feature: f,
                name: &names[f],
                cuts,
            }),
            ColumnEncoding::Categories { .. } => None,
        })
        .collect();
    run.output("cuts.json", serde_json::to_vec_pretty(&entries).context("serializing cuts")?)?;

    let mut csv = names.join(",");
    let _ = writeln!(csv, ",{}", table.class_name);
    for r in 0..data.n_rows() {
        for f in 0..data.n_features() {
            let _ = write!(csv, "{},", data.feature(f)[r]);
        }
        let _ = writeln!(csv, "{}", data.class_labels()[data.class_codes()[r] as usize]);
    }
    run.output("discretized.csv", csv)?;
    for e in &entries {
        println!("{}: {} bins", e.name, e.cuts.len() + 1);
    }
    run.finish()
}

fn selection_outputs(run: &mut Run, sel: &SelectionFile) -> Result<(), Failure> {
    run.output("selection.json", serde_json::to_vec_pretty(sel).context("serializing selection")?)?;
    let mut trace = String::from("step,feature,j\n");
    let order = sel.config.arrival_order.order(sel.feature_names.len());
    for (step, (f, j)) in order.iter().zip(&sel.result.j_trace).enumerate() {
        let _ = writeln!(trace, "{step},{},{j}", sel.feature_names[*f]);
    }
    run.output("j_trace.csv", trace)?;
    let dot = sel.result.tbn.to_dot_named(|f| sel.feature_names[f].clone());
    run.output("tbn.dot", dot)
}

fn select(cfg: &RunConfig) -> Result<RunManifest, Failure> {
    let mut run = Run::new("select", cfg);
    let table = run.load_table()?;
    let (_, data) = run.encode(&table)?;
    let sel = run.select(&data)?;
    selection_outputs(&mut run, &sel)?;
    println!(
        "selected {} of {} features: {}",
        sel.result.selected.len(),
        sel.feature_names.len(),
        sel.selected_names.join(", ")
    );
    run.finish()
}

fn train(cfg: &RunConfig) -> Result<RunManifest, Failure> {
    let mut run = Run::new("train", cfg);
    let table = run.load_table()?;
    let (encoder, data) = run.encode(&table)?;
    let selection = run.select(&data)?;
    let t0 = Instant::now();
    let model = CptModel::fit_with(&selection.result.tbn, &data, cfg.alpha, cfg.augmented)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    run.time("fit", t0);
    let acc = model.evaluate(&data).map_err(|e| Failure::Other(e.into()))?;
    selection_outputs(&mut run, &selection)?;
    let file = ModelFile {
        encoder,
        selection,
        model,
    };
    run.output("model.json", serde_json::to_vec_pretty(&file).context("serializing model")?)?;
    println!("training accuracy {acc:.4}");
    run.finish()
}

fn load_model(run: &mut Run) -> Result<ModelFile, Failure> {
    let path = run
        .cfg
        .model
        .clone()
        .ok_or_else(|| Failure::Usage("--model is required".into()))?;
    run.input("model", &path)?;
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Data)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing model {}", path.display()))
        .map_err(Failure::Data)
}

fn predict(cfg: &RunConfig) -> Result<RunManifest, Failure> {
    let mut run = Run::new("predict", cfg);
    let mf = load_model(&mut run)?;
    let path = run.data_path()?;
    run.input("data", &path)?;
    let hints = mf
        .encoder
        .feature_names
        .iter()
        .zip(&mf.encoder.columns)
        .map(|(n, c)| {
            let kind = match c {
                ColumnEncoding::Bins { .. } => ColumnKind::Numeric,
                ColumnEncoding::Categories { .. } => ColumnKind::Categorical,
            };
            (n.clone(), kind)
        })
        .collect();
    let opts = run.csv_options(hints)?;
    let class = ClassColumn::Name(mf.encoder.class_name.clone());
    let table = load_csv(&path, &class, &opts).map_err(|e| match e {
        DataError::ClassColumnNotFound(_) => Failure::Schema(e.into()),
        e => data_failure(e),
    })?;
    let table = handle_missing(&table, cfg.missing).map_err(data_failure)?;
    let cols = mf.encoder.transform_features(&table).map_err(|e| Failure::Schema(e.into()))?;

    let labels = &mf.encoder.class_labels;
    let mut out = String::from("row,label");
    for l in labels {
        let _ = write!(out, ",p_{l}");
    }
    out.push('\n');
    let prior_label = {
        let p = &mf.model.prior;
        (0..p.len()).fold(0, |b, i| if p[i] > p[b] { i } else { b })
    };
    let (mut known, mut correct, mut prior_correct) = (0usize, 0usize, 0usize);
    for r in 0..table.n_rows() {
        let row: Vec<u32> = cols.iter().map(|c| c[r]).collect();
        let (label, post) = mf.model.predict(&row).map_err(|e| Failure::Schema(e.into()))?;
        let _ = write!(out, "{r},{}", labels[label]);
        for p in &post {
            let _ = write!(out, ",{p:.9}");
        }
        out.push('\n');
        if let Some(truth) = table.class_values[r].as_ref().and_then(|v| labels.iter().position(|l| l == v)) {
            known += 1;
            correct += (truth == label) as usize;
            prior_correct += (truth == prior_label) as usize;
        }
    }
    run.output("predictions.csv", out)?;
    if known > 0 {
        println!(
            "accuracy {:.4} on {known} labelled rows (prior baseline {:.4})",
            correct as f64 / known as f64,
            prior_correct as f64 / known as f64
        );
    }
    run.finish()
}

fn bench(cfg: &RunConfig) -> Result<RunManifest, Failure> {
    let mut run = Run::new("benchmark", cfg);
    let bcfg = cfg.benchmark_config().map_err(Failure::Usage)?;
    let table = run.load_table()?;
    let name = cfg
        .data
        .as_ref()
        .and_then(|p| p.file_stem())
        .map_or("data".into(), |s| s.to_string_lossy().into_owned());
    let codes = class_codes(&table, &table.class_labels());
    let plan = FoldPlan::new(&codes, cfg.folds, cfg.seed, true).map_err(eval_failure)?;
    let t0 = Instant::now();
    let report = benchmark(&name, &table, &plan, &bcfg).map_err(eval_failure)?;
    run.time("benchmark", t0);
    for (i, d) in report.wall_times.iter().enumerate() {
        run.manifest.timings_secs.insert(format!("fold_{i:02}"), d.as_secs_f64());
    }
    run.output("report.json", serde_json::to_vec_pretty(&report).context("serializing report")?)?;
    run.output("report.csv", report.to_csv())?;
    let mut summary = String::from("dataset,selector,classifier,mean_accuracy,std_accuracy,mean_selected\n");
    for c in &report.cells {
        let _ = writeln!(
            summary,
            "{},{},{},{:.6},{:.6},{:.2}",
            c.dataset, c.selector, c.classifier, c.mean_accuracy, c.std_accuracy, c.mean_selected
        );
        println!(
            "{:<6} {:<9} {:.4} ± {:.4}  ({:.1} features)",
            c.selector.to_string(),
            c.classifier.to_string(),
            c.mean_accuracy,
            c.std_accuracy,
            c.mean_selected
        );
    }
    run.output("summary.csv", summary)?;
    run.finish()
}

fn export_dot(cfg: &RunConfig) -> Result<RunManifest, Failure> {
    let mut run = Run::new("export-dot", cfg);
    let sel: SelectionFile = match (&cfg.selection, &cfg.model) {
        (Some(path), _) => {
            run.input("selection", path)?;
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(Failure::Data)?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing selection {}", path.display()))
                .map_err(Failure::Data)?
        }
        (None, Some(_)) => load_model(&mut run)?.selection,
        (None, None) => return Err(Failure::Usage("--selection or --model is required".into())),
    };
    sel.result
        .tbn
        .validate()
        .map_err(|e| Failure::Data(anyhow!("selection holds an invalid tree: {e}")))?;
    let dot = sel.result.tbn.to_dot_named(|f| {
        sel.feature_names.get(f).cloned().unwrap_or_else(|| format!("f{f}"))
    });
    run.output("tbn.dot", dot)?;
    run.finish()
}

/// Re-runs a recorded command after checking that its inputs are unchanged.
pub fn replay(manifest_path: &Path, out_dir: Option<PathBuf>) -> Result<RunManifest, Failure> {
    let m = RunManifest::load(manifest_path).map_err(Failure::Data)?;
    for input in &m.inputs {
        let now = sha256_file(&input.path).map_err(Failure::Data)?;
        if now != input.sha256 {
            return Err(Failure::Data(anyhow!(
                "{} input {} changed since the recorded run",
                input.role,
                input.path.display()
            )));
        }
    }
    let mut cfg = m.config.clone();
    cfg.out_dir = out_dir.unwrap_or_else(|| {
        manifest_path
            .parent()
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
    });
    run(&m.command, &cfg)
}
