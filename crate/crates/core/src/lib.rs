//! Feature selection by incremental construction of a class-rooted tree
//! Bayesian network, with the classifier it induces and a cross-validation
//! benchmark against common baselines.
//!
//! Pipeline: [`dataset::load_csv`] → [`discretizer::discretize_all`] →
//! [`dataset::Encoder`] → [`slfs::run_slfs`] → [`bn_classifier::CptModel`].

pub mod bn_classifier;
pub mod dataset;
pub mod discretizer;
pub mod evaluation;
pub mod info_metrics;
pub mod slfs;
pub mod tbn;

pub use bn_classifier::{CptModel, ModelError};
pub use dataset::{
    load_csv, ClassColumn, CsvOptions, DataError, DiscreteDataset, Encoder, MissingPolicy, RawTable,
};
pub use discretizer::{discretize_all, mdlp_cuts, CutList};
pub use evaluation::{
    benchmark, BenchmarkConfig, BenchmarkReport, ClassifierKind, EvalError, FoldPlan, SelectorKind,
};
pub use info_metrics::{MiCache, Var};
pub use slfs::{run_slfs, ArrivalOrder, IrrelevanceMode, SelectionResult, SlfsConfig, SlfsError};
pub use tbn::{Node, Tbn, TreeError};
