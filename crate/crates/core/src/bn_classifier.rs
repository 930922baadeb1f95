//! Classifier induced by a learned tree: conditional probability tables on
//! the tree's edges and a class posterior from the tree factorization.
//!
//! Only the class's direct children depend on `Y` in the factorization, so
//! the default scoring is `log P(y) + sum over depth-1 f of log P(f | y)`.
//! Deeper factors `P(f | pa(f))` cancel in the argmax. The augmented mode
//! instead conditions deep tables on `(pa(f), Y)` and includes them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DiscreteDataset;
use crate::tbn::{Node, Tbn};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("tree feature {0} is not a dataset column")]
    UnknownFeature(usize),
    #[error("row has {found} codes but the model needs at least {needed}")]
    RowMismatch { needed: usize, found: usize },
    #[error("smoothing must be >= 0, got {0}")]
    BadAlpha(f64),
}

/// `P(f = v | context = u)` stored as `probs[u * arity + v]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub parent: Node,
    /// Whether the context also includes the class (augmented mode).
    pub with_class: bool,
    pub contexts: usize,
    pub arity: usize,
    pub probs: Vec<f64>,
    /// Probability given to a code outside the fitted range, per context.
    pub unseen: Vec<f64>,
}

impl Cpt {
    pub fn prob(&self, context: usize, v: u32) -> f64 {
        if context >= self.contexts {
            return 1.0 / self.arity as f64;
        }
        if (v as usize) >= self.arity {
            return self.unseen[context];
        }
        self.probs[context * self.arity + v as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptModel {
    pub tbn: Tbn,
    pub n_classes: usize,
    pub prior: Vec<f64>,
    pub cpts: BTreeMap<usize, Cpt>,
    pub alpha: f64,
    pub augmented: bool,
}

fn smoothed(counts: &[u64], alpha: f64) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let denom = total as f64 + alpha * counts.len() as f64;
    if denom == 0.0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

impl CptModel {
    pub fn fit(tbn: &Tbn, data: &DiscreteDataset, alpha: f64) -> Result<Self, ModelError> {
        Self::fit_with(tbn, data, alpha, false)
    }

    pub fn fit_with(
        tbn: &Tbn,
        data: &DiscreteDataset,
        alpha: f64,
        augmented: bool,
    ) -> Result<Self, ModelError> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(ModelError::BadAlpha(alpha));
        }
        let n = data.n_rows();
        if n == 0 {
            return Err(ModelError::EmptyDataset);
        }
        let k = data.n_classes();
        let y = data.class_codes();
        let mut class_counts = vec![0u64; k];
        for &c in y {
            class_counts[c as usize] += 1;
        }
        let prior = smoothed(&class_counts, alpha);

        let mut cpts = BTreeMap::new();
        for f in tbn.features() {
            if f >= data.n_features() {
                return Err(ModelError::UnknownFeature(f));
            }
            let parent = tbn.parent(f).unwrap_or(Node::Class);
            let arity = data.arity(f);
            let col = data.feature(f);
            let (contexts, with_class) = match parent {
                Node::Class => (k, false),
                Node::Feature(p) if augmented => (data.arity(p) * k, true),
                Node::Feature(p) => (data.arity(p), false),
            };
            let context_of = |r: usize| -> usize {
                match parent {
                    Node::Class => y[r] as usize,
                    Node::Feature(p) if with_class => data.feature(p)[r] as usize * k + y[r] as usize,
                    Node::Feature(p) => data.feature(p)[r] as usize,
                }
            };
            let mut counts = vec![0u64; contexts * arity];
            for r in 0..n {
                counts[context_of(r) * arity + col[r] as usize] += 1;
            }
            let mut probs = Vec::with_capacity(counts.len());
            let mut unseen = Vec::with_capacity(contexts);
            for u in 0..contexts {
                let cell = &counts[u * arity..(u + 1) * arity];
                let total: u64 = cell.iter().sum();
                let denom = total as f64 + alpha * arity as f64;
                unseen.push(if denom == 0.0 { 0.0 } else { alpha / denom });
                probs.extend(smoothed(cell, alpha));
            }
            cpts.insert(
                f,
                Cpt {
                    parent,
                    with_class,
                    contexts,
                    arity,
                    probs,
                    unseen,
                },
            );
        }
        Ok(Self {
            tbn: tbn.clone(),
            n_classes: k,
            prior,
            cpts,
            alpha,
            augmented,
        })
    }

    fn needed_len(&self) -> usize {
        self.cpts.keys().next_back().map_or(0, |&f| f + 1)
    }

    /// Unnormalized log scores per class.
    pub fn log_scores(&self, row: &[u32]) -> Result<Vec<f64>, ModelError> {
        let needed = self.needed_len();
        if row.len() < needed {
            return Err(ModelError::RowMismatch {
                needed,
                found: row.len(),
            });
        }
        let mut scores: Vec<f64> = self.prior.iter().map(|p| p.ln()).collect();
        for (y, s) in scores.iter_mut().enumerate() {
            // ascending feature order
            for (&f, cpt) in &self.cpts {
                let context = match cpt.parent {
                    Node::Class => y,
                    Node::Feature(p) if cpt.with_class => row[p] as usize * self.n_classes + y,
                    Node::Feature(_) => continue,
                };
                *s += cpt.prob(context, row[f]).ln();
            }
        }
        Ok(scores)
    }

    /// Most probable class (ties to the smaller index) and the posterior.
    pub fn predict(&self, row: &[u32]) -> Result<(usize, Vec<f64>), ModelError> {
        let scores = self.log_scores(row)?;
        Ok(posterior_from_log_scores(&scores, &self.prior))
    }

    pub fn evaluate(&self, data: &DiscreteDataset) -> Result<f64, ModelError> {
        let n = data.n_rows();
        if n == 0 {
            return Err(ModelError::EmptyDataset);
        }
        let mut correct = 0usize;
        for r in 0..n {
            let (label, _) = self.predict(&data.row(r))?;
            if label == data.class_codes()[r] as usize {
                correct += 1;
            }
        }
        Ok(correct as f64 / n as f64)
    }
}

/// Softmax of log scores with the argmax label. When every score is `-inf`
/// (possible without smoothing) the prior decides.
pub fn posterior_from_log_scores(scores: &[f64], prior: &[f64]) -> (usize, Vec<f64>) {
    let argmax = |v: &[f64]| {
        let mut best = 0;
        for (i, &s) in v.iter().enumerate() {
            if s > v[best] {
                best = i;
            }
        }
        best
    };
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        let total: f64 = prior.iter().sum();
        return (argmax(prior), prior.iter().map(|p| p / total).collect());
    }
    let exp: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = exp.iter().sum();
    (argmax(scores), exp.into_iter().map(|e| e / z).collect())
}
