//! Incremental tree construction that selects features as it goes.
//!
//! Each offered feature is first tested for irrelevance. A relevant feature
//! is then either attached to the class or walked down the tree, at every
//! level comparing the edge score `I(f;n) - I(f;Y|n)` of the current node
//! against its best child. When it settles below a feature node it may swap
//! places with that node. Features that would fall below the depth cap are
//! dropped, with their ancestors recorded as their Markov blanket.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DiscreteDataset;
use crate::info_metrics::{MiCache, Var};
use crate::tbn::{Node, Tbn, TreeError};

#[derive(Debug, Error)]
pub enum SlfsError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("feature {0} is not a column of the dataset")]
    UnknownFeature(usize),
    #[error("feature {0} is already in the tree")]
    AlreadySelected(usize),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrrelevanceMode {
    /// Irrelevant iff `I(f;Y) <= epsilon`.
    #[default]
    MiZero,
    /// Irrelevant iff both inequalities of the J-decrease test hold.
    Eq7Inequalities,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalOrder {
    #[default]
    ColumnOrder,
    Shuffled(u64),
}

impl ArrivalOrder {
    pub fn order(&self, p: usize) -> Vec<usize> {
        let mut v: Vec<usize> = (0..p).collect();
        if let ArrivalOrder::Shuffled(seed) = self {
            v.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(*seed));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlfsConfig {
    pub lambda: f64,
    pub max_depth: usize,
    pub nch: usize,
    /// Irrelevance threshold in bits.
    pub epsilon: f64,
    pub irrelevance_mode: IrrelevanceMode,
    pub arrival_order: ArrivalOrder,
}

impl Default for SlfsConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            max_depth: 2,
            nch: 15,
            epsilon: 0.01,
            irrelevance_mode: IrrelevanceMode::MiZero,
            arrival_order: ArrivalOrder::ColumnOrder,
        }
    }
}

impl SlfsConfig {
    pub fn validate(&self) -> Result<(), SlfsError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(SlfsError::Config(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if self.max_depth < 1 {
            return Err(SlfsError::Config("max_depth must be >= 1".into()));
        }
        if self.nch < 1 {
            return Err(SlfsError::Config("nch must be >= 1".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(SlfsError::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Irrelevant,
    /// Would have been placed below the depth cap.
    DepthPruned,
    /// Every admissible attachment point was at its child cap.
    CapacityPruned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub feature: usize,
    pub reason: RejectReason,
    /// Tree features that shield the rejected one from the class (the node
    /// it was passing through and that node's ancestors).
    pub markov_blanket: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timing {
    pub irrelevance: Duration,
    pub placement: Duration,
    pub scoring: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub tbn: Tbn,
    /// Selected features in ascending id order.
    pub selected: Vec<usize>,
    pub rejected: Vec<Rejection>,
    /// Criterion J after each offered feature.
    pub j_trace: Vec<f64>,
    pub swaps: usize,
    #[serde(skip)]
    pub timing: Timing,
}

/// Edge score of hanging `f` below `node`: `I(f;node) - I(f;Y|node)`.
pub fn edge_score(cache: &MiCache, f: usize, node: usize) -> f64 {
    let (fv, nv) = (Var::Feature(f), Var::Feature(node));
    cache.mi(fv, nv) - cache.cmi(fv, Var::Class, nv)
}

/// Likelihood-based structure score of the tree.
///
/// Sum over tree features of `[I(f;pa) - H(f)] + lambda [I(f;Y) - I(f;Y|pa)]`,
/// where `pa = Y` for depth-1 features (and `I(f;Y|Y) = 0`).
pub fn criterion_j(tbn: &Tbn, cache: &MiCache, lambda: f64) -> f64 {
    let mut j = 0.0;
    for f in tbn.features() {
        let fv = Var::Feature(f);
        let pa = match tbn.parent(f) {
            Some(Node::Feature(p)) => Var::Feature(p),
            _ => Var::Class,
        };
        j += cache.mi(fv, pa) - cache.entropy(fv);
        j += lambda * (cache.mi(fv, Var::Class) - cache.cmi(fv, Var::Class, pa));
    }
    j
}

/// Best attachment point among `candidates` by [`edge_score`]; nodes at
/// their child cap are skipped. Ties go to the smallest feature id. `None`
/// when no candidate is open.
pub fn find_parent(cache: &MiCache, tbn: &Tbn, f: usize, candidates: &[usize]) -> Option<usize> {
    let mut open: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&c| !tbn.is_full(Node::Feature(c)))
        .collect();
    open.sort_unstable();
    let mut best: Option<(usize, f64)> = None;
    for c in open {
        let s = edge_score(cache, f, c);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((c, s));
        }
    }
    best.map(|(c, _)| c)
}

pub fn is_irrelevant(cache: &MiCache, tbn: &Tbn, f: usize, cfg: &SlfsConfig) -> bool {
    let fv = Var::Feature(f);
    let relevance = cache.mi(fv, Var::Class);
    match cfg.irrelevance_mode {
        IrrelevanceMode::MiZero => relevance <= cfg.epsilon,
        IrrelevanceMode::Eq7Inequalities => {
            let lonely = cfg.lambda * relevance - cache.entropy(fv) < 0.0;
            match find_parent(cache, tbn, f, tbn.children(Node::Class)) {
                None => lonely,
                Some(pa) => {
                    let pv = Var::Feature(pa);
                    let below = cache.mi(fv, pv) - cfg.lambda * cache.cmi(fv, Var::Class, pv) < 0.0;
                    below && lonely
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connect {
    AttachToClass,
    Descend(usize),
}

/// Attach to the class iff `lambda I(f;Y) - H(f) >= I(f;pa) - lambda I(f;Y|pa)`
/// (ties go to the shallower placement). Without a candidate the feature
/// attaches to the class.
pub fn connect_decision(cache: &MiCache, f: usize, pa: Option<usize>, lambda: f64) -> Connect {
    let Some(pa) = pa else {
        return Connect::AttachToClass;
    };
    let (fv, pv) = (Var::Feature(f), Var::Feature(pa));
    let to_class = lambda * cache.mi(fv, Var::Class) - cache.entropy(fv);
    let to_parent = cache.mi(fv, pv) - lambda * cache.cmi(fv, Var::Class, pv);
    if to_class >= to_parent {
        Connect::AttachToClass
    } else {
        Connect::Descend(pa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Descend {
    AttachTo(usize),
    ContinueTo(usize),
}

/// At node `fj` with best child `fk`: stay unless the child scores strictly
/// higher.
pub fn descend_decision(cache: &MiCache, f: usize, fj: usize, fk: Option<usize>) -> Descend {
    match fk {
        None => Descend::AttachTo(fj),
        Some(fk) if edge_score(cache, f, fj) >= edge_score(cache, f, fk) => Descend::AttachTo(fj),
        Some(fk) => Descend::ContinueTo(fk),
    }
}

/// Both swap clauses for incoming `f` below `fj`.
///
/// The first is `I(f;Y) > I(fj;Y)`; the second is
/// `I(f;fj) - I(f;Y|fj) < I(f;fj) - I(fj;Y|f)`. The chain rule makes them
/// equivalent for plug-in estimates, up to rounding at exact ties.
pub fn swap_clauses(cache: &MiCache, f: usize, fj: usize) -> (bool, bool) {
    let (fv, jv) = (Var::Feature(f), Var::Feature(fj));
    let clause1 = cache.mi(fv, Var::Class) > cache.mi(jv, Var::Class);
    let shared = cache.mi(fv, jv);
    let clause2 = shared - cache.cmi(fv, Var::Class, jv) < shared - cache.cmi(jv, Var::Class, fv);
    (clause1, clause2)
}

/// Tolerance below which two relevance values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

pub fn swap_check(cache: &MiCache, f: usize, fj: usize) -> bool {
    let (c1, c2) = swap_clauses(cache, f, fj);
    debug_assert!(
        c1 == c2
            || (cache.mi(Var::Feature(f), Var::Class) - cache.mi(Var::Feature(fj), Var::Class)).abs()
                <= TIE_TOLERANCE,
        "swap clauses disagree away from a tie for {f} below {fj}"
    );
    c1 && c2
}

/// A swap as it happened, for observers.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapRecord {
    pub incoming: usize,
    pub parent: usize,
    /// `I(f;fj) - I(f;Y|fj)` before the swap.
    pub pre_score: f64,
    /// `I(f;fj) - I(fj;Y|f)` after the swap.
    pub post_score: f64,
    /// `swap_check(fj, f)` evaluated right after the swap.
    pub recheck: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Attached { feature: usize, parent: Node },
    Swapped(SwapRecord),
    Rejected(Rejection),
}

/// Stateful driver; [`run_slfs`] offers every feature in arrival order.
pub struct Slfs<'c, 'd> {
    cache: &'c MiCache<'d>,
    cfg: SlfsConfig,
    tbn: Tbn,
    rejected: Vec<Rejection>,
    j_trace: Vec<f64>,
    swaps: usize,
    timing: Timing,
}

impl<'c, 'd> Slfs<'c, 'd> {
    pub fn new(cache: &'c MiCache<'d>, cfg: SlfsConfig) -> Result<Self, SlfsError> {
        cfg.validate()?;
        Ok(Self {
            cache,
            tbn: Tbn::new(cfg.max_depth, cfg.nch),
            cfg,
            rejected: Vec::new(),
            j_trace: Vec::new(),
            swaps: 0,
            timing: Timing::default(),
        })
    }

    pub fn tbn(&self) -> &Tbn {
        &self.tbn
    }

    pub fn rejected(&self) -> &[Rejection] {
        &self.rejected
    }

    /// Processes one feature. A feature rejected earlier may be offered
    /// again; its old rejection is discarded.
    pub fn offer(&mut self, f: usize) -> Result<(), SlfsError> {
        self.offer_observed(f, &mut |_, _| {})
    }

    pub fn offer_observed(
        &mut self,
        f: usize,
        observer: &mut dyn FnMut(&Event, &Tbn),
    ) -> Result<(), SlfsError> {
        if f >= self.cache.dataset().n_features() {
            return Err(SlfsError::UnknownFeature(f));
        }
        if self.tbn.contains(f) {
            return Err(SlfsError::AlreadySelected(f));
        }
        self.rejected.retain(|r| r.feature != f);

        let t0 = Instant::now();
        let irrelevant = is_irrelevant(self.cache, &self.tbn, f, &self.cfg);
        let t1 = Instant::now();
        self.timing.irrelevance += t1 - t0;

        let changed = if irrelevant {
            self.reject(f, RejectReason::Irrelevant, Vec::new(), observer);
            false
        } else {
            self.place(f, observer)?
        };
        let t2 = Instant::now();
        self.timing.placement += t2 - t1;

        let j = match self.j_trace.last() {
            Some(&j) if !changed => j,
            _ => criterion_j(&self.tbn, self.cache, self.cfg.lambda),
        };
        self.j_trace.push(j);
        self.timing.scoring += t2.elapsed();
        Ok(())
    }

    fn reject(
        &mut self,
        feature: usize,
        reason: RejectReason,
        markov_blanket: Vec<usize>,
        observer: &mut dyn FnMut(&Event, &Tbn),
    ) {
        let r = Rejection {
            feature,
            reason,
            markov_blanket,
        };
        observer(&Event::Rejected(r.clone()), &self.tbn);
        self.rejected.push(r);
    }

    fn attach(
        &mut self,
        parent: Node,
        f: usize,
        observer: &mut dyn FnMut(&Event, &Tbn),
    ) -> Result<(), SlfsError> {
        self.tbn.add_edge(parent, f)?;
        observer(&Event::Attached { feature: f, parent }, &self.tbn);
        Ok(())
    }

    /// Returns whether the tree changed.
    fn place(&mut self, f: usize, observer: &mut dyn FnMut(&Event, &Tbn)) -> Result<bool, SlfsError> {
        let cache = self.cache;
        let pa = find_parent(cache, &self.tbn, f, self.tbn.children(Node::Class));
        let mut fj = match connect_decision(cache, f, pa, self.cfg.lambda) {
            Connect::AttachToClass if !self.tbn.is_full(Node::Class) => {
                self.attach(Node::Class, f, observer)?;
                return Ok(true);
            }
            Connect::AttachToClass => match pa {
                Some(pa) => pa,
                None => {
                    self.reject(f, RejectReason::CapacityPruned, Vec::new(), observer);
                    return Ok(false);
                }
            },
            Connect::Descend(pa) => pa,
        };

        loop {
            let depth = self.tbn.depth(Node::Feature(fj)).unwrap_or(0);
            if depth + 1 > self.cfg.max_depth {
                let mb = self.tbn.path_to_root(Node::Feature(fj));
                self.reject(f, RejectReason::DepthPruned, mb, observer);
                return Ok(false);
            }
            let fk = find_parent(cache, &self.tbn, f, self.tbn.children(Node::Feature(fj)));
            let decision = if self.tbn.is_full(Node::Feature(fj)) {
                // a full node can only be passed through
                match fk {
                    Some(next) => Descend::ContinueTo(next),
                    None => {
                        let mb = self.tbn.path_to_root(Node::Feature(fj));
                        self.reject(f, RejectReason::CapacityPruned, mb, observer);
                        return Ok(false);
                    }
                }
            } else {
                descend_decision(cache, f, fj, fk)
            };
            match decision {
                Descend::ContinueTo(next) => fj = next,
                Descend::AttachTo(at) => {
                    self.attach(Node::Feature(at), f, observer)?;
                    if swap_check(cache, f, at) {
                        let shared = cache.mi(Var::Feature(f), Var::Feature(at));
                        let pre = shared - cache.cmi(Var::Feature(f), Var::Class, Var::Feature(at));
                        let post = shared - cache.cmi(Var::Feature(at), Var::Class, Var::Feature(f));
                        self.tbn.swap(f, at)?;
                        self.swaps += 1;
                        let rec = SwapRecord {
                            incoming: f,
                            parent: at,
                            pre_score: pre,
                            post_score: post,
                            recheck: swap_check(cache, at, f),
                        };
                        observer(&Event::Swapped(rec), &self.tbn);
                    }
                    return Ok(true);
                }
            }
        }
    }

    pub fn finish(mut self) -> SelectionResult {
        self.timing.total = self.timing.irrelevance + self.timing.placement + self.timing.scoring;
        SelectionResult {
            selected: self.tbn.features().collect(),
            tbn: self.tbn,
            rejected: self.rejected,
            j_trace: self.j_trace,
            swaps: self.swaps,
            timing: self.timing,
        }
    }
}

pub fn run_slfs(data: &DiscreteDataset, cfg: &SlfsConfig) -> Result<SelectionResult, SlfsError> {
    let cache = MiCache::new(data);
    run_slfs_with(&cache, cfg, &mut |_, _| {})
}

/// Runs on a caller-owned cache, reporting every tree event to `observer`.
pub fn run_slfs_with(
    cache: &MiCache,
    cfg: &SlfsConfig,
    observer: &mut dyn FnMut(&Event, &Tbn),
) -> Result<SelectionResult, SlfsError> {
    let start = Instant::now();
    let mut engine = Slfs::new(cache, cfg.clone())?;
    for f in cfg.arrival_order.order(cache.dataset().n_features()) {
        engine.offer_observed(f, observer)?;
    }
    let mut result = engine.finish();
    result.timing.total = start.elapsed();
    Ok(result)
}
