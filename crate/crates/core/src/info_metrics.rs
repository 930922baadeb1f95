//! Plug-in (maximum-likelihood) entropy, mutual information and conditional
//! mutual information over discrete columns, in bits.
//!
//! Every estimator collects its per-cell terms and sums them in sorted order,
//! so the result does not depend on which argument comes first: `I(x;y)` and
//! `I(y;x)` are bit-identical, as are `I(x;y|z)` and `I(y;x|z)`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use thiserror::Error;

use crate::dataset::DiscreteDataset;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InfoError {
    #[error("empty column")]
    Empty,
    #[error("columns differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Counts over one, two or three discrete axes, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    dims: Vec<usize>,
    counts: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    /// Builds the joint table of `columns`; `arities[i]` must exceed every code
    /// in `columns[i]`.
    pub fn from_columns(columns: &[&[u32]], arities: &[usize]) -> Result<Self, InfoError> {
        assert!(
            (1..=3).contains(&columns.len()) && columns.len() == arities.len(),
            "1 to 3 axes expected"
        );
        let n = columns[0].len();
        if n == 0 {
            return Err(InfoError::Empty);
        }
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(InfoError::LengthMismatch(n, c.len()));
        }
        let size: usize = arities.iter().product();
        let mut counts = vec![0u64; size];
        for r in 0..n {
            let mut idx = 0usize;
            for (col, &a) in columns.iter().zip(arities) {
                idx = idx * a + col[r] as usize;
            }
            counts[idx] += 1;
        }
        Ok(Self {
            dims: arities.to_vec(),
            counts,
            total: n as u64,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Sums the table down to the listed axes (in the given order).
    pub fn marginal(&self, axes: &[usize]) -> ContingencyTable {
        let dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let mut counts = vec![0u64; dims.iter().product()];
        let mut coord = vec![0usize; self.dims.len()];
        for &c in &self.counts {
            let idx = axes
                .iter()
                .zip(&dims)
                .fold(0usize, |acc, (&a, &d)| acc * d + coord[a]);
            counts[idx] += c;
            for k in (0..coord.len()).rev() {
                coord[k] += 1;
                if coord[k] < self.dims[k] {
                    break;
                }
                coord[k] = 0;
            }
        }
        ContingencyTable {
            dims,
            counts,
            total: self.total,
        }
    }

    /// Entropy in bits of the joint distribution of all axes.
    pub fn entropy(&self) -> f64 {
        let n = self.total as f64;
        sorted_sum(self.counts.iter().filter(|&&c| c > 0).map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        }))
    }
}

fn sorted_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut t: Vec<f64> = terms.collect();
    t.sort_by(f64::total_cmp);
    t.iter().sum()
}

fn arity_of(col: &[u32]) -> usize {
    col.iter().max().map_or(1, |&m| m as usize + 1)
}

pub fn entropy(x: &[u32]) -> Result<f64, InfoError> {
    entropy_with_arity(x, arity_of(x))
}

pub fn entropy_with_arity(x: &[u32], ax: usize) -> Result<f64, InfoError> {
    Ok(ContingencyTable::from_columns(&[x], &[ax])?.entropy())
}

pub fn mutual_info(x: &[u32], y: &[u32]) -> Result<f64, InfoError> {
    mutual_info_with_arity(x, arity_of(x), y, arity_of(y))
}

/// `sum p(a,b) log2 p(a,b)/(p(a)p(b))`, clamped at zero.
pub fn mutual_info_with_arity(x: &[u32], ax: usize, y: &[u32], ay: usize) -> Result<f64, InfoError> {
    let t = ContingencyTable::from_columns(&[x, y], &[ax, ay])?;
    let px = t.marginal(&[0]);
    let py = t.marginal(&[1]);
    let n = t.total as f64;
    let terms = t.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| {
        let (a, b) = (i / ay, i % ay);
        let ratio = (c as f64 * n) / (px.counts[a] as f64 * py.counts[b] as f64);
        c as f64 / n * ratio.log2()
    });
    Ok(sorted_sum(terms).max(0.0))
}

pub fn cond_mutual_info(x: &[u32], y: &[u32], z: &[u32]) -> Result<f64, InfoError> {
    cond_mutual_info_with_arity(x, arity_of(x), y, arity_of(y), z, arity_of(z))
}

/// `sum p(a,b,c) log2 p(c)p(a,b,c)/(p(a,c)p(b,c))`, clamped at zero.
pub fn cond_mutual_info_with_arity(
    x: &[u32],
    ax: usize,
    y: &[u32],
    ay: usize,
    z: &[u32],
    az: usize,
) -> Result<f64, InfoError> {
    let t = ContingencyTable::from_columns(&[x, y, z], &[ax, ay, az])?;
    let pxz = t.marginal(&[0, 2]);
    let pyz = t.marginal(&[1, 2]);
    let pz = t.marginal(&[2]);
    let n = t.total as f64;
    let terms = t.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| {
        let cz = i % az;
        let b = (i / az) % ay;
        let a = i / (az * ay);
        // Products of integer counts stay exact in f64 for any realistic N.
        let num = pz.counts[cz] as f64 * c as f64;
        let den = pxz.counts[a * az + cz] as f64 * pyz.counts[b * az + cz] as f64;
        c as f64 / n * (num / den).log2()
    });
    Ok(sorted_sum(terms).max(0.0))
}

/// Returns `(I(fj;Y|fi), I(fi;Y|fj) - (I(fi;Y) - I(fj;Y)))`; the two agree
/// for any plug-in estimate computed from one empirical joint.
pub fn joint_with_class_chain_identity(fi: &[u32], fj: &[u32], y: &[u32]) -> Result<(f64, f64), InfoError> {
    let lhs = cond_mutual_info(fj, y, fi)?;
    let rhs = cond_mutual_info(fi, y, fj)? - (mutual_info(fi, y)? - mutual_info(fj, y)?);
    Ok((lhs, rhs))
}

/// A variable of a [`DiscreteDataset`]: one of its features or the class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Class,
    Feature(usize),
}

fn ordered(a: Var, b: Var) -> (Var, Var) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Default)]
struct Tables {
    h: HashMap<Var, f64>,
    mi: HashMap<(Var, Var), f64>,
    cmi: HashMap<(Var, Var, Var), f64>,
}

/// Memoizing front end to the estimators over one dataset.
///
/// Readers share the lock; inserts take it exclusively. Two threads may
/// compute the same key concurrently; both produce the same value.
pub struct MiCache<'a> {
    data: &'a DiscreteDataset,
    enabled: bool,
    tables: RwLock<Tables>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<'a> MiCache<'a> {
    pub fn new(data: &'a DiscreteDataset) -> Self {
        Self {
            data,
            enabled: true,
            tables: RwLock::new(Tables::default()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    /// A pass-through instance that recomputes every query.
    pub fn uncached(data: &'a DiscreteDataset) -> Self {
        Self {
            enabled: false,
            ..Self::new(data)
        }
    }

    pub fn dataset(&self) -> &'a DiscreteDataset {
        self.data
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    fn column(&self, v: Var) -> (&'a [u32], usize) {
        match v {
            Var::Class => (self.data.class_codes(), self.data.n_classes()),
            Var::Feature(i) => (self.data.feature(i), self.data.arity(i)),
        }
    }

    fn lookup<K: std::hash::Hash + Eq>(
        &self,
        key: K,
        table: impl Fn(&Tables) -> &HashMap<K, f64>,
        table_mut: impl Fn(&mut Tables) -> &mut HashMap<K, f64>,
        compute: impl FnOnce() -> f64,
    ) -> f64 {
        if self.enabled {
            let guard = self.tables.read().unwrap_or_else(|e| e.into_inner());
            if let Some(&v) = table(&guard).get(&key) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return v;
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let v = compute();
        if self.enabled {
            let mut guard = self.tables.write().unwrap_or_else(|e| e.into_inner());
            table_mut(&mut guard).insert(key, v);
        }
        v
    }

    pub fn entropy(&self, v: Var) -> f64 {
        self.lookup(v, |t| &t.h, |t| &mut t.h, || {
            let (x, ax) = self.column(v);
            entropy_with_arity(x, ax).unwrap_or(0.0)
        })
    }

    pub fn mi(&self, a: Var, b: Var) -> f64 {
        let (a, b) = ordered(a, b);
        self.lookup((a, b), |t| &t.mi, |t| &mut t.mi, || {
            let (x, ax) = self.column(a);
            let (y, ay) = self.column(b);
            mutual_info_with_arity(x, ax, y, ay).unwrap_or(0.0)
        })
    }

    /// `I(a;b|given)`; conditioning on one of the pair yields exactly 0.
    pub fn cmi(&self, a: Var, b: Var, given: Var) -> f64 {
        if a == given || b == given {
            return 0.0;
        }
        let (a, b) = ordered(a, b);
        self.lookup((a, b, given), |t| &t.cmi, |t| &mut t.cmi, || {
            let (x, ax) = self.column(a);
            let (y, ay) = self.column(b);
            let (z, az) = self.column(given);
            cond_mutual_info_with_arity(x, ax, y, ay, z, az).unwrap_or(0.0)
        })
    }
}
