//! Supervised multi-interval discretization (recursive entropy split with
//! the MDL stopping rule of Fayyad and Irani).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, RawTable};

/// Cut points for one numeric feature column (index into the table's
/// feature list).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutList {
    pub feature: usize,
    pub cuts: Vec<f64>,
}

impl CutList {
    pub fn n_bins(&self) -> usize {
        self.cuts.len() + 1
    }
}

fn entropy_of(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn classes_present(counts: &[usize]) -> usize {
    counts.iter().filter(|&&c| c > 0).count()
}

/// Values sharing one distinct value, with their class histogram.
struct Group {
    value: f64,
    counts: Vec<usize>,
}

impl Group {
    fn pure_class(&self) -> Option<usize> {
        let mut present = self.counts.iter().enumerate().filter(|(_, &c)| c > 0);
        match (present.next(), present.next()) {
            (Some((k, _)), None) => Some(k),
            _ => None,
        }
    }
}

/// MDLP cut points for `values` against class `labels`, sorted ascending.
/// Non-finite values are ignored.
pub fn mdlp_cuts(values: &[f64], labels: &[u32]) -> Vec<f64> {
    assert_eq!(values.len(), labels.len(), "values and labels differ in length");
    let n_classes = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let mut pairs: Vec<(f64, u32)> = values
        .iter()
        .zip(labels)
        .filter(|(v, _)| v.is_finite())
        .map(|(&v, &l)| (v, l))
        .collect();
    if pairs.len() < 2 {
        return Vec::new();
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut groups: Vec<Group> = Vec::new();
    for (v, l) in pairs {
        match groups.last_mut() {
            Some(g) if g.value == v => g.counts[l as usize] += 1,
            _ => {
                let mut counts = vec![0; n_classes];
                counts[l as usize] = 1;
                groups.push(Group { value: v, counts });
            }
        }
    }

    let mut cuts = Vec::new();
    split(&groups, n_classes, &mut cuts);
    cuts.sort_by(f64::total_cmp);
    cuts
}

fn split(groups: &[Group], n_classes: usize, cuts: &mut Vec<f64>) {
    if groups.len() < 2 {
        return;
    }
    let mut total_counts = vec![0usize; n_classes];
    for g in groups {
        for (t, c) in total_counts.iter_mut().zip(&g.counts) {
            *t += c;
        }
    }
    let n: usize = total_counts.iter().sum();
    let h_all = entropy_of(&total_counts, n);

    // Best boundary: minimal weighted entropy, first (smallest threshold) on ties.
    let mut left = vec![0usize; n_classes];
    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    for i in 0..groups.len() - 1 {
        for (l, c) in left.iter_mut().zip(&groups[i].counts) {
            *l += c;
        }
        // Between two pure groups of the same class no boundary point exists.
        if let (Some(a), Some(b)) = (groups[i].pure_class(), groups[i + 1].pure_class()) {
            if a == b {
                continue;
            }
        }
        let n1: usize = left.iter().sum();
        let right: Vec<usize> = total_counts.iter().zip(&left).map(|(t, l)| t - l).collect();
        let n2 = n - n1;
        let e = (n1 as f64 * entropy_of(&left, n1) + n2 as f64 * entropy_of(&right, n2)) / n as f64;
        if best.as_ref().is_none_or(|b| e < b.1) {
            best = Some((i, e, left.clone()));
        }
    }
    let Some((i, e, left)) = best else {
        return;
    };

    let right: Vec<usize> = total_counts.iter().zip(&left).map(|(t, l)| t - l).collect();
    let n1: usize = left.iter().sum();
    let n2 = n - n1;
    let gain = h_all - e;
    let k = classes_present(&total_counts) as f64;
    let k1 = classes_present(&left) as f64;
    let k2 = classes_present(&right) as f64;
    let delta = (3f64.powf(k) - 2.0).log2()
        - (k * h_all - k1 * entropy_of(&left, n1) - k2 * entropy_of(&right, n2));
    let nf = n as f64;
    let threshold = (nf - 1.0).log2() / nf + delta / nf;
    if gain <= threshold {
        return;
    }

    cuts.push((groups[i].value + groups[i + 1].value) / 2.0);
    split(&groups[..=i], n_classes, cuts);
    split(&groups[i + 1..], n_classes, cuts);
}

/// One cut list per numeric feature column; categorical columns are skipped.
pub fn discretize_all(table: &RawTable, class_codes: &[u32]) -> Vec<CutList> {
    let numeric: Vec<(usize, &Vec<Option<f64>>)> = table
        .features
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match &c.data {
            ColumnData::Numeric(v) => Some((i, v)),
            ColumnData::Categorical(_) => None,
        })
        .collect();
    numeric
        .par_iter()
        .map(|&(i, col)| {
            let (values, labels): (Vec<f64>, Vec<u32>) = col
                .iter()
                .zip(class_codes)
                .filter_map(|(v, &l)| v.map(|v| (v, l)))
                .unzip();
            CutList {
                feature: i,
                cuts: mdlp_cuts(&values, &labels),
            }
        })
        .collect()
}

/// Class codes of `table` in the order of `labels` (first-appearance order
/// when `labels` comes from [`RawTable::class_labels`]).
pub fn class_codes(table: &RawTable, labels: &[String]) -> Vec<u32> {
    table
        .class_values
        .iter()
        .map(|v| {
            v.as_ref()
                .and_then(|v| labels.iter().position(|l| l == v))
                .unwrap_or(0) as u32
        })
        .collect()
}
