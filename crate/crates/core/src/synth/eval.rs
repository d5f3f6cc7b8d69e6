//! Direction-aware edge metrics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Action, PartialDag, Trace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// False when nothing was committed; precision is then reported as 0.
    pub precision_defined: bool,
    pub committed: usize,
    pub correct: usize,
    pub gt_edges: usize,
    pub queries: usize,
    /// Net commits per trace provenance (`M3`, `L1`, `M11`, ...).
    pub per_mechanism: BTreeMap<String, i64>,
}

pub fn evaluate_edges(
    committed: &BTreeSet<(usize, usize)>,
    gt: &BTreeSet<(usize, usize)>,
) -> EvalReport {
    let correct = committed.intersection(gt).count();
    let precision_defined = !committed.is_empty();
    let precision = if precision_defined {
        correct as f64 / committed.len() as f64
    } else {
        0.0
    };
    let recall = if gt.is_empty() {
        1.0
    } else {
        correct as f64 / gt.len() as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    EvalReport {
        precision,
        recall,
        f1,
        precision_defined,
        committed: committed.len(),
        correct,
        gt_edges: gt.len(),
        queries: 0,
        per_mechanism: BTreeMap::new(),
    }
}

pub fn evaluate(dag: &PartialDag, gt: &BTreeSet<(usize, usize)>) -> EvalReport {
    evaluate_edges(dag.committed(), gt)
}

/// Metrics plus query count and per-mechanism commit tallies from a trace.
pub fn evaluate_run(dag: &PartialDag, gt: &BTreeSet<(usize, usize)>, trace: &Trace) -> EvalReport {
    let mut r = evaluate(dag, gt);
    r.queries = trace
        .events
        .iter()
        .filter(|e| e.action == Action::Query)
        .count();
    for e in &trace.events {
        let delta = match e.action {
            Action::CommitFwd | Action::CommitBwd => 1,
            Action::Demote => -1,
            _ => continue,
        };
        *r.per_mechanism.entry(e.mechanism.to_string()).or_insert(0) += delta;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
        v.iter().copied().collect()
    }

    #[test]
    fn exact_recovery_scores_one() {
        let g = set(&[(0, 1), (1, 2)]);
        let r = evaluate_edges(&g, &g);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn direction_matters() {
        let r = evaluate_edges(&set(&[(1, 0), (1, 2)]), &set(&[(0, 1), (1, 2)]));
        assert_eq!(r.correct, 1);
        assert_eq!(r.precision, 0.5);
    }

    #[test]
    fn empty_commit_flags_precision() {
        let r = evaluate_edges(&BTreeSet::new(), &set(&[(0, 1)]));
        assert!(!r.precision_defined);
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn relabelling_is_invariant() {
        let c = set(&[(0, 1), (2, 1), (3, 0)]);
        let g = set(&[(0, 1), (1, 2), (3, 0), (2, 3)]);
        let perm = [2, 0, 3, 1];
        let m = |s: &BTreeSet<(usize, usize)>| s.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        assert_eq!(evaluate_edges(&c, &g), evaluate_edges(&m(&c), &m(&g)));
    }
}
