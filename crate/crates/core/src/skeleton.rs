//! Stage 1: marginal-dependence skeleton and mediator search.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analysis::Analysis;
use crate::model::Pair;
use crate::stats::bh_fdr;

/// Largest conditioning set at the third mediator tier.
pub const MAX_BLANKET: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub n_vars: usize,
    /// Retained pairs in skeleton order.
    pub pairs: Vec<Pair>,
    /// Marginal p-value of every tested pair.
    pub marginal_p: BTreeMap<Pair, f64>,
}

impl Skeleton {
    pub fn contains(&self, p: Pair) -> bool {
        self.pairs.binary_search(&p).is_ok()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .pairs
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediatorVerdict {
    pub pair: Pair,
    pub mediated_by: Vec<usize>,
    pub tier: u8,
    pub p_conditional: f64,
}

/// Test every pair marginally and keep the BH-FDR rejections.
pub fn build_skeleton(a: &Analysis) -> Skeleton {
    let n = a.n_vars();
    let all: Vec<Pair> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let ps: Vec<f64> = all.iter().map(|&p| a.marginal(p).p_value).collect();
    let keep = bh_fdr(&ps, a.config.fdr_level());
    Skeleton {
        n_vars: n,
        pairs: keep.iter().map(|&k| all[k]).collect(),
        marginal_p: all.into_iter().zip(ps).collect(),
    }
}

/// Search each skeleton pair for an observed set that explains its
/// dependence. Candidates are the common skeleton neighbours (tiers 1 and 2)
/// and the joint neighbourhood capped at [`MAX_BLANKET`] (tier 3).
pub fn mediator_search(skel: &Skeleton, a: &Analysis) -> BTreeMap<Pair, MediatorVerdict> {
    let alpha = a.config.alpha_residual;
    let max_tier = a.config.mediator_max_tier;
    let mut out = BTreeMap::new();
    for &p in &skel.pairs {
        let nx = skel.neighbors(p.0);
        let ny = skel.neighbors(p.1);
        let common: Vec<usize> = nx.iter().copied().filter(|z| ny.contains(z)).collect();
        let mut verdict = best_accepting(a, p, common.iter().map(|&z| vec![z]), alpha, 1);
        if verdict.is_none() && max_tier >= 2 {
            let pairs = common
                .iter()
                .enumerate()
                .flat_map(|(k, &z1)| common[k + 1..].iter().map(move |&z2| vec![z1, z2]));
            verdict = best_accepting(a, p, pairs, alpha, 2);
        }
        if verdict.is_none() && max_tier >= 3 {
            let blanket = blanket(skel, p);
            // sets of size <= 2 drawn from the common neighbours were already tried
            let seen = blanket.len() <= 2 && blanket.iter().all(|z| common.contains(z));
            if !blanket.is_empty() && !seen {
                verdict = best_accepting(a, p, std::iter::once(blanket), alpha, 3);
            }
        }
        if let Some(v) = verdict {
            out.insert(p, v);
        }
    }
    out
}

fn best_accepting(
    a: &Analysis,
    p: Pair,
    sets: impl Iterator<Item = Vec<usize>>,
    alpha: f64,
    tier: u8,
) -> Option<MediatorVerdict> {
    let mut best: Option<MediatorVerdict> = None;
    for set in sets {
        let pc = a.cond_p(p, &set);
        if pc > alpha && best.as_ref().is_none_or(|b| pc > b.p_conditional) {
            best = Some(MediatorVerdict {
                pair: p,
                mediated_by: set,
                tier,
                p_conditional: pc,
            });
        }
    }
    best
}

/// Skeleton neighbourhood of both endpoints, strongest marginal dependence
/// first, truncated to [`MAX_BLANKET`] and returned sorted.
fn blanket(skel: &Skeleton, p: Pair) -> Vec<usize> {
    let members: BTreeSet<usize> = skel
        .neighbors(p.0)
        .into_iter()
        .chain(skel.neighbors(p.1))
        .filter(|&v| v != p.0 && v != p.1)
        .collect();
    let strength = |v: usize| {
        let px = skel.marginal_p.get(&crate::model::pair(v, p.0)).copied().unwrap_or(1.0);
        let py = skel.marginal_p.get(&crate::model::pair(v, p.1)).copied().unwrap_or(1.0);
        px.min(py)
    };
    let mut ranked: Vec<usize> = members.into_iter().collect();
    ranked.sort_by(|&u, &v| strength(u).total_cmp(&strength(v)).then(u.cmp(&v)));
    ranked.truncate(MAX_BLANKET);
    ranked.sort_unstable();
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Config, Dataset};
    use crate::stats::util::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn data(cols: Vec<Vec<f64>>) -> Dataset {
        let names = (0..cols.len()).map(|k| format!("v{k}")).collect();
        Dataset::new(names, cols).unwrap()
    }

    fn chain(n: usize, seed: u64) -> Dataset {
        let mut r = stream_rng(seed, 11);
        let mut e = || -> f64 { r.sample(StandardNormal) };
        let a: Vec<f64> = (0..n).map(|_| e()).collect();
        let b: Vec<f64> = a.iter().map(|v| 0.9 * v + 0.6 * e()).collect();
        let c: Vec<f64> = b.iter().map(|v| 0.9 * v + 0.6 * e()).collect();
        data(vec![a, b, c])
    }

    #[test]
    fn chain_keeps_all_pairs_and_mediates_the_ends() {
        let d = chain(2000, 1);
        let cfg = Config::default();
        let a = Analysis::new(&d, &cfg);
        let s = build_skeleton(&a);
        assert_eq!(s.pairs, vec![(0, 1), (0, 2), (1, 2)]);
        let m = mediator_search(&s, &a);
        let v = m.get(&(0, 2)).expect("a-c mediated");
        assert_eq!(v.mediated_by, vec![1]);
        assert_eq!(v.tier, 1);
        assert!(!m.contains_key(&(0, 1)) && !m.contains_key(&(1, 2)));
    }

    #[test]
    fn single_variable_has_empty_skeleton() {
        let d = data(vec![vec![1.0, 2.0, 3.0]]);
        let cfg = Config::default();
        let s = build_skeleton(&Analysis::new(&d, &cfg));
        assert!(s.pairs.is_empty());
    }

    #[test]
    fn independent_variables_rarely_survive() {
        let cfg = Config::default();
        let mut empty = 0;
        for seed in 0..20 {
            let mut r = stream_rng(seed, 3);
            let cols = (0..3)
                .map(|_| (0..300).map(|_| r.sample(StandardNormal)).collect())
                .collect();
            let d = data(cols);
            if build_skeleton(&Analysis::new(&d, &cfg)).pairs.is_empty() {
                empty += 1;
            }
        }
        assert!(empty >= 17, "{empty}/20 empty");
    }
}
