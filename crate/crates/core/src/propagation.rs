//! Zero-query auto-resolution: bivariate-confirmed acyclicity/Meek
//! propagation, parent-conditioned re-audit and transitive d-separation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::Analysis;
use crate::cascade::{run_cascade, tier_decide};
use crate::model::{pair, Config, Dataset, Direction, Pair, PartialDag, Tier};
use crate::stats::Engine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    Acyclicity,
    MeekR1,
    MeekR3,
    Reaudit,
    TransitiveDsep,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Acyclicity => "ACYCLICITY",
            Rule::MeekR1 => "MEEK_R1",
            Rule::MeekR3 => "MEEK_R3",
            Rule::Reaudit => "REAUDIT",
            Rule::TransitiveDsep => "TRANSITIVE_DSEP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedCommit {
    pub from: usize,
    pub to: usize,
    pub rule: Rule,
    /// Confirm ratio for R1/R3, residual p-values for re-audit.
    pub detail: String,
}

/// A Meek candidate the confirm ratio held back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatedCandidate {
    pub from: usize,
    pub to: usize,
    pub rule: Rule,
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub new_commits: Vec<DerivedCommit>,
    pub dropped: Vec<(Pair, f64)>,
    pub gated: Vec<GatedCandidate>,
    pub confirm_ratios: BTreeMap<Pair, f64>,
}

impl PropagationReport {
    /// Derived resolutions: commits plus drops.
    pub fn resolutions(&self) -> usize {
        self.new_commits.len() + self.dropped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resolutions() == 0
    }

    pub fn extend(&mut self, other: PropagationReport) {
        self.new_commits.extend(other.new_commits);
        self.dropped.extend(other.dropped);
        for g in other.gated {
            if !self.gated.contains(&g) {
                self.gated.push(g);
            }
        }
        self.confirm_ratios.extend(other.confirm_ratios);
    }
}

/// Ratio of the nonlinear ANM p-value for `from -> to` over `to -> from`.
pub fn confirm_ratio(a: &Analysis, from: usize, to: usize) -> f64 {
    let pc = a.anm_p(from, to, Engine::Nonlinear);
    let po = a.anm_p(to, from, Engine::Nonlinear);
    pc / po.max(1e-300)
}

/// Acyclicity, R1, R3 to fixpoint, gated by the confirm ratio when the
/// configuration asks for it.
pub fn propagate(dag: &mut PartialDag, a: &Analysis) -> PropagationReport {
    let cfg = &a.config;
    if cfg.confirm_gate {
        propagate_rules(dag, Some(&|f, t| confirm_ratio(a, f, t)), cfg.confirm_ratio)
    } else {
        propagate_rules(dag, None, cfg.confirm_ratio)
    }
}

/// Rule engine with a pluggable confirm ratio; `None` disables the gate.
pub fn propagate_rules(
    dag: &mut PartialDag,
    ratio: Option<&dyn Fn(usize, usize) -> f64>,
    threshold: f64,
) -> PropagationReport {
    let mut report = PropagationReport::default();
    loop {
        let mut changed = false;
        for rule in [Rule::Acyclicity, Rule::MeekR1, Rule::MeekR3] {
            let open: Vec<Pair> = dag.open().iter().copied().collect();
            for p in open {
                if !dag.is_open(p) {
                    continue;
                }
                for (from, to) in [p, (p.1, p.0)] {
                    if !fires(dag, rule, from, to) {
                        continue;
                    }
                    let mut detail = String::new();
                    if rule != Rule::Acyclicity {
                        if let Some(f) = ratio {
                            let r = f(from, to);
                            report.confirm_ratios.insert(p, r);
                            detail = format!("ratio={r:.3}");
                            if r < threshold {
                                let g = GatedCandidate { from, to, rule, ratio: r };
                                if !report.gated.contains(&g) {
                                    report.gated.push(g);
                                }
                                continue;
                            }
                        }
                    }
                    if dag.commit(from, to).is_ok() {
                        report.new_commits.push(DerivedCommit { from, to, rule, detail });
                        changed = true;
                        break;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    report
}

/// Does `rule` derive `from -> to` for the open pair?
fn fires(dag: &PartialDag, rule: Rule, from: usize, to: usize) -> bool {
    match rule {
        // to -> from would close a cycle
        Rule::Acyclicity => dag.has_path(from, to),
        Rule::MeekR1 => dag
            .parents(from)
            .into_iter()
            .any(|a| a != to && !dag.adjacent(a, to)),
        Rule::MeekR3 => {
            let ps: Vec<usize> = dag
                .parents(to)
                .into_iter()
                .filter(|&c| c != from && dag.is_open(pair(from, c)))
                .collect();
            ps.iter()
                .enumerate()
                .any(|(k, &c)| ps[k + 1..].iter().any(|&d| !dag.adjacent(c, d)))
        }
        _ => false,
    }
}

fn tag(parts: &[usize]) -> Vec<u64> {
    parts.iter().map(|&v| v as u64).collect()
}

/// Re-run the L0/L1 decision on parent-residualised endpoints of every open
/// pair with at least one committed parent.
pub fn reaudit_conditioned(dag: &mut PartialDag, a: &Analysis) -> PropagationReport {
    let mut report = PropagationReport::default();
    let open: Vec<Pair> = dag.open().iter().copied().collect();
    for p in open {
        if !dag.is_open(p) {
            continue;
        }
        let px = dag.parents(p.0);
        let py = dag.parents(p.1);
        if px.is_empty() && py.is_empty() {
            continue;
        }
        let mut key = vec![7u64, p.0 as u64, p.1 as u64, a.config.reaudit_safe_tiers as u64];
        key.extend(tag(&px));
        key.push(u64::MAX);
        key.extend(tag(&py));
        let verdict = a.memo(key.clone(), || residual_verdict(a, p, &px, &py, a.seed(&key)));
        if let Some((fwd, pf, pb)) = verdict {
            let d = if fwd { Direction::Fwd } else { Direction::Bwd };
            let (from, to) = d.orient(p);
            if dag.commit(from, to).is_ok() {
                report.new_commits.push(DerivedCommit {
                    from,
                    to,
                    rule: Rule::Reaudit,
                    detail: format!("p_fwd={pf:.4};p_bwd={pb:.4}"),
                });
            }
        }
    }
    report
}

fn residual_verdict(
    a: &Analysis,
    p: Pair,
    px: &[usize],
    py: &[usize],
    seed: u64,
) -> Option<(bool, f64, f64)> {
    let rx = a.residual(p.0, px, Engine::Nonlinear);
    let ry = a.residual(p.1, py, Engine::Nonlinear);
    let names = vec![a.data.name(p.0).to_string(), a.data.name(p.1).to_string()];
    let data = Dataset::new(names, vec![rx.to_vec(), ry.to_vec()]).ok()?;
    let cfg = Config {
        seed,
        ..(*a.config).clone()
    };
    let sub = Analysis::new(&data, &cfg);
    let l0 = tier_decide(Tier::L0, &sub, (0, 1));
    let pf = l0.score("p_fwd").unwrap_or(1.0);
    let pb = l0.score("p_bwd").unwrap_or(1.0);
    let mut dir = l0.outcome.direction();
    if dir.is_none() {
        dir = tier_decide(Tier::L1, &sub, (0, 1)).outcome.direction();
    }
    if dir.is_none() && a.config.reaudit_safe_tiers {
        let safe = Config {
            tier_mask: Tier::SAFE.into_iter().collect(),
            guard_enabled: false,
            ..cfg.clone()
        };
        let sub = Analysis::new(&data, &safe);
        dir = run_cascade(&sub, (0, 1)).direction();
    }
    dir.map(|d| (d == Direction::Fwd, pf, pb))
}

/// Drop open pairs whose endpoints become independent after regressing both
/// on the union of their committed parents.
pub fn transitive_dsep(dag: &mut PartialDag, a: &Analysis) -> Vec<(Pair, f64)> {
    let mut out = Vec::new();
    let open: Vec<Pair> = dag.open().iter().copied().collect();
    for p in open {
        let mut set: Vec<usize> = dag.parents(p.0);
        set.extend(dag.parents(p.1));
        set.retain(|&v| v != p.0 && v != p.1);
        set.sort_unstable();
        set.dedup();
        if set.is_empty() {
            continue;
        }
        let pv = a.cond_p(p, &set);
        if pv > a.config.alpha_residual && dag.drop_pair(p).is_ok() {
            out.push((p, pv));
        }
    }
    out
}

/// Propagation and d-separation alternated to fixpoint; no re-audit. This
/// is the closure that info-value scoring simulates.
pub fn closure(dag: &mut PartialDag, a: &Analysis) -> PropagationReport {
    let mut report = PropagationReport::default();
    if !a.config.propagation_enabled {
        return report;
    }
    loop {
        let mut step = propagate(dag, a);
        step.dropped = transitive_dsep(dag, a);
        let done = step.is_empty();
        report.extend(step);
        if done {
            return report;
        }
    }
}

/// Full auto-resolution after a commit: closure, then re-audit, repeated
/// until nothing changes.
pub fn auto_resolve(dag: &mut PartialDag, a: &Analysis) -> PropagationReport {
    let mut report = PropagationReport::default();
    if !a.config.propagation_enabled {
        return report;
    }
    loop {
        report.extend(closure(dag, a));
        let re = reaudit_conditioned(dag, a);
        let done = re.is_empty();
        report.extend(re);
        if done {
            return report;
        }
    }
}
