//! Ablation runners: per-tier regime matrix, tier leave-one-in on a real
//! dataset, and query/F1 operating points.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::Analysis;
use crate::cascade::{tier_decide, Outcome};
use crate::error::Result;
use crate::model::{Config, Dataset, OracleMode, Tier};
use crate::oracle::{run_pure_metahub, GroundTruth, OracleBackend, Protocol};
use crate::synth::eval::{evaluate, evaluate_edges};
use crate::synth::regimes::{generate_regime, Regime, RegimeSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierCell {
    /// Pairs whose gate admitted the tier.
    pub gated_in: usize,
    pub fired: usize,
    pub correct: usize,
}

impl TierCell {
    /// True when the gate rejected every pair.
    pub fn abstains(&self) -> bool {
        self.gated_in == 0
    }

    pub fn accuracy(&self) -> Option<f64> {
        (self.fired > 0).then(|| self.correct as f64 / self.fired as f64)
    }

    pub fn label(&self) -> String {
        if self.abstains() || self.fired == 0 {
            "abstain".to_string()
        } else {
            format!("{}/{}", self.correct, self.fired)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TierMatrix {
    pub cells: BTreeMap<(Tier, Regime), TierCell>,
}

impl TierMatrix {
    pub fn cell(&self, t: Tier, r: Regime) -> TierCell {
        self.cells.get(&(t, r)).copied().unwrap_or_default()
    }

    pub fn to_csv(&self, tiers: &[Tier], regimes: &[Regime]) -> String {
        let mut out = String::from("tier");
        for r in regimes {
            out.push(',');
            out.push_str(r.as_str());
        }
        out.push('\n');
        for &t in tiers {
            out.push_str(t.as_str());
            for &r in regimes {
                out.push(',');
                out.push_str(&self.cell(t, r).label());
            }
            out.push('\n');
        }
        out
    }
}

/// Each tier evaluated on its own (not inside the cascade) over every pair.
pub fn run_tier_matrix(specs: &[RegimeSpec], config: &Config, tiers: &[Tier]) -> TierMatrix {
    let mut m = TierMatrix::default();
    for spec in specs {
        for ps in generate_regime(spec) {
            let a = Analysis::new(&ps.data, config);
            for &t in tiers {
                let d = tier_decide(t, &a, (0, 1));
                let c = m.cells.entry((t, spec.regime)).or_default();
                c.gated_in += d.gate_passed as usize;
                if let Some(dir) = d.outcome.direction() {
                    c.fired += 1;
                    c.correct += (dir == ps.truth) as usize;
                }
            }
        }
        for &t in tiers {
            m.cells.entry((t, spec.regime)).or_default();
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub commits: usize,
    pub correct: usize,
    pub queries_left: usize,
    pub precision: f64,
    pub demoted: usize,
}

/// Tier configurations of the leave-one-in table, in row order.
pub fn ablation_configs(base: &Config) -> Vec<(String, Config)> {
    let with = |label: &str, extra: &[Tier], guard: bool| {
        let mut tiers = vec![Tier::L0, Tier::L1, Tier::L2];
        tiers.extend_from_slice(extra);
        let mut c = base.clone().with_tiers(&tiers);
        c.guard_enabled = guard;
        (label.to_string(), c)
    };
    vec![
        with("BASE", &[], false),
        with("+L_IGCI", &[Tier::Igci], false),
        with("+L_LSNM", &[Tier::Lsnm], false),
        with("+L_STEIN", &[Tier::Stein], false),
        with("+L_MDL", &[Tier::Mdl], false),
        with("+L_PEIT", &[Tier::Peit], false),
        with("+all", &Tier::SAFE, false),
        with("+all+guard", &Tier::SAFE, true),
    ]
}

/// Data-only audit per tier configuration; propagation is off so each row
/// reflects the cascade alone.
pub fn run_ablation(
    data: &Dataset,
    gt: &BTreeSet<(usize, usize)>,
    base: &Config,
) -> Result<Vec<AblationRow>> {
    let data = Arc::new(data.clone());
    let mut rows = Vec::new();
    for (label, mut cfg) in ablation_configs(base) {
        cfg.propagation_enabled = false;
        let p = Protocol::new(Arc::clone(&data), Arc::new(cfg))?;
        let r = evaluate(p.dag(), gt);
        let demoted = p.verdicts().values().filter(|v| v.demoted.is_some()).count();
        rows.push(AblationRow {
            label,
            commits: r.committed,
            correct: r.correct,
            queries_left: p.dag().open().len(),
            precision: r.precision,
            demoted,
        });
    }
    Ok(rows)
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("configuration,commits,correct,queries_left,precision,demoted\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.3},{}\n",
            r.label, r.commits, r.correct, r.queries_left, r.precision, r.demoted
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub strategy: String,
    pub queries: usize,
    pub precision: f64,
    pub f1: f64,
}

/// Budget-limited per-edge run: stop after `budget` answers.
fn budgeted(
    data: &Arc<Dataset>,
    cfg: Config,
    backend: &mut dyn OracleBackend,
    budget: usize,
) -> Result<Protocol> {
    let mut p = Protocol::new(Arc::clone(data), Arc::new(cfg))?;
    p.set_metahub_hint(backend.known_k());
    while p.queries() < budget {
        let Some(q) = p.next_query() else { break };
        let a = backend.answer(&q)?;
        p.apply_answer(q.id, a)?;
    }
    Ok(p)
}

/// Three operating points: cascade with a small per-edge budget, cascade
/// plus meta-hub/children, and the pure meta-hub protocol.
pub fn run_pareto(
    data: &Dataset,
    gt: &BTreeSet<(usize, usize)>,
    base: &Config,
    per_edge_budget: usize,
) -> Result<Vec<OperatingPoint>> {
    let data = Arc::new(data.clone());
    let n = data.n_vars();
    let mut out = Vec::new();

    let mut gt_backend = GroundTruth::new(n, gt.iter().copied());
    let p = budgeted(&data, base.clone(), &mut gt_backend, per_edge_budget)?;
    let r = evaluate(p.dag(), gt);
    out.push(OperatingPoint {
        strategy: "cascade+per_edge".into(),
        queries: p.queries(),
        precision: r.precision,
        f1: r.f1,
    });

    let cfg = Config {
        oracle_mode: OracleMode::MetahubChildren,
        ..base.clone()
    };
    let p = budgeted(&data, cfg, &mut gt_backend, usize::MAX)?;
    let r = evaluate(p.dag(), gt);
    out.push(OperatingPoint {
        strategy: "cascade+metahub".into(),
        queries: p.queries(),
        precision: r.precision,
        f1: r.f1,
    });

    let run = run_pure_metahub(n, &mut gt_backend, None)?;
    let r = evaluate_edges(&run.edges, gt);
    out.push(OperatingPoint {
        strategy: "pure_metahub".into(),
        queries: run.queries,
        precision: r.precision,
        f1: r.f1,
    });
    Ok(out)
}

pub fn pareto_csv(points: &[OperatingPoint]) -> String {
    let mut out = String::from("strategy,queries,precision,f1\n");
    for p in points {
        out.push_str(&format!("{},{},{:.3},{:.3}\n", p.strategy, p.queries, p.precision, p.f1));
    }
    out
}

/// Tier-matrix specs for every regime.
pub fn default_specs(n_pairs: usize, n_samples: usize, seed: u64) -> Vec<RegimeSpec> {
    Regime::ALL
        .into_iter()
        .map(|r| RegimeSpec {
            n_pairs,
            n_samples,
            ..RegimeSpec::new(r, seed)
        })
        .collect()
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Fwd => "FWD",
            Outcome::Bwd => "BWD",
            Outcome::Abstain => "ABSTAIN",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_pairs_abstain_by_vacuity() {
        let specs = default_specs(0, 500, 1);
        let m = run_tier_matrix(&specs, &Config::default(), &Tier::ALL);
        assert!(m.cells.values().all(|c| c.abstains()));
        assert!(m.to_csv(&Tier::ALL, &Regime::ALL).contains("L_IGCI,abstain,abstain"));
    }

    #[test]
    fn ablation_rows_follow_table_order() {
        let labels: Vec<String> = ablation_configs(&Config::default()).into_iter().map(|r| r.0).collect();
        assert_eq!(labels.first().map(String::as_str), Some("BASE"));
        assert_eq!(labels.last().map(String::as_str), Some("+all+guard"));
    }
}
