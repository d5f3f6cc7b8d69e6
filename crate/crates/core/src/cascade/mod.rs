//! Stage 2: the gated identifiability cascade, the L0-disagreement guard,
//! and certificate assignment.

pub mod tiers;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::Analysis;
use crate::model::{CertificateCode, Direction, Pair, Tier, VariableMeta};
pub use tiers::{gate, non_gaussian, tier_decide, Outcome, TierDecision};

/// Integer support at or below which an overdispersed variable is a count.
pub const COUNT_MAX_SUPPORT: usize = 30;
/// Variance-to-mean ratio above which integer data is overdispersed.
pub const COUNT_DISPERSION: f64 = 1.2;
/// Distinct integer values above which a variable is high-cardinality.
pub const HIGH_CARDINALITY: usize = 30;

/// Tiers whose opposite vote demotes an L0 commit.
pub const GUARD_TIERS: [Tier; 3] = [Tier::Igci, Tier::Stein, Tier::Mdl];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Final {
    Fwd,
    Bwd,
    Impossible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeVerdict {
    pub pair: Pair,
    /// Evaluated tiers, lattice order.
    pub decisions: Vec<TierDecision>,
    pub final_: Final,
    pub certificate: CertificateCode,
    pub committed_by: Option<Tier>,
    /// Set when the guard overturned an L0 commit; holds the demoted
    /// direction and the dissenting tier.
    pub demoted: Option<(Direction, Tier)>,
}

impl CascadeVerdict {
    pub fn direction(&self) -> Option<Direction> {
        match self.final_ {
            Final::Fwd => Some(Direction::Fwd),
            Final::Bwd => Some(Direction::Bwd),
            Final::Impossible => None,
        }
    }

    pub fn decision(&self, t: Tier) -> Option<&TierDecision> {
        self.decisions.iter().find(|d| d.tier == t)
    }

    /// Flat `TIER.score` evidence map.
    pub fn evidence(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for d in &self.decisions {
            for (k, v) in &d.scores {
                out.insert(format!("{}.{k}", d.tier), *v);
            }
        }
        out
    }

    /// One JSON object with every tier's outcome and scores.
    pub fn scores_json(&self) -> String {
        let per: BTreeMap<&str, serde_json::Value> = self
            .decisions
            .iter()
            .map(|d| {
                (
                    d.tier.as_str(),
                    serde_json::json!({
                        "outcome": d.outcome,
                        "gate": d.gate_passed,
                        "scores": d.scores,
                    }),
                )
            })
            .collect();
        serde_json::to_string(&per).expect("scores serialise")
    }
}

/// Evaluate the enabled tiers in lattice order; the first commit wins, then
/// the guard may demote an L0 commit. Undecided pairs get an IMPOSSIBLE code.
pub fn run_cascade(a: &Analysis, p: Pair) -> CascadeVerdict {
    let cfg = &a.config;
    let mut decisions: Vec<TierDecision> = Vec::new();
    let mut committed: Option<(Tier, Direction)> = None;
    for t in Tier::ALL {
        if !cfg.tier_enabled(t) {
            continue;
        }
        let d = tier_decide(t, a, p);
        let dir = d.outcome.direction();
        decisions.push(d);
        if let Some(dir) = dir {
            committed = Some((t, dir));
            break;
        }
    }
    let mut demoted = None;
    if let Some((Tier::L0, dir)) = committed {
        if cfg.guard_enabled {
            for t in GUARD_TIERS {
                if !cfg.tier_enabled(t) {
                    continue;
                }
                let d = tier_decide(t, a, p);
                let against = d.outcome.direction() == Some(dir.flip());
                decisions.push(d);
                if against && demoted.is_none() {
                    demoted = Some((dir, t));
                }
            }
        }
    }
    let (final_, certificate, committed_by) = match (committed, demoted) {
        (Some(_), Some(_)) => (
            Final::Impossible,
            CertificateCode::ImpossibleL0DisagreesWithHighTier,
            None,
        ),
        (Some((t, dir)), None) => (
            match dir {
                Direction::Fwd => Final::Fwd,
                Direction::Bwd => Final::Bwd,
            },
            CertificateCode::ResolvedDecisive,
            Some(t),
        ),
        (None, _) => {
            let code = classify_impossible(a, p, &decisions);
            (Final::Impossible, code, None)
        }
    };
    CascadeVerdict {
        pair: p,
        decisions,
        final_,
        certificate,
        committed_by,
        demoted,
    }
}

fn is_binary(m: &VariableMeta) -> bool {
    m.cardinality == 2
}

fn is_count(m: &VariableMeta, x: &[f64]) -> bool {
    if !m.is_integer_valued || m.cardinality > COUNT_MAX_SUPPORT || x.iter().any(|v| *v < 0.0) {
        return false;
    }
    let mu = crate::stats::util::mean(x);
    mu > 0.0 && crate::stats::util::variance(x) / mu > COUNT_DISPERSION
}

/// Regime detectors on metadata alone, in precedence order.
pub fn regime_code(a: &Analysis, p: Pair) -> Option<CertificateCode> {
    let (mx, my) = (a.data.meta(p.0), a.data.meta(p.1));
    if mx.flagged_circular || my.flagged_circular {
        return Some(CertificateCode::ImpossibleCircular);
    }
    let continuous = |m: &VariableMeta| !m.is_integer_valued || m.cardinality > HIGH_CARDINALITY;
    if (is_binary(mx) && continuous(my)) || (is_binary(my) && continuous(mx)) {
        return Some(CertificateCode::ImpossibleBinaryContinuous);
    }
    if is_count(mx, a.col(p.0)) || is_count(my, a.col(p.1)) {
        return Some(CertificateCode::ImpossibleCount);
    }
    let high = |m: &VariableMeta| m.is_integer_valued && m.cardinality > HIGH_CARDINALITY;
    if high(mx) || high(my) {
        return Some(CertificateCode::ImpossibleHighCardinalityDiscrete);
    }
    None
}

/// Total map from evidence to an IMPOSSIBLE code. Missing L0/L1/L2 evidence
/// (masked tiers) is computed on demand.
pub fn classify_impossible(a: &Analysis, p: Pair, decisions: &[TierDecision]) -> CertificateCode {
    if let Some(code) = regime_code(a, p) {
        return code;
    }
    let alpha = a.config.alpha_residual;
    let get = |t: Tier| {
        decisions
            .iter()
            .find(|d| d.tier == t)
            .cloned()
            .unwrap_or_else(|| tier_decide(t, a, p))
    };
    let l0 = get(Tier::L0);
    let l1 = get(Tier::L1);
    let ps = |d: &TierDecision| (d.score("p_fwd").unwrap_or(1.0), d.score("p_bwd").unwrap_or(1.0));
    let (l0f, l0b) = ps(&l0);
    let (l1f, l1b) = ps(&l1);
    let gaussian = !non_gaussian(a, p);
    if l0f >= alpha && l0b >= alpha && gaussian {
        return CertificateCode::ImpossibleR1;
    }
    if l0f < alpha && l0b < alpha && l1f < alpha && l1b < alpha {
        return CertificateCode::ImpossibleLatentLikely;
    }
    let d0 = tiers::decisive(l0f, l0b, alpha);
    let d1 = tiers::decisive(l1f, l1b, alpha);
    if let (Some(x), Some(y)) = (d0, d1) {
        if x != y {
            return CertificateCode::ImpossibleRegressorInconsistent;
        }
    }
    if d1.is_some() && l1.outcome == Outcome::Abstain {
        return CertificateCode::ImpossibleNonlinearWeak;
    }
    if !gaussian {
        let l2 = get(Tier::L2);
        if l2.outcome == Outcome::Abstain {
            return CertificateCode::ImpossibleHocAmbiguous;
        }
    }
    CertificateCode::ImpossibleAmbiguous
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Config, Dataset};
    use crate::synth::{generate_regime, Regime, RegimeSpec};

    fn spec(r: Regime, n: usize) -> RegimeSpec {
        RegimeSpec {
            n_pairs: n,
            n_samples: 1500,
            ..RegimeSpec::new(r, 21)
        }
    }

    #[test]
    fn closed_gates_abstain() {
        let cfg = Config::default();
        for ps in generate_regime(&spec(Regime::RDiscrete, 3)) {
            let a = Analysis::new(&ps.data, &cfg);
            let d = tier_decide(Tier::Stein, &a, (0, 1));
            assert!(!d.gate_passed);
            assert_eq!(d.outcome, Outcome::Abstain);
            assert!(d.scores.is_empty());
        }
    }

    #[test]
    fn near_deterministic_pairs_go_to_igci() {
        let cfg = Config::default();
        let mut right = 0;
        for ps in generate_regime(&spec(Regime::RNearDet, 6)) {
            let a = Analysis::new(&ps.data, &cfg);
            let d = tier_decide(Tier::Igci, &a, (0, 1));
            assert!(d.gate_passed);
            if d.outcome.direction() == Some(ps.truth) {
                right += 1;
            } else {
                assert_eq!(d.outcome, Outcome::Abstain);
            }
        }
        assert!(right >= 3);
    }

    #[test]
    fn verdict_invariants_hold() {
        let cfg = Config::default();
        for r in [Regime::RLinGauss, Regime::RLsnm] {
            for ps in generate_regime(&spec(r, 3)) {
                let a = Analysis::new(&ps.data, &cfg);
                let v = run_cascade(&a, (0, 1));
                assert_eq!(
                    v.final_ != Final::Impossible,
                    v.certificate == CertificateCode::ResolvedDecisive
                );
                assert!(v.decisions.iter().all(|d| d.gate_passed || d.outcome == Outcome::Abstain));
                assert_eq!(v, run_cascade(&Analysis::new(&ps.data, &cfg), (0, 1)));
            }
        }
    }

    #[test]
    fn regime_detectors_use_metadata() {
        let n = 400;
        let bin: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let cont: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 3.1).collect();
        let counts: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64 * ((i % 3) as f64)).collect();
        let wide: Vec<f64> = (0..n).map(|i| (i % 97) as f64 - 40.0).collect();
        let d = Dataset::new(
            ["b", "c", "k", "w"].map(String::from).to_vec(),
            vec![bin, cont, counts, wide],
        )
        .unwrap();
        let cfg = Config::default();
        let a = Analysis::new(&d, &cfg);
        assert_eq!(regime_code(&a, (0, 1)), Some(CertificateCode::ImpossibleBinaryContinuous));
        assert_eq!(regime_code(&a, (1, 2)), Some(CertificateCode::ImpossibleCount));
        assert_eq!(regime_code(&a, (1, 3)), Some(CertificateCode::ImpossibleHighCardinalityDiscrete));
        let mut d2 = d.clone();
        d2.flag_circular(&["c".into()]).unwrap();
        let a2 = Analysis::new(&d2, &cfg);
        assert_eq!(regime_code(&a2, (0, 1)), Some(CertificateCode::ImpossibleCircular));
        assert_eq!(regime_code(&a2, (2, 3)), Some(CertificateCode::ImpossibleCount));
    }
}
