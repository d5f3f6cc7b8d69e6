use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ids::Tier;
use crate::model::dataset::RECOMMENDED_MIN_SAMPLES;
use crate::stats::PValueMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OracleMode {
    PerEdge,
    MetahubChildren,
    /// Meta-hub and node-children first, per-edge questions for whatever
    /// the children answers left open.
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValueStrategy {
    /// Worst case over the two answers.
    Min,
    /// Mean of the two answers.
    Expected,
}

/// Decision thresholds of the cascade tiers. Calibrated on the synthetic
/// regimes and then frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TierThresholds {
    /// L1 commits only when the accepted direction's p-value reaches this.
    pub l1_margin: f64,
    /// L_LSNM: minimum ratio between the two standardised-residual p-values.
    pub lsnm_ratio: f64,
    /// L_LSNM: the accepted direction must reach this p-value.
    pub lsnm_accept_p: f64,
    /// L_IGCI: minimum |C_xy - C_yx|.
    pub igci_delta: f64,
    /// L_STEIN: minimum relative gap between the two score-residual
    /// dependence measures.
    pub stein_gap: f64,
    /// L_MDL: minimum codelength difference, in nats per sample.
    pub mdl_margin: f64,
    /// L2: minimum |R| of the cumulant statistic.
    pub l2_threshold: f64,
    /// L_PEIT: minimum residual-entropy difference, in nats.
    pub peit_margin: f64,
}

impl Default for TierThresholds {
    fn default() -> Self {
        TierThresholds {
            l1_margin: 0.25,
            lsnm_ratio: 10.0,
            lsnm_accept_p: 0.05,
            igci_delta: 0.15,
            stein_gap: 0.3,
            mdl_margin: 0.02,
            l2_threshold: 0.05,
            peit_margin: 0.05,
        }
    }
}

/// Missing-edge recovery (off unless enabled).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryConfig {
    pub enabled: bool,
    /// Marginal-HSIC filter: keep pairs whose marginal p is below this.
    pub marginal_p: Option<f64>,
    pub degree_priority: bool,
    pub reachability: bool,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            enabled: false,
            marginal_p: Some(0.2),
            degree_priority: true,
            reachability: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub alpha_skeleton: f64,
    pub alpha_residual: f64,
    /// Defaults to `alpha_skeleton`.
    pub fdr_level: Option<f64>,
    pub gauss_gate_p: f64,
    pub hetero_gate_p: f64,
    pub confirm_ratio: f64,
    /// Off only for closure checks against brute force.
    pub confirm_gate: bool,
    pub permutations: usize,
    pub pvalue_method: PValueMethod,
    pub seed: u64,
    pub tier_mask: BTreeSet<Tier>,
    pub guard_enabled: bool,
    pub cascade_enabled: bool,
    pub oracle_mode: OracleMode,
    pub propagation_enabled: bool,
    /// Re-run the safe tiers, not just L0/L1, during the parent-conditioned
    /// re-audit.
    pub reaudit_safe_tiers: bool,
    pub mediator_max_tier: u8,
    pub value_strategy: ValueStrategy,
    /// Meta-hub size when no ground truth supplies it.
    pub metahub_k: Option<usize>,
    /// Below this many samples a warning is attached to results.
    pub min_samples: usize,
    pub circular: Vec<String>,
    pub thresholds: TierThresholds,
    pub recovery: RecoveryConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            alpha_skeleton: 0.05,
            alpha_residual: 0.05,
            fdr_level: None,
            gauss_gate_p: 0.05,
            hetero_gate_p: 0.01,
            confirm_ratio: 2.0,
            confirm_gate: true,
            permutations: 500,
            pvalue_method: PValueMethod::GammaApprox,
            seed: 0,
            tier_mask: Tier::ALL.into_iter().collect(),
            guard_enabled: true,
            cascade_enabled: true,
            oracle_mode: OracleMode::PerEdge,
            propagation_enabled: true,
            reaudit_safe_tiers: false,
            mediator_max_tier: 3,
            value_strategy: ValueStrategy::Min,
            metahub_k: None,
            min_samples: RECOMMENDED_MIN_SAMPLES,
            circular: Vec::new(),
            thresholds: TierThresholds::default(),
            recovery: RecoveryConfig::default(),
        }
    }
}

impl Config {
    pub fn fdr_level(&self) -> f64 {
        self.fdr_level.unwrap_or(self.alpha_skeleton)
    }

    pub fn tier_enabled(&self, t: Tier) -> bool {
        self.tier_mask.contains(&t)
    }

    pub fn with_tiers(mut self, tiers: &[Tier]) -> Self {
        self.tier_mask = tiers.iter().copied().collect();
        self
    }

    pub fn hsic_options(&self, seed: u64) -> crate::stats::HsicOptions {
        crate::stats::HsicOptions {
            method: self.pvalue_method,
            permutations: self.permutations,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("alpha_skeleton", self.alpha_skeleton),
            ("alpha_residual", self.alpha_residual),
            ("fdr_level", self.fdr_level()),
            ("gauss_gate_p", self.gauss_gate_p),
            ("hetero_gate_p", self.hetero_gate_p),
        ];
        for (name, p) in probs {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} = {p} is not in (0, 1)")));
            }
        }
        if let Some(p) = self.recovery.marginal_p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "recovery.marginal_p = {p} is not in (0, 1]"
                )));
            }
        }
        if self.permutations < 200 {
            return Err(Error::InvalidConfig(format!(
                "permutations = {} is below 200",
                self.permutations
            )));
        }
        if !(self.confirm_ratio.is_finite() && self.confirm_ratio > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "confirm_ratio = {} must be positive",
                self.confirm_ratio
            )));
        }
        if !(1..=3).contains(&self.mediator_max_tier) {
            return Err(Error::InvalidConfig(format!(
                "mediator_max_tier = {} is not 1, 2 or 3",
                self.mediator_max_tier
            )));
        }
        if self.metahub_k == Some(0) && self.oracle_mode != OracleMode::PerEdge {
            return Err(Error::InvalidConfig("metahub_k must be positive".into()));
        }
        Ok(())
    }

    /// Load a JSON config file; missing fields take defaults.
    pub fn from_json_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = Config::default();
        c.validate().unwrap();
        assert_eq!(c.fdr_level(), 0.05);
        assert_eq!(c.tier_mask.len(), 8);
    }

    #[test]
    fn violations_are_reported() {
        let bad = [
            Config { alpha_skeleton: 1.0, ..Config::default() },
            Config { hetero_gate_p: 0.0, ..Config::default() },
            Config { permutations: 199, ..Config::default() },
            Config { mediator_max_tier: 4, ..Config::default() },
            Config { fdr_level: Some(-0.1), ..Config::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: Config = serde_json::from_str(
            r#"{"seed": 7, "tier_mask": ["L0", "L_STEIN"], "oracle_mode": "HYBRID",
                "thresholds": {"l1_margin": 0.3}}"#,
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert!(c.tier_enabled(Tier::Stein) && !c.tier_enabled(Tier::L1));
        assert_eq!(c.oracle_mode, OracleMode::Hybrid);
        assert_eq!(c.thresholds.l1_margin, 0.3);
        assert_eq!(c.thresholds.l2_threshold, TierThresholds::default().l2_threshold);
    }
}
