//! Bivariate regime generators for the per-tier stress test.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::model::{Dataset, Direction};
use crate::stats::util::{mix, std_dev, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    RLinGauss,
    RLsnm,
    RPnl,
    RDiscrete,
    RNearDet,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::RLinGauss,
        Regime::RLsnm,
        Regime::RPnl,
        Regime::RDiscrete,
        Regime::RNearDet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::RLinGauss => "R_LIN_GAUSS",
            Regime::RLsnm => "R_LSNM",
            Regime::RPnl => "R_PNL",
            Regime::RDiscrete => "R_DISCRETE",
            Regime::RNearDet => "R_NEAR_DET",
        }
    }

    fn id(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.trim().to_ascii_uppercase();
        Regime::ALL
            .into_iter()
            .find(|r| r.as_str() == up || r.as_str().trim_start_matches("R_") == up)
            .ok_or_else(|| format!("unknown regime `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub regime: Regime,
    pub n_pairs: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl RegimeSpec {
    pub fn new(regime: Regime, seed: u64) -> Self {
        RegimeSpec {
            regime,
            n_pairs: 40,
            n_samples: 2000,
            seed,
        }
    }
}

/// One generated pair. `truth` orients column 0 against column 1.
#[derive(Debug, Clone)]
pub struct PairSample {
    pub data: Dataset,
    pub truth: Direction,
}

pub fn generate_regime(spec: &RegimeSpec) -> Vec<PairSample> {
    (0..spec.n_pairs)
        .map(|k| {
            let mut rng = stream_rng(mix(&[spec.seed, spec.regime.id(), k as u64]), 0x5247);
            let (cause, effect) = sample_pair(spec.regime, spec.n_samples, &mut rng);
            let truth = if rng.random_bool(0.5) {
                Direction::Fwd
            } else {
                Direction::Bwd
            };
            let cols = match truth {
                Direction::Fwd => vec![cause, effect],
                Direction::Bwd => vec![effect, cause],
            };
            let data = Dataset::new(vec!["x".into(), "y".into()], cols)
                .expect("generated columns are finite and non-constant");
            PairSample { data, truth }
        })
        .collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Smooth nonlinear mechanism drawn from a small family.
fn mechanism(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 {
    let kind = rng.random_range(0..4);
    let a = rng.random_range(0.6..1.4) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let b = rng.random_range(0.5..1.5);
    move |x: f64| match kind {
        0 => a * (1.5 * x).tanh() + 0.3 * x,
        1 => a * x + b * 0.4 * x * x,
        2 => a * (b * x).sin() + 0.5 * x,
        _ => a * x * x * x / 3.0 + b * 0.5 * x,
    }
}

fn sample_pair(regime: Regime, n: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    match regime {
        Regime::RLinGauss => {
            let a = rng.random_range(0.5..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let s = rng.random_range(0.5..1.0);
            let x: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
            let y = x.iter().map(|v| a * v + s * normal(rng)).collect();
            (x, y)
        }
        Regime::RLsnm => {
            let f = mechanism(rng);
            let b = rng.random_range(0.6..1.2) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let s = rng.random_range(0.2..0.4);
            let x: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
            let y = x
                .iter()
                .map(|&v| f(v) + s * (b * v).exp().min(20.0).sqrt() * normal(rng))
                .collect();
            (x, y)
        }
        Regime::RPnl => {
            let f = mechanism(rng);
            let h = rng.random_range(0..3);
            let s = rng.random_range(0.3..0.6);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let inner: Vec<f64> = x.iter().map(|&v| f(v) + s * normal(rng)).collect();
            let sd = std_dev(&inner);
            let y = inner
                .iter()
                .map(|&z| {
                    let z = z / sd;
                    match h {
                        0 => (0.8 * z).exp(),
                        1 => z * z * z + z,
                        _ => z.sinh(),
                    }
                })
                .collect();
            (x, y)
        }
        Regime::RDiscrete => {
            let k = rng.random_range(4..8usize);
            let mut w: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
            let tot: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= tot);
            let map: Vec<i64> = (0..k).map(|_| rng.random_range(0..(2 * k as i64))).collect();
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    let mut u: f64 = rng.random();
                    let mut c = 0;
                    while c + 1 < k && u >= w[c] {
                        u -= w[c];
                        c += 1;
                    }
                    c as f64
                })
                .collect();
            let y = x
                .iter()
                .map(|&v| {
                    let noise = match rng.random_range(0..10) {
                        0..=1 => -1,
                        2..=7 => 0,
                        _ => 1,
                    };
                    (map[v as usize] + noise) as f64
                })
                .collect();
            (x, y)
        }
        Regime::RNearDet => {
            let kind = rng.random_range(0..4);
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let f = move |v: f64| match kind {
                0 => v * v * v,
                1 => (2.0 * v).exp(),
                2 => v.sqrt(),
                _ => 1.0 / (1.0 + (-6.0 * (v - 0.5)).exp()),
            };
            let fx: Vec<f64> = x.iter().map(|&v| f(v)).collect();
            let s = 1e-3 * std_dev(&fx);
            let y = fx.iter().map(|v| v + s * normal(rng)).collect();
            (x, y)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::shapiro_wilk_p;

    #[test]
    fn zero_pairs_is_empty() {
        let spec = RegimeSpec {
            n_pairs: 0,
            ..RegimeSpec::new(Regime::RPnl, 1)
        };
        assert!(generate_regime(&spec).is_empty());
    }

    #[test]
    fn direction_is_balanced() {
        for r in Regime::ALL {
            let spec = RegimeSpec {
                n_samples: 50,
                ..RegimeSpec::new(r, 3)
            };
            let pairs = generate_regime(&spec);
            let fwd = pairs.iter().filter(|p| p.truth == Direction::Fwd).count() as f64 / 40.0;
            assert!((0.3..=0.7).contains(&fwd), "{r}: {fwd}");
        }
    }

    #[test]
    fn lin_gauss_marginals_look_gaussian() {
        let spec = RegimeSpec {
            n_samples: 1000,
            ..RegimeSpec::new(Regime::RLinGauss, 5)
        };
        let pairs = generate_regime(&spec);
        let mut accepted = 0;
        for p in &pairs {
            for v in 0..2 {
                if shapiro_wilk_p(p.data.column(v), 0).unwrap() >= 0.05 {
                    accepted += 1;
                }
            }
        }
        assert!(accepted as f64 / 80.0 >= 0.9, "{accepted}/80");
    }

    #[test]
    fn discrete_regime_is_integer_valued() {
        let spec = RegimeSpec {
            n_pairs: 5,
            n_samples: 300,
            ..RegimeSpec::new(Regime::RDiscrete, 2)
        };
        for p in generate_regime(&spec) {
            assert!(p.data.meta(0).is_integer_valued && p.data.meta(1).is_integer_valued);
        }
    }

    #[test]
    fn same_seed_same_pairs() {
        let spec = RegimeSpec::new(Regime::RLsnm, 9);
        let a = generate_regime(&RegimeSpec { n_pairs: 3, n_samples: 100, ..spec });
        let b = generate_regime(&RegimeSpec { n_pairs: 3, n_samples: 100, ..spec });
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.data.column(1), q.data.column(1));
            assert_eq!(p.truth, q.truth);
        }
    }
}
