//! Direction scores of the eight cascade tiers.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::analysis::{Analysis, TAG_TIER};
use crate::model::{Direction, Pair, Tier};
use crate::stats::util::{ranks, standardize, stream_rng, variance};
use crate::stats::{differential_entropy, fit_multi, fit_regression, Engine};

/// Evaluation points used by the score tier.
const STEIN_EVAL_POINTS: usize = 600;
/// Kernel centres used by the score tier.
const STEIN_KDE_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Fwd,
    Bwd,
    Abstain,
}

impl Outcome {
    pub fn direction(self) -> Option<Direction> {
        match self {
            Outcome::Fwd => Some(Direction::Fwd),
            Outcome::Bwd => Some(Direction::Bwd),
            Outcome::Abstain => None,
        }
    }

    fn from_direction(d: Option<Direction>) -> Self {
        match d {
            Some(Direction::Fwd) => Outcome::Fwd,
            Some(Direction::Bwd) => Outcome::Bwd,
            None => Outcome::Abstain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierDecision {
    pub tier: Tier,
    pub outcome: Outcome,
    pub gate_passed: bool,
    pub scores: BTreeMap<String, f64>,
}

impl TierDecision {
    fn abstain(tier: Tier, gate_passed: bool) -> Self {
        TierDecision {
            tier,
            outcome: Outcome::Abstain,
            gate_passed,
            scores: BTreeMap::new(),
        }
    }

    pub fn score(&self, name: &str) -> Option<f64> {
        self.scores.get(name).copied()
    }
}

/// Either marginal rejects Shapiro-Wilk Gaussianity.
pub fn non_gaussian(a: &Analysis, p: Pair) -> bool {
    a.shapiro(p.0).min(a.shapiro(p.1)) < a.config.gauss_gate_p
}

/// Precondition of `tier` on pair `p`.
pub fn gate(tier: Tier, a: &Analysis, p: Pair) -> bool {
    match tier {
        Tier::L0 | Tier::L1 | Tier::L2 => true,
        Tier::Igci | Tier::Mdl | Tier::Peit => non_gaussian(a, p),
        Tier::Stein => {
            non_gaussian(a, p)
                && !a.data.meta(p.0).is_integer_valued
                && !a.data.meta(p.1).is_integer_valued
        }
        Tier::Lsnm => a.hetero(p).min() < a.config.hetero_gate_p,
    }
}

/// Gate, then score. A closed gate abstains without computing anything.
pub fn tier_decide(tier: Tier, a: &Analysis, p: Pair) -> TierDecision {
    if !gate(tier, a, p) {
        return TierDecision::abstain(tier, false);
    }
    let (outcome, scores) = match tier {
        Tier::L0 => anm(a, p, Engine::Linear, 0.0),
        Tier::L1 => anm(a, p, Engine::Nonlinear, a.config.thresholds.l1_margin),
        Tier::Lsnm => lsnm(a, p),
        Tier::Igci => igci(a.col(p.0), a.col(p.1), a.config.thresholds.igci_delta),
        Tier::Stein => stein(a, p),
        Tier::Mdl => mdl(a, p),
        Tier::L2 => hoc(a.col(p.0), a.col(p.1), a.config.thresholds.l2_threshold),
        Tier::Peit => peit(a, p),
    };
    TierDecision {
        tier,
        outcome,
        gate_passed: true,
        scores,
    }
}

fn scores(items: &[(&str, f64)]) -> BTreeMap<String, f64> {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Which single direction accepts residual independence, if exactly one.
pub(crate) fn decisive(p_fwd: f64, p_bwd: f64, alpha: f64) -> Option<Direction> {
    match (p_fwd >= alpha, p_bwd >= alpha) {
        (true, false) => Some(Direction::Fwd),
        (false, true) => Some(Direction::Bwd),
        _ => None,
    }
}

/// Additive-noise rule. `margin` is the p-value the accepted direction must
/// reach in addition to `alpha_residual`.
fn anm(a: &Analysis, p: Pair, engine: Engine, margin: f64) -> (Outcome, BTreeMap<String, f64>) {
    let pf = a.anm_p(p.0, p.1, engine);
    let pb = a.anm_p(p.1, p.0, engine);
    let d = decisive(pf, pb, a.config.alpha_residual);
    let strong = d.filter(|_| pf.max(pb) >= margin);
    let sc = scores(&[
        ("p_fwd", pf),
        ("p_bwd", pb),
        ("decisive", d.is_some() as u8 as f64),
    ]);
    (Outcome::from_direction(strong), sc)
}

/// Residual of `y` on `x` divided by a fitted local scale.
fn standardized_residual(x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    let r = fit_regression(x, y, Engine::Nonlinear).ok()?.residuals;
    let floor = 1e-12 * variance(&r).max(1e-300);
    let log_sq: Vec<f64> = r.iter().map(|v| (v * v + floor).ln()).collect();
    let scale = fit_regression(x, &log_sq, Engine::Nonlinear).ok()?;
    // E[log e^2] for Gaussian e is -1.27; the offset cancels in HSIC anyway.
    Some(
        r.iter()
            .zip(&scale.fitted)
            .map(|(v, l)| v / (0.5 * l).exp())
            .collect(),
    )
}

fn lsnm(a: &Analysis, p: Pair) -> (Outcome, BTreeMap<String, f64>) {
    let (x, y) = (a.col(p.0), a.col(p.1));
    let th = &a.config.thresholds;
    let (Some(ey), Some(ex)) = (standardized_residual(x, y), standardized_residual(y, x)) else {
        return (Outcome::Abstain, BTreeMap::new());
    };
    let tag = |d: u64| [TAG_TIER, 3, d, p.0 as u64, p.1 as u64];
    let pf = a.hsic_p(x, &ey, &tag(0));
    let pb = a.hsic_p(y, &ex, &tag(1));
    let ratio_ok = |hi: f64, lo: f64| hi >= th.lsnm_accept_p && hi >= th.lsnm_ratio * lo.max(1e-300);
    let out = if ratio_ok(pf, pb) {
        Outcome::Fwd
    } else if ratio_ok(pb, pf) {
        Outcome::Bwd
    } else {
        Outcome::Abstain
    };
    let h = a.hetero(p);
    (
        out,
        scores(&[
            ("p_fwd", pf),
            ("p_bwd", pb),
            ("hetero_fwd", h.forward),
            ("hetero_bwd", h.backward),
        ]),
    )
}

/// Slope-based IGCI score `mean log |dy/dx|` along sorted `x`.
pub fn igci_slope(x: &[f64], y: &[f64]) -> f64 {
    let order = crate::stats::util::argsort(x);
    let mut acc = 0.0;
    let mut m = 0usize;
    for w in order.windows(2) {
        let dx = x[w[1]] - x[w[0]];
        let dy = y[w[1]] - y[w[0]];
        if dx != 0.0 && dy != 0.0 {
            acc += (dy.abs() / dx).ln();
            m += 1;
        }
    }
    if m == 0 {
        0.0
    } else {
        acc / m as f64
    }
}

/// IGCI against the Gaussian reference measure (standardised marginals).
/// Rank-uniform marginals would erase the signal for monotone mechanisms,
/// and min-max scaling lets a few extreme points set the score on
/// Gaussian data.
pub fn igci(x: &[f64], y: &[f64], delta: f64) -> (Outcome, BTreeMap<String, f64>) {
    let (u, v) = (standardize(x), standardize(y));
    let c_xy = igci_slope(&u, &v);
    let c_yx = igci_slope(&v, &u);
    let d = c_xy - c_yx;
    let out = if d < -delta {
        Outcome::Fwd
    } else if d > delta {
        Outcome::Bwd
    } else {
        Outcome::Abstain
    };
    (out, scores(&[("c_fwd", c_xy), ("c_bwd", c_yx), ("delta", d)]))
}

/// Diagonal Hessian of the log of a Gaussian KDE, at evaluation points.
fn kde_log_hessian(x: &[f64], y: &[f64], eval: &[usize], centres: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let m = centres.len() as f64;
    let h = m.powf(-1.0 / 6.0);
    let h2 = h * h;
    let g = -0.5 / h2;
    let mut hxx = Vec::with_capacity(eval.len());
    let mut hyy = Vec::with_capacity(eval.len());
    for &i in eval {
        let (xi, yi) = (x[i], y[i]);
        let (mut s0, mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &j in centres {
            let dx = x[j] - xi;
            let dy = y[j] - yi;
            let w = (g * (dx * dx + dy * dy)).exp();
            s0 += w;
            sx += w * dx;
            sy += w * dy;
            sxx += w * dx * dx;
            syy += w * dy * dy;
        }
        let gx = sx / (h2 * s0);
        let gy = sy / (h2 * s0);
        hxx.push(sxx / (h2 * h2 * s0) - 1.0 / h2 - gx * gx);
        hyy.push(syy / (h2 * h2 * s0) - 1.0 / h2 - gy * gy);
    }
    (hxx, hyy)
}

fn strided(n: usize, k: usize) -> Vec<usize> {
    let step = n.div_ceil(k).max(1);
    (0..n).step_by(step).collect()
}

/// Share of the variation of `h` that a smooth function of `cond` leaves
/// unexplained, relative to the second moment of `h`.
fn unexplained(cond: &[f64], h: &[f64]) -> f64 {
    let Ok(fit) = fit_regression(cond, h, Engine::Nonlinear) else {
        return 1.0;
    };
    let num = fit.residuals.iter().map(|r| r * r).sum::<f64>();
    let den = h.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    num / den
}

/// Score-based tier. Under `x -> y` with Gaussian (possibly heteroscedastic)
/// noise, the second derivative of `log p(x, y)` in `y` depends on `x`
/// alone; the reverse statement fails for the cause. Both diagonal Hessian
/// entries come from a Gaussian KDE of the standardised pair.
fn stein(a: &Analysis, p: Pair) -> (Outcome, BTreeMap<String, f64>) {
    let x = standardize(a.col(p.0));
    let y = standardize(a.col(p.1));
    let n = x.len();
    let eval = strided(n, STEIN_EVAL_POINTS);
    let centres = strided(n, STEIN_KDE_POINTS);
    let (hxx, hyy) = kde_log_hessian(&x, &y, &eval, &centres);
    let xe: Vec<f64> = eval.iter().map(|&i| x[i]).collect();
    let ye: Vec<f64> = eval.iter().map(|&i| y[i]).collect();
    let d_fwd = unexplained(&xe, &hyy);
    let d_bwd = unexplained(&ye, &hxx);
    let gap = (d_fwd - d_bwd).abs() / d_fwd.max(d_bwd).max(f64::MIN_POSITIVE);
    let out = if gap < a.config.thresholds.stein_gap {
        Outcome::Abstain
    } else if d_fwd < d_bwd {
        Outcome::Fwd
    } else {
        Outcome::Bwd
    };
    (out, scores(&[("d_fwd", d_fwd), ("d_bwd", d_bwd), ("gap", gap)]))
}

/// Column plus deterministic uniform dither when integer valued, so the
/// nearest-neighbour entropy estimator sees a continuous sample.
fn dithered(a: &Analysis, v: usize, values: &[f64], salt: u64) -> Vec<f64> {
    if !a.data.meta(v).is_integer_valued {
        return values.to_vec();
    }
    let mut rng = stream_rng(a.seed(&[TAG_TIER, 6, v as u64, salt]), 0x4449);
    values.iter().map(|x| x + rng.random::<f64>() - 0.5).collect()
}

/// Two-part codelength in nats per sample: cause entropy, residual entropy,
/// and `0.5 ln N` per fitted parameter.
fn codelength(a: &Analysis, cause: usize, effect: usize) -> Option<f64> {
    let n = a.data.n_samples() as f64;
    let (r, df) = a.residual_df(effect, &[cause], Engine::Nonlinear);
    let hc = differential_entropy(&dithered(a, cause, a.col(cause), 0)).ok()?;
    let hr = differential_entropy(&dithered(a, effect, &r, 1)).ok()?;
    if !hc.is_finite() || !hr.is_finite() {
        return None;
    }
    Some(hc + hr + 0.5 * n.ln() * df / n)
}

fn mdl(a: &Analysis, p: Pair) -> (Outcome, BTreeMap<String, f64>) {
    let (Some(lf), Some(lb)) = (codelength(a, p.0, p.1), codelength(a, p.1, p.0)) else {
        return (Outcome::Abstain, BTreeMap::new());
    };
    let margin = a.config.thresholds.mdl_margin;
    let out = if lf + margin < lb {
        Outcome::Fwd
    } else if lb + margin < lf {
        Outcome::Bwd
    } else {
        Outcome::Abstain
    };
    (out, scores(&[("len_fwd", lf), ("len_bwd", lb)]))
}

/// Pairwise fourth-cumulant LiNGAM measure; positive favours `x -> y`.
pub fn hoc_statistic(x: &[f64], y: &[f64]) -> f64 {
    let x = standardize(x);
    let y = standardize(y);
    let n = x.len() as f64;
    let rho = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n;
    let kurt = |v: &[f64]| v.iter().map(|a| a.powi(4)).sum::<f64>() / n - 3.0;
    let asym = x
        .iter()
        .zip(&y)
        .map(|(a, b)| a * a * a * b - a * b * b * b)
        .sum::<f64>()
        / n;
    let sign = (kurt(&x) + kurt(&y)).signum();
    sign * rho * asym
}

fn hoc(x: &[f64], y: &[f64], threshold: f64) -> (Outcome, BTreeMap<String, f64>) {
    let r = hoc_statistic(x, y);
    let out = if r > threshold {
        Outcome::Fwd
    } else if r < -threshold {
        Outcome::Bwd
    } else {
        Outcome::Abstain
    };
    (out, scores(&[("r", r)]))
}

/// Map through ranks onto standard normal quantiles.
pub fn rank_gaussianize(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    ranks(x)
        .into_iter()
        .map(|r| std.inverse_cdf(r / (n + 1.0)))
        .collect()
}

/// Entropy-inversion tier: Gaussianise both margins through their ranks,
/// fit a nonlinear additive-noise model each way, and prefer the direction
/// whose residual carries less entropy.
fn peit(a: &Analysis, p: Pair) -> (Outcome, BTreeMap<String, f64>) {
    let x = rank_gaussianize(a.col(p.0));
    let y = rank_gaussianize(a.col(p.1));
    let res = |c: &[f64], e: &[f64]| -> Option<f64> {
        let r = fit_multi(&[c], e, Engine::Nonlinear).ok()?.residuals;
        differential_entropy(&r).ok().filter(|h| h.is_finite())
    };
    let (Some(hf), Some(hb)) = (res(&x, &y), res(&y, &x)) else {
        return (Outcome::Abstain, BTreeMap::new());
    };
    let margin = a.config.thresholds.peit_margin;
    let out = if hf + margin < hb {
        Outcome::Fwd
    } else if hb + margin < hf {
        Outcome::Bwd
    } else {
        Outcome::Abstain
    };
    (out, scores(&[("h_fwd", hf), ("h_bwd", hb)]))
}
