//! Shapiro-Wilk normality test, Royston's approximation (algorithm AS R94).

use rand::seq::index::sample;
use statrs::distribution::{ContinuousCDF, Normal};

use super::util::stream_rng;
use crate::error::{Error, Result};

/// Samples above this size are tested on a seeded subsample of this size.
pub const MAX_SAMPLES: usize = 5000;
pub const MIN_SAMPLES: usize = 3;

const SMALL: f64 = 1e-19;
const G: [f64; 2] = [-2.273, 0.459];
const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p_value: f64,
    /// Constant input; reported as `p = 0` (maximally non-Gaussian).
    pub degenerate: bool,
}

/// W statistic and p-value. Constant input yields `p = 0` by convention.
pub fn shapiro_wilk(x: &[f64], seed: u64) -> Result<ShapiroWilk> {
    if x.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_SAMPLES,
            actual: x.len(),
        });
    }
    let mut xs: Vec<f64> = if x.len() > MAX_SAMPLES {
        let mut rng = stream_rng(seed, 0x5357);
        sample(&mut rng, x.len(), MAX_SAMPLES)
            .into_iter()
            .map(|i| x[i])
            .collect()
    } else {
        x.to_vec()
    };
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    let range = xs[n - 1] - xs[0];
    if range < SMALL {
        return Ok(ShapiroWilk {
            w: 1.0,
            p_value: 0.0,
            degenerate: true,
        });
    }
    let a = coefficients(n);
    let w = w_statistic(&xs, &a);
    Ok(ShapiroWilk {
        w,
        p_value: p_value(w, n),
        degenerate: false,
    })
}

/// Convenience wrapper returning only the p-value.
pub fn shapiro_wilk_p(x: &[f64], seed: u64) -> Result<f64> {
    shapiro_wilk(x, seed).map(|r| r.p_value)
}

/// Positive coefficients for the upper half of the order statistics;
/// `a[0]` multiplies `x_(n) - x_(1)`.
fn coefficients(n: usize) -> Vec<f64> {
    let n2 = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let an = n as f64;
    let an25 = an + 0.25;
    let mut m: Vec<f64> = (1..=n2)
        .map(|i| std.inverse_cdf((i as f64 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let (first, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
            .sqrt();
        m[1] = a2;
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    m[0] = a1;
    for v in m.iter_mut().skip(first) {
        *v = -*v / fac;
    }
    m
}

fn w_statistic(xs: &[f64], a: &[f64]) -> f64 {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ss: f64 = xs.iter().map(|v| (v - mean) * (v - mean)).sum();
    let mut num = 0.0;
    let mut asq = 0.0;
    for (i, &ai) in a.iter().enumerate() {
        num += ai * (xs[n - 1 - i] - xs[i]);
        asq += 2.0 * ai * ai;
    }
    let w = num * num / (asq * ss);
    w.min(1.0)
}

fn p_value(w: f64, n: usize) -> f64 {
    let an = n as f64;
    if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = std::f64::consts::PI / 3.0;
        return (pi6 * (w.sqrt().asin() - stqr)).max(0.0);
    }
    let w1 = 1.0 - w;
    if w1 <= 0.0 {
        return 1.0;
    }
    let mut y = w1.ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-99;
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (poly(&C5, xx), poly(&C6, xx).exp())
    };
    let z = (y - m) / s;
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    std.sf(z).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from an independent implementation of AS R94
    // (scipy.stats.shapiro) on fixed inputs.
    #[test]
    fn matches_reference_small_sample() {
        let x = [
            2.1, -0.3, 0.8, 1.7, -1.2, 0.4, 3.3, -0.9, 0.05, 1.1, -2.4, 0.7, 0.2, 1.9, -0.6,
            0.9, 2.8, -1.5, 0.35, 1.25,
        ];
        let r = shapiro_wilk(&x, 0).unwrap();
        assert!((r.w - REF_W20).abs() < 1e-5, "w = {}", r.w);
        assert!((r.p_value - REF_P20).abs() < 1e-4, "p = {}", r.p_value);
    }

    #[test]
    fn matches_reference_tiny_sample() {
        let x = [1.0, 2.0, 4.0, 7.0, 11.0, 16.0, 22.0];
        let r = shapiro_wilk(&x, 0).unwrap();
        assert!((r.w - REF_W7).abs() < 1e-5, "w = {}", r.w);
        assert!((r.p_value - REF_P7).abs() < 1e-4, "p = {}", r.p_value);
    }

    #[test]
    fn constant_is_maximally_non_gaussian() {
        let r = shapiro_wilk(&[3.0; 40], 0).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn three_distinct_values_reject() {
        let x: Vec<f64> = (0..300).map(|i| (i % 3) as f64).collect();
        assert!(shapiro_wilk_p(&x, 0).unwrap() < 1e-6);
    }

    const REF_W20: f64 = 0.994_029_997_537_987_4;
    const REF_P20: f64 = 0.999_959_858_169_070_4;
    const REF_W7: f64 = 0.921_578_458_509_334_1;
    const REF_P7: f64 = 0.481_755_467_046_038_17;
}
