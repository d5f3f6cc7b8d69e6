//! Kozachenko-Leonenko nearest-neighbour estimate of differential entropy.

use statrs::function::gamma::digamma;

use super::util::distinct_count;
use crate::error::{Error, Result};

pub const KL_NEIGHBOURS: usize = 3;
pub const MIN_SAMPLES: usize = 100;

/// Differential entropy in nats of a scalar sample, `k = 3`.
///
/// Returns `-inf` when fewer than `k + 1` distinct values exist. Tied points
/// whose k-th neighbour distance is zero borrow the smallest positive
/// distance in the sample.
pub fn differential_entropy(x: &[f64]) -> Result<f64> {
    if x.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_SAMPLES,
            actual: x.len(),
        });
    }
    Ok(kl_entropy(x, KL_NEIGHBOURS))
}

/// Same estimator without the sample-size precondition; used internally
/// on residual streams that are already validated upstream.
pub(crate) fn kl_entropy(x: &[f64], k: usize) -> f64 {
    let n = x.len();
    if n <= k || distinct_count(x) < k + 1 {
        return f64::NEG_INFINITY;
    }
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let mut dists = Vec::with_capacity(n);
    for i in 0..n {
        let (mut l, mut r) = (i as isize - 1, i + 1);
        let mut d = 0.0;
        for _ in 0..k {
            let dl = if l >= 0 { s[i] - s[l as usize] } else { f64::INFINITY };
            let dr = if r < n { s[r] - s[i] } else { f64::INFINITY };
            if dl <= dr {
                d = dl;
                l -= 1;
            } else {
                d = dr;
                r += 1;
            }
        }
        dists.push(d);
    }
    let floor = dists
        .iter()
        .copied()
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    let mean_log = dists.iter().map(|&d| d.max(floor).ln()).sum::<f64>() / nf;
    // Unit ball in one dimension has volume 2.
    digamma(nf) - digamma(k as f64) + std::f64::consts::LN_2 + mean_log
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::util::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn gaussian_closed_form() {
        let mut r = stream_rng(1, 0);
        let x: Vec<f64> = (0..5000).map(|_| r.sample(StandardNormal)).collect();
        let h = differential_entropy(&x).unwrap();
        let truth = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((h - truth).abs() < 0.05, "{h} vs {truth}");
    }

    #[test]
    fn uniform_closed_form() {
        let mut r = stream_rng(2, 0);
        let x: Vec<f64> = (0..5000).map(|_| r.random::<f64>()).collect();
        assert!(differential_entropy(&x).unwrap().abs() < 0.05);
    }

    #[test]
    fn scaling_adds_log_factor() {
        let mut r = stream_rng(3, 0);
        let x: Vec<f64> = (0..5000).map(|_| r.sample(StandardNormal)).collect();
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let d = differential_entropy(&x2).unwrap() - differential_entropy(&x).unwrap();
        assert!((d - std::f64::consts::LN_2).abs() < 0.05);
    }

    #[test]
    fn too_few_distinct_is_negative_infinity() {
        let x: Vec<f64> = (0..200).map(|i| (i % 3) as f64).collect();
        assert_eq!(differential_entropy(&x).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn short_input_errors() {
        assert!(differential_entropy(&[0.0; 10]).is_err());
    }
}
