//! Heteroscedasticity test: dependence between a predictor and the squared
//! residuals of a nonlinear fit on it.

use super::hsic::{hsic_test, HsicOptions};
use super::regression::{fit_regression, Engine};
use super::util::is_constant;
use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 100;

/// P-values for both directions: `forward` tests `x -> y` (residuals of
/// `y ~ x` against `x`), `backward` tests `y -> x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeteroPValues {
    pub forward: f64,
    pub backward: f64,
}

impl HeteroPValues {
    pub fn min(&self) -> f64 {
        self.forward.min(self.backward)
    }
}

pub fn heteroscedasticity_test(x: &[f64], y: &[f64], opts: &HsicOptions) -> Result<HeteroPValues> {
    if x.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_SAMPLES,
            actual: x.len(),
        });
    }
    Ok(HeteroPValues {
        forward: one_direction(x, y, opts)?,
        backward: one_direction(y, x, opts)?,
    })
}

fn one_direction(cause: &[f64], effect: &[f64], opts: &HsicOptions) -> Result<f64> {
    if is_constant(cause) || is_constant(effect) {
        return Ok(1.0);
    }
    let fit = fit_regression(cause, effect, Engine::Nonlinear)?;
    let sq: Vec<f64> = fit.residuals.iter().map(|r| r * r).collect();
    Ok(hsic_test(cause, &sq, opts)?.p_value)
}
