//! Regression engines shared by the cascade tiers and mediator search.
//!
//! `Linear` is ordinary least squares with an intercept. `Nonlinear` is a
//! deterministic local-linear (tricube LOESS) smoother whose span is chosen
//! by two-fold cross-validation over a fixed grid; with several predictors
//! it becomes an additive model fitted by backfitting, initialised from OLS.

use serde::{Deserialize, Serialize};

use super::util::{argsort, is_constant, mean};
use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 20;

const SPANS: [f64; 6] = [1.0, 0.6, 0.35, 0.2, 0.1, 0.05];
const MIN_WINDOW: usize = 8;
const MAX_KNOTS: usize = 120;
const BACKFIT_SWEEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Engine {
    Linear,
    Nonlinear,
}

/// Piecewise-linear interpolant through local-linear estimates at knots.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalLinear {
    knots_x: Vec<f64>,
    knots_y: Vec<f64>,
    span: f64,
}

impl LocalLinear {
    /// Fraction of the sample in each local window.
    pub fn span(&self) -> f64 {
        self.span
    }

    /// Rough effective degrees of freedom of the smoother.
    pub fn effective_df(&self) -> f64 {
        (2.0 / self.span).min(self.knots_x.len() as f64).max(2.0)
    }

    pub fn predict(&self, v: f64) -> f64 {
        let kx = &self.knots_x;
        let ky = &self.knots_y;
        if v <= kx[0] {
            return ky[0];
        }
        let last = kx.len() - 1;
        if v >= kx[last] {
            return ky[last];
        }
        let hi = kx.partition_point(|&k| k < v);
        if kx[hi] == v {
            return ky[hi];
        }
        let lo = hi - 1;
        let t = (v - kx[lo]) / (kx[hi] - kx[lo]);
        ky[lo] + t * (ky[hi] - ky[lo])
    }

    fn shift(&mut self, by: f64) {
        for v in &mut self.knots_y {
            *v += by;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    Constant(f64),
    Linear { intercept: f64, coef: Vec<f64> },
    Smooth(LocalLinear),
    Additive { intercept: f64, parts: Vec<Option<LocalLinear>> },
}

impl Predictor {
    /// Rough count of fitted parameters, intercept included.
    pub fn effective_df(&self) -> f64 {
        match self {
            Predictor::Constant(_) => 1.0,
            Predictor::Linear { coef, .. } => 1.0 + coef.iter().filter(|c| **c != 0.0).count() as f64,
            Predictor::Smooth(s) => s.effective_df(),
            Predictor::Additive { parts, .. } => {
                1.0 + parts.iter().flatten().map(|s| s.effective_df() - 1.0).sum::<f64>()
            }
        }
    }

    /// Prediction for one row of predictor values.
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            Predictor::Constant(c) => *c,
            Predictor::Linear { intercept, coef } => {
                intercept + coef.iter().zip(row).map(|(b, v)| b * v).sum::<f64>()
            }
            Predictor::Smooth(s) => s.predict(row[0]),
            Predictor::Additive { intercept, parts } => {
                intercept
                    + parts
                        .iter()
                        .zip(row)
                        .map(|(p, &v)| p.as_ref().map_or(0.0, |s| s.predict(v)))
                        .sum::<f64>()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub predictor: Predictor,
    pub fitted: Vec<f64>,
    /// `target - fitted`, elementwise.
    pub residuals: Vec<f64>,
    pub engine: Engine,
    /// Every predictor was constant; residuals are `y - mean(y)`.
    pub singular: bool,
}

/// Regress `y` on a single predictor.
pub fn fit_regression(x: &[f64], y: &[f64], engine: Engine) -> Result<RegressionFit> {
    fit_multi(&[x], y, engine)
}

/// Regress `y` on any number of predictor columns.
pub fn fit_multi(xs: &[&[f64]], y: &[f64], engine: Engine) -> Result<RegressionFit> {
    let n = y.len();
    for x in xs {
        if x.len() != n {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: n,
            });
        }
    }
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_SAMPLES,
            actual: n,
        });
    }
    let active: Vec<usize> = (0..xs.len()).filter(|&j| !is_constant(xs[j])).collect();
    if active.is_empty() {
        let m = mean(y);
        return Ok(finish(Predictor::Constant(m), vec![m; n], y, engine, true));
    }
    let (predictor, fitted) = match engine {
        Engine::Linear => {
            let (intercept, coef) = ols(xs, &active, y);
            let fitted = (0..n)
                .map(|i| intercept + active.iter().map(|&j| coef[j] * xs[j][i]).sum::<f64>())
                .collect();
            (Predictor::Linear { intercept, coef }, fitted)
        }
        Engine::Nonlinear if xs.len() == 1 => {
            let span = choose_span(xs[0], y);
            let s = local_linear(xs[0], y, span);
            let fitted = xs[0].iter().map(|&v| s.predict(v)).collect();
            (Predictor::Smooth(s), fitted)
        }
        Engine::Nonlinear => additive(xs, &active, y),
    };
    Ok(finish(predictor, fitted, y, engine, false))
}

fn finish(predictor: Predictor, fitted: Vec<f64>, y: &[f64], engine: Engine, singular: bool) -> RegressionFit {
    let residuals = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    RegressionFit {
        predictor,
        fitted,
        residuals,
        engine,
        singular,
    }
}

/// Least squares on the active (non-constant) columns; inactive columns get
/// a zero coefficient. Collinear columns are dropped during elimination.
fn ols(xs: &[&[f64]], active: &[usize], y: &[f64]) -> (f64, Vec<f64>) {
    let d = active.len();
    let means: Vec<f64> = active.iter().map(|&j| mean(xs[j])).collect();
    let my = mean(y);
    let mut a = vec![vec![0.0; d + 1]; d];
    for (r, &jr) in active.iter().enumerate() {
        for (c, &jc) in active.iter().enumerate().skip(r) {
            let s: f64 = xs[jr]
                .iter()
                .zip(xs[jc])
                .map(|(u, v)| (u - means[r]) * (v - means[c]))
                .sum();
            a[r][c] = s;
            a[c][r] = s;
        }
        a[r][d] = xs[jr].iter().zip(y).map(|(u, v)| (u - means[r]) * (v - my)).sum();
    }
    let beta = solve(a);
    let mut coef = vec![0.0; xs.len()];
    let mut intercept = my;
    for (k, &j) in active.iter().enumerate() {
        coef[j] = beta[k];
        intercept -= beta[k] * means[k];
    }
    (intercept, coef)
}

/// Gaussian elimination with partial pivoting on an augmented system;
/// near-zero pivots zero out the corresponding unknown.
fn solve(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let d = a.len();
    let scale = (0..d).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(1e-300);
    let mut pivot_ok = vec![true; d];
    for col in 0..d {
        let p = (col..d)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, p);
        if a[col][col].abs() <= 1e-10 * scale {
            pivot_ok[col] = false;
            continue;
        }
        let pivot = a[col].clone();
        for (r, row) in a.iter_mut().enumerate().take(d) {
            let f = row[col] / pivot[col];
            if r != col && f != 0.0 {
                for (x, p) in row[col..=d].iter_mut().zip(&pivot[col..=d]) {
                    *x -= f * p;
                }
            }
        }
    }
    (0..d)
        .map(|i| if pivot_ok[i] { a[i][d] / a[i][i] } else { 0.0 })
        .collect()
}

struct Sorted {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Sorted {
    fn new(x: &[f64], y: &[f64]) -> Self {
        let order = argsort(x);
        Sorted {
            x: order.iter().map(|&i| x[i]).collect(),
            y: order.iter().map(|&i| y[i]).collect(),
        }
    }

    fn window_size(&self, span: f64) -> usize {
        let n = self.x.len();
        ((span * n as f64).ceil() as usize).clamp(MIN_WINDOW.min(n), n)
    }

    /// Local-linear estimate at `t` using the `m` nearest points (extended
    /// across ties at either end).
    fn estimate(&self, t: f64, m: usize) -> f64 {
        let x = &self.x;
        let n = x.len();
        let pos = x.partition_point(|&v| v < t);
        let mut lo = pos.saturating_sub(m / 2).min(n - m);
        while lo + m < n && (t - x[lo]) > (x[lo + m] - t) {
            lo += 1;
        }
        while lo > 0 && (x[lo + m - 1] - t) > (t - x[lo - 1]) {
            lo -= 1;
        }
        let mut hi = lo + m - 1;
        while lo > 0 && x[lo - 1] == x[lo] {
            lo -= 1;
        }
        while hi + 1 < n && x[hi + 1] == x[hi] {
            hi += 1;
        }
        let h = (t - x[lo]).max(x[hi] - t);
        let ys = &self.y[lo..=hi];
        if h <= 0.0 {
            return mean(ys);
        }
        let h = h * (1.0 + 1e-6);
        let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (xi, yi) in x[lo..=hi].iter().zip(ys) {
            let d = xi - t;
            let u = (d / h).abs();
            let w = (1.0 - u * u * u).powi(3);
            s0 += w;
            s1 += w * d;
            s2 += w * d * d;
            t0 += w * yi;
            t1 += w * d * yi;
        }
        let den = s0 * s2 - s1 * s1;
        if s0 <= 0.0 {
            mean(ys)
        } else if den <= 1e-10 * s0 * s2.max(1e-300) {
            t0 / s0
        } else {
            (s2 * t0 - s1 * t1) / den
        }
    }

    fn fit(&self, span: f64) -> LocalLinear {
        let n = self.x.len();
        let m = self.window_size(span);
        let g = MAX_KNOTS.min(n);
        let mut knots_x: Vec<f64> = (0..g)
            .map(|k| self.x[if g == 1 { 0 } else { k * (n - 1) / (g - 1) }])
            .collect();
        knots_x.dedup();
        let knots_y = knots_x.iter().map(|&t| self.estimate(t, m)).collect();
        LocalLinear {
            knots_x,
            knots_y,
            span,
        }
    }
}

fn local_linear(x: &[f64], y: &[f64], span: f64) -> LocalLinear {
    Sorted::new(x, y).fit(span)
}

/// Two-fold cross-validated span (folds alternate in x order). Ties go to
/// the smoother (larger) span.
fn choose_span(x: &[f64], y: &[f64]) -> f64 {
    let order = argsort(x);
    let fold = |parity: usize| -> (Vec<f64>, Vec<f64>) {
        order
            .iter()
            .enumerate()
            .filter(|(r, _)| r % 2 == parity)
            .map(|(_, &i)| (x[i], y[i]))
            .unzip()
    };
    let (xa, ya) = fold(0);
    let (xb, yb) = fold(1);
    if xa.len() < MIN_WINDOW || xb.len() < MIN_WINDOW {
        return SPANS[0];
    }
    let sa = Sorted::new(&xa, &ya);
    let sb = Sorted::new(&xb, &yb);
    let mut best = (f64::INFINITY, SPANS[0]);
    for &span in &SPANS {
        let fa = sa.fit(span);
        let fb = sb.fit(span);
        let err: f64 = xb.iter().zip(&yb).map(|(&u, &v)| (v - fa.predict(u)).powi(2)).sum::<f64>()
            + xa.iter().zip(&ya).map(|(&u, &v)| (v - fb.predict(u)).powi(2)).sum::<f64>();
        if err < best.0 * (1.0 - 1e-9) {
            best = (err, span);
        }
    }
    best.1
}

fn additive(xs: &[&[f64]], active: &[usize], y: &[f64]) -> (Predictor, Vec<f64>) {
    let n = y.len();
    let intercept = mean(y);
    let (_, coef) = ols(xs, active, y);
    let mut parts_val: Vec<Vec<f64>> = vec![vec![0.0; n]; xs.len()];
    for &j in active {
        let mj = mean(xs[j]);
        parts_val[j] = xs[j].iter().map(|v| coef[j] * (v - mj)).collect();
    }
    let mut parts: Vec<Option<LocalLinear>> = vec![None; xs.len()];
    let mut spans: Vec<Option<f64>> = vec![None; xs.len()];
    for _ in 0..BACKFIT_SWEEPS {
        for &j in active {
            let partial: Vec<f64> = (0..n)
                .map(|i| {
                    y[i] - intercept
                        - active
                            .iter()
                            .filter(|&&k| k != j)
                            .map(|&k| parts_val[k][i])
                            .sum::<f64>()
                })
                .collect();
            let span = *spans[j].get_or_insert_with(|| choose_span(xs[j], &partial));
            let mut s = local_linear(xs[j], &partial, span);
            let vals: Vec<f64> = xs[j].iter().map(|&v| s.predict(v)).collect();
            let c = mean(&vals);
            s.shift(-c);
            parts_val[j] = vals.into_iter().map(|v| v - c).collect();
            parts[j] = Some(s);
        }
    }
    let fitted = (0..n)
        .map(|i| intercept + active.iter().map(|&j| parts_val[j][i]).sum::<f64>())
        .collect();
    (Predictor::Additive { intercept, parts }, fitted)
}
