//! Memoised statistics over one dataset. Every cascade, propagation and
//! oracle step asks the same few questions many times (a residual of `y` on
//! `x`, a Shapiro-Wilk p of a column); answers are cached by their inputs
//! and seeded from the configuration, so evaluation order never changes a
//! result.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use crate::model::{Config, Dataset, Pair};
use crate::stats::util::mix;
use crate::stats::{
    fit_multi, heteroscedasticity_test, hsic_test, shapiro_wilk_p, Engine, HeteroPValues,
    HsicResult,
};

const TAG_MARGINAL: u64 = 1;
const TAG_ANM: u64 = 2;
const TAG_COND: u64 = 3;
const TAG_HETERO: u64 = 4;
const TAG_SHAPIRO: u64 = 5;
pub(crate) const TAG_TIER: u64 = 6;

type ResidualKey = (usize, Vec<usize>, Engine);

#[derive(Default)]
struct Cache {
    marginal: HashMap<Pair, HsicResult>,
    shapiro: HashMap<usize, f64>,
    residual: HashMap<ResidualKey, (Arc<Vec<f64>>, f64)>,
    anm: HashMap<(usize, usize, Engine), f64>,
    cond: HashMap<(Pair, Vec<usize>), f64>,
    hetero: HashMap<Pair, HeteroPValues>,
    memo: HashMap<Vec<u64>, Option<(bool, f64, f64)>>,
}

pub struct Analysis {
    pub data: Arc<Dataset>,
    pub config: Arc<Config>,
    cache: RefCell<Cache>,
}

impl Analysis {
    pub fn new(data: &Dataset, config: &Config) -> Self {
        Self::shared(Arc::new(data.clone()), Arc::new(config.clone()))
    }

    pub fn shared(data: Arc<Dataset>, config: Arc<Config>) -> Self {
        Analysis {
            data,
            config,
            cache: RefCell::new(Cache::default()),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.data.n_vars()
    }

    pub fn col(&self, v: usize) -> &[f64] {
        self.data.column(v)
    }

    pub(crate) fn seed(&self, parts: &[u64]) -> u64 {
        let mut all = Vec::with_capacity(parts.len() + 1);
        all.push(self.config.seed);
        all.extend_from_slice(parts);
        mix(&all)
    }

    fn hsic(&self, x: &[f64], y: &[f64], seed: u64) -> HsicResult {
        hsic_test(x, y, &self.config.hsic_options(seed)).unwrap_or(HsicResult {
            statistic: 0.0,
            p_value: 1.0,
            method: self.config.pvalue_method,
            bandwidth_x: 1.0,
            bandwidth_y: 1.0,
            degenerate: true,
        })
    }

    /// HSIC between two raw samples, seeded from `tag`.
    pub fn hsic_p(&self, x: &[f64], y: &[f64], tag: &[u64]) -> f64 {
        self.hsic(x, y, self.seed(tag)).p_value
    }

    /// Marginal HSIC of a pair.
    pub fn marginal(&self, p: Pair) -> HsicResult {
        if let Some(r) = self.cache.borrow().marginal.get(&p) {
            return *r;
        }
        let r = self.hsic(
            self.col(p.0),
            self.col(p.1),
            self.seed(&[TAG_MARGINAL, p.0 as u64, p.1 as u64]),
        );
        self.cache.borrow_mut().marginal.insert(p, r);
        r
    }

    pub fn shapiro(&self, v: usize) -> f64 {
        if let Some(&p) = self.cache.borrow().shapiro.get(&v) {
            return p;
        }
        let p = shapiro_wilk_p(self.col(v), self.seed(&[TAG_SHAPIRO, v as u64])).unwrap_or(1.0);
        self.cache.borrow_mut().shapiro.insert(v, p);
        p
    }

    /// Residual of `target` regressed on `set` (sorted internally). An empty
    /// set centres the target.
    pub fn residual(&self, target: usize, set: &[usize], engine: Engine) -> Arc<Vec<f64>> {
        self.residual_df(target, set, engine).0
    }

    /// Residual plus the effective degrees of freedom of the fit.
    pub fn residual_df(&self, target: usize, set: &[usize], engine: Engine) -> (Arc<Vec<f64>>, f64) {
        let mut set = set.to_vec();
        set.sort_unstable();
        set.dedup();
        let key = (target, set, engine);
        if let Some((r, df)) = self.cache.borrow().residual.get(&key) {
            return (Arc::clone(r), *df);
        }
        let y = self.col(target);
        let (r, df) = if key.1.is_empty() {
            let m = crate::stats::util::mean(y);
            (y.iter().map(|v| v - m).collect(), 1.0)
        } else {
            let xs: Vec<&[f64]> = key.1.iter().map(|&v| self.col(v)).collect();
            match fit_multi(&xs, y, engine) {
                Ok(fit) => {
                    let df = fit.predictor.effective_df();
                    (fit.residuals, df)
                }
                Err(_) => (y.to_vec(), 1.0),
            }
        };
        let r = Arc::new(r);
        self.cache
            .borrow_mut()
            .residual
            .insert(key, (Arc::clone(&r), df));
        (r, df)
    }

    /// p-value of HSIC(cause, residual of effect on cause): large when the
    /// additive-noise model `cause -> effect` fits.
    pub fn anm_p(&self, cause: usize, effect: usize, engine: Engine) -> f64 {
        let key = (cause, effect, engine);
        if let Some(&p) = self.cache.borrow().anm.get(&key) {
            return p;
        }
        let r = self.residual(effect, &[cause], engine);
        let e = match engine {
            Engine::Linear => 0,
            Engine::Nonlinear => 1,
        };
        let p = self
            .hsic(self.col(cause), &r, self.seed(&[TAG_ANM, cause as u64, effect as u64, e]))
            .p_value;
        self.cache.borrow_mut().anm.insert(key, p);
        p
    }

    /// Residual-independence p of `x` and `y` after nonlinear regression of
    /// each on `set`. An empty set is the marginal test.
    pub fn cond_p(&self, p: Pair, set: &[usize]) -> f64 {
        if set.is_empty() {
            return self.marginal(p).p_value;
        }
        let mut set = set.to_vec();
        set.sort_unstable();
        set.dedup();
        let key = (p, set);
        if let Some(&v) = self.cache.borrow().cond.get(&key) {
            return v;
        }
        let rx = self.residual(p.0, &key.1, Engine::Nonlinear);
        let ry = self.residual(p.1, &key.1, Engine::Nonlinear);
        let mut tag = vec![TAG_COND, p.0 as u64, p.1 as u64];
        tag.extend(key.1.iter().map(|&v| v as u64));
        let v = self.hsic(&rx, &ry, self.seed(&tag)).p_value;
        self.cache.borrow_mut().cond.insert(key, v);
        v
    }

    /// Generic memo slot for derived decisions keyed by caller-chosen ids.
    pub(crate) fn memo(
        &self,
        key: Vec<u64>,
        f: impl FnOnce() -> Option<(bool, f64, f64)>,
    ) -> Option<(bool, f64, f64)> {
        if let Some(v) = self.cache.borrow().memo.get(&key) {
            return *v;
        }
        let v = f();
        self.cache.borrow_mut().memo.insert(key, v);
        v
    }

    pub fn hetero(&self, p: Pair) -> HeteroPValues {
        if let Some(&h) = self.cache.borrow().hetero.get(&p) {
            return h;
        }
        let opts = self
            .config
            .hsic_options(self.seed(&[TAG_HETERO, p.0 as u64, p.1 as u64]));
        let h = heteroscedasticity_test(self.col(p.0), self.col(p.1), &opts).unwrap_or(
            HeteroPValues {
                forward: 1.0,
                backward: 1.0,
            },
        );
        self.cache.borrow_mut().hetero.insert(p, h);
        h
    }
}
