//! Statistical primitives: independence testing, multiple-testing control,
//! normality and heteroscedasticity gates, entropy, and regression.

pub mod entropy;
pub mod fdr;
pub mod hetero;
pub mod hsic;
pub mod regression;
pub mod shapiro;
pub mod util;

pub use entropy::differential_entropy;
pub use fdr::bh_fdr;
pub use hetero::{heteroscedasticity_test, HeteroPValues};
pub use hsic::{hsic_test, HsicOptions, HsicResult, PValueMethod};
pub use regression::{fit_multi, fit_regression, Engine, Predictor, RegressionFit};
pub use shapiro::{shapiro_wilk, shapiro_wilk_p, ShapiroWilk};
