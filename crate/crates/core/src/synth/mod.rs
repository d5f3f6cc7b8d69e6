//! Synthetic regimes, benchmark fixtures, metrics and ablation runners.

pub mod eval;
pub mod fixtures;
pub mod regimes;
pub mod runners;

pub use eval::{evaluate, evaluate_edges, evaluate_run, EvalReport};
pub use fixtures::{fixture_dir, load_fixture, random_dag, read_manifest, BenchmarkFixture, LoadedFixture};
pub use regimes::{generate_regime, PairSample, Regime, RegimeSpec};
pub use runners::{
    ablation_csv, pareto_csv, run_ablation, run_pareto, run_tier_matrix, AblationRow,
    OperatingPoint, TierCell, TierMatrix,
};
