use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgecert::model::{Config, OracleMode, Tier, ValueStrategy};
use edgecert::stats::PValueMethod;

#[derive(Debug, Parser)]
#[command(name = "edgecert", version, about = "Certified edge orientation with a minimal number of expert questions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Data-only audit: skeleton, mediators, cascade and propagation.
    Audit(AuditArgs),
    /// Full protocol with an oracle.
    Iterate(IterateArgs),
    /// Benchmark suite: 1+K counts, random DAGs, tier ablation and operating points.
    Bench(BenchArgs),
    /// Per-tier accuracy on the synthetic regimes.
    Stress(StressArgs),
    /// HTTP/JSON session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    pub csv: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Directory for audit.json, verdicts.csv and trace.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    PerEdge,
    Metahub,
    Hybrid,
    PureMetahub,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("oracle").required(true).args(["gt", "interactive", "script"])))]
pub struct IterateArgs {
    pub csv: PathBuf,
    /// Ground-truth edge list, one `from to` pair per line.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Ask on the terminal.
    #[arg(long)]
    pub interactive: bool,
    /// Scripted answers, CSV `kind,target,answer`.
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::PerEdge)]
    pub mode: Mode,
    /// Continue from a trace written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub seed: u64,
    /// Random DAGs to recover.
    #[arg(long, default_value_t = 200)]
    pub dags: usize,
    /// Fixture for the ablation and operating-point tables.
    #[arg(long, default_value = "sachs_obs")]
    pub ablation_fixture: String,
    /// Per-edge question budget for the first operating point.
    #[arg(long, default_value_t = 5)]
    pub budget: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StressArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 40)]
    pub pairs: usize,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Sessions are persisted here and resumed on restart.
    #[arg(long)]
    pub state_dir: Option<PathBuf>,
}

/// Config file plus per-field overrides.
#[derive(Debug, Default, Clone, Args)]
pub struct ConfigArgs {
    /// JSON config; missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha_skeleton: Option<f64>,
    #[arg(long)]
    pub alpha_residual: Option<f64>,
    #[arg(long)]
    pub fdr_level: Option<f64>,
    #[arg(long)]
    pub permutations: Option<usize>,
    #[arg(long, value_parser = parse_pvalue)]
    pub pvalue_method: Option<PValueMethod>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated tier list, e.g. `L0,L1,L_IGCI`.
    #[arg(long, value_delimiter = ',')]
    pub tiers: Option<Vec<Tier>>,
    #[arg(long)]
    pub no_guard: bool,
    #[arg(long)]
    pub no_cascade: bool,
    #[arg(long)]
    pub no_propagation: bool,
    #[arg(long, value_parser = parse_strategy)]
    pub value_strategy: Option<ValueStrategy>,
    #[arg(long)]
    pub metahub_k: Option<usize>,
    /// Variables treated as circular (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub circular: Option<Vec<String>>,
    #[arg(long)]
    pub recovery: bool,
}

fn parse_pvalue(s: &str) -> Result<PValueMethod, String> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "gamma" | "gamma-approx" => Ok(PValueMethod::GammaApprox),
        "permutation" => Ok(PValueMethod::Permutation),
        _ => Err(format!("expected `gamma` or `permutation`, got `{s}`")),
    }
}

fn parse_strategy(s: &str) -> Result<ValueStrategy, String> {
    match s.to_ascii_lowercase().as_str() {
        "min" => Ok(ValueStrategy::Min),
        "expected" => Ok(ValueStrategy::Expected),
        _ => Err(format!("expected `min` or `expected`, got `{s}`")),
    }
}

impl ConfigArgs {
    pub fn resolve(&self) -> edgecert::Result<Config> {
        let mut c = match &self.config {
            Some(p) => Config::from_json_path(p)?,
            None => Config::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f.clone() { c.$f = v; })* };
        }
        set!(alpha_skeleton, alpha_residual, permutations, pvalue_method, seed, value_strategy, circular);
        if self.fdr_level.is_some() {
            c.fdr_level = self.fdr_level;
        }
        if self.metahub_k.is_some() {
            c.metahub_k = self.metahub_k;
        }
        if let Some(t) = &self.tiers {
            c.tier_mask = t.iter().copied().collect();
        }
        c.guard_enabled &= !self.no_guard;
        c.cascade_enabled &= !self.no_cascade;
        c.propagation_enabled &= !self.no_propagation;
        c.recovery.enabled |= self.recovery;
        c.validate()?;
        Ok(c)
    }
}

impl Mode {
    pub fn oracle_mode(self) -> Option<OracleMode> {
        match self {
            Mode::PerEdge => Some(OracleMode::PerEdge),
            Mode::Metahub => Some(OracleMode::MetahubChildren),
            Mode::Hybrid => Some(OracleMode::Hybrid),
            Mode::PureMetahub => None,
        }
    }
}
