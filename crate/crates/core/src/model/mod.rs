//! Shared data model: dataset, graph state, certificates, configuration and
//! the audit trace.

pub mod certificate;
pub mod config;
pub mod dag;
pub mod dataset;
pub mod edges;
pub mod ids;
pub mod trace;

pub use certificate::CertificateCode;
pub use config::{Config, OracleMode, RecoveryConfig, TierThresholds, ValueStrategy};
pub use dag::{assert_acyclic, EdgeState, EdgeStatus, PartialDag};
pub use dataset::{Dataset, VariableMeta, RECOMMENDED_MIN_SAMPLES};
pub use edges::{format_edge_list, parse_edge_list, read_edge_list};
pub use ids::{pair, Direction, Mechanism, Pair, Provenance, Tier};
pub use trace::{apply_event, Action, Trace, TraceEvent};
