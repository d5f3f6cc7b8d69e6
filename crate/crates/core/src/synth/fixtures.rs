//! Benchmark fixtures listed in `manifest.json`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{read_edge_list, Dataset};

/// Overrides the fixture directory.
pub const FIXTURE_ENV: &str = "EDGECERT_FIXTURES";

pub fn fixture_dir() -> PathBuf {
    std::env::var_os(FIXTURE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkFixture {
    pub name: String,
    pub csv: String,
    pub gt: String,
    #[serde(rename = "V")]
    pub v: usize,
    pub gt_edges: usize,
    #[serde(rename = "K")]
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct LoadedFixture {
    pub spec: BenchmarkFixture,
    pub data: Dataset,
    pub gt: BTreeSet<(usize, usize)>,
}

impl LoadedFixture {
    /// Vertices with at least one child.
    pub fn non_leaves(&self) -> usize {
        self.gt.iter().map(|e| e.0).collect::<BTreeSet<_>>().len()
    }
}

pub fn read_manifest(dir: &Path) -> Result<Vec<BenchmarkFixture>> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_fixture(dir: &Path, name: &str) -> Result<LoadedFixture> {
    let spec = read_manifest(dir)?
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::InvalidConfig(format!("no fixture named {name:?}")))?;
    let data = Dataset::from_csv_path(dir.join(&spec.csv))?;
    let gt = read_edge_list(dir.join(&spec.gt), data.names())?;
    Ok(LoadedFixture {
        spec,
        data,
        gt: gt.into_iter().collect(),
    })
}

/// Random DAG: a random topological order, each forward pair kept with
/// probability `p`.
pub fn random_dag(n: usize, p: f64, rng: &mut impl Rng) -> BTreeSet<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.insert((order[i], order[j]));
            }
        }
    }
    edges
}
