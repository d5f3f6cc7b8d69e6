//! One protocol run behind the HTTP API, plus its on-disk form.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use anyhow::{Context, Result};
use edgecert::model::{Config, Dataset, PartialDag, Trace};
use edgecert::oracle::{replay, AnswerOutcome, OracleAnswer, OracleQuery, Protocol};
use edgecert::propagation::PropagationReport;
use edgecert::synth::evaluate_run;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    AwaitingAnswer,
    Propagating,
    Done,
}

/// Persisted as `session.json`; data and trace live next to it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionMeta {
    pub id: String,
    pub label: Option<String>,
    pub fingerprint: String,
    pub config: Config,
    pub gt: Option<Vec<(usize, usize)>>,
}

pub struct Session {
    pub meta: SessionMeta,
    pub names: Vec<String>,
    data_csv: String,
    proto: Mutex<Protocol>,
    busy: AtomicBool,
}

impl Session {
    /// Runs the data-only rounds; slow on wide datasets.
    pub fn create(
        id: String,
        label: Option<String>,
        data_csv: String,
        config: Config,
        gt: Option<BTreeSet<(usize, usize)>>,
    ) -> edgecert::Result<Self> {
        let data = Dataset::from_csv_reader(data_csv.as_bytes())?;
        let meta = SessionMeta {
            id,
            label,
            fingerprint: data.fingerprint(),
            config: config.clone(),
            gt: gt.map(|g| g.into_iter().collect()),
        };
        let p = Protocol::new(Arc::new(data), Arc::new(config))?;
        Ok(Self::wrap(meta, data_csv, p))
    }

    fn wrap(meta: SessionMeta, data_csv: String, mut p: Protocol) -> Self {
        if let Some(g) = &meta.gt {
            let k = g.iter().map(|e| e.0).collect::<BTreeSet<_>>().len();
            p.set_metahub_hint(Some(k));
        }
        p.next_query();
        Session {
            names: p.data().names().to_vec(),
            meta,
            data_csv,
            proto: Mutex::new(p),
            busy: AtomicBool::new(false),
        }
    }

    pub fn lock(&self) -> MutexGuard<'_, Protocol> {
        self.proto.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn status(&self, p: &Protocol) -> Status {
        if self.busy.load(Ordering::Acquire) {
            Status::Propagating
        } else if p.pending().is_some() {
            Status::AwaitingAnswer
        } else {
            Status::Done
        }
    }

    /// Status without waiting on a running answer.
    pub fn status_now(&self) -> Status {
        match self.proto.try_lock() {
            Ok(p) => self.status(&p),
            Err(_) => Status::Propagating,
        }
    }

    /// `None` when another answer is being applied.
    pub fn try_begin(&self) -> Option<BusyGuard<'_>> {
        (!self.busy.swap(true, Ordering::AcqRel)).then_some(BusyGuard(&self.busy))
    }

    pub fn answer(&self, id: u64, a: OracleAnswer) -> edgecert::Result<(AnswerOutcome, Option<OracleQuery>)> {
        let mut p = self.lock();
        let out = p.apply_answer(id, a)?;
        let next = p.next_query();
        Ok((out, next))
    }

    pub fn summary(&self, p: &Protocol) -> Value {
        let dag = p.dag();
        json!({
            "id": self.meta.id,
            "label": self.meta.label,
            "status": self.status(p),
            "fingerprint": self.meta.fingerprint,
            "n_vars": self.names.len(),
            "n_samples": p.data().n_samples(),
            "queries": p.queries(),
            "committed": dag.committed().len(),
            "open": dag.open().len(),
            "warnings": p.warnings(),
        })
    }

    pub fn question(&self, q: &OracleQuery) -> Value {
        json!({
            "id": q.id,
            "kind": q.kind,
            "edge": q.edge.map(|(a, b)| [&self.names[a], &self.names[b]]),
            "edge_ids": q.edge,
            "node": q.node.map(|v| &self.names[v]),
            "k": q.k,
            "certificate": q.certificate,
            "question_text": q.question_text,
            "info_value": q.info_value,
        })
    }

    pub fn dag_snapshot(&self, p: &Protocol) -> Value {
        let dag: &PartialDag = p.dag();
        let name = |&(a, b): &(usize, usize)| [&self.names[a], &self.names[b]];
        json!({
            "names": self.names,
            "committed": dag.committed().iter().map(name).collect::<Vec<_>>(),
            "open": dag.open().iter().map(name).collect::<Vec<_>>(),
            "dropped": dag.dropped().iter().map(name).collect::<Vec<_>>(),
            "edges": p.edge_states(),
        })
    }

    pub fn report(&self, r: &PropagationReport) -> Value {
        let n = |i: usize| &self.names[i];
        json!({
            "new_commits": r.new_commits.iter().map(|c| json!({
                "from": n(c.from), "to": n(c.to), "rule": c.rule, "detail": c.detail,
            })).collect::<Vec<_>>(),
            "dropped": r.dropped.iter().map(|&((a, b), pv)| json!({
                "edge": [n(a), n(b)], "p_value": pv,
            })).collect::<Vec<_>>(),
            "gated": r.gated.iter().map(|g| json!({
                "from": n(g.from), "to": n(g.to), "rule": g.rule, "ratio": g.ratio,
            })).collect::<Vec<_>>(),
            "resolutions": r.resolutions(),
        })
    }

    pub fn metrics(&self, p: &Protocol) -> Value {
        let checks = p.guarantee();
        let mut m = json!({
            "queries": p.queries(),
            "committed": p.dag().committed().len(),
            "open": p.dag().open().len(),
            "guarantee_checks": checks.len(),
            "guarantee_violations": checks.iter().filter(|g| !g.holds()).count(),
        });
        if let Some(gt) = &self.meta.gt {
            let gt: BTreeSet<_> = gt.iter().copied().collect();
            let r = evaluate_run(p.dag(), &gt, p.trace());
            m["precision"] = json!(r.precision);
            m["recall"] = json!(r.recall);
            m["f1"] = json!(r.f1);
            m["correct"] = json!(r.correct);
            m["per_mechanism"] = json!(r.per_mechanism);
        }
        m
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        let dir = root.join(&self.meta.id);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("session.json"), serde_json::to_vec_pretty(&self.meta)?)?;
        fs::write(dir.join("data.csv"), &self.data_csv)?;
        self.save_trace(root)
    }

    pub fn save_trace(&self, root: &Path) -> Result<()> {
        let path = root.join(&self.meta.id).join("trace.csv");
        let text = self.lock().trace().to_csv_string();
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    /// Rebuild a saved session by replaying its trace.
    pub fn load(dir: &Path) -> Result<Self> {
        let meta: SessionMeta = serde_json::from_slice(&fs::read(dir.join("session.json"))?)?;
        let data_csv = fs::read_to_string(dir.join("data.csv"))?;
        let data = Dataset::from_csv_reader(data_csv.as_bytes())?;
        anyhow::ensure!(
            data.fingerprint() == meta.fingerprint,
            "data.csv in {} does not match its fingerprint",
            dir.display()
        );
        let trace = Trace::read_csv_path(dir.join("trace.csv"))?;
        let p = replay(Arc::new(data), Arc::new(meta.config.clone()), &trace)?;
        Ok(Self::wrap(meta, data_csv, p))
    }
}

pub struct BusyGuard<'a>(&'a AtomicBool);

impl Drop for BusyGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

/// Saved session directories under `root`.
pub fn saved_sessions(root: &Path) -> Vec<PathBuf> {
    let Ok(rd) = fs::read_dir(root) else { return Vec::new() };
    let mut dirs: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("session.json").is_file())
        .collect();
    dirs.sort();
    dirs
}
