use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::dag::{EdgeStatus, PartialDag};
use crate::model::ids::{pair, Direction, Pair, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    CommitFwd,
    CommitBwd,
    Drop,
    Demote,
    Abstain,
    Query,
    Answer,
}

impl Action {
    pub fn commit(d: Direction) -> Self {
        match d {
            Direction::Fwd => Action::CommitFwd,
            Direction::Bwd => Action::CommitBwd,
        }
    }

    pub fn is_mutation(self) -> bool {
        matches!(
            self,
            Action::CommitFwd | Action::CommitBwd | Action::Drop | Action::Demote
        )
    }
}

/// One append-only audit record. Serialises to the trace CSV columns
/// `round,mechanism,edge_i,edge_j,action,detail,bits`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub round: u32,
    pub mechanism: Provenance,
    pub edge_i: Option<usize>,
    pub edge_j: Option<usize>,
    pub action: Action,
    pub detail: String,
    pub bits: f64,
}

impl TraceEvent {
    pub fn new(round: u32, mechanism: Provenance, edge: Option<Pair>, action: Action) -> Self {
        TraceEvent {
            round,
            mechanism,
            edge_i: edge.map(|e| e.0),
            edge_j: edge.map(|e| e.1),
            action,
            detail: String::new(),
            bits: 0.0,
        }
    }

    pub fn detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn bits(mut self, bits: f64) -> Self {
        self.bits = bits;
        self
    }

    pub fn edge(&self) -> Option<Pair> {
        match (self.edge_i, self.edge_j) {
            (Some(i), Some(j)) => Some(pair(i, j)),
            _ => None,
        }
    }
}

/// Ordered event log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn push(&mut self, e: TraceEvent) {
        debug_assert!(self.events.last().is_none_or(|l| l.round <= e.round));
        self.events.push(e);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn total_bits(&self) -> f64 {
        self.events.iter().map(|e| e.bits).sum()
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for e in &self.events {
            wtr.serialize(e)?;
        }
        if self.events.is_empty() {
            wtr.write_record(["round", "mechanism", "edge_i", "edge_j", "action", "detail", "bits"])?;
        }
        wtr.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn read_csv(r: impl Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let events = rdr.deserialize().collect::<std::result::Result<Vec<TraceEvent>, _>>()?;
        Ok(Trace { events })
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.events).expect("trace events serialise")
    }

    /// Rebuild the graph by applying every mutation to an all-open graph on
    /// `n` vertices.
    pub fn reconstruct(&self, n: usize) -> Result<PartialDag> {
        let mut dag = PartialDag::complete(n);
        for (k, e) in self.events.iter().enumerate() {
            apply_event(&mut dag, e).map_err(|reason| Error::TraceMismatch { index: k, reason })?;
        }
        Ok(dag)
    }
}

/// Apply one event to `dag`. Non-mutating actions are no-ops.
pub fn apply_event(dag: &mut PartialDag, e: &TraceEvent) -> std::result::Result<(), String> {
    if !e.action.is_mutation() {
        return Ok(());
    }
    let p = e.edge().ok_or_else(|| format!("{:?} event without an edge", e.action))?;
    if p.1 >= dag.n_vertices() {
        return Err(format!("edge {p:?} outside {} vertices", dag.n_vertices()));
    }
    match e.action {
        Action::CommitFwd | Action::CommitBwd => {
            if dag.status(p) == Some(EdgeStatus::Dropped) || dag.status(p).is_none() {
                dag.reopen(p).map_err(|err| err.to_string())?;
            }
            let d = if e.action == Action::CommitFwd {
                Direction::Fwd
            } else {
                Direction::Bwd
            };
            let (a, b) = d.orient(p);
            dag.commit(a, b).map_err(|err| err.to_string())
        }
        Action::Drop => dag.drop_pair(p).map_err(|err| err.to_string()),
        Action::Demote => dag.demote(p).map_err(|err| err.to_string()),
        _ => Ok(()),
    }
}
