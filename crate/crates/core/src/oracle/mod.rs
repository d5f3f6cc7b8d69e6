//! Oracle queries, answers, backends and the iterative protocol.

pub mod metahub;
pub mod protocol;
pub mod templates;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pair, CertificateCode, Pair, Trace};

pub use metahub::{run_pure_metahub, MetahubRun};
pub use protocol::{replay, run_iterative, AnswerOutcome, Protocol, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QueryKind {
    PerEdge,
    MetaHub,
    NodeChildren,
}

impl QueryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::PerEdge => "PER_EDGE",
            QueryKind::MetaHub => "META_HUB",
            QueryKind::NodeChildren => "NODE_CHILDREN",
        }
    }
}

impl FromStr for QueryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "PER_EDGE" => Ok(QueryKind::PerEdge),
            "META_HUB" => Ok(QueryKind::MetaHub),
            "NODE_CHILDREN" => Ok(QueryKind::NodeChildren),
            other => Err(Error::MalformedData(format!("unknown query kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleQuery {
    /// Sequence number within the run; answers must echo it.
    pub id: u64,
    pub kind: QueryKind,
    pub edge: Option<Pair>,
    pub node: Option<usize>,
    pub k: Option<usize>,
    pub certificate: Option<CertificateCode>,
    pub info_value: Option<f64>,
    pub question_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeAnswer {
    Fwd,
    Bwd,
    Absent,
    Unknown,
}

/// Answer payload. Text form: `FWD`, `BWD`, `ABSENT`, `UNKNOWN`,
/// `HUBS 3 0 7`, `CHILDREN 2 5`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleAnswer {
    Edge(EdgeAnswer),
    Hubs(Vec<usize>),
    Children(Vec<usize>),
}

impl OracleAnswer {
    pub fn kind(&self) -> QueryKind {
        match self {
            OracleAnswer::Edge(_) => QueryKind::PerEdge,
            OracleAnswer::Hubs(_) => QueryKind::MetaHub,
            OracleAnswer::Children(_) => QueryKind::NodeChildren,
        }
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for OracleAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleAnswer::Edge(e) => f.write_str(match e {
                EdgeAnswer::Fwd => "FWD",
                EdgeAnswer::Bwd => "BWD",
                EdgeAnswer::Absent => "ABSENT",
                EdgeAnswer::Unknown => "UNKNOWN",
            }),
            OracleAnswer::Hubs(v) if v.is_empty() => f.write_str("HUBS"),
            OracleAnswer::Hubs(v) => write!(f, "HUBS {}", join(v)),
            OracleAnswer::Children(v) if v.is_empty() => f.write_str("CHILDREN"),
            OracleAnswer::Children(v) => write!(f, "CHILDREN {}", join(v)),
        }
    }
}

impl FromStr for OracleAnswer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let head = it.next().unwrap_or("").to_ascii_uppercase();
        let nodes = |it: std::str::SplitWhitespace| -> Result<Vec<usize>> {
            it.map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::MalformedData(format!("bad node id {t:?} in answer")))
            })
            .collect()
        };
        let edge = |e: EdgeAnswer, it: &mut std::str::SplitWhitespace| {
            if it.next().is_some() {
                Err(Error::MalformedData(format!("trailing tokens in answer {s:?}")))
            } else {
                Ok(OracleAnswer::Edge(e))
            }
        };
        match head.as_str() {
            "FWD" => edge(EdgeAnswer::Fwd, &mut it),
            "BWD" => edge(EdgeAnswer::Bwd, &mut it),
            "ABSENT" => edge(EdgeAnswer::Absent, &mut it),
            "UNKNOWN" => edge(EdgeAnswer::Unknown, &mut it),
            "HUBS" => Ok(OracleAnswer::Hubs(nodes(it)?)),
            "CHILDREN" => Ok(OracleAnswer::Children(nodes(it)?)),
            _ => Err(Error::MalformedData(format!("unrecognised answer {s:?}"))),
        }
    }
}

impl Serialize for OracleAnswer {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OracleAnswer {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Source of answers. One method per query kind.
pub trait OracleBackend {
    fn per_edge(&mut self, edge: Pair) -> Result<EdgeAnswer>;
    fn meta_hub(&mut self, k: usize) -> Result<Vec<usize>>;
    fn node_children(&mut self, node: usize) -> Result<Vec<usize>>;

    /// Number of non-leaf vertices, when the backend knows it.
    fn known_k(&self) -> Option<usize> {
        None
    }

    fn answer(&mut self, q: &OracleQuery) -> Result<OracleAnswer> {
        match q.kind {
            QueryKind::PerEdge => {
                let e = q.edge.ok_or_else(|| Error::MalformedData("per-edge query without edge".into()))?;
                self.per_edge(e).map(OracleAnswer::Edge)
            }
            QueryKind::MetaHub => self.meta_hub(q.k.unwrap_or(0)).map(OracleAnswer::Hubs),
            QueryKind::NodeChildren => {
                let v = q.node.ok_or_else(|| Error::MalformedData("children query without node".into()))?;
                self.node_children(v).map(OracleAnswer::Children)
            }
        }
    }
}

/// Answers from a fixed DAG.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl GroundTruth {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        GroundTruth {
            n,
            edges: edges.into_iter().collect(),
        }
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v).count()
    }

    /// Vertices with at least one child.
    pub fn non_leaves(&self) -> usize {
        (0..self.n).filter(|&v| self.out_degree(v) > 0).count()
    }
}

impl OracleBackend for GroundTruth {
    fn per_edge(&mut self, e: Pair) -> Result<EdgeAnswer> {
        let e = pair(e.0, e.1);
        Ok(if self.edges.contains(&e) {
            EdgeAnswer::Fwd
        } else if self.edges.contains(&(e.1, e.0)) {
            EdgeAnswer::Bwd
        } else {
            EdgeAnswer::Absent
        })
    }

    /// Top-`k` by out-degree; ties go to the lower index.
    fn meta_hub(&mut self, k: usize) -> Result<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by_key(|&v| (std::cmp::Reverse(self.out_degree(v)), v));
        order.truncate(k);
        Ok(order)
    }

    fn node_children(&mut self, v: usize) -> Result<Vec<usize>> {
        Ok(self.edges.iter().filter(|e| e.0 == v).map(|e| e.1).collect())
    }

    fn known_k(&self) -> Option<usize> {
        Some(self.non_leaves())
    }
}

/// One scripted answer: the query it expects and the reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRow {
    pub kind: QueryKind,
    /// `i-j` for edges, the node id for children queries, `k` for hubs.
    pub target: String,
    pub answer: OracleAnswer,
}

/// Replays recorded answers in order and checks each matches its query.
#[derive(Debug, Clone, Default)]
pub struct Scripted {
    rows: VecDeque<ScriptRow>,
    used: usize,
}

impl Scripted {
    pub fn new(rows: impl IntoIterator<Item = ScriptRow>) -> Self {
        Scripted {
            rows: rows.into_iter().collect(),
            used: 0,
        }
    }

    pub fn remaining(&self) -> usize {
        self.rows.len()
    }

    /// CSV with header `kind,target,answer`.
    pub fn from_csv(r: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<ScriptRow>, _>>()?;
        Ok(Scripted::new(rows))
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(f)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("script rows serialise");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
    }

    /// Answers recorded in a trace, in order.
    pub fn from_trace(trace: &Trace) -> Result<Self> {
        let mut rows = Vec::new();
        let mut last_target: Option<(QueryKind, String)> = None;
        for e in &trace.events {
            match e.action {
                crate::model::Action::Query => {
                    last_target = Some(parse_target(&e.detail)?);
                }
                crate::model::Action::Answer => {
                    let (kind, target) = last_target
                        .take()
                        .ok_or_else(|| Error::MalformedData("answer without a query".into()))?;
                    rows.push(ScriptRow {
                        kind,
                        target,
                        answer: e.detail.parse()?,
                    });
                }
                _ => {}
            }
        }
        Ok(Scripted::new(rows))
    }

    fn pop(&mut self, kind: QueryKind, target: String) -> Result<OracleAnswer> {
        let row = self.rows.pop_front().ok_or(Error::ScriptExhausted(self.used))?;
        self.used += 1;
        if row.kind != kind || row.target != target || row.answer.kind() != kind {
            return Err(Error::AnswerMismatch(format!(
                "script expected {} {} but the protocol asked {} {target}",
                row.kind.as_str(),
                row.target,
                kind.as_str()
            )));
        }
        Ok(row.answer)
    }
}

/// `target` string for a query.
pub fn query_target(q: &OracleQuery) -> String {
    match q.kind {
        QueryKind::PerEdge => {
            let e = q.edge.unwrap_or((0, 0));
            format!("{}-{}", e.0, e.1)
        }
        QueryKind::MetaHub => q.k.unwrap_or(0).to_string(),
        QueryKind::NodeChildren => q.node.unwrap_or(0).to_string(),
    }
}

/// QUERY events carry `KIND target;extra`.
fn parse_target(detail: &str) -> Result<(QueryKind, String)> {
    let head = detail.split(';').next().unwrap_or("");
    let mut it = head.split_whitespace();
    let kind: QueryKind = it.next().unwrap_or("").parse()?;
    let target = it
        .next()
        .ok_or_else(|| Error::MalformedData(format!("query event without target: {detail:?}")))?;
    Ok((kind, target.to_string()))
}

impl OracleBackend for Scripted {
    fn per_edge(&mut self, e: Pair) -> Result<EdgeAnswer> {
        match self.pop(QueryKind::PerEdge, format!("{}-{}", e.0, e.1))? {
            OracleAnswer::Edge(a) => Ok(a),
            _ => unreachable!("kind checked in pop"),
        }
    }

    fn meta_hub(&mut self, k: usize) -> Result<Vec<usize>> {
        match self.pop(QueryKind::MetaHub, k.to_string())? {
            OracleAnswer::Hubs(v) => Ok(v),
            _ => unreachable!("kind checked in pop"),
        }
    }

    fn node_children(&mut self, v: usize) -> Result<Vec<usize>> {
        match self.pop(QueryKind::NodeChildren, v.to_string())? {
            OracleAnswer::Children(c) => Ok(c),
            _ => unreachable!("kind checked in pop"),
        }
    }
}

/// Prompts on a text stream; answers are typed in the text form above.
pub struct Interactive<R, W> {
    input: R,
    output: W,
    names: Vec<String>,
}

impl<R: std::io::BufRead, W: std::io::Write> Interactive<R, W> {
    pub fn new(input: R, output: W, names: Vec<String>) -> Self {
        Interactive { input, output, names }
    }

    fn ask(&mut self, prompt: &str, kind: QueryKind) -> Result<OracleAnswer> {
        loop {
            writeln!(self.output, "{prompt}").map_err(|e| Error::io("<prompt>", e))?;
            self.output.flush().map_err(|e| Error::io("<prompt>", e))?;
            let mut line = String::new();
            let n = self
                .input
                .read_line(&mut line)
                .map_err(|e| Error::io("<stdin>", e))?;
            if n == 0 {
                return Err(Error::Abandoned);
            }
            let line = line.trim();
            let parsed = match kind {
                QueryKind::PerEdge => line.parse(),
                QueryKind::MetaHub => self.nodes(line).map(OracleAnswer::Hubs),
                QueryKind::NodeChildren => self.nodes(line).map(OracleAnswer::Children),
            };
            match parsed {
                Ok(a) if a.kind() == kind => return Ok(a),
                _ => {
                    writeln!(self.output, "could not read {line:?}; try again")
                        .map_err(|e| Error::io("<prompt>", e))?;
                }
            }
        }
    }

    /// Names or ids, comma or space separated.
    fn nodes(&self, line: &str) -> Result<Vec<usize>> {
        line.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty() && !t.eq_ignore_ascii_case("none"))
            .map(|t| {
                self.names
                    .iter()
                    .position(|n| n == t)
                    .or_else(|| t.parse().ok())
                    .ok_or_else(|| Error::UnknownVariable(t.to_string()))
            })
            .collect()
    }
}

impl<R: std::io::BufRead, W: std::io::Write> OracleBackend for Interactive<R, W> {
    fn per_edge(&mut self, e: Pair) -> Result<EdgeAnswer> {
        let prompt = format!(
            "{} - {}: FWD / BWD / ABSENT / UNKNOWN",
            self.names[e.0], self.names[e.1]
        );
        match self.ask(&prompt, QueryKind::PerEdge)? {
            OracleAnswer::Edge(a) => Ok(a),
            _ => unreachable!("kind checked in ask"),
        }
    }

    fn meta_hub(&mut self, k: usize) -> Result<Vec<usize>> {
        let prompt = templates::render(
            templates::META_HUB_TEMPLATE,
            &[("k", k.to_string())].into_iter().collect(),
        );
        match self.ask(&prompt, QueryKind::MetaHub)? {
            OracleAnswer::Hubs(v) => Ok(v),
            _ => unreachable!("kind checked in ask"),
        }
    }

    fn node_children(&mut self, v: usize) -> Result<Vec<usize>> {
        let prompt = templates::render(
            templates::NODE_CHILDREN_TEMPLATE,
            &[("v", self.names[v].clone())].into_iter().collect(),
        );
        match self.ask(&prompt, QueryKind::NodeChildren)? {
            OracleAnswer::Children(c) => Ok(c),
            _ => unreachable!("kind checked in ask"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answer_text_round_trips() {
        for s in ["FWD", "BWD", "ABSENT", "UNKNOWN", "HUBS 3 0 7", "HUBS", "CHILDREN 2 5", "CHILDREN"] {
            let a: OracleAnswer = s.parse().unwrap();
            assert_eq!(a.to_string(), s);
        }
        assert!("SIDEWAYS".parse::<OracleAnswer>().is_err());
        assert!("FWD 3".parse::<OracleAnswer>().is_err());
    }

    #[test]
    fn ground_truth_breaks_hub_ties_by_index() {
        // 0 -> 1, 2 -> 3, 1 -> 3: all out-degree 1
        let mut gt = GroundTruth::new(4, [(0, 1), (2, 3), (1, 3)]);
        assert_eq!(gt.meta_hub(2).unwrap(), vec![0, 1]);
        assert_eq!(gt.known_k(), Some(3));
        assert_eq!(gt.per_edge((1, 3)).unwrap(), EdgeAnswer::Fwd);
        assert_eq!(gt.per_edge((0, 2)).unwrap(), EdgeAnswer::Absent);
        let mut rev = GroundTruth::new(2, [(1, 0)]);
        assert_eq!(rev.per_edge((0, 1)).unwrap(), EdgeAnswer::Bwd);
    }

    #[test]
    fn scripted_checks_targets() {
        let csv = "kind,target,answer\nPER_EDGE,0-1,FWD\nNODE_CHILDREN,2,CHILDREN 0 1\n";
        let mut s = Scripted::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(s.per_edge((0, 1)).unwrap(), EdgeAnswer::Fwd);
        assert!(matches!(s.node_children(3), Err(Error::AnswerMismatch(_))));
        assert!(matches!(s.per_edge((0, 1)), Err(Error::ScriptExhausted(2))));
    }

    #[test]
    fn interactive_reads_names() {
        let input = "sideways\nbwd\nb, c\n";
        let mut out = Vec::new();
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let mut it = Interactive::new(input.as_bytes(), &mut out, names);
        assert_eq!(it.per_edge((0, 1)).unwrap(), EdgeAnswer::Bwd);
        assert_eq!(it.node_children(0).unwrap(), vec![1, 2]);
        assert!(matches!(it.per_edge((0, 2)), Err(Error::Abandoned)));
    }
}
