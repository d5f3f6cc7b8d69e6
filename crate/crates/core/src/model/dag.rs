use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::certificate::CertificateCode;
use crate::model::ids::{pair, Direction, Pair, Provenance};

/// Where a pair currently stands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeStatus {
    Fwd,
    Bwd,
    Dropped,
    Open,
}

impl From<Direction> for EdgeStatus {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Fwd => EdgeStatus::Fwd,
            Direction::Bwd => EdgeStatus::Bwd,
        }
    }
}

/// One candidate pair with its certificate and the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeState {
    pub pair: Pair,
    /// `None` while pending.
    pub certificate: Option<CertificateCode>,
    pub status: EdgeStatus,
    pub provenance: Option<Provenance>,
    pub evidence: BTreeMap<String, f64>,
}

impl EdgeState {
    pub fn pending(pair: Pair) -> Self {
        EdgeState {
            pair,
            certificate: None,
            status: EdgeStatus::Open,
            provenance: None,
            evidence: BTreeMap::new(),
        }
    }

    /// Both state invariants hold.
    pub fn is_consistent(&self) -> bool {
        let provenance_ok = self.status == EdgeStatus::Open || self.provenance.is_some();
        let mediated_ok = self.certificate != Some(CertificateCode::ResolvedMediated)
            || self.status == EdgeStatus::Dropped;
        provenance_ok && mediated_ok
    }
}

/// The growing graph: committed directed edges, dropped pairs, and the open
/// residual. Pairs in none of the three were never candidates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialDag {
    n: usize,
    committed: BTreeSet<(usize, usize)>,
    dropped: BTreeSet<Pair>,
    open: BTreeSet<Pair>,
}

impl PartialDag {
    pub fn empty(n: usize) -> Self {
        PartialDag {
            n,
            committed: BTreeSet::new(),
            dropped: BTreeSet::new(),
            open: BTreeSet::new(),
        }
    }

    /// Every pair open.
    pub fn complete(n: usize) -> Self {
        let mut d = Self::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                d.open.insert((i, j));
            }
        }
        d
    }

    pub fn with_open(n: usize, open: impl IntoIterator<Item = Pair>) -> Self {
        let mut d = Self::empty(n);
        d.open = open.into_iter().map(|(a, b)| pair(a, b)).collect();
        d
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn committed(&self) -> &BTreeSet<(usize, usize)> {
        &self.committed
    }

    pub fn dropped(&self) -> &BTreeSet<Pair> {
        &self.dropped
    }

    /// Open pairs in skeleton (lexicographic) order.
    pub fn open(&self) -> &BTreeSet<Pair> {
        &self.open
    }

    pub fn is_open(&self, p: Pair) -> bool {
        self.open.contains(&pair(p.0, p.1))
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.committed.contains(&(from, to))
    }

    pub fn status(&self, p: Pair) -> Option<EdgeStatus> {
        let p = pair(p.0, p.1);
        if self.committed.contains(&p) {
            Some(EdgeStatus::Fwd)
        } else if self.committed.contains(&(p.1, p.0)) {
            Some(EdgeStatus::Bwd)
        } else if self.dropped.contains(&p) {
            Some(EdgeStatus::Dropped)
        } else if self.open.contains(&p) {
            Some(EdgeStatus::Open)
        } else {
            None
        }
    }

    /// Committed or open, i.e. still possibly an edge.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a) || self.open.contains(&pair(a, b))
    }

    pub fn parents(&self, v: usize) -> Vec<usize> {
        self.committed
            .iter()
            .filter(|e| e.1 == v)
            .map(|e| e.0)
            .collect()
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        self.committed
            .range((v, 0)..(v + 1, 0))
            .map(|e| e.1)
            .collect()
    }

    /// Open partners of `v`, ascending.
    pub fn open_neighbors(&self, v: usize) -> Vec<usize> {
        self.open
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// A committed directed path `from ~> to` exists (length ≥ 1).
    pub fn has_path(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for c in self.children(v) {
                if c == to {
                    return true;
                }
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    /// Commit `from -> to`. The pair must be open.
    pub fn commit(&mut self, from: usize, to: usize) -> Result<()> {
        let p = pair(from, to);
        if !self.open.contains(&p) {
            return Err(Error::InvalidConfig(format!("pair {p:?} is not open")));
        }
        if from == to || self.has_path(to, from) {
            return Err(Error::InconsistentAnswer { pair: p });
        }
        self.open.remove(&p);
        self.committed.insert((from, to));
        debug_assert!(assert_acyclic(self));
        Ok(())
    }

    /// Drop an open pair.
    pub fn drop_pair(&mut self, p: Pair) -> Result<()> {
        let p = pair(p.0, p.1);
        if !self.open.remove(&p) {
            return Err(Error::InvalidConfig(format!("pair {p:?} is not open")));
        }
        self.dropped.insert(p);
        Ok(())
    }

    /// Move a committed edge back to open.
    pub fn demote(&mut self, p: Pair) -> Result<()> {
        let p = pair(p.0, p.1);
        if !(self.committed.remove(&p) || self.committed.remove(&(p.1, p.0))) {
            return Err(Error::InvalidConfig(format!("pair {p:?} is not committed")));
        }
        self.open.insert(p);
        Ok(())
    }

    /// Add a new open candidate (missing-edge recovery).
    pub fn reopen(&mut self, p: Pair) -> Result<()> {
        let p = pair(p.0, p.1);
        if self.status(p).is_some_and(|s| s != EdgeStatus::Dropped) {
            return Err(Error::InvalidConfig(format!("pair {p:?} is already live")));
        }
        self.dropped.remove(&p);
        self.open.insert(p);
        Ok(())
    }

    /// Committed, dropped and open are pairwise disjoint over unordered pairs.
    pub fn is_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        for &(a, b) in &self.committed {
            if !seen.insert(pair(a, b)) {
                return false;
            }
        }
        self.dropped
            .iter()
            .chain(&self.open)
            .all(|p| seen.insert(*p))
    }
}

/// True iff the committed edges contain no directed cycle (Kahn, O(V+E)).
pub fn assert_acyclic(dag: &PartialDag) -> bool {
    let n = dag.n;
    let mut indeg = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &dag.committed {
        if a >= n || b >= n {
            return false;
        }
        indeg[b] += 1;
        out[a].push(b);
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut visited = 0;
    while let Some(v) = queue.pop_front() {
        visited += 1;
        for &c in &out[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    visited == n
}

impl PartialDag {
    /// Build from raw parts; used for tests and oracles. Fails on overlap.
    pub fn from_parts(
        n: usize,
        committed: impl IntoIterator<Item = (usize, usize)>,
        dropped: impl IntoIterator<Item = Pair>,
        open: impl IntoIterator<Item = Pair>,
    ) -> Result<Self> {
        let d = PartialDag {
            n,
            committed: committed.into_iter().collect(),
            dropped: dropped.into_iter().map(|(a, b)| pair(a, b)).collect(),
            open: open.into_iter().map(|(a, b)| pair(a, b)).collect(),
        };
        if !d.is_disjoint() {
            return Err(Error::InvalidConfig("overlapping pair states".into()));
        }
        Ok(d)
    }
}
