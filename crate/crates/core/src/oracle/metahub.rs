//! Pure meta-hub + node-children protocol: one hub query, then one
//! children query per hub. No data is consulted.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{pair, Action, Direction, Mechanism, PartialDag, Provenance, Trace, TraceEvent};
use crate::oracle::OracleBackend;

#[derive(Debug, Clone)]
pub struct MetahubRun {
    pub dag: PartialDag,
    pub edges: BTreeSet<(usize, usize)>,
    pub queries: usize,
    pub trace: Trace,
}

/// Run the protocol on `n` vertices. `k` defaults to the backend's known
/// non-leaf count.
pub fn run_pure_metahub(
    n: usize,
    backend: &mut dyn OracleBackend,
    k: Option<usize>,
) -> Result<MetahubRun> {
    let k = k
        .or_else(|| backend.known_k())
        .ok_or_else(|| Error::InvalidConfig("meta-hub k unknown: supply metahub_k".into()))?;
    let hub_mech = Provenance::Mechanism(Mechanism::META_HUB);
    let child_mech = Provenance::Mechanism(Mechanism::NODE_CHILDREN);
    let mut trace = Trace::default();
    let mut dag = PartialDag::complete(n);
    let mut round = 3;

    trace.push(
        TraceEvent::new(round, hub_mech, None, Action::Query)
            .detail(format!("META_HUB {k}"))
            .bits(1.0),
    );
    let hubs = backend.meta_hub(k)?;
    let distinct: BTreeSet<usize> = hubs.iter().copied().collect();
    if hubs.len() != k || distinct.len() != k || hubs.iter().any(|&h| h >= n) {
        return Err(Error::AnswerMismatch(format!(
            "meta-hub answer must list {k} distinct vertices, got {hubs:?}"
        )));
    }
    trace.push(
        TraceEvent::new(round, hub_mech, None, Action::Answer)
            .detail(crate::oracle::OracleAnswer::Hubs(hubs.clone()).to_string()),
    );
    let mut queries = 1;
    let mut edges = BTreeSet::new();
    for &h in &hubs {
        round += 1;
        trace.push(
            TraceEvent::new(round, child_mech, None, Action::Query)
                .detail(format!("NODE_CHILDREN {h}"))
                .bits(1.0),
        );
        let mut kids = backend.node_children(h)?;
        kids.sort_unstable();
        kids.dedup();
        queries += 1;
        let mut ev = TraceEvent::new(round, child_mech, None, Action::Answer)
            .detail(crate::oracle::OracleAnswer::Children(kids.clone()).to_string());
        ev.edge_i = Some(h);
        trace.push(ev);
        for c in kids {
            if c == h || c >= n {
                return Err(Error::AnswerMismatch(format!("invalid child {c} of {h}")));
            }
            dag.commit(h, c)?;
            edges.insert((h, c));
            trace.push(TraceEvent::new(
                round,
                child_mech,
                Some(pair(h, c)),
                Action::commit(Direction::of(h, c)),
            ));
        }
    }
    // Everything not named is absent: non-hubs have no children.
    let rest: Vec<_> = dag.open().iter().copied().collect();
    for p in rest {
        dag.drop_pair(p)?;
        trace.push(TraceEvent::new(round, child_mech, Some(p), Action::Drop));
    }
    Ok(MetahubRun {
        dag,
        edges,
        queries,
        trace,
    })
}

/// `ImperfectOracle` unless `edges` equals `truth` exactly.
pub fn verify_exact(
    edges: &BTreeSet<(usize, usize)>,
    truth: &BTreeSet<(usize, usize)>,
) -> Result<()> {
    if edges == truth {
        return Ok(());
    }
    let missing: Vec<_> = truth.difference(edges).collect();
    let extra: Vec<_> = edges.difference(truth).collect();
    Err(Error::ImperfectOracle(format!("missing {missing:?}, extra {extra:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::GroundTruth;

    #[test]
    fn single_vertex_needs_one_query() {
        let mut gt = GroundTruth::new(1, []);
        let r = run_pure_metahub(1, &mut gt, None).unwrap();
        assert_eq!(r.queries, 1);
        assert!(r.edges.is_empty());
    }

    #[test]
    fn recovers_small_dag() {
        let truth = [(0, 2), (1, 2), (2, 3), (0, 3)];
        let mut gt = GroundTruth::new(4, truth);
        let r = run_pure_metahub(4, &mut gt, None).unwrap();
        assert_eq!(r.queries, 1 + 3);
        verify_exact(&r.edges, gt.edges()).unwrap();
        assert_eq!(r.trace.reconstruct(4).unwrap(), r.dag);
        assert!(r.dag.open().is_empty());
    }

    #[test]
    fn short_hub_list_is_detected() {
        let truth = [(0, 1), (1, 2)];
        let mut gt = GroundTruth::new(3, truth);
        let r = run_pure_metahub(3, &mut gt, Some(1)).unwrap();
        assert!(matches!(verify_exact(&r.edges, gt.edges()), Err(Error::ImperfectOracle(_))));
    }
}
