//! The iterative protocol as a step machine: construction runs the
//! data-only rounds, then `next_query` / `apply_answer` alternate until no
//! open pair remains. Batch runs, the session service and trace replay all
//! drive the same machine.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::Analysis;
use crate::cascade::{run_cascade, CascadeVerdict, Final};
use crate::error::{Error, Result};
use crate::model::{
    pair, Action, CertificateCode, Config, Dataset, Direction, EdgeState, EdgeStatus, Mechanism,
    OracleMode, Pair, PartialDag, Provenance, Tier, Trace, TraceEvent, ValueStrategy,
};
use crate::oracle::templates::{self, edge_question, render};
use crate::oracle::{
    EdgeAnswer, OracleAnswer, OracleBackend, OracleQuery, QueryKind, Scripted,
};
use crate::propagation::{auto_resolve, closure, PropagationReport, Rule};
use crate::skeleton::{build_skeleton, mediator_search, MediatorVerdict, Skeleton};

const ROUND_AUDIT: u32 = 1;
const ROUND_PROPAGATION: u32 = 2;

fn mech(m: Mechanism) -> Provenance {
    Provenance::Mechanism(m)
}

/// Selection-time info value against what the answer actually resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeCheck {
    pub edge: Pair,
    pub info_value: f64,
    pub derived: usize,
}

impl GuaranteeCheck {
    pub fn holds(&self) -> bool {
        self.derived as f64 >= self.info_value
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnswerOutcome {
    pub query: OracleQuery,
    pub answer: OracleAnswer,
    pub report: PropagationReport,
    pub guarantee: Option<GuaranteeCheck>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub dag: PartialDag,
    pub trace: Trace,
    pub queries: usize,
    pub guarantee: Vec<GuaranteeCheck>,
    pub certificates: BTreeMap<Pair, CertificateCode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Main,
    Recovery,
    Done,
}

pub struct Protocol {
    a: Analysis,
    skeleton: Option<Skeleton>,
    mediated: BTreeMap<Pair, MediatorVerdict>,
    verdicts: BTreeMap<Pair, CascadeVerdict>,
    certificates: BTreeMap<Pair, CertificateCode>,
    dag: PartialDag,
    trace: Trace,
    round: u32,
    queries: usize,
    next_id: u64,
    pending: Option<OracleQuery>,
    k_hint: Option<usize>,
    hubs: Option<Vec<usize>>,
    asked_children: BTreeSet<usize>,
    excluded: BTreeSet<(usize, usize)>,
    recovery: VecDeque<Pair>,
    phase: Phase,
    gated_logged: BTreeSet<(usize, usize, Rule)>,
    guarantee: Vec<GuaranteeCheck>,
    warnings: Vec<String>,
}

impl Protocol {
    /// Run the data-only rounds: skeleton, mediators and cascade, then
    /// propagation.
    pub fn new(data: Arc<Dataset>, config: Arc<Config>) -> Result<Self> {
        config.validate()?;
        let n = data.n_vars();
        let mut warnings = Vec::new();
        if let Some(w) = data.sample_size_warning(config.min_samples) {
            warnings.push(w);
        }
        let mut p = Protocol {
            a: Analysis::shared(data, config),
            skeleton: None,
            mediated: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            certificates: BTreeMap::new(),
            dag: PartialDag::complete(n),
            trace: Trace::default(),
            round: ROUND_PROPAGATION,
            queries: 0,
            next_id: 1,
            pending: None,
            k_hint: None,
            hubs: None,
            asked_children: BTreeSet::new(),
            excluded: BTreeSet::new(),
            recovery: VecDeque::new(),
            phase: Phase::Main,
            gated_logged: BTreeSet::new(),
            guarantee: Vec::new(),
            warnings,
        };
        if p.a.config.cascade_enabled {
            p.audit()?;
        }
        let report = auto_resolve(&mut p.dag, &p.a);
        p.log_report(ROUND_PROPAGATION, &report);
        Ok(p)
    }

    pub fn config(&self) -> &Config {
        &self.a.config
    }

    pub fn data(&self) -> &Dataset {
        &self.a.data
    }

    pub fn analysis(&self) -> &Analysis {
        &self.a
    }

    pub fn dag(&self) -> &PartialDag {
        &self.dag
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn skeleton(&self) -> Option<&Skeleton> {
        self.skeleton.as_ref()
    }

    pub fn mediated(&self) -> &BTreeMap<Pair, MediatorVerdict> {
        &self.mediated
    }

    pub fn verdicts(&self) -> &BTreeMap<Pair, CascadeVerdict> {
        &self.verdicts
    }

    pub fn certificates(&self) -> &BTreeMap<Pair, CertificateCode> {
        &self.certificates
    }

    pub fn certificate(&self, p: Pair) -> CertificateCode {
        self.certificates
            .get(&p)
            .copied()
            .unwrap_or(CertificateCode::ImpossibleAmbiguous)
    }

    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn pending(&self) -> Option<&OracleQuery> {
        self.pending.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn guarantee(&self) -> &[GuaranteeCheck] {
        &self.guarantee
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Hub count used when the configuration leaves it unset.
    pub fn set_metahub_hint(&mut self, k: Option<usize>) {
        self.k_hint = k;
    }

    /// Every candidate pair (skeleton order) with its current state. The
    /// provenance is the last mutation recorded for the pair.
    pub fn edge_states(&self) -> Vec<EdgeState> {
        let pairs: Vec<Pair> = match &self.skeleton {
            Some(s) => s.marginal_p.keys().copied().filter(|&p| s.contains(p)).collect(),
            None => {
                let n = self.a.n_vars();
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
            }
        };
        let mut last: BTreeMap<Pair, Provenance> = BTreeMap::new();
        for e in &self.trace.events {
            if let (Some(p), true) = (e.edge(), e.action.is_mutation()) {
                last.insert(p, e.mechanism);
            }
        }
        pairs
            .into_iter()
            .map(|p| {
                let status = self.dag.status(p).unwrap_or(EdgeStatus::Dropped);
                EdgeState {
                    pair: p,
                    certificate: self.certificates.get(&p).copied(),
                    status,
                    provenance: if status == EdgeStatus::Open { None } else { last.get(&p).copied() },
                    evidence: self.verdicts.get(&p).map(|v| v.evidence()).unwrap_or_default(),
                }
            })
            .collect()
    }

    pub fn result(&self) -> RunResult {
        RunResult {
            dag: self.dag.clone(),
            trace: self.trace.clone(),
            queries: self.queries,
            guarantee: self.guarantee.clone(),
            certificates: self.certificates.clone(),
        }
    }

    fn push(&mut self, e: TraceEvent) {
        self.trace.push(e);
    }

    fn audit(&mut self) -> Result<()> {
        let skel = build_skeleton(&self.a);
        for (&p, &pv) in &skel.marginal_p {
            if !skel.contains(p) {
                self.dag.drop_pair(p)?;
                self.push(
                    TraceEvent::new(ROUND_AUDIT, mech(Mechanism::SKELETON), Some(p), Action::Drop)
                        .detail(format!("p={pv:.4}")),
                );
            }
        }
        let mediated = mediator_search(&skel, &self.a);
        for (&p, m) in &mediated {
            self.dag.drop_pair(p)?;
            self.certificates.insert(p, CertificateCode::ResolvedMediated);
            let by: Vec<String> = m.mediated_by.iter().map(|&v| v.to_string()).collect();
            self.push(
                TraceEvent::new(ROUND_AUDIT, mech(Mechanism::MEDIATOR), Some(p), Action::Drop)
                    .detail(format!("tier={};by={};p={:.4}", m.tier, by.join(" "), m.p_conditional)),
            );
        }
        for &p in &skel.pairs {
            if mediated.contains_key(&p) {
                continue;
            }
            let v = run_cascade(&self.a, p);
            self.log_verdict(&v)?;
            self.verdicts.insert(p, v);
        }
        self.skeleton = Some(skel);
        self.mediated = mediated;
        Ok(())
    }

    fn log_verdict(&mut self, v: &CascadeVerdict) -> Result<()> {
        let p = v.pair;
        let ps = |t: Tier| {
            v.decision(t).map(|d| {
                let f = d.score("p_fwd").unwrap_or(f64::NAN);
                let b = d.score("p_bwd").unwrap_or(f64::NAN);
                format!("p_fwd={f:.4};p_bwd={b:.4}")
            })
        };
        if let Some((dir, dissent)) = v.demoted {
            let (from, to) = dir.orient(p);
            self.push(
                TraceEvent::new(ROUND_AUDIT, Provenance::Tier(Tier::L0), Some(p), Action::commit(dir))
                    .detail(ps(Tier::L0).unwrap_or_default()),
            );
            self.dag.commit(from, to)?;
            self.dag.demote(p)?;
            self.push(
                TraceEvent::new(ROUND_AUDIT, mech(Mechanism::GUARD), Some(p), Action::Demote)
                    .detail(format!("dissent={dissent}")),
            );
        }
        match (v.final_, v.committed_by) {
            (Final::Fwd | Final::Bwd, Some(t)) => {
                let dir = v.direction().expect("resolved verdict has a direction");
                let (from, to) = dir.orient(p);
                if self.dag.commit(from, to).is_ok() {
                    self.certificates.insert(p, CertificateCode::ResolvedDecisive);
                    let detail = ps(t).unwrap_or_else(|| scores_detail(v, t));
                    self.push(
                        TraceEvent::new(ROUND_AUDIT, Provenance::Tier(t), Some(p), Action::commit(dir))
                            .detail(detail),
                    );
                    return Ok(());
                }
                // would close a cycle with earlier commits
                self.certificates.insert(p, CertificateCode::ImpossibleAmbiguous);
                self.push(
                    TraceEvent::new(ROUND_AUDIT, mech(Mechanism::CLASSICAL_CODES), Some(p), Action::Abstain)
                        .detail(format!("{};cycle_with={t}", CertificateCode::ImpossibleAmbiguous.as_str())),
                );
            }
            _ => {
                let code = v.certificate;
                self.certificates.insert(p, code);
                let m = if matches!(
                    code,
                    CertificateCode::ImpossibleCircular
                        | CertificateCode::ImpossibleBinaryContinuous
                        | CertificateCode::ImpossibleCount
                        | CertificateCode::ImpossibleHighCardinalityDiscrete
                        | CertificateCode::ImpossibleL0DisagreesWithHighTier
                ) {
                    Mechanism::REGIME_CODES
                } else {
                    Mechanism::CLASSICAL_CODES
                };
                self.push(
                    TraceEvent::new(ROUND_AUDIT, mech(m), Some(p), Action::Abstain).detail(code.as_str()),
                );
            }
        }
        Ok(())
    }

    fn log_report(&mut self, round: u32, r: &PropagationReport) {
        for c in &r.new_commits {
            let m = match c.rule {
                Rule::Reaudit => Mechanism::REAUDIT,
                Rule::TransitiveDsep => Mechanism::TRANSITIVE_DSEP,
                _ => Mechanism::PROPAGATION,
            };
            let detail = if c.detail.is_empty() {
                c.rule.as_str().to_string()
            } else {
                format!("{};{}", c.rule.as_str(), c.detail)
            };
            self.push(
                TraceEvent::new(round, mech(m), Some(pair(c.from, c.to)), Action::commit(Direction::of(c.from, c.to)))
                    .detail(detail),
            );
        }
        for &(p, pv) in &r.dropped {
            self.push(
                TraceEvent::new(round, mech(Mechanism::TRANSITIVE_DSEP), Some(p), Action::Drop)
                    .detail(format!("p={pv:.4}")),
            );
        }
        for g in &r.gated {
            if self.dag.is_open(pair(g.from, g.to)) && self.gated_logged.insert((g.from, g.to, g.rule)) {
                self.push(
                    TraceEvent::new(round, mech(Mechanism::PROPAGATION), Some(pair(g.from, g.to)), Action::Abstain)
                        .detail(format!("{};{}->{};ratio={:.3}", g.rule.as_str(), g.from, g.to, g.ratio)),
                );
            }
        }
    }

    /// Worst-case (or mean) count of resolutions that follow committing `p`.
    pub fn info_value(&self, p: Pair) -> f64 {
        let count = |from: usize, to: usize| {
            let mut d = self.dag.clone();
            if d.commit(from, to).is_err() {
                return 0;
            }
            closure(&mut d, &self.a).resolutions()
        };
        let f = count(p.0, p.1);
        let b = count(p.1, p.0);
        match self.a.config.value_strategy {
            ValueStrategy::Min => f.min(b) as f64,
            ValueStrategy::Expected => (f + b) as f64 / 2.0,
        }
    }

    /// Open pair with the highest info value; ties go to skeleton order.
    pub fn best_edge(&self) -> Option<(Pair, f64)> {
        let mut best: Option<(Pair, f64)> = None;
        for &p in self.dag.open() {
            let v = self.info_value(p);
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((p, v));
            }
        }
        best
    }

    fn edge_vars(&self, p: Pair) -> BTreeMap<&'static str, String> {
        let mut vars = BTreeMap::new();
        vars.insert("x", self.a.data.name(p.0).to_string());
        vars.insert("y", self.a.data.name(p.1).to_string());
        vars.insert("alpha", format!("{}", self.a.config.alpha_residual));
        if let Some(v) = self.verdicts.get(&p) {
            if let Some(d) = v.decision(Tier::L1) {
                let m = d.score("p_fwd").unwrap_or(0.0).max(d.score("p_bwd").unwrap_or(0.0));
                vars.insert("max_p", format!("{m:.2}"));
            }
            if let Some(s) = v.decision(Tier::L2).and_then(|d| d.score("hoc")) {
                vars.insert("hoc", format!("{s:.3}"));
            }
            if let Some((dir, t)) = v.demoted {
                let (a, b) = dir.orient(p);
                vars.insert("l0_dir", format!("{} -> {}", self.a.data.name(a), self.a.data.name(b)));
                vars.insert("dissent", t.to_string());
            }
        }
        vars
    }

    fn edge_query(&mut self, p: Pair, value: Option<f64>, missing: bool) -> OracleQuery {
        let vars = self.edge_vars(p);
        let (code, text) = if missing {
            let t = format!(
                "{} Direction: FWD ({{x}} -> {{y}}) / BWD ({{y}} -> {{x}}) / ABSENT?",
                templates::MISSING_EDGE_TEMPLATE
            );
            (None, render(&t, &vars))
        } else {
            let code = self.certificate(p);
            (Some(code), edge_question(code, &vars))
        };
        OracleQuery {
            id: 0,
            kind: QueryKind::PerEdge,
            edge: Some(p),
            node: None,
            k: None,
            certificate: code,
            info_value: value,
            question_text: text,
        }
    }

    fn hub_query(&self) -> OracleQuery {
        let n = self.a.n_vars();
        let k = self.a.config.metahub_k.or(self.k_hint).unwrap_or(n).min(n);
        OracleQuery {
            id: 0,
            kind: QueryKind::MetaHub,
            edge: None,
            node: None,
            k: Some(k),
            certificate: None,
            info_value: None,
            question_text: render(
                templates::META_HUB_TEMPLATE,
                &[("k", k.to_string())].into_iter().collect(),
            ),
        }
    }

    fn children_query(&self, v: usize) -> OracleQuery {
        OracleQuery {
            id: 0,
            kind: QueryKind::NodeChildren,
            edge: None,
            node: Some(v),
            k: None,
            certificate: None,
            info_value: None,
            question_text: render(
                templates::NODE_CHILDREN_TEMPLATE,
                &[("v", self.a.data.name(v).to_string())].into_iter().collect(),
            ),
        }
    }

    /// Does `v` still have an open pair whose outgoing side is undecided?
    fn has_open_out(&self, v: usize) -> bool {
        self.dag
            .open()
            .iter()
            .any(|&(a, b)| (a == v && !self.excluded.contains(&(v, b))) || (b == v && !self.excluded.contains(&(v, a))))
    }

    fn next_main(&mut self) -> Option<OracleQuery> {
        let mode = self.a.config.oracle_mode;
        if mode != OracleMode::PerEdge {
            let Some(hubs) = self.hubs.clone() else {
                return Some(self.hub_query());
            };
            let next = hubs
                .iter()
                .copied()
                .find(|&h| !self.asked_children.contains(&h) && self.has_open_out(h));
            if let Some(h) = next {
                return Some(self.children_query(h));
            }
            if mode == OracleMode::MetahubChildren {
                // the hub list names every vertex with children
                let rest: Vec<Pair> = self.dag.open().iter().copied().collect();
                for p in rest {
                    self.dag.drop_pair(p).expect("open pair");
                    self.push(
                        TraceEvent::new(self.round, mech(Mechanism::META_HUB), Some(p), Action::Drop)
                            .detail("no hub endpoint"),
                    );
                }
                return None;
            }
        }
        let (p, v) = self.best_edge()?;
        Some(self.edge_query(p, Some(v), false))
    }

    fn start_recovery(&mut self) {
        let cfg = &self.a.config.recovery;
        let Some(skel) = &self.skeleton else {
            return;
        };
        if !cfg.enabled {
            return;
        }
        let mut cands: Vec<Pair> = skel
            .marginal_p
            .iter()
            .filter(|(p, pv)| !skel.contains(**p) && cfg.marginal_p.is_none_or(|t| **pv < t))
            .map(|(p, _)| *p)
            .collect();
        if cfg.degree_priority {
            let deg = |v: usize| self.dag.parents(v).len() + self.dag.children(v).len();
            cands.sort_by_key(|&(a, b)| (std::cmp::Reverse(deg(a) + deg(b)), (a, b)));
        }
        self.recovery = cands.into();
    }

    fn next_recovery(&mut self) -> Option<OracleQuery> {
        let reach = self.a.config.recovery.reachability;
        while let Some(p) = self.recovery.pop_front() {
            if self.dag.status(p) != Some(crate::model::EdgeStatus::Dropped) {
                continue;
            }
            if reach && (self.dag.has_path(p.0, p.1) || self.dag.has_path(p.1, p.0)) {
                continue;
            }
            return Some(self.edge_query(p, None, true));
        }
        None
    }

    /// The pending query, or a new one; `None` once the run is complete.
    pub fn next_query(&mut self) -> Option<OracleQuery> {
        if let Some(q) = &self.pending {
            return Some(q.clone());
        }
        let mut q = loop {
            match self.phase {
                Phase::Main => match self.next_main() {
                    Some(q) => break q,
                    None => {
                        self.phase = Phase::Recovery;
                        self.start_recovery();
                    }
                },
                Phase::Recovery => match self.next_recovery() {
                    Some(q) => break q,
                    None => self.phase = Phase::Done,
                },
                Phase::Done => return None,
            }
        };
        q.id = self.next_id;
        self.next_id += 1;
        self.round += 1;
        let m = self.query_mechanism(&q);
        let mut detail = format!("{} {}", q.kind.as_str(), super::query_target(&q));
        if let Some(v) = q.info_value {
            detail.push_str(&format!(";value={v}"));
        }
        if let Some(c) = q.certificate {
            detail.push_str(&format!(";code={}", c.as_str()));
        }
        let mut ev = TraceEvent::new(self.round, mech(m), q.edge, Action::Query)
            .detail(detail)
            .bits(1.0);
        ev.edge_i = ev.edge_i.or(q.node);
        self.push(ev);
        self.pending = Some(q.clone());
        Some(q)
    }

    fn query_mechanism(&self, q: &OracleQuery) -> Mechanism {
        match q.kind {
            QueryKind::MetaHub => Mechanism::META_HUB,
            QueryKind::NodeChildren => Mechanism::NODE_CHILDREN,
            QueryKind::PerEdge if self.phase == Phase::Recovery => Mechanism::MISSING_EDGE,
            QueryKind::PerEdge => Mechanism::PER_EDGE,
        }
    }

    /// Apply the answer to the pending query `id`, then auto-resolve.
    pub fn apply_answer(&mut self, id: u64, answer: OracleAnswer) -> Result<AnswerOutcome> {
        let q = self.pending.clone().ok_or_else(|| {
            Error::AnswerMismatch("no query is pending".into())
        })?;
        if q.id != id {
            return Err(Error::StaleQuery { expected: q.id, got: id });
        }
        if answer.kind() != q.kind {
            return Err(Error::AnswerMismatch(format!(
                "{} query answered with {answer}",
                q.kind.as_str()
            )));
        }
        let m = mech(self.query_mechanism(&q));
        let round = self.round;
        let mut events = Vec::new();
        let mut dag = self.dag.clone();
        let mut answer = answer;
        match &mut answer {
            OracleAnswer::Edge(e) => {
                let p = q.edge.expect("per-edge query has an edge");
                match e {
                    EdgeAnswer::Fwd | EdgeAnswer::Bwd => {
                        let dir = if *e == EdgeAnswer::Fwd { Direction::Fwd } else { Direction::Bwd };
                        let (from, to) = dir.orient(p);
                        if dag.status(p) == Some(crate::model::EdgeStatus::Dropped) {
                            dag.reopen(p)?;
                        }
                        dag.commit(from, to)?;
                        events.push(TraceEvent::new(round, m, Some(p), Action::commit(dir)));
                    }
                    EdgeAnswer::Absent | EdgeAnswer::Unknown => {
                        if dag.is_open(p) {
                            dag.drop_pair(p)?;
                            events.push(TraceEvent::new(round, m, Some(p), Action::Drop));
                        }
                    }
                }
            }
            OracleAnswer::Hubs(hubs) => {
                let k = q.k.unwrap_or(0);
                let n = self.a.n_vars();
                let distinct: BTreeSet<usize> = hubs.iter().copied().collect();
                if hubs.len() != k || distinct.len() != k || hubs.iter().any(|&h| h >= n) {
                    return Err(Error::AnswerMismatch(format!(
                        "meta-hub answer must list {k} distinct vertices"
                    )));
                }
                self.hubs = Some(hubs.clone());
            }
            OracleAnswer::Children(kids) => {
                let v = q.node.expect("children query has a node");
                kids.sort_unstable();
                kids.dedup();
                if kids.iter().any(|&c| c == v || c >= self.a.n_vars()) {
                    return Err(Error::AnswerMismatch(format!("invalid children of {v}")));
                }
                for &c in kids.iter() {
                    let p = pair(v, c);
                    if dag.is_open(p) {
                        dag.commit(v, c)?;
                        events.push(TraceEvent::new(round, m, Some(p), Action::commit(Direction::of(v, c))));
                    }
                }
                let others: Vec<usize> = dag
                    .open_neighbors(v)
                    .into_iter()
                    .filter(|u| !kids.contains(u))
                    .collect();
                for u in others {
                    self.excluded.insert((v, u));
                    if self.excluded.contains(&(u, v)) {
                        dag.drop_pair(pair(u, v))?;
                        events.push(TraceEvent::new(round, m, Some(pair(u, v)), Action::Drop));
                    }
                }
                self.asked_children.insert(v);
            }
        }
        // the answer is accepted: record it, then propagate
        let mut ev = TraceEvent::new(round, m, q.edge, Action::Answer).detail(answer.to_string());
        ev.edge_i = ev.edge_i.or(q.node);
        self.push(ev);
        for e in events {
            self.push(e);
        }
        self.dag = dag;
        self.pending = None;
        self.queries += 1;
        let report = auto_resolve(&mut self.dag, &self.a);
        self.log_report(round, &report);
        let guarantee = match (&answer, q.info_value, q.edge) {
            (OracleAnswer::Edge(EdgeAnswer::Fwd | EdgeAnswer::Bwd), Some(v), Some(p)) => {
                let g = GuaranteeCheck {
                    edge: p,
                    info_value: v,
                    derived: report.resolutions(),
                };
                self.guarantee.push(g);
                Some(g)
            }
            _ => None,
        };
        Ok(AnswerOutcome {
            query: q,
            answer,
            report,
            guarantee,
        })
    }

    /// Ask `backend` until the run completes.
    pub fn drive(&mut self, backend: &mut dyn OracleBackend) -> Result<()> {
        while let Some(q) = self.next_query() {
            let a = backend.answer(&q)?;
            self.apply_answer(q.id, a)?;
        }
        Ok(())
    }
}

fn scores_detail(v: &CascadeVerdict, t: Tier) -> String {
    v.decision(t)
        .map(|d| {
            d.scores
                .iter()
                .map(|(k, x)| format!("{k}={x:.4}"))
                .collect::<Vec<_>>()
                .join(";")
        })
        .unwrap_or_default()
}

/// Full iterative run against `backend`.
pub fn run_iterative(
    data: &Dataset,
    config: &Config,
    backend: &mut dyn OracleBackend,
) -> Result<RunResult> {
    let mut p = Protocol::new(Arc::new(data.clone()), Arc::new(config.clone()))?;
    p.set_metahub_hint(backend.known_k());
    p.drive(backend)?;
    Ok(p.result())
}

/// Re-run the protocol with the answers recorded in `trace` and check that
/// every event is reproduced. A trace cut short (even mid-query) replays to
/// its last answer; the returned protocol continues from there.
pub fn replay(data: Arc<Dataset>, config: Arc<Config>, trace: &Trace) -> Result<Protocol> {
    let mut script = Scripted::from_trace(trace)?;
    let mut p = Protocol::new(data, config)?;
    let hint = trace
        .events
        .iter()
        .find(|e| e.action == Action::Query && e.detail.starts_with("META_HUB "))
        .and_then(|e| e.detail.split([' ', ';']).nth(1)?.parse().ok());
    p.set_metahub_hint(hint);
    while script.remaining() > 0 {
        let Some(q) = p.next_query() else {
            return Err(Error::TraceMismatch {
                index: p.trace.len(),
                reason: format!("{} recorded answers left after the run finished", script.remaining()),
            });
        };
        let a = script.answer(&q).map_err(|e| Error::TraceMismatch {
            index: p.trace.len(),
            reason: e.to_string(),
        })?;
        p.apply_answer(q.id, a)?;
    }
    // a trailing unanswered query is part of the recorded state
    if trace.events.last().is_some_and(|e| e.action == Action::Query) {
        p.next_query();
    }
    let got = &p.trace.events;
    for (k, want) in trace.events.iter().enumerate() {
        match got.get(k) {
            Some(e) if e == want => {}
            Some(e) => {
                return Err(Error::TraceMismatch {
                    index: k,
                    reason: format!("recorded {want:?}, replay produced {e:?}"),
                })
            }
            None => {
                return Err(Error::TraceMismatch {
                    index: k,
                    reason: "replay ended early".into(),
                })
            }
        }
    }
    if got.len() != trace.len() {
        return Err(Error::TraceMismatch {
            index: trace.len(),
            reason: format!("replay produced {} extra events", got.len() - trace.len()),
        });
    }
    let rebuilt = trace.reconstruct(p.data().n_vars())?;
    if rebuilt != p.dag {
        return Err(Error::TraceMismatch {
            index: trace.len(),
            reason: "reconstructed graph differs from the replayed graph".into(),
        });
    }
    Ok(p)
}
