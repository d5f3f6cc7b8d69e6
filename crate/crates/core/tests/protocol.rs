mod common;

use std::sync::Arc;

use edgecert::model::{Action, Config, OracleMode, Tier};
use edgecert::oracle::{
    replay, run_iterative, EdgeAnswer, GroundTruth, OracleAnswer, OracleBackend, Protocol, QueryKind,
    Scripted,
};
use edgecert::synth::{evaluate, evaluate_run};
use edgecert::Error;

use common::fixture;

fn protocol(name: &str, cfg: Config) -> (Protocol, GroundTruth, common_gt::Gt) {
    let f = fixture(name);
    let gt = GroundTruth::new(f.data.n_vars(), f.gt.iter().copied());
    let p = Protocol::new(Arc::new(f.data), Arc::new(cfg)).unwrap();
    (p, gt, f.gt)
}

mod common_gt {
    pub type Gt = std::collections::BTreeSet<(usize, usize)>;
}

#[test]
fn asia_walkthrough_ends_at_six_correct_commits() {
    let (mut p, mut gt, truth) = protocol("asia_golden", Config::default());
    let after_audit = evaluate(p.dag(), &truth);
    assert_eq!(after_audit.committed, 3);
    assert_eq!(after_audit.precision, 1.0);
    assert_eq!(p.dag().open().len(), 3);

    let mut answers = Vec::new();
    while let Some(q) = p.next_query() {
        assert_eq!(q.kind, QueryKind::PerEdge);
        assert!(q.question_text.contains("Direction: FWD"));
        let a = gt.answer(&q).unwrap();
        answers.push(a.to_string());
        p.apply_answer(q.id, a).unwrap();
    }
    assert_eq!(answers, ["FWD", "FWD", "FWD"]);
    let r = evaluate_run(p.dag(), &truth, p.trace());
    assert_eq!((r.committed, r.correct, r.queries), (6, 6, 3));
    assert_eq!((r.precision, r.recall), (1.0, 0.75));
    assert!(p.guarantee().iter().all(|g| g.holds()));
}

#[test]
fn asia_audit_certificates() {
    let (p, _, _) = protocol("asia_golden", Config::default());
    let open: Vec<_> = p.dag().open().iter().copied().collect();
    for e in open {
        let code = p.certificate(e);
        assert!(code.is_impossible(), "{e:?} {code:?}");
    }
    let q = p.trace().events.iter().filter(|e| e.action == Action::Query).count();
    assert_eq!(q, 0);
}

#[test]
fn info_value_guarantee_holds_with_anm_tiers_only() {
    let cfg = Config::default().with_tiers(&[Tier::L0, Tier::L1]);
    let (mut p, mut gt, _) = protocol("sachs_obs", cfg);
    p.drive(&mut gt).unwrap();
    assert!(!p.guarantee().is_empty());
    for g in p.guarantee() {
        assert!(g.holds(), "{g:?}");
    }
}

#[test]
fn repeated_runs_give_identical_traces_and_replay() {
    let f = fixture("asia_golden");
    let cfg = Config::default();
    let run = |f: &edgecert::synth::LoadedFixture| {
        let mut gt = GroundTruth::new(f.data.n_vars(), f.gt.iter().copied());
        run_iterative(&f.data, &cfg, &mut gt).unwrap()
    };
    let a = run(&f);
    let b = run(&f);
    assert_eq!(a.trace.to_csv_string(), b.trace.to_csv_string());
    assert_eq!(a.trace.reconstruct(8).unwrap(), a.dag);

    let back = edgecert::model::Trace::read_csv(a.trace.to_csv_string().as_bytes()).unwrap();
    let p = replay(Arc::new(f.data.clone()), Arc::new(cfg.clone()), &back).unwrap();
    assert_eq!(p.dag(), &a.dag);
    assert!(p.is_done() || p.dag().open().is_empty());
}

#[test]
fn replay_rejects_a_tampered_answer() {
    let f = fixture("asia_golden");
    let cfg = Config::default();
    let mut gt = GroundTruth::new(8, f.gt.iter().copied());
    let r = run_iterative(&f.data, &cfg, &mut gt).unwrap();
    let mut t = r.trace.clone();
    let ans = t.events.iter_mut().find(|e| e.action == Action::Answer).unwrap();
    ans.detail = "BWD".into();
    assert!(replay(Arc::new(f.data), Arc::new(cfg), &t).is_err());
}

#[test]
fn stale_and_mismatched_answers_are_refused() {
    let (mut p, _, _) = protocol("asia_golden", Config::default());
    let q = p.next_query().unwrap();
    let before = p.dag().clone();
    assert!(matches!(
        p.apply_answer(q.id + 1, OracleAnswer::Edge(EdgeAnswer::Fwd)),
        Err(Error::StaleQuery { .. })
    ));
    assert!(matches!(
        p.apply_answer(q.id, OracleAnswer::Hubs(vec![0])),
        Err(Error::AnswerMismatch(_))
    ));
    assert_eq!(p.dag(), &before);
    // the same query is still pending
    assert_eq!(p.next_query().unwrap().id, q.id);
    p.apply_answer(q.id, OracleAnswer::Edge(EdgeAnswer::Fwd)).unwrap();
    assert!(matches!(
        p.apply_answer(q.id, OracleAnswer::Edge(EdgeAnswer::Fwd)),
        Err(Error::AnswerMismatch(_))
    ));
}

#[test]
fn metahub_mode_uses_hub_then_children() {
    let cfg = Config {
        oracle_mode: OracleMode::MetahubChildren,
        ..Config::default()
    };
    let (mut p, mut gt, truth) = protocol("asia_golden", cfg);
    p.set_metahub_hint(gt.known_k());
    let first = p.next_query().unwrap();
    assert_eq!(first.kind, QueryKind::MetaHub);
    assert_eq!(first.k, Some(6));
    p.apply_answer(first.id, gt.answer(&first).unwrap()).unwrap();
    while let Some(q) = p.next_query() {
        assert_eq!(q.kind, QueryKind::NodeChildren);
        p.apply_answer(q.id, gt.answer(&q).unwrap()).unwrap();
    }
    assert!(p.dag().open().is_empty());
    let r = evaluate(p.dag(), &truth);
    assert_eq!(r.precision, 1.0);
}

#[test]
fn hybrid_mode_falls_back_to_per_edge_questions() {
    let cfg = Config {
        oracle_mode: OracleMode::Hybrid,
        metahub_k: Some(2),
        ..Config::default()
    };
    let (mut p, mut gt, _) = protocol("asia_golden", cfg);
    let mut kinds = Vec::new();
    while let Some(q) = p.next_query() {
        kinds.push(q.kind);
        p.apply_answer(q.id, gt.answer(&q).unwrap()).unwrap();
    }
    assert_eq!(kinds[0], QueryKind::MetaHub);
    assert!(p.dag().open().is_empty());
}

#[test]
fn scripted_answers_round_trip_through_csv() {
    let f = fixture("asia_golden");
    let cfg = Config::default();
    let mut gt = GroundTruth::new(8, f.gt.iter().copied());
    let r = run_iterative(&f.data, &cfg, &mut gt).unwrap();
    let script = Scripted::from_trace(&r.trace).unwrap();
    let mut again = Scripted::from_csv(script.to_csv().as_bytes()).unwrap();
    let r2 = run_iterative(&f.data, &cfg, &mut again).unwrap();
    assert_eq!(r2.dag, r.dag);
    assert_eq!(again.remaining(), 0);
}

#[test]
fn exhausted_script_is_an_error() {
    let f = fixture("asia_golden");
    let mut empty = Scripted::new([]);
    assert!(matches!(
        run_iterative(&f.data, &Config::default(), &mut empty),
        Err(Error::ScriptExhausted(0))
    ));
}
