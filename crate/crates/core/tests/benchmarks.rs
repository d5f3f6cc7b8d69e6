mod common;

use edgecert::oracle::{metahub::verify_exact, run_pure_metahub, GroundTruth};
use edgecert::stats::util::stream_rng;
use edgecert::synth::{evaluate_edges, fixture_dir, random_dag, read_manifest};

use common::fixture;

fn one_plus_k(name: &str) -> (usize, f64) {
    let f = fixture(name);
    let mut gt = GroundTruth::new(f.data.n_vars(), f.gt.iter().copied());
    let run = run_pure_metahub(f.data.n_vars(), &mut gt, None).unwrap();
    verify_exact(&run.edges, &f.gt).unwrap();
    let r = evaluate_edges(&run.edges, &f.gt);
    assert_eq!((r.precision, r.recall), (1.0, 1.0));
    (run.queries, r.f1)
}

#[test]
fn benchmark_networks_need_one_plus_k_queries() {
    for (name, q) in [("asia", 7), ("sachs", 8), ("child", 14), ("alarm", 27)] {
        assert_eq!(one_plus_k(name), (q, 1.0), "{name}");
    }
}

#[test]
fn manifest_k_predicts_query_count() {
    for f in read_manifest(&fixture_dir()).unwrap() {
        assert_eq!(one_plus_k(&f.name).0, 1 + f.k, "{}", f.name);
    }
}

#[test]
fn random_dags_recover_exactly() {
    let mut rng = stream_rng(2024, 0);
    for _ in 0..200 {
        let n = 1 + (rand::Rng::random_range(&mut rng, 0..12usize));
        let truth = random_dag(n, 0.3, &mut rng);
        let mut gt = GroundTruth::new(n, truth.iter().copied());
        let k = gt.non_leaves();
        let run = run_pure_metahub(n, &mut gt, None).unwrap();
        assert_eq!(run.edges, truth);
        assert_eq!(run.queries, 1 + k);
        assert_eq!(run.trace.reconstruct(n).unwrap(), run.dag);
    }
}

#[test]
fn operating_points_on_golden_fixture() {
    let f = fixture("asia_golden");
    let pts = edgecert::synth::run_pareto(&f.data, &f.gt, &edgecert::model::Config::default(), 2).unwrap();
    let names: Vec<&str> = pts.iter().map(|p| p.strategy.as_str()).collect();
    assert_eq!(names, ["cascade+per_edge", "cascade+metahub", "pure_metahub"]);
    assert_eq!(pts[0].queries, 2);
    assert_eq!((pts[2].queries, pts[2].f1), (7, 1.0));
    assert!(pts.iter().all(|p| p.precision == 1.0), "{pts:?}");
}
