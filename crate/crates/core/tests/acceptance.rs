//! One PASS/FAIL line per acceptance criterion. Exits non-zero when a
//! criterion fails that is not listed in `KNOWN_GAPS`.

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use edgecert::model::{Config, Tier};
use edgecert::oracle::{replay, run_iterative, run_pure_metahub, GroundTruth, Protocol};
use edgecert::propagation::propagate_rules;
use edgecert::stats::util::stream_rng;
use edgecert::stats::{hsic_test, HsicOptions};
use edgecert::synth::runners::default_specs;
use edgecert::synth::{evaluate, evaluate_edges, random_dag, run_ablation, run_tier_matrix, Regime};
use rand::Rng;
use rand_distr::StandardNormal;

use common::{brute_force_closure, fixture, meek_instance};

/// Criteria that fail with the shipped fixtures and estimators.
const KNOWN_GAPS: &[&str] = &["sachs-ablation"];

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn one_plus_k() -> Outcome {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, want) in [("asia", 7), ("sachs", 8), ("child", 14), ("alarm", 27)] {
        let f = fixture(name);
        let mut gt = GroundTruth::new(f.data.n_vars(), f.gt.iter().copied());
        let run = run_pure_metahub(f.data.n_vars(), &mut gt, None).unwrap();
        let r = evaluate_edges(&run.edges, &f.gt);
        let exact = run.queries == want && r.precision == 1.0 && r.recall == 1.0 && r.f1 == 1.0;
        ok &= exact;
        parts.push(format!("{name} {}q P/R/F1 {:.3}/{:.3}/{:.3}", run.queries, r.precision, r.recall, r.f1));
    }
    ok &= t.elapsed().as_secs_f64() < 10.0;
    Outcome {
        id: "one-plus-k",
        pass: ok,
        detail: format!("{} ({:.2}s)", parts.join(", "), t.elapsed().as_secs_f64()),
    }
}

fn random_dags() -> Outcome {
    let mut rng = stream_rng(2024, 1);
    let mut exact = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=12usize);
        let truth = random_dag(n, 0.3, &mut rng);
        let mut gt = GroundTruth::new(n, truth.iter().copied());
        let k = gt.non_leaves();
        let run = run_pure_metahub(n, &mut gt, None).unwrap();
        exact += (run.edges == truth && run.queries == 1 + k) as usize;
    }
    Outcome {
        id: "random-dag-one-plus-k",
        pass: exact == 200,
        detail: format!("{exact}/200 exact in 1+K"),
    }
}

fn tier_matrix() -> Outcome {
    let t = Instant::now();
    let m = run_tier_matrix(&default_specs(40, 2000, 0), &Config::default(), &Tier::SAFE);
    let native = [
        (Tier::Lsnm, Regime::RLsnm),
        (Tier::Igci, Regime::RNearDet),
        (Tier::Stein, Regime::RLsnm),
        (Tier::Mdl, Regime::RDiscrete),
        (Tier::Peit, Regime::RPnl),
    ];
    let mut ok = true;
    for (tier, r) in native {
        let c = m.cell(tier, r);
        ok &= c.fired > 0 && c.accuracy().unwrap_or(0.0) >= 0.93;
    }
    ok &= m.cell(Tier::Lsnm, Regime::RLinGauss).fired == 0;
    ok &= m.cell(Tier::Igci, Regime::RLinGauss).fired == 0;
    ok &= m.cell(Tier::Stein, Regime::RDiscrete).abstains();
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 600.0;
    print!("{}", m.to_csv(&Tier::SAFE, &Regime::ALL));
    let diag: Vec<String> = native
        .iter()
        .map(|&(tier, r)| format!("{tier}@{} {}", r.as_str(), m.cell(tier, r).label()))
        .collect();
    Outcome {
        id: "tier-matrix",
        pass: ok,
        detail: format!(
            "{}; LSNM/IGCI on LIN_GAUSS {}/{}; STEIN on DISCRETE {} ({secs:.0}s)",
            diag.join(", "),
            m.cell(Tier::Lsnm, Regime::RLinGauss).fired,
            m.cell(Tier::Igci, Regime::RLinGauss).fired,
            m.cell(Tier::Stein, Regime::RDiscrete).label(),
        ),
    }
}

fn hsic_calibration() -> Outcome {
    let mut rejected = 0;
    for s in 0..1000u64 {
        let mut r = stream_rng(s, 500);
        let x: Vec<f64> = (0..500).map(|_| r.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..500).map(|_| r.sample(StandardNormal)).collect();
        if hsic_test(&x, &y, &HsicOptions { seed: s, ..HsicOptions::default() }).unwrap().p_value < 0.05 {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / 1000.0;
    Outcome {
        id: "hsic-calibration",
        pass: (0.03..=0.07).contains(&rate),
        detail: format!("rejection rate {rate:.3} at alpha 0.05 (N=500, 1000 seeds)"),
    }
}

fn meek_closure() -> Outcome {
    let mut rng = stream_rng(11, 1);
    let mut equal = 0;
    for _ in 0..100 {
        let (mut d, truth) = meek_instance(&mut rng, 5);
        let expected = brute_force_closure(&d);
        propagate_rules(&mut d, None, Config::default().confirm_ratio);
        equal += (d.committed() == &expected && d.committed().is_subset(&truth)) as usize;
    }
    Outcome {
        id: "meek-closure",
        pass: equal == 100,
        detail: format!("{equal}/100 equal to brute-force closure"),
    }
}

fn guarantee() -> Outcome {
    let runs: Vec<(&str, Config)> = vec![
        ("asia_golden", Config::default()),
        ("sachs_obs", Config::default()),
        ("sachs_obs", Config::default().with_tiers(&[Tier::L0, Tier::L1])),
        ("asia", Config { cascade_enabled: false, ..Config::default() }),
        ("sachs", Config { cascade_enabled: false, ..Config::default() }),
    ];
    let mut checks = 0;
    let mut violations = 0;
    for (name, cfg) in runs {
        let f = fixture(name);
        let mut gt = GroundTruth::new(f.data.n_vars(), f.gt.iter().copied());
        let r = run_iterative(&f.data, &cfg, &mut gt).unwrap();
        checks += r.guarantee.len();
        violations += r.guarantee.iter().filter(|g| !g.holds()).count();
    }
    Outcome {
        id: "info-value-guarantee",
        pass: violations == 0 && checks > 0,
        detail: format!("{checks} per-edge answers checked, {violations} violations"),
    }
}

fn sachs_ablation() -> Outcome {
    let f = fixture("sachs_obs");
    let rows = run_ablation(&f.data, &f.gt, &Config::default()).unwrap();
    print!("{}", edgecert::synth::ablation_csv(&rows));
    let get = |l: &str| rows.iter().find(|r| r.label == l).unwrap();
    let (base, stein, full) = (get("BASE"), get("+L_STEIN"), get("+all+guard"));
    let trend = base.precision <= stein.precision && stein.precision <= full.precision;
    let pass = trend && full.demoted >= 1 && full.precision >= 0.60;
    Outcome {
        id: "sachs-ablation",
        pass,
        detail: format!(
            "precision {:.3} -> {:.3} -> {:.3}, guard demoted {}",
            base.precision, stein.precision, full.precision, full.demoted
        ),
    }
}

fn determinism() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["asia_golden", "sachs_obs"] {
        let f = fixture(name);
        let cfg = Config::default().with_tiers(&[Tier::L0, Tier::L1]);
        let run = || {
            let mut gt = GroundTruth::new(f.data.n_vars(), f.gt.iter().copied());
            run_iterative(&f.data, &cfg, &mut gt).unwrap()
        };
        let (a, b) = (run(), run());
        let same = a.trace.to_csv_string() == b.trace.to_csv_string();
        let back = edgecert::model::Trace::read_csv(a.trace.to_csv_string().as_bytes()).unwrap();
        let replayed = replay(Arc::new(f.data.clone()), Arc::new(cfg.clone()), &back)
            .map(|p| p.dag() == &a.dag)
            .unwrap_or(false);
        ok &= same && replayed;
        parts.push(format!("{name}: identical={same} replay={replayed}"));
    }
    Outcome {
        id: "determinism",
        pass: ok,
        detail: parts.join(", "),
    }
}

fn asia_golden() -> Outcome {
    let f = fixture("asia_golden");
    let mut p = Protocol::new(Arc::new(f.data.clone()), Arc::new(Config::default())).unwrap();
    let mut gt = GroundTruth::new(8, f.gt.iter().copied());
    p.drive(&mut gt).unwrap();
    let r = evaluate(p.dag(), &f.gt);
    let committed: BTreeSet<_> = p.dag().committed().clone();
    Outcome {
        id: "asia-walkthrough",
        pass: committed.len() == 6 && r.precision == 1.0 && r.recall == 0.75,
        detail: format!(
            "{} commits, precision {:.3}, recall {:.3}, {} queries",
            committed.len(),
            r.precision,
            r.recall,
            p.queries()
        ),
    }
}

fn main() {
    let checks: [fn() -> Outcome; 9] = [
        one_plus_k,
        random_dags,
        tier_matrix,
        hsic_calibration,
        meek_closure,
        guarantee,
        sachs_ablation,
        determinism,
        asia_golden,
    ];
    let mut results = Vec::new();
    for c in checks {
        results.push(c());
    }
    println!();
    let mut unexpected = 0;
    for o in &results {
        let known = KNOWN_GAPS.contains(&o.id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known gap)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("{tag:<16} {:<22} {}", o.id, o.detail);
    }
    let passed = results.iter().filter(|o| o.pass).count();
    println!("\n{passed}/{} criteria pass", results.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
