use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use edgecert::analysis::Analysis;
use edgecert::cascade::run_cascade;
use edgecert::model::{pair, Config, PartialDag};
use edgecert::oracle::{run_pure_metahub, GroundTruth, Protocol};
use edgecert::propagation::propagate_rules;
use edgecert::stats::util::stream_rng;
use edgecert::stats::{hsic_test, HsicOptions, PValueMethod};
use edgecert::synth::{fixture_dir, generate_regime, load_fixture, random_dag, Regime, RegimeSpec};
use rand::Rng;

fn hsic(c: &mut Criterion) {
    let mut g = c.benchmark_group("hsic");
    g.sample_size(20);
    for n in [200usize, 500, 1000] {
        let mut rng = stream_rng(1, n as u64);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v + 0.1 * rng.random::<f64>()).collect();
        let gamma = HsicOptions {
            method: PValueMethod::GammaApprox,
            ..HsicOptions::default()
        };
        g.bench_with_input(BenchmarkId::new("gamma", n), &n, |b, _| {
            b.iter(|| hsic_test(black_box(&x), black_box(&y), &gamma).unwrap())
        });
    }
    g.finish();
}

fn cascade(c: &mut Criterion) {
    let mut g = c.benchmark_group("cascade");
    g.sample_size(10);
    let cfg = Config::default();
    for regime in [Regime::RLinGauss, Regime::RLsnm, Regime::RDiscrete] {
        let spec = RegimeSpec {
            n_pairs: 1,
            n_samples: 1000,
            ..RegimeSpec::new(regime, 3)
        };
        let data = generate_regime(&spec).remove(0).data;
        g.bench_function(regime.as_str(), |b| {
            b.iter(|| run_cascade(&Analysis::new(&data, &cfg), pair(0, 1)))
        });
    }
    g.finish();
}

fn propagation(c: &mut Criterion) {
    let mut g = c.benchmark_group("propagation");
    for n in [10usize, 20, 40] {
        let mut rng = stream_rng(5, n as u64);
        let truth = random_dag(n, 0.2, &mut rng);
        let mut d = PartialDag::with_open(n, truth.iter().map(|&(a, b)| pair(a, b)));
        for &(a, b) in &truth {
            if rng.random_bool(0.3) {
                d.commit(a, b).unwrap();
            }
        }
        g.bench_with_input(BenchmarkId::new("meek", n), &d, |b, d| {
            b.iter(|| {
                let mut x = d.clone();
                propagate_rules(&mut x, None, 0.0)
            })
        });
    }
    g.finish();
}

fn protocol(c: &mut Criterion) {
    let mut g = c.benchmark_group("protocol");
    g.sample_size(10);
    let f = load_fixture(&fixture_dir(), "alarm").unwrap();
    let n = f.data.n_vars();
    g.bench_function("pure_metahub_alarm", |b| {
        b.iter(|| {
            let mut gt = GroundTruth::new(n, f.gt.iter().copied());
            run_pure_metahub(n, &mut gt, None).unwrap()
        })
    });
    let golden = load_fixture(&fixture_dir(), "asia_golden").unwrap();
    let data = Arc::new(golden.data);
    let cfg = Arc::new(Config::default());
    g.bench_function("audit_asia_golden", |b| {
        b.iter(|| Protocol::new(Arc::clone(&data), Arc::clone(&cfg)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, hsic, cascade, propagation, protocol);
criterion_main!(benches);
