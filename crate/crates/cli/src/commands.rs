use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use edgecert::cascade::{CascadeVerdict, Final};
use edgecert::model::{format_edge_list, read_edge_list, Config, Dataset, EdgeState, Tier, Trace};
use edgecert::oracle::metahub::verify_exact;
use edgecert::oracle::{
    replay, run_pure_metahub, GroundTruth, Interactive, OracleAnswer, OracleBackend, OracleQuery,
    Protocol, Scripted,
};
use edgecert::stats::util::stream_rng;
use edgecert::synth::{
    ablation_csv, evaluate_edges, evaluate_run, fixture_dir, load_fixture, pareto_csv, random_dag,
    read_manifest, run_ablation, run_pareto, run_tier_matrix, EvalReport, Regime,
};
use log::warn;
use rand::Rng;
use serde_json::json;

use crate::args::{AuditArgs, BenchArgs, IterateArgs, Mode, StressArgs};

const DEFAULT_OUT: &str = "edgecert-out";

fn out_dir(out: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, text: impl AsRef<[u8]>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
}

fn load(csv: &Path, cfg: &Config) -> Result<Dataset> {
    let mut d = Dataset::from_csv_path(csv)?;
    if !cfg.circular.is_empty() {
        d.flag_circular(&cfg.circular)?;
    }
    Ok(d)
}

fn pair_name(d: &Dataset, p: (usize, usize)) -> String {
    format!("{}-{}", d.name(p.0), d.name(p.1))
}

/// Per-pair line of the text report.
pub fn state_line(d: &Dataset, s: &EdgeState, dag_edge: Option<(usize, usize)>) -> String {
    let orient = match dag_edge {
        Some((a, b)) => format!("{} -> {}", d.name(a), d.name(b)),
        None => format!("{} -- {}", d.name(s.pair.0), d.name(s.pair.1)),
    };
    let cert = s.certificate.map(|c| c.as_str()).unwrap_or("PENDING");
    let prov = s.provenance.map(|p| p.to_string()).unwrap_or_else(|| "-".into());
    format!("{orient:<32} {cert:<28} {:<8} {prov}", format!("{:?}", s.status).to_uppercase())
}

fn oriented(p: &Protocol, pr: (usize, usize)) -> Option<(usize, usize)> {
    let dag = p.dag();
    if dag.has_edge(pr.0, pr.1) {
        Some(pr)
    } else if dag.has_edge(pr.1, pr.0) {
        Some((pr.1, pr.0))
    } else {
        None
    }
}

fn final_str(f: Final) -> &'static str {
    match f {
        Final::Fwd => "FWD",
        Final::Bwd => "BWD",
        Final::Impossible => "IMPOSSIBLE",
    }
}

fn verdicts_csv(d: &Dataset, verdicts: &[&CascadeVerdict]) -> String {
    let mut out = String::from("edge_i,edge_j,final,certificate,committed_by,demoted,scores_json\n");
    for v in verdicts {
        let scores = v.scores_json().replace('"', "\"\"");
        out.push_str(&format!(
            "{},{},{},{},{},{},\"{scores}\"\n",
            d.name(v.pair.0),
            d.name(v.pair.1),
            final_str(v.final_),
            v.certificate.as_str(),
            v.committed_by.map(Tier::as_str).unwrap_or(""),
            v.demoted.map(|(_, t)| t.as_str()).unwrap_or(""),
        ));
    }
    out
}

pub fn audit(args: &AuditArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let data = load(&args.csv, &cfg)?;
    let dir = out_dir(&args.out)?;
    if data.n_vars() < 2 {
        warn!("dataset has {} variable(s); nothing to orient", data.n_vars());
        println!("no candidate pairs: the dataset has fewer than two variables");
        write(&dir, "audit.json", serde_json::to_string_pretty(&json!({
            "fingerprint": data.fingerprint(),
            "n_vars": data.n_vars(),
            "n_samples": data.n_samples(),
            "warnings": ["fewer than two variables"],
            "edges": [],
        }))?)?;
        write(&dir, "verdicts.csv", verdicts_csv(&data, &[]))?;
        write(&dir, "trace.csv", Trace::default().to_csv_string())?;
        return Ok(());
    }
    let p = Protocol::new(Arc::new(data), Arc::new(cfg))?;
    let d = p.data();
    for w in p.warnings() {
        warn!("{w}");
    }
    let states = p.edge_states();
    println!("{} variables, {} samples, {} candidate pairs", d.n_vars(), d.n_samples(), states.len());
    for s in &states {
        println!("{}", state_line(d, s, oriented(&p, s.pair)));
    }
    println!(
        "committed {}, dropped {}, open {}",
        p.dag().committed().len(),
        p.dag().dropped().len(),
        p.dag().open().len()
    );

    let edges: Vec<_> = states
        .iter()
        .map(|s| {
            json!({
                "edge": pair_name(d, s.pair),
                "state": s,
                "oriented": oriented(&p, s.pair).map(|(a, b)| format!("{} -> {}", d.name(a), d.name(b))),
            })
        })
        .collect();
    let report = json!({
        "fingerprint": d.fingerprint(),
        "n_vars": d.n_vars(),
        "n_samples": d.n_samples(),
        "warnings": p.warnings(),
        "config": p.config(),
        "edges": edges,
        "committed": format_edge_list(p.dag().committed().iter().copied(), d.names()).lines().collect::<Vec<_>>(),
        "open": p.dag().open().iter().map(|&x| pair_name(d, x)).collect::<Vec<_>>(),
    });
    write(&dir, "audit.json", serde_json::to_string_pretty(&report)?)?;
    let verdicts: Vec<&CascadeVerdict> = p.verdicts().values().collect();
    write(&dir, "verdicts.csv", verdicts_csv(d, &verdicts))?;
    write(&dir, "trace.csv", p.trace().to_csv_string())?;
    Ok(())
}

/// Terminal oracle: prints the full question, then reads the answer.
struct Terminal<B> {
    inner: B,
}

impl<B: OracleBackend> Terminal<B> {
    fn ask(&mut self, q: &OracleQuery) -> edgecert::Result<OracleAnswer> {
        eprintln!("\n[{}] {}", q.id, q.question_text);
        self.inner.answer(q)
    }
}

enum Oracle {
    Truth(GroundTruth),
    Script(Scripted),
    Term(Terminal<Interactive<io::StdinLock<'static>, io::Stderr>>),
}

impl Oracle {
    fn backend(&mut self) -> &mut dyn OracleBackend {
        match self {
            Oracle::Truth(g) => g,
            Oracle::Script(s) => s,
            Oracle::Term(t) => &mut t.inner,
        }
    }

    fn answer(&mut self, q: &OracleQuery) -> edgecert::Result<OracleAnswer> {
        match self {
            Oracle::Term(t) => t.ask(q),
            other => other.backend().answer(q),
        }
    }
}

fn metrics_json(
    report: Option<&EvalReport>,
    queries: usize,
    extra: serde_json::Value,
) -> serde_json::Value {
    let mut m = json!({ "queries": queries });
    if let Some(r) = report {
        m["precision"] = json!(r.precision);
        m["recall"] = json!(r.recall);
        m["f1"] = json!(r.f1);
        m["committed"] = json!(r.committed);
        m["correct"] = json!(r.correct);
        m["per_mechanism"] = json!(r.per_mechanism);
    }
    if let (Some(o), serde_json::Value::Object(e)) = (m.as_object_mut(), extra) {
        o.extend(e);
    }
    m
}

pub fn iterate(args: &IterateArgs) -> Result<()> {
    let mut cfg = args.config.resolve()?;
    if let Some(m) = args.mode.oracle_mode() {
        cfg.oracle_mode = m;
    }
    let data = load(&args.csv, &cfg)?;
    let n = data.n_vars();
    let gt: Option<BTreeSet<(usize, usize)>> = match &args.gt {
        Some(p) => Some(read_edge_list(p, data.names())?.into_iter().collect()),
        None => None,
    };
    let mut oracle = if let Some(g) = &gt {
        Oracle::Truth(GroundTruth::new(n, g.iter().copied()))
    } else if let Some(s) = &args.script {
        Oracle::Script(Scripted::from_csv_path(s)?)
    } else {
        let stdin: io::StdinLock<'static> = io::stdin().lock();
        Oracle::Term(Terminal {
            inner: Interactive::new(stdin, io::stderr(), data.names().to_vec()),
        })
    };
    let dir = out_dir(&args.out)?;

    if args.mode == Mode::PureMetahub {
        let run = run_pure_metahub(n, oracle.backend(), cfg.metahub_k)?;
        if let Some(g) = &gt {
            verify_exact(&run.edges, g)?;
        }
        write(&dir, "trace.csv", run.trace.to_csv_string())?;
        write(&dir, "edges.txt", format_edge_list(run.edges.iter().copied(), data.names()))?;
        let r = gt.as_ref().map(|g| evaluate_edges(&run.edges, g));
        let m = metrics_json(r.as_ref(), run.queries, json!({ "mode": "pure-metahub" }));
        write(&dir, "metrics.json", serde_json::to_string_pretty(&m)?)?;
        println!("{} queries, {} edges", run.queries, run.edges.len());
        return Ok(());
    }

    let data = Arc::new(data);
    let cfg = Arc::new(cfg);
    let mut p = match &args.resume {
        Some(t) => replay(Arc::clone(&data), Arc::clone(&cfg), &Trace::read_csv_path(t)?)?,
        None => Protocol::new(Arc::clone(&data), Arc::clone(&cfg))?,
    };
    if let Oracle::Truth(g) = &oracle {
        p.set_metahub_hint(g.known_k());
    }
    for w in p.warnings() {
        warn!("{w}");
    }
    while let Some(q) = p.next_query() {
        let step = oracle.answer(&q).and_then(|a| p.apply_answer(q.id, a));
        if let Err(e) = step {
            write(&dir, "trace.csv", p.trace().to_csv_string())?;
            if matches!(e, edgecert::Error::Abandoned) {
                eprintln!("session abandoned; trace kept in {}", dir.join("trace.csv").display());
            }
            return Err(e.into());
        }
    }
    write(&dir, "trace.csv", p.trace().to_csv_string())?;
    write(&dir, "edges.txt", format_edge_list(p.dag().committed().iter().copied(), data.names()))?;
    let r = gt.as_ref().map(|g| evaluate_run(p.dag(), g, p.trace()));
    let violations = p.guarantee().iter().filter(|g| !g.holds()).count();
    let m = metrics_json(
        r.as_ref(),
        p.queries(),
        json!({
            "mode": clap::ValueEnum::to_possible_value(&args.mode).map(|v| v.get_name().to_string()),
            "open": p.dag().open().len(),
            "guarantee_checks": p.guarantee().len(),
            "guarantee_violations": violations,
            "warnings": p.warnings(),
        }),
    );
    write(&dir, "metrics.json", serde_json::to_string_pretty(&m)?)?;
    match &r {
        Some(r) => println!(
            "{} queries, {} committed, precision {:.3}, recall {:.3}",
            p.queries(),
            r.committed,
            r.precision,
            r.recall
        ),
        None => println!("{} queries, {} committed", p.queries(), p.dag().committed().len()),
    }
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let dir = args.out.as_ref().map(|_| out_dir(&args.out)).transpose()?;
    let fdir = fixture_dir();

    let mut onek = String::from("network,vertices,edges,k,queries,f1\n");
    for f in read_manifest(&fdir)? {
        let l = load_fixture(&fdir, &f.name)?;
        let n = l.data.n_vars();
        let mut gt = GroundTruth::new(n, l.gt.iter().copied());
        let run = run_pure_metahub(n, &mut gt, None)?;
        verify_exact(&run.edges, &l.gt)?;
        let r = evaluate_edges(&run.edges, &l.gt);
        onek.push_str(&format!("{},{n},{},{},{},{:.3}\n", f.name, l.gt.len(), f.k, run.queries, r.f1));
    }
    println!("# 1+K queries\n{onek}");

    let mut rng = stream_rng(args.seed, 0);
    let mut exact = 0;
    for _ in 0..args.dags {
        let n = rng.random_range(1..=12usize);
        let truth = random_dag(n, 0.3, &mut rng);
        let mut gt = GroundTruth::new(n, truth.iter().copied());
        let k = gt.non_leaves();
        let run = run_pure_metahub(n, &mut gt, None)?;
        exact += (run.edges == truth && run.queries == 1 + k) as usize;
    }
    let dags = format!("dags,exact\n{},{exact}\n", args.dags);
    println!("# random DAGs\n{dags}");

    let l = load_fixture(&fdir, &args.ablation_fixture)?;
    let base = Config {
        seed: args.seed,
        ..Config::default()
    };
    let abl = ablation_csv(&run_ablation(&l.data, &l.gt, &base)?);
    println!("# tier ablation ({})\n{abl}", args.ablation_fixture);
    let par = pareto_csv(&run_pareto(&l.data, &l.gt, &base, args.budget)?);
    println!("# operating points ({})\n{par}", args.ablation_fixture);

    if let Some(d) = dir {
        write(&d, "one_plus_k.csv", onek)?;
        write(&d, "random_dags.csv", dags)?;
        write(&d, "ablation.csv", abl)?;
        write(&d, "pareto.csv", par)?;
    }
    Ok(())
}

pub fn stress(args: &StressArgs) -> Result<()> {
    let specs = edgecert::synth::runners::default_specs(args.pairs, args.samples, args.seed);
    let cfg = Config {
        seed: args.seed,
        ..Config::default()
    };
    let m = run_tier_matrix(&specs, &cfg, &Tier::ALL);
    let csv = m.to_csv(&Tier::ALL, &Regime::ALL);
    print!("{csv}");
    if args.out.is_some() {
        write(&out_dir(&args.out)?, "tier_matrix.csv", csv)?;
    }
    Ok(())
}
