use std::path::{Path, PathBuf};
use std::io::Write;
use std::process::{Command, Output, Stdio};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn edgecert(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_edgecert"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn f(name: &str) -> String {
    fixtures().join(name).display().to_string()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn pure_metahub_on_asia_needs_seven_queries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = edgecert(
        &["iterate", &f("asia.csv"), "--gt", &f("asia.edges"), "--mode", "pure-metahub", "--out", &out],
        "",
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(dir.path().join("metrics.json"));
    assert_eq!(m["queries"], 7);
    assert_eq!(m["f1"], 1.0);
}

#[test]
fn malformed_csv_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,oops\n2,3\n").unwrap();
    let o = edgecert(&["audit", bad.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_config_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"permutations": 10}"#).unwrap();
    let o = edgecert(&["audit", &f("asia_golden.csv"), "--config", cfg.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(3));
    let o = edgecert(&["audit", &f("asia_golden.csv"), "--alpha-skeleton", "1.5"], "");
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn single_column_audit_is_empty_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("one.csv");
    std::fs::write(&csv, "x\n1\n2\n3\n").unwrap();
    let out = dir.path().join("out");
    let o = edgecert(&["audit", csv.to_str().unwrap(), "--out", out.to_str().unwrap()], "");
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nothing to orient"));
    assert_eq!(json(out.join("audit.json"))["edges"].as_array().unwrap().len(), 0);
}

#[test]
fn audit_writes_verdicts_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = edgecert(&["audit", &f("asia_golden.csv"), "--out", &out], "");
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("committed 3"), "{stdout}");
    let v = std::fs::read_to_string(dir.path().join("verdicts.csv")).unwrap();
    assert!(v.starts_with("edge_i,edge_j,final,certificate"));
    assert!(v.contains("RESOLVED_DECISIVE"));
    let a = json(dir.path().join("audit.json"));
    assert_eq!(a["committed"].as_array().unwrap().len(), 3);
}

#[test]
fn ground_truth_runs_are_byte_identical_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let csv = f("asia_golden.csv");
    let run = |name: &str, extra: &[&str], stdin: &str| {
        let out = dir.path().join(name);
        let o = out.display().to_string();
        let mut args = vec!["iterate", csv.as_str()];
        args.extend_from_slice(extra);
        args.extend(["--out", o.as_str()]);
        (edgecert(&args, stdin), out)
    };
    let gt = f("asia_golden.edges");
    let (a, da) = run("a", &["--gt", &gt], "");
    let (b, db) = run("b", &["--gt", &gt], "");
    assert!(a.status.success() && b.status.success());
    let ta = std::fs::read(da.join("trace.csv")).unwrap();
    assert_eq!(ta, std::fs::read(db.join("trace.csv")).unwrap());
    assert_eq!(json(da.join("metrics.json"))["queries"], 3);

    // stop after one answer, then finish from the saved trace
    let (c, dc) = run("c", &["--interactive"], "FWD\n");
    assert_eq!(c.status.code(), Some(4));
    let partial = dc.join("trace.csv").display().to_string();
    let (d, dd) = run("d", &["--interactive", "--resume", &partial], "FWD\nFWD\n");
    assert!(d.status.success(), "{}", String::from_utf8_lossy(&d.stderr));
    assert_eq!(ta, std::fs::read(dd.join("trace.csv")).unwrap());
}

#[test]
fn scripted_answers_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.csv");
    std::fs::write(&script, "kind,target,answer\nPER_EDGE,2-3,FWD\nPER_EDGE,2-4,FWD\nPER_EDGE,4-7,FWD\n").unwrap();
    let out = dir.path().join("out");
    let o = edgecert(
        &["iterate", &f("asia_golden.csv"), "--script", script.to_str().unwrap(), "--out", out.to_str().unwrap()],
        "",
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let edges = std::fs::read_to_string(out.join("edges.txt")).unwrap();
    assert_eq!(edges.lines().count(), 6);
}
