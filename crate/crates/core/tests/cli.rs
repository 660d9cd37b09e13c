mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use aqv::model::parse_model;
use aqv::props::{sat_states, StateFormula};
use common::*;

fn aqv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aqv")).args(args).output().unwrap()
}

fn shipped(name: &str) -> String {
    models_dir().join(name).to_string_lossy().into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn verify(props: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let model = shipped("tas.model");
    let mut args = vec![
        "verify",
        "--model",
        &model,
        "--props",
        props,
        "--config",
        config,
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    aqv(&args)
}

#[test]
fn verify_tas_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = verify(&shipped("tas.props"), &shipped("tas.config"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("AllSatisfied after "));
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["verdict"], "AllSatisfied");
    assert!(verdict["total_cost"].as_f64().unwrap() <= 150000.0);
    let reqs = std::fs::read_to_string(dir.path().join("requirements.csv")).unwrap();
    assert!(reqs.starts_with("round,req_id,lo,hi,decided\n1,R1,0,1,\n"));
    let comps = std::fs::read_to_string(dir.path().join("components.csv")).unwrap();
    assert!(comps.starts_with("round,component,nobs,round_cost,cumulative_cost\n"));
}

#[test]
fn refuted_bound_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let props = write(dir.path(), "r.props", "R1: P<0.0001 [ F \"alarmFail\" ]\n");
    let out = verify(&props, &shipped("tas.config"), &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let verdict = std::fs::read_to_string(dir.path().join("out/verdict.json")).unwrap();
    assert!(verdict.contains("\"requirement\": \"R1\""));
}

#[test]
fn configuration_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.config", "round_budget = 5000\n");
    let out = verify(&shipped("tas.props"), &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));

    let cfg = write(dir.path(), "d.config", "budget = 100\nround_budget = 5000\ntruth_file = x\n");
    let out = verify(&shipped("tas.props"), &cfg, dir.path(), &["--truth", &shipped("tas.truth")]);
    assert_eq!(out.status.code(), Some(3));

    let out = verify(&shipped("tas.props"), &shipped("tas.config"), dir.path(), &["--strategy", "random"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn seed_reproduces_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = verify(&shipped("tas.props"), &shipped("tas.config"), &dir.path().join("a"), &["--seed", "9"]);
    let b = verify(&shipped("tas.props"), &shipped("tas.config"), &dir.path().join("b"), &["--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    let read = |d: &str| std::fs::read_to_string(dir.path().join(d).join("requirements.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn evaluate_matches_linear_solve() {
    let out = aqv(&["evaluate", "--model", &shipped("tas.model"), "--props", &shipped("tas.props"), "--truth", &shipped("tas.truth")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let r1: f64 = text.lines().next().unwrap().strip_prefix("R1 = ").unwrap().parse().unwrap();
    let model = parse_model(&load_shipped("tas.model")).unwrap();
    let d = model.dtmc();
    let v = aqv::cli::parse_valuation(&load_shipped("tas.truth")).unwrap();
    let all: BTreeSet<usize> = (0..d.num_states()).collect();
    let want = until_probability(d, &v, d.init(), &all, &sat_states(d, &StateFormula::atom("alarmFail")));
    assert!(r1 > 0.0 && r1 < 1.0);
    assert!((r1 - want).abs() < 1e-12, "{r1} vs {want}");
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn evaluate_reports_missing_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let truth = write(dir.path(), "t.truth", "p_ma = 0.9\n");
    let out = aqv(&["evaluate", "--model", &shipped("tas.model"), "--props", &shipped("tas.props"), "--truth", &truth]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn compare_writes_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let list = format!(
        "scenario tas {} {} {} 3\nsynthesize 2 {} {} seed=5 bounds=narrow\n",
        shipped("tas.model"),
        shipped("tas.props"),
        shipped("tas.truth"),
        shipped("tas.model"),
        shipped("tas.props")
    );
    let scen = write(dir.path(), "s.scenarios", &list);
    let out_dir = dir.path().join("cmp");
    let out = aqv(&["compare", "--scenarios", &scen, "--config", &shipped("compare.config"), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let compare = std::fs::read_to_string(out_dir.join("compare.csv")).unwrap();
    assert_eq!(compare.lines().count(), 1 + 3 * 2);
    let pairs = std::fs::read_to_string(out_dir.join("pairs.csv")).unwrap();
    assert!(pairs.starts_with("scenario,cost_adaptive,cost_uniform,difference\n"));
    assert_eq!(pairs.lines().count(), 4);
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("scenarios,median_difference,probability_of_superiority\n3,"));
}

#[test]
fn compare_without_scenarios_fails() {
    let dir = tempfile::tempdir().unwrap();
    let scen = write(dir.path(), "empty.scenarios", "# nothing\n");
    let out = aqv(&["compare", "--scenarios", &scen, "--config", &shipped("compare.config"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_respects_round_cap() {
    let dir = tempfile::tempdir().unwrap();
    let out = aqv(&[
        "sweep-rbudget",
        "--model",
        &shipped("tas.model"),
        "--props",
        &shipped("tas.props"),
        "--config",
        &shipped("tas.config"),
        "--out",
        dir.path().to_str().unwrap(),
        "--values",
        "5000,20000,80000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(r[1] <= (150000.0 / r[0]).ceil());
        assert!(r[2] <= 150000.0);
    }
}

#[cfg(unix)]
#[test]
fn script_tester_drives_the_loop() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    let script = write(
        dir.path(),
        "test.sh",
        "#!/bin/sh\n# every test succeeds\ncase \"$1\" in\n  1) echo \"s2 s4 $2\" ;;\n  2) echo \"s5 s9 $2\" ;;\n  3) echo \"s6 s9 $2\" ;;\n  *) exit 2 ;;\nesac\n",
    );
    std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    let cfg = write(
        dir.path(),
        "s.config",
        &format!("budget = 150000\nround_budget = 5000\ntester = script\nscript_path = {script}\n"),
    );
    let out = verify(&shipped("tas.props"), &cfg, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let bad = write(dir.path(), "bad.sh", "#!/bin/sh\necho \"s2 s4 1\"\n");
    std::fs::set_permissions(&bad, std::fs::Permissions::from_mode(0o755)).unwrap();
    let cfg = write(
        dir.path(),
        "b.config",
        &format!("budget = 150000\nround_budget = 5000\ntester = script\nscript_path = {bad}\n"),
    );
    let out = verify(&shipped("tas.props"), &cfg, &dir.path().join("out2"), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s2"));
}
