//! End-to-end runs of the `spectropt` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectropt"))
        .args(args)
        .env("SPECTROPT_LOG", "quiet")
        .output()
        .expect("binary runs")
}

fn run_config(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn stderr_record(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("a stderr record");
    serde_json::from_str(line).expect("machine-parseable stderr")
}

#[test]
fn eigs_on_the_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run_config("eigs", &configs().join("disk-eigs.json"), &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let l1 = r["eigenvalues"][0].as_f64().unwrap();
    assert!((l1 / 5.783 - 1.0).abs() <= 5e-3, "λ_1 = {l1}");
    for f in ["config.resolved.json", "metadata.json", "eigenvalues.csv", "u1.csv", "u1.svg"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    let resolved: Value = serde_json::from_str(&std::fs::read_to_string(out.join("config.resolved.json")).unwrap()).unwrap();
    assert_eq!(resolved["solver"]["tol"], 1e-10);
}

#[test]
fn torsion_on_the_interval() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run_config("torsion", &configs().join("interval-torsion.json"), &out, &[]);
    assert!(o.status.success());
    let p = report(&out)["P"].as_f64().unwrap();
    assert!((p * 3.0 - 1.0).abs() <= 1e-3, "P = {p}");
    assert!(out.join("w.csv").exists() && out.join("w.svg").exists());
}

#[test]
fn formats_select_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"grid":{"d":1,"L":1,"n":31},"potential":{"shape":"interval","radius":1},"output":{"formats":["csv"]}}"#,
    );
    let out = tmp.path().join("run");
    assert!(run_config("torsion", &cfg, &out, &[]).status.success());
    assert!(out.join("w.csv").exists());
    assert!(!out.join("w.svg").exists());
}

#[test]
fn reports_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("gamma-disks.json");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run_config("gamma", &cfg, &a, &[]).status.success());
    assert!(run_config("gamma", &cfg, &b, &[]).status.success());
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
    let r = report(&a);
    assert!(r["d_gamma"].as_f64().unwrap() > 0.0);
    assert_eq!(r["ordered_pair"]["gap_check"]["holds"], true);
}

#[test]
fn malformed_grid_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"grid":{"d":2,"L":1,"n":2},"potential":{"shape":"disk","radius":1}}"#);
    let out = tmp.path().join("run");
    let o = run_config("eigs", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists(), "no outputs expected");
    let rec = stderr_record(&o);
    assert_eq!(rec["error"], "config");
    assert_eq!(rec["code"], 2);
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    for body in [
        r#"{"grid":{"d":1,"L":1,"n":31},"potential":{"shape":"interval","radius":1},"colour":"red"}"#,
        r#"{"grid":{"d":1,"L":1,"n":31,"h":0.1},"potential":{"shape":"interval","radius":1}}"#,
        r#"{"grid":{"d":1,"L":1,"n":31},"potential":{"shape":"interval","radius":1},"solver":{"tolerance":1}}"#,
    ] {
        let cfg = write_config(tmp.path(), "c.json", body);
        let o = run_config("torsion", &cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert!(!out.exists());
    }
}

#[test]
fn large_exponent_for_k_two_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"grid":{"d":1,"L":6,"n":63},"problem":{"kind":"potential-mass","k":2,"p":1.5}}"#,
    );
    let out = tmp.path().join("run");
    let o = run_config("optimize", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn missing_potential_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"potential":{"file":"absent.json"}}"#);
    let o = run_config("torsion", &cfg, &tmp.path().join("run"), &[]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_record(&o)["error"], "io");
}

#[test]
fn potential_file_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("opt");
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"grid":{"d":1,"L":6,"n":127},"problem":{"kind":"potential-mass","k":1,"p":0.5}}"#,
    );
    assert!(run_config("optimize", &cfg, &first, &[]).status.success());
    let cfg2 = write_config(tmp.path(), "d.json", r#"{"potential":{"file":"opt/final.json"},"problem":{"k":2}}"#);
    let out = tmp.path().join("eigs");
    let o = run_config("eigs", &cfg2, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let l1 = report(&out)["eigenvalues"][0].as_f64().unwrap();
    let obj = report(&first)["objective"].as_f64().unwrap();
    assert!((l1 / obj - 1.0).abs() < 1e-6);
}

#[test]
fn optimize_records_the_audit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run_config("optimize", &configs().join("optimize-faber-krahn.json"), &out, &[]);
    assert!(o.status.success());
    let r = report(&out);
    assert_eq!(r["audit_passed"], true);
    assert_eq!(r["audit"]["passed"], true);
    assert!((r["mass"].as_f64().unwrap() - 1.0).abs() <= 1e-8);
    for f in ["trace.csv", "final.json", "final.csv", "final.svg"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let svg = std::fs::read_to_string(out.join("final.svg")).unwrap();
    assert!(svg.contains(r#"id="mask""#));
}

#[test]
fn optimize_spectral_torsion_is_round() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run_config("optimize", &configs().join("optimize-kohler-jobin.json"), &out, &[]);
    assert!(o.status.success());
    let iso = report(&out)["isoperimetric_ratio"].as_f64().unwrap();
    assert!(iso <= 1.05, "isoperimetric ratio {iso}");
}

#[test]
fn verify_filter_runs_only_scaling_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run(&["verify", "--filter", "scaling", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let mut names: Vec<String> = std::fs::read_dir(out.join("checks"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["eigen-scaling.json", "mass-scaling.json", "merit-scaling.json", "torsion-scaling.json"]);
}

#[test]
fn verify_unknown_filter_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--filter", "nonsense", "--out", tmp.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_with_corrupted_oracle_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"verify":{"filter":["oracles"],"oracles":{"disk-lambda1":6.0}}}"#,
    );
    let out = tmp.path().join("run");
    let o = run_config("verify", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let rec = stderr_record(&o);
    assert_eq!(rec["failed"], serde_json::json!(["disk-oracles"]));
    let check: Value = serde_json::from_str(&std::fs::read_to_string(out.join("checks/disk-oracles.json")).unwrap()).unwrap();
    assert_eq!(check["passed"], false);
}

fn leaderboard(dir: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(dir.join("leaderboard.csv")).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn sweep_over_shapes_ranks_the_disk_first() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run_config("sweep", &configs().join("sweep-shapes.json"), &out, &["--jobs", "2"]);
    assert!(o.status.success());
    let rows = leaderboard(&out);
    assert_eq!(rows.len(), 4);
    assert_eq!(&rows[0][3], "disk");
    assert!(rows.iter().all(|r| &r[2] == "ok"));
    for i in 0..4 {
        assert!(out.join(format!("point-{i:03}/report.json")).exists());
    }
}

#[test]
fn sweep_over_torsion_penalty_shrinks_support() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run_config("sweep", &configs().join("sweep-torsion-penalty.json"), &out, &["--jobs", "3"]);
    assert!(o.status.success());
    let radii: Vec<f64> = (0..3)
        .map(|i| report(&out.join(format!("point-{i:03}")))["support_radius"].as_f64().unwrap())
        .collect();
    assert!(radii[0] > radii[1] && radii[1] > radii[2], "{radii:?}");
}

#[test]
fn one_point_sweep_equals_a_single_run() {
    let tmp = tempfile::tempdir().unwrap();
    let base = r#""grid":{"d":2,"L":1.25,"n":31},"potential":{"shape":"disk","radius":1}"#;
    let single = write_config(tmp.path(), "s.json", &format!("{{{base}}}"));
    let sweep = write_config(
        tmp.path(),
        "w.json",
        &format!(r#"{{{base},"sweep":{{"command":"eigs","axes":{{"problem.k":[1]}}}}}}"#),
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run_config("eigs", &single, &a, &[]).status.success());
    assert!(run_config("sweep", &sweep, &b, &[]).status.success());
    assert_eq!(
        std::fs::read(a.join("report.json")).unwrap(),
        std::fs::read(b.join("point-000/report.json")).unwrap()
    );
}

#[test]
fn sweep_records_failed_points_and_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"grid":{"d":2,"L":1.25,"n":31},"sweep":{"command":"torsion","axes":{"potential":[
            {"shape":"disk","radius":1},{"shape":"disk","radius":-1},{"shape":"square","half_side":0.8}]}}}"#,
    );
    let out = tmp.path().join("run");
    let o = run_config("sweep", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let rows = leaderboard(&out);
    assert_eq!(rows.iter().filter(|r| &r[2] == "failed").count(), 1);
    assert_eq!(rows.iter().filter(|r| &r[2] == "ok").count(), 2);
    assert!(out.join("point-000/report.json").exists());
    assert!(!out.join("point-001").exists());
}
