use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn opmean(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opmean"))
        .args(args)
        .current_dir(dir)
        .env("OPMEAN_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn fixtures() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let files = [
        ("a.json", r#"{"dim":2,"re":[2,0,0,1]}"#),
        ("b.json", r#"{"dim":2,"re":[1,0.5,0.5,1]}"#),
        ("c.json", r#"{"dim":2,"re":[1.2,0.2,0.2,0.9]}"#),
        ("s.json", r#"{"dim":2,"re":[1,0,0,0]}"#),
        ("q.json", r#"{"dim":2,"re":[0.5,0.5,0.5,0.5]}"#),
        ("rho.json", r#"{"dim":2,"re":[0.5,0,0,0.5]}"#),
        ("sig.json", r#"{"dim":2,"re":[0.7,0.1,0.1,0.3]}"#),
        ("tau.json", r#"{"dim":2,"re":[0.4,0,0,0.6]}"#),
        ("bad.json", r#"{"dim":2,"re":[1,0,0]}"#),
        ("id.json", r#"{"kraus":[{"dim":2,"re":[1,0,0,1]}]}"#),
        (
            "dep.json",
            r#"{"dim_in":2,"dim_out":2,"choi":{"dim":4,"re":[0.5,0,0,0,0,0.5,0,0,0,0,0.5,0,0,0,0,0.5]}}"#,
        ),
    ];
    for (name, body) in files {
        std::fs::write(dir.path().join(name), body).unwrap();
    }
    dir
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn malformed_input_exits_one_with_pointer() {
    let dir = fixtures();
    let out = opmean(&["means", "--a", "bad.json", "--b", "b.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json/re"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_file_exits_one() {
    let dir = fixtures();
    let out = opmean(&["divergence", "--a", "nope.json", "--b", "b.json", "--kind", "relative"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn means_envelope() {
    let dir = fixtures();
    let out = opmean(&["means", "--a", "a.json", "--b", "b.json", "--t", "0.3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "means");
    assert_eq!(v["seed"], 7);
    assert_eq!(v["tolerances"]["dim_cap"], 4096);
    assert_eq!(v["result"]["matrix"]["dim"], 2);
}

#[test]
fn tolerance_flags_reach_the_envelope() {
    let dir = fixtures();
    let out = opmean(&["--tol", "1e-8", "--cap", "64", "appendix-a"], dir.path());
    let v = stdout_json(&out);
    assert_eq!(v["tolerances"]["eig_zero_tol"].as_f64(), Some(1e-8));
    assert_eq!(v["tolerances"]["dim_cap"], 64);
}

#[test]
fn reports_are_byte_identical() {
    let dir = fixtures();
    let args = ["membership", "--C", "c.json", "--A", "a.json", "b.json", "--n-max", "2", "--trials", "40"];
    let first = opmean(&args, dir.path());
    let second = opmean(&args, dir.path());
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn appendix_a_chain_holds() {
    let dir = fixtures();
    for (k, r) in [("1", "0.5"), ("2", "0.9")] {
        let out = opmean(&["appendix-a", "--k", k, "--r", r], dir.path());
        assert_eq!(out.status.code(), Some(0));
        let v = stdout_json(&out);
        assert_eq!(v["result"]["chain_holds"], true);
        let want = r.parse::<f64>().unwrap() - k.parse::<f64>().unwrap() * (2.0 / 3f64.sqrt()).ln();
        assert!((v["result"]["ii_shifted"].as_f64().unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn appendix_a_rejects_large_k() {
    let dir = fixtures();
    let out = opmean(&["appendix-a", "--k", "99"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn out_dir_gets_report_and_timing() {
    let dir = fixtures();
    let out = opmean(
        &["--out", "reports", "--format", "csv", "jordan", "--s", "s.json", "--q", "q.json", "--eps", "0.8"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("reports/jordan.csv")).unwrap();
    assert!(csv.starts_with("schema_version,command,key,value\n"));
    assert!(csv.contains("1,jordan,/result/blocks/0/theta,7.85398163397448"), "{csv}");
    assert!(csv.contains("1,jordan,/result/relations/0/q_dominated_by_s,true"));
    let timing: Value = serde_json::from_slice(&std::fs::read(dir.path().join("reports/jordan.timing.json")).unwrap()).unwrap();
    assert!(timing["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn divergence_and_bounds() {
    let dir = fixtures();
    let out = opmean(&["divergence", "--a", "rho.json", "--b", "tau.json", "--kind", "sandwiched", "--alpha", "2"], dir.path());
    let v = stdout_json(&out);
    // Commuting: log sum p^2 / q.
    let want = (0.25f64 / 0.4 + 0.25 / 0.6).ln();
    assert!((v["result"]["value"].as_f64().unwrap() - want).abs() < 1e-12);

    let out = opmean(&["divergence", "--a", "rho.json", "--b", "tau.json", "--kind", "petz"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = opmean(
        &["bounds", "--null", "rho.json", "sig.json", "--alt", "tau.json", "rho.json", "--r", "0.1", "--grid", "11"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["result"]["sc_improvement"].as_f64().unwrap() >= -1e-12);
}

#[test]
fn channels_report() {
    let dir = fixtures();
    let out = opmean(&["channels", "--e", "id.json", "--n1", "id.json", "--n2", "dep.json", "--trials", "30"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["result"]["consistent"], true);
    assert_eq!(v["result"]["ka_member"], true);
}

#[test]
fn reproduce_subset_as_csv() {
    let dir = fixtures();
    let out = opmean(&["--format", "csv", "reproduce-all", "--only", "1,4"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("schema_version,criterion,check,value,limit,passed\n"));
    assert!(text.lines().skip(1).all(|l| l.starts_with("1,1,") || l.starts_with("1,4,")));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn reproduce_failure_exits_two() {
    let dir = fixtures();
    let out = opmean(&["reproduce-all", "--only", "8"], dir.path());
    let v = stdout_json(&out);
    let passed = v["result"]["criteria"][0]["passed"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if passed { 0 } else { 2 }));
}
