use std::path::Path;
use std::process::{Command, Output};

fn qsdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsdc")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn honest_run_reports_clean_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"d":2,"m_bases":2,"n_pairs":64,"trials":10}"#);
    let o = qsdc(&["run", "--config", &cfg]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["trials"].as_array().unwrap().len(), 10);
    assert_eq!(v["aggregate"]["abort_fraction"], 0.0);
    assert_eq!(v["aggregate"]["message_fidelity"], 1.0);
}

#[test]
fn attacked_run_matches_half() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"d":3,"m_bases":4,"n_pairs":4000,"decoy_count":2000,"trials":10,"seed":11,
            "eve":{"kind":"intercept_resend","legs":["charlie_to_bob"]}}"#,
    );
    let o = qsdc(&["run", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let agg = &v["aggregate"];
    assert_eq!(agg["check"], "decoy");
    assert_eq!(agg["theoretical_eve_error_rate"], 0.5);
    let lo = agg["empirical"]["ci95"][0].as_f64().unwrap();
    let hi = agg["empirical"]["ci95"][1].as_f64().unwrap();
    assert!(lo <= 0.5 && 0.5 <= hi, "ci95 [{lo}, {hi}]");
}

#[test]
fn config_errors_exit_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    for (text, field) in [
        (r#"{"d":2,"m_bases":2,"n_pairs":64,"trials":0}"#, "trials"),
        (r#"{"d":2,"m_bases":2,"n_pairs":"many"}"#, "n_pairs"),
        (r#"{"d":1,"m_bases":2,"n_pairs":64}"#, "d"),
        ("not json", "<root>"),
    ] {
        let cfg = write(dir.path(), "bad.json", text);
        let o = qsdc(&["run", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(&format!("`{field}`")), "{text}: {err}");
    }
    let o = qsdc(&["run", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_flag_overrides_file_and_out_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"d":3,"m_bases":2,"n_pairs":48,"trials":2,"seed":1}"#);
    let out = dir.path().join("r.json");
    let o = qsdc(&["run", "--config", &cfg, "--seed", "77", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["config"]["seed"], 77);
    assert_eq!(v["trials"][1]["seed"], 78);
}

#[test]
fn parallel_and_sequential_reports_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"d":2,"m_bases":3,"n_pairs":80,"trials":8,"seed":5,
            "eve":{"kind":"intercept_resend","legs":["alice_to_charlie"]}}"#,
    );
    let a = qsdc(&["run", "--config", &cfg]);
    let b = qsdc(&["run", "--config", &cfg, "--parallel", "4"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn transcripts_are_written_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"d":2,"m_bases":2,"n_pairs":32,"trials":3}"#);
    let tdir = dir.path().join("t");
    let o = qsdc(&["run", "--config", &cfg, "--transcripts", tdir.to_str().unwrap()]);
    assert!(o.status.success());
    let mut names: Vec<String> = std::fs::read_dir(&tdir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["trial-00000.ndjson", "trial-00001.ndjson", "trial-00002.ndjson"]);
    let first = std::fs::read_to_string(tdir.join(&names[0])).unwrap();
    let header: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert_eq!(header["schema_version"], 1);
}

#[test]
fn sweep_csv_has_theoretical_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"d":3,"m_bases":2,"n_pairs":64,"epsilon_t":0.99}"#);
    let spec = write(dir.path(), "s.json", r#"{"m_bases":[2,3,4,5]}"#);
    let o = qsdc(&["sweep", "--config", &cfg, "--spec", &spec, "--format", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    let th: Vec<f64> = rows[..3].iter().map(|r| r[col("theoretical_eve_error_rate")].parse().unwrap()).collect();
    assert!((th[0] - 1.0 / 3.0).abs() < 1e-12);
    assert!((th[1] - 4.0 / 9.0).abs() < 1e-12);
    assert!((th[2] - 0.5).abs() < 1e-12);
    assert_eq!(&rows[3][col("status")], "unsupported");
}

#[test]
fn sweep_without_spec_is_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"d":2,"m_bases":2,"n_pairs":32}"#);
    let o = qsdc(&["sweep", "--config", &cfg]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn verify_passes_and_perturbation_fails() {
    let o = qsdc(&["verify"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().count() >= 4);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));

    let o = qsdc(&["verify", "--perturb-hadamard", "0.001"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("FAIL mub_unbiasedness")));
}
