use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn cinestat(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cinestat"));
    cmd.args(args).env_remove("CINESTAT_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn config() -> String {
    fixture("config.json").to_string_lossy().into_owned()
}

/// Fixture config restricted to the cheap models, with the given extra keys.
fn small_config(dir: &std::path::Path, extra: &str) -> String {
    let path = dir.join("config.json");
    let text = format!(
        r#"{{
  "dataset": {:?},
  "models": ["mlr", "ann"],
  "timeseries": {{ "enabled": false }}{extra}
}}"#,
        fixture("movies.csv")
    );
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_each_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for (format, file) in [("json", "report.json"), ("md", "report.md"), ("csv", "table7_predictions.csv")] {
        let o = cinestat(&["run", "--config", &config(), "--out", out, "--format", format], &[]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join(file).exists(), "{file}");
    }
    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["models"].as_array().unwrap().len(), 8);
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert_eq!(md.lines().filter(|l| l.starts_with("## Table ")).count(), 7);
}

#[test]
fn output_dir_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#", "output_dir": "out""#);
    let o = cinestat(&["run", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/report.json").exists());
}

#[test]
fn seed_env_overrides_config_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let seeds = |env: &[(&str, &str)]| {
        let out = dir.path().join(format!("run{}", env.len()));
        let o = cinestat(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], env);
        assert_eq!(o.status.code(), Some(0));
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        v["seeds"].clone()
    };
    assert_eq!(seeds(&[])["mlp"], 0);
    let s = seeds(&[("CINESTAT_SEED", "17")]);
    assert_eq!((s["kmeans"].as_u64(), s["svm"].as_u64(), s["mlp"].as_u64()), (Some(17), Some(17), Some(17)));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = cinestat(&["run", "--config", "/no/such/config.json", "--out", "x"], &[]);
    assert_eq!(missing.status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dataset": "m.csv", "ridge_lambda": -1}"#).unwrap();
    let o = cinestat(&["run", "--config", bad.to_str().unwrap(), "--out", "x"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ridge_lambda"));

    let cfg = small_config(dir.path(), "");
    let o = cinestat(&["run", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2), "no output directory");
    let o = cinestat(&["run", "--config", &cfg, "--out", "x"], &[("CINESTAT_SEED", "-3")]);
    assert_eq!(o.status.code(), Some(2));
    let o = cinestat(&["run", "--config", &cfg, "--out", "x", "--format", "xml"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stage_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, r#"{"dataset": "absent.csv"}"#).unwrap();
    let o = cinestat(&["run", "--config", cfg.to_str().unwrap(), "--out", "x"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stage `ingest`"));
}

#[test]
fn ingest_summary_and_rows() {
    let movies = fixture("movies.csv");
    let o = cinestat(&["ingest", "--input", movies.to_str().unwrap(), "--summary"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows_loaded"], 194);
    assert_eq!(v["rows_dropped"], 6);

    let o = cinestat(&["ingest", "--input", movies.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 194);

    // the 2020 table needs its renamed vote column mapped
    let recent = fixture("recent_2020.csv");
    let o = cinestat(&["ingest", "--input", recent.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let schema = dir.path().join("schema.json");
    std::fs::write(&schema, r#"{"avg_vote": "weighted_average_vote"}"#).unwrap();
    let o = cinestat(
        &["ingest", "--input", recent.to_str().unwrap(), "--schema", schema.to_str().unwrap(), "--summary"],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows_loaded"], 40);

    std::fs::write(&schema, r#"{"rating": "x"}"#).unwrap();
    let o = cinestat(&["ingest", "--input", recent.to_str().unwrap(), "--schema", schema.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn forecast_prints_csv() {
    let o = cinestat(&["forecast", "--config", &config()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("month,point,low,high"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r[1] <= r[0] && r[0] <= r[2]));
}
