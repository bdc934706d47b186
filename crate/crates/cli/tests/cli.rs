use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carleman-lab"))
        .args(args)
        .current_dir(dir)
        .env("CARLEMAN_LAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn spectrum_at_one_half_is_minus_k_squared() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["spectrum", "--s", "0.5", "--k-max", "4", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/spectrum.csv")).unwrap();
    assert_eq!(column(&csv, "lambda_explicit"), vec![0.0, -1.0, -4.0, -9.0, -16.0]);
    assert!(!csv.contains("-0.0"));
    assert!(column(&csv, "rel_err").iter().all(|e| *e < 1e-3));
}

#[test]
fn homogeneous_doubling_ratio_is_eight() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["doubling", "--family", "homogeneous", "--k", "2", "--s", "0.5", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/doubling.csv")).unwrap();
    let ratios = column(&csv, "ratio");
    assert_eq!(ratios.len(), 4);
    assert!(ratios.iter().all(|r| (r - 8.0).abs() < 8e-3), "{ratios:?}");
}

#[test]
fn verify_quick_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(dir.path(), &["verify", "--quick", "--seed", "5", "--out", "a"]);
    let b = run(dir.path(), &["verify", "--quick", "--seed", "5", "--out", "b"]);
    // exit 1 only for failed criteria, never for configuration problems
    assert!(matches!(a.status.code(), Some(0 | 1)));
    assert_eq!(a.status.code(), b.status.code());
    let ra = std::fs::read(dir.path().join("a/verify.json")).unwrap();
    let rb = std::fs::read(dir.path().join("b/verify.json")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().filter(|l| l.starts_with('[')).count(), 10);
    let report: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(report["all_passed"].as_bool(), Some(a.status.code() == Some(0)));
    assert!(dir.path().join("a/verify.meta.json").exists());
}

#[test]
fn reruns_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &'static str| ["carleman", "--quick", "--s", "0.5", "--tau", "2,4", "--family", "random_bump", "--out", o];
    let a = run(dir.path(), &args("a"));
    let b = run(dir.path(), &args("b"));
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(b.status.code(), Some(0));
    for name in ["carleman.csv", "carleman.json"] {
        assert_eq!(std::fs::read(dir.path().join("a").join(name)).unwrap(), std::fs::read(dir.path().join("b").join(name)).unwrap());
    }
    let csv = std::fs::read_to_string(dir.path().join("a/carleman.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 25 * 2);
}

#[test]
fn config_file_is_merged_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"s": [0.3], "k-max": 2, "out": "from-file"}"#).unwrap();
    let out = run(dir.path(), &["spectrum", "--config", "cfg.json", "--k-max", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("from-file/spectrum.csv")).unwrap();
    assert_eq!(column(&csv, "k"), vec![0.0, 1.0, 2.0, 3.0]);
    assert!(column(&csv, "s").iter().all(|s| *s == 0.3));
}

#[test]
fn extension_reproduces_its_samples() {
    let dir = tempfile::tempdir().unwrap();
    let mut input = String::from("y1,value\n");
    for j in 0..16 {
        let y = 1.0 + 0.25 * j as f64;
        input.push_str(&format!("{y},{}\n", (std::f64::consts::PI * y / 2.0).sin()));
    }
    std::fs::write(dir.path().join("in.csv"), input).unwrap();
    let out = run(dir.path(), &["extend", "--input", "in.csv", "--s", "0.4", "--grid-size", "16", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let header: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/extension.json")).unwrap()).unwrap();
    assert!(header[0]["trace_error"].as_f64().unwrap() < 1e-10);
    assert!(header[0]["d_s"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(dir.path().join("o/extension-s0.4.csv")).unwrap();
    // the boundary row at the first sample carries its value
    let hit = csv.lines().skip(1).any(|l| {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        (v[0] - 1.0).abs() < 1e-12 && v[1] == 0.0 && (v[2] - 1.0).abs() < 1e-10
    });
    assert!(hit);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["spectrum", "--s", "1.2"][..],
        &["carleman", "--tau", "0.1"],
        &["trace", "--family", "unknown"],
        &["extend"],
        &["spectrum", "--config", "missing.json"],
        &["nonsense"],
    ] {
        let out = run(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}
