use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const ROTATIONS: &str = r#"{
  "family": "affine-general",
  "matrices": [
    [[0.955336489, -0.295520207], [0.295520207, 0.955336489]],
    [[0.453596121, -0.891207360], [0.891207360, 0.453596121]]
  ],
  "offsets": [[0, 0], [0, 0]],
  "probs": [0.5, 0.5]
}"#;

fn jsplit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jsplit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run jsplit")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn splitting_verified_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = jsplit(&["check-splitting", "--family", "cantor1d", "--m-max", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("splitting.json"));
    assert_eq!(r["verified"], true);
    assert_eq!(r["m"], 1);
    assert_eq!(r["command"], "check-splitting");
    assert_eq!(r["lambda"], 0.5);
}

#[test]
fn rotations_are_unverified_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rot.json");
    std::fs::write(&cfg, ROTATIONS).unwrap();
    let o = jsplit(
        &["check-splitting", "--config", cfg.to_str().unwrap(), "--m-max", "3"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not verified"));
    // the report is still written
    assert_eq!(json(&dir.path().join("splitting.json"))["verified"], false);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["no-such-command"],
        &["check-splitting", "--family", "no-such-family"],
        &["check-splitting"],
        &["sync-rate", "--family", "cantor1d", "--bogus-flag"],
    ];
    for args in cases {
        let o = jsplit(args, dir.path());
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
    let o = jsplit(&["--help"], dir.path());
    assert_eq!(code(&o), 0);
}

#[test]
fn csv_artifacts_start_with_provenance_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = jsplit(
        &["sync-rate", "--family", "cantor1d", "--n-max", "20", "--replicas", "8", "--seed", "5"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("sync.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# jsplit sync-rate seed=5"));
    assert_eq!(lines.next(), Some("n,mean_diam,q05,q95,bound_c_rn"));
    assert_eq!(text.lines().count(), 2 + 21);
    let rate = json(&dir.path().join("rate.json"));
    assert!((rate["r_hat"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);
    assert_eq!(rate["seed"], 5);
}

#[test]
fn replay_reproduces_artifacts() {
    let first = tempfile::tempdir().unwrap();
    let o = jsplit(
        &["stationary", "--family", "cantor2d", "--n", "300", "--seed", "11"],
        first.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let second = tempfile::tempdir().unwrap();
    let manifest = first.path().join("manifest.json");
    let o = jsplit(&["replay", manifest.to_str().unwrap()], second.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["manifest.json", "stationary.csv", "stationary.json"] {
        let a = std::fs::read(first.path().join(name)).unwrap();
        let b = std::fs::read(second.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs after replay");
    }
}

#[test]
fn overrides_are_recorded_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = jsplit(
        &["check-splitting", "--family", "cantor1d", "--probs", "0.3,0.7", "--seed", "9"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["seed"], 9);
    assert_eq!(m["command"], "check-splitting");
    assert_eq!(m["family"]["noise"]["probs"], serde_json::json!([0.3, 0.7]));
    let r = json(&dir.path().join("splitting.json"));
    assert_eq!((r["mass_a"].as_f64(), r["mass_b"].as_f64()), (Some(0.3), Some(0.7)));
}

#[test]
fn clt_variance_near_quarter() {
    let dir = tempfile::tempdir().unwrap();
    let o = jsplit(
        &["clt", "--family", "cantor1d", "--observable", "coord:1", "--n", "2000", "--replicas", "200"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("clt.json"));
    let mg = r["sigma2_mg"].as_f64().unwrap();
    assert!((mg - 0.25).abs() <= 0.025, "sigma2_mg = {mg}");
}
