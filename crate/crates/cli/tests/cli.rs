use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_infoloss"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn temp_config(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn analysis<'a>(report: &'a Value, kind: &str) -> &'a Value {
    report["analyses"]
        .as_array()
        .unwrap()
        .iter()
        .find(|a| a["kind"] == kind)
        .unwrap_or_else(|| panic!("no {kind} analysis"))
}

#[test]
fn xor_config_reports_lossless() {
    let out = run(&["analyze", configs().join("xor.toml").to_str().unwrap()]);
    assert!(out.status.success());
    let r = json(&out);
    let loss = analysis(&r, "loss-report");
    assert_eq!(loss["invertible"], true);
    let lo = loss["loss_bracket"]["lower"].as_f64().unwrap();
    let hi = loss["loss_bracket"]["upper"].as_f64().unwrap();
    assert!(lo >= -1e-9 && hi <= 1e-3, "[{lo}, {hi}]");
    assert_eq!(r["passed"], true);
    assert!(r.get("timings").is_none());
}

#[test]
fn squarer_config_reports_two_thirds() {
    let r = json(&run(&["analyze", configs().join("squarer.toml").to_str().unwrap()]));
    let loss = analysis(&r, "loss-report");
    let lo = loss["loss_bracket"]["lower"].as_f64().unwrap();
    let hi = loss["loss_bracket"]["upper"].as_f64().unwrap();
    assert!(lo - 1e-6 <= 2.0 / 3.0 && 2.0 / 3.0 <= hi + 1e-6);
    assert_eq!(loss["preimage_bound"].as_f64(), Some(1.0));
    assert_eq!(analysis(&r, "invertibility")["invertible"], false);
}

#[test]
fn reports_are_byte_identical() {
    let path = configs().join("cascade.toml");
    let a = run(&["analyze", path.to_str().unwrap()]);
    let b = run(&["analyze", path.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    let s1 = run(&["suite", "thm1-identity", "--seed", "9", "--instances", "20"]);
    let s2 = run(&["suite", "thm1-identity", "--seed", "9", "--instances", "20"]);
    assert_eq!(s1.stdout, s2.stdout);
}

#[test]
fn timings_flag_adds_wall_time() {
    let r = json(&run(&["--timings", "analyze", configs().join("xor.toml").to_str().unwrap()]));
    let t = r["timings"].as_array().unwrap();
    assert_eq!(t.last().unwrap()["analysis"], "total");
}

#[test]
fn missing_key_is_named() {
    let f = temp_config(
        r#"
        [alphabets.bits]
        ring = "mod-2"
        [source]
        alphabet = "bits"
        pmf = [0.5, 0.5]
        [system]
        kind = "identity"
        [[analysis]]
        kind = "bound"
        "#,
    );
    let out = run(&["analyze", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing field `alphabet`"), "{err}");
}

#[test]
fn undefined_alphabet_reference_is_named() {
    let f = temp_config(
        r#"
        [source]
        alphabet = "bits"
        pmf = [0.5, 0.5]
        [system]
        kind = "xor-filter"
        [[analysis]]
        kind = "loss-report"
        "#,
    );
    let out = run(&["analyze", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alphabets.bits"));
}

#[test]
fn path_cap_from_environment() {
    let out = bin()
        .args(["analyze", configs().join("cascade.toml").to_str().unwrap()])
        .env("INFOLOSS_PATH_CAP", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("path cap exceeded") && err.contains("cap is 2") || err.contains("than 2 paths"), "{err}");
}

#[test]
fn suites_pass() {
    for (name, n) in [("dpi", "100"), ("cor2-lossless", "100"), ("thm3-additivity", "50")] {
        let out = run(&["suite", name, "--seed", "1", "--instances", n]);
        assert!(out.status.success(), "{name}");
        let r = json(&out);
        assert_eq!(r["passed"].as_u64().unwrap().to_string(), n, "{name}");
        assert_eq!(r["failed"], 0);
    }
}

#[test]
fn wrong_seed_fails_roundtrip_from_first_sample() {
    let path = configs().join("multiplier.toml");
    let ok = run(&["roundtrip", path.to_str().unwrap(), "--input", "2,1,2,2,1"]);
    assert!(ok.status.success());
    assert_eq!(json(&ok)["reconstruction"], serde_json::json!(["2", "1", "2", "2", "1"]));

    let bad = run(&[
        "roundtrip",
        path.to_str().unwrap(),
        "--input",
        "2,1,2,2,1",
        "--seed-symbols",
        "1",
    ]);
    assert_eq!(bad.status.code(), Some(1));
    let r = json(&bad);
    assert_eq!(r["passed"], false);
    assert_eq!(r["first_mismatch"], 0);
}

#[test]
fn random_roundtrip_uses_config_parameters() {
    let r = json(&run(&["roundtrip", configs().join("xor.toml").to_str().unwrap()]));
    assert_eq!(r["sequences"], 1000);
    assert_eq!(r["passed"], 1000);
}

#[test]
fn filter_subcommand() {
    let r = json(&run(&["filter", "--b", "1", "-2", "--a", "0.5"]));
    let ln2 = std::f64::consts::LN_2;
    assert!((r["roots"].as_f64().unwrap() - ln2).abs() < 1e-6);
    assert!((r["integral"].as_f64().unwrap() - ln2).abs() < 1e-6);
    assert_eq!(r["minimum_phase"], false);
    assert_eq!(r["unit"], "nats");

    let unstable = run(&["filter", "--b", "1", "--a", "1.5"]);
    assert_eq!(unstable.status.code(), Some(2));
}

#[test]
fn text_format_is_aligned() {
    let out = run(&["--format", "text", "analyze", configs().join("squarer.toml").to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("analysis loss-report"));
    assert!(text.trim_end().ends_with("result PASS"));
}
