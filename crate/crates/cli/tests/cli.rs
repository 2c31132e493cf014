use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gca_cli::{cli_main, EXIT_FAILED, EXIT_OK, EXIT_USAGE};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn gca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gca")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Runs in-process and returns (exit code, stdout, stderr).
fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli_main(std::iter::once("gca").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn run_matches_golden_results() {
    let i3 = fixture("i3.gca");
    let i3 = i3.to_str().unwrap();
    let lit = gca(&["run", i3]);
    assert_eq!(lit.status.code(), Some(EXIT_OK));
    assert_eq!(stdout(&lit), include_str!("golden/i3.literal.json"));
    let crit = gca(&["run", "--rule", "critical", i3]);
    assert_eq!(crit.status.code(), Some(EXIT_OK));
    assert_eq!(stdout(&crit), include_str!("golden/i3.critical.json"));
}

#[test]
fn run_critical_on_i2_charges_the_blocked_bidders_price() {
    let (code, out, _) = call(&["run", "--rule=critical", fixture("i2.gca").to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains(r#"{"id": 0, "won": true, "charge": "5.656854249""#), "{out}");
}

#[test]
fn run_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let (code, printed, _) = call(&["run", fixture("i1.gca").to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(printed.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(gca_core::parse_result(&text).is_ok());
}

#[test]
fn verify_accepts_untampered_output_for_every_fixture() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["i1.gca", "i2.gca", "i3.gca", "literal_undercharge.gca", "gen_n5_m4_b2_s42.gca"] {
        for rule in ["literal", "critical"] {
            let inst = fixture(name);
            let res = dir.path().join(format!("{name}.{rule}.json"));
            let (code, ..) = call(&["run", "--rule", rule, inst.to_str().unwrap(), "-o", res.to_str().unwrap()]);
            assert_eq!(code, EXIT_OK);
            let (code, out, _) = call(&["verify", inst.to_str().unwrap(), res.to_str().unwrap()]);
            assert_eq!(code, EXIT_OK, "{name} {rule}: {out}");
            assert_eq!(out, "ok\n");
        }
    }
}

#[test]
fn verify_rejects_tampered_charge() {
    let dir = tempfile::tempdir().unwrap();
    let tampered = include_str!("golden/i3.critical.json").replace("\"4.949747468\"", "\"4.000000000\"");
    let res = dir.path().join("r.json");
    std::fs::write(&res, tampered).unwrap();
    let (code, out, _) = call(&["verify", fixture("i3.gca").to_str().unwrap(), res.to_str().unwrap()]);
    assert_eq!(code, EXIT_FAILED);
    assert!(out.contains("mismatch:") && out.contains("4.949747468"), "{out}");
    assert!(out.ends_with("FAILED\n"));
}

#[test]
fn parse_errors_and_bad_arguments_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.gca");
    std::fs::write(&bad, r#"{"version": "gca-1", "num_experts": 2, "patients": [{"id": 0, "valuation": "-1", "demand": [0]}]}"#).unwrap();
    let (code, _, err) = call(&["run", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("negative valuation"), "{err}");

    let (code, _, err) = call(&["run", dir.path().join("missing.gca").to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.starts_with("error:"));

    assert_eq!(call(&["run", "--rule=vcg", fixture("i1.gca").to_str().unwrap()]).0, EXIT_USAGE);
    assert_eq!(call(&["fuzz", "--seeds=5..1"]).0, EXIT_USAGE);
    assert_eq!(call(&["fuzz", "--check=ic,speed"]).0, EXIT_USAGE);
    assert_eq!(call(&["gen", "--n", "3", "--m", "0", "--max-bundle", "1"]).0, EXIT_USAGE);
    assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(gca(&[]).status.code(), Some(EXIT_USAGE));
    assert_eq!(call(&["--help"]).0, EXIT_OK);
}

#[test]
fn gen_matches_golden_instance() {
    let (code, out, _) = call(&["gen", "--n", "5", "--m", "4", "--max-bundle", "2", "--lo", "1", "--hi", "10", "--seed", "42"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, std::fs::read_to_string(fixture("gen_n5_m4_b2_s42.gca")).unwrap());
}

#[test]
fn fuzz_passes_under_critical_and_fails_ic_under_literal() {
    let (code, out, _) = call(&["fuzz", "--rule=critical", "--seeds=1..200", "--check=ic,ir,mono,ratio,crit"]);
    assert_eq!(code, EXIT_OK, "{out}");
    let summary = out.lines().last().unwrap().strip_prefix("summary ").unwrap();
    let json: serde_json::Value = serde_json::from_str(summary).unwrap();
    assert_eq!(json["instances_run"], 200);
    assert_eq!(json["passed"], true);

    let (code, out, _) = call(&["fuzz", "--rule=literal", "--seeds=1..200", "--check=ic"]);
    assert_eq!(code, EXIT_FAILED, "{out}");
    assert!(out.contains("first witness (seed"), "{out}");
}

#[test]
fn output_is_byte_identical_across_runs() {
    let i3 = fixture("literal_undercharge.gca");
    let a = gca(&["run", i3.to_str().unwrap()]);
    let b = gca(&["run", i3.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    let a = gca(&["fuzz", "--seeds=1..50"]);
    let b = gca(&["fuzz", "--seeds=1..50"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bench_prints_a_table() {
    let (code, out, _) = call(&["bench", "--sizes=100,200", "--m=16", "--max-bundle=4", "--reps=1"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.lines().count() >= 3, "{out}");
    assert_eq!(call(&["bench", "--sizes=100,200", "--reps=1", "--max-factor=0"]).0, EXIT_FAILED);
}
