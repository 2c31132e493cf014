//! Replays the checked-in fuzz seeds through the fuzz target bodies, so the
//! corpus stays exercised on stable toolchains without libFuzzer.

use std::fs;
use std::path::Path;

use gca_core::fuzz_support;

fn replay(target: &str, body: fn(&[u8])) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap_or_else(|e| panic!("{}: {e}", dir.display())) {
        let path = entry.unwrap().path();
        let data = fs::read(&path).unwrap();
        body(&data);
        seen += 1;
    }
    assert!(seen > 0, "no seeds in {}", dir.display());
}

#[test]
fn parse_instance_seeds() {
    replay("parse_instance", fuzz_support::parse_instance_bytes);
}

#[test]
fn parse_result_seeds() {
    replay("parse_result", fuzz_support::parse_result_bytes);
}

#[test]
fn instance_round_trip_seeds() {
    replay("instance_round_trip", fuzz_support::instance_round_trip);
}

#[test]
fn mechanism_invariant_seeds() {
    replay("mechanism_invariants", fuzz_support::mechanism_invariants);
}

#[test]
fn cli_argument_seeds() {
    replay("cli_arguments", fuzz_support::cli_arguments);
}
