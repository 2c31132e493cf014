//! Bodies of the cargo-fuzz targets, shared with the corpus replay test.
//!
//! Each function must never panic on arbitrary input; any panic is a bug.

use crate::format::{parse_instance, parse_result, verify_result, write_instance, write_result, ResultFile};
use crate::harness::{parse_properties, SeedRange};
use crate::mechanism::{run_mechanism, PaymentRule};
use crate::model::PatientId;
use crate::oracle::{critical_value_bisect, verify_conflict_free};

/// Bisection reruns greedy ~60 times per winner; keep fuzz inputs cheap.
const MAX_ORACLE_PATIENTS: usize = 12;

pub fn parse_instance_bytes(data: &[u8]) {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_instance(text);
    }
}

pub fn parse_result_bytes(data: &[u8]) {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(file) = parse_result(text) {
            let again = parse_result(&crate::format::write_result_file(&file)).expect("written result reparses");
            assert_eq!(again.winners, file.winners);
            assert_eq!(again.sorted_order, file.sorted_order);
        }
    }
}

/// Any instance that parses must survive a write/parse round trip unchanged.
pub fn instance_round_trip(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(instance) = parse_instance(text) else { return };
    let written = write_instance(&instance);
    let back = parse_instance(&written).expect("written instance reparses");
    assert_eq!(back, instance);
    assert_eq!(write_instance(&back), written);
}

/// Runs both payment rules on any parseable instance and checks the
/// invariants every result must satisfy.
pub fn mechanism_invariants(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(instance) = parse_instance(text) else { return };
    for rule in PaymentRule::ALL {
        let result = run_mechanism(&instance, rule);
        assert_eq!(result, run_mechanism(&instance, rule));
        let winners: Vec<PatientId> = result.allocation.winners().collect();
        assert!(verify_conflict_free(&instance, &winners));
        for p in instance.patients() {
            let charge = result.charge(p);
            if result.won(p) {
                assert!(charge >= 0.0 && charge <= instance.bid(p).valuation() * (1.0 + 1e-12));
            } else {
                assert_eq!(charge, 0.0);
            }
        }
        let written = write_result(&result);
        let file = parse_result(&written).expect("written result reparses");
        assert_eq!(file, ResultFile::from(&result).rounded());
        assert!(verify_result(&instance, &file).is_empty());
    }
    if instance.num_patients() <= MAX_ORACLE_PATIENTS && instance.max_valuation() < 1e6 {
        let result = run_mechanism(&instance, PaymentRule::Critical);
        for p in result.allocation.winners() {
            let bisected = critical_value_bisect(&instance, p).expect("patient exists");
            assert!((bisected - result.charge(p)).abs() <= 1e-6, "{p}: {bisected} vs {}", result.charge(p));
        }
    }
}

pub fn cli_arguments(data: &[u8]) {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = text.parse::<SeedRange>();
        let _ = parse_properties(text);
        let _ = text.parse::<PaymentRule>();
    }
}
