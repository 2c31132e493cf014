//! Greedy combinatorial auction for hiring experts.
//!
//! Patients submit single-minded bids (a bundle of experts plus a valuation).
//! The mechanism ranks bids by `v / sqrt(|D|)`, admits them greedily while
//! bundles stay disjoint, and charges winners under one of two payment rules.
//! [`oracle`] provides brute-force ground truth and [`harness`] fuzzes the
//! mechanism's truthfulness, rationality, monotonicity and welfare guarantees.

pub mod format;
pub mod harness;
pub mod mechanism;
pub mod model;
pub mod oracle;

#[doc(hidden)]
pub mod fuzz_support;

pub use format::{parse_instance, parse_result, verify_result, write_instance, write_result, FormatError, ResultFile};
pub use mechanism::{
    greedy_allocate, payment_critical, payment_paper_literal, run_mechanism, score, sort_patients, utility,
    Allocation, MechanismResult, PaymentRule, PaymentVector, Score,
};
pub use model::{Bid, ExpertId, Instance, ModelError, PatientId};
