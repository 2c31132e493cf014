//! Brute-force ground truth used to check the mechanism.
//!
//! Nothing here calls into the payment rules except [`deviation_search`],
//! which needs them to price each hypothetical report. Critical values are
//! found by bisection over repeated greedy allocations, not by the closed
//! form in [`crate::mechanism::payment_critical`].

use thiserror::Error;

use crate::mechanism::{allocate_in_order, run_mechanism, score, sort_patients, utility, PaymentRule};
use crate::model::{Instance, PatientId};

/// Largest instance [`optimal_welfare`] will enumerate.
pub const OPT_MAX_PATIENTS: usize = 25;

/// Absolute width at which bisection stops.
pub const BISECT_TOLERANCE: f64 = 1e-9;

/// Utility margin above which a deviation counts as profitable.
pub const UTILITY_TOLERANCE: f64 = 1e-9;

/// Offset used on either side of each threshold in the deviation grid.
pub const GRID_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance has {n} patients; exhaustive search is limited to {limit}")]
    InstanceTooLarge { n: usize, limit: usize },
    #[error("patient {patient} does not exist (n = {n})")]
    UnknownPatient { patient: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub opt_welfare: f64,
    /// Ascending patient ids.
    pub opt_winners: Vec<PatientId>,
}

/// Maximum-welfare conflict-free subset by exhaustive enumeration.
///
/// Ties are broken toward the lexicographically smallest winner list.
pub fn optimal_welfare(instance: &Instance) -> Result<OptResult, OracleError> {
    let n = instance.num_patients();
    if n > OPT_MAX_PATIENTS {
        return Err(OracleError::InstanceTooLarge {
            n,
            limit: OPT_MAX_PATIENTS,
        });
    }
    let bids = instance.bids();
    let conflicts: Vec<u32> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && bids[i].conflicts_with(&bids[j]))
                .fold(0u32, |m, j| m | (1 << j))
        })
        .collect();
    let values: Vec<f64> = bids.iter().map(|b| b.valuation()).collect();

    let mut search = OptSearch {
        conflicts: &conflicts,
        values: &values,
        best_mask: 0,
        best_welfare: 0.0,
    };
    search.descend(0, 0, 0, 0.0);

    let opt_winners = mask_ids(search.best_mask);
    Ok(OptResult {
        opt_welfare: search.best_welfare,
        opt_winners,
    })
}

struct OptSearch<'a> {
    conflicts: &'a [u32],
    values: &'a [f64],
    best_mask: u32,
    best_welfare: f64,
}

impl OptSearch<'_> {
    fn descend(&mut self, k: usize, chosen: u32, blocked: u32, welfare: f64) {
        if k == self.values.len() {
            if welfare > self.best_welfare
                || (welfare == self.best_welfare && lex_less(chosen, self.best_mask))
            {
                self.best_welfare = welfare;
                self.best_mask = chosen;
            }
            return;
        }
        if blocked & (1 << k) == 0 {
            self.descend(
                k + 1,
                chosen | (1 << k),
                blocked | self.conflicts[k],
                welfare + self.values[k],
            );
        }
        self.descend(k + 1, chosen, blocked, welfare);
    }
}

fn mask_ids(mask: u32) -> Vec<PatientId> {
    (0..32).filter(|k| mask & (1 << k) != 0).map(PatientId).collect()
}

fn lex_less(a: u32, b: u32) -> bool {
    mask_ids(a) < mask_ids(b)
}

/// True iff no two listed winners demand a common expert.
pub fn verify_conflict_free(instance: &Instance, winners: &[PatientId]) -> bool {
    winners.iter().enumerate().all(|(k, &a)| {
        winners[k + 1..]
            .iter()
            .all(|&b| a == b || !instance.bid(a).conflicts_with(instance.bid(b)))
    })
}

fn check_patient(instance: &Instance, patient: PatientId) -> Result<(), OracleError> {
    if patient.0 >= instance.num_patients() {
        return Err(OracleError::UnknownPatient {
            patient: patient.0,
            n: instance.num_patients(),
        });
    }
    Ok(())
}

/// Whether `patient` is allocated when it reports `valuation` and every
/// other bid stays as in `instance`.
pub fn wins_at(instance: &Instance, patient: PatientId, valuation: f64) -> bool {
    let probe = instance
        .with_valuation(patient, valuation)
        .expect("probe valuation must be finite and non-negative");
    let order = sort_patients(&probe);
    allocate_in_order(&probe, &order).is_winner(patient)
}

/// Infimum winning valuation for `patient`, located by bisection over
/// `[0, v_max * sqrt(m) + 1]` with a fresh greedy run per probe.
///
/// Returns `f64::INFINITY` if the patient loses even at the top of the
/// range, which a correct greedy allocation never allows.
pub fn critical_value_bisect(instance: &Instance, patient: PatientId) -> Result<f64, OracleError> {
    check_patient(instance, patient)?;
    if wins_at(instance, patient, 0.0) {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = instance.max_valuation() * (instance.num_experts() as f64).sqrt() + 1.0;
    if !wins_at(instance, patient, hi) {
        debug_assert!(false, "patient {patient} never wins");
        return Ok(f64::INFINITY);
    }
    while hi - lo > BISECT_TOLERANCE {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if wins_at(instance, patient, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub patient_id: PatientId,
    pub true_value: f64,
    pub best_deviation_value: f64,
    pub truthful_utility: f64,
    pub best_deviation_utility: f64,
    pub violation: bool,
}

/// Outcome of one hypothetical report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOutcome {
    pub report: f64,
    pub won: bool,
    pub charge: f64,
}

/// Outcomes of every report on a patient's deviation grid, with all other
/// bids fixed. Outcomes do not depend on the patient's true value, so one
/// profile serves any number of hypothetical types.
#[derive(Debug, Clone)]
pub struct DeviationProfile {
    instance: Instance,
    patient: PatientId,
    rule: PaymentRule,
    thresholds: Vec<f64>,
    outcomes: Vec<ReportOutcome>,
}

/// Report values at which the patient's outcome can change: its bisected
/// critical value and every point where its score crosses another bid's.
pub fn deviation_thresholds(instance: &Instance, patient: PatientId) -> Result<Vec<f64>, OracleError> {
    let critical = critical_value_bisect(instance, patient)?;
    let root = (instance.bid(patient).demand().len() as f64).sqrt();
    let mut thresholds: Vec<f64> = instance
        .bids()
        .iter()
        .filter(|b| b.patient() != patient)
        .map(|b| score(b).value() * root)
        .collect();
    if critical.is_finite() {
        thresholds.push(critical);
    }
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    Ok(thresholds)
}

/// Grid of reports covering every outcome class: 0, each threshold and the
/// points `GRID_EPSILON` either side of it, midpoints between consecutive
/// thresholds, `2 * v_max`, and one point above the largest threshold.
pub fn deviation_grid(instance: &Instance, patient: PatientId) -> Result<Vec<f64>, OracleError> {
    Ok(grid_from_thresholds(instance, &deviation_thresholds(instance, patient)?))
}

fn grid_from_thresholds(instance: &Instance, thresholds: &[f64]) -> Vec<f64> {
    let mut grid = vec![0.0, 2.0 * instance.max_valuation()];
    for t in thresholds {
        grid.extend([*t - GRID_EPSILON, *t, *t + GRID_EPSILON]);
    }
    for w in thresholds.windows(2) {
        grid.push(w[0] + (w[1] - w[0]) / 2.0);
    }
    if let Some(top) = thresholds.last() {
        grid.push(top + 1.0);
    }
    grid.retain(|v| *v >= 0.0 && v.is_finite());
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn outcome_at(instance: &Instance, patient: PatientId, rule: PaymentRule, report: f64) -> ReportOutcome {
    let probe = instance
        .with_valuation(patient, report)
        .expect("report must be finite and non-negative");
    let result = run_mechanism(&probe, rule);
    ReportOutcome {
        report,
        won: result.won(patient),
        charge: result.charge(patient),
    }
}

impl DeviationProfile {
    pub fn new(instance: &Instance, patient: PatientId, rule: PaymentRule) -> Result<Self, OracleError> {
        let thresholds = deviation_thresholds(instance, patient)?;
        let outcomes = grid_from_thresholds(instance, &thresholds)
            .into_iter()
            .map(|v| outcome_at(instance, patient, rule, v))
            .collect();
        Ok(Self {
            instance: instance.clone(),
            patient,
            rule,
            thresholds,
            outcomes,
        })
    }

    /// Sorted report values at which this patient's outcome can change.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn outcomes(&self) -> &[ReportOutcome] {
        &self.outcomes
    }

    /// Compares truthful reporting of `true_value` against every grid report.
    pub fn evaluate(&self, true_value: f64) -> DeviationReport {
        let truthful = outcome_at(&self.instance, self.patient, self.rule, true_value);
        let truthful_utility = utility(true_value, truthful.won, truthful.charge);

        let mut best_value = true_value;
        let mut best_utility = truthful_utility;
        for o in &self.outcomes {
            let u = utility(true_value, o.won, o.charge);
            if u > best_utility {
                best_utility = u;
                best_value = o.report;
            }
        }
        DeviationReport {
            patient_id: self.patient,
            true_value,
            best_deviation_value: best_value,
            truthful_utility,
            best_deviation_utility: best_utility,
            violation: best_utility > truthful_utility + UTILITY_TOLERANCE,
        }
    }
}

/// Best unilateral valuation misreport for `patient` whose true value is
/// `true_value`, searched over the threshold-driven grid.
pub fn deviation_search(
    instance: &Instance,
    patient: PatientId,
    true_value: f64,
    rule: PaymentRule,
) -> Result<DeviationReport, OracleError> {
    Ok(DeviationProfile::new(instance, patient, rule)?.evaluate(true_value))
}
