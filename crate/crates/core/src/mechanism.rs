//! The greedy expert-hiring mechanism.
//!
//! Patients are ranked by `v / sqrt(|D|)`, admitted greedily whenever their
//! bundle is disjoint from everything already granted, and charged by one of
//! two payment rules:
//!
//! * [`PaymentRule::PaperLiteral`]: the winner pays for the earliest later
//!   bidder `j` that conflicts with it and with no other bidder ranked before
//!   `j`. If no such bidder exists the winner pays nothing.
//! * [`PaymentRule::Critical`]: the winner pays its critical value, the
//!   infimum report at which it still wins with every other bid fixed.
//!
//! Ties in the ranking are broken by ascending patient id, so the ordering is
//! a strict total order and every output is a pure function of the input.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::model::{Bid, ExpertId, Instance, PatientId};

/// Ranking key `valuation / sqrt(|demand|)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Score(f64);

impl Score {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn score(bid: &Bid) -> Score {
    Score(bid.valuation() / (bid.demand().len() as f64).sqrt())
}

/// Strict ranking order: higher score first, then lower patient id.
fn rank_cmp(a: (Score, PatientId), b: (Score, PatientId)) -> Ordering {
    b.0 .0.total_cmp(&a.0 .0).then(a.1.cmp(&b.1))
}

/// Patient ids in non-increasing score order, ties by ascending id.
pub fn sort_patients(instance: &Instance) -> Vec<PatientId> {
    let mut keyed: Vec<(Score, PatientId)> = instance
        .bids()
        .iter()
        .map(|b| (score(b), b.patient()))
        .collect();
    keyed.sort_unstable_by(|a, b| rank_cmp(*a, *b));
    keyed.into_iter().map(|(_, p)| p).collect()
}

/// A conflict-free set of winners, each granted exactly its demanded bundle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Allocation {
    granted: BTreeMap<PatientId, Vec<ExpertId>>,
}

impl Allocation {
    /// Winners in ascending patient id.
    pub fn winners(&self) -> impl Iterator<Item = PatientId> + '_ {
        self.granted.keys().copied()
    }

    pub fn num_winners(&self) -> usize {
        self.granted.len()
    }

    pub fn is_winner(&self, patient: PatientId) -> bool {
        self.granted.contains_key(&patient)
    }

    pub fn granted(&self, patient: PatientId) -> Option<&[ExpertId]> {
        self.granted.get(&patient).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (PatientId, &[ExpertId])> + '_ {
        self.granted.iter().map(|(p, d)| (*p, d.as_slice()))
    }
}

/// Output of the allocation phase.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOutcome {
    pub sorted_order: Vec<PatientId>,
    pub allocation: Allocation,
}

/// Scans `order`, skipping `excluded`, and admits every bid disjoint from
/// what has already been granted. Calls `on_admit` for each admitted patient
/// in admission order; returning `false` from it stops the scan.
fn greedy_scan(
    instance: &Instance,
    order: &[PatientId],
    excluded: Option<PatientId>,
    mut on_admit: impl FnMut(PatientId) -> bool,
) {
    let mut taken: HashSet<ExpertId> = HashSet::new();
    for &p in order {
        if Some(p) == excluded {
            continue;
        }
        let demand = instance.bid(p).demand();
        if demand.iter().any(|e| taken.contains(e)) {
            continue;
        }
        if !on_admit(p) {
            return;
        }
        taken.extend(demand.iter().copied());
    }
}

/// Greedy allocation over the ranking produced by [`sort_patients`].
pub fn greedy_allocate(instance: &Instance) -> GreedyOutcome {
    let sorted_order = sort_patients(instance);
    let allocation = allocate_in_order(instance, &sorted_order);
    GreedyOutcome {
        sorted_order,
        allocation,
    }
}

/// Greedy allocation over an explicit ranking.
pub fn allocate_in_order(instance: &Instance, order: &[PatientId]) -> Allocation {
    let mut granted = BTreeMap::new();
    greedy_scan(instance, order, None, |p| {
        granted.insert(p, instance.bid(p).demand().to_vec());
        true
    });
    Allocation { granted }
}

/// Per-patient charges, indexed by patient id. Losers are always charged 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PaymentVector(Vec<f64>);

impl PaymentVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn charge(&self, patient: PatientId) -> f64 {
        self.0[patient.0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc + v)
    }
}

/// Charges plus, for each winner, the patient whose bid set the price.
#[derive(Debug, Clone, PartialEq)]
pub struct Payments {
    pub charges: PaymentVector,
    pub critical_index: Vec<Option<PatientId>>,
}

impl Payments {
    fn empty(n: usize) -> Self {
        Self {
            charges: PaymentVector::zeros(n),
            critical_index: vec![None; n],
        }
    }
}

/// Payment rule as literally stated: for winner `i`, find the earliest `j`
/// ranked after `i` with `D_i ∩ D_j ≠ ∅` such that no bidder ranked before
/// `j` other than `i` conflicts with `j`, and charge
/// `v_j / sqrt(|D_j| / |D_i|)`.
///
/// `j` qualifies exactly when `i` is the unique bidder ranked before `j`
/// that conflicts with it, so a single pass that tracks, per expert, the
/// first earlier demander and whether there was a second one finds every
/// winner's `j` in `O(sum |D|)`.
pub fn payment_paper_literal(
    instance: &Instance,
    sorted_order: &[PatientId],
    allocation: &Allocation,
) -> Payments {
    let n = instance.num_patients();
    let mut out = Payments::empty(n);
    let mut first_demander: HashMap<ExpertId, PatientId> = HashMap::new();
    let mut contested: HashSet<ExpertId> = HashSet::new();

    for &j in sorted_order {
        let demand = instance.bid(j).demand();
        let mut unique: Option<PatientId> = None;
        let mut ambiguous = false;
        for e in demand {
            if contested.contains(e) {
                ambiguous = true;
                break;
            }
            if let Some(&f) = first_demander.get(e) {
                match unique {
                    None => unique = Some(f),
                    Some(u) if u != f => {
                        ambiguous = true;
                        break;
                    }
                    Some(_) => {}
                }
            }
        }
        if let (false, Some(i)) = (ambiguous, unique) {
            if allocation.is_winner(i) && out.critical_index[i.0].is_none() {
                out.critical_index[i.0] = Some(j);
                let di = instance.bid(i).demand().len() as f64;
                let bj = instance.bid(j);
                let dj = bj.demand().len() as f64;
                out.charges.0[i.0] = bj.valuation() / (dj / di).sqrt();
            }
        }
        for e in demand {
            if first_demander.contains_key(e) {
                contested.insert(*e);
            } else {
                first_demander.insert(*e, j);
            }
        }
    }
    out
}

/// Critical-value payments. For each winner `i`, greedy is rerun without
/// `i`; the first admitted bidder `j` whose bundle meets `D_i` is the one
/// `i` must outrank, so `i` pays `score(j) * sqrt(|D_i|)`, or 0 if no
/// admitted bidder ever meets `D_i`.
pub fn payment_critical(instance: &Instance, allocation: &Allocation) -> Payments {
    let order = sort_patients(instance);
    payment_critical_in_order(instance, &order, allocation)
}

fn payment_critical_in_order(
    instance: &Instance,
    order: &[PatientId],
    allocation: &Allocation,
) -> Payments {
    let mut out = Payments::empty(instance.num_patients());
    for i in allocation.winners() {
        let bid_i = instance.bid(i);
        let mut blocker = None;
        greedy_scan(instance, order, Some(i), |k| {
            if instance.bid(k).conflicts_with(bid_i) {
                blocker = Some(k);
                false
            } else {
                true
            }
        });
        if let Some(j) = blocker {
            out.critical_index[i.0] = Some(j);
            out.charges.0[i.0] =
                score(instance.bid(j)).value() * (bid_i.demand().len() as f64).sqrt();
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum PaymentRule {
    #[default]
    PaperLiteral,
    Critical,
}

impl PaymentRule {
    pub const ALL: [PaymentRule; 2] = [PaymentRule::PaperLiteral, PaymentRule::Critical];

    pub fn as_str(self) -> &'static str {
        match self {
            PaymentRule::PaperLiteral => "literal",
            PaymentRule::Critical => "critical",
        }
    }
}

impl fmt::Display for PaymentRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PaymentRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" | "paper-literal" => Ok(PaymentRule::PaperLiteral),
            "critical" => Ok(PaymentRule::Critical),
            other => Err(format!("unknown payment rule `{other}` (expected literal|critical)")),
        }
    }
}

/// Allocation, payments and the audit trail of one mechanism run.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismResult {
    pub rule: PaymentRule,
    pub sorted_order: Vec<PatientId>,
    pub allocation: Allocation,
    pub payments: PaymentVector,
    /// For each patient, the bidder that set its price (winners only).
    pub critical_index: Vec<Option<PatientId>>,
    /// Sum of reported valuations over winners.
    pub welfare: f64,
}

impl MechanismResult {
    pub fn won(&self, patient: PatientId) -> bool {
        self.allocation.is_winner(patient)
    }

    pub fn charge(&self, patient: PatientId) -> f64 {
        self.payments.charge(patient)
    }
}

pub fn run_mechanism(instance: &Instance, rule: PaymentRule) -> MechanismResult {
    let GreedyOutcome {
        sorted_order,
        allocation,
    } = greedy_allocate(instance);
    let payments = match rule {
        PaymentRule::PaperLiteral => payment_paper_literal(instance, &sorted_order, &allocation),
        PaymentRule::Critical => payment_critical_in_order(instance, &sorted_order, &allocation),
    };
    let welfare = allocation
        .winners()
        .map(|p| instance.bid(p).valuation())
        .fold(0.0, |acc, v| acc + v);
    MechanismResult {
        rule,
        sorted_order,
        allocation,
        payments: payments.charges,
        critical_index: payments.critical_index,
        welfare,
    }
}

/// Quasi-linear utility: `true_value - charge` when the demanded bundle is
/// granted, 0 otherwise.
pub fn utility(true_value: f64, won: bool, charge: f64) -> f64 {
    if won {
        true_value - charge
    } else {
        0.0
    }
}
