//! Domain types: experts, patients' single-minded bids, and auction instances.

use std::fmt;

use thiserror::Error;

/// Index of an expert in `[0, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExpertId(pub usize);

/// Index of a patient (bidder) in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatientId(pub usize);

impl fmt::Display for ExpertId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for PatientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("patient {patient}: demand is empty")]
    EmptyDemand { patient: usize },
    #[error("patient {patient}: expert {expert} appears more than once in demand")]
    DuplicateExpert { patient: usize, expert: usize },
    #[error("patient {patient}: valuation {value} is not a finite non-negative number")]
    InvalidValuation { patient: usize, value: f64 },
    #[error("patient {patient}: expert index {expert} out of range (num_experts = {num_experts})")]
    ExpertOutOfRange {
        patient: usize,
        expert: usize,
        num_experts: usize,
    },
    #[error("bid at position {position} carries patient id {id}")]
    PatientIdMismatch { position: usize, id: usize },
    #[error("patient {patient} does not exist (n = {n})")]
    UnknownPatient { patient: usize, n: usize },
}

/// One patient's reported type: the bundle of experts it wants and what it
/// is willing to pay for exactly that bundle.
///
/// The demand is kept sorted ascending so conflict tests are a linear merge.
#[derive(Debug, Clone, PartialEq)]
pub struct Bid {
    patient: PatientId,
    demand: Vec<ExpertId>,
    valuation: f64,
}

impl Bid {
    pub fn new(
        patient: PatientId,
        demand: impl IntoIterator<Item = ExpertId>,
        valuation: f64,
    ) -> Result<Self, ModelError> {
        let mut demand: Vec<ExpertId> = demand.into_iter().collect();
        if demand.is_empty() {
            return Err(ModelError::EmptyDemand { patient: patient.0 });
        }
        if !valuation.is_finite() || valuation < 0.0 {
            return Err(ModelError::InvalidValuation {
                patient: patient.0,
                value: valuation,
            });
        }
        demand.sort_unstable();
        if let Some(w) = demand.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::DuplicateExpert {
                patient: patient.0,
                expert: w[0].0,
            });
        }
        Ok(Self {
            patient,
            demand,
            valuation,
        })
    }

    pub fn patient(&self) -> PatientId {
        self.patient
    }

    /// Demanded experts, ascending.
    pub fn demand(&self) -> &[ExpertId] {
        &self.demand
    }

    pub fn valuation(&self) -> f64 {
        self.valuation
    }

    /// True iff the two demanded bundles share at least one expert.
    pub fn conflicts_with(&self, other: &Bid) -> bool {
        sorted_intersect(&self.demand, &other.demand)
    }
}

pub(crate) fn sorted_intersect(a: &[ExpertId], b: &[ExpertId]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// A full auction: `num_experts` experts and one bid per patient, where the
/// bid at position `k` belongs to patient `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    num_experts: usize,
    bids: Vec<Bid>,
}

impl Instance {
    pub fn new(num_experts: usize, bids: Vec<Bid>) -> Result<Self, ModelError> {
        for (position, bid) in bids.iter().enumerate() {
            if bid.patient.0 != position {
                return Err(ModelError::PatientIdMismatch {
                    position,
                    id: bid.patient.0,
                });
            }
            if let Some(e) = bid.demand.iter().find(|e| e.0 >= num_experts) {
                return Err(ModelError::ExpertOutOfRange {
                    patient: position,
                    expert: e.0,
                    num_experts,
                });
            }
        }
        Ok(Self { num_experts, bids })
    }

    /// Builds an instance from `(demand, valuation)` pairs, assigning patient
    /// ids by position.
    pub fn from_bids<I, D>(num_experts: usize, bids: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (D, f64)>,
        D: IntoIterator<Item = usize>,
    {
        let bids = bids
            .into_iter()
            .enumerate()
            .map(|(k, (demand, v))| {
                Bid::new(PatientId(k), demand.into_iter().map(ExpertId), v)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(num_experts, bids)
    }

    pub fn empty(num_experts: usize) -> Self {
        Self {
            num_experts,
            bids: Vec::new(),
        }
    }

    pub fn num_experts(&self) -> usize {
        self.num_experts
    }

    pub fn num_patients(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    pub fn bids(&self) -> &[Bid] {
        &self.bids
    }

    pub fn bid(&self, patient: PatientId) -> &Bid {
        &self.bids[patient.0]
    }

    pub fn patients(&self) -> impl Iterator<Item = PatientId> + '_ {
        (0..self.bids.len()).map(PatientId)
    }

    /// Largest reported valuation, or 0 for an empty instance.
    pub fn max_valuation(&self) -> f64 {
        self.bids.iter().map(Bid::valuation).fold(0.0, f64::max)
    }

    fn check_patient(&self, patient: PatientId) -> Result<(), ModelError> {
        if patient.0 >= self.bids.len() {
            return Err(ModelError::UnknownPatient {
                patient: patient.0,
                n: self.bids.len(),
            });
        }
        Ok(())
    }

    /// Copy of this instance with one patient's valuation replaced; every
    /// other bid is untouched.
    pub fn with_valuation(&self, patient: PatientId, valuation: f64) -> Result<Self, ModelError> {
        self.check_patient(patient)?;
        let demand = self.bids[patient.0].demand.clone();
        self.with_bid(Bid::new(patient, demand, valuation)?)
    }

    /// Copy of this instance with one patient's demand replaced.
    pub fn with_demand(
        &self,
        patient: PatientId,
        demand: impl IntoIterator<Item = ExpertId>,
    ) -> Result<Self, ModelError> {
        self.check_patient(patient)?;
        let v = self.bids[patient.0].valuation;
        self.with_bid(Bid::new(patient, demand, v)?)
    }

    fn with_bid(&self, bid: Bid) -> Result<Self, ModelError> {
        let mut bids = self.bids.clone();
        let slot = bid.patient.0;
        bids[slot] = bid;
        Self::new(self.num_experts, bids)
    }

    /// Copy with every valuation multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        let bids = self
            .bids
            .iter()
            .map(|b| Bid::new(b.patient, b.demand.iter().copied(), b.valuation * factor))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(self.num_experts, bids)
    }
}
