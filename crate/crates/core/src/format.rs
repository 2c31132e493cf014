//! Instance and result files.
//!
//! Both are JSON documents. Money is written as decimal strings so fixtures
//! stay exact and readable: instance valuations use the shortest string that
//! parses back to the same `f64`, result amounts use 9 fractional digits.
//!
//! ```text
//! {
//!   "version": "gca-1",
//!   "num_experts": 3,
//!   "patients": [
//!     {"id": 0, "valuation": "10", "demand": [0, 1]},
//!     {"id": 1, "valuation": "6", "demand": [1, 2]}
//!   ]
//! }
//! ```

use std::fmt::Write as _;

use serde::Deserialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::mechanism::{run_mechanism, MechanismResult, PaymentRule};
use crate::model::{Bid, ExpertId, Instance, PatientId};
use crate::oracle::verify_conflict_free;

pub const INSTANCE_VERSION: &str = "gca-1";
pub const RESULT_VERSION: &str = "gca-1-result";

/// Tolerance used when comparing amounts read back from a result file.
pub const AMOUNT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> FormatError {
    FormatError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses a non-negative decimal string (`123`, `0.5`); no sign, exponent or
/// special values.
pub fn parse_decimal(path: &str, text: &str) -> Result<f64, FormatError> {
    if let Some(rest) = text.strip_prefix('-') {
        if parse_decimal(path, rest).is_ok() {
            return Err(invalid(path, format!("negative valuation \"{text}\"")));
        }
    }
    let (int, frac) = match text.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (text, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || !frac.is_none_or(digits) {
        return Err(invalid(path, format!("\"{text}\" is not a decimal number")));
    }
    let value: f64 = text
        .parse()
        .map_err(|_| invalid(path, format!("\"{text}\" is not a decimal number")))?;
    if !value.is_finite() {
        return Err(invalid(path, format!("\"{text}\" is out of range")));
    }
    Ok(value)
}

pub fn format_amount(value: f64) -> String {
    // `+ 0.0` folds -0.0 into 0.0
    format!("{:.9}", value + 0.0)
}

fn expect_object<'a>(path: &str, v: &'a Value) -> Result<&'a Map<String, Value>, FormatError> {
    v.as_object()
        .ok_or_else(|| invalid(path, "expected an object"))
}

fn field<'a>(path: &str, obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, FormatError> {
    obj.get(key)
        .ok_or_else(|| invalid(path, format!("missing field \"{key}\"")))
}

fn reject_unknown(path: &str, obj: &Map<String, Value>, known: &[&str]) -> Result<(), FormatError> {
    match obj.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(invalid(path, format!("unknown field \"{k}\""))),
        None => Ok(()),
    }
}

fn as_index(path: &str, v: &Value) -> Result<usize, FormatError> {
    v.as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| invalid(path, format!("expected a non-negative integer, found {v}")))
}

/// Parses and validates a `gca-1` instance document. The error names the
/// first violated constraint and where it occurred.
pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let root: Value = serde_json::from_str(text)?;
    let obj = expect_object("$", &root)?;
    reject_unknown("$", obj, &["version", "num_experts", "patients"])?;

    match field("$", obj, "version")?.as_str() {
        Some(INSTANCE_VERSION) => {}
        Some(other) => {
            return Err(invalid("$.version", format!("unknown version \"{other}\" (expected \"{INSTANCE_VERSION}\")")))
        }
        None => return Err(invalid("$.version", "expected a string")),
    }
    let num_experts = as_index("$.num_experts", field("$", obj, "num_experts")?)?;
    let patients = field("$", obj, "patients")?
        .as_array()
        .ok_or_else(|| invalid("$.patients", "expected an array"))?;

    let mut bids = Vec::with_capacity(patients.len());
    for (k, p) in patients.iter().enumerate() {
        let path = format!("$.patients[{k}]");
        let rec = expect_object(&path, p)?;
        reject_unknown(&path, rec, &["id", "valuation", "demand"])?;

        let id = as_index(&format!("{path}.id"), field(&path, rec, "id")?)?;
        if id != k {
            return Err(invalid(format!("{path}.id"), format!("patient id {id} at position {k}; ids must be 0..n-1 in order")));
        }
        let valuation = match field(&path, rec, "valuation")? {
            Value::String(s) => parse_decimal(&format!("{path}.valuation"), s)?,
            other => {
                return Err(invalid(format!("{path}.valuation"), format!("expected a decimal string, found {other}")))
            }
        };
        let demand = field(&path, rec, "demand")?
            .as_array()
            .ok_or_else(|| invalid(format!("{path}.demand"), "expected an array"))?;
        if demand.is_empty() {
            return Err(invalid(format!("{path}.demand"), format!("patient {id} has an empty demand")));
        }
        let mut experts = Vec::with_capacity(demand.len());
        for (d, e) in demand.iter().enumerate() {
            let epath = format!("{path}.demand[{d}]");
            let e = as_index(&epath, e)?;
            if e >= num_experts {
                return Err(invalid(epath, format!("patient {id} demands expert {e} but num_experts is {num_experts}")));
            }
            if experts.contains(&ExpertId(e)) {
                return Err(invalid(epath, format!("patient {id} lists expert {e} twice")));
            }
            experts.push(ExpertId(e));
        }
        let bid = Bid::new(PatientId(id), experts, valuation).map_err(|e| invalid(&path, e.to_string()))?;
        bids.push(bid);
    }
    Instance::new(num_experts, bids).map_err(|e| invalid("$", e.to_string()))
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Writes an instance so that `parse_instance(&write_instance(x)) == x`.
pub fn write_instance(instance: &Instance) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"version\": \"{INSTANCE_VERSION}\",");
    let _ = writeln!(out, "  \"num_experts\": {},", instance.num_experts());
    if instance.is_empty() {
        out.push_str("  \"patients\": []\n}\n");
        return out;
    }
    out.push_str("  \"patients\": [\n");
    let n = instance.num_patients();
    for (k, b) in instance.bids().iter().enumerate() {
        let _ = write!(
            out,
            "    {{\"id\": {}, \"valuation\": \"{}\", \"demand\": [{}]}}",
            b.patient().0,
            b.valuation(),
            join(b.demand().iter().map(|e| e.0))
        );
        out.push_str(if k + 1 < n { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

/// One patient's line in a result file.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub id: usize,
    pub won: bool,
    pub charge: f64,
    pub granted: Vec<usize>,
    pub critical_index: Option<usize>,
}

/// Serialized form of a [`MechanismResult`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResultFile {
    pub rule: PaymentRule,
    pub welfare: f64,
    pub winners: Vec<usize>,
    pub sorted_order: Vec<usize>,
    pub patients: Vec<PatientRecord>,
}

impl From<&MechanismResult> for ResultFile {
    fn from(r: &MechanismResult) -> Self {
        let patients = (0..r.payments.as_slice().len())
            .map(PatientId)
            .map(|p| PatientRecord {
                id: p.0,
                won: r.won(p),
                charge: r.charge(p),
                granted: r
                    .allocation
                    .granted(p)
                    .map(|d| d.iter().map(|e| e.0).collect())
                    .unwrap_or_default(),
                critical_index: r.critical_index[p.0].map(|j| j.0),
            })
            .collect();
        Self {
            rule: r.rule,
            welfare: r.welfare,
            winners: r.allocation.winners().map(|p| p.0).collect(),
            sorted_order: r.sorted_order.iter().map(|p| p.0).collect(),
            patients,
        }
    }
}

impl ResultFile {
    /// The same file with every amount rounded as it is when written.
    pub fn rounded(&self) -> Self {
        let round = |x: f64| format_amount(x).parse::<f64>().expect("formatted amount parses");
        let mut out = self.clone();
        out.welfare = round(out.welfare);
        for p in &mut out.patients {
            p.charge = round(p.charge);
        }
        out
    }
}

pub fn write_result(result: &MechanismResult) -> String {
    write_result_file(&ResultFile::from(result))
}

pub fn write_result_file(file: &ResultFile) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"version\": \"{RESULT_VERSION}\",");
    let _ = writeln!(out, "  \"rule\": \"{}\",", file.rule);
    let _ = writeln!(out, "  \"welfare\": \"{}\",", format_amount(file.welfare));
    let _ = writeln!(out, "  \"winners\": [{}],", join(&file.winners));
    let _ = writeln!(out, "  \"sorted_order\": [{}],", join(&file.sorted_order));
    if file.patients.is_empty() {
        out.push_str("  \"patients\": []\n}\n");
        return out;
    }
    out.push_str("  \"patients\": [\n");
    let n = file.patients.len();
    for (k, p) in file.patients.iter().enumerate() {
        let crit = p
            .critical_index
            .map_or_else(|| "null".to_string(), |j| j.to_string());
        let _ = write!(
            out,
            "    {{\"id\": {}, \"won\": {}, \"charge\": \"{}\", \"granted\": [{}], \"critical_index\": {}}}",
            p.id,
            p.won,
            format_amount(p.charge),
            join(&p.granted),
            crit
        );
        out.push_str(if k + 1 < n { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResult {
    version: String,
    rule: String,
    welfare: String,
    winners: Vec<usize>,
    sorted_order: Vec<usize>,
    patients: Vec<RawPatientRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPatientRecord {
    id: usize,
    won: bool,
    charge: String,
    granted: Vec<usize>,
    critical_index: Option<usize>,
}

/// Parses a result file and checks its internal consistency (ids in order,
/// winner list matching the `won` flags, losers carrying nothing).
pub fn parse_result(text: &str) -> Result<ResultFile, FormatError> {
    let raw: RawResult = serde_json::from_str(text)?;
    if raw.version != RESULT_VERSION {
        return Err(invalid("$.version", format!("unknown version \"{}\" (expected \"{RESULT_VERSION}\")", raw.version)));
    }
    let rule: PaymentRule = raw.rule.parse().map_err(|e: String| invalid("$.rule", e))?;
    let welfare = parse_decimal("$.welfare", &raw.welfare)?;
    let n = raw.patients.len();

    let mut seen = vec![false; n];
    for (k, &p) in raw.sorted_order.iter().enumerate() {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(invalid(format!("$.sorted_order[{k}]"), "sorted_order is not a permutation of patient ids"));
        }
    }
    if raw.sorted_order.len() != n {
        return Err(invalid("$.sorted_order", "sorted_order is not a permutation of patient ids"));
    }

    let mut patients = Vec::with_capacity(n);
    for (k, p) in raw.patients.into_iter().enumerate() {
        let path = format!("$.patients[{k}]");
        if p.id != k {
            return Err(invalid(format!("{path}.id"), format!("patient id {} at position {k}", p.id)));
        }
        let charge = parse_decimal(&format!("{path}.charge"), &p.charge)?;
        if !p.won && (charge != 0.0 || !p.granted.is_empty() || p.critical_index.is_some()) {
            return Err(invalid(&path, format!("losing patient {k} carries a charge, bundle or critical index")));
        }
        if p.won && p.granted.is_empty() {
            return Err(invalid(&path, format!("winning patient {k} has an empty bundle")));
        }
        if let Some(j) = p.critical_index.filter(|&j| j >= n) {
            return Err(invalid(format!("{path}.critical_index"), format!("unknown patient {j}")));
        }
        patients.push(PatientRecord {
            id: p.id,
            won: p.won,
            charge,
            granted: p.granted,
            critical_index: p.critical_index,
        });
    }
    let flagged: Vec<usize> = patients.iter().filter(|p| p.won).map(|p| p.id).collect();
    if flagged != raw.winners {
        return Err(invalid("$.winners", "winner list does not match the patients' won flags"));
    }
    Ok(ResultFile {
        rule,
        welfare,
        winners: raw.winners,
        sorted_order: raw.sorted_order,
        patients,
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= AMOUNT_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Re-checks a result file against its instance. Returns one message per
/// discrepancy; an empty list means the file is exactly what the mechanism
/// produces and satisfies every structural invariant.
pub fn verify_result(instance: &Instance, file: &ResultFile) -> Vec<String> {
    let mut issues = Vec::new();
    let n = instance.num_patients();
    if file.patients.len() != n {
        issues.push(format!("result lists {} patients, instance has {n}", file.patients.len()));
        return issues;
    }

    let winners: Vec<PatientId> = file.winners.iter().copied().map(PatientId).collect();
    if !verify_conflict_free(instance, &winners) {
        issues.push("winners' bundles overlap".to_string());
    }
    let mut welfare = 0.0;
    for p in &file.patients {
        let bid = instance.bid(PatientId(p.id));
        if p.won {
            welfare += bid.valuation();
            let demand: Vec<usize> = bid.demand().iter().map(|e| e.0).collect();
            if p.granted != demand {
                issues.push(format!("patient {}: granted {:?} but demanded {:?}", p.id, p.granted, demand));
            }
            if p.charge > bid.valuation() + AMOUNT_TOLERANCE {
                issues.push(format!(
                    "patient {}: charge {} exceeds valuation {}",
                    p.id,
                    format_amount(p.charge),
                    format_amount(bid.valuation())
                ));
            }
        }
    }
    if !close(welfare, file.welfare) {
        issues.push(format!(
            "welfare: file says {}, winners' valuations sum to {}",
            format_amount(file.welfare),
            format_amount(welfare)
        ));
    }

    let expected = ResultFile::from(&run_mechanism(instance, file.rule));
    if expected.sorted_order != file.sorted_order {
        issues.push(format!("sorted_order: expected {:?}, found {:?}", expected.sorted_order, file.sorted_order));
    }
    if expected.winners != file.winners {
        issues.push(format!("winners: expected {:?}, found {:?}", expected.winners, file.winners));
    }
    for (e, f) in expected.patients.iter().zip(&file.patients) {
        if e.won != f.won {
            issues.push(format!("patient {}: won expected {}, found {}", e.id, e.won, f.won));
        }
        if !close(e.charge, f.charge) {
            issues.push(format!(
                "patient {}: charge expected {}, found {}",
                e.id,
                format_amount(e.charge),
                format_amount(f.charge)
            ));
        }
        if e.critical_index != f.critical_index {
            issues.push(format!(
                "patient {}: critical_index expected {:?}, found {:?}",
                e.id, e.critical_index, f.critical_index
            ));
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_text(text: &str) -> String {
        parse_instance(text).unwrap_err().to_string()
    }

    #[test]
    fn minimal_instance() {
        let i = parse_instance(
            r#"{"version": "gca-1", "num_experts": 1, "patients": [{"id": 0, "valuation": "2.5", "demand": [0]}]}"#,
        )
        .unwrap();
        assert_eq!(i.num_patients(), 1);
        assert_eq!(i.bids()[0].valuation(), 2.5);
    }

    #[test]
    fn out_of_range_expert_names_patient_and_index() {
        let msg = err_text(
            r#"{"version": "gca-1", "num_experts": 4, "patients": [{"id": 0, "valuation": "1", "demand": [5]}]}"#,
        );
        assert!(msg.contains("$.patients[0].demand[0]"), "{msg}");
        assert!(msg.contains("patient 0 demands expert 5"), "{msg}");
    }

    #[test]
    fn rejections() {
        let cases = [
            ("{", "malformed JSON"),
            (r#"{"version": "gca-2", "num_experts": 1, "patients": []}"#, "unknown version"),
            (r#"{"version": "gca-1", "num_experts": 1, "patients": [{"id": 0, "valuation": "1", "demand": []}]}"#, "empty demand"),
            (r#"{"version": "gca-1", "num_experts": 1, "patients": [{"id": 0, "valuation": "-3", "demand": [0]}]}"#, "negative valuation"),
            (r#"{"version": "gca-1", "num_experts": 1, "patients": [{"id": 0, "valuation": "1e3", "demand": [0]}]}"#, "not a decimal"),
            (r#"{"version": "gca-1", "num_experts": 1, "patients": [{"id": 0, "valuation": 3, "demand": [0]}]}"#, "decimal string"),
            (r#"{"version": "gca-1", "num_experts": 1, "patients": [{"id": 1, "valuation": "1", "demand": [0]}]}"#, "ids must be"),
            (r#"{"version": "gca-1", "num_experts": 2, "patients": [{"id": 0, "valuation": "1", "demand": [1, 1]}]}"#, "twice"),
            (r#"{"version": "gca-1", "num_experts": 1, "patients": [], "extra": 1}"#, "unknown field"),
            (r#"{"version": "gca-1", "patients": []}"#, "missing field \"num_experts\""),
        ];
        for (text, needle) in cases {
            let msg = err_text(text);
            assert!(msg.contains(needle), "{text} -> {msg}");
        }
    }

    #[test]
    fn decimal_grammar() {
        assert_eq!(parse_decimal("x", "0").unwrap(), 0.0);
        assert_eq!(parse_decimal("x", "12.250").unwrap(), 12.25);
        for bad in ["", ".5", "5.", "+1", "NaN", "inf", "1_000", " 1"] {
            assert!(parse_decimal("x", bad).is_err(), "{bad}");
        }
        let huge = "9".repeat(400);
        assert!(parse_decimal("x", &huge).is_err());
    }

    #[test]
    fn instance_round_trip() {
        let i = Instance::from_bids(5, [(vec![4, 0], 0.1), (vec![2], 1234567.891011), (vec![1, 3], 0.0)]).unwrap();
        let text = write_instance(&i);
        assert_eq!(parse_instance(&text).unwrap(), i);
        let empty = Instance::empty(0);
        assert_eq!(parse_instance(&write_instance(&empty)).unwrap(), empty);
    }

    #[test]
    fn result_formatting_and_round_trip() {
        let i2 = Instance::from_bids(2, [(vec![0], 10.0), (vec![0, 1], 8.0)]).unwrap();
        let r = run_mechanism(&i2, PaymentRule::Critical);
        let text = write_result(&r);
        assert!(text.contains("\"charge\": \"5.656854249\""), "{text}");
        assert_eq!(text, write_result(&r));
        let parsed = parse_result(&text).unwrap();
        assert_eq!(write_result_file(&parsed), text);
        assert!(verify_result(&i2, &parsed).is_empty());
    }

    #[test]
    fn empty_result_document() {
        let r = run_mechanism(&Instance::empty(0), PaymentRule::PaperLiteral);
        assert_eq!(
            write_result(&r),
            "{\n  \"version\": \"gca-1-result\",\n  \"rule\": \"literal\",\n  \"welfare\": \"0.000000000\",\n  \"winners\": [],\n  \"sorted_order\": [],\n  \"patients\": []\n}\n"
        );
    }

    #[test]
    fn verify_flags_tampered_charge() {
        let i2 = Instance::from_bids(2, [(vec![0], 10.0), (vec![0, 1], 8.0)]).unwrap();
        let mut file = ResultFile::from(&run_mechanism(&i2, PaymentRule::PaperLiteral));
        file.patients[0].charge = 5.0;
        let issues = verify_result(&i2, &file);
        assert_eq!(issues.len(), 1, "{issues:?}");
        assert!(issues[0].contains("charge expected 5.656854249, found 5.000000000"));
    }

    #[test]
    fn result_consistency_checks() {
        let text = r#"{"version": "gca-1-result", "rule": "literal", "welfare": "1.0", "winners": [],
            "sorted_order": [0], "patients": [{"id": 0, "won": true, "charge": "0", "granted": [0], "critical_index": null}]}"#;
        assert!(parse_result(text).unwrap_err().to_string().contains("won flags"));
        let text = r#"{"version": "gca-1-result", "rule": "literal", "welfare": "1.0", "winners": [0],
            "sorted_order": [0, 0], "patients": [{"id": 0, "won": true, "charge": "0", "granted": [0], "critical_index": null}]}"#;
        assert!(parse_result(text).unwrap_err().to_string().contains("permutation"));
    }
}
