//! Versioned JSON documents and CSV hand-off for reports.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poincare::GateReport;

pub const SCHEMA_VERSION: &str = "1.0.0";

pub fn report_schema_version() -> &'static str {
    SCHEMA_VERSION
}

/// A report body tagged with the schema version and its kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema_version: String,
    pub kind: String,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Document<T> {
    pub fn new(kind: &str, body: T) -> Self {
        Self { schema_version: SCHEMA_VERSION.to_string(), kind: kind.to_string(), body }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    /// One line, for JSON-lines streams.
    pub fn to_json_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("report serialization");
        s.push('\n');
        s
    }
}

impl<T: DeserializeOwned> Document<T> {
    /// Rejects documents with a different major schema version.
    pub fn parse(s: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(s)?;
        let major = |v: &str| v.split('.').next().map(str::to_owned);
        if major(&doc.schema_version) != major(SCHEMA_VERSION) {
            return Err(Error::Parse(format!("unsupported schema version {} (expected {SCHEMA_VERSION})", doc.schema_version)));
        }
        Ok(doc)
    }
}

/// (⟨ξ⟩, margin) pairs, one row per kept margin.
pub fn margins_csv(report: &GateReport) -> String {
    let mut out = String::from("weight,margin,lambda_min_pos,index\n");
    for m in &report.margins {
        out.push_str(&format!("{},{},{},\"{}\"\n", m.weight, m.margin, m.lambda_min_pos, m.index));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::golden_ratio;
    use crate::fourier::{su2_dual_range, Direction};
    use crate::poincare::{gate_scan, torus_field_gate};
    use crate::solvability::{solvability_gate, torus_solvability_gate, SolvabilityReport};
    use crate::spectral::DEFAULT_RANK_TOL;
    use crate::su2::su2_field_symbols;
    use crate::tube::{tube_t2_gate, Profile, TubeT2Report};

    fn stable<T: Serialize + DeserializeOwned>(kind: &str, body: T) {
        let first = Document::new(kind, body).to_json();
        let parsed: Document<T> = Document::parse(&first).unwrap();
        assert_eq!(parsed.schema_version, "1.0.0");
        let second = parsed.to_json();
        assert_eq!(first, second);
        let third = Document::<T>::parse(&second).unwrap().to_json_line();
        assert_eq!(Document::<T>::parse(&third).unwrap().to_json(), first);
    }

    #[test]
    fn version_string() {
        assert_eq!(report_schema_version(), "1.0.0");
        let doc = Document::new("x", serde_json::json!({"a": 1}));
        assert!(doc.to_json().contains("\"schema_version\": \"1.0.0\""));
    }

    #[test]
    fn gate_reports_round_trip() {
        let sigma = su2_field_symbols(&[0.6, 0.0, 0.8], 8);
        stable::<GateReport>("gate", gate_scan(&sigma, 1.0, &su2_dual_range(8), DEFAULT_RANK_TOL).unwrap());
        let dir = Direction::new(vec![1.0, golden_ratio()]);
        stable::<GateReport>("gate", torus_field_gate(&dir, 2.0, 200.0).unwrap());
        let zero = su2_field_symbols(&[0.0, 0.0, 0.0], 2);
        stable::<GateReport>("gate", gate_scan(&zero, 1.0, &su2_dual_range(2), DEFAULT_RANK_TOL).unwrap());
    }

    #[test]
    fn solvability_reports_round_trip() {
        let sigma = su2_field_symbols(&[0.0, 0.0, 1.0], 6);
        stable::<SolvabilityReport>("solvability", solvability_gate(&sigma, &su2_dual_range(6), DEFAULT_RANK_TOL).unwrap());
        let dir = Direction::new(vec![1.0, golden_ratio()]);
        stable::<SolvabilityReport>("solvability", torus_solvability_gate(&dir, 300.0).unwrap());
    }

    #[test]
    fn tube_report_round_trips() {
        let p = Profile::new(golden_ratio(), vec![], vec![1.0]);
        stable::<TubeT2Report>("tube", tube_t2_gate(&p, &[1.5, 2.0], 100, 100.0).unwrap());
    }

    #[test]
    fn foreign_major_version_is_rejected() {
        let s = r#"{"schema_version": "2.0.0", "kind": "x", "a": 1}"#;
        assert!(matches!(Document::<serde_json::Value>::parse(s), Err(Error::Parse(_))));
        let ok = r#"{"schema_version": "1.3.0", "kind": "x", "a": 1}"#;
        assert!(Document::<serde_json::Value>::parse(ok).is_ok());
    }

    #[test]
    fn csv_rows() {
        let dir = Direction::new(vec![1.0, golden_ratio()]);
        let r = torus_field_gate(&dir, 2.0, 50.0).unwrap();
        let csv = margins_csv(&r);
        assert_eq!(csv.lines().count(), r.margins.len() + 1);
        assert!(csv.starts_with("weight,margin"));
    }
}
