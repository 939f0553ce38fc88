//! Serializable run reports. A report names the scenario and the claim it
//! checks, echoes the inputs, records the measured quantities and named
//! verdicts, and carries a creation timestamp. Two reports produced from
//! identical inputs differ at most in the timestamp, which
//! [`ExtinctionReport::content_equal`] ignores.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExtinctionReport {
    pub scenario: String,
    /// Semantic name of the property being checked, for example
    /// "exponential mass decay law".
    pub claim: String,
    /// Scalar inputs, keyed by name; deterministic ordering.
    pub params: BTreeMap<String, f64>,
    /// Numerically observed extinction time, when one exists.
    pub t_num: Option<f64>,
    pub t_lower: Option<f64>,
    pub t_upper: Option<f64>,
    pub c_gn_est: Option<f64>,
    pub sup_hl: Option<f64>,
    pub convergence_order: Option<f64>,
    /// Scalar measurements, keyed by name.
    pub measured: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, bool>,
    pub notes: Vec<String>,
    pub generated_unix: u64,
}

impl ExtinctionReport {
    pub fn new(scenario: impl Into<String>, claim: impl Into<String>) -> Self {
        let generated_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            scenario: scenario.into(),
            claim: claim.into(),
            params: BTreeMap::new(),
            t_num: None,
            t_lower: None,
            t_upper: None,
            c_gn_est: None,
            sup_hl: None,
            convergence_order: None,
            measured: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            notes: Vec::new(),
            generated_unix,
        }
    }

    /// True when every named verdict holds and at least one was recorded.
    pub fn overall_pass(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.values().all(|v| *v)
    }

    /// Equality of everything except the creation timestamp.
    pub fn content_equal(&self, other: &Self) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.generated_unix = 0;
        b.generated_unix = 0;
        a == b
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s)
            .map_err(|e| Error::Parse { path: "<report>".into(), msg: e.to_string() })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_json_string().as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut s = String::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut s))
            .map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExtinctionReport {
        let mut r = ExtinctionReport::new("demo", "finite-time extinction sandwich");
        r.params.insert("im_a".into(), 1.0);
        r.params.insert("m".into(), 0.5);
        r.t_num = Some(1.9);
        r.t_lower = Some(1.68);
        r.t_upper = Some(5.2);
        r.measured.insert("residual_max".into(), 3e-7);
        r.verdicts.insert("lower_le_num".into(), true);
        r.verdicts.insert("num_le_upper".into(), true);
        r
    }

    #[test]
    fn round_trips_through_json() {
        let r = sample();
        let s = r.to_json_string();
        let back = ExtinctionReport::from_json_str(&s).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn pass_requires_nonempty_all_true() {
        let mut r = sample();
        assert!(r.overall_pass());
        r.verdicts.insert("num_le_upper".into(), false);
        assert!(!r.overall_pass());
        r.verdicts.clear();
        assert!(!r.overall_pass());
    }

    #[test]
    fn content_equality_ignores_timestamp() {
        let a = sample();
        let mut b = sample();
        b.generated_unix = a.generated_unix + 100;
        assert!(a.content_equal(&b));
        b.t_num = Some(2.0);
        assert!(!a.content_equal(&b));
    }

    #[test]
    fn json_field_order_is_deterministic() {
        let mut ra = sample();
        let mut rb = sample();
        ra.generated_unix = 7;
        rb.generated_unix = 7;
        let a = ra.to_json_string();
        let b = rb.to_json_string();
        assert_eq!(a, b);
        // maps serialize in key order
        let i = a.find("\"im_a\"").unwrap();
        let j = a.find("\"m\"").unwrap();
        assert!(i < j);
    }
}
