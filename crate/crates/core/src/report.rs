use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    /// Passed, but only because the bound being checked is trivial.
    Vacuous,
    /// Informational finding that is not a hard failure.
    Info,
}

impl Verdict {
    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Vacuous => "VACUOUS",
            Verdict::Info => "INFO",
        };
        f.write_str(s)
    }
}

/// Structured outcome of one numerical check.
///
/// `worst_slack` is signed so that negative means the checked inequality is
/// violated; the verdict is `FAIL` exactly when it drops below `-tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    #[serde(default)]
    pub target: String,
    #[serde(default)]
    pub digest: String,
    pub verdict: Verdict,
    pub worst_slack: f64,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub runtime_ms: u64,
}

impl VerificationReport {
    pub fn from_slack(check_name: impl Into<String>, worst_slack: f64, tol: f64) -> Self {
        let verdict = if worst_slack >= -tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            check_name: check_name.into(),
            target: String::new(),
            digest: String::new(),
            verdict,
            worst_slack,
            constants: BTreeMap::new(),
            notes: Vec::new(),
            runtime_ms: 0,
        }
    }

    pub fn with_constant(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_target(mut self, target: impl Into<String>) -> Self {
        self.target = target.into();
        self
    }

    /// Force a failing verdict (e.g. a structural condition failed even though
    /// the numerical slack is fine).
    pub fn failed(mut self, note: impl Into<String>) -> Self {
        self.verdict = Verdict::Fail;
        self.notes.push(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        !self.verdict.is_fail()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fail_iff_slack_below_tolerance() {
        assert_eq!(VerificationReport::from_slack("x", -1e-9, 1e-8).verdict, Verdict::Pass);
        assert_eq!(VerificationReport::from_slack("x", -1e-7, 1e-8).verdict, Verdict::Fail);
        assert_eq!(
            VerificationReport::from_slack("x", f64::NAN, 1e-8).verdict,
            Verdict::Fail
        );
    }

    #[test]
    fn verdict_serializes_uppercase() {
        assert_eq!(serde_json::to_string(&Verdict::Vacuous).unwrap(), "\"VACUOUS\"");
    }
}
