//! Pass/fail records for identity checks.

use serde::{Deserialize, Serialize};

/// A single measured identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// A list of measured identities; the verdict passes iff every check passes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `residual ≤ tolerance`. NaN residuals fail.
    pub fn record(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) -> bool {
        let passed = residual <= tolerance;
        self.checks.push(Check {
            name: name.into(),
            residual,
            tolerance,
            passed,
        });
        passed
    }

    /// Records a boolean condition that has no natural residual.
    pub fn record_flag(&mut self, name: impl Into<String>, ok: bool) -> bool {
        self.checks.push(Check {
            name: name.into(),
            residual: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed: ok,
        });
        ok
    }

    pub fn extend_prefixed(&mut self, prefix: &str, other: &Report) {
        for c in &other.checks {
            self.checks.push(Check {
                name: format!("{prefix}{}", c.name),
                ..c.clone()
            });
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.get(name).map(|c| c.residual)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().fold(0.0_f64, |a, c| a.max(c.residual))
    }
}

/// Axiom report produced by bialgebra validation.
pub type AxiomReport = Report;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_requires_every_check() {
        let mut r = Report::new();
        r.record("a", 1e-14, 1e-10);
        assert!(r.passed());
        r.record("b", f64::NAN, 1e-10);
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
    }
}
