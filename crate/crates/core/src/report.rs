//! Structured verification records.

use serde::{Deserialize, Serialize};

use crate::hardy::TruncationConfig;

/// Direction of a comparison against a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// pass iff `residual ≤ threshold`
    #[default]
    AtMost,
    /// pass iff `residual > threshold` (used for expected failures)
    Exceeds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(default)]
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub degree: usize,
    pub guard: usize,
    pub eps_residual: f64,
    pub eps_rank: f64,
    pub seed: u64,
}

impl Environment {
    pub fn new(cfg: &TruncationConfig, seed: u64) -> Self {
        Self {
            degree: cfg.degree,
            guard: cfg.guard,
            eps_residual: cfg.eps_residual,
            eps_rank: cfg.eps_rank,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub checks: Vec<CheckRecord>,
    #[serde(default)]
    pub traces: Vec<Trace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<Environment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

impl VerificationReport {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            scenario: scenario.into(),
            checks: Vec::new(),
            traces: Vec::new(),
            environment: None,
            wall_time_seconds: None,
        }
    }

    /// Records `residual ≤ threshold`. NaN residuals fail.
    pub fn at_most(&mut self, name: impl Into<String>, residual: f64, threshold: f64) -> bool {
        let pass = residual <= threshold;
        self.checks.push(CheckRecord {
            name: name.into(),
            residual,
            threshold,
            pass,
            relation: Relation::AtMost,
        });
        pass
    }

    /// Records `residual > threshold`.
    pub fn exceeds(&mut self, name: impl Into<String>, residual: f64, threshold: f64) -> bool {
        let pass = residual > threshold;
        self.checks.push(CheckRecord {
            name: name.into(),
            residual,
            threshold,
            pass,
            relation: Relation::Exceeds,
        });
        pass
    }

    /// Boolean outcome as a 0/1 residual against threshold 0.
    pub fn holds(&mut self, name: impl Into<String>, ok: bool) -> bool {
        self.at_most(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    pub fn trace(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.traces.push(Trace {
            name: name.into(),
            values,
        });
    }

    pub fn merge(&mut self, prefix: &str, other: VerificationReport) {
        for mut c in other.checks {
            c.name = format!("{prefix}{}", c.name);
            self.checks.push(c);
        }
        for mut t in other.traces {
            t.name = format!("{prefix}{}", t.name);
            self.traces.push(t);
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Largest `residual / threshold` over `AtMost` checks.
    pub fn worst_ratio(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.relation == Relation::AtMost)
            .map(|c| {
                if c.threshold > 0.0 {
                    c.residual / c.threshold
                } else if c.residual > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_pass_is_conjunction() {
        let mut r = VerificationReport::new("x");
        assert!(r.passed());
        r.at_most("a", 1e-12, 1e-8);
        r.exceeds("b", 1.0, 1e-8);
        assert!(r.passed());
        r.at_most("c", f64::NAN, 1.0);
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn serde_round_trip() {
        let mut r = VerificationReport::new("scenario");
        r.at_most("a", 0.5, 1.0);
        r.trace("l", vec![1.0, 0.25, 0.0]);
        r.environment = Some(Environment::new(&TruncationConfig::new(8).unwrap(), 3));
        let s = serde_json::to_string(&r).unwrap();
        let back: VerificationReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
