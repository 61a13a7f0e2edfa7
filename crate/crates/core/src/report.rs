use serde::{Deserialize, Serialize};

/// Outcome of one identity check: the worst residual seen over all trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub trials: usize,
    pub max_residual: f64,
    pub pass: bool,
    pub tolerance: f64,
    /// Set when the premise of a conditional identity did not hold, so the
    /// conclusion was not tested.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub vacuous: bool,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            trials: 0,
            max_residual: 0.0,
            pass: true,
            tolerance,
            vacuous: false,
        }
    }

    /// Folds one residual into the report. NaN counts as a failure.
    pub fn record(&mut self, residual: f64) {
        let r = if residual.is_nan() { f64::MAX } else { residual.min(f64::MAX) };
        self.trials += 1;
        self.max_residual = self.max_residual.max(r);
        self.pass = self.max_residual <= self.tolerance;
    }

    /// Records a batch of residuals as one trial.
    pub fn record_max(&mut self, residuals: impl IntoIterator<Item = f64>) {
        let worst = residuals
            .into_iter()
            .fold(0f64, |a, r| if r.is_nan() { f64::MAX } else { a.max(r) });
        self.record(worst);
    }

    pub fn merge(&mut self, other: &CheckReport) {
        debug_assert_eq!(self.name, other.name);
        self.trials += other.trials;
        self.max_residual = self.max_residual.max(other.max_residual);
        self.vacuous = self.vacuous || other.vacuous;
        self.pass = self.max_residual <= self.tolerance;
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.max_residual <= tolerance;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_tracks_max_residual() {
        let mut r = CheckReport::new("x", 1e-8);
        assert!(r.pass);
        r.record(1e-10);
        r.record(1e-9);
        assert!(r.pass);
        assert_eq!(r.trials, 2);
        r.record(1e-3);
        assert!(!r.pass);
        assert_eq!(r.max_residual, 1e-3);

        let mut n = CheckReport::new("n", 1.0);
        n.record(f64::NAN);
        assert!(!n.pass);
    }

    #[test]
    fn vacuous_flag_is_optional_in_json() {
        let r = CheckReport::new("x", 1e-8);
        let s = serde_json::to_string(&r).unwrap();
        assert!(!s.contains("vacuous"));
        let back: CheckReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}

/// A named collection of checks evaluated together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub checks: Vec<CheckReport>,
}

impl IdentityReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().fold(0f64, |a, c| a.max(c.max_residual))
    }

    pub fn get(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}
