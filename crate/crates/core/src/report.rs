use serde::Serialize;

/// Outcome of one identity or invariant check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// Number of matrix elements (or points) compared.
    pub points: usize,
    pub max_residual: f64,
    pub first_failure: Option<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            passed: true,
            points: 0,
            max_residual: 0.0,
            first_failure: None,
        }
    }

    /// Records one comparison. A residual above `tol` fails the check and the
    /// first such location is kept.
    pub fn record(&mut self, residual: f64, tol: f64, location: impl FnOnce() -> String) {
        self.points += 1;
        if residual > self.max_residual || residual.is_nan() {
            self.max_residual = residual;
        }
        if !(residual <= tol) {
            self.passed = false;
            if self.first_failure.is_none() {
                self.first_failure = Some(format!("{} (residual {residual:e})", location()));
            }
        }
    }

    pub fn fail(&mut self, message: impl Into<String>) {
        self.passed = false;
        if self.first_failure.is_none() {
            self.first_failure = Some(message.into());
        }
    }
}

pub fn all_passed(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.passed)
}
