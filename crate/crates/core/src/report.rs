//! Check reports: one record per verification suite run.

use serde::{Deserialize, Serialize};

/// Outcome of one named check. `pass` reflects the check's own tolerance
/// (exact checks demand an identically zero residual). `conditional` marks
/// checks whose hypotheses are not themselves verified here (they never
/// gate an exit code).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub params: serde_json::Value,
    pub max_residual: f64,
    pub pass: bool,
    pub conditional: bool,
    pub seconds: f64,
}

impl CheckReport {
    pub fn new(check: &str, params: serde_json::Value) -> Self {
        CheckReport {
            check: check.to_string(),
            params,
            max_residual: 0.0,
            pass: true,
            conditional: false,
            seconds: 0.0,
        }
    }

    pub fn conditional(mut self) -> Self {
        self.conditional = true;
        self
    }

    /// Fold one residual into the report against a tolerance.
    pub fn observe(&mut self, residual: f64, tol: f64) {
        if residual > self.max_residual {
            self.max_residual = residual;
        }
        if residual > tol {
            self.pass = false;
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{:<24} {}  max_residual={:.3e}  ({:.2}s){}",
            self.check,
            if self.pass { "PASS" } else { "FAIL" },
            self.max_residual,
            self.seconds,
            if self.conditional {
                "  [conditional]"
            } else {
                ""
            }
        )
    }
}

/// Time a closure, recording the elapsed seconds on the report it returns.
pub fn timed(f: impl FnOnce() -> CheckReport) -> CheckReport {
    let start = std::time::Instant::now();
    let mut r = f();
    r.seconds = start.elapsed().as_secs_f64();
    r
}
