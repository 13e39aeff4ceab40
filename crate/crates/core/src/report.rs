//! Suite reports: per-check records, config echo, JSON and text rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::lambda2::OperatorJson;

pub const SCHEMA: &str = "picflow-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Status {
    pub fn from_passed(passed: bool) -> Self {
        if passed {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        }
    }
}

/// Tolerances actually used by the checks, all derived from `--tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Algebraic identities, relative.
    pub identity: f64,
    /// `p_general` against `p_expanded`, relative.
    pub p_match: f64,
    /// `P ≤ 0` under `B Bᵗ = b² I`, relative to the magnitude of `P`'s terms.
    pub p_sign: f64,
    /// `E ≥ 0`, relative to the operator norm.
    pub e_sign: f64,
    /// Exact model data.
    pub model: f64,
    /// Cylinder structure along the flow.
    pub cylinder: f64,
    /// Bianchi drift along the flow, relative.
    pub drift: f64,
    /// Sphere scalar curvature against the closed form, relative.
    pub sphere_scalar: f64,
    /// Equality-case spread, relative to the operator norm.
    pub rigidity: f64,
}

impl Tolerances {
    pub fn from_base(tol: f64) -> Self {
        Self {
            identity: tol,
            p_match: tol * 1e2,
            p_sign: tol,
            e_sign: tol * 1e-2,
            model: tol * 1e-2,
            cylinder: tol * 10.0,
            drift: tol * 1e2,
            sphere_scalar: 1e-6,
            rigidity: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub samples: usize,
    /// Sample count for the heavy sign checks (`E ≥ 0`, `P ≤ 0`).
    pub sign_samples: usize,
    pub tol: f64,
    pub tolerances: Tolerances,
    pub optim_grid: usize,
    pub max_sum_squares_grid: usize,
    pub flow_starts: usize,
    /// Steps per random flow start.
    pub flow_steps: usize,
    /// `t_end · ‖R₀‖` for random flow starts.
    pub flow_horizon: f64,
    pub sphere_step: f64,
    pub sphere_t_end: f64,
    pub cylinder_step: f64,
    pub cylinder_t_end: f64,
    pub model_points: usize,
}

impl SuiteConfig {
    pub fn new(seed: u64, samples: usize, tol: f64) -> Self {
        Self {
            seed,
            samples,
            sign_samples: samples.saturating_mul(10),
            tol,
            tolerances: Tolerances::from_base(tol),
            optim_grid: 300,
            max_sum_squares_grid: 300,
            flow_starts: 100,
            flow_steps: 400,
            flow_horizon: 0.05,
            sphere_step: 1e-5,
            sphere_t_end: 0.08,
            cylinder_step: 1e-3,
            cylinder_t_end: 0.5,
            model_points: 100,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error::InvalidSpec;
        if self.samples == 0 {
            return Err(InvalidSpec("samples must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(InvalidSpec(format!("tol must be positive, got {}", self.tol)));
        }
        if self.optim_grid < 2 || self.max_sum_squares_grid < 1 {
            return Err(InvalidSpec("grid sizes too small".into()));
        }
        if self.flow_starts == 0 || self.flow_steps < 8 {
            return Err(InvalidSpec("flow needs at least one start and 8 steps".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    /// Cases examined.
    pub cases: usize,
    /// Smallest `tolerance - defect` over the cases; negative on failure.
    pub worst_margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    /// Operator reproducing the worst case, present on failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<OperatorJson>,
}

impl CheckRecord {
    /// A `+∞` margin (no cases) is stored as 0; NaN and `-∞` fail with
    /// margin `-f64::MAX` so the record stays valid JSON.
    pub fn new(name: impl Into<String>, cases: usize, worst_margin: f64) -> Self {
        let worst_margin = if worst_margin == f64::INFINITY {
            0.0
        } else if worst_margin.is_finite() {
            worst_margin
        } else {
            -f64::MAX
        };
        Self {
            name: name.into(),
            status: Status::from_passed(worst_margin >= 0.0),
            cases,
            worst_margin,
            detail: None,
            witness: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// Attaches the witness, which is kept only for failed records.
    pub fn with_witness(mut self, witness: impl FnOnce() -> Option<OperatorJson>) -> Self {
        if self.status == Status::Fail {
            self.witness = witness();
        }
        self
    }

    pub fn fail(mut self, detail: impl Into<String>) -> Self {
        self.status = Status::Fail;
        self.detail = Some(detail.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: String,
    pub suite: String,
    pub config: SuiteConfig,
    pub checks: Vec<CheckRecord>,
    pub status: Status,
    /// Only filled when timing is requested; it breaks byte-identical output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl SuiteReport {
    pub fn new(suite: &str, config: SuiteConfig, checks: Vec<CheckRecord>) -> Self {
        let status = Status::from_passed(checks.iter().all(CheckRecord::passed));
        Self {
            schema: SCHEMA.to_string(),
            suite: suite.to_string(),
            config,
            checks,
            status,
            wall_time_s: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.config;
        let _ = writeln!(
            s,
            "suite {} (seed {}, samples {}, tol {:e})",
            self.suite, c.seed, c.samples, c.tol
        );
        let width = self.checks.iter().map(|r| r.name.len()).max().unwrap_or(0);
        for r in &self.checks {
            let _ = write!(
                s,
                "{} {:width$} cases={:<7} margin={:+.3e}",
                r.status.as_str(),
                r.name,
                r.cases,
                r.worst_margin
            );
            if let Some(d) = &r.detail {
                let _ = write!(s, "  {d}");
            }
            s.push('\n');
            if let Some(w) = &r.witness {
                let _ = writeln!(s, "  witness {}", serde_json::to_string(w).expect("witness serializes"));
            }
        }
        if let Some(t) = self.wall_time_s {
            let _ = writeln!(s, "wall time {t:.2} s");
        }
        let _ = writeln!(s, "{}", self.status.as_str());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CurvatureOperator;

    #[test]
    fn status_follows_checks() {
        let cfg = SuiteConfig::new(1, 10, 1e-10);
        let ok = SuiteReport::new("x", cfg.clone(), vec![CheckRecord::new("a", 3, 0.5)]);
        assert!(ok.passed());
        let bad = SuiteReport::new(
            "x",
            cfg,
            vec![
                CheckRecord::new("a", 3, 0.5),
                CheckRecord::new("b", 3, -1.0).with_witness(|| Some(CurvatureOperator::identity().to_json())),
            ],
        );
        assert!(!bad.passed());
        assert_eq!(bad.failures().count(), 1);
        let json = bad.to_json();
        assert!(json.contains("\"schema\": \"picflow-report/1\""));
        assert!(json.contains("\"FAIL\""));
        let back: SuiteReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, bad);
        let w = back.checks[1].witness.as_ref().unwrap();
        let op = CurvatureOperator::from_json(w).unwrap();
        assert!((op.matrix() - CurvatureOperator::identity().matrix()).norm() < 1e-14);
        assert!(bad.to_text().ends_with("FAIL\n"));
    }

    #[test]
    fn witness_dropped_on_pass() {
        let r = CheckRecord::new("a", 1, 0.0).with_witness(|| Some(CurvatureOperator::zero().to_json()));
        assert!(r.witness.is_none());
    }

    #[test]
    fn non_finite_margins() {
        assert!(CheckRecord::new("a", 0, f64::INFINITY).passed());
        let r = CheckRecord::new("a", 1, f64::NAN);
        assert!(!r.passed());
        let back: CheckRecord = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back.worst_margin, -f64::MAX);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(SuiteConfig::new(1, 0, 1e-10).validate().is_err());
        assert!(SuiteConfig::new(1, 5, -1.0).validate().is_err());
    }
}
