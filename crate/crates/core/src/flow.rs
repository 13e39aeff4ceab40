//! The pointwise Ricci-flow ODE on curvature operators and finite-difference
//! checks of the evolution inequalities it implies.
//!
//! Under `∂g/∂t = -2 Ric` the curvature operator of a spatially homogeneous
//! solution obeys `dR/dt = 2 (R² + R#)` in the normalization of
//! [`crate::lambda2`]; this is what [`flow_rhs`] returns, and it gives
//! `dS/dt = 2 |Ric|²`. The block inequalities for `A₁ + A₂`, `C₁ + C₂` and `B₃`
//! are stated for the reaction ODE `dR/dτ = R² + R#`, i.e. in the time
//! `τ = 2t`; the checks convert derivatives accordingly.
//!
//! All checks compare a central difference of a diagnostic against its
//! predicted rate. The truncation error of the central difference is estimated
//! per point by comparing strides `h` and `2h` (`D₂ₕ - Dₕ ≈ 3 Dₕ-error`), so the
//! tolerance shrinks like `h²` with the step.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lambda2::{CurvatureOperator, Mat6, OperatorJson};
use crate::quadratic::{p_general_terms, pinch_from_eigen_data, reaction_term};

/// `dt/dτ`: Ricci-flow time runs at half the speed of reaction time.
pub const REACTION_TIME_SCALE: f64 = 2.0;

pub const BLOWUP_FACTOR: f64 = 1e6;
pub const MAX_STEP_DEFECT: f64 = 1e-3;

/// Safety factor applied to the stride-halving error estimate.
const FD_SAFETY: f64 = 4.0;
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

/// `dR/dt = 2 (R² + R#)`.
pub fn flow_rhs(r: &CurvatureOperator) -> Mat6 {
    reaction_term(r) * REACTION_TIME_SCALE
}

fn rhs_matrix(m: &Mat6) -> Mat6 {
    flow_rhs(&CurvatureOperator::from_matrix_unchecked(*m))
}

fn rk4_step(y: &Mat6, h: f64) -> Mat6 {
    let k1 = rhs_matrix(y);
    let k2 = rhs_matrix(&(y + k1 * (h / 2.0)));
    let k3 = rhs_matrix(&(y + k2 * (h / 2.0)));
    let k4 = rhs_matrix(&(y + k3 * h));
    let next = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    (next + next.transpose()) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub scalar: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub phi: f64,
    pub ratio: Option<f64>,
    pub e: Option<f64>,
    pub p: f64,
    /// Size of the two cancelling terms of `P`.
    pub p_magnitude: f64,
    pub rm_norm_sq: f64,
    pub a_eigs: [f64; 3],
    pub c_eigs: [f64; 3],
    pub b_singular: [f64; 3],
    pub bianchi_drift: f64,
}

impl Diagnostics {
    pub fn of(t: f64, op: &CurvatureOperator) -> Self {
        let ed = op.eigen_data();
        let pd = pinch_from_eigen_data(&ed);
        let (p, p_magnitude) = p_general_terms(op);
        Self {
            t,
            scalar: ed.scalar,
            psi1: pd.psi1,
            psi2: pd.psi2,
            phi: pd.phi,
            ratio: pd.ratio,
            e: pd.e,
            p,
            p_magnitude,
            rm_norm_sq: op.rm_norm_sq(),
            a_eigs: ed.a_eigs,
            c_eigs: ed.c_eigs,
            b_singular: ed.b_singular,
            bianchi_drift: op.bianchi_defect(),
        }
    }

    /// `|Rm|² / S²`, when `S ≠ 0`.
    pub fn curvature_ratio(&self) -> Option<f64> {
        (self.scalar != 0.0).then(|| self.rm_norm_sq / (self.scalar * self.scalar))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub step: f64,
    pub times: Vec<f64>,
    pub states: Vec<CurvatureOperator>,
    pub diagnostics: Vec<Diagnostics>,
}

#[derive(Serialize)]
struct TrajectoryRecord<'a> {
    t: f64,
    operator: OperatorJson,
    diagnostics: &'a Diagnostics,
}

impl FlowTrajectory {
    fn push(&mut self, t: f64, op: CurvatureOperator) {
        self.times.push(t);
        self.diagnostics.push(Diagnostics::of(t, &op));
        self.states.push(op);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_bianchi_drift(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.bianchi_drift).fold(0.0, f64::max)
    }

    /// One JSON object per time sample.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (op, d) in self.states.iter().zip(&self.diagnostics) {
            let rec = TrajectoryRecord {
                t: d.t,
                operator: op.to_json(),
                diagnostics: d,
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Fixed-step RK4 for `dR/dt = 2(R² + R#)` from `r0` to `t_end`.
///
/// The step size is validated once against the initial data by step doubling;
/// afterwards the integration stops with [`Error::BlowupDetected`] (carrying
/// the trajectory so far) once the norm exceeds [`BLOWUP_FACTOR`] times the
/// initial norm.
pub fn integrate(r0: &CurvatureOperator, t_end: f64, h: f64) -> Result<FlowTrajectory> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidStep(format!("step must be positive, got {h}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidStep(format!("t_end must be positive, got {t_end}")));
    }
    let steps = ((t_end / h).round() as usize).max(1);
    let y0 = *r0.matrix();

    let full = rk4_step(&y0, h);
    let halves = rk4_step(&rk4_step(&y0, h / 2.0), h / 2.0);
    let defect = (full - halves).norm() / full.norm().max(f64::MIN_POSITIVE);
    if defect > MAX_STEP_DEFECT {
        return Err(Error::StepTooLarge {
            defect,
            limit: MAX_STEP_DEFECT,
        });
    }

    let limit = BLOWUP_FACTOR * r0.norm();
    let mut traj = FlowTrajectory {
        step: h,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        diagnostics: Vec::with_capacity(steps + 1),
    };
    traj.push(0.0, *r0);
    let mut y = y0;
    for k in 1..=steps {
        y = rk4_step(&y, h);
        let t = k as f64 * h;
        let norm = y.norm();
        if !norm.is_finite() || norm > limit {
            return Err(Error::BlowupDetected {
                time: t,
                partial: Box::new(traj),
            });
        }
        traj.push(t, CurvatureOperator::from_matrix_unchecked(y));
    }
    Ok(traj)
}

/// Outcome of one finite-difference inequality check over a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub points: usize,
    /// Smallest raw slack; negative values are within tolerance when
    /// `worst_margin ≥ 0`.
    pub worst_slack: f64,
    /// Smallest `slack + tolerance`.
    pub worst_margin: f64,
    pub worst_time: f64,
    pub max_tolerance: f64,
    /// Points near an eigenvalue crossing, checked with one-sided differences.
    pub nonsmooth_points: usize,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            points: 0,
            worst_slack: f64::INFINITY,
            worst_margin: f64::INFINITY,
            worst_time: f64::NAN,
            max_tolerance: 0.0,
            nonsmooth_points: 0,
        }
    }

    fn record(&mut self, t: f64, slack: f64, tol: f64, nonsmooth: bool) {
        self.points += 1;
        self.nonsmooth_points += nonsmooth as usize;
        self.worst_slack = self.worst_slack.min(slack);
        self.max_tolerance = self.max_tolerance.max(tol);
        let margin = slack + tol;
        if margin < self.worst_margin {
            self.worst_margin = margin;
            self.worst_time = t;
        }
        self.passed &= margin >= 0.0;
    }
}

/// Finite-difference derivative estimate(s) with an error bound.
#[derive(Debug, Clone, Copy)]
struct FdEstimate {
    /// Central difference, or the forward/backward pair near a kink.
    values: [f64; 2],
    tol: f64,
    nonsmooth: bool,
}

fn second_diff(v: &[f64], k: usize) -> f64 {
    v[k + 1] - 2.0 * v[k] + v[k - 1]
}

/// Second difference at `k` spikes relative to the ones three samples away.
fn is_spike(v: &[f64], k: usize) -> bool {
    if k < 4 || k + 4 >= v.len() {
        return false;
    }
    let here = second_diff(v, k).abs();
    let around = second_diff(v, k - 3).abs().max(second_diff(v, k + 3).abs());
    let floor = ROUNDOFF * v[k].abs().max(1.0);
    here > 16.0 * around + floor
}

fn fd_estimate(v: &[f64], k: usize, h: f64) -> FdEstimate {
    let mag = v[k - 2..=k + 2].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let roundoff = ROUNDOFF * mag / h;
    let nonsmooth = (k - 1..=k + 1).any(|j| is_spike(v, j));
    if nonsmooth {
        // one-sided differences are first order; bound the error by the
        // smooth curvature three samples away
        let curv = second_diff(v, k - 3).abs().max(second_diff(v, k + 3).abs()) / (h * h);
        FdEstimate {
            values: [(v[k + 1] - v[k]) / h, (v[k] - v[k - 1]) / h],
            tol: FD_SAFETY * curv * h + roundoff,
            nonsmooth,
        }
    } else {
        let d1 = (v[k + 1] - v[k - 1]) / (2.0 * h);
        let d2 = (v[k + 2] - v[k - 2]) / (4.0 * h);
        FdEstimate {
            values: [d1, d1],
            tol: FD_SAFETY * (d2 - d1).abs() / 3.0 + roundoff,
            nonsmooth,
        }
    }
}

fn interior(traj: &FlowTrajectory) -> Result<std::ops::Range<usize>> {
    if traj.len() < 3 {
        return Err(Error::TrajectoryTooShort(traj.len()));
    }
    // stride-2 differences need two neighbours on each side
    Ok(2..traj.len().saturating_sub(2))
}

/// Checks `d/dτ(slack_source) ≥ rhs` style inequalities: `sign = +1` for a
/// lower bound on the derivative, `-1` for an upper bound. Time derivatives
/// are converted to reaction time.
fn check_series(
    name: &str,
    traj: &FlowTrajectory,
    series: &[f64],
    sign: f64,
    rhs: impl Fn(usize, &Diagnostics) -> (f64, f64),
) -> Result<CheckReport> {
    let mut report = CheckReport::new(name);
    let h = traj.step;
    for k in interior(traj)? {
        let d = &traj.diagnostics[k];
        let fd = fd_estimate(series, k, h);
        let (bound, bound_mag) = rhs(k, d);
        let slack = fd
            .values
            .iter()
            .map(|dv| sign * (dv / REACTION_TIME_SCALE - bound))
            .fold(f64::NEG_INFINITY, f64::max);
        let tol = fd.tol / REACTION_TIME_SCALE + ROUNDOFF * bound_mag;
        report.record(d.t, slack, tol, fd.nonsmooth);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockInequalityReport {
    pub a_block: CheckReport,
    pub c_block: CheckReport,
    pub b_block: CheckReport,
}

impl BlockInequalityReport {
    pub fn passed(&self) -> bool {
        self.a_block.passed && self.c_block.passed && self.b_block.passed
    }

    pub fn reports(&self) -> [&CheckReport; 3] {
        [&self.a_block, &self.c_block, &self.b_block]
    }
}

fn block_rate(x: [f64; 3], b: [f64; 3]) -> (f64, f64) {
    let terms = [
        x[0] * x[0],
        x[1] * x[1],
        2.0 * (x[0] + x[1]) * x[2],
        b[0] * b[0],
        b[1] * b[1],
    ];
    (terms.iter().sum(), terms.iter().map(|v| v.abs()).sum())
}

/// Reaction-ODE shadow of the block inequalities:
///
/// * `d(A₁+A₂)/dτ ≥ A₁² + A₂² + 2(A₁+A₂)A₃ + B₁² + B₂²`
/// * `d(C₁+C₂)/dτ ≥ C₁² + C₂² + 2(C₁+C₂)C₃ + B₁² + B₂²`
/// * `dB₃/dτ ≤ A₃B₃ + C₃B₃ + 2B₁B₂`
pub fn check_block_inequalities(traj: &FlowTrajectory) -> Result<BlockInequalityReport> {
    let psi1: Vec<f64> = traj.diagnostics.iter().map(|d| d.psi1).collect();
    let psi2: Vec<f64> = traj.diagnostics.iter().map(|d| d.psi2).collect();
    let phi: Vec<f64> = traj.diagnostics.iter().map(|d| d.phi).collect();
    Ok(BlockInequalityReport {
        a_block: check_series("block.a", traj, &psi1, 1.0, |_, d| {
            block_rate(d.a_eigs, d.b_singular)
        })?,
        c_block: check_series("block.c", traj, &psi2, 1.0, |_, d| {
            block_rate(d.c_eigs, d.b_singular)
        })?,
        b_block: check_series("block.b", traj, &phi, -1.0, |_, d| {
            let [b1, b2, b3] = d.b_singular;
            let terms = [d.a_eigs[2] * b3, d.c_eigs[2] * b3, 2.0 * b1 * b2];
            (terms.iter().sum(), terms.iter().map(|v| v.abs()).sum())
        })?,
    })
}

/// `d/dt(|Rm|²/S²) = 4P/S³` (Ricci-flow time).
pub fn check_ratio_law(traj: &FlowTrajectory) -> Result<CheckReport> {
    let range = interior(traj)?;
    let mut series = Vec::with_capacity(traj.len());
    for d in &traj.diagnostics {
        match d.curvature_ratio() {
            Some(v) if d.scalar > 0.0 => series.push(v),
            _ => {
                return Err(Error::ConstraintViolation(format!(
                    "scalar curvature {} not positive at t = {}",
                    d.scalar, d.t
                )))
            }
        }
    }
    let mut report = CheckReport::new("ratio_law");
    for k in range {
        let d = &traj.diagnostics[k];
        let fd = fd_estimate(&series, k, traj.step);
        let s3 = d.scalar.powi(3);
        let predicted = 4.0 * d.p / s3;
        let floor = ROUNDOFF * 4.0 * d.p_magnitude / s3;
        let defect = fd
            .values
            .iter()
            .map(|v| (v - predicted).abs())
            .fold(f64::INFINITY, f64::min);
        report.record(d.t, -defect, fd.tol + floor, fd.nonsmooth);
    }
    Ok(report)
}

/// `d/dτ(φ/√(ψ₁ψ₂)) ≤ -½ (φ/√(ψ₁ψ₂)) E`, the gradient terms vanishing for a
/// spatially constant solution.
pub fn check_pinch_evolution(traj: &FlowTrajectory) -> Result<CheckReport> {
    let mut ratio = Vec::with_capacity(traj.len());
    let mut energy = Vec::with_capacity(traj.len());
    for d in &traj.diagnostics {
        match (d.ratio, d.e) {
            (Some(r), Some(e)) => {
                ratio.push(r);
                energy.push(e);
            }
            _ => {
                return Err(Error::RatioUndefined {
                    product: d.psi1 * d.psi2,
                })
            }
        }
    }
    check_series("pinch_evolution", traj, &ratio, -1.0, |k, _| {
        let bound = -0.5 * ratio[k] * energy[k];
        (bound, bound.abs() + ratio[k].abs())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PicPreservation {
    pub passed: bool,
    /// `min_t min(ψ₁, ψ₂)`.
    pub min_margin: f64,
    pub min_time: f64,
    pub initial_margin: f64,
    pub final_margin: f64,
}

pub fn check_pic_preserved(traj: &FlowTrajectory) -> Result<PicPreservation> {
    let margins: Vec<f64> = traj.diagnostics.iter().map(|d| d.psi1.min(d.psi2)).collect();
    let (first, last) = match (margins.first(), margins.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::TrajectoryTooShort(0)),
    };
    if first <= 0.0 {
        return Err(Error::ConstraintViolation(format!(
            "initial operator is not PIC (margin {first:e})"
        )));
    }
    let (k, &min) = margins
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    Ok(PicPreservation {
        passed: min > 0.0,
        min_margin: min,
        min_time: traj.times[k],
        initial_margin: first,
        final_margin: last,
    })
}
