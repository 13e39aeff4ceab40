//! Verification suites assembled into [`SuiteReport`]s.
//!
//! Samples are generated and checked in parallel, but every per-case margin is
//! collected in index order and reduced sequentially, so a report depends only
//! on its config.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::RngExt;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{self, FlowTrajectory};
use crate::lambda2::{CurvatureOperator, Mat3, PicClass};
use crate::models::{self, ModelName};
use crate::optim::{self, SimplexPoint};
use crate::quadratic::{p_bound_equal_b, p_expanded, p_general_terms, pinch_data};
use crate::report::{CheckRecord, SuiteConfig, SuiteReport};
use crate::sampler::{sample_vec, substream, SampleClass, SampleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Pfunc,
    Optim,
    Flow,
    Models,
    All,
}

impl Suite {
    pub const PARTS: [Suite; 5] = [
        Suite::Identities,
        Suite::Pfunc,
        Suite::Optim,
        Suite::Flow,
        Suite::Models,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Pfunc => "pfunc",
            Suite::Optim => "optim",
            Suite::Flow => "flow",
            Suite::Models => "models",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::PARTS
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown suite `{s}`")))
    }
}

/// Independent seed for one check family.
fn stream_seed(seed: u64, family: u64) -> u64 {
    seed.wrapping_add(family.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn samples(class: SampleClass, seed: u64, family: u64, count: usize) -> Result<Vec<CurvatureOperator>> {
    sample_vec(&SampleSpec::new(class, stream_seed(seed, family), count))
}

/// `defect / magnitude`, 0 when both vanish.
fn rel(defect: f64, magnitude: f64) -> f64 {
    if defect == 0.0 {
        0.0
    } else {
        defect / magnitude.max(f64::MIN_POSITIVE)
    }
}

/// Smallest margin and its index, NaN counting as `-∞`; ties keep the lowest index.
fn worst(margins: &[f64]) -> (f64, usize) {
    margins
        .iter()
        .enumerate()
        .fold((f64::INFINITY, 0), |(m, k), (i, &v)| {
            let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
            if v < m {
                (v, i)
            } else {
                (m, k)
            }
        })
}

fn scan(name: &str, ops: &[CurvatureOperator], margin: impl Fn(&CurvatureOperator) -> f64 + Sync + Send) -> CheckRecord {
    let margins: Vec<f64> = ops.par_iter().map(margin).collect();
    let (m, k) = worst(&margins);
    CheckRecord::new(name, ops.len(), m).with_witness(|| ops.get(k).map(CurvatureOperator::to_json))
}

// Pointwise margins (`tol - relative defect`), shared with replay.

pub fn trace_margin(op: &CurvatureOperator, tol: f64) -> f64 {
    let b = op.to_blocks();
    let quarter = op.scalar() / 4.0;
    let defect = (b.a.trace() - quarter).abs().max((b.c.trace() - quarter).abs());
    tol - rel(defect, op.norm())
}

pub fn b_ricci_margin(op: &CurvatureOperator, tol: f64) -> f64 {
    let b = op.to_blocks().b.norm_squared();
    let ric = op.ricci().traceless.norm_squared();
    tol - rel((4.0 * b - ric).abs(), op.norm().powi(2))
}

pub fn cubic_det_margin(op: &CurvatureOperator, tol: f64) -> f64 {
    let e = op.eigen_data();
    let cubes: f64 = e.lambda.iter().map(|l| l.powi(3)).sum();
    tol - rel((cubes - 24.0 * e.det_b).abs(), op.norm().powi(3))
}

/// `|Rm|²` by summing all 256 components against `4‖matrix‖²`.
pub fn rm_norm_margin(op: &CurvatureOperator, tol: f64) -> f64 {
    let mut brute = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    brute += op.riemann(i, j, k, l).powi(2);
                }
            }
        }
    }
    tol - rel((brute - op.rm_norm_sq()).abs(), op.norm().powi(2))
}

pub fn json_margin(op: &CurvatureOperator, tol: f64) -> f64 {
    let text = serde_json::to_string(&op.to_json()).expect("operator serializes");
    match CurvatureOperator::from_json_str(&text) {
        Ok(back) => tol - rel((back.matrix() - op.matrix()).norm(), op.norm()),
        Err(_) => f64::NEG_INFINITY,
    }
}

pub fn p_match_margin(op: &CurvatureOperator, tol: f64) -> f64 {
    let (p, mag) = p_general_terms(op);
    tol - rel((p - p_expanded(&op.eigen_data())).abs(), mag)
}

/// `P ≤ tol·|terms|`, plus agreement with the reduced formula and its bound
/// when `B Bᵗ = b² I`.
pub fn p_equal_b_margin(op: &CurvatureOperator, tol: f64, match_tol: f64) -> f64 {
    let (p, mag) = p_general_terms(op);
    let sign = tol - rel(p.max(0.0), mag);
    let e = op.eigen_data();
    let Some(b) = e.b else {
        return f64::NEG_INFINITY;
    };
    match p_bound_equal_b(e.scalar, e.a, e.c, b) {
        Ok(red) => {
            let agree = match_tol - rel((red.p - p).abs(), mag);
            let bound = tol - rel((red.p - red.bound).max(0.0), mag);
            sign.min(agree).min(bound)
        }
        Err(_) => f64::NEG_INFINITY,
    }
}

/// `E ≥ -tol·‖R‖`.
pub fn e_sign_margin(op: &CurvatureOperator, tol: f64) -> f64 {
    match pinch_data(op).e {
        Some(e) => tol + e / op.norm().max(f64::MIN_POSITIVE),
        None => f64::NEG_INFINITY,
    }
}

/// The equality detector may only fire when the seven quantities agree.
pub fn detector_margin(op: &CurvatureOperator, spread_tol: f64) -> f64 {
    let pd = pinch_data(op);
    let n = op.norm();
    if pd.is_equality_case(n) {
        spread_tol - rel(pd.rigidity_spread(), n)
    } else {
        f64::INFINITY
    }
}

pub fn run_suite(suite: Suite, config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let checks = match suite {
        Suite::Identities => identities(config)?,
        Suite::Pfunc => pfunc(config)?,
        Suite::Optim => optim_checks(config)?,
        Suite::Flow => flow_checks(config)?,
        Suite::Models => model_checks(config)?,
        Suite::All => {
            let mut all = Vec::new();
            for part in Suite::PARTS {
                all.extend(run_suite(part, config)?.checks);
            }
            all
        }
    };
    Ok(SuiteReport::new(suite.as_str(), config.clone(), checks))
}

fn identities(config: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let tol = config.tolerances.identity;
    let ops = samples(SampleClass::Bianchi, config.seed, 1, config.samples)?;
    Ok(vec![
        scan("identities.trace_balance", &ops, |r| trace_margin(r, tol)),
        scan("identities.b_norm_ricci", &ops, |r| b_ricci_margin(r, tol)),
        scan("identities.cubic_det", &ops, |r| cubic_det_margin(r, tol)),
        scan("identities.rm_norm", &ops, |r| rm_norm_margin(r, tol)),
        scan("identities.json_roundtrip", &ops, |r| json_margin(r, tol)),
    ])
}

fn pfunc(config: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let t = config.tolerances;
    let mut out = Vec::new();

    let ops = samples(SampleClass::Bianchi, config.seed, 2, config.samples)?;
    out.push(scan("pfunc.general_vs_expanded", &ops, |r| p_match_margin(r, t.p_match)));

    let models: Vec<_> = models::all_models();
    let margins: Vec<f64> = models
        .iter()
        .map(|m| {
            let (p, mag) = p_general_terms(&m.operator);
            t.model - rel(p.abs(), mag.max(m.operator.norm().powi(3)))
        })
        .collect();
    let (m, k) = worst(&margins);
    out.push(
        CheckRecord::new("pfunc.models_vanish", models.len(), m)
            .with_witness(|| Some(models[k].operator.to_json())),
    );

    let ops = samples(SampleClass::PicEqualB, config.seed, 3, config.sign_samples)?;
    out.push(scan("pfunc.equal_b_nonpositive", &ops, |r| {
        p_equal_b_margin(r, t.p_sign, t.p_match)
    }));

    let ops = samples(SampleClass::Pic, config.seed, 4, config.sign_samples)?;
    out.push(scan("pinch.e_nonnegative", &ops, |r| e_sign_margin(r, t.e_sign)));
    out.push(scan("pinch.detector_sound", &ops, |r| detector_margin(r, t.rigidity)));

    // boundary coverage of the PIC sampler
    let near = ops
        .iter()
        .filter(|r| {
            let (p1, p2) = r.pic_quantities();
            p1.min(p2) < 0.05
        })
        .count();
    let frac = near as f64 / ops.len() as f64;
    out.push(
        CheckRecord::new("pinch.sampler_boundary_coverage", ops.len(), frac - 0.01)
            .with_detail(format!("{near} samples with min(psi) < 0.05")),
    );

    let cyl = models::model(ModelName::S3xR).operator;
    let pd = pinch_data(&cyl);
    let n = cyl.norm();
    let e_margin = t.e_sign - rel(pd.e.map_or(f64::INFINITY, f64::abs), n);
    let spread_margin = t.rigidity - rel(pd.rigidity_spread(), n);
    let mut rec = CheckRecord::new("pinch.cylinder_rigidity", 1, e_margin.min(spread_margin));
    if !pd.is_equality_case(n) {
        rec = rec.fail("equality detector did not fire on the cylinder");
    }
    if pinch_data(&CurvatureOperator::identity()).is_equality_case(CurvatureOperator::identity().norm()) {
        rec = rec.fail("equality detector fired on the sphere");
    }
    out.push(rec.with_witness(|| Some(cyl.to_json())));
    Ok(out)
}

/// Uniform point of the open simplex `{x > 0, Σx = 3}`.
fn simplex_point(rng: &mut rand_chacha::ChaCha8Rng) -> [f64; 3] {
    let e: [f64; 3] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
    let s: f64 = e.iter().sum();
    let x0 = 3.0 * e[0] / s;
    let x1 = 3.0 * e[1] / s;
    [x0, x1, 3.0 - x0 - x1]
}

/// Operator realizing `a` in both Hodge blocks with `B = 0`, used as witness
/// for the scalar problems.
fn optim_witness(a: [f64; 3], s: f64) -> Option<crate::lambda2::OperatorJson> {
    let d = Mat3::from_diagonal(&nalgebra::Vector3::from(a)) + Mat3::identity() * (s / 12.0);
    CurvatureOperator::from_blocks(&d, &Mat3::zeros(), &d).ok().map(|r| r.to_json())
}

fn optim_checks(config: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();

    let min = optim::brute_min_f(config.optim_grid, 1.0)?;
    let x = min.argmin.coords();
    let dist = x.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let margin = (1e-4 - min.min_value.abs()).min(1e-4 - dist);
    out.push(
        CheckRecord::new("optim.brute_min", 1, margin)
            .with_detail(format!("min {:e} at ({:.6}, {:.6}, {:.6})", min.min_value, x[0], x[1], x[2]))
            .with_witness(|| optim_witness(optim::x_to_a(x, 1.0), 1.0)),
    );

    let crit = optim::critical_points_f();
    let mut sorted: Vec<[f64; 3]> = crit.iter().map(SimplexPoint::sorted).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let expected = [[1.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0], [1.0, 1.0, 1.0]];
    let mut margin = if sorted.len() == 2 {
        sorted
            .iter()
            .zip(expected)
            .flat_map(|(p, q)| p.iter().zip(q).map(|(u, v)| 1e-12 - (u - v).abs()).collect::<Vec<_>>())
            .fold(f64::INFINITY, f64::min)
    } else {
        f64::NEG_INFINITY
    };
    for s in [1.0, 2.5, 6.0] {
        let w = SimplexPoint::new(expected[0])?;
        margin = margin.min(1e-12 - rel((optim::objective_f(&w, s) - s.powi(3) / 162.0).abs(), s.powi(3)));
    }
    out.push(CheckRecord::new("optim.critical_points", crit.len(), margin).with_detail(format!("{} orbits", crit.len())));

    let mss = optim::max_sum_squares(12.0, config.max_sum_squares_grid)?;
    out.push(
        CheckRecord::new("optim.max_sum_squares", 1, 1e-6 - (mss.value - 6.0).abs())
            .with_detail(format!("max {} (S^2/24 = 6)", mss.value))
            .with_witness(|| optim_witness(mss.maximizer, 12.0)),
    );

    let n = config.samples.max(2);
    let margins: Vec<f64> = (0..=n)
        .map(|i| {
            let x2 = 3.0 * i as f64 / n as f64;
            let exact = optim::boundary_slice_closed_form(x2, 1.0);
            1e-12 - rel((optim::boundary_slice(x2, 1.0) - exact).abs(), 1.0)
        })
        .collect();
    out.push(CheckRecord::new("optim.boundary_slice", margins.len(), worst(&margins).0));

    // random points: F ≥ 0, the change of variables, both constraint sets and
    // the cubic ratio bound
    let seed = stream_seed(config.seed, 5);
    let tol = config.tolerances.identity;
    let cases: Vec<([f64; 3], f64, [f64; 5])> = (0..config.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i);
            let x = simplex_point(&mut rng);
            let s = 0.1 + 6.0 * rng.random::<f64>();
            let a = optim::x_to_a(x, s);
            let s3 = s.powi(3);
            let f = optim::objective_f(&SimplexPoint::new(x).expect("on the plane"), s);
            let f_a = optim::objective_in_a(a, s);
            let back = optim::a_to_x(a, s);
            let roundtrip = back.iter().zip(x).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            let constraints = optim::satisfies_pairwise_pic(a, s) && optim::satisfies_minimal_pic(a, s);
            let ratio = match optim::cubic_ratio_check(a) {
                Ok((lhs, rhs)) => tol - rel((lhs - rhs).max(0.0), rhs),
                Err(_) => f64::INFINITY,
            };
            (
                a,
                s,
                [
                    tol + f / s3,
                    tol - rel((f - f_a).abs(), s3),
                    tol - roundtrip,
                    if constraints { f64::INFINITY } else { f64::NEG_INFINITY },
                    ratio,
                ],
            )
        })
        .collect();
    let names = [
        "optim.f_nonnegative",
        "optim.change_of_variables",
        "optim.roundtrip",
        "optim.constraint_sets",
        "optim.cubic_ratio",
    ];
    for (j, name) in names.into_iter().enumerate() {
        let margins: Vec<f64> = cases.iter().map(|c| c.2[j]).collect();
        let (m, k) = worst(&margins);
        out.push(CheckRecord::new(name, cases.len(), m).with_witness(|| optim_witness(cases[k].0, cases[k].1)));
    }
    Ok(out)
}

struct StartOutcome {
    blocks: f64,
    ratio_law: f64,
    pinch: f64,
    pic: f64,
    drift: f64,
    error: Option<String>,
}

fn flow_start(op: &CurvatureOperator, config: &SuiteConfig) -> StartOutcome {
    let mut out = StartOutcome {
        blocks: f64::NEG_INFINITY,
        ratio_law: f64::NEG_INFINITY,
        pinch: f64::NEG_INFINITY,
        pic: f64::NEG_INFINITY,
        drift: f64::NEG_INFINITY,
        error: None,
    };
    let t_end = config.flow_horizon / op.norm();
    let h = t_end / config.flow_steps as f64;
    let traj = match flow::integrate(op, t_end, h) {
        Ok(t) => t,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    let result = (|| -> Result<()> {
        let p = flow::check_block_inequalities(&traj)?;
        out.blocks = p.reports().iter().map(|r| r.worst_margin).fold(f64::INFINITY, f64::min);
        out.ratio_law = flow::check_ratio_law(&traj)?.worst_margin;
        out.pinch = flow::check_pinch_evolution(&traj)?.worst_margin;
        let pic = flow::check_pic_preserved(&traj)?;
        out.pic = if pic.passed { pic.min_margin } else { pic.min_margin.min(-f64::MIN_POSITIVE) };
        out.drift = config.tolerances.drift - rel(traj.max_bianchi_drift(), op.norm());
        Ok(())
    })();
    if let Err(e) = result {
        out.error = Some(e.to_string());
    }
    out
}

fn sphere_scalar_margin(traj: &FlowTrajectory, tol: f64) -> f64 {
    traj.diagnostics
        .iter()
        .map(|d| tol - rel((d.scalar - 12.0 / (1.0 - 6.0 * d.t)).abs(), 12.0 / (1.0 - 6.0 * d.t)))
        .fold(f64::INFINITY, f64::min)
}

/// `A`, `C` umbilic and `B Bᵗ = b² I` along the trajectory, relative to the
/// current norm.
fn cylinder_margin(traj: &FlowTrajectory, tol: f64) -> f64 {
    traj.states
        .iter()
        .map(|r| {
            let b = r.to_blocks();
            let n = r.norm();
            let umbilic = |m: &Mat3| (m - Mat3::identity() * (m.trace() / 3.0)).norm();
            let bbt = b.b * b.b.transpose();
            let iso = (bbt - Mat3::identity() * (b.b.norm_squared() / 3.0)).norm();
            tol - rel(umbilic(&b.a).max(umbilic(&b.c)), n).max(rel(iso, n * n))
        })
        .fold(f64::INFINITY, f64::min)
}

fn flow_checks(config: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let t = config.tolerances;
    let mut out = Vec::new();

    let sphere = CurvatureOperator::identity();
    let rec = match flow::integrate(&sphere, config.sphere_t_end, config.sphere_step) {
        Ok(traj) => CheckRecord::new("flow.sphere_scalar", traj.len(), sphere_scalar_margin(&traj, t.sphere_scalar)),
        Err(e) => CheckRecord::new("flow.sphere_scalar", 0, f64::NEG_INFINITY).with_detail(e.to_string()),
    };
    out.push(rec.with_witness(|| Some(sphere.to_json())));

    let cyl = models::model(ModelName::S3xR).operator;
    let rec = match flow::integrate(&cyl, config.cylinder_t_end, config.cylinder_step) {
        Ok(traj) => CheckRecord::new("flow.cylinder_structure", traj.len(), cylinder_margin(&traj, t.cylinder)),
        Err(e) => CheckRecord::new("flow.cylinder_structure", 0, f64::NEG_INFINITY).with_detail(e.to_string()),
    };
    out.push(rec.with_witness(|| Some(cyl.to_json())));

    let starts = samples(SampleClass::Pic, config.seed, 6, config.flow_starts)?;
    let outcomes: Vec<StartOutcome> = starts.par_iter().map(|r| flow_start(r, config)).collect();
    let fields: [(&str, fn(&StartOutcome) -> f64); 5] = [
        ("flow.block_inequalities", |o| o.blocks),
        ("flow.ratio_law", |o| o.ratio_law),
        ("flow.pinch_evolution", |o| o.pinch),
        ("flow.pic_preserved", |o| o.pic),
        ("flow.bianchi_drift", |o| o.drift),
    ];
    for (name, get) in fields {
        let margins: Vec<f64> = outcomes.iter().map(get).collect();
        let (m, k) = worst(&margins);
        let mut rec = CheckRecord::new(name, starts.len(), m).with_witness(|| Some(starts[k].to_json()));
        if let Some(e) = &outcomes[k].error {
            rec = rec.with_detail(e.clone());
        }
        out.push(rec);
    }
    Ok(out)
}

fn model_checks(config: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let tol = config.tolerances.model;
    let mut out = Vec::new();

    for m in models::all_models() {
        let r = models::check_model_invariants(&m);
        let (_, mag) = p_general_terms(&m.operator);
        let scale = m.operator.norm().max(1.0).powi(3).max(mag);
        let mut rec = CheckRecord::new(format!("models.invariants.{}", m.name), 1, tol * scale - r.p.abs());
        if r.pic_class != r.expected_class {
            rec = rec.fail(format!("class {} expected {}", r.pic_class, r.expected_class));
        } else if !r.passed {
            rec = rec.fail(format!("isotropy defect {:e}", r.isotropy_defect));
        }
        out.push(rec.with_witness(|| Some(m.operator.to_json())));
    }

    let mismatched: Vec<&str> = ModelName::ALL
        .into_iter()
        .filter(|&n| models::model(n).operator.pic_class() != n.expected_class())
        .map(|n| n.as_str())
        .collect();
    let pic: Vec<&str> = ModelName::ALL
        .into_iter()
        .filter(|&n| models::model(n).operator.pic_class() == PicClass::Pic)
        .map(|n| n.as_str())
        .collect();
    let mut rec = CheckRecord::new("models.pic_partition", ModelName::ALL.len(), 0.0)
        .with_detail(format!("PIC: {}", pic.join(", ")));
    if !mismatched.is_empty() {
        rec = rec.fail(format!("mismatched: {}", mismatched.join(", ")));
    }
    out.push(rec);

    let seed = stream_seed(config.seed, 7);
    for m in models::all_models() {
        let mut rng = substream(seed, m.name as u64);
        let points: Vec<[f64; 4]> = (0..config.model_points)
            .map(|_| std::array::from_fn(|_| 20.0 * rng.random::<f64>() - 10.0))
            .collect();
        let r = models::check_soliton_identities(&m, &points);
        let defect = r.trace_defect.max(r.gradient_defect).max(r.tensor_defect);
        out.push(
            CheckRecord::new(format!("models.soliton_identities.{}", m.name), points.len(), models::SOLITON_TOL - defect)
                .with_witness(|| Some(m.operator.to_json())),
        );
    }

    let radii: Vec<f64> = (0..=1000).map(f64::from).collect();
    for m in models::all_models().into_iter().filter(|m| !m.potential.is_bounded()) {
        let g = models::check_potential_growth(&m, &radii)?;
        out.push(
            CheckRecord::new(format!("models.potential_growth.{}", m.name), g.points, 4.0 - g.c1.max(g.c2))
                .with_detail(format!("c1 = {:.6}, c2 = {:.6}", g.c1, g.c2)),
        );
    }

    let cyl = models::model(ModelName::S3xR);
    let oracle = 12.0 * PI * PI * 2.0 * PI.sqrt() * (-1.5f64).exp();
    let one = models::weighted_ricci_integral(&cyl, 1.0, 40.0)?;
    let two = models::weighted_ricci_integral(&cyl, 2.0, 40.0)?;
    let mut rec = CheckRecord::new("models.weighted_integral", 2, 1e-6 - rel((one.value - oracle).abs(), oracle))
        .with_detail(format!("{:.12} vs {:.12}", one.value, oracle));
    if !(one.converged && two.converged) {
        rec = rec.fail("cutoff doubling did not converge");
    } else if !(two.value < one.value) {
        rec = rec.fail("integral not decreasing in lambda");
    }
    out.push(rec);
    let flat = models::weighted_ricci_integral(&models::model(ModelName::GaussianR4), 1.0, 40.0)?;
    out.push(CheckRecord::new("models.weighted_integral_flat", 1, 0.0 - flat.value.abs()));
    Ok(out)
}

/// Pointwise checks and, for PIC operators, one flow run from `op`.
pub fn replay(op: &CurvatureOperator, config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let t = config.tolerances;
    let ops = std::slice::from_ref(op);
    let mut checks = vec![
        scan("identities.trace_balance", ops, |r| trace_margin(r, t.identity)),
        scan("identities.b_norm_ricci", ops, |r| b_ricci_margin(r, t.identity)),
        scan("identities.cubic_det", ops, |r| cubic_det_margin(r, t.identity)),
        scan("identities.rm_norm", ops, |r| rm_norm_margin(r, t.identity)),
        scan("pfunc.general_vs_expanded", ops, |r| p_match_margin(r, t.p_match)),
    ];
    if op.pic_class() == PicClass::Pic {
        if op.eigen_data().b.is_some() {
            checks.push(scan("pfunc.equal_b_nonpositive", ops, |r| {
                p_equal_b_margin(r, t.p_sign, t.p_match)
            }));
        }
        checks.push(scan("pinch.e_nonnegative", ops, |r| e_sign_margin(r, t.e_sign)));
        checks.push(scan("pinch.detector_sound", ops, |r| detector_margin(r, t.rigidity)));
        let o = flow_start(op, config);
        for (name, m) in [
            ("flow.block_inequalities", o.blocks),
            ("flow.ratio_law", o.ratio_law),
            ("flow.pinch_evolution", o.pinch),
            ("flow.pic_preserved", o.pic),
            ("flow.bianchi_drift", o.drift),
        ] {
            let mut rec = CheckRecord::new(name, 1, m).with_witness(|| Some(op.to_json()));
            if let Some(e) = &o.error {
                rec = rec.with_detail(e.clone());
            }
            checks.push(rec);
        }
    }
    Ok(SuiteReport::new("replay", config.clone(), checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteConfig {
        let mut c = SuiteConfig::new(7, 200, 1e-10);
        c.flow_starts = 4;
        c.optim_grid = 60;
        c.max_sum_squares_grid = 60;
        c.sphere_step = 1e-4;
        c
    }

    #[test]
    fn suites_pass_at_small_size() {
        for part in Suite::PARTS {
            let r = run_suite(part, &small()).unwrap();
            assert!(r.passed(), "{}", r.to_text());
        }
    }

    #[test]
    fn worst_prefers_nan_and_lowest_index() {
        assert_eq!(worst(&[1.0, -2.0, -2.0, 3.0]), (-2.0, 1));
        assert_eq!(worst(&[1.0, f64::NAN]).1, 1);
        assert_eq!(worst(&[]), (f64::INFINITY, 0));
    }

    #[test]
    fn replay_of_bad_operator_fails() {
        // not PIC, but the identities still hold
        let d = Mat3::from_diagonal(&nalgebra::Vector3::new(-1.0, 0.0, 1.0));
        let op = CurvatureOperator::from_blocks(&d, &Mat3::zeros(), &d).unwrap();
        let r = replay(&op, &small()).unwrap();
        assert!(r.passed());
        assert_eq!(r.checks.len(), 5);

        let r = replay(&CurvatureOperator::identity(), &small()).unwrap();
        assert!(r.passed(), "{}", r.to_text());
    }

    #[test]
    fn suite_names() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("nope".parse::<Suite>().is_err());
    }
}
