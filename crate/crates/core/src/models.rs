//! Exact shrinking soliton models, normalized so that `Ric + Hess f = g/2`.
//!
//! Every model is a product `K × R^k` of a compact Einstein factor `K` (possibly
//! a point) with a Gaussian factor, and `f = |y|²/4 + S` with `y` the Euclidean
//! coordinates. The Euclidean directions are the last `k` coordinates of the
//! orthonormal frame.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda2::{CurvatureOperator, Mat3, Mat4, Mat6, PicClass, PAIRS};
use crate::quadratic::p_general_terms;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelName {
    S4,
    S3xR,
    S2xS2,
    CP2,
    S2xR2,
    GaussianR4,
}

impl ModelName {
    pub const ALL: [ModelName; 6] = [
        ModelName::S4,
        ModelName::S3xR,
        ModelName::S2xS2,
        ModelName::CP2,
        ModelName::S2xR2,
        ModelName::GaussianR4,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelName::S4 => "S4",
            ModelName::S3xR => "S3xR",
            ModelName::S2xS2 => "S2xS2",
            ModelName::CP2 => "CP2",
            ModelName::S2xR2 => "S2xR2",
            ModelName::GaussianR4 => "GaussianR4",
        }
    }

    /// Curvature class of the model: the strictly PIC solitons are exactly the
    /// round sphere and cylinder.
    pub fn expected_class(&self) -> PicClass {
        match self {
            ModelName::S4 | ModelName::S3xR => PicClass::Pic,
            _ => PicClass::NonnegIc,
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelName::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

/// `f = |y|²/4 + offset` on the Euclidean factor `R^flat_dims`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Potential {
    pub flat_dims: usize,
    pub offset: f64,
}

impl Potential {
    fn flat<'a>(&self, point: &'a [f64; 4]) -> &'a [f64] {
        &point[4 - self.flat_dims..]
    }

    pub fn value(&self, point: &[f64; 4]) -> f64 {
        self.flat(point).iter().map(|y| y * y).sum::<f64>() / 4.0 + self.offset
    }

    pub fn gradient(&self, point: &[f64; 4]) -> [f64; 4] {
        let mut g = [0.0; 4];
        for i in 4 - self.flat_dims..4 {
            g[i] = point[i] / 2.0;
        }
        g
    }

    pub fn hessian(&self) -> Mat4 {
        let mut h = Mat4::zeros();
        for i in 4 - self.flat_dims..4 {
            h[(i, i)] = 0.5;
        }
        h
    }

    pub fn laplacian(&self) -> f64 {
        self.flat_dims as f64 / 2.0
    }

    pub fn is_bounded(&self) -> bool {
        self.flat_dims == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelGeometry {
    pub name: ModelName,
    pub operator: CurvatureOperator,
    pub scalar: f64,
    pub potential: Potential,
    /// Diameter of the compact factor.
    pub compact_diameter: f64,
    /// Volume of the compact factor.
    pub compact_volume: f64,
}

fn diag3(a: f64, b: f64, c: f64) -> Mat3 {
    Mat3::from_diagonal(&Vector3::new(a, b, c))
}

/// Diagonal raw-basis operator with sectional curvature `k` on the planes
/// spanned inside `factor` (a list of frame indices).
fn constant_curvature_factor(m: &mut Mat6, factor: &[usize], k: f64) {
    for (idx, &(i, j)) in PAIRS.iter().enumerate() {
        if factor.contains(&i) && factor.contains(&j) {
            m[(idx, idx)] = k;
        }
    }
}

pub fn model(name: ModelName) -> ModelGeometry {
    let (operator, flat_dims, diameter, volume) = match name {
        ModelName::S4 => {
            // Ric = 3K g = g/2; radius² = 6
            let op = CurvatureOperator::identity().scaled(1.0 / 6.0);
            (op, 0, PI * 6f64.sqrt(), 8.0 * PI * PI / 3.0 * 36.0)
        }
        ModelName::S3xR => {
            // S³ of radius 2: K = 1/4
            let mut m = Mat6::zeros();
            constant_curvature_factor(&mut m, &[0, 1, 2], 0.25);
            (from_matrix(m), 1, 2.0 * PI, 2.0 * PI * PI * 8.0)
        }
        ModelName::S2xS2 => {
            let mut m = Mat6::zeros();
            constant_curvature_factor(&mut m, &[0, 1], 0.5);
            constant_curvature_factor(&mut m, &[2, 3], 0.5);
            // two spheres of radius √2
            (from_matrix(m), 0, 2.0 * PI, (8.0 * PI).powi(2))
        }
        ModelName::CP2 => {
            // Fubini-Study with holomorphic sectional curvature 1/3: the Kähler
            // form spans the first self-dual direction, W⁻ = 0.
            let op = CurvatureOperator::from_blocks(
                &diag3(0.5, 0.0, 0.0),
                &Mat3::zeros(),
                &(Mat3::identity() / 6.0),
            )
            .expect("CP2 blocks satisfy Bianchi");
            // diameter π/√H, volume (π²/2)(4/H)²
            (op, 0, PI * 3f64.sqrt(), PI * PI / 2.0 * 144.0)
        }
        ModelName::S2xR2 => {
            let mut m = Mat6::zeros();
            constant_curvature_factor(&mut m, &[0, 1], 0.5);
            (from_matrix(m), 2, PI * 2f64.sqrt(), 8.0 * PI)
        }
        ModelName::GaussianR4 => (CurvatureOperator::zero(), 4, 0.0, 1.0),
    };
    let scalar = operator.scalar();
    ModelGeometry {
        name,
        operator,
        scalar,
        potential: Potential {
            flat_dims,
            offset: scalar,
        },
        compact_diameter: diameter,
        compact_volume: volume,
    }
}

fn from_matrix(m: Mat6) -> CurvatureOperator {
    CurvatureOperator::from_matrix(m).expect("product operators satisfy Bianchi")
}

pub fn all_models() -> Vec<ModelGeometry> {
    ModelName::ALL.into_iter().map(model).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolitonIdentityReport {
    pub points: usize,
    /// `max |S + Δf - n/2|`.
    pub trace_defect: f64,
    /// `max |S + |∇f|² - f| / (1 + |f|)`.
    pub gradient_defect: f64,
    /// `max ‖Ric + Hess f - g/2‖`.
    pub tensor_defect: f64,
    pub passed: bool,
}

pub const SOLITON_TOL: f64 = 1e-12;

/// `S + Δf = 2`, `S + |∇f|² = f` and `Ric + Hess f = g/2` at every point.
pub fn check_soliton_identities(m: &ModelGeometry, points: &[[f64; 4]]) -> SolitonIdentityReport {
    let ric = m.operator.ricci().ric;
    let tensor_defect = (ric + m.potential.hessian() - Mat4::identity() * 0.5).abs().max();
    let trace_defect = (m.scalar + m.potential.laplacian() - 2.0).abs();
    let gradient_defect = points
        .iter()
        .map(|p| {
            let f = m.potential.value(p);
            let grad_sq: f64 = m.potential.gradient(p).iter().map(|g| g * g).sum();
            (m.scalar + grad_sq - f).abs() / (1.0 + f.abs())
        })
        .fold(0.0, f64::max);
    SolitonIdentityReport {
        points: points.len(),
        trace_defect,
        gradient_defect,
        tensor_defect,
        passed: trace_defect <= SOLITON_TOL
            && gradient_defect <= SOLITON_TOL
            && tensor_defect <= SOLITON_TOL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthReport {
    /// Smallest `c₁` with `¼(d - c₁)₊² ≤ f` at every sampled point.
    pub c1: f64,
    /// Smallest `c₂` with `f ≤ ¼(d + c₂)²` at every sampled point.
    pub c2: f64,
    pub max_radius: f64,
    pub points: usize,
}

/// Scans points at distance `r` from the base point, splitting the distance
/// between the compact factor (`δ ∈ [0, min(r, diam)]`) and the Euclidean
/// factor, and returns the smallest constants for which the quadratic
/// sandwich holds at all of them.
pub fn check_potential_growth(m: &ModelGeometry, radii: &[f64]) -> Result<GrowthReport> {
    if m.potential.is_bounded() {
        return Err(Error::NotApplicable(format!(
            "{} is compact; f is constant",
            m.name
        )));
    }
    const SPLITS: usize = 64;
    let s = m.potential.offset;
    let mut c1 = 0.0_f64;
    let mut c2 = 0.0_f64;
    let mut points = 0;
    for &r in radii {
        let reach = r.min(m.compact_diameter);
        for i in 0..=SPLITS {
            let delta = reach * i as f64 / SPLITS as f64;
            let y_sq = (r * r - delta * delta).max(0.0);
            let f = y_sq / 4.0 + s;
            // (d - c₁)₊² ≤ 4f  ⇔  c₁ ≥ d - 2√f
            c1 = c1.max(r - 2.0 * f.sqrt());
            // 4f ≤ (d + c₂)²  ⇔  c₂ ≥ 2√f - d
            c2 = c2.max(2.0 * f.sqrt() - r);
            points += 1;
        }
    }
    Ok(GrowthReport {
        c1,
        c2,
        max_radius: radii.iter().cloned().fold(0.0, f64::max),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedIntegral {
    pub value: f64,
    /// Doubling the cutoff changes the value by less than `1e-8` relative.
    pub converged: bool,
}

/// Composite Simpson rule on `[lo, hi]` with panel width at most `max_width`.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, max_width: f64) -> f64 {
    let mut n = ((hi - lo) / max_width).ceil() as usize;
    n += n % 2;
    let n = n.max(2);
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// `∫_M |Ric|² e^{-λf}` reduced to a 1-D or radial integral over the Euclidean
/// factor and truncated at `cutoff`.
pub fn weighted_ricci_integral(m: &ModelGeometry, lambda: f64, cutoff: f64) -> Result<WeightedIntegral> {
    if !(lambda > 0.0) {
        return Err(Error::ConstraintViolation(format!("lambda must be positive, got {lambda}")));
    }
    if !(cutoff > 0.0) {
        return Err(Error::ConstraintViolation(format!("cutoff must be positive, got {cutoff}")));
    }
    let k = m.potential.flat_dims;
    if k == 0 {
        return Err(Error::NotApplicable(format!(
            "{} has no Euclidean factor to integrate over",
            m.name
        )));
    }
    let ric_sq = m.operator.ricci().ric.norm_squared();
    // area of the unit sphere S^{k-1}
    let sphere_area = match k {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => unreachable!("at most four Euclidean directions"),
    };
    let s = m.potential.offset;
    let integral = |cut: f64| {
        let radial = simpson(
            |r| r.powi(k as i32 - 1) * (-lambda * (r * r / 4.0 + s)).exp(),
            0.0,
            cut,
            1e-3,
        );
        ric_sq * m.compact_volume * sphere_area * radial
    };
    let value = integral(cutoff);
    let doubled = integral(2.0 * cutoff);
    let converged = (doubled - value).abs() <= 1e-8 * doubled.abs().max(f64::MIN_POSITIVE)
        || (doubled == 0.0 && value == 0.0);
    Ok(WeightedIntegral { value, converged })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelInvariantReport {
    pub name: ModelName,
    pub scalar: f64,
    /// `‖B Bᵗ - (‖B‖²/3) I‖`.
    pub isotropy_defect: f64,
    pub isotropic_b: bool,
    pub p: f64,
    pub pic_class: PicClass,
    pub expected_class: PicClass,
    pub passed: bool,
}

pub const MODEL_TOL: f64 = 1e-12;

/// Whether `B Bᵗ = b² I` is expected on the model. The flat factor of
/// `S² × R²` splits off a two-dimensional kernel of `B`, so it is the one
/// catalog entry where `B Bᵗ` is not isotropic.
pub fn expects_isotropic_b(name: ModelName) -> bool {
    name != ModelName::S2xR2
}

pub fn check_model_invariants(m: &ModelGeometry) -> ModelInvariantReport {
    let blocks = m.operator.to_blocks();
    let bbt = blocks.b * blocks.b.transpose();
    let isotropy_defect = (bbt - Mat3::identity() * (blocks.b.norm_squared() / 3.0)).norm();
    let isotropic_b = isotropy_defect <= MODEL_TOL;
    let (p, p_mag) = p_general_terms(&m.operator);
    let scale = m.operator.norm().max(1.0);
    let pic_class = m.operator.pic_class();
    let expected_class = m.name.expected_class();
    let passed = isotropic_b == expects_isotropic_b(m.name)
        && p.abs() <= MODEL_TOL * scale.powi(3).max(p_mag)
        && pic_class == expected_class
        && (m.operator.scalar() - m.scalar).abs() <= MODEL_TOL;
    ModelInvariantReport {
        name: m.name,
        scalar: m.scalar,
        isotropy_defect,
        isotropic_b,
        p,
        pic_class,
        expected_class,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse() {
        for n in ModelName::ALL {
            assert_eq!(n.as_str().parse::<ModelName>().unwrap(), n);
        }
        assert!(matches!("T4".parse::<ModelName>(), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn sphere_blocks() {
        let m = model(ModelName::S4);
        assert!((m.scalar - 2.0).abs() < 1e-15);
        let b = m.operator.to_blocks();
        assert!((b.a - Mat3::identity() / 6.0).norm() < 1e-15);
        assert!((b.c - Mat3::identity() / 6.0).norm() < 1e-15);
        assert!(b.b.norm() < 1e-15);
    }

    #[test]
    fn cylinder_blocks() {
        let m = model(ModelName::S3xR);
        assert_eq!(m.scalar, 1.5);
        let b = m.operator.to_blocks();
        assert!((b.a - Mat3::identity() / 8.0).norm() < 1e-15);
        assert!((b.b + Mat3::identity() / 8.0).norm() < 1e-15);
        assert!((m.operator.eigen_data().b.unwrap() + 0.125).abs() < 1e-15);
    }

    #[test]
    fn gaussian_is_flat() {
        let m = model(ModelName::GaussianR4);
        assert_eq!(m.operator, CurvatureOperator::zero());
        assert_eq!(m.scalar, 0.0);
        let p = [1.0, -2.0, 0.5, 3.0];
        assert_eq!(m.potential.value(&p), (1.0 + 4.0 + 0.25 + 9.0) / 4.0);
    }

    #[test]
    fn soliton_identities_at_points() {
        let pts = [[0.0; 4], [1.0, 2.0, 3.0, 4.0], [-5.0, 0.1, 7.0, -3.0]];
        for m in all_models() {
            let r = check_soliton_identities(&m, &pts);
            assert!(r.passed, "{}: {r:?}", m.name);
        }
    }

    #[test]
    fn growth_constants() {
        let radii: Vec<f64> = (0..=1000).map(|i| i as f64).collect();
        let g = check_potential_growth(&model(ModelName::GaussianR4), &radii).unwrap();
        assert_eq!((g.c1, g.c2), (0.0, 0.0));
        let g = check_potential_growth(&model(ModelName::S3xR), &radii).unwrap();
        assert!(g.c1 > 0.0 && g.c1 <= 4.0 && g.c2 <= 4.0, "{g:?}");
        assert!(matches!(
            check_potential_growth(&model(ModelName::S4), &radii),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn integral_not_applicable_on_compact() {
        assert!(matches!(
            weighted_ricci_integral(&model(ModelName::CP2), 1.0, 10.0),
            Err(Error::NotApplicable(_))
        ));
        let g = weighted_ricci_integral(&model(ModelName::GaussianR4), 1.0, 10.0).unwrap();
        assert_eq!(g.value, 0.0);
        assert!(g.converged);
    }

    #[test]
    fn invariants_hold_on_catalog() {
        for m in all_models() {
            let r = check_model_invariants(&m);
            assert!(r.passed, "{r:?}");
        }
    }
}
