//! Quadratic curvature expressions: `R²`, the Lie-algebraic square `R#`, the
//! pinching functional `P` and the pinching quantity `E`.

use std::sync::LazyLock;

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::lambda2::{CurvatureOperator, EigenData, Mat6, PAIRS};

/// Structure constants of so(4) in the raw basis: `STRUCTURE[α][(γ, δ)] =
/// <[ω_α, ω_γ], ω_δ>`, where `e_i∧e_j` acts as `x ↦ <e_j,x> e_i - <e_i,x> e_j`.
pub static STRUCTURE: LazyLock<[Mat6; 6]> = LazyLock::new(|| {
    let skew = |(i, j): (usize, usize)| {
        let mut m = Matrix4::<f64>::zeros();
        m[(i, j)] = 1.0;
        m[(j, i)] = -1.0;
        m
    };
    std::array::from_fn(|alpha| {
        let x = skew(PAIRS[alpha]);
        let mut c = Mat6::zeros();
        for (gamma, &pg) in PAIRS.iter().enumerate() {
            let y = skew(pg);
            let bracket = x * y - y * x;
            for (delta, &(k, l)) in PAIRS.iter().enumerate() {
                c[(gamma, delta)] = bracket[(k, l)];
            }
        }
        c
    })
});

/// Operator composition `R ∘ R`.
pub fn square_op(r: &CurvatureOperator) -> Mat6 {
    let m = r.matrix();
    m * m
}

/// `(R#)_αβ = ½ Σ c_αγδ c_βεζ R_γε R_δζ`.
///
/// On an operator with `B = 0` this is `2·adj` on each diagonal block.
pub fn sharp_op(r: &CurvatureOperator) -> Mat6 {
    let m = r.matrix();
    let c = &*STRUCTURE;
    let conj: [Mat6; 6] = std::array::from_fn(|beta| m * c[beta] * m);
    let mut out = Mat6::zeros();
    for alpha in 0..6 {
        for beta in alpha..6 {
            let v = 0.5 * c[alpha].dot(&conj[beta]);
            out[(alpha, beta)] = v;
            out[(beta, alpha)] = v;
        }
    }
    out
}

/// `R² + R#`.
pub fn reaction_term(r: &CurvatureOperator) -> Mat6 {
    square_op(r) + sharp_op(r)
}

/// `P = 4 S <R² + R#, R> - |Ric|² |Rm|²` with the Frobenius pairing on the
/// stored matrix and `|Rm|² = 4 ‖R‖²`.
pub fn p_general(r: &CurvatureOperator) -> f64 {
    p_general_terms(r).0
}

/// `P` together with the magnitude of its two competing terms, for roundoff
/// floors.
pub fn p_general_terms(r: &CurvatureOperator) -> (f64, f64) {
    let s = r.scalar();
    let pairing = reaction_term(r).dot(r.matrix());
    let ric_sq = r.ricci().ric.norm_squared();
    let first = 4.0 * s * pairing;
    let second = ric_sq * r.rm_norm_sq();
    (first - second, first.abs() + second.abs())
}

fn sum_pow(v: &[f64], k: i32) -> f64 {
    v.iter().map(|x| x.powi(k)).sum()
}

/// `P` expanded in terms of the eigen-data of `A`, `C`, `B` and the traceless
/// Ricci eigenvalues.
pub fn p_expanded(e: &EigenData) -> f64 {
    let s = e.scalar;
    let l2 = sum_pow(&e.lambda, 2);
    let l3 = sum_pow(&e.lambda, 3);
    let ac2 = sum_pow(&e.a, 2) + sum_pow(&e.c, 2);
    let ac3 = sum_pow(&e.a, 3) + sum_pow(&e.c, 3);
    let prod_a: f64 = e.a.iter().product();
    let prod_c: f64 = e.c.iter().product();
    let weighted_b: f64 = (0..3)
        .map(|i| e.a[i] * e.b_sq_rows[i] + e.c[i] * e.b_sq_cols[i])
        .sum();

    -s * s * (l2 / 6.0 + ac2) + 4.0 * s * (ac3 + 6.0 * prod_a + 6.0 * prod_c - 0.5 * l3)
        + 12.0 * s * weighted_b
        - 2.0 * l2 * l2
        - 4.0 * l2 * ac2
}

/// Reduced `P` when `B Bᵗ = b² I`, and the upper bound obtained by dropping
/// its two manifestly nonpositive terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualBBound {
    pub p: f64,
    pub bound: f64,
}

pub fn p_bound_equal_b(s: f64, a: [f64; 3], c: [f64; 3], b: f64) -> Result<EqualBBound> {
    for (name, v) in [("a", a), ("c", c)] {
        let sum: f64 = v.iter().sum();
        let mag: f64 = v.iter().map(|x| x.abs()).sum();
        if sum.abs() > 1e-10 * (1.0 + mag) {
            return Err(Error::ConstraintViolation(format!(
                "sum of {name} is {sum:e}, expected 0"
            )));
        }
    }
    let sq = sum_pow(&a, 2) + sum_pow(&c, 2);
    let cube = sum_pow(&a, 3) + sum_pow(&c, 3);
    let b2 = b * b;
    let p = -s * s * sq + 12.0 * s * cube - 2.0 * b2 * (s + 12.0 * b).powi(2) - 48.0 * b2 * sq;
    let bound = -s * (s * sum_pow(&a, 2) - 12.0 * sum_pow(&a, 3))
        - s * (s * sum_pow(&c, 2) - 12.0 * sum_pow(&c, 3));
    Ok(EqualBBound { p, bound })
}

/// Equality-detector threshold on `E`, relative to the operator scale.
pub const EQUALITY_E_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchData {
    /// `φ = B₃`, the largest singular value of `B`.
    pub phi: f64,
    pub psi1: f64,
    pub psi2: f64,
    /// `φ / √(ψ₁ψ₂)`, present when `ψ₁ψ₂ > 0`.
    pub ratio: Option<f64>,
    /// Present when `ψ₁ ≠ 0` and `ψ₂ ≠ 0`.
    pub e: Option<f64>,
    /// `(A₁, A₂, C₁, C₂, B₁, B₂, B₃)`.
    pub witness: [f64; 7],
}

impl PinchData {
    pub fn ratio(&self) -> Result<f64> {
        self.ratio.ok_or(Error::RatioUndefined {
            product: self.psi1 * self.psi2,
        })
    }

    /// `max - min` over the seven quantities that coincide exactly when `E = 0`.
    pub fn rigidity_spread(&self) -> f64 {
        let (lo, hi) = self
            .witness
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    /// True when `E` vanishes to within [`EQUALITY_E_TOL`]`·scale`.
    pub fn is_equality_case(&self, scale: f64) -> bool {
        matches!(self.e, Some(e) if e.abs() <= EQUALITY_E_TOL * scale.max(f64::MIN_POSITIVE))
    }
}

fn block_term(x1: f64, x2: f64, b1: f64, b2: f64) -> f64 {
    (x1 - b1).powi(2) + (x2 - b2).powi(2) + 2.0 * x2 * (b2 - b1)
}

pub fn pinch_data(r: &CurvatureOperator) -> PinchData {
    pinch_from_eigen_data(&r.eigen_data())
}

pub fn pinch_from_eigen_data(e: &EigenData) -> PinchData {
    let [a1, a2, _] = e.a_eigs;
    let [c1, c2, _] = e.c_eigs;
    let [b1, b2, b3] = e.b_singular;
    let psi1 = a1 + a2;
    let psi2 = c1 + c2;

    // B₃ = 0 forces B = 0, where the first term extends continuously by 0.
    let first = if b3 > 0.0 { 4.0 * b1 * (b3 - b2) / b3 } else { 0.0 };
    let e_value = (psi1 != 0.0 && psi2 != 0.0).then(|| {
        first + block_term(a1, a2, b1, b2) / psi1 + block_term(c1, c2, b1, b2) / psi2
    });
    let product = psi1 * psi2;
    PinchData {
        phi: b3,
        psi1,
        psi2,
        ratio: (psi1 > 0.0 && psi2 > 0.0).then(|| b3 / product.sqrt()),
        e: e_value,
        witness: [a1, a2, c1, c2, b1, b2, b3],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda2::{Mat3, PAIRS};
    use nalgebra::Vector6;

    fn cylinder() -> CurvatureOperator {
        let mut m = Mat6::zeros();
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            if i < 3 && j < 3 {
                m[(k, k)] = 0.25;
            }
        }
        CurvatureOperator::from_matrix(m).unwrap()
    }

    #[test]
    fn square_of_simple_operators() {
        let id = CurvatureOperator::identity();
        assert_eq!(square_op(&id), Mat6::identity());
        assert_eq!(square_op(&CurvatureOperator::zero()), Mat6::zeros());
        let d = Vector6::new(1.0, -2.0, 0.5, 3.0, 0.0, 1.5);
        // diag(d) with equal cross pairs has tr A = tr C
        let op = CurvatureOperator::from_matrix(Mat6::from_diagonal(&d)).unwrap();
        assert_eq!(square_op(&op), Mat6::from_diagonal(&d.map(|x| x * x)));
    }

    #[test]
    fn sharp_of_identity_and_zero() {
        assert_eq!(sharp_op(&CurvatureOperator::zero()), Mat6::zeros());
        let s = sharp_op(&CurvatureOperator::identity());
        assert!((s - Mat6::identity() * 2.0).norm() < 1e-14);
    }

    #[test]
    fn structure_constants_antisymmetric() {
        let c = &*STRUCTURE;
        for a in 0..6 {
            for g in 0..6 {
                for d in 0..6 {
                    assert_eq!(c[a][(g, d)], -c[g][(a, d)]);
                    assert_eq!(c[a][(g, d)], -c[a][(d, g)]);
                }
            }
        }
    }

    #[test]
    fn p_vanishes_on_sphere_and_cylinder() {
        assert_eq!(p_general(&CurvatureOperator::identity()), 0.0);
        assert!(p_general(&cylinder()).abs() < 1e-15);
        assert!(p_expanded(&cylinder().eigen_data()).abs() < 1e-15);
        assert!(p_expanded(&CurvatureOperator::identity().eigen_data()).abs() < 1e-12);
    }

    #[test]
    fn equal_b_bound_cylinder_family() {
        let s = 1.5;
        let r = p_bound_equal_b(s, [0.0; 3], [0.0; 3], -s / 12.0).unwrap();
        assert_eq!(r.p, 0.0);
        assert_eq!(r.bound, 0.0);
        let r = p_bound_equal_b(s, [0.0; 3], [0.0; 3], 0.0).unwrap();
        assert_eq!(r.p, 0.0);
        assert!(matches!(
            p_bound_equal_b(1.0, [1.0, 0.0, 0.0], [0.0; 3], 0.0),
            Err(Error::ConstraintViolation(_))
        ));
    }

    #[test]
    fn cylinder_pinch_is_rigid() {
        let pd = pinch_data(&cylinder());
        assert_eq!(pd.e, Some(0.0));
        assert!(pd.rigidity_spread() < 1e-15);
        assert!((pd.ratio().unwrap() - 0.5).abs() < 1e-15);
        assert!(pd.is_equality_case(cylinder().norm()));
    }

    #[test]
    fn sphere_pinch_has_zero_ratio() {
        let pd = pinch_data(&CurvatureOperator::identity());
        assert_eq!(pd.phi, 0.0);
        assert_eq!(pd.ratio, Some(0.0));
        // B = 0 but A = C = I is not in the equality family: E = 1 + 1
        assert!((pd.e.unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ratio_undefined_off_pic() {
        let d = Mat3::from_diagonal(&nalgebra::Vector3::new(-1.0, 0.0, 1.0));
        let op = CurvatureOperator::from_blocks(&d, &Mat3::zeros(), &d).unwrap();
        let pd = pinch_data(&op);
        assert!(matches!(pd.ratio(), Err(Error::RatioUndefined { .. })));
        assert!(pd.e.is_some());
    }
}
