//! Conventions for 2-forms on R^4 and the block decomposition of curvature operators.
//!
//! The raw basis of Λ²R⁴ is `(e12, e13, e14, e23, e24, e34)`, orthonormal for
//! `<u∧v, x∧y> = <u,x><v,y> - <u,y><v,x>`. An operator is stored as a 6×6
//! symmetric matrix in that basis, with `R(e_i∧e_j) = Σ_{k<l} R_ijkl e_k∧e_l`,
//! so the unit round sphere is the identity and has scalar curvature 12.
//!
//! The self-dual basis is
//! `((e12+e34), (e13-e24), (e14+e23)) / √2` and the anti-self-dual basis is
//! `((e34-e12), -(e13+e24), (e14-e23)) / √2`. The signs of the anti-self-dual
//! frame fix the orientation of the off-diagonal block `B`: with this choice the
//! cubic traceless-Ricci identity `Σ λ_i³ = 24 det B` holds and the round
//! cylinder `S³ × R` has `B = -(S/12) I`.

use std::fmt;
use std::sync::LazyLock;

use nalgebra::{Matrix3, Matrix4, Matrix6, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<f64>;
pub type Mat4 = Matrix4<f64>;
pub type Mat6 = Matrix6<f64>;

/// Index pairs `(i, j)`, `i < j`, of the raw basis in storage order.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

const SYMMETRY_TOL: f64 = 1e-12;
const BIANCHI_TOL: f64 = 1e-10;
const ISOTROPY_TOL: f64 = 1e-10;

/// Position of `e_i∧e_j` in the raw basis together with the sign relating it to
/// the stored pair. Returns `None` on the diagonal.
pub fn pair_index(i: usize, j: usize) -> Option<(usize, f64)> {
    if i == j {
        return None;
    }
    let (lo, hi, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
    PAIRS
        .iter()
        .position(|&p| p == (lo, hi))
        .map(|k| (k, sign))
}

/// Orthogonal change of basis whose columns are the self-dual then
/// anti-self-dual frames written in raw coordinates.
pub static DUALITY_FRAME: LazyLock<Mat6> = LazyLock::new(|| {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // (raw index, coefficient) pairs per column
    let columns: [[(usize, f64); 2]; 6] = [
        [(0, s), (5, s)],
        [(1, s), (4, -s)],
        [(2, s), (3, s)],
        [(0, -s), (5, s)],
        [(1, -s), (4, -s)],
        [(2, s), (3, -s)],
    ];
    let mut o = Mat6::zeros();
    for (col, entries) in columns.iter().enumerate() {
        for &(row, v) in entries {
            o[(row, col)] = v;
        }
    }
    o
});

/// Matrix of the map induced on Λ² by a linear map `g` of R^4:
/// `e_i∧e_j ↦ g e_i ∧ g e_j`.
pub fn wedge_square(g: &Mat4) -> Mat6 {
    let mut w = Mat6::zeros();
    for (col, &(i, j)) in PAIRS.iter().enumerate() {
        for (row, &(k, l)) in PAIRS.iter().enumerate() {
            w[(row, col)] = g[(k, i)] * g[(l, j)] - g[(l, i)] * g[(k, j)];
        }
    }
    w
}

fn max_abs<const R: usize, const C: usize>(
    m: &nalgebra::SMatrix<f64, R, C>,
) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn asymmetry<const N: usize>(m: &nalgebra::SMatrix<f64, N, N>) -> f64 {
    max_abs(&(m - m.transpose()))
}

fn check_symmetric<const N: usize>(m: &nalgebra::SMatrix<f64, N, N>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOL * (1.0 + max_abs(m)) {
        return Err(Error::NonSymmetric { asymmetry: asym });
    }
    Ok(())
}

fn check_bianchi(trace_a: f64, trace_c: f64) -> Result<()> {
    if (trace_a - trace_c).abs() > BIANCHI_TOL * (1.0 + trace_a.abs() + trace_c.abs()) {
        return Err(Error::BianchiViolation { trace_a, trace_c });
    }
    Ok(())
}

/// Self-dual / anti-self-dual blocks of a curvature operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockForm {
    pub a: Mat3,
    pub b: Mat3,
    pub c: Mat3,
}

impl BlockForm {
    pub fn assemble(&self) -> Mat6 {
        let mut n = Mat6::zeros();
        n.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.a);
        n.fixed_view_mut::<3, 3>(0, 3).copy_from(&self.b);
        n.fixed_view_mut::<3, 3>(3, 0).copy_from(&self.b.transpose());
        n.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.c);
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PicClass {
    /// Positive isotropic curvature.
    #[serde(rename = "PIC")]
    Pic,
    /// Nonnegative but not positive isotropic curvature.
    #[serde(rename = "NonnegIC")]
    NonnegIc,
    Neither,
}

impl fmt::Display for PicClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PicClass::Pic => "PIC",
            PicClass::NonnegIc => "NonnegIC",
            PicClass::Neither => "Neither",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicciData {
    pub ric: Mat4,
    pub scalar: f64,
    /// Traceless part `Ric - (S/4) g`.
    pub traceless: Mat4,
    /// Eigenvalues of the traceless part, ascending.
    pub lambda: [f64; 4],
}

/// Scalar and spectral data extracted from the block decomposition.
///
/// `b_sq_rows` / `b_sq_cols` are row and column square sums of `B` written in a
/// frame that diagonalizes `A` and `C` (eigenvalues ascending). Both frames are
/// proper rotations, so `det_b` is frame independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenData {
    pub scalar: f64,
    pub a_eigs: [f64; 3],
    pub c_eigs: [f64; 3],
    pub a: [f64; 3],
    pub c: [f64; 3],
    /// Singular values of `B`, ascending.
    pub b_singular: [f64; 3],
    pub b_sq_rows: [f64; 3],
    pub b_sq_cols: [f64; 3],
    pub det_b: f64,
    pub lambda: [f64; 4],
    /// Signed `b` with `b³ = det B`, present only when `B Bᵗ = b² I`.
    pub b: Option<f64>,
    /// `B` in the diagonalizing frames.
    pub b_diag_frame: Mat3,
}

/// Ascending eigen-decomposition of a symmetric 3×3 matrix with a proper
/// rotation as eigenvector frame (columns).
pub fn sorted_eigen3(m: &Mat3) -> ([f64; 3], Mat3) {
    let eig = SymmetricEigen::new(*m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut frame = Mat3::zeros();
    let mut values = [0.0; 3];
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        frame.set_column(dst, &eig.eigenvectors.column(src));
    }
    if frame.determinant() < 0.0 {
        frame.column_mut(0).neg_mut();
    }
    (values, frame)
}

pub fn sorted_eigenvalues4(m: &Mat4) -> [f64; 4] {
    let eig = SymmetricEigen::new(*m);
    let mut v = [
        eig.eigenvalues[0],
        eig.eigenvalues[1],
        eig.eigenvalues[2],
        eig.eigenvalues[3],
    ];
    v.sort_by(f64::total_cmp);
    v
}

pub fn sorted_singular_values(m: &Mat3) -> [f64; 3] {
    let s = m.singular_values();
    let mut v = [s[0], s[1], s[2]];
    v.sort_by(f64::total_cmp);
    v
}

/// A symmetric operator on Λ²R⁴ satisfying the first Bianchi identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureOperator {
    matrix: Mat6,
}

impl CurvatureOperator {
    /// Validates symmetry and the Bianchi identity of a raw-basis matrix.
    pub fn from_matrix(matrix: Mat6) -> Result<Self> {
        check_symmetric(&matrix)?;
        let op = Self::from_matrix_unchecked(matrix);
        let blocks = op.to_blocks();
        check_bianchi(blocks.a.trace(), blocks.c.trace())?;
        Ok(op)
    }

    /// Symmetrizes without validating; used for integrator states whose
    /// Bianchi drift is monitored separately.
    pub(crate) fn from_matrix_unchecked(matrix: Mat6) -> Self {
        Self {
            matrix: (matrix + matrix.transpose()) * 0.5,
        }
    }

    pub fn from_blocks(a: &Mat3, b: &Mat3, c: &Mat3) -> Result<Self> {
        check_symmetric(a)?;
        check_symmetric(c)?;
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        check_bianchi(a.trace(), c.trace())?;
        let n = BlockForm {
            a: *a,
            b: *b,
            c: *c,
        }
        .assemble();
        let o = &*DUALITY_FRAME;
        Ok(Self::from_matrix_unchecked(o * n * o.transpose()))
    }

    pub fn zero() -> Self {
        Self {
            matrix: Mat6::zeros(),
        }
    }

    pub fn identity() -> Self {
        Self {
            matrix: Mat6::identity(),
        }
    }

    /// Raw-basis matrix.
    pub fn matrix(&self) -> &Mat6 {
        &self.matrix
    }

    /// Matrix in the self-dual / anti-self-dual frame.
    pub fn duality_matrix(&self) -> Mat6 {
        let o = &*DUALITY_FRAME;
        o.transpose() * self.matrix * o
    }

    pub fn to_blocks(&self) -> BlockForm {
        let n = self.duality_matrix();
        BlockForm {
            a: n.fixed_view::<3, 3>(0, 0).into_owned(),
            b: n.fixed_view::<3, 3>(0, 3).into_owned(),
            c: n.fixed_view::<3, 3>(3, 3).into_owned(),
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            matrix: self.matrix * t,
        }
    }

    /// Conjugation by the frame change `g` of R^4.
    pub fn rotated(&self, g: &Mat4) -> Self {
        let w = wedge_square(g);
        Self::from_matrix_unchecked(w * self.matrix * w.transpose())
    }

    /// Frobenius norm of the stored matrix; the natural magnitude for
    /// relative tolerances.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// `S = 2 tr R`.
    pub fn scalar(&self) -> f64 {
        2.0 * self.matrix.trace()
    }

    /// `Σ_{ijkl} R_ijkl² = 4 ‖R‖²_F`.
    pub fn rm_norm_sq(&self) -> f64 {
        4.0 * self.matrix.norm_squared()
    }

    /// `|tr A - tr C|`.
    pub fn bianchi_defect(&self) -> f64 {
        let b = self.to_blocks();
        (b.a.trace() - b.c.trace()).abs()
    }

    pub fn riemann(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        match (pair_index(i, j), pair_index(k, l)) {
            (Some((p, sp)), Some((q, sq))) => sp * sq * self.matrix[(p, q)],
            _ => 0.0,
        }
    }

    /// `Ric_ik = Σ_j R_ijkj`.
    pub fn ricci(&self) -> RicciData {
        let mut ric = Mat4::zeros();
        for i in 0..4 {
            for k in 0..4 {
                ric[(i, k)] = (0..4).map(|j| self.riemann(i, j, k, j)).sum();
            }
        }
        let scalar = ric.trace();
        let traceless = ric - Mat4::identity() * (scalar / 4.0);
        RicciData {
            ric,
            scalar,
            traceless,
            lambda: sorted_eigenvalues4(&traceless),
        }
    }

    pub fn eigen_data(&self) -> EigenData {
        let blocks = self.to_blocks();
        let scalar = self.scalar();
        let (a_eigs, frame_a) = sorted_eigen3(&blocks.a);
        let (c_eigs, frame_c) = sorted_eigen3(&blocks.c);
        let bd = frame_a.transpose() * blocks.b * frame_c;

        let mut b_sq_rows = [0.0; 3];
        let mut b_sq_cols = [0.0; 3];
        for i in 0..3 {
            b_sq_rows[i] = bd.row(i).norm_squared();
            b_sq_cols[i] = bd.column(i).norm_squared();
        }
        let det_b = blocks.b.determinant();
        let b_norm_sq = blocks.b.norm_squared();
        let bbt = blocks.b * blocks.b.transpose();
        let isotropy = (bbt - Mat3::identity() * (b_norm_sq / 3.0)).norm();
        let b = (isotropy <= ISOTROPY_TOL * (1.0 + b_norm_sq)).then(|| det_b.cbrt());

        let third = scalar / 12.0;
        EigenData {
            scalar,
            a_eigs,
            c_eigs,
            a: a_eigs.map(|v| v - third),
            c: c_eigs.map(|v| v - third),
            b_singular: sorted_singular_values(&blocks.b),
            b_sq_rows,
            b_sq_cols,
            det_b,
            lambda: self.ricci().lambda,
            b,
            b_diag_frame: bd,
        }
    }

    /// `(ψ₁, ψ₂) = (A₁ + A₂, C₁ + C₂)` with ascending eigenvalues.
    pub fn pic_quantities(&self) -> (f64, f64) {
        let blocks = self.to_blocks();
        let (a, _) = sorted_eigen3(&blocks.a);
        let (c, _) = sorted_eigen3(&blocks.c);
        (a[0] + a[1], c[0] + c[1])
    }

    pub fn default_pic_tol(&self) -> f64 {
        1e-10 * (1.0 + self.scalar().abs())
    }

    pub fn pic_class(&self) -> PicClass {
        self.pic_class_with_tol(self.default_pic_tol())
    }

    pub fn pic_class_with_tol(&self, tol: f64) -> PicClass {
        let (psi1, psi2) = self.pic_quantities();
        let m = psi1.min(psi2);
        if m > tol {
            PicClass::Pic
        } else if m >= -tol {
            PicClass::NonnegIc
        } else {
            PicClass::Neither
        }
    }

    pub fn to_json(&self) -> OperatorJson {
        let blocks = self.to_blocks();
        OperatorJson::Blocks {
            a: rows3(&blocks.a),
            b: rows3(&blocks.b),
            c: rows3(&blocks.c),
        }
    }

    pub fn from_json(json: &OperatorJson) -> Result<Self> {
        match json {
            OperatorJson::Blocks { a, b, c } => {
                Self::from_blocks(&from_rows3(a), &from_rows3(b), &from_rows3(c))
            }
            OperatorJson::Matrix { matrix } => {
                Self::from_matrix(Mat6::from_fn(|i, j| matrix[i][j]))
            }
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let json: OperatorJson = serde_json::from_str(s)?;
        Self::from_json(&json)
    }
}

/// Wire format for operators: blocks (preferred) or the full raw-basis matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorJson {
    Blocks {
        #[serde(rename = "A")]
        a: [[f64; 3]; 3],
        #[serde(rename = "B")]
        b: [[f64; 3]; 3],
        #[serde(rename = "C")]
        c: [[f64; 3]; 3],
    },
    Matrix {
        matrix: [[f64; 6]; 6],
    },
}

fn rows3(m: &Mat3) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

fn from_rows3(r: &[[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| r[i][j])
}
