//! The small constrained polynomial problems behind the sign of `P`.
//!
//! With `x_i = 1 - (6/S) a_i` the cubic `S Σa² - 12 Σa³` on `{Σa = 0}` becomes
//! `F(x) = (S³/36)(2Σx³ - 5Σx² + 9)` on the plane `Σx = 3`, and the positive
//! isotropic curvature constraints on the traceless block become `x_i > 0`
//! (since `a_i + a_j = -a_k`).

use rayon::prelude::*;

use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-12;

/// A point of the plane `x₁ + x₂ + x₃ = 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexPoint {
    x: [f64; 3],
}

impl SimplexPoint {
    pub fn new(x: [f64; 3]) -> Result<Self> {
        let sum: f64 = x.iter().sum();
        if (sum - 3.0).abs() > SIMPLEX_TOL {
            return Err(Error::ConstraintViolation(format!(
                "simplex coordinates sum to {sum}, expected 3"
            )));
        }
        Ok(Self { x })
    }

    pub fn coords(&self) -> [f64; 3] {
        self.x
    }

    pub fn is_interior(&self) -> bool {
        self.x.iter().all(|&v| v > 0.0)
    }

    pub fn is_feasible(&self) -> bool {
        self.x.iter().all(|&v| v >= 0.0)
    }

    /// Coordinates sorted ascending, a canonical representative of the
    /// permutation orbit.
    pub fn sorted(&self) -> [f64; 3] {
        let mut s = self.x;
        s.sort_by(f64::total_cmp);
        s
    }
}

/// `x_i = 1 - (6/S) a_i`.
pub fn a_to_x(a: [f64; 3], s: f64) -> [f64; 3] {
    a.map(|v| 1.0 - 6.0 * v / s)
}

/// `a_i = (S/6)(1 - x_i)`.
pub fn x_to_a(x: [f64; 3], s: f64) -> [f64; 3] {
    x.map(|v| s * (1.0 - v) / 6.0)
}

fn cubic_poly(x: &[f64; 3]) -> f64 {
    let s2: f64 = x.iter().map(|v| v * v).sum();
    let s3: f64 = x.iter().map(|v| v * v * v).sum();
    2.0 * s3 - 5.0 * s2 + 9.0
}

/// `F = (S³/36)(2Σx³ - 5Σx² + 9)`.
pub fn objective_f(x: &SimplexPoint, s: f64) -> f64 {
    s.powi(3) / 36.0 * cubic_poly(&x.x)
}

/// `S Σa² - 12 Σa³`, the same quantity before the change of variables.
pub fn objective_in_a(a: [f64; 3], s: f64) -> f64 {
    let s2: f64 = a.iter().map(|v| v * v).sum();
    let s3: f64 = a.iter().map(|v| v * v * v).sum();
    s * s2 - 12.0 * s3
}

/// `F` restricted to the face `x₁ = 0`, parametrized by `x₂`.
pub fn boundary_slice(x2: f64, s: f64) -> f64 {
    s.powi(3) / 36.0 * cubic_poly(&[0.0, x2, 3.0 - x2])
}

/// Closed form of [`boundary_slice`]: `(S³/18)(2x₂ - 3)²`.
pub fn boundary_slice_closed_form(x2: f64, s: f64) -> f64 {
    s.powi(3) / 18.0 * (2.0 * x2 - 3.0).powi(2)
}

/// Interior critical points of `F` on `Σx = 3`, one per permutation orbit.
///
/// Lagrange: `6x_i² - 10x_i = μ` for every `i`, so each coordinate is one of the
/// two roots `r`, `5/3 - r` of a common quadratic. For each assignment of roots
/// to coordinates the constraint is linear in `r` and is solved exactly; the
/// equal-root case gives the centroid.
pub fn critical_points_f() -> Vec<SimplexPoint> {
    let mut found: Vec<[f64; 3]> = vec![[1.0; 3]];
    for mask in 0u8..8 {
        let k = mask.count_ones() as f64;
        // k r + (3 - k)(5/3 - r) = 3
        let denom = 2.0 * k - 3.0;
        let r = (5.0 * k - 6.0) / (3.0 * denom);
        let other = 5.0 / 3.0 - r;
        let x: [f64; 3] = std::array::from_fn(|i| if mask & (1 << i) != 0 { r } else { other });
        let Ok(p) = SimplexPoint::new(x) else { continue };
        let mu = 6.0 * x[0] * x[0] - 10.0 * x[0];
        let stationary = x.iter().all(|&v| (6.0 * v * v - 10.0 * v - mu).abs() < 1e-12);
        if !(stationary && p.is_interior()) {
            continue;
        }
        let key = p.sorted();
        if !found
            .iter()
            .any(|f| f.iter().zip(key.iter()).all(|(a, b)| (a - b).abs() < 1e-12))
        {
            found.push(key);
        }
    }
    found.sort_by(|a, b| a.partial_cmp(b).unwrap());
    found
        .into_iter()
        .map(|x| SimplexPoint { x })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinResult {
    pub min_value: f64,
    pub argmin: SimplexPoint,
}

/// Candidate ordering for the brute-force scan: value, then interior before
/// boundary, then lexicographic coordinates. The order is total, so the
/// parallel reduction is independent of scheduling.
fn better(a: &(f64, SimplexPoint), b: &(f64, SimplexPoint)) -> bool {
    use std::cmp::Ordering::*;
    match a.0.total_cmp(&b.0) {
        Less => true,
        Greater => false,
        Equal => match (a.1.is_interior(), b.1.is_interior()) {
            (true, false) => true,
            (false, true) => false,
            _ => a.1.x.partial_cmp(&b.1.x) == Some(Less),
        },
    }
}

/// Minimizes `F` over the closed simplex `{x ≥ 0, Σx = 3}` on a barycentric
/// grid with `grid_n` subdivisions, plus the exact critical points and the
/// boundary vertices `perm(0, 3/2, 3/2)`.
pub fn brute_min_f(grid_n: usize, s: f64) -> Result<MinResult> {
    if grid_n < 2 {
        return Err(Error::ConstraintViolation(format!(
            "grid_n = {grid_n}, need at least 2"
        )));
    }
    let n = grid_n as f64;
    let mut extra: Vec<SimplexPoint> = Vec::new();
    for p in critical_points_f() {
        let [u, v, w] = p.x;
        for x in [[u, v, w], [v, w, u], [w, u, v], [u, w, v], [w, v, u], [v, u, w]] {
            extra.push(SimplexPoint { x });
        }
    }
    for i in 0..3 {
        let mut x = [1.5; 3];
        x[i] = 0.0;
        extra.push(SimplexPoint { x });
    }

    let eval = |p: SimplexPoint| (objective_f(&p, s), p);
    let grid_best = (0..=grid_n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..=grid_n - i).map(move |j| {
                let k = grid_n - i - j;
                let x = [3.0 * i as f64 / n, 3.0 * j as f64 / n, 3.0 * k as f64 / n];
                // barycentric rounding keeps the sum at 3 to machine precision
                let x2 = 3.0 - x[0] - x[1];
                SimplexPoint { x: [x[0], x[1], x2] }
            })
        })
        .map(eval)
        .reduce_with(|a, b| if better(&b, &a) { b } else { a })
        .expect("grid is nonempty");

    let best = extra
        .into_iter()
        .map(eval)
        .fold(grid_best, |a, b| if better(&b, &a) { b } else { a });
    Ok(MinResult {
        min_value: best.0,
        argmin: best.1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxSumSquares {
    /// Best value over grid and vertices.
    pub value: f64,
    pub maximizer: [f64; 3],
    /// Best value over the grid alone.
    pub grid_value: f64,
    /// Best value over the three vertices alone.
    pub vertex_value: f64,
}

/// Maximizes `Σa²` subject to `Σa = 0`, `a_i ≥ -S/12`.
///
/// The feasible set is the triangle with vertices `perm(S/6, -S/12, -S/12)`;
/// it is scanned on a barycentric grid and its vertices are enumerated.
pub fn max_sum_squares(s: f64, grid_n: usize) -> Result<MaxSumSquares> {
    if s <= 0.0 {
        return Err(Error::ConstraintViolation(format!("S = {s}, need S > 0")));
    }
    if grid_n < 1 {
        return Err(Error::ConstraintViolation("grid_n must be positive".into()));
    }
    let hi = s / 6.0;
    let lo = -s / 12.0;
    let vertices = [[hi, lo, lo], [lo, hi, lo], [lo, lo, hi]];
    let sq = |a: &[f64; 3]| a.iter().map(|v| v * v).sum::<f64>();
    let pick = |best: ([f64; 3], f64), a: [f64; 3]| {
        let v = sq(&a);
        if v > best.1 || (v == best.1 && a.partial_cmp(&best.0) == Some(std::cmp::Ordering::Less)) {
            (a, v)
        } else {
            best
        }
    };

    let n = grid_n as f64;
    let mut grid_best = ([0.0; 3], f64::NEG_INFINITY);
    for i in 0..=grid_n {
        for j in 0..=grid_n - i {
            let k = grid_n - i - j;
            let w = [i as f64 / n, j as f64 / n, k as f64 / n];
            let a: [f64; 3] = std::array::from_fn(|c| {
                w[0] * vertices[0][c] + w[1] * vertices[1][c] + w[2] * vertices[2][c]
            });
            grid_best = pick(grid_best, a);
        }
    }
    let vertex_best = vertices
        .into_iter()
        .fold(([0.0; 3], f64::NEG_INFINITY), pick);
    let best = pick(grid_best, vertex_best.0);
    Ok(MaxSumSquares {
        value: best.1,
        maximizer: best.0,
        grid_value: grid_best.1,
        vertex_value: vertex_best.1,
    })
}

/// `(Σa³/Σa², (Σa²)^{1/2}/√6)` for traceless `a`.
pub fn cubic_ratio_check(a: [f64; 3]) -> Result<(f64, f64)> {
    let sum: f64 = a.iter().sum();
    let mag: f64 = a.iter().map(|v| v.abs()).sum();
    if sum.abs() > 1e-12 * (1.0 + mag) {
        return Err(Error::ConstraintViolation(format!("sum of a is {sum:e}")));
    }
    let s2: f64 = a.iter().map(|v| v * v).sum();
    if s2 <= 0.0 {
        return Err(Error::ConstraintViolation("a must be nonzero".into()));
    }
    let s3: f64 = a.iter().map(|v| v * v * v).sum();
    Ok((s3 / s2, s2.sqrt() / 6f64.sqrt()))
}

/// Literal pairwise constraint `S/6 + a_i + a_j > 0` for all `i ≠ j`.
pub fn satisfies_pairwise_pic(a: [f64; 3], s: f64) -> bool {
    (0..3).all(|i| ((i + 1)..3).all(|j| s / 6.0 + a[i] + a[j] > 0.0))
}

/// Minimal constraint: only the two smallest entries, `S/6 + a₁ + a₂ > 0`.
pub fn satisfies_minimal_pic(a: [f64; 3], s: f64) -> bool {
    let mut v = a;
    v.sort_by(f64::total_cmp);
    s / 6.0 + v[0] + v[1] > 0.0
}
