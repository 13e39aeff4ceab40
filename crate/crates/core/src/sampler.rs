//! Seeded generation of curvature operators in the hypothesis classes of the
//! inequality suites.
//!
//! Sample `i` of a spec is drawn from its own ChaCha stream keyed by a hash of
//! `(seed, i)`, so any subset of indices can be generated in any order or in
//! parallel with identical results.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda2::{CurvatureOperator, Mat3, PicClass};

pub const MAX_REJECTIONS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleClass {
    /// Symmetric with `tr A = tr C`.
    #[serde(rename = "bianchi")]
    Bianchi,
    /// Bianchi operators rejection-sampled to `ψ₁, ψ₂ > 0`.
    #[serde(rename = "pic")]
    Pic,
    /// PIC with `B = b Q`, `Q ∈ SO(3)`, so `B Bᵗ = b² I`.
    #[serde(rename = "pic_equalB")]
    PicEqualB,
    /// Bianchi operators with `B = 0`.
    #[serde(rename = "block_diag")]
    BlockDiag,
}

impl fmt::Display for SampleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleClass::Bianchi => "bianchi",
            SampleClass::Pic => "pic",
            SampleClass::PicEqualB => "pic_equalB",
            SampleClass::BlockDiag => "block_diag",
        })
    }
}

impl FromStr for SampleClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bianchi" => Ok(SampleClass::Bianchi),
            "pic" => Ok(SampleClass::Pic),
            "pic_equalB" => Ok(SampleClass::PicEqualB),
            "block_diag" => Ok(SampleClass::BlockDiag),
            other => Err(Error::InvalidSpec(format!("unknown sample class `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub seed: u64,
    pub count: usize,
    pub class: SampleClass,
    /// Bound on block entries (and on `|b|` for `pic_equalB`).
    pub scale: f64,
    /// Scalar curvature is drawn uniformly from this interval.
    pub s_range: (f64, f64),
}

impl SampleSpec {
    /// Unit scale with the default scalar-curvature window of the class:
    /// `[-6, 6]` for `bianchi`/`block_diag`, `[0, 6]` for the PIC classes.
    pub fn new(class: SampleClass, seed: u64, count: usize) -> Self {
        let s_range = match class {
            SampleClass::Bianchi | SampleClass::BlockDiag => (-6.0, 6.0),
            SampleClass::Pic | SampleClass::PicEqualB => (0.0, 6.0),
        };
        Self {
            seed,
            count,
            class,
            scale: 1.0,
            s_range,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.s_range = (self.s_range.0 * scale / self.scale, self.s_range.1 * scale / self.scale);
        self.scale = scale;
        self
    }

    pub fn with_s_range(mut self, lo: f64, hi: f64) -> Self {
        self.s_range = (lo, hi);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::InvalidSpec("count must be at least 1".into()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidSpec(format!("scale must be positive, got {}", self.scale)));
        }
        let (lo, hi) = self.s_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidSpec(format!("bad S range [{lo}, {hi}]")));
        }
        if self.class == SampleClass::PicEqualB && hi <= 0.0 {
            return Err(Error::InvalidSpec("pic_equalB needs positive scalar curvature".into()));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for sample `index` of stream `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index)))
}

fn uniform_sym(rng: &mut ChaCha8Rng, scale: f64) -> Mat3 {
    let mut m = Mat3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let v = rng.random_range(-scale..=scale);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn uniform_full(rng: &mut ChaCha8Rng, scale: f64) -> Mat3 {
    Mat3::from_fn(|_, _| rng.random_range(-scale..=scale))
}

/// Haar-random rotation via Shoemake's unit quaternion construction.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let u3: f64 = rng.random();
    let tau = std::f64::consts::TAU;
    let (r1, r2) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(
        r2 * (tau * u3).cos(),
        r1 * (tau * u2).sin(),
        r1 * (tau * u2).cos(),
        r2 * (tau * u3).sin(),
    );
    UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}

fn draw_scalar(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Uniform point of the open simplex `{x > 0, Σx = 3}`.
fn simplex_point(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let mut u = [rng.random::<f64>(), rng.random::<f64>()];
    u.sort_by(f64::total_cmp);
    [3.0 * u[0], 3.0 * (u[1] - u[0]), 3.0 * (1.0 - u[1])]
}

/// Bianchi projection followed by moving `S` to `target` with equal identity
/// shifts of both diagonal blocks.
fn bianchi_blocks(rng: &mut ChaCha8Rng, spec: &SampleSpec, with_b: bool) -> (Mat3, Mat3, Mat3) {
    let mut a = uniform_sym(rng, spec.scale);
    let mut c = uniform_sym(rng, spec.scale);
    let b = if with_b {
        uniform_full(rng, spec.scale)
    } else {
        Mat3::zeros()
    };
    let target = draw_scalar(rng, spec.s_range);
    let shift_a = (target / 4.0 - a.trace()) / 3.0;
    let shift_c = (target / 4.0 - c.trace()) / 3.0;
    for i in 0..3 {
        a[(i, i)] += shift_a;
        c[(i, i)] += shift_c;
    }
    (a, b, c)
}

fn equal_b_blocks(rng: &mut ChaCha8Rng, spec: &SampleSpec) -> (Mat3, Mat3, Mat3) {
    let lo = spec.s_range.0.max(0.0);
    let s = loop {
        let s = draw_scalar(rng, (lo, spec.s_range.1));
        if s > 0.0 {
            break s;
        }
    };
    let diag = |x: [f64; 3]| {
        let a = crate::optim::x_to_a(x, s);
        Mat3::from_diagonal(&Vector3::new(a[0], a[1], a[2]).add_scalar(s / 12.0))
    };
    let a = diag(simplex_point(rng));
    let c = diag(simplex_point(rng));
    let b = rng.random_range(-spec.scale..=spec.scale);
    let q = random_rotation(rng);
    let pa = random_rotation(rng);
    let pc = random_rotation(rng);
    (
        pa * a * pa.transpose(),
        pa * (q * b) * pc.transpose(),
        pc * c * pc.transpose(),
    )
}

/// Sample `index` of `spec`.
pub fn sample_at(spec: &SampleSpec, index: u64) -> Result<CurvatureOperator> {
    let mut rng = substream(spec.seed, index);
    let mut attempts = 0u64;
    loop {
        let (a, b, c) = match spec.class {
            SampleClass::Bianchi | SampleClass::Pic => bianchi_blocks(&mut rng, spec, true),
            SampleClass::BlockDiag => bianchi_blocks(&mut rng, spec, false),
            SampleClass::PicEqualB => equal_b_blocks(&mut rng, spec),
        };
        // Rounding in the trace shift or the conjugations stays far below the
        // validation tolerance.
        let op = CurvatureOperator::from_blocks(&a, &b, &c)?;
        let accept = match spec.class {
            SampleClass::Pic | SampleClass::PicEqualB => op.pic_class() == PicClass::Pic,
            _ => true,
        };
        if accept {
            return Ok(op);
        }
        attempts += 1;
        if attempts >= MAX_REJECTIONS {
            return Err(Error::RejectionExhausted { attempts });
        }
    }
}

/// Lazily generated stream of `spec.count` operators.
pub fn sample(spec: &SampleSpec) -> Result<impl Iterator<Item = Result<CurvatureOperator>> + '_> {
    spec.validate()?;
    Ok((0..spec.count as u64).map(move |i| sample_at(spec, i)))
}

/// All samples of `spec`, generated in parallel, in index order.
pub fn sample_vec(spec: &SampleSpec) -> Result<Vec<CurvatureOperator>> {
    spec.validate()?;
    (0..spec.count as u64)
        .into_par_iter()
        .map(|i| sample_at(spec, i))
        .collect()
}
