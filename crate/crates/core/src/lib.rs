//! Numerical toolkit for algebraic curvature operators on four-manifolds.
//!
//! The crate works pointwise: a curvature operator is a symmetric endomorphism
//! of the six-dimensional space of 2-forms on R^4, split into self-dual and
//! anti-self-dual blocks `[[A, B], [B^t, C]]`. On top of that algebra it
//! provides the quadratic reaction term `R^2 + R#` of the Ricci flow, the
//! pinching functional `P`, the pinching quantity `E`, the small constrained
//! optimization problems that bound `P`, a deterministic sampler, an RK4
//! integrator for the reaction ODE, and a catalog of exact shrinking soliton
//! models.

pub mod error;
pub mod flow;
pub mod lambda2;
pub mod models;
pub mod optim;
pub mod quadratic;
pub mod report;
pub mod sampler;
pub mod suite;

pub use error::{Error, Result};
pub use lambda2::{BlockForm, CurvatureOperator, EigenData, PicClass, RicciData};
pub use models::{ModelGeometry, ModelName};
pub use quadratic::PinchData;
pub use sampler::{SampleClass, SampleSpec};
