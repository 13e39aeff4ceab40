use thiserror::Error;

use crate::flow::FlowTrajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NonSymmetric { asymmetry: f64 },

    #[error("first Bianchi identity violated: tr A = {trace_a}, tr C = {trace_c}")]
    BianchiViolation { trace_a: f64, trace_c: f64 },

    #[error("non-finite entry in curvature data")]
    NonFinite,

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("pinching ratio undefined: psi1 * psi2 = {product} <= 0")]
    RatioUndefined { product: f64 },

    #[error("rejection sampling exhausted after {attempts} consecutive rejections")]
    RejectionExhausted { attempts: u64 },

    #[error("invalid sample spec: {0}")]
    InvalidSpec(String),

    #[error("blow-up detected at t = {time} (norm ratio exceeded)")]
    BlowupDetected {
        time: f64,
        partial: Box<FlowTrajectory>,
    },

    #[error("step too large: single-step defect {defect:e} exceeds {limit:e}")]
    StepTooLarge { defect: f64, limit: f64 },

    #[error("invalid integration parameters: {0}")]
    InvalidStep(String),

    #[error("trajectory too short: {0} samples, need at least 3")]
    TrajectoryTooShort(usize),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("malformed operator JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
