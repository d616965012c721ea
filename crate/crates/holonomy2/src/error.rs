//! Error type shared across the crate.

use thiserror::Error;

use crate::groups::GroupKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("kind mismatch: expected {expected:?}, got {got:?}")]
    KindMismatch { expected: GroupKind, got: GroupKind },

    #[error("matrix is not in {kind:?} (constraint residual {residual:.3e} exceeds {tol:.3e})")]
    NotInGroup {
        kind: GroupKind,
        residual: f64,
        tol: f64,
    },

    #[error("logarithm out of domain for {kind:?}: {detail}")]
    LogBranch { kind: GroupKind, detail: String },

    #[error("singular matrix encountered in {context}")]
    Singular { context: String },

    #[error("source/target mismatch: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    Composability { defect: f64, tol: f64 },

    #[error("boundary mismatch between paths: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    BoundaryMismatch { defect: f64, tol: f64 },

    #[error("path fails the flat-collar conditions: {detail}")]
    CollarViolation { detail: String },

    #[error("reparametrization map is not an orientation-preserving surjection: {detail}")]
    BadReparametrization { detail: String },

    #[error("invalid transport configuration: {0}")]
    Config(String),

    #[error("connection violates the fake-curvature relation: defect {defect:.3e} exceeds gate {gate:.3e}")]
    FakeCurvatureViolation { defect: f64, gate: f64 },

    #[error("edge-rank hypothesis violated for the path family: {detail}")]
    HypothesisViolation { detail: String },

    #[error("unknown module `{0}`")]
    UnknownModule(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("scenario file error: {0}")]
    ScenarioFile(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
