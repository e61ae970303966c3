use thiserror::Error;

/// Errors surfaced by ring construction, character manipulation and the
/// fixed-space solvers. Everything here is a hard failure: callers that can
/// proceed (e.g. a conductor search skipping an incompatible character)
/// filter before invoking the fallible operation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported ring parameters: {0}")]
    BadRing(String),
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("element is not invertible: {0}")]
    NotInvertible(String),
    #[error("incompatible arguments: {0}")]
    Incompatible(String),
    #[error("central character obstruction: {0}")]
    CentralObstruction(String),
    #[error("resource guard tripped: {0}")]
    ResourceGuard(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("stabilization failed: {0}")]
    Stabilization(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
