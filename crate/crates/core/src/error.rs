//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Buffer shapes that must agree did not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A projected point fell on or behind the camera plane.
    #[error("point behind camera: z = {z}")]
    BehindCamera { z: f64 },

    /// An optimization step produced a non-finite loss.
    #[error("optimization diverged at step {step}: {what}")]
    Diverged { step: usize, what: String },

    /// A gradient entry was not finite.
    #[error("non-finite gradient in segment '{segment}'")]
    NonFiniteGradient { segment: String },

    #[error("parse error in {path}: {what}")]
    Parse { path: String, what: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}
