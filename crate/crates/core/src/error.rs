use std::io;

use crate::fingermodel::Joint;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {field} {reason}")]
    InvalidGeometry { field: &'static str, reason: String },

    #[error("{what} = {value} is outside the allowed range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("incompatible design parameters: {0}")]
    IncompatibleParameters(String),

    #[error("tendon path infeasible: {0}")]
    PathInfeasible(String),

    #[error("moment arm at {joint} is {arm} mm, too small to extend the joint")]
    ZeroMomentArm { joint: Joint, arm: f64 },

    #[error("equilibrium solver did not converge after {iterations} iterations (best residual {residual:.3e} N·mm)")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("malformed table at line {line}: {message}")]
    Table { line: usize, message: String },

    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config validation failed for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("property check failed: {0}")]
    PropertyViolation(String),

    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
}
