use thiserror::Error;

use crate::Rational;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A system parameter violates its domain; the message names the constraint.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("replication factors must be integers (gamma_a = {gamma_a}, gamma_p = {gamma_p}); use memory sharing")]
    NonIntegral { gamma_a: Rational, gamma_p: Rational },

    #[error("unsupported regime ({regime}): {detail}")]
    OutOfRegime { regime: &'static str, detail: String },

    #[error("invalid mini-subfile: {0}")]
    InvalidMiniSubfile(String),

    #[error("invalid demand: {0}")]
    InvalidDemand(String),

    #[error("K = {users} exceeds the exhaustive-enumeration guard of {limit}")]
    GuardExceeded { users: usize, limit: usize },

    #[error("cannot parse `{0}` as a rational number")]
    ParseRational(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
