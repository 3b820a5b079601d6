//! Crate-wide error type.

use thiserror::Error;

use crate::state::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("operator entries must be finite")]
    NonFiniteEntries,

    #[error("operator is not Hermitian (max |M_ij - conj(M_ji)| = {max_asymmetry:.3e})")]
    NotHermitian { max_asymmetry: f64 },

    #[error("gate is not unitary (max |U'U - I| = {max_deviation:.3e})")]
    NotUnitary { max_deviation: f64 },

    #[error(
        "invalid density matrix: {}",
        crate::state::format_violations(violations)
    )]
    InvalidDensity { violations: Vec<Violation> },

    #[error("{name} = {value} outside [-1, 1]")]
    ValueOutOfRange { name: String, value: f64 },

    #[error("correlator table inconsistent at setting ({x}, {y}): {detail}")]
    InconsistentTable {
        x: &'static str,
        y: &'static str,
        detail: String,
    },

    #[error("missing setting ({x}, {y})")]
    MissingSetting { x: String, y: String },

    #[error("duplicate setting ({x}, {y})")]
    DuplicateSetting { x: String, y: String },

    #[error("no shots recorded")]
    ZeroShots,

    #[error("Born probability {value:.3e} more negative than tolerated")]
    NegativeProbability { value: f64 },

    #[error("standard error is zero; significance in sigmas is undefined")]
    ZeroStderr,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
