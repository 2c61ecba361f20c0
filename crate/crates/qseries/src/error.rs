//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors surfaced by series arithmetic, expansion engines, and parsers.
#[derive(Debug, Error)]
pub enum QError {
    /// Inversion of a series with no visible nonzero term.
    #[error("division by zero series")]
    DivisionByZero,

    /// Logarithm of a series whose leading term is not the constant 1.
    #[error("log requires leading term 1*q^0, found {found}")]
    WrongLeadingTerm { found: String },

    /// Exponential of a series with a nonzero constant (or lower) term.
    #[error("exp requires strictly positive leading exponent, found {found}")]
    BadExpArgument { found: String },

    /// q -> -q substitution on a series with fractional exponents.
    #[error("q -> -q needs integer exponents, series lives on lattice 1/{denom}")]
    FractionalLattice { denom: i64 },

    /// Comparison or fit requested beyond the known order of an operand.
    #[error("insufficient truncation: requested {requested}, known only to {known}")]
    InsufficientTruncation { requested: String, known: String },

    /// Matrix expected to be symmetric is not.
    #[error("matrix is not symmetric at ({row},{col})")]
    NotSymmetric { row: usize, col: usize },

    /// Quadratic form fails positive definiteness.
    #[error("matrix is not positive definite (minor {minor} <= 0)")]
    NotPositiveDefinite { minor: usize },

    /// Singular matrix where an inverse is required.
    #[error("matrix is singular")]
    Singular,

    /// Dimension mismatch between matrices / vectors of one object.
    #[error("dimension mismatch: {context}")]
    Dimension { context: String },

    /// A Pochhammer length evaluated to a negative integer.
    #[error("Pochhammer length is negative at index {index}: {value}")]
    NegativeLength { index: String, value: i64 },

    /// A denominator factor vanished identically under the given specialization.
    #[error("denominator factor vanishes: {factor}")]
    VanishingFactor { factor: String },

    /// A specialization parameter is outside the admissible range.
    #[error("bad specialization: {reason}")]
    BadSpecialization { reason: String },

    /// A summation that cannot be truncated at any finite order.
    #[error("sum does not truncate: {reason}")]
    NonTruncating { reason: String },

    /// Eta-quotient fit was asked for more data than the series carries.
    #[error("insufficient order for fit: need {need} usable coefficients, have {have}")]
    InsufficientOrder { need: usize, have: usize },

    /// A Bailey transform applied to a pair with the wrong relative parameter
    /// or base scale.
    #[error("transform {transform} needs a pair with {requirement}")]
    TransformMismatch {
        transform: String,
        requirement: String,
    },

    /// Malformed textual input (rationals, JSON payloads, CLI values).
    #[error("parse error: {0}")]
    Parse(String),
}

impl QError {
    /// Shorthand used by parsers.
    pub fn parse(msg: impl Into<String>) -> Self {
        QError::Parse(msg.into())
    }
}
