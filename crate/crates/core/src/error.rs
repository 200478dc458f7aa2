//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("variable `{0}` already declared")]
    DuplicateVariable(String),

    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("evaluation at pole (|denominator| = {denom_abs:.3e} below threshold)")]
    PoleEvaluation { denom_abs: f64 },

    #[error("missing value for variable `{0}` in evaluation")]
    MissingAssignment(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("connection spec invalid: {0}")]
    Schema(String),

    #[error("substitution is not affine with invertible linear part: {0}")]
    BadSubstitution(String),

    #[error("matrix is not in companion form")]
    NotCompanion,

    #[error("jet order {got} exceeds cap {cap}")]
    OrderCap { got: u32, cap: u32 },

    #[error("ansatz bound exceeds cap: {0}")]
    AnsatzCap(String),

    #[error("denominator is not grouplike on the horizontal locus: {0}")]
    NotGrouplike(String),

    #[error("deformation is not flat: first nonzero residual in {0}")]
    NotFlat(String),

    #[error("path too close to singularity (distance {dist:.3e} < r_min {r_min:.3e})")]
    PoleProximity { dist: f64, r_min: f64 },

    #[error("singularities too close (|a_i - a_j| = {0:.3e})")]
    SingularityCollision(f64),

    #[error("step size underflow in integrator at t = {0}")]
    StepUnderflow(f64),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
