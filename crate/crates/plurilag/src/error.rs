//! Crate-wide error type.

use crate::expr::Expr;
use thiserror::Error;

/// Errors reported by the engine.
///
/// All arithmetic is exact, so none of these signal numerical trouble; they
/// are contract violations (mismatched contexts, malformed input) or honest
/// negative outcomes (a witness search that exhausted its ansatz).
#[derive(Debug, Error)]
pub enum Error {
    #[error("operands belong to different contexts")]
    ContextMismatch,

    #[error("independent-variable index {index} out of range for dimension {dim}")]
    IndepIndexOutOfRange { index: usize, dim: usize },

    #[error("dependent-variable index {index} out of range ({count} dependent variables)")]
    DepIndexOutOfRange { index: usize, count: usize },

    #[error("invalid variable name `{0}`")]
    InvalidName(String),

    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),

    #[error("a context needs at least one independent and one dependent variable")]
    EmptyContext,

    #[error("negative exponent {0} is unsupported")]
    NegativeExponent(i64),

    #[error("expected {expected} expressions, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("expression of jet order {found} exceeds the supported order {max}")]
    OrderOverflow { found: u32, max: u32 },

    #[error("cannot take the exterior derivative of a top-degree form (degree {degree} on {dim}-dimensional multi-time)")]
    DegreeOverflow { degree: usize, dim: usize },

    #[error("multi-time Euler-Lagrange generation expects a 2-form, got degree {0}")]
    UnsupportedFormDegree(usize),

    #[error("form coefficient tuple {0:?} is invalid (indices must be distinct and in range)")]
    BadTuple(Vec<usize>),

    #[error("rewrite rule `{0}` refers to its own lead (or a derivative of it) on the right-hand side")]
    SelfReferentialRule(String),

    #[error("reduction exceeded the step budget of {budget} rewrites")]
    ReductionDivergence { budget: u64 },

    #[error("not a total divergence; Euler images: [{}]", format_exprs(.obstructions))]
    NotADivergence { obstructions: Vec<Expr> },

    #[error("witness ansatz exhausted (max order {order}, max degree {degree}, trig {})",
            if *.trig { "on" } else { "off" })]
    AnsatzExhausted { order: u32, degree: u32, trig: bool },

    #[error("the field is not an exact variational symmetry; residual: {residual}")]
    NotASymmetry { residual: Expr },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("parse error at column {col}: {msg}")]
    Parse { col: usize, msg: String },
}

fn format_exprs(exprs: &[Expr]) -> String {
    exprs
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
