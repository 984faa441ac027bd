use std::fmt;

/// Errors shared by every module of the crate.
///
/// Unsatisfiability is never an error: propagation routines report it
/// through their return value. Errors signal malformed inputs, violated
/// preconditions, exhausted resource caps, or broken internal invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A term, operation or assignment was applied to the wrong number
    /// of arguments.
    ArityMismatch { expected: usize, got: usize },
    /// A term references an unknown operation or an out-of-range variable.
    MalformedTerm(String),
    /// An operation table or algebra failed validation.
    InvalidAlgebra(String),
    /// A template failed validation (tuples out of range, bad arities,
    /// a declared polymorphism that does not preserve the relations).
    InvalidTemplate(String),
    /// An instance failed validation (unknown variable or relation,
    /// scope/arity mismatch).
    InvalidInstance(String),
    /// Two algebras do not have matching operation arities.
    SignatureMismatch { left: Vec<usize>, right: Vec<usize> },
    /// The query is meaningless on a one-element algebra.
    DegenerateAlgebra(String),
    /// A caller-side precondition was violated.
    Precondition(String),
    /// A partition is not compatible with the algebra operations.
    IncompatiblePartition(String),
    /// A configured cap was exceeded; the message names the cap.
    ResourceLimit(String),
    /// The solver does not apply to the given template (no edge term
    /// found within the configured bound).
    NotApplicable(String),
    /// An internal invariant failed; this is a bug or a violated
    /// structural assumption, never a property of the input instance.
    InternalInvariant(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ArityMismatch { expected, got } => {
                write!(f, "arity mismatch: expected {expected} arguments, got {got}")
            }
            Error::MalformedTerm(msg) => write!(f, "malformed term: {msg}"),
            Error::InvalidAlgebra(msg) => write!(f, "invalid algebra: {msg}"),
            Error::InvalidTemplate(msg) => write!(f, "invalid template: {msg}"),
            Error::InvalidInstance(msg) => write!(f, "invalid instance: {msg}"),
            Error::SignatureMismatch { left, right } => {
                write!(f, "signature mismatch: arities {left:?} vs {right:?}")
            }
            Error::DegenerateAlgebra(msg) => write!(f, "degenerate algebra: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::IncompatiblePartition(msg) => {
                write!(f, "partition incompatible with operations: {msg}")
            }
            Error::ResourceLimit(msg) => write!(f, "resource limit exceeded: {msg}"),
            Error::NotApplicable(msg) => write!(f, "solver not applicable: {msg}"),
            Error::InternalInvariant(msg) => write!(f, "internal invariant failed: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
