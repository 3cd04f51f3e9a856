use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("element does not lie in the subfield {0}")]
    NotInSubfield(&'static str),
    #[error("generator spaces do not match: arity {0} vs {1}")]
    SpaceMismatch(usize, usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("exponential needs a nilpotent even element: {0}")]
    NotEvenNilpotent(String),
    #[error("expected a homogeneous element of degree {0}")]
    NotHomogeneous(usize),
    #[error("vector with (v,v) = {0} cannot be used for a reflection")]
    BadReflection(String),
    #[error("zero spinor has no annihilator")]
    ZeroSpinor,
    #[error("subspace is not maximal isotropic: {0}")]
    NotMaximalIsotropic(String),
    #[error("degenerate datum: {0}")]
    Degenerate(String),
    #[error("zero element has no filtration level")]
    ZeroFiltration,
    #[error("element does not lie in {0}")]
    NotInSubspace(String),
    #[error("rank of the class is zero")]
    ZeroRank,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
