use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("parameter out of domain: {0}")]
    ParamDomain(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field has {found} values, grid has {expected} nodes")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value at node {0}")]
    NonFinite(usize),

    #[error("invalid norm exponent {0} (need m >= 1 or infinity)")]
    InvalidExponent(f64),

    #[error("unknown kind `{0}`")]
    UnknownKind(String),

    #[error("invalid kernel table: {0}")]
    InvalidKernel(String),

    #[error("degenerate interpolation exponent: {0}")]
    Degenerate(String),

    /// `r >= q`: the interpolation inequality reduces to Hölder and no
    /// Gagliardo-Nirenberg weight is defined.
    #[error("r = {r} > q = {q}: Hölder branch, no interpolation weight")]
    HolderBranch { q: f64, r: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
