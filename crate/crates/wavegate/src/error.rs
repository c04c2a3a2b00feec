use thiserror::Error;

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum SolverError {
    /// Argument outside the mathematical domain of the operation (e.g. t <= 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// A result would exceed the representable floating-point range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// Evaluation requested exactly at a pole of T(k) or too close to one.
    #[error("pole error: {0}")]
    Pole(String),

    /// No classical turning points / invalid branch for the WKB form.
    #[error("branch error: {0}")]
    Branch(String),

    /// Operation not defined for this barrier kind.
    #[error("unsupported kind: {0}")]
    UnsupportedKind(String),

    /// An operator resolvent was applied at one of its poles (mu_j hits a root).
    #[error("operator pole: {0}")]
    OperatorPole(String),

    /// An integral or sum does not converge for the given initial state.
    #[error("divergence: {0}")]
    Divergence(String),

    /// Asymptotic/series method called outside its validity regime.
    #[error("regime error: {0}")]
    Regime(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// Time stepping lost norm conservation beyond the allowed drift.
    #[error("instability: {0}")]
    Instability(String),

    /// Malformed user input (scenario files, tables, grids).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SolverError>;
