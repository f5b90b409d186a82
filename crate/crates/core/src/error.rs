use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    /// An input violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two computations that must agree did not; signals a sign or
    /// convention bug rather than bad input.
    #[error("consistency error in {what}: defect {defect:.3e} exceeds {tolerance:.1e}")]
    Consistency {
        what: String,
        defect: f64,
        tolerance: f64,
    },

    #[error("identity `{name}` violated: lhs = {lhs:.15e}, rhs = {rhs:.15e}")]
    IdentityViolation { name: String, lhs: f64, rhs: f64 },

    #[error("degenerate orbit basis: every generator was pruned ({pruned:?})")]
    DegenerateBasis { pruned: Vec<usize> },

    #[error("gram matrix condition number {condition:.3e} exceeds {limit:.1e}")]
    Conditioning { condition: f64, limit: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Domain(msg.into()))
}
