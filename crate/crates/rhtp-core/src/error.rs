use thiserror::Error;

/// Errors produced by the solver and analysis routines.
#[derive(Debug, Error)]
pub enum RhtpError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("rank-deficient submatrix: condition estimate {cond:.3e} exceeds {limit:.1e}")]
    Singular { cond: f64, limit: f64 },

    #[error("combinatorial budget exceeded: C({n}, {s}) > {budget}")]
    BudgetExceeded { n: usize, s: usize, budget: u64 },

    #[error("invalid regularizer: {0}")]
    InvalidRegularizer(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bound inapplicable: {0}")]
    Inapplicable(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed matrix file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, RhtpError>;
