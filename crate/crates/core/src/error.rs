use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}: only d = 1 and d = 2 grids exist")]
    UnsupportedDimension(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("operator is empty: every node is masked")]
    EmptyOperator,

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (residuals {residuals:?})")]
    EigenDiverged {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("power iteration stagnated after {iterations} iterations (last estimate {estimate:e})")]
    PowerStagnation { iterations: usize, estimate: f64 },

    #[error("scale factor {0} is not representable on a nested grid")]
    NonRepresentableScale(f64),

    #[error("sequence too short: {0} fields given, at least 3 required")]
    InsufficientSequence(usize),

    #[error("unknown functional `{0}`")]
    UnknownFunctional(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numerical failures as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::SolverDiverged { .. } | Error::EigenDiverged { .. } | Error::PowerStagnation { .. }
        )
    }
}
