use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("{what} did not converge within {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("matrix is not Schur stable (spectral radius {0})")]
    NotStable(f64),
    #[error("range [{lo}, {hi}] needs {needed} integer bits but the {bits}-bit budget allows {available}")]
    BudgetExceeded {
        lo: f64,
        hi: f64,
        needed: u32,
        available: u32,
        bits: u32,
    },
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error("fixed-point overflow at node `{node}` (value {value})")]
    Overflow { node: String, value: i128 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("state space of {0} input combinations exceeds the enumeration limit")]
    StateSpaceTooLarge(u128),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
