//! CLI error type with the stable exit-code contract:
//! 0 success, 2 parse, 3 validation, 4 fit non-convergence, 5 conditioning,
//! 6 equivalence breach. I/O failures exit 1.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    /// Input file malformed; carries the 1-based line number.
    Parse { line: usize, message: String },
    Validation(String),
    FitNonConvergence(String),
    Conditioning(String),
    EquivalenceBreach { max_abs_diff: f64, threshold: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse { .. } => 2,
            CliError::Validation(_) => 3,
            CliError::FitNonConvergence(_) => 4,
            CliError::Conditioning(_) => 5,
            CliError::EquivalenceBreach { .. } => 6,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::FitNonConvergence(m) => write!(f, "fit did not converge: {m}"),
            CliError::Conditioning(m) => write!(f, "conditioning error: {m}"),
            CliError::EquivalenceBreach { max_abs_diff, threshold } => write!(
                f,
                "equivalence breach: max discrepancy {max_abs_diff:e} exceeds {threshold:e}"
            ),
        }
    }
}

impl From<geodex::Error> for CliError {
    fn from(e: geodex::Error) -> Self {
        match e {
            geodex::Error::Validation(m) => CliError::Validation(m),
            geodex::Error::Conditioning(m) => CliError::Conditioning(m),
            geodex::Error::NonConvergence(m) => CliError::FitNonConvergence(m),
            geodex::Error::VariogramNonConvergence { loss, iterations, .. } => {
                CliError::FitNonConvergence(format!(
                    "variogram fit stopped after {iterations} iterations at loss {loss:e}"
                ))
            }
            geodex::Error::UndefinedStatistic(m) => CliError::Validation(m),
            geodex::Error::EmptyResult(m) => CliError::Validation(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
