use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Variants map onto the CLI exit-code classes: parse errors exit 2,
/// hypothesis refusals 3, budget/construction failures 4, certificate
/// failures 5.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("aliasing: max_mode {max_mode} exceeds n_theta/2 - 1 = {limit}")]
    Aliasing { max_mode: usize, limit: usize },

    #[error("resolution: {0}")]
    Resolution(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("construction failed, violated budget `{budget}` (slack {slack:.3e})")]
    Construction { budget: String, slack: f64 },

    #[error("certificate failure: {0}")]
    Certificate(String),

    #[error("inconsistent limit graph: formula and extrapolation differ by {0:.3e}")]
    Inconsistent(f64),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Parse(_) | LabError::Io(_) => 2,
            LabError::Hypothesis(_) => 3,
            LabError::Construction { .. } | LabError::Resolution(_) => 4,
            LabError::Certificate(_) | LabError::Inconsistent(_) => 5,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
