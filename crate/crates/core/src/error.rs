use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("surface construction failed: {0}")]
    Construction(String),
    #[error("reduction did not terminate after {steps} steps (|z| = {modulus})")]
    IterationCap { steps: usize, modulus: f64 },
    #[error("degree error: {0}")]
    Degree(String),
    #[error("element is not hyperbolic (|trace| = {0})")]
    NotHyperbolic(f64),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),
    #[error("census has {rows} rows but the solenoidal subspace has dimension {dim}")]
    RankDeficientCensus { rows: usize, dim: usize },
    #[error("ill-conditioned system (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("variance budget exceeded: stderr {stderr:.3e} vs |value| {value:.3e}")]
    VarianceBudget { stderr: f64, value: f64 },
    #[error("λ-ladder extrapolation unstable: {0}")]
    ExtrapolationUnstable(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl LabError {
    /// Short machine-readable tag used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Construction(_) => "Construction",
            LabError::IterationCap { .. } => "IterationCap",
            LabError::Degree(_) => "DegreeError",
            LabError::NotHyperbolic(_) => "NotHyperbolic",
            LabError::BudgetExceeded(_) => "BudgetExceeded",
            LabError::QuadratureNotConverged(_) => "QuadratureNotConverged",
            LabError::RankDeficientCensus { .. } => "RankDeficientCensus",
            LabError::IllConditioned(_) => "IllConditioned",
            LabError::VarianceBudget { .. } => "VarianceBudget",
            LabError::ExtrapolationUnstable(_) => "ExtrapolationUnstable",
            LabError::Config(_) => "ConfigError",
            LabError::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
