use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Fock index {n} outside truncation range 0..={n_max}")]
    Range { n: usize, n_max: usize },

    #[error("truncation leakage {leakage:.3e} exceeds tolerance {tol:.3e}{}", required_hint(.required_n_max))]
    Truncation {
        leakage: f64,
        tol: f64,
        required_n_max: Option<usize>,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("integration error: {0}")]
    Integration(String),

    #[error("post-selection failed: {0}")]
    PostSelection(String),

    #[error("inference error: {0}")]
    Inference(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn required_hint(n: &Option<usize>) -> String {
    match n {
        Some(n) => format!("; n_max >= {n} required"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
