use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph parameters: {0}")]
    InvalidGraph(String),

    #[error("graph is not connected after {retries} attempts")]
    Disconnected { retries: usize },

    #[error("mixing matrix rejected: {0}")]
    InvalidMixing(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },

    #[error("non-finite gradient at agent {agent}")]
    NonFiniteGradient { agent: usize },

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("invalid problem: {0}")]
    Problem(String),

    #[error("invalid algorithm configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite iterate at iteration {iter}")]
    NonFinite { iter: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_check(what: &str, expected: (usize, usize), got: (usize, usize)) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension {
            expected: format!("{what} {}x{}", expected.0, expected.1),
            got: format!("{}x{}", got.0, got.1),
        });
    }
    Ok(())
}
