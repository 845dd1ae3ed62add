use thiserror::Error;

/// Errors shared across the toolkit.
///
/// The CLI maps [`Error::Validation`] to exit code 1 and [`Error::Budget`] to
/// exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{what} too large for exhaustive search: needs {needed} evaluations, budget is {budget}")]
    Budget { what: &'static str, needed: f64, budget: u64 },

    #[error("hypothesis unmet: {0}")]
    Hypothesis(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}

/// Fails with [`Error::Budget`] when `base^exp` exceeds `budget`.
pub(crate) fn check_budget(what: &'static str, base: usize, exp: usize, budget: u64) -> Result<()> {
    let needed = (base as f64).powi(exp as i32);
    if needed > budget as f64 {
        return Err(Error::Budget { what, needed, budget });
    }
    Ok(())
}
