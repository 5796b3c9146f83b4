use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A column whose sample variance is zero; `column` is 0-based.
    #[error("degenerate data: column {} has zero variance", column + 1)]
    ZeroVariance { column: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// Weiszfeld iteration hit its iteration cap.
    #[error(
        "spatial median did not converge after {iterations} iterations \
         (relative gradient norm {gradient_norm:e})"
    )]
    NoConvergence {
        iterations: usize,
        gradient_norm: f64,
        last_iterate: Vec<f64>,
    },
}

impl Error {
    /// True for failures caused by the data rather than by the caller.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::ZeroVariance { .. } | Error::Degenerate(_) | Error::NoConvergence { .. }
        )
    }
}
