use thiserror::Error;

pub type Result<T> = std::result::Result<T, GraspError>;

#[derive(Debug, Error)]
pub enum GraspError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("arclength {s} is outside the segment [0, {length}]")]
    OutOfRange { s: f64, length: f64 },

    #[error(
        "forward-backward sweep diverged after {iterations} iterations \
         (cost rose for {window} consecutive steps); reduce the step size eta={eta:e}"
    )]
    StepSize {
        eta: f64,
        iterations: usize,
        window: usize,
    },

    #[error(
        "inner solve did not converge for wrench angles (alpha={alpha:.6}, beta={beta:.6}): \
         residual {residual:e} after {iterations} iterations"
    )]
    InnerSolve {
        alpha: f64,
        beta: f64,
        residual: f64,
        iterations: usize,
    },
}

impl GraspError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        GraspError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
