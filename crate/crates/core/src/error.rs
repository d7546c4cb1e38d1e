use thiserror::Error;

use crate::inner::InnerResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected:?}, got {got:?}")]
    Dimension {
        context: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("ill-conditioned matrix: {0}")]
    Conditioning(String),

    #[error("retraction failed, (X+V)ᵀG(X+V) is not positive definite")]
    RankDeficient,

    #[error("point is infeasible: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Infeasible { residual: f64, tolerance: f64 },

    #[error("malformed instance text: {0}")]
    Parse(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Backtracking exhausted its halvings. Carries the iterate reached so far.
    #[error("line search stalled at inner iteration {iteration} after {halvings} halvings")]
    LineSearchStalled {
        iteration: usize,
        halvings: usize,
        partial: Box<InnerResult>,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn check_shape(
        context: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    ) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::Dimension {
                context,
                expected,
                got,
            })
        }
    }
}
