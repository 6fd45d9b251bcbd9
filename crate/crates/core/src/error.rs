use thiserror::Error;

use crate::kalman::KalmanError;
use crate::optimizer::OptimizerError;
use crate::privacy::PrivacyError;
use crate::problems::ProblemError;
use crate::spectral::SpectralError;
use crate::VectorError;

/// Any error the library can return.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Kalman(#[from] KalmanError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True when the error is an unreachable privacy target.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::Privacy(PrivacyError::Infeasible { .. })
                | Error::Optimizer(OptimizerError::Privacy(PrivacyError::Infeasible { .. }))
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
