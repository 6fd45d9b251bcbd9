//! Training loops for DP-SGD, DiSK and FFTKF.
//!
//! All three share one pipeline; the differences are switches on it:
//!
//! | method | spectral filter | Kalman filter |
//! |--------|-----------------|---------------|
//! | dpsgd  | no              | no            |
//! | disk   | no              | yes           |
//! | fftkf  | yes             | yes           |
//!
//! Randomness comes from independent [`Stream`](crate::rng::Stream)s, so with
//! the same seed every method sees the same mini-batches and the same
//! gradient-noise draws. That makes the reduction chain
//! `fftkf(identity mask) ≡ disk` and `disk(κ = 1) ≡ dpsgd` hold bit for bit.

mod base;
mod config;
mod run;
mod step;

use thiserror::Error;

pub use base::{BaseKind, BaseOptimizer};
pub use config::{KalmanParams, MaskParams, Method, MethodConfig, NoiseSpec, ResolvedPrivacy, Sampling};
pub use run::{replay_epsilon, run, run_with_filter, RunOutput, StepRecord};
pub(crate) use step::clipped_sum;
pub use step::{sample_batch, step_disk, step_dpsgd, step_fftkf, StepReport, StreamSet};

use crate::kalman::KalmanError;
use crate::privacy::PrivacyError;
use crate::problems::ProblemError;
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid method configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Kalman(#[from] KalmanError),
}
