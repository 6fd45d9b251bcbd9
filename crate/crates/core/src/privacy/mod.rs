//! Per-sample clipping, the Gaussian mechanism, spectral shaping of the
//! privacy noise, and a Rényi-DP accountant.
//!
//! Shaping is deterministic post-processing of an already privatized vector:
//! [`shape_noise`] only ever consumes the output of [`privatize_gradient`],
//! so the accountant's cost does not depend on the mask.

mod accountant;

use thiserror::Error;

pub use accountant::{
    account_step, calibrate_sigma, epsilon_at_delta, rdp_orders, rdp_per_release, rdp_subsampled_gaussian,
    AccountantState,
};

use crate::rng::StreamRng;
use crate::spectral::{apply_filter, SpectralError, SpectralMask};
use crate::{ParamVector, VectorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrivacyError {
    #[error("cannot privatize an empty batch")]
    EmptyBatch,
    #[error("invalid privacy parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error(
        "target epsilon {target} is unreachable for q = {q}, T = {steps} \
         (epsilon at the largest searched sigma {sigma_max} is {best})"
    )]
    Infeasible {
        target: f64,
        q: f64,
        steps: u64,
        sigma_max: f64,
        best: f64,
    },
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Clipping bound, noise scales and the privacy target of one training run.
///
/// `sigma_w` is the per-coordinate standard deviation added to the averaged
/// clipped gradient; `sigma_fd` is the one added to the finite-difference
/// prediction term. Both are absolute, in gradient units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    pub clip: f64,
    pub sigma_w: f64,
    pub sigma_fd: f64,
    pub sampling_rate: f64,
    pub target_epsilon: f64,
    pub target_delta: f64,
}

impl PrivacyParams {
    pub fn validate(&self) -> Result<(), PrivacyError> {
        let bad = |name, value, reason| Err(PrivacyError::InvalidParameter { name, value, reason });
        if !(self.clip > 0.0) {
            return bad("clip", self.clip, "must be positive");
        }
        if !(self.sigma_w >= 0.0 && self.sigma_w.is_finite()) {
            return bad("sigma_w", self.sigma_w, "must be finite and non-negative");
        }
        if !(self.sigma_fd >= 0.0 && self.sigma_fd.is_finite()) {
            return bad("sigma_fd", self.sigma_fd, "must be finite and non-negative");
        }
        if !(self.sampling_rate > 0.0 && self.sampling_rate <= 1.0) {
            return bad("sampling_rate", self.sampling_rate, "must lie in (0, 1]");
        }
        if !(self.target_epsilon > 0.0) {
            return bad("target_epsilon", self.target_epsilon, "must be positive");
        }
        if !(self.target_delta > 0.0 && self.target_delta < 1.0) {
            return bad("target_delta", self.target_delta, "must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Per-coordinate noise std for a noise multiplier `z` on the mean of `batch`
/// clipped gradients: the sum has L2 sensitivity `C`, so the mean gets `zC/B`.
pub fn gradient_noise_std(multiplier: f64, clip: f64, batch: f64) -> f64 {
    if multiplier == 0.0 {
        0.0
    } else {
        multiplier * clip / batch
    }
}

/// Noise std for the finite-difference term `(Σ clip(∇f(x+γd)) - Σ clip(∇f(x))) / (Bγ)`,
/// whose sensitivity is `2C / (Bγ)`.
pub fn fd_noise_std(multiplier: f64, clip: f64, batch: f64, gamma: f64) -> f64 {
    if multiplier == 0.0 {
        0.0
    } else {
        multiplier * 2.0 * clip / (batch * gamma)
    }
}

/// Scale factor `min(1, C / ‖v‖)`.
pub(crate) fn clip_factor(v: &[f64], clip: f64) -> f64 {
    let n = crate::norm(v);
    if n > clip {
        clip / n
    } else {
        1.0
    }
}

/// `v · min(1, C / ‖v‖₂)`. The zero vector maps to itself. The computed
/// norm of the result never exceeds `C`.
pub fn clip(v: &ParamVector, clip: f64) -> ParamVector {
    let mut s = clip_factor(v, clip);
    if s == 1.0 {
        return v.clone();
    }
    loop {
        let out: Vec<f64> = v.iter().map(|x| x * s).collect();
        if crate::norm(&out) <= clip {
            return ParamVector::from_vec_unchecked(out);
        }
        // Rounding in the norm can overshoot by a few ulps.
        s *= 1.0 - 2.0 * f64::EPSILON;
    }
}

/// Adds `clip(g, C)` into `sum`.
pub(crate) fn accumulate_clipped(sum: &mut [f64], g: &[f64], clip: f64) {
    let s = clip_factor(g, clip);
    crate::vector::axpy(s, g, sum);
}

/// Mean of the clipped per-sample gradients plus `N(0, σ_w² I)` noise.
///
/// Replacing one sample moves the pre-noise mean by at most `2C/B` (and
/// adding or removing one moves the sum by at most `C`).
pub fn privatize_gradient(
    per_sample_grads: &[ParamVector],
    clip: f64,
    sigma_w: f64,
    rng: &mut StreamRng,
) -> Result<ParamVector, PrivacyError> {
    let first = per_sample_grads.first().ok_or(PrivacyError::EmptyBatch)?;
    let d = first.dim();
    let mut sum = vec![0.0; d];
    for g in per_sample_grads {
        g.check_len(d)?;
        accumulate_clipped(&mut sum, g, clip);
    }
    let b = per_sample_grads.len() as f64;
    for s in sum.iter_mut() {
        *s /= b;
    }
    rng.add_gaussian(&mut sum, sigma_w);
    Ok(ParamVector::from_vec_unchecked(sum))
}

/// `F⁻¹(Φ ⊙ F(w))`, the spectrally shaped noise. Never expands the norm.
pub fn shape_noise(w: &ParamVector, mask: &SpectralMask) -> Result<ParamVector, PrivacyError> {
    Ok(apply_filter(w, mask)?)
}
