//! Scalar-gain Kalman filter over gradient estimates.
//!
//! With `P_t = p_t I` and `K_t = κ I` the filter reduces to two vector
//! updates per step:
//!
//! ```text
//! prediction  g̃_{t|t-1} = g̃_{t-1} + (mean clip ∇f(x_t + γ d_{t-1}) - mean clip ∇f(x_t)) / γ + w_fd
//! correction  g̃_t       = (1 - κ) g̃_{t|t-1} + κ ĝ_t
//! ```
//!
//! The finite-difference term approximates the Hessian action `H_t d_{t-1}`
//! and is exact on quadratics. The gain is a fixed hyperparameter; no
//! Riccati recursion is run.

use thiserror::Error;

use crate::privacy::accumulate_clipped;
use crate::rng::StreamRng;
use crate::{ParamVector, VectorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KalmanError {
    #[error("gain kappa = {0} must lie in (0, 1]")]
    InvalidGain(f64),
    #[error("finite-difference parameter gamma = {0} must be positive")]
    InvalidGamma(f64),
    #[error("batch size mismatch: {at_x} gradients at x, {shifted} at the shifted point")]
    BatchMismatch { at_x: usize, shifted: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Vector(#[from] VectorError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    g_tilde: ParamVector,
    d_prev: ParamVector,
    kappa: f64,
    gamma: f64,
    initialized: bool,
}

impl KalmanState {
    /// Zero estimate and zero previous step. `κ = 1` is accepted as the
    /// degenerate filter that ignores its prediction.
    pub fn new(dim: usize, kappa: f64, gamma: f64) -> Result<Self, KalmanError> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(KalmanError::InvalidGain(kappa));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(KalmanError::InvalidGamma(gamma));
        }
        Ok(Self {
            g_tilde: ParamVector::zeros(dim),
            d_prev: ParamVector::zeros(dim),
            kappa,
            gamma,
            initialized: false,
        })
    }

    pub fn g_tilde(&self) -> &ParamVector {
        &self.g_tilde
    }

    pub fn d_prev(&self) -> &ParamVector {
        &self.d_prev
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn initialized(&self) -> bool {
        self.initialized
    }

    pub fn dim(&self) -> usize {
        self.g_tilde.dim()
    }

    /// The point `x + γ d_{t-1}` at which the shifted gradients are taken.
    pub fn shifted_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.d_prev.iter())
            .map(|(xi, di)| xi + self.gamma * di)
            .collect()
    }
}

/// Privatized finite-difference prediction from per-sample gradient lists
/// evaluated on the same mini-batch at `x_t` and at `x_t + γ d_{t-1}`.
pub fn predict(
    state: &KalmanState,
    grads_at_x: &[ParamVector],
    grads_at_shifted: &[ParamVector],
    clip: f64,
    sigma_fd: f64,
    rng: &mut StreamRng,
) -> Result<ParamVector, KalmanError> {
    if grads_at_x.len() != grads_at_shifted.len() {
        return Err(KalmanError::BatchMismatch {
            at_x: grads_at_x.len(),
            shifted: grads_at_shifted.len(),
        });
    }
    if grads_at_x.is_empty() {
        return Err(KalmanError::EmptyBatch);
    }
    let d = state.dim();
    let mut sum_x = vec![0.0; d];
    let mut sum_shifted = vec![0.0; d];
    for (gx, gs) in grads_at_x.iter().zip(grads_at_shifted) {
        gx.check_len(d)?;
        gs.check_len(d)?;
        accumulate_clipped(&mut sum_x, gx, clip);
        accumulate_clipped(&mut sum_shifted, gs, clip);
    }
    Ok(predict_from_sums(
        state,
        &sum_shifted,
        &sum_x,
        grads_at_x.len() as f64,
        sigma_fd,
        rng,
    ))
}

/// Prediction from already clipped-and-summed gradients, normalized by `batch`.
pub(crate) fn predict_from_sums(
    state: &KalmanState,
    sum_shifted: &[f64],
    sum_x: &[f64],
    batch: f64,
    sigma_fd: f64,
    rng: &mut StreamRng,
) -> ParamVector {
    let scale = 1.0 / (batch * state.gamma);
    let mut out: Vec<f64> = state
        .g_tilde
        .iter()
        .zip(sum_shifted.iter().zip(sum_x))
        .map(|(g, (s, x))| g + (s - x) * scale)
        .collect();
    rng.add_gaussian(&mut out, sigma_fd);
    ParamVector::from_vec_unchecked(out)
}

/// `(1 - κ) · prediction + κ · ĝ`.
pub fn correct(prediction: &ParamVector, g_hat: &ParamVector, kappa: f64) -> Result<ParamVector, KalmanError> {
    g_hat.check_len(prediction.dim())?;
    let out = prediction
        .iter()
        .zip(g_hat.iter())
        .map(|(p, g)| (1.0 - kappa) * p + kappa * g)
        .collect();
    Ok(ParamVector::from_vec_unchecked(out))
}

/// Replaces the estimate and the previous step.
pub fn advance(state: &KalmanState, new_g_tilde: ParamVector, new_step_d: ParamVector) -> KalmanState {
    debug_assert_eq!(new_g_tilde.dim(), state.dim());
    debug_assert_eq!(new_step_d.dim(), state.dim());
    KalmanState {
        g_tilde: new_g_tilde,
        d_prev: new_step_d,
        initialized: true,
        ..state.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn pv(v: Vec<f64>) -> ParamVector {
        ParamVector::new(v).unwrap()
    }

    fn rng() -> StreamRng {
        StreamRng::new(0, Stream::FdNoise)
    }

    #[test]
    fn starts_at_zero() {
        let s = KalmanState::new(3, 0.5, 1.0).unwrap();
        assert_eq!(s.g_tilde(), &ParamVector::zeros(3));
        assert_eq!(s.d_prev(), &ParamVector::zeros(3));
        assert!(!s.initialized());
        assert!(KalmanState::new(3, 0.0, 1.0).is_err());
        assert!(KalmanState::new(3, 1.5, 1.0).is_err());
        assert!(KalmanState::new(3, 0.5, 0.0).is_err());
    }

    #[test]
    fn zero_step_prediction_is_previous_estimate() {
        let s = advance(
            &KalmanState::new(2, 0.5, 0.7).unwrap(),
            pv(vec![0.3, -0.1]),
            ParamVector::zeros(2),
        );
        let grads = vec![pv(vec![1.0, 2.0]), pv(vec![-0.5, 0.25])];
        let p = predict(&s, &grads, &grads, 10.0, 0.0, &mut rng()).unwrap();
        assert_eq!(p, pv(vec![0.3, -0.1]));
    }

    #[test]
    fn unit_gamma_uses_mean_difference() {
        let s = advance(
            &KalmanState::new(2, 0.5, 1.0).unwrap(),
            pv(vec![1.0, 1.0]),
            pv(vec![0.1, 0.1]),
        );
        let at_x = vec![pv(vec![0.0, 1.0]), pv(vec![0.2, 0.0])];
        let shifted = vec![pv(vec![0.4, 1.0]), pv(vec![0.2, 0.6])];
        let p = predict(&s, &at_x, &shifted, f64::INFINITY, 0.0, &mut rng()).unwrap();
        assert!((p[0] - 1.2).abs() < 1e-15 && (p[1] - 1.3).abs() < 1e-15);
    }

    #[test]
    fn mismatched_batches_are_rejected() {
        let s = KalmanState::new(1, 0.5, 1.0).unwrap();
        let a = vec![pv(vec![1.0])];
        let b = vec![pv(vec![1.0]), pv(vec![2.0])];
        assert_eq!(
            predict(&s, &a, &b, 1.0, 0.0, &mut rng()),
            Err(KalmanError::BatchMismatch { at_x: 1, shifted: 2 })
        );
    }

    #[test]
    fn correction_examples() {
        let p = pv(vec![2.0, 0.0]);
        assert_eq!(correct(&p, &pv(vec![0.0, 2.0]), 0.5).unwrap(), pv(vec![1.0, 1.0]));
        for kappa in [0.1, 0.5, 0.9, 1.0] {
            assert_eq!(correct(&p, &p, kappa).unwrap(), p);
        }
    }

    #[test]
    fn repeated_correction_converges_geometrically() {
        let kappa = 0.3;
        let target = pv(vec![1.0, -2.0, 0.5]);
        let mut g = ParamVector::zeros(3);
        for _ in 0..50 {
            g = correct(&g, &target, kappa).unwrap();
        }
        let rate = (1.0f64 - kappa).powi(50);
        for (gi, ti) in g.iter().zip(target.iter()) {
            let closed_form = ti * (1.0 - rate);
            assert!((gi - closed_form).abs() < 1e-6);
        }
    }

    #[test]
    fn advance_is_last_writer_wins() {
        let s = KalmanState::new(1, 0.5, 1.0).unwrap();
        let a = advance(&s, pv(vec![1.0]), pv(vec![2.0]));
        assert_eq!(a.g_tilde(), &pv(vec![1.0]));
        assert_eq!(a.d_prev(), &pv(vec![2.0]));
        assert!(a.initialized());
        let ab = advance(&a, pv(vec![3.0]), pv(vec![4.0]));
        let ba = advance(&advance(&s, pv(vec![3.0]), pv(vec![4.0])), pv(vec![1.0]), pv(vec![2.0]));
        assert_ne!(ab, ba);
    }
}
