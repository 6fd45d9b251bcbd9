use std::fmt;
use std::str::FromStr;

use super::{BaseKind, OptimizerError};
use crate::privacy::{calibrate_sigma, fd_noise_std, gradient_noise_std, PrivacyParams};
use crate::spectral::{build_mask, SpectralFilter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    DpSgd,
    Disk,
    Fftkf,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::DpSgd => "dpsgd",
            Method::Disk => "disk",
            Method::Fftkf => "fftkf",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dpsgd" | "dp-sgd" => Ok(Method::DpSgd),
            "disk" => Ok(Method::Disk),
            "fftkf" => Ok(Method::Fftkf),
            other => Err(format!("unknown method '{other}' (expected dpsgd, disk or fftkf)")),
        }
    }
}

/// Spectral mask parameters. `rho = 0` selects the identity mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskParams {
    pub lambda: f64,
    pub rho: f64,
    pub alpha: f64,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            rho: 0.5,
            alpha: 0.0,
        }
    }
}

impl MaskParams {
    pub fn identity() -> Self {
        Self {
            rho: 0.0,
            ..Self::default()
        }
    }

    /// Filter for `dim`-dimensional vectors; the mask is built at the padded length.
    pub fn filter(&self, dim: usize) -> Result<SpectralFilter, OptimizerError> {
        if self.rho == 0.0 {
            return Ok(SpectralFilter::identity(dim));
        }
        let mask = build_mask(dim.next_power_of_two(), self.lambda, self.rho, self.alpha)?;
        Ok(SpectralFilter::new(dim, mask)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanParams {
    pub kappa: f64,
    pub gamma: f64,
}

impl Default for KalmanParams {
    fn default() -> Self {
        Self { kappa: 0.5, gamma: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    /// Noise multiplier `z = σ / sensitivity`, used as given.
    Multiplier(f64),
    /// Calibrate `z` so that the run ends at this epsilon.
    TargetEpsilon(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Each example joins the batch independently with probability `q = B/N`;
    /// sums are normalized by the expected size `B`.
    Poisson,
    /// Exactly `B` examples without replacement (no amplification guarantee).
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    pub base: BaseKind,
    pub learning_rate: f64,
    pub clip: f64,
    pub noise: NoiseSpec,
    pub delta: f64,
    /// Noise multiplier of the finite-difference release; defaults to the
    /// gradient multiplier.
    pub fd_multiplier: Option<f64>,
    /// Releases charged per step; defaults to 1 for dpsgd and 2 otherwise.
    pub releases_per_step: Option<u32>,
    pub filter: Option<MaskParams>,
    pub kalman: Option<KalmanParams>,
    pub steps: u64,
    pub batch_size: usize,
    pub sampling: Sampling,
    pub seed: u64,
    pub eval_interval: u64,
    pub record_wall_time: bool,
}

impl MethodConfig {
    /// Defaults: SGD at η = 0.1, C = 1, z = 1, δ = 1e-5, Poisson sampling,
    /// λ = ρ = 0.5 step mask and κ = 0.5, γ = 1 where the method needs them.
    pub fn new(method: Method, steps: u64, batch_size: usize, seed: u64) -> Self {
        let filter = (method == Method::Fftkf).then(MaskParams::default);
        let kalman = (method != Method::DpSgd).then(KalmanParams::default);
        Self {
            method,
            base: BaseKind::Sgd,
            learning_rate: 0.1,
            clip: 1.0,
            noise: NoiseSpec::Multiplier(1.0),
            delta: 1e-5,
            fd_multiplier: None,
            releases_per_step: None,
            filter,
            kalman,
            steps,
            batch_size,
            sampling: Sampling::Poisson,
            seed,
            eval_interval: 0,
            record_wall_time: false,
        }
    }

    pub fn releases(&self) -> u32 {
        self.releases_per_step.unwrap_or(match self.method {
            Method::DpSgd => 1,
            Method::Disk | Method::Fftkf => 2,
        })
    }

    pub fn validate(&self, num_examples: usize) -> Result<(), OptimizerError> {
        let err = |m: String| Err(OptimizerError::Config(m));
        match self.method {
            Method::DpSgd if self.filter.is_some() || self.kalman.is_some() => {
                return err("dpsgd takes neither [filter] nor [kalman] parameters".into())
            }
            Method::Disk if self.filter.is_some() => return err("disk takes no [filter] parameters".into()),
            Method::Disk if self.kalman.is_none() => return err("disk requires kappa and gamma".into()),
            Method::Fftkf if self.filter.is_none() || self.kalman.is_none() => {
                return err("fftkf requires lambda, rho, alpha, kappa and gamma".into())
            }
            _ => {}
        }
        if let Some(m) = &self.filter {
            if !(m.lambda > 0.0 && m.lambda < 1.0) {
                return err(format!("lambda = {} must lie in (0, 1)", m.lambda));
            }
            if !(m.rho >= 0.0 && m.rho < 1.0) {
                return err(format!("rho = {} must lie in [0, 1)", m.rho));
            }
            if !(m.alpha >= 0.0) {
                return err(format!("alpha = {} must be non-negative", m.alpha));
            }
        }
        if let Some(k) = &self.kalman {
            if !(k.kappa > 0.0 && k.kappa <= 1.0) {
                return err(format!("kappa = {} must lie in (0, 1]", k.kappa));
            }
            if !(k.gamma > 0.0) {
                return err(format!("gamma = {} must be positive", k.gamma));
            }
        }
        self.base.validate().map_err(OptimizerError::Config)?;
        if !(self.learning_rate > 0.0) {
            return err(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.batch_size == 0 || self.batch_size > num_examples {
            return err(format!("batch size {} must lie in 1..={num_examples}", self.batch_size));
        }
        if !matches!(self.releases_per_step, None | Some(1) | Some(2)) {
            return err("releases_per_step must be 1 or 2".into());
        }
        match self.noise {
            NoiseSpec::Multiplier(z) if !(z >= 0.0 && z.is_finite()) => {
                return err(format!("noise multiplier {z} must be finite and non-negative"))
            }
            NoiseSpec::TargetEpsilon(e) if !(e > 0.0) => return err(format!("target epsilon {e} must be positive")),
            _ => {}
        }
        if let Some(z) = self.fd_multiplier {
            if !(z >= 0.0 && z.is_finite()) {
                return err(format!("fd noise multiplier {z} must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// Turns the noise specification into absolute noise scales, calibrating
    /// when a target epsilon is given.
    pub fn resolve_privacy(&self, num_examples: usize) -> Result<ResolvedPrivacy, OptimizerError> {
        self.validate(num_examples)?;
        let q = self.batch_size as f64 / num_examples as f64;
        let releases = self.releases();
        let (z, target) = match self.noise {
            NoiseSpec::Multiplier(z) => (z, f64::INFINITY),
            NoiseSpec::TargetEpsilon(e) => (calibrate_sigma(e, self.delta, q, self.steps, releases)?, e),
        };
        let z_fd = self.fd_multiplier.unwrap_or(z);
        if z_fd < z && target.is_finite() {
            return Err(OptimizerError::Config(format!(
                "fd noise multiplier {z_fd} is below the calibrated multiplier {z}"
            )));
        }
        let b = self.batch_size as f64;
        let gamma = self.kalman.map_or(1.0, |k| k.gamma);
        let uses_fd = self.method != Method::DpSgd;
        let accounted = if uses_fd && releases == 2 { z.min(z_fd) } else { z };
        let params = PrivacyParams {
            clip: self.clip,
            sigma_w: gradient_noise_std(z, self.clip, b),
            sigma_fd: if uses_fd {
                fd_noise_std(z_fd, self.clip, b, gamma)
            } else {
                0.0
            },
            sampling_rate: q,
            target_epsilon: target,
            target_delta: self.delta,
        };
        params.validate()?;
        Ok(ResolvedPrivacy {
            params,
            noise_multiplier: z,
            fd_multiplier: z_fd,
            accounted_multiplier: accounted,
            releases_per_step: releases,
            batch_norm: b,
            batch_size: self.batch_size,
            sampling: self.sampling,
        })
    }
}

/// Noise scales and accounting inputs derived from a [`MethodConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedPrivacy {
    pub params: PrivacyParams,
    pub noise_multiplier: f64,
    pub fd_multiplier: f64,
    /// Multiplier charged by the accountant for each release.
    pub accounted_multiplier: f64,
    pub releases_per_step: u32,
    /// Divisor of the clipped-gradient sums (the expected batch size).
    pub batch_norm: f64,
    pub batch_size: usize,
    pub sampling: Sampling,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_field_requirements() {
        let mut c = MethodConfig::new(Method::DpSgd, 10, 5, 0);
        assert!(c.validate(100).is_ok());
        c.kalman = Some(KalmanParams::default());
        assert!(c.validate(100).is_err());

        let mut c = MethodConfig::new(Method::Fftkf, 10, 5, 0);
        assert!(c.validate(100).is_ok());
        c.filter = None;
        assert!(c.validate(100).is_err());

        let mut c = MethodConfig::new(Method::Disk, 10, 5, 0);
        assert!(c.validate(100).is_ok());
        c.filter = Some(MaskParams::default());
        assert!(c.validate(100).is_err());
    }

    #[test]
    fn noise_scales_follow_sensitivities() {
        let mut c = MethodConfig::new(Method::Fftkf, 10, 50, 0);
        c.clip = 2.0;
        c.noise = NoiseSpec::Multiplier(1.5);
        c.kalman = Some(KalmanParams { kappa: 0.5, gamma: 4.0 });
        let r = c.resolve_privacy(1000).unwrap();
        assert!((r.params.sigma_w - 1.5 * 2.0 / 50.0).abs() < 1e-15);
        assert!((r.params.sigma_fd - 1.5 * 4.0 / (50.0 * 4.0)).abs() < 1e-15);
        assert_eq!(r.releases_per_step, 2);
        assert!((r.params.sampling_rate - 0.05).abs() < 1e-15);
    }

    #[test]
    fn infeasible_target_surfaces_at_resolution() {
        let mut c = MethodConfig::new(Method::DpSgd, 100, 10, 0);
        c.noise = NoiseSpec::TargetEpsilon(0.05);
        assert!(matches!(
            c.resolve_privacy(1000),
            Err(OptimizerError::Privacy(crate::privacy::PrivacyError::Infeasible { .. }))
        ));
    }

    #[test]
    fn method_names_parse() {
        for m in [Method::DpSgd, Method::Disk, Method::Fftkf] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("adam".parse::<Method>().is_err());
    }
}
