//! Closed-form and Monte-Carlo statistics of spectral noise shaping.
//!
//! For the step mask, `A = F⁻¹ Φ F` has eigenvalues `1` (multiplicity `k0`)
//! and `1 - ρ` (multiplicity `d - k0`). Shaping isotropic noise of variance
//! `σ_w²` therefore leaves total variance `ρ* d σ_w²` with
//! `ρ* = (k0 + (1 - ρ)² (d - k0)) / d`, and scales the signal by at most
//! `‖A - I‖₂ = ρ`.

use crate::problems::{Problem, ProblemError};
use crate::rng::StreamRng;
use crate::spectral::{build_mask, FftPlan, SpectralError, SpectralFilter, SpectralMask};
use num_complex::Complex64;

/// `(k0 + (1 - ρ)² (d - k0)) / d` with `k0 = ⌊λd⌋`. `ρ = 0` gives 1.
pub fn rho_star(lambda: f64, rho: f64, d: usize) -> f64 {
    let k0 = (lambda * d as f64).floor();
    let a = (1.0 - rho) * (1.0 - rho);
    (k0 + a * (d as f64 - k0)) / d as f64
}

/// The large-`d` limit `λ + (1 - λ)(1 - ρ)²`.
pub fn rho_star_limit(lambda: f64, rho: f64) -> f64 {
    lambda + (1.0 - lambda) * (1.0 - rho) * (1.0 - rho)
}

/// `(noise reduction, bias inflation)` in percent: `100 (1 - ρ*)` and `100 ρ²`.
pub fn noise_reduction_report(lambda: f64, rho: f64) -> (f64, f64) {
    ((1.0 - rho_star_limit(lambda, rho)) * 100.0, rho * rho * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Report {
    pub d: usize,
    pub lambda: f64,
    pub rho: f64,
    pub sigma_w: f64,
    pub n_samples: usize,
    pub rho_star_analytic: f64,
    /// Mean squared norm of the shaped noise.
    pub trace_mc: f64,
    /// `ρ* d σ_w²`.
    pub trace_analytic: f64,
    /// Power-iteration estimate of `‖A - I‖₂`.
    pub bias_norm_mc: f64,
    /// Norm of the empirical mean of the shaped noise.
    pub mean_norm: f64,
}

impl Lemma1Report {
    pub fn trace_relative_deviation(&self) -> f64 {
        (self.trace_mc - self.trace_analytic).abs() / self.trace_analytic
    }

    /// `4 σ_w √(d / n)`, the zero-mean acceptance bound.
    pub fn mean_norm_bound(&self) -> f64 {
        4.0 * self.sigma_w * (self.d as f64 / self.n_samples as f64).sqrt()
    }
}

/// Monte-Carlo check of the trace and bias of the step mask `(λ, ρ)` at
/// length `d`. `ρ = 0` checks the identity mask.
pub fn verify_lemma1(
    d: usize,
    lambda: f64,
    rho: f64,
    sigma_w: f64,
    n_samples: usize,
    rng: &mut StreamRng,
) -> Result<Lemma1Report, SpectralError> {
    let mask = if rho == 0.0 {
        SpectralMask::identity(d)
    } else {
        build_mask(d, lambda, rho, 0.0)?
    };
    let filter = SpectralFilter::new(d, mask)?;
    let (trace_mc, mean_norm) = shaped_noise_moments(&filter, sigma_w, n_samples, rng)?;
    let bias_norm_mc = bias_operator_norm(&filter, rng)?;
    let rs = rho_star(lambda, rho, d);
    Ok(Lemma1Report {
        d,
        lambda,
        rho,
        sigma_w,
        n_samples,
        rho_star_analytic: rs,
        trace_mc,
        trace_analytic: rs * d as f64 * sigma_w * sigma_w,
        bias_norm_mc,
        mean_norm,
    })
}

/// Mean squared norm and mean-vector norm of `n` shaped `N(0, σ² I)` draws.
pub fn shaped_noise_moments(
    filter: &SpectralFilter,
    sigma_w: f64,
    n: usize,
    rng: &mut StreamRng,
) -> Result<(f64, f64), SpectralError> {
    let d = filter.dim();
    let mut sq = 0.0;
    let mut mean = vec![0.0; d];
    for _ in 0..n {
        let w = rng.gaussian_vec(d, sigma_w);
        let s = filter.apply(&w)?;
        sq += s.iter().map(|v| v * v).sum::<f64>();
        crate::vector::axpy(1.0, &s, &mut mean);
    }
    let n = n as f64;
    let mean_norm = crate::norm(&mean) / n;
    Ok((sq / n, mean_norm))
}

const POWER_ITERATIONS: usize = 30;
const POWER_TOLERANCE: f64 = 1e-8;

/// `‖A - I‖₂` by power iteration on `v ↦ filter(v) - v`.
pub fn bias_operator_norm(filter: &SpectralFilter, rng: &mut StreamRng) -> Result<f64, SpectralError> {
    let d = filter.dim();
    let mut v = rng.gaussian_vec(d, 1.0);
    let n = crate::norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let mut bv = filter.apply(&v)?;
        for (b, x) in bv.iter_mut().zip(&v) {
            *b -= x;
        }
        let next = crate::norm(&bv);
        if next == 0.0 {
            return Ok(0.0);
        }
        let converged = (next - estimate).abs() <= POWER_TOLERANCE * next;
        estimate = next;
        v = bv.into_iter().map(|x| x / next).collect();
        if converged {
            break;
        }
    }
    Ok(estimate)
}

/// Per-bin `E|F(shaped w)_k|²` over `n` draws of `w ~ N(0, σ² I_d)`; the
/// analytic value is `σ² d φ_k²`. `d` must equal the mask length.
pub fn spectral_bin_variances(
    mask: &SpectralMask,
    sigma_w: f64,
    n: usize,
    rng: &mut StreamRng,
) -> Result<Vec<f64>, SpectralError> {
    let d = mask.len();
    let filter = SpectralFilter::new(d, mask.clone())?;
    let plan = FftPlan::new(d)?;
    let mut acc = vec![0.0; d];
    let mut buf = vec![Complex64::new(0.0, 0.0); d];
    for _ in 0..n {
        let w = rng.gaussian_vec(d, sigma_w);
        let s = filter.apply(&w)?;
        for (b, v) in buf.iter_mut().zip(&s) {
            *b = Complex64::new(*v, 0.0);
        }
        plan.forward(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    Ok(acc.into_iter().map(|a| a / n as f64).collect())
}

/// Constants of the FFTKF convergence bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem2Constants {
    pub eta: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub smoothness: f64,
    pub beta: f64,
    /// `(1 + κ - 2ηL) - 4(β + η²L)(1 - κ)² L² η (2 + |1 + γ|)`.
    pub c1: f64,
    /// `2(β + η²L)κ² / (C₁η)`; `None` when the report is invalid.
    pub noise_coefficient: Option<f64>,
    /// Inputs in range and `C₁ > 0`.
    pub valid: bool,
}

impl Theorem2Constants {
    /// `2 + |1 + γ|`.
    pub fn gamma_factor(&self) -> f64 {
        2.0 + (1.0 + self.gamma).abs()
    }

    /// `(2 + |1 + γ|) ρ* d σ_w²`, the privacy-noise term of the bound.
    pub fn dp_term_multiplier(&self, rho_star: f64, d: usize, sigma_w: f64) -> f64 {
        self.gamma_factor() * rho_star * d as f64 * sigma_w * sigma_w
    }

    /// `ρ²`, the weight of the mask bias on the averaged squared gradient.
    pub fn bias_coefficient(rho: f64) -> f64 {
        rho * rho
    }
}

/// Evaluates the bound's constants. The smoothness `L` and the constant `β`
/// are caller-supplied; an out-of-range input or `C₁ ≤ 0` yields a report
/// flagged invalid.
pub fn theorem2_constants(eta: f64, kappa: f64, gamma: f64, smoothness: f64, beta: f64) -> Theorem2Constants {
    let l = smoothness;
    let gamma_factor = 2.0 + (1.0 + gamma).abs();
    let c1 = (1.0 + kappa - 2.0 * eta * l)
        - 4.0 * (beta + eta * eta * l) * (1.0 - kappa) * (1.0 - kappa) * l * l * eta * gamma_factor;
    let inputs_ok = eta > 0.0 && kappa > 0.0 && gamma > 0.0 && l > 0.0 && beta >= 0.0;
    let valid = inputs_ok && c1 > 0.0 && c1.is_finite();
    let noise_coefficient = valid.then(|| 2.0 * (beta + eta * eta * l) * kappa * kappa / (c1 * eta));
    Theorem2Constants {
        eta,
        kappa,
        gamma,
        smoothness,
        beta,
        c1,
        noise_coefficient,
        valid,
    }
}

/// Per-coordinate variance of the per-sample gradients at `x` over `examples`.
pub fn gradient_variance(problem: &dyn Problem, x: &[f64], examples: &[usize]) -> Result<Vec<f64>, ProblemError> {
    let d = problem.dim();
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    let mut g = vec![0.0; d];
    for (k, &i) in examples.iter().enumerate() {
        problem.gradient(x, i, &mut g)?;
        let n = (k + 1) as f64;
        for j in 0..d {
            let delta = g[j] - mean[j];
            mean[j] += delta / n;
            m2[j] += delta * (g[j] - mean[j]);
        }
    }
    let denom = examples.len().saturating_sub(1).max(1) as f64;
    Ok(m2.into_iter().map(|v| v / denom).collect())
}

/// Largest relative error between `⟨∇f_i, u⟩` and the central difference
/// `(f_i(x + hu) - f_i(x - hu)) / 2h` over one random unit direction `u` per
/// listed example.
pub fn gradient_check(
    problem: &dyn Problem,
    x: &[f64],
    examples: &[usize],
    h: f64,
    seed: u64,
) -> Result<f64, ProblemError> {
    let d = problem.dim();
    let mut rng = StreamRng::new(seed, crate::rng::Stream::Analysis);
    let mut worst: f64 = 0.0;
    let mut g = vec![0.0; d];
    for &i in examples {
        let mut u = rng.gaussian_vec(d, 1.0);
        let n = crate::norm(&u);
        u.iter_mut().for_each(|v| *v /= n);
        problem.gradient(x, i, &mut g)?;
        let analytic: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
        let plus: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a - h * b).collect();
        let numeric = (problem.loss(&plus, i)? - problem.loss(&minus, i)?) / (2.0 * h);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}
