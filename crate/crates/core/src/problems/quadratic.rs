use num_complex::Complex64;

use super::{check_dim, Problem, ProblemError};
use crate::rng::{Stream, StreamRng};
use crate::spectral::FftPlan;

/// Number of Householder reflections composing the seeded rotation.
const REFLECTIONS: usize = 4;

/// `F(x) = ½ (x - x*)ᵀ A (x - x*)` with `A = Q diag(λ) Qᵀ`.
///
/// Eigenvalues are spaced linearly on `[μ, L]`; `Q` is a product of seeded
/// Householder reflections, so `A v` costs `O(d)` without a dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSpec {
    pub dim: usize,
    pub mu: f64,
    pub smoothness: f64,
    /// Per-sample perturbation scale τ; each example adds `τ ζ_ξ` with `‖ζ_ξ‖ ≈ 1`.
    pub tau: f64,
    pub examples: usize,
    /// Per-coordinate standard deviation of the optimum `x*`.
    pub optimum_scale: f64,
    /// Fraction in `(0, 1]` of frequency magnitudes (up to Nyquist) that
    /// carry `x*`; below one the Gaussian draw is low-pass filtered and
    /// rescaled to keep its per-coordinate scale. One leaves `x*` white.
    pub optimum_bandwidth: f64,
    pub seed: u64,
}

impl Default for QuadraticSpec {
    fn default() -> Self {
        Self {
            dim: 512,
            mu: 0.1,
            smoothness: 1.0,
            tau: 0.0,
            examples: 1000,
            optimum_scale: 1.0,
            optimum_bandwidth: 1.0,
            seed: 0,
        }
    }
}

/// Zeroes the DFT bins of `v`, zero-padded to a power of two `n`, whose
/// frequency magnitude `min(k, n - k)` exceeds `bandwidth · n/2`.
fn band_limit(v: &mut [f64], bandwidth: f64) {
    let n = v.len().next_power_of_two();
    let plan = FftPlan::new(n).expect("power-of-two length");
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (b, &x) in buf.iter_mut().zip(v.iter()) {
        b.re = x;
    }
    plan.forward(&mut buf);
    let cutoff = bandwidth * (n / 2) as f64;
    for (k, b) in buf.iter_mut().enumerate() {
        if k.min(n - k) as f64 > cutoff {
            *b = Complex64::new(0.0, 0.0);
        }
    }
    plan.inverse(&mut buf);
    for (x, b) in v.iter_mut().zip(&buf) {
        *x = b.re;
    }
}

#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    spec: QuadraticSpec,
    eigenvalues: Vec<f64>,
    reflections: Vec<Vec<f64>>,
    optimum: Vec<f64>,
    // One draw per example pair, already scaled by 1/√d.
    perturbations: Vec<Vec<f64>>,
}

impl QuadraticProblem {
    pub fn new(spec: QuadraticSpec) -> Result<Self, ProblemError> {
        if spec.dim == 0 {
            return Err(ProblemError::InvalidSpec("quadratic dimension must be positive".into()));
        }
        if !(spec.mu > 0.0 && spec.mu <= spec.smoothness) {
            return Err(ProblemError::InvalidSpec(format!(
                "eigenvalue range requires 0 < mu <= L, got mu = {}, L = {}",
                spec.mu, spec.smoothness
            )));
        }
        if !(spec.optimum_bandwidth > 0.0 && spec.optimum_bandwidth <= 1.0) {
            return Err(ProblemError::InvalidSpec(format!(
                "optimum_bandwidth must lie in (0, 1], got {}",
                spec.optimum_bandwidth
            )));
        }
        if !(spec.tau >= 0.0) || spec.examples == 0 {
            return Err(ProblemError::InvalidSpec("tau must be >= 0 and examples > 0".into()));
        }
        let d = spec.dim;
        let eigenvalues = if d == 1 {
            vec![spec.smoothness]
        } else {
            (0..d)
                .map(|i| spec.mu + (spec.smoothness - spec.mu) * i as f64 / (d - 1) as f64)
                .collect()
        };
        let mut rng = StreamRng::new(spec.seed, Stream::Init);
        let reflections = if d == 1 {
            Vec::new()
        } else {
            (0..REFLECTIONS)
                .map(|_| {
                    let mut u = rng.gaussian_vec(d, 1.0);
                    let n = crate::norm(&u);
                    u.iter_mut().for_each(|v| *v /= n);
                    u
                })
                .collect()
        };
        let mut optimum = rng.gaussian_vec(d, spec.optimum_scale);
        if spec.optimum_bandwidth < 1.0 {
            band_limit(&mut optimum, spec.optimum_bandwidth);
            let rms = (optimum.iter().map(|v| v * v).sum::<f64>() / d as f64).sqrt();
            if rms > 0.0 {
                optimum.iter_mut().for_each(|v| *v *= spec.optimum_scale / rms);
            }
        }
        let perturbations = if spec.tau == 0.0 {
            Vec::new()
        } else {
            let scale = 1.0 / (d as f64).sqrt();
            (0..spec.examples / 2)
                .map(|pair| StreamRng::keyed(spec.seed, pair as u64).gaussian_vec(d, scale))
                .collect()
        };
        Ok(Self {
            spec,
            eigenvalues,
            reflections,
            optimum,
            perturbations,
        })
    }

    /// Identity Hessian variant, `A = I`.
    pub fn isotropic(mut spec: QuadraticSpec) -> Result<Self, ProblemError> {
        spec.mu = 1.0;
        spec.smoothness = 1.0;
        let mut p = Self::new(spec)?;
        p.reflections.clear();
        Ok(p)
    }

    pub fn spec(&self) -> &QuadraticSpec {
        &self.spec
    }

    pub fn optimum(&self) -> &[f64] {
        &self.optimum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mu(&self) -> f64 {
        self.spec.mu
    }

    fn reflect(u: &[f64], v: &mut [f64]) {
        let dot: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        for (vi, ui) in v.iter_mut().zip(u) {
            *vi -= 2.0 * dot * ui;
        }
    }

    /// `A v`.
    pub fn hessian_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut w = v.to_vec();
        // Qᵀ = H_k ⋯ H_1, applied right to left.
        for u in &self.reflections {
            Self::reflect(u, &mut w);
        }
        for (wi, l) in w.iter_mut().zip(&self.eigenvalues) {
            *wi *= l;
        }
        for u in self.reflections.iter().rev() {
            Self::reflect(u, &mut w);
        }
        w
    }

    /// `ζ_ξ`: examples `2j` and `2j + 1` share one draw with opposite signs,
    /// so the perturbations sum to zero over the dataset (an odd trailing
    /// example gets none).
    fn perturbation(&self, example: usize) -> Option<(f64, &[f64])> {
        let z = self.perturbations.get(example / 2)?;
        let sign = if example.is_multiple_of(2) { 1.0 } else { -1.0 };
        Some((sign, z))
    }

    fn offset(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.optimum).map(|(a, b)| a - b).collect()
    }
}

impl Problem for QuadraticProblem {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn num_examples(&self) -> usize {
        self.spec.examples
    }

    fn initial_point(&self) -> Vec<f64> {
        vec![0.0; self.spec.dim]
    }

    fn loss(&self, x: &[f64], example: usize) -> Result<f64, ProblemError> {
        check_dim(x, self.spec.dim)?;
        let r = self.offset(x);
        let ar = self.hessian_apply(&r);
        let mut f = 0.5 * r.iter().zip(&ar).map(|(a, b)| a * b).sum::<f64>();
        if let Some((sign, z)) = self.perturbation(example) {
            f += sign * self.spec.tau * z.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(f)
    }

    fn gradient(&self, x: &[f64], example: usize, out: &mut [f64]) -> Result<(), ProblemError> {
        check_dim(x, self.spec.dim)?;
        let g = self.hessian_apply(&self.offset(x));
        out.copy_from_slice(&g);
        if let Some((sign, z)) = self.perturbation(example) {
            crate::vector::axpy(sign * self.spec.tau, z, out);
        }
        Ok(())
    }

    fn exact_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.hessian_apply(&self.offset(x)))
    }

    fn exact_loss(&self, x: &[f64]) -> Option<f64> {
        let r = self.offset(x);
        let ar = self.hessian_apply(&r);
        Some(0.5 * r.iter().zip(&ar).map(|(a, b)| a * b).sum::<f64>())
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.spec.smoothness)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::gradcheck::directional_check;

    fn spec(d: usize, tau: f64) -> QuadraticSpec {
        QuadraticSpec {
            dim: d,
            tau,
            examples: 20,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn band_limited_optimum_has_no_high_frequencies() {
        let p = QuadraticProblem::new(QuadraticSpec {
            dim: 64,
            optimum_bandwidth: 0.25,
            ..spec(64, 0.0)
        })
        .unwrap();
        let x = crate::ParamVector::new(p.optimum().to_vec()).unwrap();
        let s = crate::spectral::dft_forward(&x).unwrap();
        for k in 0..64usize {
            if k.min(64 - k) > 8 {
                assert!(s[k].norm() < 1e-9, "bin {k}");
            }
        }
        let rms = (p.optimum().iter().map(|v| v * v).sum::<f64>() / 64.0).sqrt();
        assert!((rms - 1.0).abs() < 1e-12);
        assert!(QuadraticProblem::new(QuadraticSpec {
            optimum_bandwidth: 0.0,
            ..spec(8, 0.0)
        })
        .is_err());
    }

    #[test]
    fn zero_gradient_at_optimum() {
        let p = QuadraticProblem::new(spec(16, 0.0)).unwrap();
        let mut g = vec![1.0; 16];
        p.gradient(p.optimum(), 4, &mut g).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn identity_hessian_gradient() {
        let p = QuadraticProblem::isotropic(spec(8, 0.0)).unwrap();
        let x: Vec<f64> = (0..8).map(f64::from).collect();
        let mut g = vec![0.0; 8];
        p.gradient(&x, 0, &mut g).unwrap();
        for i in 0..8 {
            assert!((g[i] - (x[i] - p.optimum()[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn dataset_mean_recovers_exact_gradient() {
        let p = QuadraticProblem::new(spec(32, 0.7)).unwrap();
        let mut rng = StreamRng::new(1, Stream::Analysis);
        let x = rng.gaussian_vec(32, 1.0);
        let mut mean = vec![0.0; 32];
        let mut g = vec![0.0; 32];
        for i in 0..p.num_examples() {
            p.gradient(&x, i, &mut g).unwrap();
            crate::vector::axpy(1.0 / p.num_examples() as f64, &g, &mut mean);
        }
        let exact = p.exact_gradient(&x).unwrap();
        assert!(crate::vector::distance(&mean, &exact) < 1e-9);
    }

    #[test]
    fn hessian_is_symmetric_with_prescribed_spectrum() {
        let d = 12;
        let p = QuadraticProblem::new(spec(d, 0.0)).unwrap();
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                p.hessian_apply(&e)
            })
            .collect();
        let mut trace = 0.0;
        for (i, col) in cols.iter().enumerate() {
            trace += col[i];
            for (j, v) in col.iter().enumerate() {
                assert!((v - cols[j][i]).abs() < 1e-13);
            }
        }
        let expected: f64 = p.eigenvalues().iter().sum();
        assert!((trace - expected).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = QuadraticProblem::new(spec(24, 0.5)).unwrap();
        let x = StreamRng::new(2, Stream::Analysis).gaussian_vec(24, 1.0);
        let err = directional_check(&p, &x, &(0..20).collect::<Vec<_>>(), 1e-5, 4);
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn rejects_bad_spectrum() {
        assert!(QuadraticProblem::new(QuadraticSpec {
            mu: 2.0,
            ..spec(4, 0.0)
        })
        .is_err());
        assert!(QuadraticProblem::new(QuadraticSpec {
            mu: 0.0,
            ..spec(4, 0.0)
        })
        .is_err());
    }
}
