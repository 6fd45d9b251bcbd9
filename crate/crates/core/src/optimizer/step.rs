use rayon::prelude::*;

use super::{BaseOptimizer, OptimizerError, ResolvedPrivacy, Sampling};
use crate::kalman::{advance, correct, predict_from_sums, KalmanState};
use crate::privacy::accumulate_clipped;
use crate::problems::{Problem, ProblemError};
use crate::rng::{Stream, StreamRng};
use crate::spectral::{fft_invocations, SpectralFilter};
use crate::ParamVector;

/// Per-sample gradients are summed in fixed-size chunks, then the chunk sums
/// in index order, so the result does not depend on the thread count.
const REDUCTION_CHUNK: usize = 16;

/// The three random streams one training run consumes.
#[derive(Debug, Clone)]
pub struct StreamSet {
    pub sampling: StreamRng,
    pub gradient_noise: StreamRng,
    pub fd_noise: StreamRng,
}

impl StreamSet {
    pub fn new(seed: u64) -> Self {
        Self {
            sampling: StreamRng::new(seed, Stream::Sampling),
            gradient_noise: StreamRng::new(seed, Stream::GradientNoise),
            fd_noise: StreamRng::new(seed, Stream::FdNoise),
        }
    }
}

/// Draws a mini-batch from `0..n`. Both modes consume exactly `n` uniforms,
/// and the returned indices are increasing.
pub fn sample_batch(n: usize, batch_size: usize, sampling: Sampling, rng: &mut StreamRng) -> Vec<usize> {
    match sampling {
        Sampling::Poisson => {
            let q = batch_size as f64 / n as f64;
            (0..n).filter(|_| rng.uniform() < q).collect()
        }
        Sampling::Fixed => {
            let mut out = Vec::with_capacity(batch_size);
            for i in 0..n {
                let needed = batch_size - out.len();
                let u = rng.uniform();
                if needed > 0 && (u * (n - i) as f64) < needed as f64 {
                    out.push(i);
                }
            }
            out
        }
    }
}

/// `Σ_{i ∈ batch} clip(∇f_i(x), C)`.
pub(crate) fn clipped_sum(
    problem: &dyn Problem,
    x: &[f64],
    batch: &[usize],
    clip: f64,
) -> Result<Vec<f64>, ProblemError> {
    let d = problem.dim();
    let partials: Vec<Vec<f64>> = batch
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            let mut sum = vec![0.0; d];
            let mut g = vec![0.0; d];
            for &i in chunk {
                problem.gradient(x, i, &mut g)?;
                accumulate_clipped(&mut sum, &g, clip);
            }
            Ok(sum)
        })
        .collect::<Result<_, ProblemError>>()?;
    let mut total = vec![0.0; d];
    for p in &partials {
        crate::vector::axpy(1.0, p, &mut total);
    }
    Ok(total)
}

/// What one step computed, for logging and instrumentation.
#[derive(Debug, Clone)]
pub struct StepReport {
    /// Realized mini-batch size.
    pub batch_len: usize,
    /// Privatized gradient `g_t` before any filtering.
    pub g_raw: Vec<f64>,
    /// Direction handed to the base optimizer.
    pub g_tilde: Vec<f64>,
    /// Batch gradient evaluations (one per evaluation point).
    pub gradient_passes: u32,
    /// FFT invocations made during the step.
    pub ffts: u64,
}

fn privatized(sum: &[f64], privacy: &ResolvedPrivacy, rng: &mut StreamRng) -> Vec<f64> {
    let mut g: Vec<f64> = sum.iter().map(|s| s / privacy.batch_norm).collect();
    rng.add_gaussian(&mut g, privacy.params.sigma_w);
    g
}

fn draw_batch(problem: &dyn Problem, privacy: &ResolvedPrivacy, streams: &mut StreamSet) -> Vec<usize> {
    sample_batch(
        problem.num_examples(),
        privacy.batch_size,
        privacy.sampling,
        &mut streams.sampling,
    )
}

/// One DP-SGD step: `x ← Opt(x, mean clip ∇f + w)`.
pub fn step_dpsgd(
    problem: &dyn Problem,
    x: &mut [f64],
    opt: &mut BaseOptimizer,
    privacy: &ResolvedPrivacy,
    streams: &mut StreamSet,
) -> Result<StepReport, OptimizerError> {
    let ffts_before = fft_invocations();
    let batch = draw_batch(problem, privacy, streams);
    let sum = clipped_sum(problem, x, &batch, privacy.params.clip)?;
    let g = privatized(&sum, privacy, &mut streams.gradient_noise);
    opt.step(x, &g);
    Ok(StepReport {
        batch_len: batch.len(),
        g_tilde: g.clone(),
        g_raw: g,
        gradient_passes: 1,
        ffts: fft_invocations() - ffts_before,
    })
}

/// One FFTKF step: privatize, filter, predict from the finite difference on
/// the same batch, correct, update, and record the step taken.
pub fn step_fftkf(
    problem: &dyn Problem,
    x: &mut [f64],
    opt: &mut BaseOptimizer,
    state: &mut KalmanState,
    filter: &SpectralFilter,
    privacy: &ResolvedPrivacy,
    streams: &mut StreamSet,
) -> Result<StepReport, OptimizerError> {
    if filter.dim() != x.len() || state.dim() != x.len() {
        return Err(OptimizerError::Config(format!(
            "dimension mismatch: x has {}, filter {}, state {}",
            x.len(),
            filter.dim(),
            state.dim()
        )));
    }
    let ffts_before = fft_invocations();
    let batch = draw_batch(problem, privacy, streams);
    let clip = privacy.params.clip;
    let sum_x = clipped_sum(problem, x, &batch, clip)?;
    let g = privatized(&sum_x, privacy, &mut streams.gradient_noise);
    let g_hat = ParamVector::from_vec_unchecked(filter.apply(&g)?);

    let shifted = state.shifted_point(x);
    let sum_shifted = clipped_sum(problem, &shifted, &batch, clip)?;
    let prediction = predict_from_sums(
        state,
        &sum_shifted,
        &sum_x,
        privacy.batch_norm,
        privacy.params.sigma_fd,
        &mut streams.fd_noise,
    );
    let g_tilde = correct(&prediction, &g_hat, state.kappa())?;

    let x_prev = x.to_vec();
    opt.step(x, &g_tilde);
    let step: Vec<f64> = x.iter().zip(&x_prev).map(|(a, b)| a - b).collect();
    let report_g_tilde = g_tilde.as_slice().to_vec();
    *state = advance(state, g_tilde, ParamVector::from_vec_unchecked(step));
    Ok(StepReport {
        batch_len: batch.len(),
        g_raw: g,
        g_tilde: report_g_tilde,
        gradient_passes: 2,
        ffts: fft_invocations() - ffts_before,
    })
}

/// One DiSK step: [`step_fftkf`] with the identity mask.
pub fn step_disk(
    problem: &dyn Problem,
    x: &mut [f64],
    opt: &mut BaseOptimizer,
    state: &mut KalmanState,
    privacy: &ResolvedPrivacy,
    streams: &mut StreamSet,
) -> Result<StepReport, OptimizerError> {
    let filter = SpectralFilter::identity(x.len());
    step_fftkf(problem, x, opt, state, &filter, privacy, streams)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{BaseKind, Method, MethodConfig, NoiseSpec};
    use crate::problems::{QuadraticProblem, QuadraticSpec};

    fn quadratic(dim: usize) -> QuadraticProblem {
        QuadraticProblem::new(QuadraticSpec {
            dim,
            examples: 200,
            tau: 0.5,
            ..QuadraticSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn poisson_batches_have_expected_size() {
        let mut rng = StreamRng::new(1, Stream::Sampling);
        let total: usize = (0..200)
            .map(|_| sample_batch(1000, 50, Sampling::Poisson, &mut rng).len())
            .sum();
        let mean = total as f64 / 200.0;
        assert!((mean - 50.0).abs() < 2.0, "{mean}");
    }

    #[test]
    fn fixed_batches_are_exact_and_sorted() {
        let mut rng = StreamRng::new(2, Stream::Sampling);
        for _ in 0..50 {
            let b = sample_batch(97, 13, Sampling::Fixed, &mut rng);
            assert_eq!(b.len(), 13);
            assert!(b.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn chunked_sum_matches_sequential() {
        let p = quadratic(16);
        let x = StreamRng::new(3, Stream::Init).gaussian_vec(16, 1.0);
        let batch: Vec<usize> = (0..100).collect();
        let fast = clipped_sum(&p, &x, &batch, 0.7).unwrap();
        let mut slow = vec![0.0; 16];
        let mut g = vec![0.0; 16];
        for &i in &batch {
            p.gradient(&x, i, &mut g).unwrap();
            accumulate_clipped(&mut slow, &g, 0.7);
        }
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fftkf_step_costs_two_ffts_and_two_passes() {
        let p = quadratic(20);
        let cfg = MethodConfig::new(Method::Fftkf, 5, 20, 0);
        let privacy = cfg.resolve_privacy(p.num_examples()).unwrap();
        let filter = cfg.filter.unwrap().filter(20).unwrap();
        let k = cfg.kalman.unwrap();
        let mut state = KalmanState::new(20, k.kappa, k.gamma).unwrap();
        let mut opt = BaseOptimizer::new(BaseKind::Sgd, 0.1, 20);
        let mut streams = StreamSet::new(0);
        let mut x = vec![0.0; 20];
        for _ in 0..3 {
            let r = step_fftkf(&p, &mut x, &mut opt, &mut state, &filter, &privacy, &mut streams).unwrap();
            assert_eq!(r.ffts, 2);
            assert_eq!(r.gradient_passes, 2);
        }
        let r = step_disk(&p, &mut x, &mut opt, &mut state, &privacy, &mut streams).unwrap();
        assert_eq!(r.ffts, 0);
    }

    #[test]
    fn noiseless_dpsgd_contracts_isotropic_quadratic() {
        let p = QuadraticProblem::isotropic(QuadraticSpec {
            dim: 8,
            examples: 10,
            optimum_scale: 0.0,
            ..QuadraticSpec::default()
        })
        .unwrap();
        let mut cfg = MethodConfig::new(Method::DpSgd, 1, 10, 0);
        cfg.clip = f64::INFINITY;
        cfg.noise = NoiseSpec::Multiplier(0.0);
        cfg.sampling = Sampling::Fixed;
        let privacy = cfg.resolve_privacy(10).unwrap();
        let mut opt = BaseOptimizer::new(BaseKind::Sgd, 0.1, 8);
        let mut streams = StreamSet::new(0);
        let mut x = vec![1.0; 8];
        for t in 1..=5 {
            step_dpsgd(&p, &mut x, &mut opt, &privacy, &mut streams).unwrap();
            for v in &x {
                assert!((v - 0.9f64.powi(t)).abs() < 1e-12);
            }
        }
    }
}
