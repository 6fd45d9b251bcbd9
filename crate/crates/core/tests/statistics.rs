//! Monte-Carlo and trajectory-level statistics of the shaping and filtering pipeline.

use fftkf::analysis::{rho_star, shaped_noise_moments, spectral_bin_variances, verify_lemma1};
use fftkf::kalman::{advance, predict, KalmanState};
use fftkf::optimizer::{
    step_disk, step_dpsgd, BaseKind, BaseOptimizer, KalmanParams, Method, MethodConfig, NoiseSpec, Sampling, StreamSet,
};
use fftkf::problems::{Problem, QuadraticProblem, QuadraticSpec};
use fftkf::rng::{Stream, StreamRng};
use fftkf::spectral::{build_mask, SpectralFilter};
use fftkf::{norm, ParamVector};

fn quadratic(dim: usize, tau: f64, mu: f64) -> QuadraticProblem {
    QuadraticProblem::new(QuadraticSpec {
        dim,
        mu,
        tau,
        examples: 200,
        ..QuadraticSpec::default()
    })
    .unwrap()
}

#[test]
fn trace_error_shrinks_like_inverse_sqrt_n() {
    let d = 64;
    let filter = SpectralFilter::new(d, build_mask(d, 0.5, 0.5, 0.0).unwrap()).unwrap();
    let analytic = rho_star(0.5, 0.5, d) * d as f64;
    let mut rng = StreamRng::new(11, Stream::Analysis);
    let replicates = 40;
    let rms: Vec<f64> = [10_000, 40_000, 160_000]
        .iter()
        .map(|&n| {
            let sq: f64 = (0..replicates)
                .map(|_| {
                    let (trace, _) = shaped_noise_moments(&filter, 1.0, n, &mut rng).unwrap();
                    (trace - analytic).powi(2)
                })
                .sum();
            (sq / replicates as f64).sqrt()
        })
        .collect();
    for w in rms.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.35..0.7).contains(&ratio), "deviations {rms:?}");
    }
}

#[test]
fn shaped_noise_is_zero_mean_with_reference_trace() {
    let mut rng = StreamRng::new(12, Stream::Analysis);
    let r = verify_lemma1(256, 0.5, 0.5, 2.0, 20_000, &mut rng).unwrap();
    assert!(r.mean_norm < r.mean_norm_bound(), "{r:?}");
    assert!(r.trace_relative_deviation() < 0.02, "{r:?}");
    assert!((r.bias_norm_mc - 0.5).abs() < 1e-6);
}

#[test]
fn spectral_covariance_is_diagonal_in_squared_mask() {
    let d = 32;
    let sigma = 1.5;
    let mask = build_mask(d, 0.25, 0.6, 0.3).unwrap();
    let mut rng = StreamRng::new(13, Stream::Analysis);
    let v = spectral_bin_variances(&mask, sigma, 40_000, &mut rng).unwrap();
    for (k, (&got, &phi)) in v.iter().zip(mask.phi()).enumerate() {
        let want = sigma * sigma * d as f64 * phi * phi;
        assert!((got - want).abs() < 0.05 * want, "bin {k}: {got} vs {want}");
    }
}

#[test]
fn kalman_filtering_lowers_gradient_variance_across_seeds() {
    let d = 32;
    let p = quadratic(d, 0.5, 0.1);
    let mut cfg = MethodConfig::new(Method::Disk, 50, 20, 0);
    cfg.noise = NoiseSpec::Multiplier(1.0);
    cfg.clip = 2.0;
    cfg.learning_rate = 0.1;
    // σ_fd ∝ 1/γ; at γ = 1 the finite-difference release is noisier than g_t.
    cfg.kalman = Some(KalmanParams {
        kappa: 0.5,
        gamma: 10.0,
    });
    let privacy = cfg.resolve_privacy(p.num_examples()).unwrap();

    let (mut raw, mut filtered) = (Vec::new(), Vec::new());
    for seed in 0..100 {
        let mut x = p.initial_point();
        let mut opt = BaseOptimizer::new(BaseKind::Sgd, cfg.learning_rate, d);
        let mut state = KalmanState::new(d, 0.5, 10.0).unwrap();
        let mut streams = StreamSet::new(seed);
        let mut last = None;
        for _ in 0..50 {
            last = Some(step_disk(&p, &mut x, &mut opt, &mut state, &privacy, &mut streams).unwrap());
        }
        let r = last.unwrap();
        raw.push(r.g_raw);
        filtered.push(r.g_tilde);
    }
    let total_variance = |samples: &[Vec<f64>]| -> f64 {
        let n = samples.len() as f64;
        (0..d)
            .map(|j| {
                let m = samples.iter().map(|s| s[j]).sum::<f64>() / n;
                samples.iter().map(|s| (s[j] - m).powi(2)).sum::<f64>() / (n - 1.0)
            })
            .sum()
    };
    let (vr, vf) = (total_variance(&raw), total_variance(&filtered));
    assert!(vf < vr, "filtered {vf} vs raw {vr}");
}

#[test]
fn noiseless_prediction_is_exact_on_quadratics() {
    let d = 16;
    let p = quadratic(d, 0.4, 0.2);
    let batch: Vec<usize> = (0..p.num_examples()).collect();
    let per_sample = |x: &[f64]| -> Vec<ParamVector> {
        batch
            .iter()
            .map(|&i| {
                let mut g = vec![0.0; d];
                p.gradient(x, i, &mut g).unwrap();
                ParamVector::new(g).unwrap()
            })
            .collect()
    };
    let mut rng = StreamRng::new(14, Stream::Analysis);
    let x_prev = rng.gaussian_vec(d, 1.0);
    let x = rng.gaussian_vec(d, 1.0);
    let step: Vec<f64> = x.iter().zip(&x_prev).map(|(a, b)| a - b).collect();
    let mean_prev = {
        let g = per_sample(&x_prev);
        (0..d)
            .map(|j| g.iter().map(|v| v[j]).sum::<f64>() / g.len() as f64)
            .collect::<Vec<_>>()
    };

    for gamma in [0.5, 1.0, 3.0] {
        let state = KalmanState::new(d, 0.5, gamma).unwrap();
        let state = advance(
            &state,
            ParamVector::new(mean_prev.clone()).unwrap(),
            ParamVector::new(step.clone()).unwrap(),
        );
        let shifted = state.shifted_point(&x);
        let pred = predict(&state, &per_sample(&x), &per_sample(&shifted), 1e12, 0.0, &mut rng).unwrap();
        let exact = p.exact_gradient(&x).unwrap();
        let err: Vec<f64> = pred.iter().zip(&exact).map(|(a, b)| a - b).collect();
        assert!(
            norm(&err) < 1e-9 * norm(&exact).max(1.0),
            "gamma {gamma}: {}",
            norm(&err)
        );
    }
}

#[test]
fn noiseless_descent_contracts_at_condition_rate() {
    let d = 32;
    let (mu, l) = (0.1, 1.0);
    let p = quadratic(d, 0.0, mu);
    let mut cfg = MethodConfig::new(Method::DpSgd, 100, p.num_examples(), 0);
    cfg.noise = NoiseSpec::Multiplier(0.0);
    cfg.clip = 1e12;
    cfg.sampling = Sampling::Fixed;
    let privacy = cfg.resolve_privacy(p.num_examples()).unwrap();
    let mut x = p.initial_point();
    let mut opt = BaseOptimizer::new(BaseKind::Sgd, 1.0 / l, d);
    let mut streams = StreamSet::new(0);
    let grad_norm = |x: &[f64]| norm(&p.exact_gradient(x).unwrap());
    let start = grad_norm(&x);
    let mut before = start;
    for _ in 0..99 {
        before = {
            step_dpsgd(&p, &mut x, &mut opt, &privacy, &mut streams).unwrap();
            grad_norm(&x)
        };
    }
    step_dpsgd(&p, &mut x, &mut opt, &privacy, &mut streams).unwrap();
    let rate = grad_norm(&x) / before;
    let analytic = 1.0 - mu / l;
    assert!((rate - analytic).abs() < 0.05 * analytic, "rate {rate} vs {analytic}");
    assert!(grad_norm(&x) <= start * analytic.powi(100) * 1.05 + 1e-300);
}

#[test]
fn paired_arms_share_sampling_streams() {
    let p = quadratic(16, 0.3, 0.1);
    let batches = |method: Method| {
        let cfg = MethodConfig::new(method, 5, 20, 42);
        let privacy = cfg.resolve_privacy(p.num_examples()).unwrap();
        let mut streams = StreamSet::new(42);
        (0..5)
            .map(|_| {
                fftkf::optimizer::sample_batch(
                    p.num_examples(),
                    privacy.batch_size,
                    privacy.sampling,
                    &mut streams.sampling,
                )
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(batches(Method::DpSgd), batches(Method::Fftkf));
}
