//! DP-SGD, DiSK and FFTKF at the same noise multiplier on a noisy quadratic,
//! reporting gradient-estimate error against the exact gradient.

use fftkf::optimizer::{run, KalmanParams, Method, MethodConfig, NoiseSpec};
use fftkf::problems::{QuadraticProblem, QuadraticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = QuadraticProblem::new(QuadraticSpec {
        dim: 256,
        tau: 0.5,
        optimum_bandwidth: 0.25,
        ..QuadraticSpec::default()
    })?;
    for method in [Method::DpSgd, Method::Disk, Method::Fftkf] {
        let mut cfg = MethodConfig::new(method, 300, 100, 7);
        cfg.noise = NoiseSpec::Multiplier(2.0);
        cfg.clip = 5.0;
        cfg.learning_rate = 0.05;
        if cfg.kalman.is_some() {
            cfg.kalman = Some(KalmanParams {
                kappa: 0.5,
                gamma: 10.0,
            });
        }
        let out = run(&cfg, &problem)?;
        let n = out.records.len() as f64;
        let grad_error = out.records.iter().map(|r| r.grad_error).sum::<f64>() / n;
        let raw_error = out.records.iter().map(|r| r.raw_grad_error).sum::<f64>() / n;
        let last = out.final_record().expect("non-empty run");
        println!(
            "{:>6}: final loss {:.4}, mean |g~ - grad F| {:.3} (raw {:.3}), epsilon {:.2}, {} FFTs",
            method.name(),
            last.train_loss,
            grad_error,
            raw_error,
            out.epsilon,
            out.fft_invocations
        );
    }
    Ok(())
}
