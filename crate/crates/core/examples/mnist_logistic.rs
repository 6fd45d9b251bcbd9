//! FFTKF on multinomial logistic regression over an MNIST subset.
//!
//! Needs the four IDX files in `$FFTKF_DATA_DIR` (see scripts/fetch_mnist.sh).

use fftkf::optimizer::{run, BaseKind, KalmanParams, Method, MethodConfig, NoiseSpec};
use fftkf::problems::{load_mnist_dir, LogisticKind, LogisticRegression, Problem, DATA_DIR_ENV};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let Some(dir) = std::env::var_os(DATA_DIR_ENV) else {
        eprintln!("set {DATA_DIR_ENV} to the directory holding the MNIST IDX files");
        std::process::exit(1);
    };
    let (train, test) = load_mnist_dir(dir, Some(5000))?;
    let problem = LogisticRegression::new(LogisticKind::Multinomial, train, Some(test))?;
    for method in [Method::DpSgd, Method::Fftkf] {
        let mut cfg = MethodConfig::new(method, 100, 250, 0);
        cfg.noise = NoiseSpec::TargetEpsilon(4.0);
        cfg.base = BaseKind::adam();
        cfg.learning_rate = 0.007;
        if cfg.kalman.is_some() {
            cfg.kalman = Some(KalmanParams {
                kappa: 0.5,
                gamma: 10.0,
            });
        }
        let out = run(&cfg, &problem)?;
        let acc = problem.test_accuracy(&out.final_x).unwrap_or(f64::NAN);
        println!(
            "{:>6}: test accuracy {acc:.4}, z = {:.3}, epsilon {:.3}",
            method.name(),
            out.privacy.noise_multiplier,
            out.epsilon
        );
    }
    Ok(())
}
