//! Reference implementations that share no code with the library.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use fftkf::problems::{Problem, DATA_DIR_ENV};
use num_complex::Complex64;

/// Textbook `X_k = Σ_n x_n e^{-2πikn/d}` with each phase evaluated directly.
pub fn naive_dft(x: &[f64]) -> Vec<Complex64> {
    let d = x.len();
    (0..d)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(n, &v)| {
                    let phase = -2.0 * PI * ((k * n) % d) as f64 / d as f64;
                    Complex64::from_polar(v, phase)
                })
                .sum()
        })
        .collect()
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// RDP of the Poisson-subsampled Gaussian at order `alpha`, by trapezoid
/// quadrature of `E_{z~N(0,σ²)}[((1 - q) + q e^{(2z - 1)/(2σ²)})^α]` in log space.
pub fn rdp_by_quadrature(q: f64, sigma: f64, alpha: f64) -> f64 {
    let s2 = sigma * sigma;
    // The integrand peaks near z = α for large α; cover both tails generously.
    let lo = -40.0 * sigma - 1.0;
    let hi = alpha + 40.0 * sigma + 1.0;
    let n = 400_000;
    let h = (hi - lo) / n as f64;
    let log_norm = -0.5 * (2.0 * PI * s2).ln();
    let mut acc = f64::NEG_INFINITY;
    for i in 0..=n {
        let z = lo + h * i as f64;
        let log_ratio = log_add((1.0 - q).ln(), q.ln() + (2.0 * z - 1.0) / (2.0 * s2));
        let w: f64 = if i == 0 || i == n { 0.5 } else { 1.0 };
        let term = w.ln() + log_norm - z * z / (2.0 * s2) + alpha * log_ratio;
        acc = log_add(acc, term);
    }
    (acc + h.ln()) / (alpha - 1.0)
}

/// `C₁` multiplied out into monomials.
pub fn c1_expanded(eta: f64, kappa: f64, gamma: f64, l: f64, beta: f64) -> f64 {
    let g = 2.0 + (1.0 + gamma).abs();
    let sq = 1.0 - 2.0 * kappa + kappa * kappa;
    let mut c = 1.0 + kappa - 2.0 * eta * l;
    c -= 4.0 * g * beta * eta * l * l * sq;
    c -= 4.0 * g * eta * eta * eta * l * l * l * sq;
    c
}

/// Magnitude of the terms summed by [`c1_expanded`], used to scale its
/// rounding error.
pub fn c1_term_scale(eta: f64, kappa: f64, gamma: f64, l: f64, beta: f64) -> f64 {
    let g = 2.0 + (1.0 + gamma).abs();
    let sq = (1.0 - kappa) * (1.0 - kappa);
    1.0 + kappa + 2.0 * eta * l + 4.0 * g * (beta + eta * eta * l) * eta * l * l * sq
}

/// Worst relative error between per-sample gradients and central differences
/// of the per-sample loss, one random unit direction per probe.
pub fn directional_fd_error(p: &dyn Problem, x: &[f64], probes: &[(usize, Vec<f64>)], h: f64) -> f64 {
    let d = p.dim();
    let mut g = vec![0.0; d];
    let mut worst: f64 = 0.0;
    for (example, dir) in probes {
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u: Vec<f64> = dir.iter().map(|v| v / norm).collect();
        p.gradient(x, *example, &mut g).unwrap();
        let analytic: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
        let at = |s: f64| {
            let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + s * b).collect();
            p.loss(&y, *example).unwrap()
        };
        let numeric = (at(h) - at(-h)) / (2.0 * h);
        let scale = analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic - numeric).abs() / scale);
    }
    worst
}

/// Dataset root: the environment variable, else `data/mnist` at the workspace root.
pub fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    dir.join("train-images-idx3-ubyte").exists().then_some(dir)
}

/// Path of a config shipped under `configs/`.
pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
