//! Low-pass a noisy sine with the step and smooth masks and compare energies.

use fftkf::analysis::rho_star;
use fftkf::rng::{Stream, StreamRng};
use fftkf::spectral::{apply_filter, build_mask, operator_eigenvalues};
use fftkf::ParamVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 256;
    let mut rng = StreamRng::new(1, Stream::Analysis);
    let signal: Vec<f64> = (0..d)
        .map(|i| (2.0 * std::f64::consts::PI * 3.0 * i as f64 / d as f64).sin())
        .collect();
    let noise = rng.gaussian_vec(d, 0.5);
    let noisy: Vec<f64> = signal.iter().zip(&noise).map(|(s, n)| s + n).collect();

    let error = |v: &[f64]| v.iter().zip(&signal).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    println!("unfiltered error {:.3}", error(&noisy));
    for (name, alpha) in [("step", 0.0), ("smooth", 0.05)] {
        let mask = build_mask(d, 0.5, 0.5, alpha)?;
        let out = apply_filter(&ParamVector::new(noisy.clone())?, &mask)?;
        let ev = operator_eigenvalues(&mask);
        let (lo, hi) = ev
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        println!(
            "{name:>6} mask: error {:.3}, eigenvalues in [{lo:.3}, {hi:.3}]",
            error(&out)
        );
    }
    println!("rho* at lambda = rho = 0.5: {}", rho_star(0.5, 0.5, d));
    Ok(())
}
