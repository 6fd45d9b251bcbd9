use std::fmt;

use crate::analysis::{gradient_check, noise_reduction_report, rho_star, verify_lemma1};
use crate::optimizer::{self, KalmanParams, MaskParams, Method, MethodConfig};
use crate::privacy::{calibrate_sigma, rdp_per_release, AccountantState};
use crate::problems::{
    Dataset, LogisticKind, LogisticRegression, Mlp, MlpShape, Problem, QuadraticProblem, QuadraticSpec,
};
use crate::rng::{Stream, StreamRng};
use crate::spectral::{build_mask, dft_forward, dft_inverse, naive_dft, SpectralFilter, SpectralMask};
use crate::{ParamVector, Result};

/// A deliberate defect for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Breaks the conjugate symmetry of the masks used by the realness and
    /// non-expansion checks.
    MaskAsymmetry,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    pub fault: Option<Fault>,
    /// Monte-Carlo sample count of the trace check.
    pub lemma1_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub tolerance: String,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        writeln!(
            f,
            "{:<w$}  {:<6}  {:<24}  {:<24}  tolerance",
            "check", "result", "expected", "observed"
        )?;
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(
                f,
                "{:<w$}  {:<6}  {:<24}  {:<24}  {}",
                c.name, status, c.expected, c.observed, c.tolerance
            )?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn check(
    name: &str,
    expected: impl Into<String>,
    observed: impl Into<String>,
    tolerance: impl Into<String>,
    passed: bool,
) -> Check {
    Check {
        name: name.into(),
        expected: expected.into(),
        observed: observed.into(),
        tolerance: tolerance.into(),
        passed,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn fft_checks(out: &mut Vec<Check>) -> Result<()> {
    let mut rng = StreamRng::new(0, Stream::Analysis);
    let (mut parseval, mut naive, mut roundtrip) = (0.0f64, 0.0f64, 0.0f64);
    for d in (2..=8).map(|p| 1usize << p) {
        for _ in 0..20 {
            let v = ParamVector::new(rng.gaussian_vec(d, 1.0))?;
            let s = dft_forward(&v)?;
            let energy: f64 = s.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / d as f64;
            parseval = parseval.max(rel(energy, v.norm().powi(2)));
            let slow = naive_dft(&v);
            let scale = slow.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
            let err = s
                .as_slice()
                .iter()
                .zip(slow.as_slice())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            naive = naive.max(err / scale);
            let back = dft_inverse(&s)?;
            let err = back
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            roundtrip = roundtrip.max(err / v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        }
    }
    out.push(check(
        "parseval",
        "0",
        format!("{parseval:.2e}"),
        "1e-10 rel",
        parseval <= 1e-10,
    ));
    out.push(check(
        "fft-vs-naive",
        "0",
        format!("{naive:.2e}"),
        "1e-9 rel",
        naive <= 1e-9,
    ));
    out.push(check(
        "fft-roundtrip",
        "0",
        format!("{roundtrip:.2e}"),
        "1e-10 rel",
        roundtrip <= 1e-10,
    ));
    Ok(())
}

fn faulty(mask: SpectralMask) -> SpectralMask {
    let mut phi = mask.phi().to_vec();
    let d = phi.len();
    phi[1] = 1.0;
    phi[d - 1] = 0.25;
    SpectralMask::from_raw(phi, mask.k0(), mask.rho(), mask.alpha(), mask.lambda())
}

fn shaping_checks(out: &mut Vec<Check>, fault: Option<Fault>) -> Result<()> {
    let d = 256;
    let mut masks = vec![build_mask(d, 0.5, 0.5, 0.0)?, build_mask(d, 0.3, 0.8, 0.1)?];
    if fault == Some(Fault::MaskAsymmetry) {
        masks = masks.into_iter().map(faulty).collect();
    }
    let mut rng = StreamRng::new(1, Stream::Analysis);
    let mut worst_growth = f64::NEG_INFINITY;
    let mut errors = 0usize;
    let mut first_error = String::new();
    for m in &masks {
        let filter = SpectralFilter::new(d, m.clone())?;
        for _ in 0..500 {
            let w = rng.gaussian_vec(d, 1.0);
            match filter.apply(&w) {
                Ok(s) => worst_growth = worst_growth.max(crate::norm(&s) - crate::norm(&w)),
                Err(e) => {
                    if errors == 0 {
                        first_error = e.to_string();
                    }
                    errors += 1;
                }
            }
        }
    }
    let observed = if errors == 0 {
        "all real".to_string()
    } else {
        format!("{errors} rejected: {first_error}")
    };
    out.push(check(
        "shaped-output-real",
        "all real",
        observed,
        "1e-9 residue",
        errors == 0,
    ));
    let passed = errors == 0 && worst_growth <= 1e-9;
    let observed = if errors == 0 {
        format!("{worst_growth:.2e}")
    } else {
        format!("{errors} draws failed")
    };
    out.push(check("non-expansion", "<= 0", observed, "1e-9", passed));
    Ok(())
}

fn shaped_noise_checks(out: &mut Vec<Check>, samples: usize) -> Result<()> {
    let rs = rho_star(0.5, 0.5, 1024);
    out.push(check(
        "rho-star(0.5,0.5)",
        "0.625",
        rs.to_string(),
        "exact",
        rs == 0.625,
    ));
    let (red, bias) = noise_reduction_report(0.5, 0.5);
    out.push(check(
        "noise-reduction(0.5,0.5)",
        "37.5% / 25%",
        format!("{red}% / {bias}%"),
        "exact",
        red == 37.5 && bias == 25.0,
    ));
    let mut rng = StreamRng::new(2, Stream::Analysis);
    let r = verify_lemma1(1024, 0.5, 0.5, 1.0, samples, &mut rng)?;
    let dev = r.trace_relative_deviation();
    out.push(check(
        "shaped-noise-trace",
        format!("{}", r.trace_analytic),
        format!("{:.2} ({:.2}%)", r.trace_mc, 100.0 * dev),
        "2% rel",
        dev <= 0.02,
    ));
    let err = (r.bias_norm_mc - 0.5).abs();
    out.push(check(
        "bias-operator-norm",
        "0.5",
        format!("{:.9}", r.bias_norm_mc),
        "1e-6",
        err <= 1e-6,
    ));
    let bound = r.mean_norm_bound();
    out.push(check(
        "shaped-noise-zero-mean",
        format!("< {bound:.4}"),
        format!("{:.4}", r.mean_norm),
        "4 sigma sqrt(d/n)",
        r.mean_norm < bound,
    ));
    Ok(())
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn reduction_checks(out: &mut Vec<Check>) -> Result<()> {
    let p = QuadraticProblem::new(QuadraticSpec {
        dim: 64,
        examples: 200,
        tau: 0.5,
        ..QuadraticSpec::default()
    })?;
    let kalman = KalmanParams { kappa: 0.6, gamma: 2.0 };
    let mut fftkf = MethodConfig::new(Method::Fftkf, 100, 20, 5);
    fftkf.filter = Some(MaskParams::identity());
    fftkf.kalman = Some(kalman);
    let mut disk = MethodConfig::new(Method::Disk, 100, 20, 5);
    disk.kalman = Some(kalman);
    let a = optimizer::run(&fftkf, &p)?;
    let b = optimizer::run(&disk, &p)?;
    let ok = same_bits(&a.final_x, &b.final_x);
    out.push(check(
        "fftkf(identity) == disk",
        "bit-exact",
        if ok { "bit-exact" } else { "differs" },
        "0 ulp",
        ok,
    ));

    disk.kalman = Some(KalmanParams { kappa: 1.0, gamma: 2.0 });
    let dpsgd = MethodConfig::new(Method::DpSgd, 100, 20, 5);
    let c = optimizer::run(&disk, &p)?;
    let e = optimizer::run(&dpsgd, &p)?;
    let ok = same_bits(&c.final_x, &e.final_x);
    out.push(check(
        "disk(kappa=1) == dpsgd",
        "bit-exact",
        if ok { "bit-exact" } else { "differs" },
        "0 ulp",
        ok,
    ));

    let f = optimizer::run(&MethodConfig::new(Method::Fftkf, 10, 20, 1), &p)?;
    let per_step = f.fft_invocations as f64 / 10.0;
    out.push(check(
        "ffts-per-fftkf-step",
        "2",
        per_step.to_string(),
        "exact",
        per_step == 2.0,
    ));
    Ok(())
}

fn gradient_checks(out: &mut Vec<Check>) -> Result<()> {
    let mut rng = StreamRng::new(3, Stream::Analysis);
    let data = Dataset::synthetic_blobs(40, 12, 4, 0.8, 1);
    let logistic = LogisticRegression::new(LogisticKind::Multinomial, data, None)?;
    let shape = MlpShape {
        input: 12,
        hidden: 8,
        classes: 4,
    };
    let mlp = Mlp::new(shape, Dataset::synthetic_blobs(40, 12, 4, 0.8, 2), None, 0)?;
    for (name, p, tol) in [
        ("gradcheck-logistic", &logistic as &dyn Problem, 1e-5),
        ("gradcheck-mlp", &mlp as &dyn Problem, 1e-4),
    ] {
        let mut worst: f64 = 0.0;
        for probe in 0..20u64 {
            let x = rng.gaussian_vec(p.dim(), 0.5);
            worst = worst.max(gradient_check(p, &x, &[probe as usize], 1e-5, probe)?);
        }
        out.push(check(
            name,
            "0",
            format!("{worst:.2e}"),
            format!("{tol:e} rel, 20 probes"),
            worst <= tol,
        ));
    }
    Ok(())
}

fn accountant_checks(out: &mut Vec<Check>) -> Result<()> {
    let (eps, delta, q, steps) = (4.0, 1e-5, 0.05, 500);
    let z = calibrate_sigma(eps, delta, q, steps, 1)?;
    let mut state = AccountantState::new(1);
    let cost = rdp_per_release(q, z, state.orders());
    for _ in 0..steps {
        state.advance(&cost);
    }
    let got = state.epsilon(delta);
    out.push(check(
        "calibration-reaccount",
        "[3.96, 4]",
        format!("{got:.6} (z = {z:.4})"),
        "[0.99 eps, eps]",
        got <= eps && got >= 0.99 * eps,
    ));
    Ok(())
}

/// Runs the invariant suite. Errors are returned only for failures to set a
/// check up; a violated invariant is a failed [`Check`].
pub fn verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    fft_checks(&mut checks)?;
    shaping_checks(&mut checks, opts.fault)?;
    shaped_noise_checks(&mut checks, opts.lemma1_samples.unwrap_or(20_000))?;
    reduction_checks(&mut checks)?;
    gradient_checks(&mut checks)?;
    accountant_checks(&mut checks)?;
    Ok(VerifyReport { checks })
}
