use std::path::PathBuf;
use std::time::Instant;

use super::metrics::fmt_num;
use super::{create_dir, write_file, RunOptions};
use crate::kalman::KalmanState;
use crate::optimizer::{step_dpsgd, step_fftkf, BaseKind, BaseOptimizer, Method, MethodConfig, StreamSet};
use crate::problems::{Problem, QuadraticProblem, QuadraticSpec};
use crate::rng::{Stream, StreamRng};
use crate::spectral::{build_mask, SpectralFilter};
use crate::{Error, Result};

pub const DEFAULT_BENCH_DIMS: [usize; 4] = [1 << 14, 1 << 15, 1 << 16, 1 << 17];

const REPETITIONS: usize = 5;

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub dims: Vec<usize>,
    pub batch_size: usize,
    /// Directory for `bench.csv`; nothing is written when `None`.
    pub output_dir: Option<PathBuf>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            dims: DEFAULT_BENCH_DIMS.to_vec(),
            batch_size: 16,
            output_dir: None,
        }
    }
}

/// Median timings at one dimension, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub d: usize,
    pub filter_ms: f64,
    pub batch_gradient_ms: f64,
    pub dpsgd_step_ms: f64,
    pub fftkf_step_ms: f64,
    pub ffts_per_step: f64,
}

impl BenchRow {
    /// `fftkf - dpsgd`, to compare against [`BenchRow::predicted_extra_ms`].
    pub fn observed_extra_ms(&self) -> f64 {
        self.fftkf_step_ms - self.dpsgd_step_ms
    }

    /// One more batch gradient and one filter application.
    pub fn predicted_extra_ms(&self) -> f64 {
        self.batch_gradient_ms + self.filter_ms
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of `ln t_filter` against `ln(d log₂ d)`.
    pub fitted_exponent: f64,
    /// `t(2d) / t(d)` for consecutive doublings in `dims`.
    pub filter_ratios: Vec<(usize, f64)>,
}

impl BenchReport {
    pub fn max_filter_ratio(&self) -> f64 {
        self.filter_ratios.iter().map(|r| r.1).fold(f64::NAN, f64::max)
    }

    pub fn fft_counts_ok(&self) -> bool {
        self.rows.iter().all(|r| r.ffts_per_step == 2.0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "d,filter_ms,batch_gradient_ms,dpsgd_step_ms,fftkf_step_ms,ffts_per_step,observed_extra_ms,predicted_extra_ms\n",
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.d,
                fmt_num(r.filter_ms),
                fmt_num(r.batch_gradient_ms),
                fmt_num(r.dpsgd_step_ms),
                fmt_num(r.fftkf_step_ms),
                fmt_num(r.ffts_per_step),
                fmt_num(r.observed_extra_ms()),
                fmt_num(r.predicted_extra_ms())
            ));
        }
        s
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn per_call_ms(inner: usize, f: &mut impl FnMut() -> Result<()>) -> Result<f64> {
    let t = Instant::now();
    for _ in 0..inner {
        f()?;
    }
    Ok(t.elapsed().as_secs_f64() * 1e3 / inner as f64)
}

/// Median over repetitions of the per-call time of `f`, called `inner` times
/// per repetition.
fn time_ms(inner: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    f()?;
    let reps = (0..REPETITIONS)
        .map(|_| per_call_ms(inner, &mut f))
        .collect::<Result<_>>()?;
    Ok(median(reps))
}

/// Filter timings for every dimension. Repetitions are interleaved across
/// dimensions so slow phases of a shared machine hit all sizes alike.
fn filter_timings(dims: &[usize]) -> Result<Vec<f64>> {
    let setups = dims
        .iter()
        .map(|&d| {
            let filter = SpectralFilter::new(d, build_mask(d, 0.5, 0.5, 0.0)?)?;
            let v = StreamRng::new(0, Stream::Analysis).gaussian_vec(d, 1.0);
            Ok((filter, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut reps = vec![Vec::with_capacity(REPETITIONS); dims.len()];
    let mut out = Vec::new();
    for rep in 0..=REPETITIONS {
        for (i, (filter, v)) in setups.iter().enumerate() {
            let inner = ((1usize << 22) / filter.dim()).max(4);
            let ms = per_call_ms(inner, &mut || {
                filter.apply_into(std::hint::black_box(v), &mut out)?;
                std::hint::black_box(&out);
                Ok(())
            })?;
            // Repetition 0 warms caches and allocator.
            if rep > 0 {
                reps[i].push(ms);
            }
        }
    }
    Ok(reps.into_iter().map(median).collect())
}

fn bench_dim(d: usize, batch: usize, filter_ms: f64) -> Result<BenchRow> {
    let filter = SpectralFilter::new(d, build_mask(d, 0.5, 0.5, 0.0)?)?;

    let problem = QuadraticProblem::new(QuadraticSpec {
        dim: d,
        examples: 4 * batch,
        tau: 0.5,
        ..QuadraticSpec::default()
    })?;
    let mut cfg = MethodConfig::new(Method::Fftkf, 1, batch, 0);
    cfg.sampling = crate::optimizer::Sampling::Fixed;
    let privacy = cfg.resolve_privacy(problem.num_examples())?;
    let batch_idx: Vec<usize> = (0..batch).collect();
    let x0 = problem.initial_point();
    let steps = ((1usize << 18) / d).max(2);

    let batch_gradient_ms = time_ms(steps, || {
        std::hint::black_box(crate::optimizer::clipped_sum(&problem, &x0, &batch_idx, 1.0)?);
        Ok(())
    })?;

    let mut x = x0.clone();
    let mut opt = BaseOptimizer::new(BaseKind::Sgd, 0.01, d);
    let mut streams = StreamSet::new(0);
    let dpsgd_step_ms = time_ms(steps, || {
        step_dpsgd(&problem, &mut x, &mut opt, &privacy, &mut streams)?;
        Ok(())
    })?;

    let k = cfg.kalman.expect("fftkf config has kalman parameters");
    let mut state = KalmanState::new(d, k.kappa, k.gamma)?;
    let mut x = x0.clone();
    let mut opt = BaseOptimizer::new(BaseKind::Sgd, 0.01, d);
    let mut streams = StreamSet::new(0);
    let mut ffts = Vec::new();
    let fftkf_step_ms = time_ms(steps, || {
        let r = step_fftkf(&problem, &mut x, &mut opt, &mut state, &filter, &privacy, &mut streams)?;
        ffts.push(r.ffts);
        Ok(())
    })?;
    let ffts_per_step = ffts.iter().sum::<u64>() as f64 / ffts.len() as f64;

    Ok(BenchRow {
        d,
        filter_ms,
        batch_gradient_ms,
        dpsgd_step_ms,
        fftkf_step_ms,
        ffts_per_step,
    })
}

/// Times the filter and single steps at each dimension on one worker thread.
pub fn bench(opts: &BenchOptions) -> Result<BenchReport> {
    if opts.dims.is_empty() {
        return Err(Error::Config("bench needs at least one dimension".into()));
    }
    if let Some(d) = opts.dims.iter().find(|d| !d.is_power_of_two() || **d < 4) {
        return Err(Error::Config(format!("bench dimension {d} is not a power of two >= 4")));
    }
    let pool = RunOptions {
        parallelism: Some(1),
        ..RunOptions::default()
    }
    .pool()?;
    let rows: Vec<BenchRow> = pool.install(|| {
        let filter_ms = filter_timings(&opts.dims)?;
        opts.dims
            .iter()
            .zip(filter_ms)
            .map(|(&d, t)| bench_dim(d, opts.batch_size, t))
            .collect::<Result<_>>()
    })?;

    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.d as f64 * (r.d as f64).log2()).ln(), r.filter_ms.ln()))
        .collect();
    let fitted_exponent = if pts.len() < 2 {
        f64::NAN
    } else {
        let n = pts.len() as f64;
        let (mx, my) = (
            pts.iter().map(|p| p.0).sum::<f64>() / n,
            pts.iter().map(|p| p.1).sum::<f64>() / n,
        );
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    let filter_ratios = rows
        .windows(2)
        .filter(|w| w[1].d == 2 * w[0].d)
        .map(|w| (w[1].d, w[1].filter_ms / w[0].filter_ms))
        .collect();
    let report = BenchReport {
        rows,
        fitted_exponent,
        filter_ratios,
    };
    if let Some(dir) = &opts.output_dir {
        create_dir(dir)?;
        write_file(&dir.join("bench.csv"), &report.to_csv())?;
    }
    Ok(report)
}
