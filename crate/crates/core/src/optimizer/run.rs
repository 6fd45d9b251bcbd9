use std::time::Instant;

use rayon::prelude::*;

use super::step::{step_dpsgd, step_fftkf, StreamSet};
use super::{BaseOptimizer, Method, MethodConfig, OptimizerError, ResolvedPrivacy};
use crate::kalman::KalmanState;
use crate::privacy::{rdp_per_release, AccountantState};
use crate::problems::Problem;
use crate::spectral::SpectralFilter;
use crate::vector::distance;

/// One logged step. Metrics a problem cannot provide are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub train_loss: f64,
    /// `‖g̃_t − ∇F(x_t)‖`.
    pub grad_error: f64,
    /// `‖g_t − ∇F(x_t)‖` for the privatized gradient before filtering.
    pub raw_grad_error: f64,
    pub test_acc: f64,
    pub epsilon: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<StepRecord>,
    pub final_x: Vec<f64>,
    pub epsilon: f64,
    pub privacy: ResolvedPrivacy,
    pub accountant: AccountantState,
    pub fft_invocations: u64,
    pub gradient_passes: u64,
}

impl RunOutput {
    pub fn final_record(&self) -> Option<&StepRecord> {
        self.records.last()
    }
}

/// Mean training loss over the whole dataset, reduced in index order.
fn full_loss(problem: &dyn Problem, x: &[f64]) -> f64 {
    if let Some(l) = problem.exact_loss(x) {
        return l;
    }
    let n = problem.num_examples();
    let chunks: Vec<f64> = (0..n)
        .collect::<Vec<_>>()
        .par_chunks(256)
        .map(|c| c.iter().map(|&i| problem.loss(x, i).unwrap_or(f64::NAN)).sum())
        .collect();
    chunks.iter().sum::<f64>() / n as f64
}

/// Runs `config.steps` steps of the configured method from the problem's
/// initial point.
///
/// Train loss is exact where the problem offers it; otherwise it and the
/// test accuracy are computed every `eval_interval` steps and at the final
/// step, and are NaN elsewhere. Calibration failures surface before the
/// first step.
pub fn run(config: &MethodConfig, problem: &dyn Problem) -> Result<RunOutput, OptimizerError> {
    run_with_filter(config, problem, None)
}

/// [`run`] with an explicit spectral filter in place of the one built from
/// `config.filter`.
pub fn run_with_filter(
    config: &MethodConfig,
    problem: &dyn Problem,
    filter_override: Option<SpectralFilter>,
) -> Result<RunOutput, OptimizerError> {
    let privacy = config.resolve_privacy(problem.num_examples())?;
    let d = problem.dim();
    let filter = match (filter_override, config.method) {
        (Some(f), _) => Some(f),
        (None, Method::Fftkf) => Some(config.filter.unwrap_or_default().filter(d)?),
        (None, Method::Disk) => Some(SpectralFilter::identity(d)),
        (None, Method::DpSgd) => None,
    };
    let mut kalman = match config.kalman {
        Some(k) if config.method != Method::DpSgd => Some(KalmanState::new(d, k.kappa, k.gamma)?),
        _ => None,
    };

    let mut accountant = AccountantState::new(privacy.releases_per_step);
    let per_release = rdp_per_release(
        privacy.params.sampling_rate,
        privacy.accounted_multiplier,
        accountant.orders(),
    );
    let mut opt = BaseOptimizer::new(config.base, config.learning_rate, d);
    let mut streams = StreamSet::new(config.seed);
    let mut x = problem.initial_point();
    let mut records = Vec::with_capacity(config.steps as usize);
    let mut fft_total = 0;
    let mut passes = 0;
    let start = Instant::now();

    for t in 1..=config.steps {
        let exact = problem.exact_gradient(&x);
        let report = match (&mut kalman, &filter) {
            (Some(state), Some(f)) => step_fftkf(problem, &mut x, &mut opt, state, f, &privacy, &mut streams)?,
            _ => step_dpsgd(problem, &mut x, &mut opt, &privacy, &mut streams)?,
        };
        accountant.advance(&per_release);
        fft_total += report.ffts;
        passes += u64::from(report.gradient_passes);

        let evaluate = t == config.steps || (config.eval_interval > 0 && t % config.eval_interval == 0);
        let train_loss = match problem.exact_loss(&x) {
            Some(l) => l,
            None if evaluate => full_loss(problem, &x),
            None => f64::NAN,
        };
        let test_acc = if evaluate {
            problem.test_accuracy(&x).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let (grad_error, raw_grad_error) = match &exact {
            Some(g) => (distance(&report.g_tilde, g), distance(&report.g_raw, g)),
            None => (f64::NAN, f64::NAN),
        };
        records.push(StepRecord {
            step: t,
            train_loss,
            grad_error,
            raw_grad_error,
            test_acc,
            epsilon: accountant.epsilon(config.delta),
            wall_ms: if config.record_wall_time {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                f64::NAN
            },
        });
    }

    Ok(RunOutput {
        epsilon: accountant.epsilon(config.delta),
        records,
        final_x: x,
        privacy,
        accountant,
        fft_invocations: fft_total,
        gradient_passes: passes,
    })
}

/// Epsilon of an accountant replayed offline with the run's sampling rate,
/// accounted multiplier, step count and releases per step.
pub fn replay_epsilon(privacy: &ResolvedPrivacy, steps: u64, delta: f64) -> f64 {
    let mut state = AccountantState::new(privacy.releases_per_step);
    let cost = rdp_per_release(
        privacy.params.sampling_rate,
        privacy.accounted_multiplier,
        state.orders(),
    );
    for _ in 0..steps {
        state.advance(&cost);
    }
    state.epsilon(delta)
}
