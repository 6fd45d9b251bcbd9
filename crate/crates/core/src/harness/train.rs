use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{ArmConfig, ExperimentConfig};
use super::metrics::{curve_rows, fmt_num, summary_csv, ArmSummary, MetricsLog, CURVE_HEADER};
use super::{build_problem, create_dir, write_file, RunOptions};
use crate::optimizer::{self, MethodConfig, NoiseSpec, RunOutput};
use crate::privacy::calibrate_sigma;
use crate::problems::Problem;
use crate::{Error, Result};

/// One finished (arm, seed) run.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub arm: String,
    pub seed: u64,
    pub config: MethodConfig,
    pub output: RunOutput,
}

impl CellResult {
    pub fn log(&self) -> MetricsLog {
        MetricsLog {
            arm: self.arm.clone(),
            seed: self.seed,
            records: self.output.records.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub cells: Vec<CellResult>,
    pub summaries: Vec<ArmSummary>,
    pub files: Vec<PathBuf>,
}

impl TrainReport {
    pub fn summary(&self, arm: &str) -> Option<&ArmSummary> {
        self.summaries.iter().find(|s| s.arm == arm)
    }
}

/// Concrete per-arm method configs: steps resolved, eval interval copied,
/// and noise matched across arms when requested.
fn resolve_arms(cfg: &ExperimentConfig, arms: &[ArmConfig], n: usize) -> Result<Vec<(String, MethodConfig)>> {
    let mut out: Vec<(String, MethodConfig)> = arms
        .iter()
        .map(|a| {
            let mut m = a.method.clone();
            m.steps = a.duration.steps(n, m.batch_size);
            m.eval_interval = cfg.eval_interval;
            (a.name.clone(), m)
        })
        .collect();
    if cfg.match_noise {
        let first = &out[0].1;
        let NoiseSpec::TargetEpsilon(eps) = first.noise else {
            return Err(Error::Config("match_noise needs arms configured with epsilon".into()));
        };
        let key = (first.batch_size, first.steps, first.delta.to_bits());
        for (name, m) in &out {
            if m.noise != first.noise || (m.batch_size, m.steps, m.delta.to_bits()) != key {
                return Err(Error::Config(format!(
                    "match_noise needs equal epsilon, delta, steps and batch_size; arm '{name}' differs"
                )));
            }
        }
        let q = first.batch_size as f64 / n as f64;
        let z = calibrate_sigma(eps, first.delta, q, first.steps, 1)?;
        for (_, m) in &mut out {
            m.noise = NoiseSpec::Multiplier(z);
        }
    }
    Ok(out)
}

/// Runs all (arm × seed) cells on one problem in the configured pool.
/// Privacy is resolved for every arm before any cell starts.
pub fn run_cells(
    cfg: &ExperimentConfig,
    arms: &[ArmConfig],
    problem: &dyn Problem,
    opts: &RunOptions,
) -> Result<Vec<CellResult>> {
    let n = problem.num_examples();
    let resolved = resolve_arms(cfg, arms, n)?;
    for (name, m) in &resolved {
        m.resolve_privacy(n).map_err(|e| match e {
            optimizer::OptimizerError::Config(msg) => Error::Config(format!("[arm {name}]: {msg}")),
            other => Error::from(other),
        })?;
    }
    let seeds = opts.seed_override.clone().unwrap_or_else(|| cfg.seeds.clone());
    let jobs: Vec<(String, MethodConfig, u64)> = resolved
        .iter()
        .flat_map(|(name, m)| seeds.iter().map(move |&s| (name.clone(), m.clone(), s)))
        .collect();
    let pool = opts.pool()?;
    pool.install(|| {
        jobs.into_par_iter()
            .map(|(arm, mut config, seed)| {
                config.seed = seed;
                let output = optimizer::run(&config, problem)?;
                Ok(CellResult {
                    arm,
                    seed,
                    config,
                    output,
                })
            })
            .collect()
    })
}

fn summarize(cells: &[CellResult]) -> Vec<ArmSummary> {
    let mut arms: Vec<&str> = Vec::new();
    for c in cells {
        if !arms.contains(&c.arm.as_str()) {
            arms.push(&c.arm);
        }
    }
    let logs: Vec<MetricsLog> = cells.iter().map(CellResult::log).collect();
    arms.iter()
        .map(|arm| {
            let idx: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].arm == *arm).collect();
            let first = &cells[idx[0]];
            let group: Vec<&MetricsLog> = idx.iter().map(|&i| &logs[i]).collect();
            ArmSummary::from_logs(
                arm,
                first.config.method.name(),
                first.output.privacy.noise_multiplier,
                &group,
            )
        })
        .collect()
}

fn write_outputs(
    cfg: &ExperimentConfig,
    cells: &[CellResult],
    summaries: &[ArmSummary],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut files = Vec::new();
    for c in cells {
        let path = dir.join(format!("{}_seed{}.csv", c.arm, c.seed));
        write_file(&path, &c.log().to_csv())?;
        files.push(path);
    }
    let path = dir.join("summary.csv");
    write_file(&path, &summary_csv(summaries))?;
    files.push(path);
    if cfg.emit_plot_data {
        let logs: Vec<MetricsLog> = cells.iter().map(CellResult::log).collect();
        let mut s = format!("{CURVE_HEADER}\n");
        for summary in summaries {
            let group: Vec<&MetricsLog> = logs.iter().filter(|l| l.arm == summary.arm).collect();
            s.push_str(&curve_rows(&summary.arm, &group));
        }
        let path = dir.join("curves.csv");
        write_file(&path, &s)?;
        files.push(path);
    }
    Ok(files)
}

fn output_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.output_dir.clone().unwrap_or_else(|| cfg.output_dir.clone())
}

/// Runs every cell and writes `<arm>_seed<seed>.csv` per cell plus
/// `summary.csv` (and `curves.csv` when plot data is requested).
pub fn train(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<TrainReport> {
    let problem = build_problem(&cfg.problem, opts)?;
    let cells = run_cells(cfg, &cfg.arms, problem.as_ref(), opts)?;
    let summaries = summarize(&cells);
    let files = write_outputs(cfg, &cells, &summaries, &output_dir(cfg, opts))?;
    Ok(TrainReport {
        cells,
        summaries,
        files,
    })
}

pub const GRID_HEADER: &str =
    "rho,epsilon,arm,seeds,test_acc_mean,test_acc_stderr,train_loss_mean,train_loss_stderr,noise_multiplier,epsilon_spent";

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub train: TrainReport,
    /// `(ρ, ε, summary)` in grid order.
    pub grid: Vec<(f64, f64, ArmSummary)>,
}

/// Trains one copy of the sweep's template arm per `(ρ, ε)` pair and writes
/// `grid.csv` with one summary row per pair, next to the [`train`] outputs.
pub fn sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<SweepReport> {
    let grid_arms = cfg
        .sweep_arms()
        .ok_or_else(|| Error::Config("config has no [sweep] section".into()))?;
    let arms: Vec<ArmConfig> = grid_arms.iter().map(|(_, _, a)| a.clone()).collect();
    let problem = build_problem(&cfg.problem, opts)?;
    let cells = run_cells(cfg, &arms, problem.as_ref(), opts)?;
    let summaries = summarize(&cells);
    let dir = output_dir(cfg, opts);
    let mut files = write_outputs(cfg, &cells, &summaries, &dir)?;

    let mut grid = Vec::new();
    let mut csv = format!("{GRID_HEADER}\n");
    for (rho, eps, arm) in &grid_arms {
        let s = summaries
            .iter()
            .find(|s| s.arm == arm.name)
            .cloned()
            .expect("every grid arm has a summary");
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt_num(*rho),
            fmt_num(*eps),
            s.arm,
            s.seeds,
            fmt_num(s.test_acc.0),
            fmt_num(s.test_acc.1),
            fmt_num(s.train_loss.0),
            fmt_num(s.train_loss.1),
            fmt_num(s.noise_multiplier),
            fmt_num(s.epsilon)
        ));
        grid.push((*rho, *eps, s));
    }
    let path = dir.join("grid.csv");
    write_file(&path, &csv)?;
    files.push(path);
    Ok(SweepReport {
        train: TrainReport {
            cells,
            summaries,
            files,
        },
        grid,
    })
}
