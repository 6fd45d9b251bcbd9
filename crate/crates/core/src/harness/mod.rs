//! Experiment orchestration behind the `fftkf` binary.
//!
//! [`train`] runs every (arm × seed) cell of an [`ExperimentConfig`] in a
//! work pool and writes one CSV per cell plus `summary.csv`; [`sweep`] does
//! the same over a `(ρ × ε)` grid and adds `grid.csv`; [`verify`] runs the
//! invariant suite; [`bench`] times the filter and the per-step cost.

mod bench;
mod config;
mod metrics;
mod train;
mod verify;

use std::path::{Path, PathBuf};

pub use bench::{bench, BenchOptions, BenchReport, BenchRow, DEFAULT_BENCH_DIMS};
pub use config::{ArmConfig, ConfigError, DataSource, Duration, ExperimentConfig, ProblemSpec, SweepSpec};
pub use metrics::{fmt_num, mean_stderr, ArmSummary, MetricsLog, CELL_HEADER, SUMMARY_HEADER};
pub use train::{run_cells, sweep, train, CellResult, SweepReport, TrainReport, GRID_HEADER};
pub use verify::{verify, Check, Fault, VerifyOptions, VerifyReport};

use crate::problems::{
    load_mnist_dir, Dataset, LogisticRegression, Mlp, MlpShape, Problem, QuadraticProblem, DATA_DIR_ENV,
};
use crate::{Error, Result};

/// Process exit codes of the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Validation = 1,
    VerificationFailure = 2,
    InfeasiblePrivacy = 3,
}

impl ExitCode {
    /// The exit code an error maps to.
    pub fn for_error(e: &Error) -> Self {
        if e.is_infeasible() {
            ExitCode::InfeasiblePrivacy
        } else {
            ExitCode::Validation
        }
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed_override: Option<Vec<u64>>,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` uses all available cores.
    pub parallelism: Option<usize>,
    /// Truncates dataset problems to this many training examples.
    pub subset_n: Option<usize>,
    /// Dataset root, taking precedence over the environment variable.
    pub data_dir: Option<PathBuf>,
}

impl RunOptions {
    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.parallelism {
            if n == 0 {
                return Err(Error::Config("parallelism must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))
    }
}

fn data_root(configured: &Option<PathBuf>, opts: &RunOptions) -> Result<PathBuf> {
    if let Some(p) = configured.clone().or_else(|| opts.data_dir.clone()) {
        return Ok(p);
    }
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .ok_or_else(|| Error::Config(format!("no dataset directory: set {DATA_DIR_ENV} or data_dir")))
}

fn load_data(data: &DataSource, opts: &RunOptions) -> Result<(Dataset, Dataset)> {
    match data {
        DataSource::Mnist {
            data_dir,
            subset_n,
            test_n,
        } => {
            let dir = data_root(data_dir, opts)?;
            let (train, test) = load_mnist_dir(&dir, opts.subset_n.or(*subset_n))?;
            let test = match test_n {
                Some(n) if *n < test.len() => test.select(&(0..*n).collect::<Vec<_>>()),
                _ => test,
            };
            Ok((train, test))
        }
        DataSource::Synthetic {
            examples,
            features,
            classes,
            spread,
            test_examples,
            seed,
        } => {
            let n = opts.subset_n.map_or(*examples, |s| s.min(*examples));
            let all = Dataset::synthetic_blobs(n + test_examples, *features, *classes, *spread, *seed);
            Ok(all.split(*test_examples))
        }
    }
}

/// Instantiates the problem a config describes.
pub fn build_problem(spec: &ProblemSpec, opts: &RunOptions) -> Result<Box<dyn Problem>> {
    Ok(match spec {
        ProblemSpec::Quadratic(q) => Box::new(QuadraticProblem::new(q.clone())?),
        ProblemSpec::Logistic { kind, data } => {
            let (train, test) = load_data(data, opts)?;
            Box::new(LogisticRegression::new(*kind, train, Some(test))?)
        }
        ProblemSpec::Mlp {
            hidden,
            init_seed,
            data,
        } => {
            let (train, test) = load_data(data, opts)?;
            let shape = MlpShape {
                input: train.num_features,
                hidden: *hidden,
                classes: train.classes,
            };
            Box::new(Mlp::new(shape, train, Some(test), *init_seed)?)
        }
    })
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
