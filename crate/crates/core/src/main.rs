use std::path::{Path, PathBuf};
use std::process::ExitCode as ProcessExit;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fftkf::harness::{self, ArmSummary, BenchOptions, ExitCode, ExperimentConfig, Fault, RunOptions, VerifyOptions};
use fftkf::problems::DATA_DIR_ENV;

#[derive(Parser)]
#[command(
    name = "fftkf",
    version,
    about = "Differentially private training with spectral noise shaping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (arm x seed) cell of a config and write per-cell CSVs plus summary.csv.
    Train {
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the invariant suite and print a pass/fail table.
    Verify {
        /// Inject a defect to exercise the failure path.
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
        /// Monte-Carlo samples for the trace check.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Time the spectral filter and single training steps.
    Bench {
        /// Powers of two, comma separated.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, default_value_t = 16)]
        batch_size: usize,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Train the sweep grid of a config and write grid.csv.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Replace the config's seed list (comma separated).
    #[arg(long, value_delimiter = ',')]
    seed_override: Option<Vec<u64>>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads for experiment cells.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Truncate dataset problems to this many training examples.
    #[arg(long)]
    subset_n: Option<usize>,
    /// Dataset root directory (overrides the environment variable).
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    MaskAsymmetry,
}

impl RunArgs {
    fn options(self) -> RunOptions {
        RunOptions {
            seed_override: self.seed_override,
            output_dir: self.output_dir,
            parallelism: self.parallelism,
            subset_n: self.subset_n,
            data_dir: self.data_dir,
        }
    }
}

fn print_summaries(rows: &[ArmSummary]) {
    println!(
        "{:<20} {:>6} {:>8} {:>8} {:>14} {:>10} {:>12}",
        "arm", "seeds", "z", "epsilon", "train_loss", "test_acc", "grad_error"
    );
    for r in rows {
        println!(
            "{:<20} {:>6} {:>8.4} {:>8.4} {:>14.6} {:>10.4} {:>12.6}",
            r.arm, r.seeds, r.noise_multiplier, r.epsilon, r.train_loss.0, r.test_acc.0, r.mean_grad_error
        );
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::from_file(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::Validation
    })
}

fn fail(e: fftkf::Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::for_error(&e)
}

fn execute(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Train { config, run } => {
            let cfg = load(&config)?;
            let report = harness::train(&cfg, &run.options()).map_err(fail)?;
            print_summaries(&report.summaries);
            println!("wrote {} files", report.files.len());
        }
        Command::Sweep { config, run } => {
            let cfg = load(&config)?;
            let report = harness::sweep(&cfg, &run.options()).map_err(fail)?;
            print_summaries(&report.train.summaries);
            println!("wrote {} files", report.train.files.len());
        }
        Command::Verify { inject_fault, samples } => {
            let opts = VerifyOptions {
                fault: inject_fault.map(|FaultArg::MaskAsymmetry| Fault::MaskAsymmetry),
                lemma1_samples: samples,
            };
            let report = harness::verify(&opts).map_err(fail)?;
            println!("{report}");
            for c in report.failures() {
                eprintln!(
                    "FAILED {}: expected {}, observed {} (tolerance {})",
                    c.name, c.expected, c.observed, c.tolerance
                );
            }
            if !report.all_passed() {
                return Err(ExitCode::VerificationFailure);
            }
        }
        Command::Bench {
            dims,
            batch_size,
            output_dir,
        } => {
            let mut opts = BenchOptions {
                batch_size,
                output_dir,
                ..BenchOptions::default()
            };
            if let Some(d) = dims {
                opts.dims = d;
            }
            let report = harness::bench(&opts).map_err(fail)?;
            print!("{}", report.to_csv());
            for (d, r) in &report.filter_ratios {
                println!("filter time ratio at d = {d}: {r:.3}");
            }
            println!("fitted exponent against d log d: {:.3}", report.fitted_exponent);
            if !report.fft_counts_ok() {
                eprintln!("FAILED: FFT invocations per fftkf step differ from 2");
                return Err(ExitCode::VerificationFailure);
            }
        }
    }
    Ok(())
}

fn main() -> ProcessExit {
    match execute(Cli::parse()) {
        Ok(()) => ProcessExit::SUCCESS,
        Err(code) => ProcessExit::from(code as u8),
    }
}
