//! A small rho × epsilon grid on synthetic blobs.

use fftkf::harness::{sweep, ExperimentConfig, RunOptions};

const CONFIG: &str = "
[experiment]
name = blobs_sweep
seeds = 0, 1, 2
[problem]
kind = logistic
model = multinomial
source = synthetic
examples = 2000
features = 32
classes = 5
spread = 2
[defaults]
epochs = 3
batch_size = 100
delta = 1e-5
clip = 1
lr = 0.3
gamma = 10
[arm kf]
method = fftkf
epsilon = 2
[sweep]
arm = kf
rho = 0.2, 0.4, 0.6, 0.8
epsilon = 1, 4
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    let out = std::env::temp_dir().join("fftkf-sweep-example");
    let report = sweep(
        &cfg,
        &RunOptions {
            output_dir: Some(out.clone()),
            ..RunOptions::default()
        },
    )?;
    println!("{:>5} {:>5} {:>9}", "rho", "eps", "test_acc");
    for (rho, eps, s) in &report.grid {
        println!("{rho:>5} {eps:>5} {:>9.4}", s.test_acc.0);
    }
    println!("grid.csv written to {}", out.display());
    Ok(())
}
