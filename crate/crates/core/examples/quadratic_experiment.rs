//! The shipped quadratic config through the experiment harness, with fewer seeds.
//!
//! `cargo run --release --example quadratic_experiment [seeds]`

use fftkf::harness::{self, ExperimentConfig, RunOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds: u64 = std::env::args().nth(1).map_or(Ok(4), |s| s.parse())?;
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/quadratic.ini");
    let cfg = ExperimentConfig::from_file(path.as_ref())?;
    let out = std::env::temp_dir().join("fftkf-quadratic-example");
    let opts = RunOptions {
        seed_override: Some((0..seeds).collect()),
        output_dir: Some(out.clone()),
        ..RunOptions::default()
    };
    let report = harness::train(&cfg, &opts)?;
    for s in &report.summaries {
        println!(
            "{:>6}: final loss {:.4} ± {:.4}, mean grad error {:.3} (raw {:.3}), epsilon {:.2}",
            s.arm, s.train_loss.0, s.train_loss.1, s.mean_grad_error, s.mean_raw_grad_error, s.epsilon
        );
    }
    println!("wrote {} files under {}", report.files.len(), out.display());
    Ok(())
}
