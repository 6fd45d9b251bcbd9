//! Filter and step timings at a few small dimensions.

use fftkf::harness::{bench, BenchOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = bench(&BenchOptions {
        dims: vec![1 << 10, 1 << 11, 1 << 12, 1 << 13],
        ..BenchOptions::default()
    })?;
    print!("{}", report.to_csv());
    for (d, r) in &report.filter_ratios {
        println!("t({d}) / t({}) = {r:.2}", d / 2);
    }
    println!("exponent against d log d: {:.2}", report.fitted_exponent);
    Ok(())
}
