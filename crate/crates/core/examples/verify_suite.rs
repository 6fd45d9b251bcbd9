//! Run the invariant suite in-process and print its table.

use fftkf::harness::{verify, VerifyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = verify(&VerifyOptions {
        lemma1_samples: Some(20_000),
        ..VerifyOptions::default()
    })?;
    println!("{report}");
    if !report.all_passed() {
        std::process::exit(2);
    }
    Ok(())
}
