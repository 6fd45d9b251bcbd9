//! Calibrate the noise multiplier for a target budget and trace epsilon over a run.

use fftkf::privacy::{calibrate_sigma, rdp_per_release, AccountantState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (eps, delta, q, steps) = (4.0, 1e-5, 250.0 / 60_000.0, 1200);
    for releases in [1, 2] {
        let z = calibrate_sigma(eps, delta, q, steps, releases)?;
        let mut acct = AccountantState::new(releases);
        let cost = rdp_per_release(q, z, acct.orders());
        print!("{releases} release(s) per step: z = {z:.4}, epsilon at");
        for t in 1..=steps {
            acct.advance(&cost);
            if t % 300 == 0 {
                print!(" T={t}: {:.3}", acct.epsilon(delta));
            }
        }
        println!();
    }
    match calibrate_sigma(1e-6, delta, q, steps, 1) {
        Ok(z) => println!("unexpected z = {z}"),
        Err(e) => println!("tiny target: {e}"),
    }
    Ok(())
}
