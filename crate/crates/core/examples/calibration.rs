//! Monte Carlo type-I error and power of the audit on synthetic groups.
//!
//!     cargo run --release --example calibration

use error_parity::calibrate::{simulate_rejection_rate, Family, GeneratorSpec};

fn main() -> error_parity::error::Result<()> {
    println!("{:<10} {:>6} {:>6} {:>8}", "family", "shift", "alpha", "rate");
    for family in [Family::Normal, Family::Lognormal, Family::StudentT] {
        for shift in [0.0, 0.3] {
            let spec = GeneratorSpec::shifted(family, 100, 2, shift);
            let sim = simulate_rejection_rate(&spec, 400, 0.05, 500, 42)?;
            println!("{:<10} {:>6} {:>6} {:>8.3}", family.to_string(), shift, sim.alpha, sim.rate);
        }
    }

    // any single trial can be replayed from the master seed and its index
    let spec = GeneratorSpec::shifted(Family::Normal, 100, 3, 0.5);
    let sim = simulate_rejection_rate(&spec, 50, 0.01, 1000, 7)?;
    let first = sim.log.iter().find(|t| t.reject).expect("some trial rejects");
    let again = error_parity::calibrate::run_trial(&spec, first.trial, 0.01, 1000, 7)?;
    assert_eq!(&again, first);
    println!("\ntrial {} replayed: T = {:.4}, {} post hoc pairs", again.trial, again.t, again.posthoc.len());
    Ok(())
}
