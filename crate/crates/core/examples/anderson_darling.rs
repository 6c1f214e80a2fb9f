//! k-sample Anderson-Darling test on four sets of smoothness measurements.
//!
//!     cargo run --example anderson_darling

use error_parity::adtest::{ad_test, critical_value, TieMode};

fn main() -> error_parity::error::Result<()> {
    let groups = [
        vec![38.7, 41.5, 43.8, 44.5, 45.5, 46.0, 47.7, 58.0],
        vec![39.2, 39.3, 39.7, 41.4, 41.8, 42.9, 43.3, 45.8],
        vec![34.0, 35.0, 39.0, 40.0, 43.0, 43.0, 44.0, 45.0],
        vec![34.0, 34.8, 34.8, 35.4, 37.2, 37.8, 41.2, 42.8],
    ];

    for mode in [TieMode::Midrank, TieMode::Continuous] {
        let r = ad_test(&groups, 0.01, mode)?;
        println!(
            "{mode:>10}: A2 = {:.4}  sigma_N = {:.4}  T = {:.4}  p ~ {:.4}  reject at 1%: {}",
            r.a2, r.sigma_n, r.t, r.p_value, r.reject
        );
    }

    println!("\ncritical values for k = 4 (m = 3):");
    for alpha in [0.25, 0.10, 0.05, 0.025, 0.01] {
        println!("  alpha {alpha:<5} -> {:.3}", critical_value(alpha, 3)?);
    }
    Ok(())
}
