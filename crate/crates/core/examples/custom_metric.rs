//! Built-in error metrics, and auditing errors computed elsewhere.
//!
//!     cargo run --example custom_metric

use error_parity::audit::{audit_errors, AuditConfig};
use error_parity::metrics::{compute_errors, ErrorMetric, ErrorVector};

fn main() -> error_parity::error::Result<()> {
    let truth = [100.0, 80.0, 120.0];
    let pred = [110.0, 76.0, 120.0];
    for metric in [
        ErrorMetric::Difference,
        ErrorMetric::AbsoluteDifference,
        ErrorMetric::SquaredSigned,
        ErrorMetric::Squared,
        ErrorMetric::Percentage,
        ErrorMetric::SymmetricPercentage,
    ] {
        println!("{:<22} {:?}", metric.name(), compute_errors(&pred, &truth, metric)?.values);
    }

    // log accuracy ratios, audited as given
    let truth: Vec<f64> = (0..200).map(|i| 50.0 + i as f64).collect();
    let pred: Vec<f64> = truth.iter().enumerate().map(|(i, t)| t * (1.0 + 0.02 * ((i * 7 % 11) as f64 - 5.0) / 5.0)).collect();
    let labels: Vec<&str> = (0..200).map(|i| if i % 3 == 0 { "x" } else { "y" }).collect();
    let log_ratio: Vec<f64> = pred.iter().zip(&truth).map(|(p, t)| (p / t).ln()).collect();
    let errors = ErrorVector::precomputed(log_ratio)?;
    let config = AuditConfig {
        permutations: 10_000,
        ..AuditConfig::default()
    };
    let report = audit_errors(&errors, &labels, &config)?;
    println!("\nlog ratio audit: metric {}, T = {:.3}, {}", report.config.metric, report.ad_test.t, report.verdict);
    Ok(())
}
