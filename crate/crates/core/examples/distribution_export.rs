//! Histogram and ECDF series of per-group errors, cut at 100%, as CSV.
//!
//!     cargo run --example distribution_export > errors.csv

use error_parity::audit::partition_errors;
use error_parity::metrics::{compute_errors, ErrorMetric};
use error_parity::report::export_distribution_data;

fn main() -> error_parity::error::Result<()> {
    let truth = [10.0, 12.0, 8.0, 20.0, 5.0, 9.0, 11.0, 14.0, 3.0, 7.0];
    let pred = [11.0, 12.5, 9.0, 18.0, 12.0, 9.5, 10.0, 30.0, 3.2, 7.7];
    let labels = ["a", "a", "a", "a", "a", "b", "b", "b", "b", "b"];

    let errors = compute_errors(&pred, &truth, ErrorMetric::Percentage)?;
    let grouped = partition_errors(&errors, &labels, 1)?;
    let data = export_distribution_data(&grouped, 10, Some(1.0))?;
    for g in &data.groups {
        eprintln!(
            "{}: {} of {} beyond the cut (mean {:?})",
            g.label, g.excluded, g.total, g.excluded_mean
        );
    }
    print!("{}", data.to_csv());
    Ok(())
}
