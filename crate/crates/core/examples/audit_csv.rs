//! Full audit of two forecasting models from a CSV table: groups come from a
//! thresholded proportion column and small ground truths are dropped first.
//!
//!     cargo run --release --example audit_csv [path/to/file.csv]

use error_parity::audit::{run_audit, AuditConfig};
use error_parity::ingest::{derive_binary_labels, filter_min_truth, load_csv, Schema};
use error_parity::metrics::ErrorMetric;
use error_parity::report::{render_report, Format};

fn main() -> error_parity::error::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/county_forecasts.csv").to_string()
    });
    let schema = Schema::new("truth").pred("model_a").pred("model_b").label_source("prop");
    let data = filter_min_truth(&load_csv(&path, &schema)?, 100.0);
    println!("{} rows kept, {} dropped for truth < 100\n", data.len(), data.filtered_rows);

    let labels = derive_binary_labels(data.label_source("prop").unwrap(), 0.598, "W", "N");
    let config = AuditConfig {
        metric: ErrorMetric::Percentage,
        alpha: 0.01,
        permutations: 100_000,
        seed: 42,
        ..AuditConfig::default()
    };
    for model in ["model_a", "model_b"] {
        let report = run_audit(data.pred(model).unwrap(), &data.truth.values, &labels, &config)?;
        println!("# {model}\n");
        print!("{}", render_report(&report, Format::Markdown).content);
        println!();
    }
    Ok(())
}
