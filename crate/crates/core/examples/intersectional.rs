//! Auditing intersections of two sensitive attributes.
//!
//!     cargo run --release --example intersectional

use error_parity::audit::{audit_errors, intersect_labels, AuditConfig};
use error_parity::metrics::{compute_errors, ErrorMetric};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> error_parity::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, 2.0).unwrap();
    let (mut truth, mut pred, mut sex, mut region) = (vec![], vec![], vec![], vec![]);
    for i in 0..800 {
        let (s, r) = (["f", "m"][i % 2], ["urban", "rural"][(i / 2) % 2]);
        // only rural women are systematically overpredicted
        let bias = if s == "f" && r == "rural" { 1.5 } else { 0.0 };
        let t = 50.0 + (i % 17) as f64;
        truth.push(t);
        pred.push(t + bias + noise.sample(&mut rng));
        sex.push(s);
        region.push(r);
    }

    let errors = compute_errors(&pred, &truth, ErrorMetric::Difference)?;
    let config = AuditConfig {
        metric: ErrorMetric::Difference,
        permutations: 20_000,
        ..AuditConfig::default()
    };
    let sex: Vec<String> = sex.iter().map(|s| s.to_string()).collect();
    let region: Vec<String> = region.iter().map(|s| s.to_string()).collect();
    let both = intersect_labels(&[sex.clone(), region.clone()])?;
    for (name, labels) in [("sex", &sex), ("region", &region), ("sex|region", &both)] {
        let r = audit_errors(&errors, labels, &config)?;
        println!("{name:<11} T = {:>7.3}  p ~ {:.4}  {}", r.ad_test.t, r.ad_test.p_value, r.verdict);
        for pair in r.posthoc.iter().filter(|p| p.significant.mean) {
            println!(
                "    mean error differs: {} ({:+.3}) vs {} ({:+.3})",
                pair.test.group_a, pair.test.moments_a.mean, pair.test.group_b, pair.test.moments_b.mean
            );
        }
    }
    Ok(())
}
