//! Post hoc comparison of two error samples on mean, variance, skewness and
//! kurtosis, by random relabeling and by full enumeration.
//!
//!     cargo run --release --example permutation

use error_parity::permtest::{assignment_count, exact_permutation_test, permutation_test, Statistic};

fn main() -> error_parity::error::Result<()> {
    let a = [0.02, -0.05, 0.11, 0.04, -0.01, 0.07, 0.03, -0.02];
    let b = [-0.09, -0.21, 0.05, -0.14, -0.30, -0.02, -0.11, 0.01];

    let randomized = permutation_test(&a, &b, 100_000, 42)?;
    let exact = exact_permutation_test(&a, &b, 1_000_000)?;
    println!(
        "{} relabelings sampled, {} enumerated",
        randomized.permutations,
        assignment_count(a.len(), b.len()).unwrap()
    );
    println!("{:<10} {:>10} {:>12} {:>10}", "statistic", "|diff|", "randomized", "exact");
    for stat in Statistic::ALL {
        let show = |p: Option<f64>| p.map_or("n/a".to_string(), |p| format!("{p:.5}"));
        println!(
            "{:<10} {:>10} {:>12} {:>10}",
            stat.name(),
            show(*randomized.observed.get(stat)),
            show(*randomized.p_values.get(stat)),
            show(*exact.p_values.get(stat)),
        );
    }

    // the smallest possible two-sided p with five values per side
    let small = exact_permutation_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[6.0, 7.0, 8.0, 9.0, 10.0], 1_000)?;
    println!("\n[1..5] vs [6..10]: exact mean p = {:.6} (2/252)", small.p_values.mean.unwrap());
    Ok(())
}
