//! Population moments of an error sample: mean, variance, skewness and
//! excess kurtosis, all with `1/n` normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::check_finite;

/// The first four moments of one sample.
///
/// `skewness` and `kurtosis` are `None` exactly when the sample is constant
/// (`variance == 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    /// Excess (Fisher) kurtosis: 0 for a normal distribution.
    pub kurtosis: Option<f64>,
}

impl MomentSet {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Computes the moment set of `sample`.
pub fn moment_set(sample: &[f64]) -> Result<MomentSet> {
    if sample.is_empty() {
        return Err(Error::Empty("sample"));
    }
    check_finite(sample, "sample")?;
    Ok(moments_unchecked(sample))
}

/// Moment kernel shared with the permutation engine. `sample` must be
/// nonempty and finite.
pub(crate) fn moments_unchecked(sample: &[f64]) -> MomentSet {
    let n = sample.len();
    let nf = n as f64;

    let first = sample[0];
    let mut constant = true;
    let mut sum = 0.0;
    for &x in sample {
        sum += x;
        constant &= x == first;
    }
    if constant {
        return MomentSet {
            n,
            mean: first,
            variance: 0.0,
            skewness: None,
            kurtosis: None,
        };
    }

    let mut mean = sum / nf;
    // one refinement pass recovers most of the rounding error in the sum
    mean += sample.iter().map(|&x| x - mean).sum::<f64>() / nf;

    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in sample {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;

    MomentSet {
        n,
        mean,
        variance: m2,
        skewness: Some(m3 / (m2 * m2.sqrt())),
        kurtosis: Some(m4 / (m2 * m2) - 3.0),
    }
}
