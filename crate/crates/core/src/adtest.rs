//! k-sample Anderson-Darling test.
//!
//! Tests whether k samples come from a common (unspecified) distribution.
//! The statistic `A²` is standardized with its exact null variance into
//! `T = (A² - (k-1)) / σ_N`, and `T` is compared with critical values
//! interpolated in `m = k - 1`:
//!
//! ```text
//! t_m(α) = b0(α) + b1(α) / √m + b2(α) / m
//! ```
//!
//! Two variants of `A²` are provided. [`TieMode::Continuous`] is the form for
//! untied data; [`TieMode::Midrank`] replaces the empirical distribution
//! functions by their averages of left and right limits at every distinct
//! value, which keeps the statistic well behaved when errors tie.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::check_finite;

/// Significance levels with tabulated critical-value coefficients.
pub const LEVELS: [f64; 5] = [0.25, 0.10, 0.05, 0.025, 0.01];

// (b0, b1, b2) per level, in the order of LEVELS.
const COEFFICIENTS: [(f64, f64, f64); 5] = [
    (0.675, -0.245, -0.105),
    (1.281, 0.250, -0.305),
    (1.645, 0.678, -0.362),
    (1.960, 1.149, -0.391),
    (2.326, 1.822, -0.396),
];

/// Smallest reported p-value; more extreme statistics are floored here.
pub const P_FLOOR: f64 = 0.001;
/// Largest reported p-value; statistics below the 0.25 anchor are capped here.
pub const P_CAP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieMode {
    Continuous,
    #[default]
    Midrank,
}

impl fmt::Display for TieMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieMode::Continuous => "continuous",
            TieMode::Midrank => "midrank",
        })
    }
}

impl FromStr for TieMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(TieMode::Continuous),
            "midrank" => Ok(TieMode::Midrank),
            _ => Err(Error::InvalidArgument(format!("unknown tie mode '{s}'"))),
        }
    }
}

/// Position of `alpha` in [`LEVELS`].
pub fn level_index(alpha: f64) -> Result<usize> {
    LEVELS
        .iter()
        .position(|&l| (l - alpha).abs() <= 1e-12)
        .ok_or(Error::UnsupportedAlpha(alpha))
}

/// Critical value of `T` at tabulated level `alpha` with `m = k - 1`.
pub fn critical_value(alpha: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::TooFewGroups(m + 1));
    }
    Ok(anchor(level_index(alpha)?, m as f64))
}

fn anchor(level: usize, m: f64) -> f64 {
    let (b0, b1, b2) = COEFFICIENTS[level];
    b0 + b1 / m.sqrt() + b2 / m
}

/// `A²`, its null standard deviation and the standardized statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdStatistic {
    pub a2: f64,
    pub sigma_n: f64,
    pub t: f64,
}

/// A p-value read off the interpolated critical-value table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdPValue {
    pub p: f64,
    pub floored: bool,
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdTestResult {
    pub a2: f64,
    pub sigma_n: f64,
    pub t: f64,
    pub k: usize,
    pub n_total: usize,
    pub group_sizes: Vec<usize>,
    pub alpha: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub p_floored: bool,
    pub p_capped: bool,
    pub reject: bool,
    pub tie_mode: TieMode,
}

/// Computes `A²`, `σ_N` and `T` for `groups`.
pub fn ad_statistic<G: AsRef<[f64]>>(groups: &[G], tie_mode: TieMode) -> Result<AdStatistic> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::TooFewGroups(k));
    }
    let mut sorted: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (i, g) in groups.iter().enumerate() {
        let g = g.as_ref();
        if g.is_empty() {
            return Err(Error::EmptyGroup(format!("#{i}")));
        }
        check_finite(g, "group values")?;
        let mut g = g.to_vec();
        g.sort_unstable_by(f64::total_cmp);
        sorted.push(g);
    }
    let mut pooled: Vec<f64> = sorted.iter().flatten().copied().collect();
    let n_total = pooled.len();
    if n_total < 4 {
        return Err(Error::TooFewObservations(n_total));
    }
    pooled.sort_unstable_by(f64::total_cmp);
    if pooled[0] == pooled[n_total - 1] {
        return Err(Error::ConstantSample);
    }

    let a2 = match tie_mode {
        TieMode::Continuous => a2_continuous(&sorted, &pooled),
        TieMode::Midrank => a2_midrank(&sorted, &pooled),
    };
    let sizes: Vec<usize> = sorted.iter().map(Vec::len).collect();
    let variance = null_variance(&sizes);
    if !(variance > 0.0) {
        return Err(Error::ConstantSample);
    }
    let sigma_n = variance.sqrt();
    Ok(AdStatistic {
        a2,
        sigma_n,
        t: (a2 - (k as f64 - 1.0)) / sigma_n,
    })
}

fn a2_continuous(groups: &[Vec<f64>], pooled: &[f64]) -> f64 {
    let n = pooled.len();
    let nf = n as f64;
    groups
        .iter()
        .map(|g| {
            let ni = g.len() as f64;
            let mut below = 0usize;
            let mut inner = 0.0;
            for (j, &z) in pooled[..n - 1].iter().enumerate() {
                while below < g.len() && g[below] <= z {
                    below += 1;
                }
                let j = (j + 1) as f64;
                let dev = nf * below as f64 - j * ni;
                inner += dev * dev / (j * (nf - j));
            }
            inner / ni
        })
        .sum::<f64>()
        / nf
}

fn a2_midrank(groups: &[Vec<f64>], pooled: &[f64]) -> f64 {
    let nf = pooled.len() as f64;
    // distinct values and their multiplicities
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for &z in pooled {
        match distinct.last_mut() {
            Some((v, count)) if *v == z => *count += 1,
            _ => distinct.push((z, 1)),
        }
    }

    let total: f64 = groups
        .iter()
        .map(|g| {
            let ni = g.len() as f64;
            let mut pos = 0usize;
            let mut pooled_before = 0usize;
            let mut inner = 0.0;
            for &(z, l) in &distinct {
                let start = pos;
                while pos < g.len() && g[pos] == z {
                    pos += 1;
                }
                let f = (pos - start) as f64;
                let l = l as f64;
                let m_a = start as f64 + f / 2.0;
                let b_a = pooled_before as f64 + l / 2.0;
                let dev = nf * m_a - ni * b_a;
                inner += l / nf * dev * dev / (b_a * (nf - b_a) - nf * l / 4.0);
                pooled_before += l as usize;
            }
            inner / ni
        })
        .sum();
    total * (nf - 1.0) / nf
}

/// Exact null variance of `A²` for the given group sizes.
fn null_variance(sizes: &[usize]) -> f64 {
    let n = sizes.iter().sum::<usize>();
    let nf = n as f64;
    let k = sizes.len() as f64;
    let big_h: f64 = sizes.iter().map(|&s| 1.0 / s as f64).sum();
    let h: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    // g = Σ_{i<j<N} 1/((N-i) j), summed over j with a running inner sum
    let mut g = 0.0;
    let mut inner = 0.0;
    for j in 2..n {
        inner += 1.0 / (nf - (j - 1) as f64);
        g += inner / j as f64;
    }

    let a = (4.0 * g - 6.0) * (k - 1.0) + (10.0 - 6.0 * g) * big_h;
    let b = (2.0 * g - 4.0) * k * k + 8.0 * h * k + (2.0 * g - 14.0 * h - 4.0) * big_h - 8.0 * h
        + 4.0 * g
        - 6.0;
    let c = (6.0 * h + 2.0 * g - 2.0) * k * k + (4.0 * h - 4.0 * g + 6.0) * k
        + (2.0 * h - 6.0) * big_h
        + 4.0 * h;
    let d = (2.0 * h + 6.0) * k * k - 4.0 * h * k;
    (a * nf.powi(3) + b * nf * nf + c * nf + d) / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0))
}

/// Interpolates a p-value for standardized statistic `t` with `k` groups.
///
/// `ln p` is linear in `t` between the tabulated anchors and is extended past
/// the 0.01 anchor along the last segment until it reaches [`P_FLOOR`].
pub fn ad_pvalue(t: f64, k: usize) -> Result<AdPValue> {
    if k < 2 {
        return Err(Error::TooFewGroups(k));
    }
    let m = (k - 1) as f64;
    let anchors: Vec<f64> = (0..LEVELS.len()).map(|i| anchor(i, m)).collect();

    if t < anchors[0] {
        return Ok(AdPValue {
            p: P_CAP,
            floored: false,
            capped: true,
        });
    }
    let last = anchors.len() - 1;
    let seg = (0..last).find(|&i| t <= anchors[i + 1]).unwrap_or(last - 1);
    let (t0, t1) = (anchors[seg], anchors[seg + 1]);
    if t == t0 {
        return Ok(exact(LEVELS[seg]));
    }
    if t == t1 {
        return Ok(exact(LEVELS[seg + 1]));
    }
    let (l0, l1) = (LEVELS[seg].ln(), LEVELS[seg + 1].ln());
    let p = (l0 + (l1 - l0) * (t - t0) / (t1 - t0)).exp();
    if p < P_FLOOR {
        return Ok(AdPValue {
            p: P_FLOOR,
            floored: true,
            capped: false,
        });
    }
    Ok(exact(p))
}

fn exact(p: f64) -> AdPValue {
    AdPValue {
        p,
        floored: false,
        capped: false,
    }
}

/// Runs the omnibus test at tabulated level `alpha`.
///
/// The verdict compares `T` with the critical value directly, so it does not
/// inherit the interpolation error of the p-value.
pub fn ad_test<G: AsRef<[f64]>>(groups: &[G], alpha: f64, tie_mode: TieMode) -> Result<AdTestResult> {
    level_index(alpha)?;
    let stat = ad_statistic(groups, tie_mode)?;
    let k = groups.len();
    let critical = critical_value(alpha, k - 1)?;
    let p = ad_pvalue(stat.t, k)?;
    let group_sizes: Vec<usize> = groups.iter().map(|g| g.as_ref().len()).collect();
    Ok(AdTestResult {
        a2: stat.a2,
        sigma_n: stat.sigma_n,
        t: stat.t,
        k,
        n_total: group_sizes.iter().sum(),
        group_sizes,
        alpha,
        critical_value: critical,
        p_value: p.p,
        p_floored: p.floored,
        p_capped: p.capped,
        reject: stat.t >= critical,
        tie_mode,
    })
}
