//! The two-stage error-parity audit.
//!
//! Errors are partitioned by sensitive group and tested with the k-sample
//! Anderson-Darling test. Only when that omnibus test rejects are the group
//! pairs compared moment by moment with permutation tests.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adtest::{self, ad_test, AdTestResult, TieMode};
use crate::error::{Error, Result};
use crate::metrics::{compute_errors, ErrorMetric, ErrorVector};
use crate::moments::{moment_set, MomentSet};
use crate::permtest::{permutation_test, CanonicalPair, PerStatistic, PermutationResult, Statistic};
use crate::rng;

/// Separator used to join intersectional labels.
pub const INTERSECTION_SEPARATOR: &str = "|";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub label: String,
    pub values: Vec<f64>,
}

/// Errors split by group label, in lexicographic label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedErrors {
    pub metric: ErrorMetric,
    pub groups: Vec<Group>,
    /// Groups dropped for being smaller than the minimum size, with their sizes.
    pub excluded: Vec<(String, usize)>,
}

impl GroupedErrors {
    pub fn get(&self, label: &str) -> Option<&[f64]> {
        self.groups
            .iter()
            .find(|g| g.label == label)
            .map(|g| g.values.as_slice())
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().map(|g| g.label.as_str())
    }

    pub fn warnings(&self) -> Vec<String> {
        self.excluded
            .iter()
            .map(|(label, n)| format!("group '{label}' excluded: {n} observations is below the minimum group size"))
            .collect()
    }
}

/// Splits `errors` by `labels`, keeping the original order within each group.
/// Groups with fewer than `min_group_size` members are excluded.
pub fn partition_errors<S: AsRef<str>>(
    errors: &ErrorVector,
    labels: &[S],
    min_group_size: usize,
) -> Result<GroupedErrors> {
    if labels.len() != errors.len() {
        return Err(Error::LengthMismatch {
            left_name: "errors",
            left: errors.len(),
            right_name: "group labels",
            right: labels.len(),
        });
    }
    let mut by_label: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (&v, label) in errors.values.iter().zip(labels) {
        by_label.entry(label.as_ref()).or_default().push(v);
    }
    let mut groups = Vec::new();
    let mut excluded = Vec::new();
    for (label, values) in by_label {
        if values.len() < min_group_size {
            excluded.push((label.to_string(), values.len()));
        } else {
            groups.push(Group {
                label: label.to_string(),
                values,
            });
        }
    }
    if groups.is_empty() {
        return Err(Error::TooFewGroups(0));
    }
    Ok(GroupedErrors {
        metric: errors.metric,
        groups,
        excluded,
    })
}

/// Joins several label columns element-wise into intersectional labels,
/// e.g. `Asian` and `F` become `Asian|F`.
pub fn intersect_labels<S: AsRef<str>>(columns: &[Vec<S>]) -> Result<Vec<String>> {
    let Some(first) = columns.first() else {
        return Err(Error::Empty("label columns"));
    };
    let n = first.len();
    if let Some(bad) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            left_name: "first label column",
            left: n,
            right_name: "another label column",
            right: bad.len(),
        });
    }
    Ok((0..n)
        .map(|i| {
            columns
                .iter()
                .map(|c| c[i].as_ref())
                .collect::<Vec<_>>()
                .join(INTERSECTION_SEPARATOR)
        })
        .collect())
}

/// Multiple-comparison correction over all (pair, statistic) p-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    #[default]
    None,
    Holm,
    Bonferroni,
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Correction::None => "none",
            Correction::Holm => "holm",
            Correction::Bonferroni => "bonferroni",
        })
    }
}

impl FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Correction::None),
            "holm" => Ok(Correction::Holm),
            "bonferroni" => Ok(Correction::Bonferroni),
            _ => Err(Error::InvalidArgument(format!("unknown correction '{s}'"))),
        }
    }
}

/// Adjusted p-values in input order.
pub fn adjust_p_values(p: &[f64], correction: Correction) -> Vec<f64> {
    let m = p.len() as f64;
    match correction {
        Correction::None => p.to_vec(),
        Correction::Bonferroni => p.iter().map(|&x| (x * m).min(1.0)).collect(),
        Correction::Holm => {
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&i, &j| p[i].total_cmp(&p[j]).then(i.cmp(&j)));
            let mut adjusted = vec![0.0; p.len()];
            let mut running: f64 = 0.0;
            for (rank, &i) in order.iter().enumerate() {
                running = running.max(((m - rank as f64) * p[i]).min(1.0));
                adjusted[i] = running;
            }
            adjusted
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub metric: ErrorMetric,
    pub alpha: f64,
    pub permutations: u64,
    pub seed: u64,
    pub tie_mode: TieMode,
    pub min_group_size: usize,
    pub correction: Correction,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            metric: ErrorMetric::Percentage,
            alpha: 0.01,
            permutations: 100_000,
            seed: 42,
            tie_mode: TieMode::Midrank,
            min_group_size: 10,
            correction: Correction::None,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        adtest::level_index(self.alpha)?;
        if self.permutations < 1 {
            return Err(Error::InvalidArgument(
                "the number of permutations must be at least 1".into(),
            ));
        }
        if self.min_group_size < 1 {
            return Err(Error::InvalidArgument(
                "the minimum group size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
    pub moments: MomentSet,
    /// Mean and (population) standard deviation of the absolute errors.
    pub abs_error_mean: f64,
    pub abs_error_sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Fair,
    Unfair,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Fair => "fair",
            Verdict::Unfair => "unfair",
        })
    }
}

/// One post hoc pair: the permutation test plus corrected significance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosthocPair {
    pub test: PermutationResult,
    pub adjusted_p_values: PerStatistic<Option<f64>>,
    pub significant: PerStatistic<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: AuditConfig,
    pub groups: Vec<GroupSummary>,
    pub ad_test: AdTestResult,
    pub verdict: Verdict,
    pub posthoc: Vec<PosthocPair>,
    pub warnings: Vec<String>,
}

/// Seed for the permutation test of one pair, derived from the master seed
/// and the pair's canonical content.
pub fn pair_seed(master: u64, a: &[f64], b: &[f64]) -> u64 {
    rng::derive_seed(master, &CanonicalPair::new(a, b).content_key())
}

/// Runs the full audit on predictions, ground truths and group labels.
pub fn run_audit<S: AsRef<str>>(
    pred: &[f64],
    truth: &[f64],
    labels: &[S],
    config: &AuditConfig,
) -> Result<AuditReport> {
    config.validate()?;
    let errors = compute_errors(pred, truth, config.metric)?;
    audit_errors(&errors, labels, config)
}

/// Runs the audit on an already computed error vector. The metric recorded in
/// the report is the one attached to `errors`.
pub fn audit_errors<S: AsRef<str>>(
    errors: &ErrorVector,
    labels: &[S],
    config: &AuditConfig,
) -> Result<AuditReport> {
    config.validate()?;
    let grouped = partition_errors(errors, labels, config.min_group_size)?;
    audit_grouped(&grouped, config)
}

pub fn audit_grouped(grouped: &GroupedErrors, config: &AuditConfig) -> Result<AuditReport> {
    config.validate()?;
    let mut config = config.clone();
    config.metric = grouped.metric;

    let k = grouped.groups.len();
    if k < 2 {
        return Err(Error::TooFewGroups(k));
    }
    let values: Vec<&[f64]> = grouped.groups.iter().map(|g| g.values.as_slice()).collect();
    let ad = ad_test(&values, config.alpha, config.tie_mode)
        .map_err(|e| e.context("omnibus Anderson-Darling test"))?;

    let groups = grouped
        .groups
        .iter()
        .map(|g| summarize(&g.label, &g.values))
        .collect::<Result<Vec<_>>>()?;

    let (verdict, posthoc) = if ad.reject {
        (Verdict::Unfair, posthoc(grouped, &config)?)
    } else {
        (Verdict::Fair, Vec::new())
    };

    Ok(AuditReport {
        config,
        groups,
        ad_test: ad,
        verdict,
        posthoc,
        warnings: grouped.warnings(),
    })
}

fn summarize(label: &str, values: &[f64]) -> Result<GroupSummary> {
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let abs_moments = moment_set(&abs)?;
    Ok(GroupSummary {
        label: label.to_string(),
        n: values.len(),
        moments: moment_set(values)?,
        abs_error_mean: abs_moments.mean,
        abs_error_sd: abs_moments.std_dev(),
    })
}

fn posthoc(grouped: &GroupedErrors, config: &AuditConfig) -> Result<Vec<PosthocPair>> {
    let k = grouped.groups.len();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect();
    let tests = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&grouped.groups[i], &grouped.groups[j]);
            let seed = pair_seed(config.seed, &a.values, &b.values);
            permutation_test(&a.values, &b.values, config.permutations, seed)
                .map(|r| r.with_labels(a.label.clone(), b.label.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let family: Vec<(usize, Statistic, f64)> = tests
        .iter()
        .enumerate()
        .flat_map(|(i, t)| t.p_values.iter().filter_map(move |(s, p)| p.map(|p| (i, s, p))))
        .collect();
    let raw: Vec<f64> = family.iter().map(|f| f.2).collect();
    let adjusted = adjust_p_values(&raw, config.correction);

    let mut out: Vec<PosthocPair> = tests
        .into_iter()
        .map(|test| PosthocPair {
            test,
            adjusted_p_values: PerStatistic::default(),
            significant: PerStatistic::default(),
        })
        .collect();
    for (&(i, stat, _), &adj) in family.iter().zip(&adjusted) {
        *out[i].adjusted_p_values.get_mut(stat) = Some(adj);
        *out[i].significant.get_mut(stat) = adj <= config.alpha;
    }
    Ok(out)
}
