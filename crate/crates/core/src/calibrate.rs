//! Monte Carlo calibration of the audit pipeline.
//!
//! Synthetic groups are drawn from known distributions and audited
//! repeatedly; the rejection rate estimates the type-I error (identical
//! generators) or the power (shifted generators). Trial `i` draws its data
//! from substream `i` of the master seed and audits with a seed derived from
//! the same pair, so any subset of trials can be replayed on its own.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adtest::{self, TieMode};
use crate::audit::{audit_errors, AuditConfig, Correction, Verdict};
use crate::error::{Error, Result};
use crate::metrics::{ErrorMetric, ErrorVector};
use crate::permtest::PerStatistic;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Normal,
    Lognormal,
    Uniform,
    StudentT,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Normal => "normal",
            Family::Lognormal => "lognormal",
            Family::Uniform => "uniform",
            Family::StudentT => "student_t",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Family::Normal),
            "lognormal" => Ok(Family::Lognormal),
            "uniform" => Ok(Family::Uniform),
            "student_t" | "student-t" | "t" => Ok(Family::StudentT),
            _ => Err(Error::InvalidArgument(format!("unknown distribution family '{s}'"))),
        }
    }
}

/// `location + scale * X`, where X is:
/// - normal: standard normal
/// - lognormal: `exp(shape * Z)` (shape defaults to 1)
/// - uniform: uniform on `[-√3, √3]` (unit variance)
/// - student_t: Student's t with `shape` degrees of freedom (default 5)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub family: Family,
    pub location: f64,
    pub scale: f64,
    pub shape: Option<f64>,
}

impl Generator {
    pub fn new(family: Family, location: f64, scale: f64) -> Self {
        Generator {
            family,
            location,
            scale,
            shape: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) || !self.location.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "generator needs finite location and positive scale, got {self:?}"
            )));
        }
        if let Some(shape) = self.shape {
            if !(shape > 0.0 && shape.is_finite()) {
                return Err(Error::InvalidArgument(format!("shape must be positive, got {shape}")));
            }
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let draw = |rng: &mut R| -> f64 {
            match self.family {
                Family::Normal => StandardNormal.sample(rng),
                Family::Lognormal => {
                    let z: f64 = StandardNormal.sample(rng);
                    (self.shape.unwrap_or(1.0) * z).exp()
                }
                Family::Uniform => (rng.gen::<f64>() - 0.5) * 12f64.sqrt(),
                Family::StudentT => StudentT::new(self.shape.unwrap_or(5.0))
                    .expect("validated degrees of freedom")
                    .sample(rng),
            }
        };
        (0..n).map(|_| self.location + self.scale * draw(rng)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub generator: Generator,
    pub size: usize,
}

/// Synthetic data description: one generator and size per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub groups: Vec<GroupSpec>,
}

impl GeneratorSpec {
    /// `groups` groups of `n` draws from `family`, the last one shifted by
    /// `shift` in location.
    pub fn shifted(family: Family, n: usize, groups: usize, shift: f64) -> Self {
        GeneratorSpec {
            groups: (0..groups)
                .map(|i| GroupSpec {
                    generator: Generator::new(
                        family,
                        if i + 1 == groups { shift } else { 0.0 },
                        1.0,
                    ),
                    size: n,
                })
                .collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::Empty("generator groups"));
        }
        for g in &self.groups {
            g.generator.validate()?;
            if g.size < 1 {
                return Err(Error::InvalidArgument("group sizes must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// Draws one data set: values and their group labels `g0`, `g1`, ...
    pub fn draw<R: Rng>(&self, rng: &mut R) -> (Vec<f64>, Vec<String>) {
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (i, g) in self.groups.iter().enumerate() {
            values.extend(g.generator.sample(rng, g.size));
            labels.extend(std::iter::repeat_n(format!("g{i}"), g.size));
        }
        (values, labels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub seed: u64,
    pub reject: bool,
    pub a2: f64,
    pub t: f64,
    pub p_value: f64,
    /// Uncorrected post hoc p-values per pair (empty unless rejected).
    pub posthoc: Vec<PerStatistic<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub spec: GeneratorSpec,
    pub trials: u64,
    pub alpha: f64,
    pub permutations: u64,
    pub seed: u64,
    pub rejections: u64,
    pub rate: f64,
    pub log: Vec<TrialOutcome>,
}

/// Runs one seeded trial.
pub fn run_trial(spec: &GeneratorSpec, trial: u64, alpha: f64, l: u64, seed: u64) -> Result<TrialOutcome> {
    let mut data_rng = rng::substream(seed, trial);
    let audit_seed = rng::derive_seed(seed, &trial.to_le_bytes());
    let (values, labels) = spec.draw(&mut data_rng);
    let config = AuditConfig {
        metric: ErrorMetric::Identity,
        alpha,
        permutations: l,
        seed: audit_seed,
        tie_mode: TieMode::Midrank,
        min_group_size: 1,
        correction: Correction::None,
    };
    let report = audit_errors(&ErrorVector::precomputed(values)?, &labels, &config)?;
    Ok(TrialOutcome {
        trial,
        seed: audit_seed,
        reject: report.verdict == Verdict::Unfair,
        a2: report.ad_test.a2,
        t: report.ad_test.t,
        p_value: report.ad_test.p_value,
        posthoc: report.posthoc.iter().map(|p| p.test.p_values).collect(),
    })
}

/// Audits `trials` independent synthetic data sets and reports how often the
/// omnibus test rejects.
pub fn simulate_rejection_rate(
    spec: &GeneratorSpec,
    trials: u64,
    alpha: f64,
    l: u64,
    seed: u64,
) -> Result<Simulation> {
    if trials < 1 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    adtest::level_index(alpha)?;
    spec.validate()?;
    let log = (0..trials)
        .into_par_iter()
        .map(|trial| run_trial(spec, trial, alpha, l, seed))
        .collect::<Result<Vec<_>>>()?;
    let rejections = log.iter().filter(|t| t.reject).count() as u64;
    Ok(Simulation {
        spec: spec.clone(),
        trials,
        alpha,
        permutations: l,
        seed,
        rejections,
        rate: rejections as f64 / trials as f64,
        log,
    })
}
