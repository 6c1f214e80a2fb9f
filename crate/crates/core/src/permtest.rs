//! Two-sample permutation tests on the mean, variance, skewness and kurtosis.
//!
//! Both engines compare the observed absolute difference of each statistic
//! with the differences obtained after relabeling the pooled sample into
//! groups of the original sizes. The randomized engine draws `l` relabelings
//! and reports the add-one estimate `(1 + c) / (1 + l)`; the exact engine
//! enumerates every assignment and reports `c / C(n_a + n_b, n_a)`.
//!
//! Relabeling `i` is drawn from ChaCha stream `i` of the seed, so the result
//! is the same for any number of worker threads.

use std::fmt;

use itertools::Itertools;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::check_finite;
use crate::moments::{moments_unchecked, MomentSet};

/// Default enumeration limit for [`exact_permutation_test`].
pub const DEFAULT_MAX_ASSIGNMENTS: u64 = 1_000_000;

/// Permuted differences within this relative distance below the observed one
/// count as ties (and therefore as extreme).
const TIE_RTOL: f64 = 1e-9;

const CHUNK: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    Variance,
    Skewness,
    Kurtosis,
}

impl Statistic {
    pub const ALL: [Statistic; 4] = [
        Statistic::Mean,
        Statistic::Variance,
        Statistic::Skewness,
        Statistic::Kurtosis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::Variance => "variance",
            Statistic::Skewness => "skewness",
            Statistic::Kurtosis => "kurtosis",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per moment statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerStatistic<T> {
    pub mean: T,
    pub variance: T,
    pub skewness: T,
    pub kurtosis: T,
}

impl<T> PerStatistic<T> {
    pub fn from_fn(mut f: impl FnMut(Statistic) -> T) -> Self {
        PerStatistic {
            mean: f(Statistic::Mean),
            variance: f(Statistic::Variance),
            skewness: f(Statistic::Skewness),
            kurtosis: f(Statistic::Kurtosis),
        }
    }

    pub fn get(&self, stat: Statistic) -> &T {
        match stat {
            Statistic::Mean => &self.mean,
            Statistic::Variance => &self.variance,
            Statistic::Skewness => &self.skewness,
            Statistic::Kurtosis => &self.kurtosis,
        }
    }

    pub fn get_mut(&mut self, stat: Statistic) -> &mut T {
        match stat {
            Statistic::Mean => &mut self.mean,
            Statistic::Variance => &mut self.variance,
            Statistic::Skewness => &mut self.skewness,
            Statistic::Kurtosis => &mut self.kurtosis,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Statistic, &T)> {
        Statistic::ALL.into_iter().map(move |s| (s, self.get(s)))
    }

    pub fn map<U>(&self, mut f: impl FnMut(Statistic, &T) -> U) -> PerStatistic<U> {
        PerStatistic::from_fn(|s| f(s, self.get(s)))
    }
}

/// Observed moments of two samples and their absolute differences.
///
/// A difference is `None` (skipped) when the statistic is undefined in either
/// sample. The variance difference is skipped when both samples are constant,
/// since it then carries no information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedDiffs {
    pub a: MomentSet,
    pub b: MomentSet,
    pub diffs: PerStatistic<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub group_a: String,
    pub group_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub moments_a: MomentSet,
    pub moments_b: MomentSet,
    /// Observed absolute differences; `None` for skipped statistics.
    pub observed: PerStatistic<Option<f64>>,
    /// p-values; `None` exactly for the statistics listed in `skipped`.
    pub p_values: PerStatistic<Option<f64>>,
    /// Number of relabelings evaluated (all of them when `exact`).
    pub permutations: u64,
    pub seed: u64,
    pub exact: bool,
    pub skipped: Vec<Statistic>,
}

impl PermutationResult {
    pub fn with_labels(mut self, a: impl Into<String>, b: impl Into<String>) -> Self {
        self.group_a = a.into();
        self.group_b = b.into();
        self
    }
}

fn abs_diffs(a: &MomentSet, b: &MomentSet) -> PerStatistic<Option<f64>> {
    let both = |x: Option<f64>, y: Option<f64>| Some((x? - y?).abs());
    PerStatistic {
        mean: Some((a.mean - b.mean).abs()),
        variance: Some((a.variance - b.variance).abs()),
        skewness: both(a.skewness, b.skewness),
        kurtosis: both(a.kurtosis, b.kurtosis),
    }
}

fn observed_from_moments(a: &MomentSet, b: &MomentSet) -> PerStatistic<Option<f64>> {
    let mut diffs = abs_diffs(a, b);
    if a.variance == 0.0 && b.variance == 0.0 {
        diffs.variance = None;
    }
    diffs
}

fn validate(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("permutation test sample"));
    }
    check_finite(a, "sample a")?;
    check_finite(b, "sample b")
}

pub fn observed_diffs(a: &[f64], b: &[f64]) -> Result<ObservedDiffs> {
    validate(a, b)?;
    let ma = moments_unchecked(a);
    let mb = moments_unchecked(b);
    Ok(ObservedDiffs {
        diffs: observed_from_moments(&ma, &mb),
        a: ma,
        b: mb,
    })
}

/// The pair in a canonical order, each side sorted, so that neither argument
/// order nor within-sample order affects the relabeling stream.
pub(crate) struct CanonicalPair {
    pub pooled: Vec<f64>,
    pub n_first: usize,
}

impl CanonicalPair {
    pub fn new(a: &[f64], b: &[f64]) -> Self {
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_unstable_by(f64::total_cmp);
            v
        };
        let (sa, sb) = (sorted(a), sorted(b));
        let order = sa.len().cmp(&sb.len()).then_with(|| {
            sa.iter()
                .zip(&sb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let (first, second) = if order.is_gt() { (sb, sa) } else { (sa, sb) };
        let n_first = first.len();
        let mut pooled = first;
        pooled.extend(second);
        CanonicalPair { pooled, n_first }
    }

    /// Bytes identifying the pair's content, independent of argument order.
    pub fn content_key(&self) -> Vec<u8> {
        let mut key = Vec::with_capacity(8 * (self.pooled.len() + 1));
        key.extend((self.n_first as u64).to_le_bytes());
        for v in &self.pooled {
            key.extend(v.to_bits().to_le_bytes());
        }
        key
    }

    fn observed(&self) -> PerStatistic<Option<f64>> {
        let (first, second) = self.pooled.split_at(self.n_first);
        observed_from_moments(&moments_unchecked(first), &moments_unchecked(second))
    }
}

/// Reusable buffers for evaluating one relabeling.
struct Relabeler {
    member: Vec<bool>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Relabeler {
    fn new(n: usize) -> Self {
        Relabeler {
            member: vec![false; n],
            first: Vec::with_capacity(n),
            second: Vec::with_capacity(n),
        }
    }

    /// Adds to `counts` every statistic whose relabeled difference is at
    /// least as extreme as `observed`.
    fn tally(
        &mut self,
        pooled: &[f64],
        chosen: impl IntoIterator<Item = usize>,
        observed: &PerStatistic<Option<f64>>,
        counts: &mut PerStatistic<u64>,
    ) {
        self.member.iter_mut().for_each(|m| *m = false);
        for i in chosen {
            self.member[i] = true;
        }
        self.first.clear();
        self.second.clear();
        for (&x, &m) in pooled.iter().zip(&self.member) {
            if m {
                self.first.push(x);
            } else {
                self.second.push(x);
            }
        }
        let permuted = abs_diffs(
            &moments_unchecked(&self.first),
            &moments_unchecked(&self.second),
        );
        for stat in Statistic::ALL {
            if let Some(d) = observed.get(stat) {
                let extreme = match permuted.get(stat) {
                    Some(dp) => *dp >= d * (1.0 - TIE_RTOL),
                    None => true,
                };
                if extreme {
                    *counts.get_mut(stat) += 1;
                }
            }
        }
    }
}

fn add_counts(mut x: PerStatistic<u64>, y: PerStatistic<u64>) -> PerStatistic<u64> {
    for s in Statistic::ALL {
        *x.get_mut(s) += *y.get(s);
    }
    x
}

fn assemble(
    a: &[f64],
    b: &[f64],
    observed: PerStatistic<Option<f64>>,
    p_of: impl Fn(u64) -> f64,
    counts: PerStatistic<u64>,
    permutations: u64,
    seed: u64,
    exact: bool,
) -> PermutationResult {
    let moments_a = moments_unchecked(a);
    let moments_b = moments_unchecked(b);
    let p_values = observed.map(|s, d| d.map(|_| p_of(*counts.get(s))));
    let skipped = Statistic::ALL
        .into_iter()
        .filter(|s| observed.get(*s).is_none())
        .collect();
    PermutationResult {
        group_a: "a".into(),
        group_b: "b".into(),
        n_a: a.len(),
        n_b: b.len(),
        moments_a,
        moments_b,
        observed,
        p_values,
        permutations,
        seed,
        exact,
        skipped,
    }
}

/// Randomized permutation test with `l` relabelings drawn from `seed`.
pub fn permutation_test(a: &[f64], b: &[f64], l: u64, seed: u64) -> Result<PermutationResult> {
    validate(a, b)?;
    if l < 1 {
        return Err(Error::InvalidArgument(
            "the number of permutations must be at least 1".into(),
        ));
    }
    let pair = CanonicalPair::new(a, b);
    let observed = pair.observed();
    let n = pair.pooled.len();
    let master = ChaCha8Rng::seed_from_u64(seed);

    let chunks = l.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut relabeler = Relabeler::new(n);
            let mut counts = PerStatistic::<u64>::default();
            for i in chunk * CHUNK..((chunk + 1) * CHUNK).min(l) {
                let mut rng = master.clone();
                rng.set_stream(i);
                let chosen = index::sample(&mut rng, n, pair.n_first);
                relabeler.tally(&pair.pooled, chosen, &observed, &mut counts);
            }
            counts
        })
        .reduce(PerStatistic::default, add_counts);

    let lf = l as f64;
    Ok(assemble(
        a,
        b,
        observed,
        |c| (1.0 + c as f64) / (1.0 + lf),
        counts,
        l,
        seed,
        false,
    ))
}

/// Number of distinct ways to split `n_a + n_b` values into groups of sizes
/// `n_a` and `n_b`, or `None` past `u128`.
pub fn assignment_count(n_a: usize, n_b: usize) -> Option<u128> {
    let n = (n_a + n_b) as u128;
    let r = n_a.min(n_b) as u128;
    let mut c: u128 = 1;
    for i in 0..r {
        // c * (n - i) is divisible by (i + 1) at every step
        c = c.checked_mul(n - i)? / (i + 1);
    }
    Some(c)
}

/// Exact permutation test by full enumeration of the assignments.
pub fn exact_permutation_test(
    a: &[f64],
    b: &[f64],
    max_assignments: u64,
) -> Result<PermutationResult> {
    validate(a, b)?;
    let total = assignment_count(a.len(), b.len()).unwrap_or(u128::MAX);
    if total > max_assignments as u128 {
        return Err(Error::EnumerationTooLarge {
            needed: total,
            limit: max_assignments,
        });
    }
    let total = total as u64;
    let pair = CanonicalPair::new(a, b);
    let observed = pair.observed();
    let n = pair.pooled.len();

    let mut relabeler = Relabeler::new(n);
    let mut counts = PerStatistic::<u64>::default();
    for chosen in (0..n).combinations(pair.n_first) {
        relabeler.tally(&pair.pooled, chosen, &observed, &mut counts);
    }

    let tf = total as f64;
    Ok(assemble(
        a,
        b,
        observed,
        |c| c as f64 / tf,
        counts,
        total,
        0,
        true,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_pair_skips_shape_statistics() {
        let o = observed_diffs(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(o.diffs.mean, Some(1.0));
        assert_eq!(o.diffs.variance, None);
        assert_eq!(o.diffs.skewness, None);
        assert_eq!(o.diffs.kurtosis, None);
    }

    #[test]
    fn shifted_samples_differ_only_in_mean() {
        let o = observed_diffs(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((o.diffs.mean.unwrap() - 1.0).abs() < 1e-15);
        assert!(o.diffs.variance.unwrap().abs() < 1e-15);
        assert!(o.diffs.skewness.unwrap().abs() < 1e-12);
        assert!(o.diffs.kurtosis.unwrap().abs() < 1e-12);
    }

    #[test]
    fn identical_samples_have_zero_differences() {
        let x = [0.5, -1.0, 3.0, 2.0, 2.0];
        let o = observed_diffs(&x, &x).unwrap();
        for (_, d) in o.diffs.iter() {
            assert_eq!(*d, Some(0.0));
        }
    }

    #[test]
    fn empty_samples_are_rejected() {
        assert!(observed_diffs(&[], &[1.0]).is_err());
        assert!(permutation_test(&[1.0], &[], 10, 1).is_err());
        assert!(exact_permutation_test(&[], &[1.0], 10).is_err());
        assert!(matches!(
            permutation_test(&[1.0], &[2.0], 0, 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn counts_assignments() {
        assert_eq!(assignment_count(5, 5), Some(252));
        assert_eq!(assignment_count(2, 2), Some(6));
        assert_eq!(assignment_count(1, 0), Some(1));
        assert_eq!(assignment_count(30, 30), Some(118_264_581_564_861_424));
        assert_eq!(assignment_count(200, 200), None);
    }

    #[test]
    fn exact_small_fixtures() {
        let r = exact_permutation_test(&[0.0, 0.0], &[1.0, 1.0], 100).unwrap();
        assert_eq!(r.permutations, 6);
        assert!(r.exact);
        assert_eq!(r.p_values.mean, Some(2.0 / 6.0));
        assert_eq!(r.skipped, vec![Statistic::Variance, Statistic::Skewness, Statistic::Kurtosis]);

        let r = exact_permutation_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[6.0, 7.0, 8.0, 9.0, 10.0], 1000)
            .unwrap();
        assert_eq!(r.permutations, 252);
        assert_eq!(r.p_values.mean, Some(2.0 / 252.0));

        let r = exact_permutation_test(&[3.0; 4], &[3.0; 3], 1000).unwrap();
        assert_eq!(r.p_values.mean, Some(1.0));
    }

    #[test]
    fn enumeration_limit() {
        let a: Vec<f64> = (0..15).map(f64::from).collect();
        let b: Vec<f64> = (15..30).map(f64::from).collect();
        assert!(matches!(
            exact_permutation_test(&a, &b, DEFAULT_MAX_ASSIGNMENTS),
            Err(Error::EnumerationTooLarge { needed: 155_117_520, .. })
        ));
    }

    #[test]
    fn randomized_converges_on_two_by_two() {
        let r = permutation_test(&[0.0, 0.0], &[1.0, 1.0], 10_000, 3).unwrap();
        assert!((r.p_values.mean.unwrap() - 1.0 / 3.0).abs() < 0.05);
        assert!(!r.exact);
        assert_eq!(r.permutations, 10_000);
    }

    #[test]
    fn equal_samples_give_p_one() {
        let x = [0.3, 1.2, -0.7, 2.2, 0.3];
        let r = permutation_test(&x, &x, 500, 9).unwrap();
        for (_, p) in r.p_values.iter() {
            assert_eq!(*p, Some(1.0));
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = [0.1, 0.5, 0.9, 1.4, 2.0, -0.3];
        let b = [1.1, 1.5, 0.2, 2.4, 3.0];
        let r1 = permutation_test(&a, &b, 2000, 77).unwrap();
        let r2 = permutation_test(&a, &b, 2000, 77).unwrap();
        assert_eq!(r1, r2);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let r3 = pool.install(|| permutation_test(&a, &b, 2000, 77).unwrap());
        assert_eq!(r1, r3);
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-20.0f64..20.0, 1..8)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn argument_order_does_not_matter(a in sample(), b in sample(), seed in any::<u64>()) {
            let ab = permutation_test(&a, &b, 300, seed).unwrap();
            let ba = permutation_test(&b, &a, 300, seed).unwrap();
            prop_assert_eq!(ab.p_values, ba.p_values);
            prop_assert_eq!(ab.moments_a, ba.moments_b);
        }

        #[test]
        fn p_values_are_valid(a in sample(), b in sample(), seed in any::<u64>()) {
            let r = permutation_test(&a, &b, 200, seed).unwrap();
            for s in Statistic::ALL {
                let in_p = r.p_values.get(s).is_some();
                let in_skipped = r.skipped.contains(&s);
                prop_assert!(in_p != in_skipped);
                if let Some(p) = r.p_values.get(s) {
                    prop_assert!(*p > 0.0 && *p <= 1.0);
                }
            }
        }

        #[test]
        fn exact_p_never_zero(a in sample(), b in sample()) {
            let r = exact_permutation_test(&a, &b, 10_000).unwrap();
            prop_assert_eq!(r.permutations as u128, assignment_count(a.len(), b.len()).unwrap());
            for (_, p) in r.p_values.iter() {
                if let Some(p) = p {
                    prop_assert!(*p > 0.0 && *p <= 1.0);
                }
            }
        }

        #[test]
        fn larger_shift_never_weakens_mean_evidence(
            a in prop::collection::btree_set(-1000i32..1000, 2..6),
            b in prop::collection::btree_set(-1000i32..1000, 2..6),
            c1 in 0.0f64..50.0,
            dc in 0.0f64..50.0,
        ) {
            let a: Vec<f64> = a.into_iter().map(|v| v as f64 / 10.0).collect();
            let b: Vec<f64> = b.into_iter().map(|v| v as f64 / 10.0).collect();
            // start from a b whose mean is not below a's, so every shift widens the gap
            let gap = a.iter().sum::<f64>() / a.len() as f64 - b.iter().sum::<f64>() / b.len() as f64;
            let b: Vec<f64> = b.iter().map(|x| x + gap.max(0.0)).collect();
            let shifted = |c: f64| b.iter().map(|x| x + c).collect::<Vec<f64>>();
            let p1 = exact_permutation_test(&a, &shifted(c1), 10_000).unwrap().p_values.mean.unwrap();
            let p2 = exact_permutation_test(&a, &shifted(c1 + dc), 10_000).unwrap().p_values.mean.unwrap();
            prop_assert!(p2 <= p1 + 1e-12, "p({}) = {} > p({}) = {}", c1 + dc, p2, c1, p1);
        }
    }
}
