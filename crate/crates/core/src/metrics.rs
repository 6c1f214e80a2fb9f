//! Error metrics: turning predictions and ground truths into the error vector
//! whose distribution is compared across groups.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a prediction/ground-truth pair is reduced to a single error value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMetric {
    /// `pred - truth`
    Difference,
    /// `|pred - truth|`
    #[serde(rename = "absolute")]
    AbsoluteDifference,
    /// `(pred - truth) * |pred - truth|`
    SquaredSigned,
    /// `(pred - truth)^2`
    Squared,
    /// `(pred - truth) / truth`, stored as a ratio.
    Percentage,
    /// `2 (pred - truth) / (pred + truth)`, with `0/0` defined as 0.
    SymmetricPercentage,
    /// The prediction itself; ground truth is ignored (equal-outcome audits).
    Identity,
}

impl ErrorMetric {
    pub const ALL: [ErrorMetric; 7] = [
        ErrorMetric::Difference,
        ErrorMetric::AbsoluteDifference,
        ErrorMetric::SquaredSigned,
        ErrorMetric::Squared,
        ErrorMetric::Percentage,
        ErrorMetric::SymmetricPercentage,
        ErrorMetric::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorMetric::Difference => "difference",
            ErrorMetric::AbsoluteDifference => "absolute",
            ErrorMetric::SquaredSigned => "squared-signed",
            ErrorMetric::Squared => "squared",
            ErrorMetric::Percentage => "percentage",
            ErrorMetric::SymmetricPercentage => "symmetric-percentage",
            ErrorMetric::Identity => "identity",
        }
    }

    /// Whether values are ratios that reports display as percentages.
    pub fn is_percentage(self) -> bool {
        matches!(
            self,
            ErrorMetric::Percentage | ErrorMetric::SymmetricPercentage
        )
    }

    pub fn uses_truth(self) -> bool {
        self != ErrorMetric::Identity
    }
}

impl fmt::Display for ErrorMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ErrorMetric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown error metric '{s}'")))
    }
}

/// Error values together with the metric that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorVector {
    pub values: Vec<f64>,
    pub metric: ErrorMetric,
}

impl ErrorVector {
    /// Wraps errors computed outside this crate (a custom metric).
    ///
    /// The values are used as-is and tagged [`ErrorMetric::Identity`].
    pub fn precomputed(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("error vector"));
        }
        check_finite(&values, "errors")?;
        Ok(ErrorVector {
            values,
            metric: ErrorMetric::Identity,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub(crate) fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(row) => Err(Error::NonFinite {
            what,
            row,
            value: values[row],
        }),
        None => Ok(()),
    }
}

/// Computes the error vector for `metric`. Row indices in errors are 0-based.
///
/// For [`ErrorMetric::Identity`] the truth slice may be empty.
pub fn compute_errors(pred: &[f64], truth: &[f64], metric: ErrorMetric) -> Result<ErrorVector> {
    if pred.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let truth_ignored = metric == ErrorMetric::Identity && truth.is_empty();
    if !truth_ignored && pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left_name: "predictions",
            left: pred.len(),
            right_name: "ground truths",
            right: truth.len(),
        });
    }
    check_finite(pred, "predictions")?;
    if metric == ErrorMetric::Identity {
        return Ok(ErrorVector {
            values: pred.to_vec(),
            metric,
        });
    }
    check_finite(truth, "ground truths")?;

    let values = pred
        .iter()
        .zip(truth)
        .enumerate()
        .map(|(row, (&p, &t))| {
            let diff = p - t;
            match metric {
                ErrorMetric::Difference => Ok(diff),
                ErrorMetric::AbsoluteDifference => Ok(diff.abs()),
                ErrorMetric::SquaredSigned => Ok(diff * diff.abs()),
                ErrorMetric::Squared => Ok(diff * diff),
                ErrorMetric::Percentage => {
                    if t == 0.0 {
                        Err(Error::ZeroTruth { row })
                    } else {
                        Ok(diff / t)
                    }
                }
                ErrorMetric::SymmetricPercentage => {
                    let sum = p + t;
                    if sum != 0.0 {
                        Ok(2.0 * diff / sum)
                    } else if diff == 0.0 {
                        Ok(0.0)
                    } else {
                        Err(Error::DegenerateDenominator { row })
                    }
                }
                ErrorMetric::Identity => unreachable!(),
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    // Finite inputs can still overflow (e.g. squaring 1e200).
    check_finite(&values, "errors")?;
    Ok(ErrorVector { values, metric })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn errs(pred: &[f64], truth: &[f64], metric: ErrorMetric) -> Vec<f64> {
        compute_errors(pred, truth, metric).unwrap().values
    }

    #[test]
    fn difference() {
        assert_eq!(
            errs(&[3.0, 5.0, 2.0], &[1.0, 5.0, 4.0], ErrorMetric::Difference),
            vec![2.0, 0.0, -2.0]
        );
    }

    #[test]
    fn percentage_is_a_ratio() {
        let r = errs(&[110.0], &[100.0], ErrorMetric::Percentage);
        assert!((r[0] - 0.10).abs() < 1e-15);
    }

    #[test]
    fn percentage_rejects_zero_truth() {
        let err = compute_errors(&[2.0, 1.0], &[1.0, 0.0], ErrorMetric::Percentage).unwrap_err();
        assert!(matches!(err, Error::ZeroTruth { row: 1 }));
    }

    #[test]
    fn symmetric_percentage_zero_over_zero() {
        assert_eq!(
            errs(&[0.0], &[0.0], ErrorMetric::SymmetricPercentage),
            vec![0.0]
        );
        assert_eq!(
            errs(&[3.0], &[1.0], ErrorMetric::SymmetricPercentage),
            vec![1.0]
        );
        let err = compute_errors(&[1.0], &[-1.0], ErrorMetric::SymmetricPercentage).unwrap_err();
        assert!(matches!(err, Error::DegenerateDenominator { row: 0 }));
    }

    #[test]
    fn identity_ignores_truth() {
        assert_eq!(errs(&[7.0], &[0.0], ErrorMetric::Identity), vec![7.0]);
        assert_eq!(errs(&[7.0, 8.0], &[], ErrorMetric::Identity), vec![7.0, 8.0]);
    }

    #[test]
    fn squared_variants() {
        assert_eq!(
            errs(&[1.0, 5.0], &[4.0, 3.0], ErrorMetric::SquaredSigned),
            vec![-9.0, 4.0]
        );
        assert_eq!(
            errs(&[1.0, 5.0], &[4.0, 3.0], ErrorMetric::Squared),
            vec![9.0, 4.0]
        );
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(matches!(
            compute_errors(&[1.0], &[1.0, 2.0], ErrorMetric::Difference),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            compute_errors(&[], &[], ErrorMetric::Difference),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            compute_errors(&[f64::NAN], &[1.0], ErrorMetric::Difference),
            Err(Error::NonFinite { row: 0, .. })
        ));
        assert!(matches!(
            compute_errors(&[1.0, 1.0], &[1.0, f64::INFINITY], ErrorMetric::Difference),
            Err(Error::NonFinite { row: 1, .. })
        ));
        assert!(matches!(
            compute_errors(&[1e200], &[-1e200], ErrorMetric::Squared),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn metric_names_round_trip() {
        for m in ErrorMetric::ALL {
            assert_eq!(m.name().parse::<ErrorMetric>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert!("mape".parse::<ErrorMetric>().is_err());
    }

    fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(-1e3f64..1e3, n),
                prop::collection::vec(-1e3f64..1e3, n),
            )
        })
    }

    proptest! {
        #[test]
        fn odd_metrics_negate_on_swap((p, t) in pairs()) {
            for m in [ErrorMetric::Difference, ErrorMetric::SquaredSigned] {
                let fwd = errs(&p, &t, m);
                let rev = errs(&t, &p, m);
                for (a, b) in fwd.iter().zip(&rev) {
                    prop_assert_eq!(*a, -*b);
                }
            }
        }

        #[test]
        fn absolute_and_squared_are_magnitudes((p, t) in pairs()) {
            let d = errs(&p, &t, ErrorMetric::Difference);
            let a = errs(&p, &t, ErrorMetric::AbsoluteDifference);
            let ss = errs(&p, &t, ErrorMetric::SquaredSigned);
            let s = errs(&p, &t, ErrorMetric::Squared);
            for i in 0..d.len() {
                prop_assert_eq!(a[i], d[i].abs());
                prop_assert_eq!(s[i], ss[i].abs());
            }
        }

        #[test]
        fn percentage_is_scale_invariant(
            (p, t) in pairs(),
            c in 0.01f64..100.0,
        ) {
            prop_assume!(t.iter().all(|&v| v.abs() > 1e-3));
            let base = errs(&p, &t, ErrorMetric::Percentage);
            let ps: Vec<f64> = p.iter().map(|v| v * c).collect();
            let ts: Vec<f64> = t.iter().map(|v| v * c).collect();
            let scaled = errs(&ps, &ts, ErrorMetric::Percentage);
            for (a, b) in base.iter().zip(&scaled) {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }

        #[test]
        fn identity_is_pred((p, t) in pairs()) {
            prop_assert_eq!(errs(&p, &t, ErrorMetric::Identity), p);
        }
    }
}
