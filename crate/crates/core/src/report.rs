//! Rendering audit reports and exporting error-distribution plot data.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audit::{AuditReport, GroupedErrors, Verdict};
use crate::error::{Error, Result};
use crate::moments::MomentSet;
use crate::permtest::{PerStatistic, Statistic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Markdown,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(Error::InvalidArgument(format!("unknown report format '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportDocument {
    pub format: Format,
    pub content: String,
}

pub fn render_report(report: &AuditReport, format: Format) -> ReportDocument {
    let content = match format {
        Format::Json => to_json(report),
        Format::Markdown => to_markdown(report),
    };
    ReportDocument { format, content }
}

/// Pretty JSON with a trailing newline. Field order follows the struct
/// definitions, so equal reports always serialize to equal bytes.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize infallibly");
    s.push('\n');
    s
}

struct Units {
    percent: bool,
}

impl Units {
    fn level(&self, v: f64) -> String {
        if self.percent {
            format!("{:.2}%", v * 100.0)
        } else {
            format!("{v:.4}")
        }
    }

    fn unit_suffix(&self) -> &'static str {
        if self.percent {
            " (%)"
        } else {
            ""
        }
    }
}

fn shape(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn bold_if(s: String, on: bool) -> String {
    if on {
        format!("**{s}**")
    } else {
        s
    }
}

fn moment_cells(m: &MomentSet, units: &Units) -> PerStatistic<String> {
    PerStatistic {
        mean: units.level(m.mean),
        variance: units.level(m.std_dev()),
        skewness: shape(m.skewness),
        kurtosis: shape(m.kurtosis),
    }
}

fn p_cell(p: Option<f64>) -> String {
    p.map_or_else(|| "skipped".to_string(), |p| format!("{p:.5}"))
}

/// Grid of post hoc pairs: for each statistic, one column per side of the
/// pair. Cells are bold when that statistic differs significantly. The
/// dispersion column shows σ rather than σ² so it shares the mean's unit.
///
/// `rows` pairs a row prefix (e.g. a model name, may be empty) with a report.
pub fn posthoc_grid(rows: &[(&str, &AuditReport)]) -> String {
    let percent = rows.iter().any(|(_, r)| r.config.metric.is_percentage());
    let units = Units { percent };
    let u = units.unit_suffix();
    let named = rows.iter().any(|(name, _)| !name.is_empty());
    let (head, rule) = if named { ("| | ", "|---") } else { ("| ", "") };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{head}pair | μ{u} A | μ{u} B | σ{u} A | σ{u} B | ψ A | ψ B | κ A | κ B |"
    );
    let _ = writeln!(out, "{rule}|---|---:|---:|---:|---:|---:|---:|---:|---:|");
    for (name, report) in rows {
        for pair in &report.posthoc {
            let t = &pair.test;
            let a = moment_cells(&t.moments_a, &units);
            let b = moment_cells(&t.moments_b, &units);
            let mut line = if named { format!("| {name} ") } else { String::new() };
            let _ = write!(line, "| {} vs {} |", t.group_a, t.group_b);
            for stat in Statistic::ALL {
                let sig = *pair.significant.get(stat);
                let _ = write!(
                    line,
                    " {} | {} |",
                    bold_if(a.get(stat).clone(), sig),
                    bold_if(b.get(stat).clone(), sig)
                );
            }
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

fn to_markdown(report: &AuditReport) -> String {
    let units = Units {
        percent: report.config.metric.is_percentage(),
    };
    let u = units.unit_suffix();
    let ad = &report.ad_test;
    let c = &report.config;
    let mut out = String::new();

    out.push_str("## Error parity audit\n\n");
    let _ = writeln!(
        out,
        "- metric: {} | alpha: {} | permutations: {} | seed: {} | ties: {} | correction: {}",
        c.metric, c.alpha, c.permutations, c.seed, c.tie_mode, c.correction
    );
    let p_note = if ad.p_floored {
        " (floored)"
    } else if ad.p_capped {
        " (capped)"
    } else {
        ""
    };
    let _ = writeln!(
        out,
        "- Anderson-Darling: k = {}, N = {}, A² = {:.4}, T = {:.4}, critical value = {:.4}, p ≈ {:.4}{p_note}",
        ad.k, ad.n_total, ad.a2, ad.t, ad.critical_value, ad.p_value
    );
    let _ = writeln!(
        out,
        "- verdict: **{}**{}\n",
        report.verdict,
        match report.verdict {
            Verdict::Fair => " (error distributions are indistinguishable across groups)",
            Verdict::Unfair => " (at least one group's error distribution differs)",
        }
    );

    out.push_str("### Groups\n\n");
    let _ = writeln!(out, "| group | n | μ{u} | σ{u} | ψ | κ | mean abs. error{u} | sd abs. error{u} |");
    out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|\n");
    for g in &report.groups {
        let m = moment_cells(&g.moments, &units);
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            g.label,
            g.n,
            m.mean,
            m.variance,
            m.skewness,
            m.kurtosis,
            units.level(g.abs_error_mean),
            units.level(g.abs_error_sd)
        );
    }

    if !report.posthoc.is_empty() {
        out.push_str("\n### Post hoc comparisons\n\n");
        let _ = writeln!(
            out,
            "Bold cells differ significantly at alpha = {} (correction: {}).\n",
            c.alpha, c.correction
        );
        out.push_str(&posthoc_grid(&[("", report)]));
        out.push_str("\n| pair | p(μ) | p(σ²) | p(ψ) | p(κ) | permutations | seed |\n");
        out.push_str("|---|---:|---:|---:|---:|---:|---:|\n");
        for pair in &report.posthoc {
            let t = &pair.test;
            let p = &pair.adjusted_p_values;
            let _ = writeln!(
                out,
                "| {} vs {} | {} | {} | {} | {} | {} | {} |",
                t.group_a,
                t.group_b,
                p_cell(p.mean),
                p_cell(p.variance),
                p_cell(p.skewness),
                p_cell(p.kurtosis),
                t.permutations,
                t.seed
            );
        }
    }

    if !report.warnings.is_empty() {
        out.push_str("\n### Warnings\n\n");
        for w in &report.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}

/// Histogram and ECDF of one group's retained errors over shared bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDistribution {
    pub label: String,
    pub total: usize,
    pub retained: usize,
    pub excluded: usize,
    pub excluded_fraction: f64,
    pub excluded_mean: Option<f64>,
    pub counts: Vec<usize>,
    /// Bin counts as fractions of the group total.
    pub histogram: Vec<f64>,
    /// Cumulative fraction of the group total at each upper bin edge; ends at
    /// `retained / total`.
    pub ecdf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionData {
    pub edges: Vec<f64>,
    pub clip: Option<f64>,
    pub groups: Vec<GroupDistribution>,
}

impl DistributionData {
    pub const CSV_HEADER: &'static str = "group,series,lower,upper,count,value";

    /// Long-format CSV: one `histogram` and one `ecdf` row per group and bin,
    /// followed by `excluded_fraction` and `excluded_mean` rows per group.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        self.write_rows(&mut out, "");
        out
    }

    /// Rows without a header, each prefixed with `prefix` (which should end
    /// in a comma when nonempty).
    pub fn write_rows(&self, out: &mut String, prefix: &str) {
        for g in &self.groups {
            let label = csv_field(&g.label);
            for (i, (&count, &frac)) in g.counts.iter().zip(&g.histogram).enumerate() {
                let (lo, hi) = (self.edges[i], self.edges[i + 1]);
                let _ = writeln!(out, "{prefix}{label},histogram,{lo},{hi},{count},{frac}");
            }
            let mut cumulative = 0;
            for (i, (&count, &frac)) in g.counts.iter().zip(&g.ecdf).enumerate() {
                cumulative += count;
                let (lo, hi) = (self.edges[i], self.edges[i + 1]);
                let _ = writeln!(out, "{prefix}{label},ecdf,{lo},{hi},{cumulative},{frac}");
            }
            let _ = writeln!(
                out,
                "{prefix}{label},excluded_fraction,,,{},{}",
                g.excluded, g.excluded_fraction
            );
            let mean = g.excluded_mean.map_or_else(String::new, |m| m.to_string());
            let _ = writeln!(out, "{prefix}{label},excluded_mean,,,{},{mean}", g.excluded);
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Bins every group's errors on shared edges. Values above `clip` are left
/// out of the bins and summarized per group instead.
pub fn export_distribution_data(
    grouped: &GroupedErrors,
    bins: usize,
    clip: Option<f64>,
) -> Result<DistributionData> {
    if bins < 2 {
        return Err(Error::InvalidArgument(format!("at least 2 bins are required, got {bins}")));
    }
    let keep = |v: f64| clip.is_none_or(|c| v <= c);
    let (lo, hi) = grouped
        .groups
        .iter()
        .flat_map(|g| g.values.iter().copied())
        .filter(|&v| keep(v))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (lo, hi) = if lo > hi {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let (lo, hi) = match clip {
        // widening a degenerate range must not cross the clip
        Some(c) if hi > c => (lo.min(c - 1.0), c),
        _ => (lo, hi),
    };
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
    edges.push(hi);

    let groups = grouped
        .groups
        .iter()
        .map(|g| {
            let total = g.values.len();
            let mut counts = vec![0usize; bins];
            let mut excluded = 0usize;
            let mut excluded_sum = 0.0;
            for &v in &g.values {
                if keep(v) {
                    let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
                    counts[idx] += 1;
                } else {
                    excluded += 1;
                    excluded_sum += v;
                }
            }
            let tf = total as f64;
            let histogram = counts.iter().map(|&c| c as f64 / tf).collect();
            let mut running = 0usize;
            let ecdf = counts
                .iter()
                .map(|&c| {
                    running += c;
                    running as f64 / tf
                })
                .collect();
            GroupDistribution {
                label: g.label.clone(),
                total,
                retained: total - excluded,
                excluded,
                excluded_fraction: excluded as f64 / tf,
                excluded_mean: (excluded > 0).then(|| excluded_sum / excluded as f64),
                counts,
                histogram,
                ecdf,
            }
        })
        .collect();

    Ok(DistributionData {
        edges,
        clip,
        groups,
    })
}
