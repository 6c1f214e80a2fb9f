//! Command-line front end. The binary is a thin wrapper around [`run`].

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::adtest::TieMode;
use crate::audit::{
    audit_grouped, intersect_labels, partition_errors, AuditConfig, AuditReport, Correction,
    GroupedErrors, Verdict, INTERSECTION_SEPARATOR,
};
use crate::calibrate::{simulate_rejection_rate, Family, GeneratorSpec, Simulation};
use crate::error::{Error, Result};
use crate::ingest::{derive_binary_labels, filter_min_truth, load_csv, Dataset, Schema};
use crate::metrics::{compute_errors, ErrorMetric};
use crate::permtest::{exact_permutation_test, PermutationResult, DEFAULT_MAX_ASSIGNMENTS};
use crate::report::{export_distribution_data, posthoc_grid, render_report, to_json, DistributionData, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNFAIR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "error-parity", version, about = "Audit regression models for error parity across groups")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the omnibus test and post hoc analysis on a CSV file.
    Audit(AuditArgs),
    /// Estimate type-I error or power on synthetic groups.
    Simulate(SimulateArgs),
    /// Exact permutation tests for every pair of groups (small samples).
    Exact(ExactArgs),
}

/// `column:threshold:above:at_or_below`, e.g. `prop:0.598:W:N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelThreshold {
    pub column: String,
    pub threshold: f64,
    pub above: String,
    pub at_or_below: String,
}

impl std::str::FromStr for LabelThreshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        // split from the right so column names may contain ':'
        let parts: Vec<&str> = s.rsplitn(4, ':').collect();
        let bad = || Error::InvalidArgument(format!("expected column:threshold:above:below, got '{s}'"));
        let [below, above, threshold, column] = parts[..] else {
            return Err(bad());
        };
        let threshold: f64 = threshold.trim().parse().map_err(|_| bad())?;
        if column.is_empty() || above.is_empty() || below.is_empty() || !threshold.is_finite() {
            return Err(bad());
        }
        if above == below {
            return Err(Error::InvalidArgument(format!("threshold labels must differ, got '{above}' twice")));
        }
        Ok(LabelThreshold {
            column: column.to_string(),
            threshold,
            above: above.to_string(),
            at_or_below: below.to_string(),
        })
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Prediction column; repeat to audit several models.
    #[arg(long = "pred-col", required = true)]
    pub pred_cols: Vec<String>,
    /// Ground-truth column.
    #[arg(long = "truth-col")]
    pub truth_col: String,
    /// Categorical grouping column; repeat to audit each one.
    #[arg(long = "group-col")]
    pub group_cols: Vec<String>,
    /// Groups by a numeric column split at a threshold: `col:t:above:below`.
    #[arg(long = "label-threshold")]
    pub label_thresholds: Vec<LabelThreshold>,
    /// Also audit the intersection of all groupings.
    #[arg(long)]
    pub intersect: bool,
    /// Drop rows whose ground truth is below this value.
    #[arg(long = "min-truth")]
    pub min_truth: Option<f64>,
    /// difference, absolute, squared-signed, squared, percentage,
    /// symmetric-percentage or identity.
    #[arg(long, default_value = "percentage")]
    pub metric: ErrorMetric,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Significance level: 0.25, 0.10, 0.05, 0.025 or 0.01.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100_000)]
    pub permutations: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Multiple-comparison correction: none, holm or bonferroni.
    #[arg(long, default_value = "none")]
    pub correction: Correction,
    #[arg(long = "tie-mode", default_value = "midrank")]
    pub tie_mode: TieMode,
    /// Groups smaller than this are left out with a warning.
    #[arg(long = "min-group-size", default_value_t = 10)]
    pub min_group_size: usize,
    #[arg(long, default_value = "json")]
    pub format: Format,
    /// Writes histogram and ECDF series of the errors to this CSV file.
    #[arg(long = "plot-data")]
    pub plot_data: Option<PathBuf>,
    /// Upper cut for the plot data; larger errors are summarized separately.
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Exit with status 1 when any audit is unfair.
    #[arg(long = "fail-on-unfair")]
    pub fail_on_unfair: bool,
    /// Report destination (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "normal")]
    pub family: Family,
    /// Location shift of the last group.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub shift: f64,
    /// Observations per group.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub groups: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    pub permutations: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Leave the per-trial log out of the output.
    #[arg(long = "summary-only")]
    pub summary_only: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long = "max-assignments", default_value_t = DEFAULT_MAX_ASSIGNMENTS)]
    pub max_assignments: u64,
    #[arg(long = "min-group-size", default_value_t = 1)]
    pub min_group_size: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// One grouping of the rows: a name and a label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    pub name: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct AuditEntry {
    pub prediction: String,
    pub grouping: String,
    pub rows: usize,
    pub rows_filtered: usize,
    pub report: AuditReport,
}

#[derive(Debug, Serialize)]
pub struct AuditOutput {
    pub audits: Vec<AuditEntry>,
}

#[derive(Debug, Serialize)]
pub struct ExactEntry {
    pub prediction: String,
    pub grouping: String,
    pub pairs: Vec<PermutationResult>,
}

#[derive(Debug, Serialize)]
pub struct ExactOutput {
    pub max_assignments: u64,
    pub results: Vec<ExactEntry>,
}

fn delimiter_byte(c: char) -> Result<u8> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Error::InvalidArgument(format!("delimiter must be a single ASCII character, got '{c}'")))
}

/// Loads the CSV and builds every requested grouping, in order: the
/// categorical columns, the threshold columns, then their intersection.
pub fn load_groupings(args: &InputArgs) -> Result<(Dataset, Vec<Grouping>)> {
    if args.group_cols.is_empty() && args.label_thresholds.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one --group-col or --label-threshold is required".into(),
        ));
    }
    let mut schema = Schema::new(&args.truth_col);
    schema.delimiter = delimiter_byte(args.delimiter)?;
    for p in &args.pred_cols {
        schema = schema.pred(p);
    }
    for g in &args.group_cols {
        schema = schema.label(g);
    }
    for t in &args.label_thresholds {
        schema = schema.label_source(&t.column);
    }
    let mut data = load_csv(&args.input, &schema)?;
    if let Some(min) = args.min_truth {
        if !min.is_finite() {
            return Err(Error::InvalidArgument(format!("--min-truth must be finite, got {min}")));
        }
        data = filter_min_truth(&data, min);
    }
    if data.is_empty() {
        return Err(Error::Empty("rows after filtering"));
    }

    let mut groupings: Vec<Grouping> = Vec::new();
    for g in &args.group_cols {
        let labels = data.label(g).expect("schema column").to_vec();
        groupings.push(Grouping {
            name: g.clone(),
            labels,
        });
    }
    for t in &args.label_thresholds {
        let values = data.label_source(&t.column).expect("schema column");
        groupings.push(Grouping {
            name: t.column.clone(),
            labels: derive_binary_labels(values, t.threshold, &t.above, &t.at_or_below),
        });
    }
    if args.intersect {
        if groupings.len() < 2 {
            return Err(Error::InvalidArgument("--intersect needs at least two groupings".into()));
        }
        let columns: Vec<Vec<String>> = groupings.iter().map(|g| g.labels.clone()).collect();
        let name = groupings.iter().map(|g| g.name.as_str()).collect::<Vec<_>>().join(INTERSECTION_SEPARATOR);
        groupings.push(Grouping {
            name,
            labels: intersect_labels(&columns)?,
        });
    }
    Ok((data, groupings))
}

fn grouped_for(data: &Dataset, pred: &str, metric: ErrorMetric, grouping: &Grouping, min_size: usize) -> Result<GroupedErrors> {
    let errors = compute_errors(data.pred(pred).expect("schema column"), &data.truth.values, metric)
        .map_err(|e| e.context(format!("errors of '{pred}'")))?;
    partition_errors(&errors, &grouping.labels, min_size)
        .map_err(|e| e.context(format!("grouping '{}'", grouping.name)))
}

pub fn run_audit_command(args: &AuditArgs) -> Result<(AuditOutput, Option<String>)> {
    let config = AuditConfig {
        metric: args.input.metric,
        alpha: args.alpha,
        permutations: args.permutations,
        seed: args.seed,
        tie_mode: args.tie_mode,
        min_group_size: args.min_group_size,
        correction: args.correction,
    };
    config.validate()?;
    if args.plot_data.is_some() && args.bins < 2 {
        return Err(Error::InvalidArgument(format!("--bins must be at least 2, got {}", args.bins)));
    }
    let (data, groupings) = load_groupings(&args.input)?;
    let mut audits = Vec::new();
    let mut plot = args.plot_data.as_ref().map(|_| {
        format!("prediction,grouping,{}\n", DistributionData::CSV_HEADER)
    });
    for pred in &args.input.pred_cols {
        for grouping in &groupings {
            let grouped = grouped_for(&data, pred, config.metric, grouping, config.min_group_size)?;
            let report = audit_grouped(&grouped, &config)
                .map_err(|e| e.context(format!("audit of '{pred}' by '{}'", grouping.name)))?;
            if let Some(out) = plot.as_mut() {
                let dist = export_distribution_data(&grouped, args.bins, args.clip)?;
                let prefix = format!("{},{},", csv_escape(pred), csv_escape(&grouping.name));
                dist.write_rows(out, &prefix);
            }
            audits.push(AuditEntry {
                prediction: pred.clone(),
                grouping: grouping.name.clone(),
                rows: data.len(),
                rows_filtered: data.filtered_rows,
                report,
            });
        }
    }
    Ok((AuditOutput { audits }, plot))
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Markdown for a multi-audit run: a summary, the combined post hoc grid,
/// then each report in full.
pub fn audit_markdown(output: &AuditOutput) -> String {
    let mut out = String::from("# Error parity audits\n\n| model | grouping | rows | filtered | T | p | verdict |\n|---|---|---:|---:|---:|---:|---|\n");
    for a in &output.audits {
        let ad = &a.report.ad_test;
        out.push_str(&format!(
            "| {} | {} | {} | {} | {:.4} | {:.4} | {} |\n",
            a.prediction, a.grouping, a.rows, a.rows_filtered, ad.t, ad.p_value, a.report.verdict
        ));
    }
    let names: Vec<String> = output.audits.iter().map(|a| format!("{} / {}", a.prediction, a.grouping)).collect();
    let rows: Vec<(&str, &AuditReport)> = names
        .iter()
        .zip(&output.audits)
        .filter(|(_, a)| !a.report.posthoc.is_empty())
        .map(|(n, a)| (n.as_str(), &a.report))
        .collect();
    if !rows.is_empty() {
        out.push_str("\nBold cells differ significantly between the two groups of the pair.\n\n");
        out.push_str(&posthoc_grid(&rows));
    }
    for a in &output.audits {
        out.push_str(&format!("\n# {} by {}\n\n", a.prediction, a.grouping));
        out.push_str(&render_report(&a.report, Format::Markdown).content);
    }
    out
}

pub fn run_simulate_command(args: &SimulateArgs) -> Result<Simulation> {
    if args.groups < 2 {
        return Err(Error::InvalidArgument(format!("--groups must be at least 2, got {}", args.groups)));
    }
    let spec = GeneratorSpec::shifted(args.family, args.n, args.groups, args.shift);
    let mut sim = simulate_rejection_rate(&spec, args.trials, args.alpha, args.permutations, args.seed)?;
    if args.summary_only {
        sim.log.clear();
    }
    Ok(sim)
}

pub fn run_exact_command(args: &ExactArgs) -> Result<ExactOutput> {
    let (data, groupings) = load_groupings(&args.input)?;
    let mut results = Vec::new();
    for pred in &args.input.pred_cols {
        for grouping in &groupings {
            let grouped = grouped_for(&data, pred, args.input.metric, grouping, args.min_group_size)?;
            let mut pairs = Vec::new();
            for (i, a) in grouped.groups.iter().enumerate() {
                for b in &grouped.groups[i + 1..] {
                    let r = exact_permutation_test(&a.values, &b.values, args.max_assignments)
                        .map_err(|e| e.context(format!("pair {} vs {}", a.label, b.label)))?;
                    pairs.push(r.with_labels(&a.label, &b.label));
                }
            }
            results.push(ExactEntry {
                prediction: pred.clone(),
                grouping: grouping.name.clone(),
                pairs,
            });
        }
    }
    Ok(ExactOutput {
        max_assignments: args.max_assignments,
        results,
    })
}

fn emit(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| Error::from(e).context(format!("writing {}", p.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Audit(args) => {
            let (output, plot) = run_audit_command(args)?;
            let content = match args.format {
                Format::Json => to_json(&output),
                Format::Markdown => audit_markdown(&output),
            };
            emit(args.output.as_deref(), &content)?;
            if let (Some(path), Some(plot)) = (&args.plot_data, plot) {
                emit(Some(path), &plot)?;
            }
            let unfair = output.audits.iter().any(|a| a.report.verdict == Verdict::Unfair);
            Ok(if unfair && args.fail_on_unfair { EXIT_UNFAIR } else { EXIT_OK })
        }
        Command::Simulate(args) => {
            let sim = run_simulate_command(args)?;
            emit(args.output.as_deref(), &to_json(&sim))?;
            Ok(EXIT_OK)
        }
        Command::Exact(args) => {
            let out = run_exact_command(args)?;
            emit(args.output.as_deref(), &to_json(&out))?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::InvalidArgument("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| execute(&cli))),
        None => execute(&cli),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_USAGE
            }
        }
    }
}
