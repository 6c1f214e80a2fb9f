//! End-to-end runs of the binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn county_forecasts() -> String {
    fixture("county_forecasts.csv").display().to_string()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_error-parity")).args(args).output().unwrap()
}

fn audit_args<'a>(input: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![
        "audit", "--input", input, "--truth-col", "truth", "--label-threshold", "prop:0.598:W:N",
        "--min-truth", "100", "--permutations", "2000",
    ];
    v.extend_from_slice(extra);
    v
}

#[test]
fn fail_on_unfair_sets_exit_code() {
    let input = county_forecasts();
    let fair = run(&audit_args(&input, &["--pred-col", "model_a", "--fail-on-unfair"]));
    assert_eq!(fair.status.code(), Some(0), "{}", String::from_utf8_lossy(&fair.stderr));
    let report: Value = serde_json::from_slice(&fair.stdout).unwrap();
    assert_eq!(report["audits"][0]["report"]["verdict"], "fair");

    let unfair = run(&audit_args(&input, &["--pred-col", "model_b"]));
    assert_eq!(unfair.status.code(), Some(0));
    let unfair = run(&audit_args(&input, &["--pred-col", "model_b", "--fail-on-unfair"]));
    assert_eq!(unfair.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&unfair.stdout).unwrap();
    assert_eq!(report["audits"][0]["report"]["verdict"], "unfair");
}

#[test]
fn data_errors_exit_3() {
    let input = county_forecasts();
    let missing = run(&audit_args(&input, &["--pred-col", "model_z"]));
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("model_z"));

    // zero ground truths are only filtered with --min-truth
    let out = run(&[
        "audit", "--input", &input, "--truth-col", "truth", "--pred-col", "model_a",
        "--label-threshold", "prop:0.598:W:N",
    ]);
    assert_eq!(out.status.code(), Some(3));

    let nofile = run(&audit_args("/nonexistent/file.csv", &["--pred-col", "model_a"]));
    assert_eq!(nofile.status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "g,truth,p\na,1,2\nb,x,3\n").unwrap();
    let out = run(&[
        "audit", "--input", bad.to_str().unwrap(), "--truth-col", "truth", "--pred-col", "p",
        "--group-col", "g",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}

#[test]
fn usage_errors_exit_2() {
    let input = county_forecasts();
    for extra in [
        &["--pred-col", "model_a", "--alpha", "0.2"][..],
        &["--pred-col", "model_a", "--metric", "cubed"],
        &["--pred-col", "model_a", "--label-threshold", "prop:W:N"],
        &["--pred-col", "model_a", "--permutations", "0"],
    ] {
        let out = run(&audit_args(&input, extra));
        assert_eq!(out.status.code(), Some(2), "{extra:?}");
    }
    let out = run(&["audit", "--input", &input, "--truth-col", "truth", "--pred-col", "model_a"]);
    assert_eq!(out.status.code(), Some(2), "no grouping given");
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn markdown_and_plot_data() {
    let input = county_forecasts();
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.md");
    let plot = dir.path().join("plot.csv");
    let out = run(&audit_args(
        &input,
        &[
            "--pred-col", "model_a", "--pred-col", "model_b", "--format", "markdown", "--output",
            report.to_str().unwrap(), "--plot-data", plot.to_str().unwrap(), "--clip", "0.1",
            "--bins", "20",
        ],
    ));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let md = std::fs::read_to_string(report).unwrap();
    assert!(md.contains("| model_b / prop | N vs W |"));
    assert!(md.contains("# model_a by prop"));
    assert!(md.contains('%'));

    let plot = std::fs::read_to_string(plot).unwrap();
    let mut lines = plot.lines();
    assert_eq!(lines.next(), Some("prediction,grouping,group,series,lower,upper,count,value"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // 2 models x 2 groups x (20 histogram + 20 ecdf + 2 summary rows)
    assert_eq!(rows.len(), 2 * 2 * 42);
    for r in rows.iter().filter(|r| r[3] == "histogram") {
        assert!(r[5].parse::<f64>().unwrap() <= 0.1);
    }
    assert!(rows.iter().any(|r| r[3] == "excluded_fraction" && r[6] != "0"));
}

#[test]
fn intersections_and_multiple_groupings() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let mut text = String::from("sex,prop,truth,pred\n");
    for i in 0..240 {
        let sex = if i % 2 == 0 { "f" } else { "m" };
        let prop = (i % 5) as f64 / 5.0;
        let err = ((i * 37) % 17) as f64 - 8.0;
        text.push_str(&format!("{sex},{prop},100,{}\n", 100.0 + err));
    }
    std::fs::write(&path, text).unwrap();
    let out = run(&[
        "audit", "--input", path.to_str().unwrap(), "--truth-col", "truth", "--pred-col", "pred",
        "--group-col", "sex", "--label-threshold", "prop:0.5:hi:lo", "--intersect",
        "--permutations", "500", "--metric", "difference",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v["audits"].as_array().unwrap().iter().map(|a| a["grouping"].as_str().unwrap()).collect();
    assert_eq!(names, ["sex", "prop", "sex|prop"]);
    let inter = &v["audits"][2]["report"]["groups"];
    let labels: Vec<&str> = inter.as_array().unwrap().iter().map(|g| g["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["f|hi", "f|lo", "m|hi", "m|lo"]);
    assert_eq!(v["audits"][2]["report"]["config"]["seed"], 42);
}

#[test]
fn exact_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.csv");
    let mut text = String::from("g,truth,pred\n");
    for i in 1..=10 {
        text.push_str(&format!("{},0,{i}\n", if i <= 5 { "a" } else { "b" }));
    }
    std::fs::write(&path, text).unwrap();
    let base = [
        "exact", "--input", path.to_str().unwrap(), "--truth-col", "truth", "--pred-col", "pred",
        "--group-col", "g", "--metric", "difference",
    ];
    let out = run(&base);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let pair = &v["results"][0]["pairs"][0];
    assert_eq!(pair["p_values"]["mean"].as_f64().unwrap(), 2.0 / 252.0);
    assert_eq!(pair["exact"], true);
    assert_eq!(pair["permutations"], 252);

    let mut limited = base.to_vec();
    limited.extend(["--max-assignments", "100"]);
    assert_eq!(run(&limited).status.code(), Some(2));
}

#[test]
fn simulate_subcommand() {
    let args = [
        "simulate", "--family", "normal", "--shift", "1.0", "--n", "40", "--trials", "20",
        "--alpha", "0.05", "--permutations", "200", "--seed", "3",
    ];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["trials"], 20);
    assert_eq!(v["log"].as_array().unwrap().len(), 20);
    assert!(v["rate"].as_f64().unwrap() > 0.5);
    let mut one = vec!["--threads", "1"];
    one.extend_from_slice(&args);
    assert_eq!(run(&one).stdout, a.stdout);
}
