use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{AggregateReportOf, RuleScoreOf, Summary, Thresholds};
use crate::scalar::Fraction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format '{other}' (markdown, csv, json)")),
        }
    }
}

fn pct<S: Fraction>(v: S) -> String {
    format!("{:.1}", v.to_f64_lossy() * 100.0)
}

fn stat<S: Fraction>(v: S) -> String {
    format!("{:.2}", v.to_f64_lossy())
}

/// The with/without module counts table on its own.
pub fn table1_markdown<S>(report: &AggregateReportOf<S>) -> String {
    let mut out = String::new();
    out.push_str("| | count |\n|---|---:|\n");
    let _ = writeln!(out, "| detected pieces without module information | {} |", report.count_without_module);
    let _ = writeln!(out, "| detected pieces with module information | {} |", report.count_with_module);
    let _ = writeln!(out, "| total number of complex alignment rules | {} |", report.total);
    out
}

fn markdown<S: Fraction>(report: &AggregateReportOf<S>) -> String {
    let mut out = table1_markdown(report);
    out.push('\n');
    out.push_str("| threshold | recall (%) | precision (%) |\n|---|---:|---:|\n");
    let (r, p) = (&report.recall_thresholds, &report.precision_thresholds);
    let rows: [(&str, fn(&Thresholds<S>) -> S); 3] = [
        ("≥ 0.5", |t| t.at_least_half),
        ("≥ 0.75", |t| t.at_least_three_quarters),
        ("= 1.0", |t| t.perfect),
    ];
    for (label, get) in rows {
        let _ = writeln!(out, "| {label} | {} | {} |", pct(get(r)), pct(get(p)));
    }
    out.push('\n');
    out.push_str("| statistic | recall | precision |\n|---|---:|---:|\n");
    let rows: [(&str, fn(&Summary<S>) -> S); 3] =
        [("mean", |s| s.mean), ("median", |s| s.median), ("std", |s| s.std_dev)];
    for (label, get) in rows {
        let _ = writeln!(out, "| {label} | {} | {} |", stat(get(&report.recall)), stat(get(&report.precision)));
    }
    out
}

fn csv_row<S: Fraction>(report: &AggregateReportOf<S>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "count_without_module",
        "count_with_module",
        "total",
        "recall_ge_0_5",
        "recall_ge_0_75",
        "recall_eq_1",
        "precision_ge_0_5",
        "precision_ge_0_75",
        "precision_eq_1",
        "recall_mean",
        "recall_median",
        "recall_std",
        "precision_mean",
        "precision_median",
        "precision_std",
    ];
    let (r, p) = (&report.recall_thresholds, &report.precision_thresholds);
    let row = [
        report.count_without_module.to_string(),
        report.count_with_module.to_string(),
        report.total.to_string(),
        pct(r.at_least_half),
        pct(r.at_least_three_quarters),
        pct(r.perfect),
        pct(p.at_least_half),
        pct(p.at_least_three_quarters),
        pct(p.perfect),
        stat(report.recall.mean),
        stat(report.recall.median),
        stat(report.recall.std_dev),
        stat(report.precision.mean),
        stat(report.precision.median),
        stat(report.precision.std_dev),
    ];
    w.write_record(header).expect("in-memory write");
    w.write_record(&row).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn emit_report<S: Fraction + Serialize>(report: &AggregateReportOf<S>, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => markdown(report),
        ReportFormat::Csv => csv_row(report),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

pub fn parse_report_json<S: DeserializeOwned>(text: &str) -> Result<AggregateReportOf<S>, serde_json::Error> {
    serde_json::from_str(text)
}

/// One line per rule: id, counts, recall, precision and `|`-joined flags.
pub fn scores_csv<S: Fraction>(scores: &[RuleScoreOf<S>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rule_id", "expected_count", "detected_count", "correct_count", "recall", "precision", "flags"])
        .expect("in-memory write");
    for s in scores {
        let flags: Vec<&str> = s.flags.iter().map(|f| f.name()).collect();
        w.write_record([
            s.rule_id.clone(),
            s.expected.len().to_string(),
            s.detected.len().to_string(),
            s.correct_count().to_string(),
            format!("{:.4}", s.recall.to_f64_lossy()),
            format!("{:.4}", s.precision.to_f64_lossy()),
            flags.join("|"),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}
