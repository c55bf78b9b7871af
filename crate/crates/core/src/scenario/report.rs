use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use crate::surveillance::SortingReport;

use super::error::ScenarioError;

/// Version tag written as the report's `$schema` key.
pub const REPORT_SCHEMA: &str = "surveil-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Canonical JSON: sorted keys, two-space indent, trailing newline.
    Structured,
    /// Fixed-width text for terminals.
    Table,
}

fn structured(r: &SortingReport) -> Value {
    let report = &r.report;
    let q = &report.stats.quarantined;
    json!({
        "$schema": REPORT_SCHEMA,
        "declared": report.declared,
        "entries": report.entries.iter().map(|e| json!({
            "identifier": e.identifier.value(),
            "scheme": e.identifier.scheme(),
            "attributes": e.attributes,
            "t": e.t,
            "loc": e.loc,
            "provisional": e.provisional,
        })).collect::<Vec<_>>(),
        "categories": r.categories.iter().map(|c| json!({
            "key": c.key,
            "members": c.members.iter().map(|m| m.value()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "stats": {
            "input": report.stats.input,
            "processed": report.stats.processed,
            "quarantined": {
                "missing_field": q.missing_field,
                "format_mismatch": q.format_mismatch,
                "unmatched_end": q.unmatched_end,
                "duplicate_start": q.duplicate_start,
                "total": q.total(),
            },
        },
        "stream_end": report.stream_end,
    })
}

fn table(r: &SortingReport) -> String {
    let report = &r.report;
    let rows: Vec<[String; 5]> = report
        .entries
        .iter()
        .map(|e| {
            let attrs: Vec<&str> = e.attributes.iter().map(String::as_str).collect();
            [
                e.identifier.value().to_string(),
                attrs.join(","),
                e.t.to_string(),
                e.loc.clone(),
                if e.provisional { "yes" } else { "no" }.to_string(),
            ]
        })
        .collect();
    let header = ["IDENTIFIER", "ATTRIBUTES", "T", "LOC", "PROVISIONAL"];
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let padded: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(&header);
    for row in &rows {
        line(&row.each_ref().map(String::as_str));
    }
    for c in &r.categories {
        let members: Vec<&str> = c.members.iter().map(|m| m.value()).collect();
        let _ = writeln!(out, "category {c}: {}", if members.is_empty() { "-".to_string() } else { members.join(", ") });
    }
    let s = &report.stats;
    let _ = writeln!(out, "events: {} input, {} processed, {} quarantined", s.input, s.processed, s.quarantined.total());
    out
}

pub fn render_report(report: &SortingReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => {
            let mut s = serde_json::to_string_pretty(&structured(report)).expect("values serialize");
            s.push('\n');
            s
        }
        ReportFormat::Table => table(report),
    }
}

pub fn write_report(report: &SortingReport, format: ReportFormat, path: &Path) -> Result<(), ScenarioError> {
    std::fs::write(path, render_report(report, format)).map_err(|e| ScenarioError::io(path, e))
}
