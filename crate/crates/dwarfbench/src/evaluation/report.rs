//! Report and plot-data emission.
//!
//! All writers are deterministic: identical input produces byte-identical
//! output. Milliseconds are printed as integers and percentages with one
//! decimal; the structured format is the schema envelope and round-trips
//! through [`import_report`].

use super::{schema, ComparisonReport, EvalError};
use crate::harness::StoredSeries;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Output formats for comparison reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    TabularText,
    StructuredRecords,
    DelimitedValues,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::TabularText => "txt",
            ReportFormat::StructuredRecords => "json",
            ReportFormat::DelimitedValues => "csv",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tabular-text" | "text" | "txt" => Ok(ReportFormat::TabularText),
            "structured-records" | "json" => Ok(ReportFormat::StructuredRecords),
            "delimited-values" | "csv" => Ok(ReportFormat::DelimitedValues),
            other => Err(EvalError::Usage(format!(
                "unknown format {other:?} (tabular-text, structured-records or delimited-values)"
            ))),
        }
    }
}

impl std::fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReportFormat::TabularText => "tabular-text",
            ReportFormat::StructuredRecords => "structured-records",
            ReportFormat::DelimitedValues => "delimited-values",
        })
    }
}

/// Renders a report in the requested format.
pub fn emit_report(report: &ComparisonReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::TabularText => tabular(report),
        ReportFormat::StructuredRecords => schema::to_string("report", report),
        ReportFormat::DelimitedValues => delimited(report),
    }
}

/// Writes a report to `path` in the requested format.
pub fn write_report(
    report: &ComparisonReport,
    format: ReportFormat,
    path: &Path,
) -> Result<(), EvalError> {
    std::fs::write(path, emit_report(report, format)).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

/// Loads a structured-records report file.
pub fn import_report(path: &Path) -> Result<ComparisonReport, EvalError> {
    let report: ComparisonReport = schema::load("report", path)?;
    report.validate()?;
    Ok(report)
}

fn fmt_ms(v: f64) -> String {
    format!("{v:.0}")
}

fn fmt_pct(v: f64) -> String {
    format!("{v:.1}")
}

fn tabular(report: &ComparisonReport) -> String {
    let mut toolchains: Vec<String> = report
        .rows
        .iter()
        .flat_map(|r| r.cells.iter().map(|c| c.toolchain.clone()))
        .collect();
    toolchains.sort();
    toolchains.dedup();

    let mut table: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["kernel".into(), "class".into(), "config".into(), "size".into()];
    header.extend(toolchains.iter().cloned());
    header.push("best".into());
    table.push(header);

    for row in &report.rows {
        let mut line = vec![
            row.kernel.to_string(),
            row.dwarf.to_string(),
            row.config.clone(),
            row.size.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
        ];
        for t in &toolchains {
            let cell = match row.cells.iter().find(|c| &c.toolchain == t) {
                Some(c) => {
                    let marker = if row.best.as_deref() == Some(t.as_str()) {
                        "*"
                    } else {
                        ""
                    };
                    format!("{}{marker}", fmt_ms(c.mean_wall_ms))
                }
                None => "-".into(),
            };
            line.push(cell);
        }
        let mut best = row.best.clone().unwrap_or_else(|| "-".into());
        if !row.flags.is_empty() {
            let _ = write!(best, " ({})", row.flags.join(", "));
        }
        line.push(best);
        table.push(line);
    }

    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    out.push_str("comparison report\n");
    let _ = writeln!(out, "schema-version: {}", schema::SCHEMA_VERSION);
    out.push('\n');
    for (i, row) in table.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&rule.join("  "));
            out.push('\n');
        }
    }

    if !report.tracks.is_empty() {
        out.push_str("\nperformance tracks\n");
        for t in &report.tracks {
            let _ = writeln!(
                out,
                "  {} : {}/{} vs {}/{}",
                t.kernel, t.a.config, t.a.toolchain, t.b.config, t.b.toolchain
            );
            for seg in &t.segments {
                let winner = seg.winner.as_deref().unwrap_or("statistical tie");
                let _ = writeln!(
                    out,
                    "    sizes {}..{}: {winner} (mean ratio {})",
                    seg.lo_size,
                    seg.hi_size,
                    fmt_pct(seg.mean_ratio)
                );
            }
        }
    }

    if !report.moes.is_empty() {
        out.push_str("\nmeasures of effectiveness\n");
        for m in &report.moes {
            let measured = m
                .measured
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "  {}: {} (measured {measured})", m.id, m.verdict);
        }
    }

    out.push_str("\nmetadata\n");
    for h in &report.meta.hosts {
        let _ = writeln!(out, "  host: {h}");
    }
    for b in &report.meta.backends {
        let _ = writeln!(out, "  backend: {b}");
    }
    for d in &report.meta.dates {
        let _ = writeln!(out, "  date: {d}");
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn delimited(report: &ComparisonReport) -> String {
    let mut out = String::new();
    out.push_str("kernel,class,config,size,toolchain,mean_wall_ms,best\n");
    for row in &report.rows {
        for cell in &row.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.kernel,
                row.dwarf,
                csv_field(&row.config),
                row.size.map(|s| s.to_string()).unwrap_or_default(),
                csv_field(&cell.toolchain),
                fmt_ms(cell.mean_wall_ms),
                row.best.as_deref() == Some(cell.toolchain.as_str())
            );
        }
    }
    out
}

/// Data shapes [`plot_data`] can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    /// Per-size resource percentages of one series.
    ResourceStack,
    /// Mean wall time per size, one column per series.
    TimeVsSize,
}

impl std::str::FromStr for PlotKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "resource_stack" | "resource-stack" => Ok(PlotKind::ResourceStack),
            "time_vs_size" | "time-vs-size" => Ok(PlotKind::TimeVsSize),
            other => Err(EvalError::Usage(format!(
                "unknown plot kind {other:?} (resource_stack or time_vs_size)"
            ))),
        }
    }
}

/// Emits delimited plot data with a commented header. A log scale is the
/// intended rendering for both axes, recorded as a header hint; any external
/// plotting tool can consume the output.
pub fn plot_data(series_set: &[StoredSeries], kind: PlotKind) -> Result<String, EvalError> {
    if series_set.is_empty() {
        return Err(EvalError::Usage("no series to plot".into()));
    }
    let mut ordered: Vec<&StoredSeries> = series_set.iter().collect();
    ordered.sort_by(|a, b| {
        (a.labels.kernel, &a.labels.config, &a.labels.toolchain).cmp(&(
            b.labels.kernel,
            &b.labels.config,
            &b.labels.toolchain,
        ))
    });

    let mut out = String::new();
    let _ = writeln!(out, "# schema-version: {}", schema::SCHEMA_VERSION);
    match kind {
        PlotKind::ResourceStack => {
            if ordered.len() != 1 {
                return Err(EvalError::Usage(format!(
                    "resource_stack plots exactly one series, got {}",
                    ordered.len()
                )));
            }
            let s = ordered[0];
            out.push_str("# kind: resource_stack\n# scale-hint: log-x\n");
            let _ = writeln!(out, "# series: {}", s.labels);
            out.push_str("size,cpu_pct,io_pct,mem_pct,other_pct\n");
            for p in &s.series.points {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    p.size,
                    fmt_pct(p.cpu_pct),
                    fmt_pct(p.io_pct),
                    fmt_pct(p.mem_pct),
                    fmt_pct(p.other_pct)
                );
            }
        }
        PlotKind::TimeVsSize => {
            out.push_str("# kind: time_vs_size\n# scale-hint: log-log\n");
            let mut sizes: Vec<u64> = ordered
                .iter()
                .flat_map(|s| s.series.points.iter().map(|p| p.size))
                .collect();
            sizes.sort_unstable();
            sizes.dedup();
            let mut header = vec!["size".to_string()];
            header.extend(ordered.iter().map(|s| {
                csv_field(&format!("{}/{}", s.labels.config, s.labels.toolchain))
            }));
            out.push_str(&header.join(","));
            out.push('\n');
            for size in sizes {
                let mut line = vec![size.to_string()];
                for s in &ordered {
                    line.push(
                        s.series
                            .point_at(size)
                            .map(|p| fmt_ms(p.mean_wall_ms))
                            .unwrap_or_default(),
                    );
                }
                out.push_str(&line.join(","));
                out.push('\n');
            }
        }
    }
    Ok(out)
}
