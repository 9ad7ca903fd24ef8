//! Effectiveness evaluation and cross-configuration comparison.
//!
//! [`compare`] builds the summary grid — one row per (kernel, configuration)
//! pair, one column per toolchain, best cell per row marked at the largest
//! input every compared series shares — plus pairwise performance tracks and
//! the verdicts of any effectiveness criteria ([`Moe`]). [`report`] turns
//! the result into deterministic tabular, delimited or structured output.

pub mod report;
pub mod schema;

pub use report::{emit_report, import_report, plot_data, PlotKind, ReportFormat};

use crate::analytics::{detect_tracks, speedup, SegmentWinner, TrackSegment};
use crate::harness::StoredSeries;
use crate::kernels::{DwarfClass, KernelKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: i/o error: {detail}")]
    Io { path: String, detail: String },
    #[error("{path}:{line}:{column}: schema violation: {detail}")]
    Schema {
        path: String,
        line: usize,
        column: usize,
        detail: String,
    },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Analytics(#[from] crate::analytics::AnalyticsError),
}

/// Metric an effectiveness criterion is judged on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoeMetric {
    MeanWallMs,
    CpuPct,
    MemPct,
    IoPct,
    SpeedupVsBaseline,
}

/// Which sizes of each matching series the criterion covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SizeSelector {
    #[default]
    Largest,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AtMost,
    AtLeast,
}

/// Measure of effectiveness: a thresholded pass/fail criterion over a scoped
/// metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moe {
    pub id: String,
    pub metric: MoeMetric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwarf: Option<DwarfClass>,
    #[serde(default)]
    pub sizes: SizeSelector,
    pub threshold: f64,
    pub direction: Direction,
    /// Toolchain the speedup metric is measured against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
}

impl Moe {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !self.threshold.is_finite() {
            return Err(EvalError::Config(format!(
                "moe {:?}: threshold must be finite",
                self.id
            )));
        }
        match (&self.kernel, &self.dwarf) {
            (None, None) | (Some(_), Some(_)) => Err(EvalError::Config(format!(
                "moe {:?}: scope must name exactly one of kernel or dwarf",
                self.id
            ))),
            _ => Ok(()),
        }
    }

    fn matches(&self, series: &StoredSeries) -> bool {
        match (self.kernel, self.dwarf) {
            (Some(k), _) => series.labels.kernel == k,
            (_, Some(d)) => series.labels.dwarf == d,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoeVerdict {
    Pass,
    Fail,
    NotApplicable,
}

impl std::fmt::Display for MoeVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MoeVerdict::Pass => "pass",
            MoeVerdict::Fail => "fail",
            MoeVerdict::NotApplicable => "not_applicable",
        })
    }
}

/// Evaluated criterion: verdict plus the decisive measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoeOutcome {
    pub id: String,
    pub verdict: MoeVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
    pub detail: String,
}

/// Judges one criterion against a series set. Every selected value must
/// satisfy the threshold for a pass; the reported measurement is the value
/// closest to (or beyond) the threshold. A scope matching no series is
/// `not_applicable`, never silently dropped.
pub fn evaluate_moe(moe: &Moe, series_set: &[StoredSeries]) -> Result<MoeOutcome, EvalError> {
    moe.validate()?;
    let candidates: Vec<&StoredSeries> = series_set.iter().filter(|s| moe.matches(s)).collect();
    if candidates.is_empty() {
        return Ok(MoeOutcome {
            id: moe.id.clone(),
            verdict: MoeVerdict::NotApplicable,
            measured: None,
            detail: "no series matches the scope".into(),
        });
    }

    let mut values: Vec<f64> = Vec::new();
    match moe.metric {
        MoeMetric::SpeedupVsBaseline => {
            let baseline_label = moe.baseline.as_deref().ok_or_else(|| {
                EvalError::Config(format!(
                    "moe {:?}: speedup_vs_baseline needs a baseline toolchain",
                    moe.id
                ))
            })?;
            for c in &candidates {
                if c.labels.toolchain == baseline_label {
                    continue;
                }
                let Some(base) = series_set.iter().find(|b| {
                    b.labels.kernel == c.labels.kernel
                        && b.labels.config == c.labels.config
                        && b.labels.toolchain == baseline_label
                }) else {
                    continue;
                };
                for p in selected_points(c, moe.sizes) {
                    if let Some(bp) = base.series.point_at(p.size) {
                        values.push(speedup(p, bp)?);
                    }
                }
            }
        }
        metric => {
            for c in &candidates {
                for p in selected_points(c, moe.sizes) {
                    values.push(match metric {
                        MoeMetric::MeanWallMs => p.mean_wall_ms,
                        MoeMetric::CpuPct => p.cpu_pct,
                        MoeMetric::MemPct => p.mem_pct,
                        MoeMetric::IoPct => p.io_pct,
                        MoeMetric::SpeedupVsBaseline => unreachable!(),
                    });
                }
            }
        }
    }

    if values.is_empty() {
        return Ok(MoeOutcome {
            id: moe.id.clone(),
            verdict: MoeVerdict::NotApplicable,
            measured: None,
            detail: "scope matched series but no measurable value".into(),
        });
    }
    // The decisive value is the worst case for the stated direction.
    let measured = match moe.direction {
        Direction::AtMost => values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        Direction::AtLeast => values.iter().cloned().fold(f64::INFINITY, f64::min),
    };
    let pass = match moe.direction {
        Direction::AtMost => measured <= moe.threshold,
        Direction::AtLeast => measured >= moe.threshold,
    };
    Ok(MoeOutcome {
        id: moe.id.clone(),
        verdict: if pass { MoeVerdict::Pass } else { MoeVerdict::Fail },
        measured: Some(measured),
        detail: format!(
            "{} values; decisive {measured} vs threshold {} ({})",
            values.len(),
            moe.threshold,
            match moe.direction {
                Direction::AtMost => "at most",
                Direction::AtLeast => "at least",
            }
        ),
    })
}

fn selected_points(
    series: &StoredSeries,
    sizes: SizeSelector,
) -> Vec<&crate::analytics::SeriesPoint> {
    match sizes {
        SizeSelector::All => series.series.points.iter().collect(),
        SizeSelector::Largest => series.series.points.last().into_iter().collect(),
    }
}

/// One toolchain's cell in a comparison row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellValue {
    pub toolchain: String,
    pub mean_wall_ms: f64,
}

/// One (kernel, configuration) row of the comparison grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub kernel: KernelKind,
    pub dwarf: DwarfClass,
    pub config: String,
    /// Largest size shared by every compared series of the row; absent when
    /// the row is incomparable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<u64>,
    pub cells: Vec<CellValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Identity of a series inside a report.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SeriesKey {
    pub config: String,
    pub toolchain: String,
}

/// A track segment with the winner resolved to a display label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSegment {
    /// Winning series label; absent for a statistical tie.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winner: Option<String>,
    pub lo_size: u64,
    pub hi_size: u64,
    pub mean_ratio: f64,
}

/// Performance tracks between two series of the same kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackAnalysis {
    pub kernel: KernelKind,
    pub a: SeriesKey,
    pub b: SeriesKey,
    pub segments: Vec<LabeledSegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReportMeta {
    pub hosts: Vec<String>,
    pub backends: Vec<String>,
    pub dates: Vec<String>,
}

/// Multi-configuration evaluation: grid, tracks and criterion verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tracks: Vec<TrackAnalysis>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub moes: Vec<MoeOutcome>,
    pub meta: ReportMeta,
}

impl ComparisonReport {
    /// Best-marker uniqueness and minimality, for every comparable row.
    pub fn validate(&self) -> Result<(), EvalError> {
        for row in &self.rows {
            if let Some(best) = &row.best {
                let best_cell = row
                    .cells
                    .iter()
                    .find(|c| &c.toolchain == best)
                    .ok_or_else(|| {
                        EvalError::Config(format!("row {}/{}: marker on a missing cell", row.kernel, row.config))
                    })?;
                if row.cells.iter().any(|c| c.mean_wall_ms < best_cell.mean_wall_ms) {
                    return Err(EvalError::Config(format!(
                        "row {}/{}: marker is not the row minimum",
                        row.kernel, row.config
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds the comparison grid over a series set.
///
/// Rows are (kernel, configuration) pairs, columns are toolchains; each row
/// compares at the largest size present in all of its series. Pairwise
/// tracks are computed for every two series sharing a kernel with at least
/// two common sizes. The criteria in `moes` are evaluated against the whole
/// set and attached in order.
pub fn compare(series_set: &[StoredSeries], moes: &[Moe]) -> Result<ComparisonReport, EvalError> {
    if series_set.len() < 2 {
        return Err(EvalError::Usage(
            "comparison needs at least two series".into(),
        ));
    }
    for s in series_set {
        s.validate()?;
    }

    // Deterministic order throughout: kernel, then config, then toolchain.
    let mut ordered: Vec<&StoredSeries> = series_set.iter().collect();
    ordered.sort_by(|a, b| {
        (a.labels.kernel, &a.labels.config, &a.labels.toolchain).cmp(&(
            b.labels.kernel,
            &b.labels.config,
            &b.labels.toolchain,
        ))
    });

    let mut groups: BTreeMap<(KernelKind, String), Vec<&StoredSeries>> = BTreeMap::new();
    for s in &ordered {
        let key = (s.labels.kernel, s.labels.config.clone());
        let group = groups.entry(key).or_default();
        if group
            .iter()
            .any(|g| g.labels.toolchain == s.labels.toolchain)
        {
            return Err(EvalError::Usage(format!(
                "duplicate series for {} on {} with toolchain {}",
                s.labels.kernel, s.labels.config, s.labels.toolchain
            )));
        }
        group.push(s);
    }

    let mut rows = Vec::new();
    for ((kernel, config), group) in &groups {
        let mut flags = Vec::new();
        // Largest size common to every series of the row.
        let mut common: Option<Vec<u64>> = None;
        for s in group {
            let sizes: Vec<u64> = s.series.points.iter().map(|p| p.size).collect();
            common = Some(match common {
                None => sizes,
                Some(prev) => prev.into_iter().filter(|x| sizes.contains(x)).collect(),
            });
        }
        let at = common.unwrap_or_default().last().copied();

        let (size, cells, best) = match at {
            Some(size) => {
                let cells: Vec<CellValue> = group
                    .iter()
                    .map(|s| CellValue {
                        toolchain: s.labels.toolchain.clone(),
                        mean_wall_ms: s.series.point_at(size).expect("common size").mean_wall_ms,
                    })
                    .collect();
                let best = cells
                    .iter()
                    .min_by(|a, b| a.mean_wall_ms.partial_cmp(&b.mean_wall_ms).unwrap())
                    .map(|c| c.toolchain.clone());
                (Some(size), cells, best)
            }
            None => {
                flags.push("incomparable".to_string());
                let cells = group
                    .iter()
                    .map(|s| CellValue {
                        toolchain: s.labels.toolchain.clone(),
                        mean_wall_ms: s.series.points.last().expect("validated").mean_wall_ms,
                    })
                    .collect();
                (None, cells, None)
            }
        };
        if group.len() == 1 {
            flags.push("uncontested".to_string());
        }
        rows.push(ReportRow {
            kernel: *kernel,
            dwarf: kernel.dwarf(),
            config: config.clone(),
            size,
            cells,
            best,
            flags,
        });
    }

    let mut tracks = Vec::new();
    for (i, a) in ordered.iter().enumerate() {
        for b in ordered.iter().skip(i + 1) {
            if a.labels.kernel != b.labels.kernel {
                continue;
            }
            match detect_tracks(&a.series, &b.series) {
                Ok(segments) => tracks.push(TrackAnalysis {
                    kernel: a.labels.kernel,
                    a: SeriesKey {
                        config: a.labels.config.clone(),
                        toolchain: a.labels.toolchain.clone(),
                    },
                    b: SeriesKey {
                        config: b.labels.config.clone(),
                        toolchain: b.labels.toolchain.clone(),
                    },
                    segments: segments
                        .iter()
                        .map(|seg| label_segment(seg, a, b))
                        .collect(),
                }),
                Err(crate::analytics::AnalyticsError::InsufficientOverlap) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }

    let mut outcomes = Vec::new();
    for moe in moes {
        outcomes.push(evaluate_moe(moe, series_set)?);
    }

    let mut hosts: Vec<String> = ordered
        .iter()
        .map(|s| {
            format!(
                "{}: {} cores @ {} MHz ({})",
                s.labels.config, s.meta.host.cores, s.meta.host.nominal_mhz, s.meta.host.os
            )
        })
        .collect();
    hosts.sort();
    hosts.dedup();
    let mut backends: Vec<String> = ordered
        .iter()
        .map(|s| s.meta.sampler_backend.clone())
        .collect();
    backends.sort();
    backends.dedup();
    let mut dates: Vec<String> = ordered
        .iter()
        .filter_map(|s| s.meta.created_unix_s.map(|t| t.to_string()))
        .collect();
    dates.sort();
    dates.dedup();

    let report = ComparisonReport {
        rows,
        tracks,
        moes: outcomes,
        meta: ReportMeta {
            hosts,
            backends,
            dates,
        },
    };
    report.validate()?;
    Ok(report)
}

/// Resolves a segment winner to the label that distinguishes the two series:
/// their configs when those differ, their toolchains otherwise.
fn label_segment(seg: &TrackSegment, a: &StoredSeries, b: &StoredSeries) -> LabeledSegment {
    let name = |s: &StoredSeries| {
        if a.labels.config != b.labels.config {
            s.labels.config.clone()
        } else {
            s.labels.toolchain.clone()
        }
    };
    LabeledSegment {
        winner: match seg.winner {
            SegmentWinner::First => Some(name(a)),
            SegmentWinner::Second => Some(name(b)),
            SegmentWinner::StatisticalTie => None,
        },
        lo_size: seg.lo_size,
        hi_size: seg.hi_size,
        mean_ratio: seg.mean_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{SeriesLabels, SeriesPoint, SweepSeries};
    use crate::harness::{Affinity, SeriesMeta, StoredSeries};
    use crate::host::HostInfo;
    use crate::kernels::KernelParams;

    pub(crate) fn make_series(
        kernel: KernelKind,
        config: &str,
        toolchain: &str,
        points: &[(u64, f64)],
    ) -> StoredSeries {
        let labels = SeriesLabels {
            kernel,
            dwarf: kernel.dwarf(),
            toolchain: toolchain.into(),
            config: config.into(),
        };
        StoredSeries {
            labels: labels.clone(),
            meta: SeriesMeta {
                host: HostInfo {
                    cores: 64,
                    nominal_mhz: 2300.0,
                    os: "linux".into(),
                },
                sampler_backend: "imported".into(),
                capabilities: vec![],
                affinity_requested: Affinity::Scatter,
                affinity_applied: Affinity::Scatter,
                threads: 64,
                repetitions: 30,
                warmup_runs: 0,
                seed: 0,
                kernel_params: match kernel {
                    KernelKind::Lud => KernelParams::Lud,
                    KernelKind::Kmeans => KernelParams::Kmeans {
                        dims: 34,
                        k: 5,
                        max_iter: 500,
                    },
                    KernelKind::BpTree => KernelParams::BpTree {
                        order: 64,
                        queries: 0,
                    },
                },
                created_unix_s: None,
                interpolated_sizes: vec![],
                notes: vec![],
            },
            series: SweepSeries {
                labels,
                points: points
                    .iter()
                    .map(|&(size, mean)| SeriesPoint {
                        size,
                        mean_wall_ms: mean,
                        std_wall_ms: 0.0,
                        ci_halfwidth_ms: 0.0,
                        cpu_pct: 100.0,
                        io_pct: 0.0,
                        mem_pct: 0.0,
                        other_pct: 0.0,
                        n: 30,
                        wide_ci: false,
                    })
                    .collect(),
            },
            skipped: vec![],
        }
    }

    #[test]
    fn best_marker_lands_on_row_minimum() {
        let set = vec![
            make_series(KernelKind::Lud, "Arch A", "OpenMP", &[(32768, 4_248_065.0)]),
            make_series(KernelKind::Lud, "Arch A", "OpenCL", &[(32768, 347_173.0)]),
            make_series(KernelKind::Kmeans, "Arch A", "OpenMP", &[(9_830_400, 70_850.0)]),
            make_series(KernelKind::Kmeans, "Arch A", "OpenCL", &[(9_830_400, 143_206.0)]),
        ];
        let report = compare(&set, &[]).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[0].best.as_deref(), Some("OpenCL"));
        assert_eq!(report.rows[1].best.as_deref(), Some("OpenMP"));
        assert!(report.moes.is_empty());
    }

    #[test]
    fn single_series_row_is_uncontested() {
        let set = vec![
            make_series(KernelKind::Lud, "Arch A", "OpenMP", &[(2048, 100.0)]),
            make_series(KernelKind::Kmeans, "Arch A", "OpenMP", &[(10_000, 50.0)]),
        ];
        let report = compare(&set, &[]).unwrap();
        for row in &report.rows {
            assert!(row.flags.contains(&"uncontested".to_string()));
            assert!(row.best.is_some());
        }
    }

    #[test]
    fn disjoint_sizes_flag_incomparable() {
        let set = vec![
            make_series(KernelKind::Lud, "Arch A", "OpenMP", &[(1024, 100.0)]),
            make_series(KernelKind::Lud, "Arch A", "OpenCL", &[(2048, 50.0)]),
        ];
        let report = compare(&set, &[]).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.rows[0].flags.contains(&"incomparable".to_string()));
        assert!(report.rows[0].best.is_none());
    }

    #[test]
    fn moe_unreachable_threshold_passes() {
        let set = vec![
            make_series(KernelKind::Lud, "Arch A", "OpenMP", &[(2048, 100.0)]),
            make_series(KernelKind::Lud, "Arch B", "OpenMP", &[(2048, 130.0)]),
        ];
        let moe = Moe {
            id: "wall-cap".into(),
            metric: MoeMetric::MeanWallMs,
            kernel: Some(KernelKind::Lud),
            dwarf: None,
            sizes: SizeSelector::Largest,
            threshold: 1e9,
            direction: Direction::AtMost,
            baseline: None,
        };
        let out = evaluate_moe(&moe, &set).unwrap();
        assert_eq!(out.verdict, MoeVerdict::Pass);
        assert_eq!(out.measured, Some(130.0));
    }

    #[test]
    fn dwarf_scoped_cpu_floor_passes_on_compute_bound_series() {
        // A compute-dwarf series staying above 90% CPU at every size.
        let mut a = make_series(KernelKind::Lud, "Arch A", "rust", &[(64, 1.0), (512, 8.0)]);
        for p in &mut a.series.points {
            p.cpu_pct = 96.0;
            p.io_pct = 1.0;
            p.mem_pct = 2.0;
            p.other_pct = 1.0;
        }
        let moe = Moe {
            id: "dla-cpu-floor".into(),
            metric: MoeMetric::CpuPct,
            kernel: None,
            dwarf: Some(DwarfClass::DenseLinearAlgebra),
            sizes: SizeSelector::All,
            threshold: 90.0,
            direction: Direction::AtLeast,
            baseline: None,
        };
        let out = evaluate_moe(&moe, &[a]).unwrap();
        assert_eq!(out.verdict, MoeVerdict::Pass);
        assert_eq!(out.measured, Some(96.0));
    }

    #[test]
    fn moe_absent_kernel_is_not_applicable() {
        let set = vec![make_series(KernelKind::Lud, "Arch A", "OpenMP", &[(64, 1.0)])];
        let moe = Moe {
            id: "bptree-any".into(),
            metric: MoeMetric::MeanWallMs,
            kernel: Some(KernelKind::BpTree),
            dwarf: None,
            sizes: SizeSelector::All,
            threshold: 1.0,
            direction: Direction::AtMost,
            baseline: None,
        };
        let out = evaluate_moe(&moe, &set).unwrap();
        assert_eq!(out.verdict, MoeVerdict::NotApplicable);
        assert_eq!(out.measured, None);
    }

    #[test]
    fn moe_scope_must_be_exclusive() {
        let moe = Moe {
            id: "bad".into(),
            metric: MoeMetric::CpuPct,
            kernel: Some(KernelKind::Lud),
            dwarf: Some(DwarfClass::DenseLinearAlgebra),
            sizes: SizeSelector::All,
            threshold: 1.0,
            direction: Direction::AtLeast,
            baseline: None,
        };
        assert!(matches!(moe.validate(), Err(EvalError::Config(_))));
    }

    #[test]
    fn moe_relaxing_at_most_never_flips_pass_to_fail() {
        let set = vec![
            make_series(KernelKind::Lud, "Arch A", "OpenMP", &[(64, 100.0)]),
            make_series(KernelKind::Lud, "Arch B", "OpenMP", &[(64, 200.0)]),
        ];
        let mut moe = Moe {
            id: "mono".into(),
            metric: MoeMetric::MeanWallMs,
            kernel: Some(KernelKind::Lud),
            dwarf: None,
            sizes: SizeSelector::All,
            threshold: 150.0,
            direction: Direction::AtMost,
            baseline: None,
        };
        let before = evaluate_moe(&moe, &set).unwrap().verdict;
        moe.threshold = 250.0;
        let after = evaluate_moe(&moe, &set).unwrap().verdict;
        assert_eq!(before, MoeVerdict::Fail);
        assert_eq!(after, MoeVerdict::Pass);
    }

    #[test]
    fn speedup_moe_uses_baseline_toolchain() {
        let set = vec![
            make_series(KernelKind::Lud, "Arch A", "OpenMP", &[(32768, 4_248_065.0)]),
            make_series(KernelKind::Lud, "Arch A", "OpenCL", &[(32768, 347_173.0)]),
        ];
        let moe = Moe {
            id: "accel".into(),
            metric: MoeMetric::SpeedupVsBaseline,
            kernel: Some(KernelKind::Lud),
            dwarf: None,
            sizes: SizeSelector::Largest,
            threshold: 10.0,
            direction: Direction::AtLeast,
            baseline: Some("OpenMP".into()),
        };
        let out = evaluate_moe(&moe, &set).unwrap();
        assert_eq!(out.verdict, MoeVerdict::Pass);
        let measured = out.measured.unwrap();
        assert!((measured - 12.24).abs() / 12.24 < 0.005, "speedup {measured}");
    }

    #[test]
    fn tracks_attach_for_series_sharing_a_kernel() {
        let set = vec![
            make_series(
                KernelKind::Lud,
                "Arch A",
                "OpenMP",
                &[(1, 3.0), (2, 1.0), (3, 3.0)],
            ),
            make_series(
                KernelKind::Lud,
                "Arch B",
                "OpenMP",
                &[(1, 1.0), (2, 3.0), (3, 1.0)],
            ),
        ];
        let report = compare(&set, &[]).unwrap();
        assert_eq!(report.tracks.len(), 1);
        let winners: Vec<Option<&str>> = report.tracks[0]
            .segments
            .iter()
            .map(|s| s.winner.as_deref())
            .collect();
        assert_eq!(
            winners,
            vec![Some("Arch B"), Some("Arch A"), Some("Arch B")]
        );
    }
}
