//! Statistical aggregation, boundedness classification and
//! performance-track detection.
//!
//! Aggregation follows the repetition protocol: per problem size, the mean
//! and sample standard deviation of wall time plus a 95% Student-t
//! confidence half-width, with a `wide_ci` flag when the half-width exceeds
//! 1% of the mean. Classification reduces a point's resource percentages to
//! a dominant-resource label, and track detection finds the maximal size
//! ranges over which one configuration consistently beats another.

use crate::kernels::{DwarfClass, KernelKind};
use crate::profiler::EeaRecord;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("no samples to aggregate")]
    Empty,
    #[error("heterogeneous samples: {0}")]
    Heterogeneous(String),
    #[error("series share fewer than 2 sizes; track detection needs overlap")]
    InsufficientOverlap,
    #[error("mismatched points: {0}")]
    Mismatch(String),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
}

/// Margin (in percentage points) the dominant resource must hold over the
/// runner-up before a point earns a non-mixed label.
pub const DOMINANCE_MARGIN_PCT: f64 = 10.0;

/// Ratio threshold for flagging a confidence interval as wide: half-width
/// above 1% of the mean.
pub const WIDE_CI_RATIO: f64 = 0.01;

/// Identity of a sweep series.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeriesLabels {
    pub kernel: KernelKind,
    pub dwarf: DwarfClass,
    pub toolchain: String,
    pub config: String,
}

impl fmt::Display for SeriesLabels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{} {} @ {}",
            self.kernel, self.dwarf, self.toolchain, self.config
        )
    }
}

/// Aggregated statistics for one problem size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub size: u64,
    pub mean_wall_ms: f64,
    pub std_wall_ms: f64,
    pub ci_halfwidth_ms: f64,
    pub cpu_pct: f64,
    pub io_pct: f64,
    pub mem_pct: f64,
    pub other_pct: f64,
    pub n: u32,
    pub wide_ci: bool,
}

impl SeriesPoint {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        if !self.mean_wall_ms.is_finite() || self.mean_wall_ms <= 0.0 {
            return Err(AnalyticsError::InvalidSeries(format!(
                "mean wall time must be positive, got {}",
                self.mean_wall_ms
            )));
        }
        if self.std_wall_ms < 0.0 || self.ci_halfwidth_ms < 0.0 {
            return Err(AnalyticsError::InvalidSeries(
                "standard deviation and CI half-width must be non-negative".into(),
            ));
        }
        if self.n == 0 {
            return Err(AnalyticsError::InvalidSeries("sample count must be positive".into()));
        }
        let sum = self.cpu_pct + self.io_pct + self.mem_pct + self.other_pct;
        if (sum - 100.0).abs() > 0.1 {
            return Err(AnalyticsError::InvalidSeries(format!(
                "percentages sum to {sum}, expected 100 +- 0.1"
            )));
        }
        for p in [self.cpu_pct, self.io_pct, self.mem_pct, self.other_pct] {
            if !(0.0..=100.0).contains(&p) {
                return Err(AnalyticsError::InvalidSeries(format!(
                    "percentage {p} outside [0, 100]"
                )));
            }
        }
        Ok(())
    }
}

/// Size-ordered aggregated series for one kernel/toolchain/configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSeries {
    pub labels: SeriesLabels,
    pub points: Vec<SeriesPoint>,
}

impl SweepSeries {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        for p in &self.points {
            p.validate()?;
        }
        if !self.points.windows(2).all(|w| w[0].size < w[1].size) {
            return Err(AnalyticsError::InvalidSeries(
                "points must be strictly ascending in size".into(),
            ));
        }
        Ok(())
    }

    pub fn point_at(&self, size: u64) -> Option<&SeriesPoint> {
        self.points.iter().find(|p| p.size == size)
    }

    pub fn largest_size(&self) -> Option<u64> {
        self.points.last().map(|p| p.size)
    }
}

/// Upper 97.5% Student-t quantile for `dof` degrees of freedom, refined with
/// a few Newton steps so the value is good to near machine precision.
pub fn t_quantile_975(dof: u32) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, f64::from(dof)).expect("valid dof");
    let mut q = dist.inverse_cdf(0.975);
    for _ in 0..3 {
        let density = dist.pdf(q);
        if density <= 0.0 {
            break;
        }
        q -= (dist.cdf(q) - 0.975) / density;
    }
    q
}

/// Aggregates repeated runs of one sweep point into a [`SeriesPoint`].
///
/// All samples must carry identical labels, workload size, thread count and
/// sampler backend. Wall-time statistics use the sample (n-1) standard
/// deviation and a 95% Student-t confidence half-width; an all-equal sample
/// set yields exactly zero spread.
pub fn aggregate(samples: &[EeaRecord]) -> Result<SeriesPoint, AnalyticsError> {
    let first = samples.first().ok_or(AnalyticsError::Empty)?;
    for s in samples {
        let same = s.dwarf == first.dwarf
            && s.toolchain == first.toolchain
            && s.config == first.config
            && s.workload.kernel == first.workload.kernel
            && s.workload.size == first.workload.size
            && s.threads == first.threads
            && s.sampler_backend == first.sampler_backend;
        if !same {
            return Err(AnalyticsError::Heterogeneous(format!(
                "records for {}/{} size {} mixed with {}/{} size {}",
                first.toolchain,
                first.config,
                first.workload.size,
                s.toolchain,
                s.config,
                s.workload.size
            )));
        }
    }

    let n = samples.len();
    let walls: Vec<f64> = samples.iter().map(|s| s.wall_ms).collect();
    let (mean, std) = mean_and_sample_std(&walls);
    let ci = if n >= 2 && std > 0.0 {
        t_quantile_975(n as u32 - 1) * std / (n as f64).sqrt()
    } else {
        0.0
    };
    let mean_of = |f: fn(&EeaRecord) -> f64| samples.iter().map(f).sum::<f64>() / n as f64;

    let point = SeriesPoint {
        size: first.workload.size,
        mean_wall_ms: mean,
        std_wall_ms: std,
        ci_halfwidth_ms: ci,
        cpu_pct: mean_of(|s| s.cpu_pct),
        io_pct: mean_of(|s| s.io_pct),
        mem_pct: mean_of(|s| s.mem_pct),
        other_pct: mean_of(|s| s.other_pct),
        n: n as u32,
        wide_ci: mean > 0.0 && ci / mean > WIDE_CI_RATIO,
    };
    point.validate()?;
    Ok(point)
}

/// Mean and sample (n-1) standard deviation; exactly zero spread for
/// all-equal inputs.
fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 || values.iter().all(|v| *v == values[0]) {
        let mean = if n >= 1 && values.iter().all(|v| *v == values[0]) {
            values[0]
        } else {
            mean
        };
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, var.sqrt())
}

/// Dominant-resource label of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundedness {
    CpuBound,
    MemoryBound,
    IoBound,
    Mixed,
}

impl fmt::Display for Boundedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundedness::CpuBound => "cpu_bound",
            Boundedness::MemoryBound => "memory_bound",
            Boundedness::IoBound => "io_bound",
            Boundedness::Mixed => "mixed",
        })
    }
}

/// Classification outcome: the label plus how decisively it won.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundednessLabel {
    pub label: Boundedness,
    pub dominant_pct: f64,
    /// Lead of the dominant component over the runner-up, in points.
    pub margin_pct: f64,
}

/// Picks the dominant resource among CPU, memory and I/O. The label is only
/// non-mixed when the lead over the runner-up reaches
/// [`DOMINANCE_MARGIN_PCT`]; percentages are scale-free, so the label never
/// depends on absolute times.
pub fn classify_boundedness(point: &SeriesPoint) -> BoundednessLabel {
    let mut ranked = [
        (Boundedness::CpuBound, point.cpu_pct),
        (Boundedness::MemoryBound, point.mem_pct),
        (Boundedness::IoBound, point.io_pct),
    ];
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let (winner, top) = ranked[0];
    let margin = top - ranked[1].1;
    BoundednessLabel {
        label: if margin >= DOMINANCE_MARGIN_PCT {
            winner
        } else {
            Boundedness::Mixed
        },
        dominant_pct: top,
        margin_pct: margin,
    }
}

/// A label change along the size axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub at_size: u64,
    pub from: Boundedness,
    pub to: Boundedness,
}

/// Whole-series trend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "trend", rename_all = "snake_case")]
pub enum Trend {
    Stable { label: Boundedness },
    Shifting { from: Boundedness, to: Boundedness },
}

/// Per-point labels plus the transition list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesClassification {
    pub per_point: Vec<(u64, BoundednessLabel)>,
    pub transitions: Vec<Transition>,
    pub trend: Trend,
}

/// Classifies every point and summarizes: a stable series collapses to a
/// single label, otherwise the first-to-last shift plus each transition is
/// reported.
pub fn classify_series(series: &SweepSeries) -> Result<SeriesClassification, AnalyticsError> {
    if series.points.is_empty() {
        return Err(AnalyticsError::Empty);
    }
    let per_point: Vec<(u64, BoundednessLabel)> = series
        .points
        .iter()
        .map(|p| (p.size, classify_boundedness(p)))
        .collect();
    let mut transitions = Vec::new();
    for w in per_point.windows(2) {
        if w[0].1.label != w[1].1.label {
            transitions.push(Transition {
                at_size: w[1].0,
                from: w[0].1.label,
                to: w[1].1.label,
            });
        }
    }
    let first = per_point.first().unwrap().1.label;
    let last = per_point.last().unwrap().1.label;
    let trend = if transitions.is_empty() {
        Trend::Stable { label: first }
    } else {
        Trend::Shifting { from: first, to: last }
    };
    Ok(SeriesClassification {
        per_point,
        transitions,
        trend,
    })
}

/// Boundedness labels a dwarf class is expected to show: dense linear
/// algebra is compute bound; graph traversal is I/O bound at small sizes and
/// memory bound at large ones.
pub fn expected_boundedness(dwarf: DwarfClass) -> &'static [Boundedness] {
    match dwarf {
        DwarfClass::DenseLinearAlgebra => &[Boundedness::CpuBound],
        DwarfClass::GraphTraversal => &[Boundedness::MemoryBound, Boundedness::IoBound],
    }
}

/// Verdict of [`consistency_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyVerdict {
    Consistent,
    /// At least one point is decisively bound by an unexpected resource.
    ClassAnomaly,
    /// Only mixed points deviate; not enough evidence either way.
    Inconclusive,
}

impl fmt::Display for ConsistencyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConsistencyVerdict::Consistent => "consistent",
            ConsistencyVerdict::ClassAnomaly => "class anomaly",
            ConsistencyVerdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub size: u64,
    pub got: Boundedness,
    pub expected: Vec<Boundedness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub dwarf: DwarfClass,
    pub verdict: ConsistencyVerdict,
    pub anomalies: Vec<Anomaly>,
}

/// Compares a series' observed boundedness against what its dwarf class
/// predicts. Decisive off-class labels are anomalies; mixed points only
/// downgrade the verdict to inconclusive.
pub fn consistency_check(series: &SweepSeries) -> Result<ConsistencyReport, AnalyticsError> {
    let classification = classify_series(series)?;
    let dwarf = series.labels.dwarf;
    let expected = expected_boundedness(dwarf);
    let mut anomalies = Vec::new();
    let mut saw_mixed = false;
    for (size, label) in &classification.per_point {
        match label.label {
            Boundedness::Mixed => saw_mixed = true,
            l if expected.contains(&l) => {}
            l => anomalies.push(Anomaly {
                size: *size,
                got: l,
                expected: expected.to_vec(),
            }),
        }
    }
    let verdict = if !anomalies.is_empty() {
        ConsistencyVerdict::ClassAnomaly
    } else if saw_mixed {
        ConsistencyVerdict::Inconclusive
    } else {
        ConsistencyVerdict::Consistent
    };
    Ok(ConsistencyReport {
        dwarf,
        verdict,
        anomalies,
    })
}

/// Which series wins a track segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentWinner {
    First,
    Second,
    /// Confidence intervals overlapped at every size of the segment.
    StatisticalTie,
}

/// A maximal constant-winner range of the common size axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSegment {
    pub winner: SegmentWinner,
    pub lo_size: u64,
    pub hi_size: u64,
    /// Mean over the segment of (slower mean / faster mean) per size.
    pub mean_ratio: f64,
}

/// Detects performance tracks between two series on their common sizes.
///
/// The winner at a size is the lower mean wall time, except that overlapping
/// confidence intervals make the size a tie; ties inherit the winner of the
/// preceding decided size (or the following one at the start), so no
/// spurious single-point segment appears. When every common size ties, a
/// single [`SegmentWinner::StatisticalTie`] segment covers the axis.
pub fn detect_tracks(
    a: &SweepSeries,
    b: &SweepSeries,
) -> Result<Vec<TrackSegment>, AnalyticsError> {
    let common: Vec<(u64, &SeriesPoint, &SeriesPoint)> = a
        .points
        .iter()
        .filter_map(|pa| b.point_at(pa.size).map(|pb| (pa.size, pa, pb)))
        .collect();
    if common.len() < 2 {
        return Err(AnalyticsError::InsufficientOverlap);
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Outcome {
        First,
        Second,
        Tie,
    }
    let outcomes: Vec<Outcome> = common
        .iter()
        .map(|(_, pa, pb)| {
            let gap = (pa.mean_wall_ms - pb.mean_wall_ms).abs();
            if gap <= pa.ci_halfwidth_ms + pb.ci_halfwidth_ms {
                Outcome::Tie
            } else if pa.mean_wall_ms < pb.mean_wall_ms {
                Outcome::First
            } else {
                Outcome::Second
            }
        })
        .collect();

    if outcomes.iter().all(|o| *o == Outcome::Tie) {
        let ratio = mean_ratio(&common, 0, common.len());
        return Ok(vec![TrackSegment {
            winner: SegmentWinner::StatisticalTie,
            lo_size: common[0].0,
            hi_size: common[common.len() - 1].0,
            mean_ratio: ratio,
        }]);
    }

    // Resolve ties: inherit the previous decided winner, or the next one for
    // a leading run of ties.
    let mut resolved: Vec<Outcome> = Vec::with_capacity(outcomes.len());
    let first_decided = *outcomes.iter().find(|o| **o != Outcome::Tie).unwrap();
    let mut current = first_decided;
    for o in &outcomes {
        if *o != Outcome::Tie {
            current = *o;
        }
        resolved.push(current);
    }

    let mut segments = Vec::new();
    let mut start = 0;
    for i in 1..=resolved.len() {
        if i == resolved.len() || resolved[i] != resolved[start] {
            segments.push(TrackSegment {
                winner: match resolved[start] {
                    Outcome::First => SegmentWinner::First,
                    Outcome::Second => SegmentWinner::Second,
                    Outcome::Tie => unreachable!("ties were resolved"),
                },
                lo_size: common[start].0,
                hi_size: common[i - 1].0,
                mean_ratio: mean_ratio(&common, start, i),
            });
            start = i;
        }
    }
    Ok(segments)
}

fn mean_ratio(common: &[(u64, &SeriesPoint, &SeriesPoint)], lo: usize, hi: usize) -> f64 {
    let mut acc = 0.0;
    for (_, pa, pb) in &common[lo..hi] {
        let (fast, slow) = if pa.mean_wall_ms <= pb.mean_wall_ms {
            (pa.mean_wall_ms, pb.mean_wall_ms)
        } else {
            (pb.mean_wall_ms, pa.mean_wall_ms)
        };
        acc += if fast > 0.0 { slow / fast } else { 1.0 };
    }
    acc / (hi - lo) as f64
}

/// Speedup of `a` over `b` at one size: `b.mean / a.mean`, above 1 when `a`
/// is faster.
pub fn speedup(a: &SeriesPoint, b: &SeriesPoint) -> Result<f64, AnalyticsError> {
    if a.size != b.size {
        return Err(AnalyticsError::Mismatch(format!(
            "size {} vs {}",
            a.size, b.size
        )));
    }
    if !a.mean_wall_ms.is_finite()
        || !b.mean_wall_ms.is_finite()
        || a.mean_wall_ms <= 0.0
        || b.mean_wall_ms <= 0.0
    {
        return Err(AnalyticsError::Mismatch("means must be positive".into()));
    }
    Ok(b.mean_wall_ms / a.mean_wall_ms)
}
