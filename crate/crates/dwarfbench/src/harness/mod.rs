//! Repetition protocols and problem-size sweeps.
//!
//! A sweep runs points strictly sequentially — one kernel owns the machine at
//! a time — with per-point memory checks, a correctness assertion before any
//! timing is trusted, discarded warmup runs, and a fixed repetition count per
//! point (default 30). Skipped and invalid points are recorded next to the
//! series instead of corrupting it.

mod affinity;
mod presets;
mod workload;

pub use affinity::{apply as apply_affinity, Affinity, AffinityGuard};
pub use presets::{all as all_presets, find as find_preset, Preset};
pub use workload::{GeneratedWorkload, KernelRun};

use crate::analytics::{aggregate, AnalyticsError, SeriesLabels, SweepSeries};
use crate::host::{self, HostInfo};
use crate::kernels::{KernelError, KernelKind, KernelParams, WorkloadSpec};
use crate::profiler::{profile, Capability, EeaRecord, ProfileError, RunLabels, SamplerBackend};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("workload skipped (size {size}): {reason}")]
    PointSkipped { size: u64, reason: String },
    #[error("kernel output invalid (size {size}): {reason}")]
    PointInvalid { size: u64, reason: String },
    #[error("every point of the sweep was skipped; no series to aggregate")]
    EmptySeries,
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Import(#[from] crate::evaluation::EvalError),
}

/// Loads a series file written by this toolkit (or by hand, e.g. results
/// imported from a foreign machine) and revalidates every series invariant.
pub fn import_series(path: &std::path::Path) -> Result<StoredSeries, HarnessError> {
    Ok(crate::evaluation::schema::load_series(path)?)
}

/// How kernels are executed: thread count, placement, repetition protocol
/// and the labels stamped on every record.
pub struct ExecutionConfig {
    pub threads: usize,
    pub affinity: Affinity,
    pub repetitions: u32,
    pub warmup_runs: u32,
    pub backend: SamplerBackend,
    pub config_label: String,
    pub toolchain: String,
}

impl ExecutionConfig {
    /// All available cores, scatter affinity, 30 repetitions, 1 warmup.
    pub fn default_for_host(backend: SamplerBackend) -> Self {
        ExecutionConfig {
            threads: host::cores(),
            affinity: Affinity::Scatter,
            repetitions: 30,
            warmup_runs: 1,
            backend,
            config_label: "local".into(),
            toolchain: "rust".into(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.threads == 0 {
            return Err(HarnessError::Config("threads must be positive".into()));
        }
        let cores = host::cores();
        if self.threads > cores {
            return Err(HarnessError::Config(format!(
                "threads {} exceeds the {cores} available cores",
                self.threads
            )));
        }
        if self.repetitions == 0 {
            return Err(HarnessError::Config("repetitions must be positive".into()));
        }
        Ok(())
    }
}

/// One sweep: a kernel, its ascending workload sizes and the execution
/// configuration.
pub struct SweepPlan {
    pub label: String,
    pub kernel: KernelKind,
    pub specs: Vec<WorkloadSpec>,
    pub exec: ExecutionConfig,
    /// Sizes carried over from a preset as interpolated rather than fixed.
    pub interpolated_sizes: Vec<u64>,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.exec.validate()?;
        if self.specs.is_empty() {
            return Err(HarnessError::Config("a sweep needs at least one size".into()));
        }
        if !self.specs.windows(2).all(|w| w[0].size < w[1].size) {
            return Err(HarnessError::Config(
                "sweep sizes must be strictly ascending".into(),
            ));
        }
        for spec in &self.specs {
            if spec.kernel != self.kernel {
                return Err(HarnessError::Config(format!(
                    "plan kernel {} does not match workload kernel {}",
                    self.kernel, spec.kernel
                )));
            }
            spec.validate()?;
        }
        Ok(())
    }
}

/// Why a point produced no series entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipKind {
    InsufficientMemory,
    CorrectnessFailure,
    GenerationFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub size: u64,
    pub kind: SkipKind,
    pub reason: String,
}

/// Provenance metadata stored with every series file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub host: HostInfo,
    pub sampler_backend: String,
    pub capabilities: Vec<String>,
    pub affinity_requested: Affinity,
    pub affinity_applied: Affinity,
    pub threads: u32,
    pub repetitions: u32,
    pub warmup_runs: u32,
    pub seed: u64,
    pub kernel_params: KernelParams,
    /// Unix seconds at sweep start; absent for imported or synthetic data.
    pub created_unix_s: Option<u64>,
    pub interpolated_sizes: Vec<u64>,
    pub notes: Vec<String>,
}

/// A sweep series together with its metadata and any skipped points — the
/// unit the results schema stores per file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSeries {
    pub labels: SeriesLabels,
    pub meta: SeriesMeta,
    pub series: SweepSeries,
    pub skipped: Vec<SkippedPoint>,
}

impl StoredSeries {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        if self.labels != self.series.labels {
            return Err(AnalyticsError::InvalidSeries(
                "outer labels disagree with series labels".into(),
            ));
        }
        self.series.validate()
    }
}

/// Safety factor applied to MemAvailable before admitting a workload.
const MEMORY_HEADROOM: f64 = 0.8;

/// Runs one sweep point: memory check, generation, correctness assertion,
/// warmup, then `repetitions` profiled runs with identical labels.
///
/// The correctness run doubles as the first warmup run.
pub fn run_point(
    spec: &WorkloadSpec,
    cfg: &ExecutionConfig,
) -> Result<Vec<EeaRecord>, HarnessError> {
    cfg.validate()?;
    spec.validate()?;

    let needed = spec.estimated_bytes();
    if let Some(avail) = host::mem_available_bytes() {
        let budget = (avail as f64 * MEMORY_HEADROOM) as u64;
        if needed > budget {
            return Err(HarnessError::PointSkipped {
                size: spec.size,
                reason: format!(
                    "needs about {} MiB, only {} MiB available",
                    needed >> 20,
                    budget >> 20
                ),
            });
        }
    }

    let _affinity = affinity::apply(cfg.threads, cfg.affinity);

    let workload = GeneratedWorkload::generate(spec).map_err(|e| HarnessError::PointInvalid {
        size: spec.size,
        reason: format!("generation failed: {e}"),
    })?;

    // Correctness before timing; this run also warms caches and allocator.
    let first = workload
        .run(cfg.threads)
        .map_err(|e| HarnessError::PointInvalid {
            size: spec.size,
            reason: format!("kernel failed: {e}"),
        })?;
    workload
        .verify(&first, cfg.threads)
        .map_err(|reason| HarnessError::PointInvalid { size: spec.size, reason })?;
    drop(first);

    for _ in 1..cfg.warmup_runs {
        let run = workload.run(cfg.threads).map_err(|e| HarnessError::PointInvalid {
            size: spec.size,
            reason: format!("kernel failed during warmup: {e}"),
        })?;
        std::hint::black_box(run.checksum());
    }

    let labels = RunLabels {
        dwarf: spec.dwarf(),
        toolchain: cfg.toolchain.clone(),
        config: cfg.config_label.clone(),
        workload: spec.clone(),
        threads: cfg.threads as u32,
    };
    let mut records = Vec::with_capacity(cfg.repetitions as usize);
    for _ in 0..cfg.repetitions {
        let (record, run) = profile(|| workload.run(cfg.threads), &labels, &cfg.backend)?;
        let run = run.map_err(|e| HarnessError::PointInvalid {
            size: spec.size,
            reason: format!("kernel failed during measurement: {e}"),
        })?;
        std::hint::black_box(run.checksum());
        records.push(record);
    }
    Ok(records)
}

/// Runs `spec` once and digests the kernel output, for determinism checks
/// across invocations.
pub fn result_checksum(spec: &WorkloadSpec, threads: usize) -> Result<u64, HarnessError> {
    let workload = GeneratedWorkload::generate(spec)?;
    Ok(workload.run(threads)?.checksum())
}

/// Executes a whole sweep: one aggregated point per size in ascending order.
/// Skipped or invalid points are recorded with their reason; a sweep where
/// nothing ran at all is an error.
pub fn run_sweep(plan: &SweepPlan) -> Result<StoredSeries, HarnessError> {
    plan.validate()?;
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs());

    let mut points = Vec::new();
    let mut skipped = Vec::new();
    let mut affinity_applied = Affinity::None;
    let mut affinity_probed = false;

    for spec in &plan.specs {
        if !affinity_probed {
            let guard = affinity::apply(plan.exec.threads, plan.exec.affinity);
            affinity_applied = guard.applied;
            affinity_probed = true;
        }
        match run_point(spec, &plan.exec) {
            Ok(records) => points.push(aggregate(&records)?),
            Err(HarnessError::PointSkipped { size, reason }) => skipped.push(SkippedPoint {
                size,
                kind: SkipKind::InsufficientMemory,
                reason,
            }),
            Err(HarnessError::PointInvalid { size, reason }) => skipped.push(SkippedPoint {
                size,
                kind: if reason.starts_with("generation") {
                    SkipKind::GenerationFailure
                } else {
                    SkipKind::CorrectnessFailure
                },
                reason,
            }),
            Err(other) => return Err(other),
        }
    }
    if points.is_empty() {
        return Err(HarnessError::EmptySeries);
    }

    let first_spec = &plan.specs[0];
    let labels = SeriesLabels {
        kernel: plan.kernel,
        dwarf: plan.kernel.dwarf(),
        toolchain: plan.exec.toolchain.clone(),
        config: plan.exec.config_label.clone(),
    };
    let mut notes = Vec::new();
    if affinity_applied != plan.exec.affinity {
        notes.push(format!(
            "affinity degraded from {} to {}",
            plan.exec.affinity, affinity_applied
        ));
    }
    if plan.exec.repetitions < 2 {
        notes.push("repetitions < 2: confidence intervals are degenerate".into());
    }
    let meta = SeriesMeta {
        host: HostInfo::gather(),
        sampler_backend: plan.exec.backend.name().to_string(),
        capabilities: plan
            .exec
            .backend
            .capabilities()
            .iter()
            .map(|c| c.to_string())
            .collect(),
        affinity_requested: plan.exec.affinity,
        affinity_applied,
        threads: plan.exec.threads as u32,
        repetitions: plan.exec.repetitions,
        warmup_runs: plan.exec.warmup_runs,
        seed: first_spec.seed,
        kernel_params: first_spec.params,
        created_unix_s: created,
        interpolated_sizes: plan.interpolated_sizes.clone(),
        notes,
    };
    let stored = StoredSeries {
        labels: labels.clone(),
        meta,
        series: SweepSeries { labels, points },
        skipped,
    };
    stored.validate()?;
    Ok(stored)
}

/// True when the backend satisfies strict-mode requirements: full I/O and
/// memory-stall observability.
pub fn backend_is_complete(backend: &SamplerBackend) -> bool {
    backend.has(Capability::CpuTime)
        && backend.has(Capability::IoWait)
        && backend.has(Capability::MemStall)
}
