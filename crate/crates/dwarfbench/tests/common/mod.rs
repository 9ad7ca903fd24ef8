//! Shared builders for integration tests: the imported cross-architecture
//! reference measurements and small synthetic series.
#![allow(dead_code)] // each test binary uses a different subset

use dwarfbench::analytics::{SeriesLabels, SeriesPoint, SweepSeries};
use dwarfbench::harness::{Affinity, SeriesMeta, StoredSeries};
use dwarfbench::host::HostInfo;
use dwarfbench::kernels::{KernelKind, KernelParams};

pub struct ForeignPoint {
    pub kernel: KernelKind,
    pub config: &'static str,
    pub toolchain: &'static str,
    pub size: u64,
    pub mean_wall_ms: f64,
    /// (cpu, io, mem, other)
    pub pcts: (f64, f64, f64, f64),
    pub cores: u32,
    pub mhz: f64,
}

/// Imported OpenMP/OpenCL wall-time means at the largest input on two x86
/// machines (64 cores @ 2.3 GHz and 32 cores @ 2.2 GHz). Twelve values, six
/// (kernel, machine) rows. LU rows are compute-dominant, B+Tree rows
/// memory-dominant, and Kmeans under OpenCL is memory-dominant while its
/// OpenMP build is compute-dominant.
pub fn foreign_points() -> Vec<ForeignPoint> {
    const CPU: (f64, f64, f64, f64) = (95.0, 1.0, 3.0, 1.0);
    const MEM: (f64, f64, f64, f64) = (5.0, 20.0, 70.0, 5.0);
    let row = |kernel, config, toolchain, size, mean, pcts, cores, mhz| ForeignPoint {
        kernel,
        config,
        toolchain,
        size,
        mean_wall_ms: mean,
        pcts,
        cores,
        mhz,
    };
    vec![
        row(KernelKind::Lud, "Arch A", "OpenMP", 32768, 4_248_065.0, CPU, 64, 2300.0),
        row(KernelKind::Lud, "Arch A", "OpenCL", 32768, 347_173.0, CPU, 64, 2300.0),
        row(KernelKind::Lud, "Arch B", "OpenMP", 32768, 5_138_300.0, CPU, 32, 2200.0),
        row(KernelKind::Lud, "Arch B", "OpenCL", 32768, 340_379.0, CPU, 32, 2200.0),
        row(KernelKind::Kmeans, "Arch A", "OpenMP", 9_830_400, 70_850.0, CPU, 64, 2300.0),
        row(KernelKind::Kmeans, "Arch A", "OpenCL", 9_830_400, 143_206.0, MEM, 64, 2300.0),
        row(KernelKind::Kmeans, "Arch B", "OpenMP", 9_830_400, 219_644.0, CPU, 32, 2200.0),
        row(KernelKind::Kmeans, "Arch B", "OpenCL", 9_830_400, 121_150.0, MEM, 32, 2200.0),
        row(KernelKind::BpTree, "Arch A", "OpenMP", 50_000_000, 2_070_768.0, MEM, 64, 2300.0),
        row(KernelKind::BpTree, "Arch A", "OpenCL", 50_000_000, 12_102_442.0, MEM, 64, 2300.0),
        row(KernelKind::BpTree, "Arch B", "OpenMP", 50_000_000, 639_871.0, MEM, 32, 2200.0),
        row(KernelKind::BpTree, "Arch B", "OpenCL", 50_000_000, 5_102_661.0, MEM, 32, 2200.0),
    ]
}

pub fn foreign_series_set() -> Vec<StoredSeries> {
    foreign_points()
        .into_iter()
        .map(|p| {
            series_with_points(
                p.kernel,
                p.config,
                p.toolchain,
                p.cores,
                p.mhz,
                &[(p.size, p.mean_wall_ms, 0.0, p.pcts)],
            )
        })
        .collect()
}

/// (size, mean wall ms, ci half-width, (cpu, io, mem, other) percentages).
pub type PointTuple = (u64, f64, f64, (f64, f64, f64, f64));

/// Builds a stored series from [`PointTuple`]s.
pub fn series_with_points(
    kernel: KernelKind,
    config: &str,
    toolchain: &str,
    cores: u32,
    mhz: f64,
    points: &[PointTuple],
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
                cores,
                nominal_mhz: mhz,
                os: "linux".into(),
            },
            sampler_backend: "imported".into(),
            capabilities: vec![],
            affinity_requested: Affinity::Scatter,
            affinity_applied: Affinity::Scatter,
            threads: cores,
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
                .map(|&(size, mean, ci, (cpu, io, mem, other))| SeriesPoint {
                    size,
                    mean_wall_ms: mean,
                    std_wall_ms: 0.0,
                    ci_halfwidth_ms: ci,
                    cpu_pct: cpu,
                    io_pct: io,
                    mem_pct: mem,
                    other_pct: other,
                    n: 30,
                    wide_ci: false,
                })
                .collect(),
        },
        skipped: vec![],
    }
}

/// Directory holding the checked-in fixture files.
pub fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Directory holding golden outputs.
pub fn golden_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}
