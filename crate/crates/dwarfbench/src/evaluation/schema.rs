//! Self-describing results schema.
//!
//! Every file this toolkit reads or writes is a JSON document wrapped in an
//! envelope carrying a mandatory `schema_version` and a `kind` tag
//! (`series`, `report` or `campaign`). Loads reject version or kind
//! mismatches and report the line/column locus of parse failures.

use super::EvalError;
use crate::harness::StoredSeries;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// Version of the on-disk schema this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    schema_version: u32,
    kind: String,
    #[serde(flatten)]
    body: T,
}

/// Serializes a body under the standard envelope; deterministic bytes for
/// identical input.
pub fn to_string<T: Serialize>(kind: &str, body: &T) -> String {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        kind: kind.to_string(),
        body,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("serializable body");
    s.push('\n');
    s
}

pub fn from_str<T: DeserializeOwned>(kind: &str, origin: &str, text: &str) -> Result<T, EvalError> {
    let env: Envelope<T> = serde_json::from_str(text).map_err(|e| EvalError::Schema {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        detail: e.to_string(),
    })?;
    if env.schema_version != SCHEMA_VERSION {
        return Err(EvalError::Schema {
            path: origin.to_string(),
            line: 0,
            column: 0,
            detail: format!(
                "incompatible schema version {} (expected {SCHEMA_VERSION})",
                env.schema_version
            ),
        });
    }
    if env.kind != kind {
        return Err(EvalError::Schema {
            path: origin.to_string(),
            line: 0,
            column: 0,
            detail: format!("expected a {kind:?} file, found {:?}", env.kind),
        });
    }
    Ok(env.body)
}

pub fn save<T: Serialize>(kind: &str, body: &T, path: &Path) -> Result<(), EvalError> {
    fs::write(path, to_string(kind, body)).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

pub fn load<T: DeserializeOwned>(kind: &str, path: &Path) -> Result<T, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    from_str(kind, &path.display().to_string(), &text)
}

/// Writes one sweep series (with metadata and skip list) to `path`.
pub fn save_series(series: &StoredSeries, path: &Path) -> Result<(), EvalError> {
    save("series", series, path)
}

pub fn series_to_string(series: &StoredSeries) -> String {
    to_string("series", series)
}

/// Loads and validates a sweep series file.
pub fn load_series(path: &Path) -> Result<StoredSeries, EvalError> {
    let stored: StoredSeries = load("series", path)?;
    stored.validate().map_err(|e| EvalError::Schema {
        path: path.display().to_string(),
        line: 0,
        column: 0,
        detail: e.to_string(),
    })?;
    Ok(stored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{SeriesLabels, SeriesPoint, SweepSeries};
    use crate::harness::{Affinity, SeriesMeta, SkippedPoint};
    use crate::host::HostInfo;
    use crate::kernels::{DwarfClass, KernelKind, KernelParams};

    pub(crate) fn sample_series() -> StoredSeries {
        let labels = SeriesLabels {
            kernel: KernelKind::Lud,
            dwarf: DwarfClass::DenseLinearAlgebra,
            toolchain: "OpenMP".into(),
            config: "Arch A".into(),
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
                kernel_params: KernelParams::Lud,
                created_unix_s: None,
                interpolated_sizes: vec![],
                notes: vec![],
            },
            series: SweepSeries {
                labels,
                points: vec![SeriesPoint {
                    size: 32768,
                    mean_wall_ms: 4_248_065.0,
                    std_wall_ms: 0.0,
                    ci_halfwidth_ms: 0.0,
                    cpu_pct: 100.0,
                    io_pct: 0.0,
                    mem_pct: 0.0,
                    other_pct: 0.0,
                    n: 30,
                    wide_ci: false,
                }],
            },
            skipped: vec![SkippedPoint {
                size: 65536,
                kind: crate::harness::SkipKind::InsufficientMemory,
                reason: "example".into(),
            }],
        }
    }

    #[test]
    fn series_round_trips_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.json");
        let series = sample_series();
        save_series(&series, &path).unwrap();
        let loaded = load_series(&path).unwrap();
        assert_eq!(loaded, series);
        // Byte-level determinism of the writer.
        assert_eq!(series_to_string(&series), series_to_string(&loaded));
    }

    #[test]
    fn negative_wall_time_is_rejected() {
        let mut series = sample_series();
        series.series.points[0].mean_wall_ms = -1.0;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        save_series(&series, &path).unwrap();
        match load_series(&path) {
            Err(EvalError::Schema { detail, .. }) => assert!(detail.contains("positive")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let text = series_to_string(&sample_series()).replace(
            "\"schema_version\": 1",
            "\"schema_version\": 99",
        );
        let r: Result<StoredSeries, _> = from_str("series", "inline", &text);
        match r {
            Err(EvalError::Schema { detail, .. }) => {
                assert!(detail.contains("incompatible schema version"))
            }
            other => panic!("expected schema error, got {:?}", other.err()),
        }
    }

    #[test]
    fn parse_error_carries_locus() {
        let r: Result<StoredSeries, _> = from_str("series", "inline", "{ not json");
        match r {
            Err(EvalError::Schema { line, .. }) => assert!(line >= 1),
            other => panic!("expected schema error, got {:?}", other.err()),
        }
    }
}
