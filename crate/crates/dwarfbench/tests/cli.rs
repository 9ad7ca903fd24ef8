//! End-to-end binary behavior: exit codes under fault injection and closure
//! of the CLI under its own file formats.

mod common;

use common::fixtures_dir;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dwarfbench"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .env_remove("DWARFBENCH_STRICT")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn presets_lists_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["presets"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for name in ["lud-desk", "kmeans-desk", "bptree-desk", "lud-full"] {
        assert!(text.contains(name), "missing preset {name} in:\n{text}");
    }
}

#[test]
fn unknown_plan_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["run", "--plan", "does-not-exist"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_with_single_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixtures_dir().join("lud_arch_a_openmp.json");
    let out = run_in(dir.path(), &["compare", fixture.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classify_missing_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["classify", "no-such-file.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classify_empty_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    let out = run_in(dir.path(), &["classify", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn schema_version_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixtures_dir().join("lud_arch_a_openmp.json");
    let text = std::fs::read_to_string(&fixture)
        .unwrap()
        .replace("\"schema_version\": 1", "\"schema_version\": 99");
    let bumped = dir.path().join("bumped.json");
    std::fs::write(&bumped, text).unwrap();
    let other = fixtures_dir().join("lud_arch_a_opencl.json");
    let out = run_in(
        dir.path(),
        &["compare", bumped.to_str().unwrap(), other.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn strict_mode_with_incomplete_sampler_exits_3() {
    use dwarfbench::harness::backend_is_complete;
    use dwarfbench::profiler::SamplerBackend;
    if backend_is_complete(&SamplerBackend::probe()) {
        eprintln!("skipping: this host has full sampler capabilities, strict mode would pass");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "sweep", "--kernel", "lud", "--sizes", "8", "--reps", "1", "--strict",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_with_unrunnable_size_exits_1_and_records_skip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "sweep", "--kernel", "lud", "--sizes", "16,30000000", "--reps", "1",
            "--affinity", "none", "--out-dir", "res",
        ],
    );
    assert_eq!(out.status.code(), Some(1), "stdout: {}", stdout(&out));
    let stored = dwarfbench::harness::import_series(&dir.path().join("res/lud-sweep.json")).unwrap();
    assert_eq!(stored.series.points.len(), 1);
    assert_eq!(stored.skipped.len(), 1);
    assert_eq!(stored.skipped[0].size, 30_000_000);
}

#[test]
fn campaign_plan_runs_and_point_count_matches_plan() {
    let dir = tempfile::tempdir().unwrap();
    let campaign = r#"{
  "schema_version": 1,
  "kind": "campaign",
  "name": "test-campaign",
  "plans": [
    {
      "label": "tiny-lud",
      "kernel": "lud",
      "sizes": [8, 16, 24],
      "repetitions": 2,
      "warmup_runs": 0,
      "threads": 1,
      "affinity": "none"
    }
  ]
}
"#;
    let config = dir.path().join("campaign.json");
    std::fs::write(&config, campaign).unwrap();
    let out = run_in(
        dir.path(),
        &[
            "run", "--plan", "tiny-lud", "--config", config.to_str().unwrap(),
            "--out-dir", "res",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stored = dwarfbench::harness::import_series(&dir.path().join("res/tiny-lud.json")).unwrap();
    // The series file carries exactly one aggregated record per plan size.
    assert_eq!(stored.series.points.len(), 3);
    assert_eq!(stored.meta.repetitions, 2);
    for p in &stored.series.points {
        assert_eq!(p.n, 2);
    }
}

#[test]
fn preset_run_honors_reps_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let campaign = r#"{
  "schema_version": 1,
  "kind": "campaign",
  "name": "env-campaign",
  "plans": [
    {
      "label": "env-lud",
      "kernel": "lud",
      "sizes": [8],
      "repetitions": 5,
      "warmup_runs": 0,
      "threads": 1,
      "affinity": "none"
    }
  ]
}
"#;
    let config = dir.path().join("campaign.json");
    std::fs::write(&config, campaign).unwrap();
    let out = bin()
        .args(["run", "--plan", "env-lud", "--config", config.to_str().unwrap(), "--out-dir", "res"])
        .current_dir(dir.path())
        .env("DWARFBENCH_REPS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stored = dwarfbench::harness::import_series(&dir.path().join("res/env-lud.json")).unwrap();
    assert_eq!(stored.meta.repetitions, 3, "env override should beat the campaign value");
}

#[test]
fn compare_report_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    // Two tiny sweeps differing in toolchain label.
    for toolchain in ["rust", "rust-b"] {
        let out = run_in(
            dir.path(),
            &[
                "sweep", "--kernel", "lud", "--sizes", "8,16", "--reps", "2",
                "--affinity", "none", "--toolchain", toolchain, "--out-dir", toolchain,
            ],
        );
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = dir.path().join("rust/lud-sweep.json");
    let b = dir.path().join("rust-b/lud-sweep.json");
    let out = run_in(
        dir.path(),
        &[
            "compare", a.to_str().unwrap(), b.to_str().unwrap(),
            "--format", "structured-records,tabular-text,delimited-values",
            "--out-dir", "rep",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("best"));

    // The structured report re-imports and re-renders identically.
    let report_path = dir.path().join("rep/comparison.json");
    let report = dwarfbench::evaluation::import_report(&report_path).unwrap();
    let emitted = dwarfbench::evaluation::emit_report(
        &report,
        dwarfbench::evaluation::ReportFormat::StructuredRecords,
    );
    assert_eq!(emitted, std::fs::read_to_string(&report_path).unwrap());

    // And the `report` command renders it to stdout.
    let out = run_in(dir.path(), &["report", report_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("comparison report"));
}

#[test]
fn classify_fixture_reports_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixtures_dir().join("lud_arch_a_openmp.json");
    let out = run_in(dir.path(), &["classify", fixture.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("cpu_bound"), "{text}");
    assert!(text.contains("consistent"), "{text}");
}

#[test]
fn plot_emits_time_vs_size_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = fixtures_dir().join("lud_arch_a_openmp.json");
    let b = fixtures_dir().join("lud_arch_a_opencl.json");
    let out = run_in(
        dir.path(),
        &[
            "plot", a.to_str().unwrap(), b.to_str().unwrap(),
            "--kind", "time_vs_size", "--out-dir", "plots",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("plots/time_vs_size.csv")).unwrap();
    assert!(csv.contains("# kind: time_vs_size"));
    assert!(csv.contains("32768,347173,4248065"));
}
