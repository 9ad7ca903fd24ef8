//! Command-line workflow: run sweeps, compare series, classify boundedness,
//! re-render reports.
//!
//! Exit codes: 0 success, 1 partial results (some points skipped), 2
//! configuration error, 3 environment error (sampler or affinity incomplete
//! under `--strict`). Every flag can also be set through a `DWARFBENCH_*`
//! environment variable.

use crate::analytics::{classify_boundedness, classify_series, consistency_check, Trend};
use crate::evaluation::{
    compare, emit_report, import_report, plot_data, schema, EvalError, Moe, PlotKind, ReportFormat,
};
use crate::harness::{
    self, apply_affinity, backend_is_complete, find_preset, import_series, Affinity,
    ExecutionConfig, HarnessError, StoredSeries, SweepPlan,
};
use crate::kernels::{KernelKind, WorkloadSpec};
use crate::profiler::SamplerBackend;
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ENVIRONMENT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "dwarfbench",
    version,
    about = "Dwarf-kernel workload characterization and architecture evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Campaign configuration file (JSON, kind "campaign").
    #[arg(long, global = true, env = "DWARFBENCH_CONFIG")]
    pub config: Option<PathBuf>,

    /// Directory for result and report files.
    #[arg(long, global = true, env = "DWARFBENCH_OUT_DIR", default_value = "results")]
    pub out_dir: PathBuf,

    /// Fail instead of degrading when sampler capabilities or affinity are
    /// unavailable.
    #[arg(long, global = true, env = "DWARFBENCH_STRICT")]
    pub strict: bool,

    /// Workload generation seed.
    #[arg(long, global = true, env = "DWARFBENCH_SEED")]
    pub seed: Option<u64>,

    /// Kernel thread count (default: all available cores).
    #[arg(long, global = true, env = "DWARFBENCH_THREADS")]
    pub threads: Option<usize>,

    /// Thread placement: scatter, compact or none.
    #[arg(long, global = true, env = "DWARFBENCH_AFFINITY", value_parser = parse_affinity)]
    pub affinity: Option<Affinity>,

    /// Repetitions per sweep point.
    #[arg(long, global = true, env = "DWARFBENCH_REPS")]
    pub reps: Option<u32>,

    /// Report formats (comma separated).
    #[arg(
        long,
        global = true,
        env = "DWARFBENCH_FORMAT",
        value_delimiter = ',',
        value_parser = parse_format
    )]
    pub format: Vec<ReportFormat>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a named plan from the campaign config or a built-in preset.
    Run {
        #[arg(long)]
        plan: String,
    },
    /// Run an ad-hoc sweep over explicit sizes.
    Sweep {
        #[arg(long, value_parser = parse_kernel)]
        kernel: KernelKind,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<u64>,
        /// Label written into the series ("config" column of reports).
        #[arg(long, default_value = "local")]
        config_label: String,
        #[arg(long, default_value = "rust")]
        toolchain: String,
        #[arg(long, default_value_t = 1)]
        warmup: u32,
    },
    /// Compare two or more series files and emit reports.
    Compare {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Effectiveness criteria file (JSON, kind "moes").
        #[arg(long)]
        moe: Option<PathBuf>,
    },
    /// Classify the resource boundedness of one series file.
    Classify { file: PathBuf },
    /// Re-render a structured report file in other formats.
    Report { file: PathBuf },
    /// Emit plot data from series files.
    Plot {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, value_parser = parse_plot_kind, default_value = "time_vs_size")]
        kind: PlotKind,
    },
    /// List built-in sweep presets.
    Presets,
}

fn parse_affinity(s: &str) -> Result<Affinity, String> {
    Affinity::from_str(s)
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    ReportFormat::from_str(s).map_err(|e| e.to_string())
}

fn parse_kernel(s: &str) -> Result<KernelKind, String> {
    KernelKind::from_str(s).map_err(|e| e.to_string())
}

fn parse_plot_kind(s: &str) -> Result<PlotKind, String> {
    PlotKind::from_str(s).map_err(|e| e.to_string())
}

/// Campaign file: named sweep plans, effectiveness criteria and output
/// settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub name: String,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub report_formats: Vec<ReportFormat>,
    pub plans: Vec<PlanConfig>,
    #[serde(default)]
    pub moes: Vec<Moe>,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let mut labels: Vec<&str> = self.plans.iter().map(|p| p.label.as_str()).collect();
        labels.sort_unstable();
        let before = labels.len();
        labels.dedup();
        if labels.len() != before {
            return Err(EvalError::Config("duplicate plan labels in campaign".into()));
        }
        for plan in &self.plans {
            if plan.preset.is_none() && (plan.kernel.is_none() || plan.sizes.is_none()) {
                return Err(EvalError::Config(format!(
                    "plan {:?} needs either a preset or kernel + sizes",
                    plan.label
                )));
            }
            if let Some(name) = &plan.preset {
                if find_preset(name).is_none() {
                    return Err(EvalError::Config(format!(
                        "plan {:?} references unknown preset {name:?}",
                        plan.label
                    )));
                }
            }
        }
        for moe in &self.moes {
            moe.validate()?;
        }
        Ok(())
    }
}

/// One plan declaration inside a campaign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanConfig {
    pub label: String,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub kernel: Option<KernelKind>,
    #[serde(default)]
    pub sizes: Option<Vec<u64>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub affinity: Option<Affinity>,
    #[serde(default)]
    pub repetitions: Option<u32>,
    #[serde(default)]
    pub warmup_runs: Option<u32>,
    #[serde(default)]
    pub config_label: Option<String>,
    #[serde(default)]
    pub toolchain: Option<String>,
}

/// Effectiveness criteria file body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoeFile {
    pub moes: Vec<Moe>,
}

/// Runs the parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            classify_exit(&err)
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("environment error: {0}")]
    Environment(String),
}

fn classify_exit(err: &CliError) -> i32 {
    match err {
        CliError::Environment(_) => EXIT_ENVIRONMENT,
        CliError::Harness(HarnessError::Import(e)) => eval_exit(e),
        CliError::Eval(e) => eval_exit(e),
        CliError::Harness(_) => EXIT_CONFIG,
    }
}

fn eval_exit(_: &EvalError) -> i32 {
    EXIT_CONFIG
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Run { plan } => cmd_run(cli, plan),
        Command::Sweep {
            kernel,
            sizes,
            config_label,
            toolchain,
            warmup,
        } => {
            let plan = adhoc_plan(cli, *kernel, sizes, config_label, toolchain, *warmup)?;
            execute_plan(cli, plan)
        }
        Command::Compare { files, moe } => cmd_compare(cli, files, moe.as_deref()),
        Command::Classify { file } => cmd_classify(file),
        Command::Report { file } => cmd_report(cli, file),
        Command::Plot { files, kind } => cmd_plot(cli, files, *kind),
        Command::Presets => cmd_presets(),
    }
}

fn load_campaign(path: &Path) -> Result<CampaignConfig, EvalError> {
    let campaign: CampaignConfig = schema::load("campaign", path)?;
    campaign.validate()?;
    Ok(campaign)
}

fn make_backend() -> SamplerBackend {
    SamplerBackend::probe()
}

/// Applies strict-mode environment requirements before any timing run.
fn strict_gate(cli: &Cli, exec: &ExecutionConfig) -> Result<(), CliError> {
    if !cli.strict {
        return Ok(());
    }
    if !backend_is_complete(&exec.backend) {
        let caps: Vec<String> = exec
            .backend
            .capabilities()
            .iter()
            .map(|c| c.to_string())
            .collect();
        return Err(CliError::Environment(format!(
            "sampler backend {:?} lacks required capabilities (has: {})",
            exec.backend.name(),
            caps.join(", ")
        )));
    }
    if exec.affinity != Affinity::None {
        let guard = apply_affinity(exec.threads, exec.affinity);
        if guard.applied != exec.affinity {
            return Err(CliError::Environment(format!(
                "affinity {} unavailable on this host",
                exec.affinity
            )));
        }
    }
    Ok(())
}

fn exec_config(cli: &Cli, backend: SamplerBackend) -> ExecutionConfig {
    let mut exec = ExecutionConfig::default_for_host(backend);
    if let Some(threads) = cli.threads {
        exec.threads = threads;
    }
    if let Some(affinity) = cli.affinity {
        exec.affinity = affinity;
    }
    if let Some(reps) = cli.reps {
        exec.repetitions = reps;
    }
    exec
}

fn specs_for(kernel: KernelKind, sizes: &[u64], seed: u64) -> Vec<WorkloadSpec> {
    sizes
        .iter()
        .map(|&size| match kernel {
            KernelKind::Lud => WorkloadSpec::lud(size, seed),
            KernelKind::Kmeans => WorkloadSpec::kmeans(size, seed),
            KernelKind::BpTree => WorkloadSpec::bptree(size, seed),
        })
        .collect()
}

fn adhoc_plan(
    cli: &Cli,
    kernel: KernelKind,
    sizes: &[u64],
    config_label: &str,
    toolchain: &str,
    warmup: u32,
) -> Result<SweepPlan, CliError> {
    let mut exec = exec_config(cli, make_backend());
    exec.config_label = config_label.to_string();
    exec.toolchain = toolchain.to_string();
    exec.warmup_runs = warmup;
    let seed = cli.seed.unwrap_or(42);
    Ok(SweepPlan {
        label: format!("{kernel}-sweep"),
        kernel,
        specs: specs_for(kernel, sizes, seed),
        exec,
        interpolated_sizes: vec![],
    })
}

fn cmd_run(cli: &Cli, label: &str) -> Result<i32, CliError> {
    let campaign = match &cli.config {
        Some(path) => Some(load_campaign(path).map_err(CliError::Eval)?),
        None => None,
    };
    let plan = resolve_plan(cli, campaign.as_ref(), label)?;
    execute_plan(cli, plan)
}

fn resolve_plan(
    cli: &Cli,
    campaign: Option<&CampaignConfig>,
    label: &str,
) -> Result<SweepPlan, CliError> {
    let seed_default = cli.seed.unwrap_or(42);
    if let Some(campaign) = campaign {
        if let Some(pc) = campaign.plans.iter().find(|p| p.label == label) {
            let (kernel, sizes, interpolated) = match &pc.preset {
                Some(name) => {
                    let preset = find_preset(name).expect("validated");
                    (preset.kernel, preset.sizes.to_vec(), preset.interpolated.to_vec())
                }
                None => (
                    pc.kernel.expect("validated"),
                    pc.sizes.clone().expect("validated"),
                    vec![],
                ),
            };
            let mut exec = exec_config(cli, make_backend());
            // Campaign values apply first; command-line flags win.
            if cli.threads.is_none() {
                if let Some(t) = pc.threads {
                    exec.threads = t;
                }
            }
            if cli.affinity.is_none() {
                if let Some(a) = pc.affinity {
                    exec.affinity = a;
                }
            }
            if cli.reps.is_none() {
                if let Some(r) = pc.repetitions {
                    exec.repetitions = r;
                }
            }
            if let Some(w) = pc.warmup_runs {
                exec.warmup_runs = w;
            }
            if let Some(c) = &pc.config_label {
                exec.config_label = c.clone();
            }
            if let Some(t) = &pc.toolchain {
                exec.toolchain = t.clone();
            }
            let seed = cli.seed.or(pc.seed).unwrap_or(42);
            return Ok(SweepPlan {
                label: pc.label.clone(),
                kernel,
                specs: specs_for(kernel, &sizes, seed),
                exec,
                interpolated_sizes: interpolated,
            });
        }
    }
    if let Some(preset) = find_preset(label) {
        let exec = exec_config(cli, make_backend());
        return Ok(SweepPlan {
            label: preset.name.to_string(),
            kernel: preset.kernel,
            specs: preset.specs(seed_default),
            exec,
            interpolated_sizes: preset.interpolated.to_vec(),
        });
    }
    Err(CliError::Eval(EvalError::Config(format!(
        "unknown plan {label:?}: not in the campaign config and not a preset"
    ))))
}

fn execute_plan(cli: &Cli, plan: SweepPlan) -> Result<i32, CliError> {
    strict_gate(cli, &plan.exec)?;
    plan.validate()?;
    println!(
        "plan {}: {} sizes, {} threads, {} repetitions, backend {}",
        plan.label,
        plan.specs.len(),
        plan.exec.threads,
        plan.exec.repetitions,
        plan.exec.backend.name()
    );
    let stored = harness::run_sweep(&plan)?;
    for p in &stored.series.points {
        let label = classify_boundedness(p);
        println!(
            "size {}: mean {:.3} ms +-{:.3} (ci95), n={}, {}",
            p.size, p.mean_wall_ms, p.ci_halfwidth_ms, p.n, label.label
        );
    }
    for s in &stored.skipped {
        println!("size {}: skipped ({:?}): {}", s.size, s.kind, s.reason);
    }
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| {
        CliError::Eval(EvalError::Io {
            path: cli.out_dir.display().to_string(),
            detail: e.to_string(),
        })
    })?;
    let path = cli.out_dir.join(format!("{}.json", sanitize(&plan.label)));
    schema::save_series(&stored, &path).map_err(CliError::Eval)?;
    println!("series written to {}", path.display());
    Ok(if stored.skipped.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    })
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

fn load_all_series(files: &[PathBuf]) -> Result<Vec<StoredSeries>, CliError> {
    files
        .iter()
        .map(|f| import_series(f).map_err(CliError::Harness))
        .collect()
}

fn cmd_compare(cli: &Cli, files: &[PathBuf], moe_path: Option<&Path>) -> Result<i32, CliError> {
    if files.len() < 2 {
        return Err(CliError::Eval(EvalError::Usage(
            "compare needs at least two series files".into(),
        )));
    }
    let series = load_all_series(files)?;
    let moes = match moe_path {
        Some(path) => {
            let file: MoeFile = schema::load("moes", path).map_err(CliError::Eval)?;
            file.moes
        }
        None => Vec::new(),
    };
    let report = compare(&series, &moes).map_err(CliError::Eval)?;

    for row in &report.rows {
        let best = row.best.as_deref().unwrap_or("-");
        let flags = if row.flags.is_empty() {
            String::new()
        } else {
            format!(" [{}]", row.flags.join(", "))
        };
        println!(
            "{} / {} @ {}: best {}{}",
            row.kernel,
            row.config,
            row.size.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
            best,
            flags
        );
    }
    if !report.moes.is_empty() {
        for m in &report.moes {
            println!("moe {}: {} ({})", m.id, m.verdict, m.detail);
        }
        let count = |v| report.moes.iter().filter(|m| m.verdict == v).count();
        println!(
            "moes: {} pass, {} fail, {} not applicable",
            count(crate::evaluation::MoeVerdict::Pass),
            count(crate::evaluation::MoeVerdict::Fail),
            count(crate::evaluation::MoeVerdict::NotApplicable)
        );
    }

    let formats = if cli.format.is_empty() {
        vec![ReportFormat::TabularText]
    } else {
        cli.format.clone()
    };
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| {
        CliError::Eval(EvalError::Io {
            path: cli.out_dir.display().to_string(),
            detail: e.to_string(),
        })
    })?;
    for format in formats {
        let path = cli.out_dir.join(format!("comparison.{}", format.extension()));
        crate::evaluation::report::write_report(&report, format, &path)
            .map_err(CliError::Eval)?;
        println!("report ({format}) written to {}", path.display());
    }
    Ok(EXIT_OK)
}

fn cmd_classify(file: &Path) -> Result<i32, CliError> {
    let stored = import_series(file)?;
    let classification = classify_series(&stored.series).map_err(EvalError::from)?;
    println!(
        "series {} ({} points, backend {})",
        stored.labels,
        stored.series.points.len(),
        stored.meta.sampler_backend
    );
    for (size, label) in &classification.per_point {
        println!(
            "size {}: {} (dominant {:.1}%, margin {:.1})",
            size, label.label, label.dominant_pct, label.margin_pct
        );
    }
    if classification.transitions.is_empty() {
        println!("transitions: none");
    } else {
        for t in &classification.transitions {
            println!("transition at size {}: {} -> {}", t.at_size, t.from, t.to);
        }
    }
    match classification.trend {
        Trend::Stable { label } => println!("trend: stable {label}"),
        Trend::Shifting { from, to } => println!("trend: shifting {from} -> {to}"),
    }
    let consistency = consistency_check(&stored.series).map_err(EvalError::from)?;
    println!(
        "consistency with {}: {}",
        consistency.dwarf, consistency.verdict
    );
    for a in &consistency.anomalies {
        println!(
            "  anomaly at size {}: {} (expected one of {:?})",
            a.size,
            a.got,
            a.expected.iter().map(|b| b.to_string()).collect::<Vec<_>>()
        );
    }
    Ok(EXIT_OK)
}

fn cmd_report(cli: &Cli, file: &Path) -> Result<i32, CliError> {
    let report = import_report(file).map_err(CliError::Eval)?;
    let formats = if cli.format.is_empty() {
        vec![ReportFormat::TabularText]
    } else {
        cli.format.clone()
    };
    for format in formats {
        if format == ReportFormat::TabularText && cli.format.is_empty() {
            // Default: render to stdout.
            print!("{}", emit_report(&report, format));
            continue;
        }
        std::fs::create_dir_all(&cli.out_dir).map_err(|e| {
            CliError::Eval(EvalError::Io {
                path: cli.out_dir.display().to_string(),
                detail: e.to_string(),
            })
        })?;
        let path = cli.out_dir.join(format!("report.{}", format.extension()));
        crate::evaluation::report::write_report(&report, format, &path)
            .map_err(CliError::Eval)?;
        println!("report ({format}) written to {}", path.display());
    }
    Ok(EXIT_OK)
}

fn cmd_plot(cli: &Cli, files: &[PathBuf], kind: PlotKind) -> Result<i32, CliError> {
    let series = load_all_series(files)?;
    let data = plot_data(&series, kind).map_err(CliError::Eval)?;
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| {
        CliError::Eval(EvalError::Io {
            path: cli.out_dir.display().to_string(),
            detail: e.to_string(),
        })
    })?;
    let name = match kind {
        PlotKind::ResourceStack => "resource_stack.csv",
        PlotKind::TimeVsSize => "time_vs_size.csv",
    };
    let path = cli.out_dir.join(name);
    std::fs::write(&path, data).map_err(|e| {
        CliError::Eval(EvalError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    })?;
    println!("plot data written to {}", path.display());
    Ok(EXIT_OK)
}

fn cmd_presets() -> Result<i32, CliError> {
    for p in harness::all_presets() {
        println!(
            "{:<14} {:<8} {:>2} sizes  {}..{}  {}",
            p.name,
            p.kernel.to_string(),
            p.sizes.len(),
            p.sizes.first().unwrap(),
            p.sizes.last().unwrap(),
            p.description
        );
    }
    Ok(EXIT_OK)
}
