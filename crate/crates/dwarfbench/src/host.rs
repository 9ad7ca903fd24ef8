//! Host introspection: core count, nominal clock, available memory and the
//! per-process accounting interfaces the profiler reads.
//!
//! Everything here degrades to `None` rather than failing; callers decide
//! whether a missing interface is a warning (permissive mode) or an error
//! (strict mode).

use serde::{Deserialize, Serialize};
use std::fs;
use std::time::Instant;

/// Host descriptor recorded in every result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostInfo {
    pub cores: u32,
    /// Nominal clock in MHz; 0.0 when the host does not expose it.
    pub nominal_mhz: f64,
    pub os: String,
}

impl HostInfo {
    pub fn gather() -> Self {
        HostInfo {
            cores: cores() as u32,
            nominal_mhz: nominal_mhz().unwrap_or(0.0),
            os: std::env::consts::OS.to_string(),
        }
    }
}

/// Cores available to this process.
pub fn cores() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Nominal CPU frequency in MHz, from cpufreq sysfs or /proc/cpuinfo.
pub fn nominal_mhz() -> Option<f64> {
    if let Ok(khz) = fs::read_to_string("/sys/devices/system/cpu/cpu0/cpufreq/cpuinfo_max_freq") {
        if let Ok(v) = khz.trim().parse::<f64>() {
            return Some(v / 1000.0);
        }
    }
    let cpuinfo = fs::read_to_string("/proc/cpuinfo").ok()?;
    for line in cpuinfo.lines() {
        if let Some(rest) = line.strip_prefix("cpu MHz") {
            if let Some(v) = rest.split(':').nth(1) {
                if let Ok(mhz) = v.trim().parse::<f64>() {
                    return Some(mhz);
                }
            }
        }
    }
    None
}

/// MemAvailable from /proc/meminfo, in bytes.
pub fn mem_available_bytes() -> Option<u64> {
    let meminfo = fs::read_to_string("/proc/meminfo").ok()?;
    for line in meminfo.lines() {
        if let Some(rest) = line.strip_prefix("MemAvailable:") {
            let kb: u64 = rest.trim().trim_end_matches("kB").trim().parse().ok()?;
            return Some(kb * 1024);
        }
    }
    None
}

/// Process CPU time (all threads, user + system) in milliseconds.
pub fn process_cpu_ms() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 * 1e3 + ts.tv_nsec as f64 / 1e6
}

/// Whether per-task delay accounting is switched on, meaning the block-I/O
/// delay field of /proc/self/stat carries real data. Kernels without the
/// runtime knob are assumed to have it compiled in.
pub fn delay_accounting_enabled() -> bool {
    match fs::read_to_string("/proc/sys/kernel/task_delayacct") {
        Ok(v) => v.trim() == "1",
        Err(_) => blkio_delay_ms().is_some(),
    }
}

/// Aggregated block-I/O delay of this process in milliseconds
/// (delayacct_blkio_ticks, field 42 of /proc/self/stat).
pub fn blkio_delay_ms() -> Option<f64> {
    let stat = fs::read_to_string("/proc/self/stat").ok()?;
    // comm may contain spaces; fields resume after the last ')'.
    let rest = &stat[stat.rfind(')')? + 2..];
    let ticks: f64 = rest.split_whitespace().nth(39)?.parse().ok()?;
    let hz = unsafe { libc::sysconf(libc::_SC_CLK_TCK) };
    if hz <= 0 {
        return None;
    }
    Some(ticks * 1000.0 / hz as f64)
}

/// Milliseconds elapsed since `start`.
pub fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}
