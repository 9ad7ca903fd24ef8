//! Pluggable sampler backends for memory-stall attribution.
//!
//! Characterizing a run takes wall time, CPU time, I/O wait and memory wait.
//! The first three come from portable OS accounting
//! (monotonic clock, `CLOCK_PROCESS_CPUTIME_ID`, per-process block-I/O delay
//! ticks). Memory wait has no portable source, so it sits behind a backend:
//!
//! * `counter` — hardware backend-stall cycles via `perf_event_open`, scaled
//!   by the nominal clock to milliseconds. Counters are created with
//!   `inherit`, so worker threads spawned during the measured task are
//!   included. Unavailable on many VMs and containers.
//! * `residual` — wall time left after derated CPU time and I/O wait:
//!   `mem = max(0, wall - cpu_effective/threads - io)`. The derate factor
//!   comes from a short arithmetic calibration probe (achieved-vs-best
//!   throughput across trials). On-CPU stalls are invisible to this
//!   estimator, which is why records carry the backend name and series from
//!   different backends are never aggregated together.
//!
//! I/O wait is a capability of its own: kernels with delay accounting off
//! report zeros, so the capability is dropped and records are flagged
//! partial per the [`SamplerBackend`] contract.

use crate::host;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::os::unix::io::RawFd;
use std::sync::Mutex;

/// What a backend can observe. `CpuTime` is mandatory; a missing capability
/// forces the corresponding record field to zero and flags the record
/// partial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Capability {
    #[serde(rename = "cpu-time")]
    CpuTime,
    #[serde(rename = "io-wait")]
    IoWait,
    #[serde(rename = "mem-stall")]
    MemStall,
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Capability::CpuTime => "cpu-time",
            Capability::IoWait => "io-wait",
            Capability::MemStall => "mem-stall",
        })
    }
}

enum BackendKind {
    Counter {
        counter: Mutex<PerfCounter>,
        cycles_per_ms: f64,
    },
    Residual {
        derate: f64,
    },
    /// CPU time only; exercised in tests and on hosts with nothing better.
    CpuOnly,
}

/// A named mechanism for attributing wall time to memory stalls.
pub struct SamplerBackend {
    name: &'static str,
    caps: BTreeSet<Capability>,
    kind: BackendKind,
}

impl fmt::Debug for SamplerBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SamplerBackend")
            .field("name", &self.name)
            .field("caps", &self.caps)
            .finish()
    }
}

impl SamplerBackend {
    /// Best backend this host supports: `counter` when the PMU is reachable,
    /// otherwise `residual`.
    pub fn probe() -> Self {
        Self::counter().unwrap_or_else(|_| Self::residual())
    }

    /// Hardware stall-cycle backend. Fails when `perf_event_open` or the
    /// nominal clock is unavailable.
    pub fn counter() -> Result<Self, String> {
        let mhz = host::nominal_mhz().ok_or("nominal CPU frequency unknown")?;
        let counter = PerfCounter::stalled_cycles_backend()?;
        // Sanity read before trusting the fd.
        counter.reset_and_enable()?;
        std::hint::black_box((0..1000).sum::<u64>());
        counter.disable_and_read()?;
        Ok(SamplerBackend {
            name: "counter",
            caps: base_caps(true),
            kind: BackendKind::Counter {
                counter: Mutex::new(counter),
                cycles_per_ms: mhz * 1000.0,
            },
        })
    }

    /// Residual fallback; always constructible.
    pub fn residual() -> Self {
        SamplerBackend {
            name: "residual",
            caps: base_caps(true),
            kind: BackendKind::Residual {
                derate: calibrate_derate(),
            },
        }
    }

    /// Backend with only the mandatory cpu-time capability.
    pub fn cpu_only() -> Self {
        SamplerBackend {
            name: "cpu-only",
            caps: base_caps(false),
            kind: BackendKind::CpuOnly,
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn capabilities(&self) -> &BTreeSet<Capability> {
        &self.caps
    }

    pub fn has(&self, cap: Capability) -> bool {
        self.caps.contains(&cap)
    }

    /// Arms the stall counter for a measured region.
    pub(crate) fn start(&self) {
        if let BackendKind::Counter { counter, .. } = &self.kind {
            let c = counter.lock().expect("counter poisoned");
            let _ = c.reset_and_enable();
        }
    }

    /// Thread-summed stall milliseconds for the measured region, when this
    /// backend counts them directly.
    pub(crate) fn stop_stall_ms(&self) -> Option<f64> {
        match &self.kind {
            BackendKind::Counter { counter, cycles_per_ms } => {
                let c = counter.lock().expect("counter poisoned");
                let cycles = c.disable_and_read().ok()? as f64;
                Some(cycles / cycles_per_ms)
            }
            _ => None,
        }
    }

    /// Derate factor applied to measured CPU time by the residual estimator.
    pub(crate) fn derate(&self) -> f64 {
        match &self.kind {
            BackendKind::Residual { derate } => *derate,
            _ => 1.0,
        }
    }

    pub(crate) fn is_residual(&self) -> bool {
        matches!(self.kind, BackendKind::Residual { .. })
    }
}

fn base_caps(mem_stall: bool) -> BTreeSet<Capability> {
    let mut caps = BTreeSet::new();
    caps.insert(Capability::CpuTime);
    if host::delay_accounting_enabled() {
        caps.insert(Capability::IoWait);
    }
    if mem_stall {
        caps.insert(Capability::MemStall);
    }
    caps
}

/// Achieved-vs-best throughput of a fixed arithmetic probe: median over
/// post-warmup trials divided by the best trial. Close to 1.0 on a quiet
/// machine; floored at 0.8 because a wider spread means the calibration
/// itself cannot be trusted to reattribute CPU time.
fn calibrate_derate() -> f64 {
    const TRIALS: usize = 7;
    const OPS: usize = 2_000_000;
    let mut rates = Vec::with_capacity(TRIALS);
    for trial in 0..TRIALS {
        let t0 = host::process_cpu_ms();
        let mut x = 1.0f64;
        for i in 0..OPS {
            x = x.mul_add(1.000000119, (i & 3) as f64 * 1e-12);
        }
        std::hint::black_box(x);
        let dt = host::process_cpu_ms() - t0;
        if trial > 0 && dt > 0.0 {
            rates.push(OPS as f64 / dt);
        }
    }
    if rates.is_empty() {
        return 1.0;
    }
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let best = rates[rates.len() - 1];
    let median = rates[rates.len() / 2];
    (median / best).clamp(0.8, 1.0)
}

// Minimal perf_event_open FFI; libc does not ship these bindings for gnu
// targets. The layout is PERF_ATTR_SIZE_VER0 (64 bytes), which every kernel
// accepts.
#[repr(C)]
#[derive(Default)]
struct PerfEventAttr {
    type_: u32,
    size: u32,
    config: u64,
    sample_period: u64,
    sample_type: u64,
    read_format: u64,
    flags: u64,
    wakeup_events: u32,
    bp_type: u32,
    bp_addr: u64,
}

const PERF_TYPE_HARDWARE: u32 = 0;
const PERF_COUNT_HW_STALLED_CYCLES_BACKEND: u64 = 8;
const PERF_FLAG_FD_CLOEXEC: libc::c_ulong = 1 << 3;
// Flag bits, in declaration order of the kernel bitfield.
const ATTR_DISABLED: u64 = 1 << 0;
const ATTR_INHERIT: u64 = 1 << 1;
const ATTR_EXCLUDE_KERNEL: u64 = 1 << 5;
const ATTR_EXCLUDE_HV: u64 = 1 << 6;
// _IO('$', n)
const PERF_EVENT_IOC_ENABLE: libc::c_ulong = 0x2400;
const PERF_EVENT_IOC_DISABLE: libc::c_ulong = 0x2401;
const PERF_EVENT_IOC_RESET: libc::c_ulong = 0x2403;

/// Thin wrapper over a `perf_event_open` fd counting backend-stall cycles
/// for this process and the threads it spawns.
struct PerfCounter {
    fd: RawFd,
}

impl PerfCounter {
    fn stalled_cycles_backend() -> Result<Self, String> {
        let attr = PerfEventAttr {
            type_: PERF_TYPE_HARDWARE,
            size: std::mem::size_of::<PerfEventAttr>() as u32,
            config: PERF_COUNT_HW_STALLED_CYCLES_BACKEND,
            flags: ATTR_DISABLED | ATTR_INHERIT | ATTR_EXCLUDE_KERNEL | ATTR_EXCLUDE_HV,
            ..PerfEventAttr::default()
        };
        let fd = unsafe {
            libc::syscall(
                libc::SYS_perf_event_open,
                &attr as *const PerfEventAttr,
                0i32,  // this process
                -1i32, // any cpu
                -1i32, // no group
                PERF_FLAG_FD_CLOEXEC,
            )
        };
        if fd < 0 {
            return Err(format!(
                "perf_event_open failed: {}",
                std::io::Error::last_os_error()
            ));
        }
        Ok(PerfCounter { fd: fd as RawFd })
    }

    fn reset_and_enable(&self) -> Result<(), String> {
        self.ioctl(PERF_EVENT_IOC_RESET)?;
        self.ioctl(PERF_EVENT_IOC_ENABLE)
    }

    fn disable_and_read(&self) -> Result<u64, String> {
        self.ioctl(PERF_EVENT_IOC_DISABLE)?;
        let mut value = 0u64;
        let n = unsafe {
            libc::read(
                self.fd,
                &mut value as *mut u64 as *mut libc::c_void,
                std::mem::size_of::<u64>(),
            )
        };
        if n as usize != std::mem::size_of::<u64>() {
            return Err("short read from perf counter".into());
        }
        Ok(value)
    }

    fn ioctl(&self, request: libc::c_ulong) -> Result<(), String> {
        let rc = unsafe { libc::ioctl(self.fd, request, 0) };
        if rc != 0 {
            return Err(format!("perf ioctl failed: {}", std::io::Error::last_os_error()));
        }
        Ok(())
    }
}

impl Drop for PerfCounter {
    fn drop(&mut self) {
        unsafe {
            libc::close(self.fd);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_always_yields_a_backend_with_cpu_time() {
        let b = SamplerBackend::probe();
        assert!(b.has(Capability::CpuTime));
        assert!(!b.name().is_empty());
    }

    #[test]
    fn residual_backend_claims_mem_stall() {
        let b = SamplerBackend::residual();
        assert!(b.has(Capability::MemStall));
        assert!(b.is_residual());
        assert!((0.05..=1.0).contains(&b.derate()));
    }

    #[test]
    fn cpu_only_backend_drops_mem_stall() {
        let b = SamplerBackend::cpu_only();
        assert!(b.has(Capability::CpuTime));
        assert!(!b.has(Capability::MemStall));
        assert!(b.stop_stall_ms().is_none());
    }
}
