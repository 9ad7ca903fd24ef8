//! Thread-affinity placement for kernel runs.
//!
//! The mask is set on the calling thread before a kernel runs, so worker
//! threads spawned inside the kernel inherit it. Scatter spreads the chosen
//! cores across the allowed set, compact packs them from the start; hosts
//! without a working affinity interface degrade to no placement and the
//! outcome is recorded in the run metadata.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::mem;

/// Requested thread placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Affinity {
    #[default]
    Scatter,
    Compact,
    None,
}

impl fmt::Display for Affinity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Affinity::Scatter => "scatter",
            Affinity::Compact => "compact",
            Affinity::None => "none",
        })
    }
}

impl std::str::FromStr for Affinity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "scatter" => Ok(Affinity::Scatter),
            "compact" => Ok(Affinity::Compact),
            "none" => Ok(Affinity::None),
            other => Err(format!("unknown affinity {other:?} (scatter, compact or none)")),
        }
    }
}

/// Applied placement plus a guard restoring the previous mask on drop.
pub struct AffinityGuard {
    /// What actually took effect; `Affinity::None` when degraded.
    pub applied: Affinity,
    saved: Option<libc::cpu_set_t>,
}

impl Drop for AffinityGuard {
    fn drop(&mut self) {
        if let Some(saved) = &self.saved {
            unsafe {
                libc::sched_setaffinity(0, mem::size_of::<libc::cpu_set_t>(), saved);
            }
        }
    }
}

/// Pins the calling thread to `threads` cores chosen per `affinity` from the
/// currently allowed set. Failure degrades to no placement rather than
/// aborting the run.
pub fn apply(threads: usize, affinity: Affinity) -> AffinityGuard {
    if affinity == Affinity::None {
        return AffinityGuard { applied: Affinity::None, saved: None };
    }
    let allowed = match allowed_cpus() {
        Some(cpus) if !cpus.is_empty() => cpus,
        _ => return AffinityGuard { applied: Affinity::None, saved: None },
    };
    let picked = pick_cores(&allowed, threads, affinity);

    let mut saved: libc::cpu_set_t = unsafe { mem::zeroed() };
    let rc = unsafe { libc::sched_getaffinity(0, mem::size_of::<libc::cpu_set_t>(), &mut saved) };
    if rc != 0 {
        return AffinityGuard { applied: Affinity::None, saved: None };
    }
    let mut target: libc::cpu_set_t = unsafe { mem::zeroed() };
    for cpu in &picked {
        unsafe { libc::CPU_SET(*cpu, &mut target) };
    }
    let rc = unsafe { libc::sched_setaffinity(0, mem::size_of::<libc::cpu_set_t>(), &target) };
    if rc != 0 {
        return AffinityGuard { applied: Affinity::None, saved: None };
    }
    AffinityGuard { applied: affinity, saved: Some(saved) }
}

/// Core ids this thread may currently run on.
fn allowed_cpus() -> Option<Vec<usize>> {
    let mut set: libc::cpu_set_t = unsafe { mem::zeroed() };
    let rc = unsafe { libc::sched_getaffinity(0, mem::size_of::<libc::cpu_set_t>(), &mut set) };
    if rc != 0 {
        return None;
    }
    let mut cpus = Vec::new();
    for cpu in 0..libc::CPU_SETSIZE as usize {
        if unsafe { libc::CPU_ISSET(cpu, &set) } {
            cpus.push(cpu);
        }
    }
    Some(cpus)
}

fn pick_cores(allowed: &[usize], threads: usize, affinity: Affinity) -> Vec<usize> {
    let want = threads.clamp(1, allowed.len());
    match affinity {
        Affinity::Compact | Affinity::None => allowed[..want].to_vec(),
        Affinity::Scatter => {
            // Evenly spaced indices over the allowed list.
            (0..want)
                .map(|i| allowed[i * allowed.len() / want])
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_spreads_and_compact_packs() {
        let allowed: Vec<usize> = (0..8).collect();
        assert_eq!(pick_cores(&allowed, 2, Affinity::Compact), vec![0, 1]);
        assert_eq!(pick_cores(&allowed, 2, Affinity::Scatter), vec![0, 4]);
        assert_eq!(pick_cores(&allowed, 4, Affinity::Scatter), vec![0, 2, 4, 6]);
        assert_eq!(pick_cores(&allowed, 8, Affinity::Scatter), allowed);
    }

    #[test]
    fn apply_and_restore_round_trip() {
        let before = allowed_cpus().unwrap();
        {
            let guard = apply(1, Affinity::Compact);
            // Either pinned or degraded; both are legal outcomes here.
            let _ = guard.applied;
        }
        assert_eq!(allowed_cpus().unwrap(), before);
    }

    #[test]
    fn none_request_never_pins() {
        let g = apply(4, Affinity::None);
        assert_eq!(g.applied, Affinity::None);
    }
}
