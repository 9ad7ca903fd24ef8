//! Workload characterization and architecture evaluation built around two
//! dwarf computational classes: dense linear algebra (LU decomposition,
//! Kmeans) and graph traversal (B+Tree search).
//!
//! The pipeline runs in five stages:
//!
//! 1. [`kernels`] — deterministic, thread-count-parameterized kernel
//!    implementations plus reproducible workload generators.
//! 2. [`profiler`] — black-box collection of per-run resource measurements
//!    (wall, CPU, I/O, memory-stall time) into [`profiler::EeaRecord`]s.
//! 3. [`harness`] — repetition protocols and problem-size sweeps under an
//!    explicit execution configuration (threads, affinity, warmup).
//! 4. [`analytics`] — statistical aggregation, resource-boundedness
//!    classification, and performance-track/crossover detection.
//! 5. [`evaluation`] — effectiveness criteria, cross-configuration
//!    comparison grids, and report emission.
//!
//! The `dwarfbench` binary (see [`cli`]) wires the stages into a command-line
//! workflow.

pub mod analytics;
pub mod cli;
pub mod evaluation;
pub mod harness;
pub mod host;
pub mod kernels;
pub mod parallel;
pub mod profiler;
