//! Dwarf-class kernels and reproducible workload generators.
//!
//! Two dwarf classes are implemented: dense linear algebra (unpivoted LU
//! decomposition and Kmeans clustering) and graph traversal (B+Tree bulk
//! build and key search). Every kernel takes an explicit thread count and is
//! deterministic for it — see [`crate::parallel`] for how that is enforced.
//! Generators are pure functions of their size parameters and a 64-bit seed.

mod bptree;
mod kmeans;
mod matrix;

pub use bptree::{
    bptree_build, bptree_search, generate_keys, generate_queries, validate_bptree, BpNode, BpTree,
    QuerySet, ValidationReport, Violation,
};
pub use kmeans::{
    cluster_means, generate_points, kmeans, nearest_assignments, KmeansOutput, PointSet,
};
pub use matrix::{generate_matrix, lud, max_abs, residual_max, tau_lu, Matrix};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Errors produced by kernels and workload generators.
#[derive(Debug, Error)]
pub enum KernelError {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("singular pivot at elimination index {index}")]
    SingularPivot { index: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no tree of order {order} can hold {keys} keys under the node-fill constraints")]
    InfeasibleTree { keys: usize, order: u32 },
}

/// The implemented kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Lud,
    Kmeans,
    #[serde(rename = "bptree")]
    BpTree,
}

impl KernelKind {
    pub fn dwarf(self) -> DwarfClass {
        match self {
            KernelKind::Lud | KernelKind::Kmeans => DwarfClass::DenseLinearAlgebra,
            KernelKind::BpTree => DwarfClass::GraphTraversal,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Lud => "lud",
            KernelKind::Kmeans => "kmeans",
            KernelKind::BpTree => "bptree",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for KernelKind {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lud" | "lu" => Ok(KernelKind::Lud),
            "kmeans" => Ok(KernelKind::Kmeans),
            "bptree" | "b+tree" => Ok(KernelKind::BpTree),
            other => Err(KernelError::InvalidInput(format!(
                "unknown kernel {other:?} (expected lud, kmeans or bptree)"
            ))),
        }
    }
}

/// Dwarf classes covered by this toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DwarfClass {
    #[serde(rename = "DLA")]
    DenseLinearAlgebra,
    #[serde(rename = "GT")]
    GraphTraversal,
}

impl DwarfClass {
    pub fn short_name(self) -> &'static str {
        match self {
            DwarfClass::DenseLinearAlgebra => "DLA",
            DwarfClass::GraphTraversal => "GT",
        }
    }
}

impl fmt::Display for DwarfClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl std::str::FromStr for DwarfClass {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "DLA" => Ok(DwarfClass::DenseLinearAlgebra),
            "GT" => Ok(DwarfClass::GraphTraversal),
            other => Err(KernelError::InvalidInput(format!(
                "unknown dwarf class {other:?} (expected DLA or GT)"
            ))),
        }
    }
}

/// Default Kmeans dimensionality used by workload generation.
pub const KMEANS_DEFAULT_DIMS: u32 = 34;
/// Default Kmeans cluster count used by workload generation.
pub const KMEANS_DEFAULT_K: u32 = 5;
/// Default Kmeans iteration cap.
pub const KMEANS_DEFAULT_MAX_ITER: u32 = 500;
/// Default B+Tree branching factor used by workload generation.
pub const BPTREE_DEFAULT_ORDER: u32 = 64;

/// Kernel-specific workload parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "lowercase")]
pub enum KernelParams {
    Lud,
    Kmeans { dims: u32, k: u32, max_iter: u32 },
    #[serde(rename = "bptree")]
    BpTree { order: u32, queries: u64 },
}

/// One sweep point: kernel identity, problem size, generation seed and the
/// kernel parameters needed to regenerate the exact workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub kernel: KernelKind,
    /// Primary problem size: matrix order, object count, or key count.
    pub size: u64,
    pub seed: u64,
    pub params: KernelParams,
}

impl WorkloadSpec {
    /// LU decomposition of an `n`-by-`n` generated matrix.
    pub fn lud(n: u64, seed: u64) -> Self {
        WorkloadSpec {
            kernel: KernelKind::Lud,
            size: n,
            seed,
            params: KernelParams::Lud,
        }
    }

    /// Kmeans over `count` generated objects with the default dims/k.
    pub fn kmeans(count: u64, seed: u64) -> Self {
        Self::kmeans_with(
            count,
            seed,
            KMEANS_DEFAULT_DIMS,
            KMEANS_DEFAULT_K,
            KMEANS_DEFAULT_MAX_ITER,
        )
    }

    pub fn kmeans_with(count: u64, seed: u64, dims: u32, k: u32, max_iter: u32) -> Self {
        WorkloadSpec {
            kernel: KernelKind::Kmeans,
            size: count,
            seed,
            params: KernelParams::Kmeans { dims, k, max_iter },
        }
    }

    /// B+Tree build plus search over `keys` generated keys; the query count
    /// defaults to the key count.
    pub fn bptree(keys: u64, seed: u64) -> Self {
        Self::bptree_with(keys, seed, BPTREE_DEFAULT_ORDER, keys)
    }

    pub fn bptree_with(keys: u64, seed: u64, order: u32, queries: u64) -> Self {
        WorkloadSpec {
            kernel: KernelKind::BpTree,
            size: keys,
            seed,
            params: KernelParams::BpTree { order, queries },
        }
    }

    pub fn dwarf(&self) -> DwarfClass {
        self.kernel.dwarf()
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if self.size == 0 {
            return Err(KernelError::InvalidSize("workload size must be positive".into()));
        }
        match (self.kernel, &self.params) {
            (KernelKind::Lud, KernelParams::Lud) => Ok(()),
            (KernelKind::Kmeans, KernelParams::Kmeans { dims, k, max_iter }) => {
                if *dims == 0 || *k == 0 || *max_iter == 0 {
                    Err(KernelError::InvalidSize(
                        "kmeans dims, k and max_iter must be positive".into(),
                    ))
                } else if u64::from(*k) > self.size {
                    Err(KernelError::InvalidSize(format!(
                        "kmeans k={k} exceeds object count {}",
                        self.size
                    )))
                } else {
                    Ok(())
                }
            }
            (KernelKind::BpTree, KernelParams::BpTree { order, .. }) => {
                if *order < 3 {
                    Err(KernelError::InvalidSize("b+tree order must be at least 3".into()))
                } else {
                    Ok(())
                }
            }
            (kernel, params) => Err(KernelError::InvalidInput(format!(
                "parameter block {params:?} does not match kernel {kernel}"
            ))),
        }
    }

    /// Rough peak-memory estimate for generating and running this workload,
    /// used by the harness to skip points that cannot fit on the host.
    /// Saturates instead of overflowing on absurd sizes.
    pub fn estimated_bytes(&self) -> u64 {
        let size = self.size;
        let sq = size.saturating_mul(size);
        match self.params {
            // Input matrix, working copy, L and U, all dense f64.
            KernelParams::Lud => sq.saturating_mul(8 * 4).saturating_add(sq / 2),
            // Coordinates plus two assignment vectors and block partials.
            KernelParams::Kmeans { dims, .. } => size
                .saturating_mul(u64::from(dims))
                .saturating_mul(10)
                .saturating_add(16 * size),
            // Input keys, leaf storage, node overhead and the query vector.
            KernelParams::BpTree { order, queries } => {
                let per_node = 64 + 8 * u64::from(order);
                let leaves = size / u64::from(order.saturating_sub(1)).max(1) + 1;
                size.saturating_mul(16)
                    .saturating_add(queries.saturating_mul(8))
                    .saturating_add(leaves.saturating_mul(per_node * 2))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dwarf_mapping_follows_kernel() {
        assert_eq!(KernelKind::Lud.dwarf(), DwarfClass::DenseLinearAlgebra);
        assert_eq!(KernelKind::Kmeans.dwarf(), DwarfClass::DenseLinearAlgebra);
        assert_eq!(KernelKind::BpTree.dwarf(), DwarfClass::GraphTraversal);
    }

    #[test]
    fn spec_validation_rejects_zero_size() {
        assert!(WorkloadSpec::lud(0, 1).validate().is_err());
        assert!(WorkloadSpec::lud(1, 1).validate().is_ok());
    }

    #[test]
    fn spec_validation_rejects_k_above_count() {
        let spec = WorkloadSpec::kmeans_with(3, 1, 2, 5, 10);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn dwarf_parse_rejects_unknown_class() {
        assert!("DLA".parse::<DwarfClass>().is_ok());
        assert!("GT".parse::<DwarfClass>().is_ok());
        assert!("SLA".parse::<DwarfClass>().is_err());
    }
}
