//! Workload lifecycle: generate once per point, run once per repetition,
//! verify once before any timing is trusted.

use crate::kernels::{
    bptree_build, bptree_search, cluster_means, generate_keys, generate_matrix, generate_points,
    generate_queries, kmeans, lud, max_abs, nearest_assignments, residual_max, tau_lu,
    validate_bptree, BpTree, KernelError, KernelParams, KmeansOutput, Matrix, PointSet,
    WorkloadSpec,
};

/// Generated input data for one sweep point, reused across repetitions.
pub enum GeneratedWorkload {
    Lud {
        matrix: Matrix,
    },
    Kmeans {
        points: PointSet,
        initial_centers: Vec<f64>,
        k: usize,
        max_iter: u32,
    },
    BpTree {
        keys: Vec<u64>,
        queries: Vec<u64>,
        expected_hits: u64,
        order: u32,
    },
}

/// Output of one kernel execution.
pub enum KernelRun {
    Lud { lower: Matrix, upper: Matrix },
    Kmeans(KmeansOutput),
    BpTree { tree: BpTree, hits: u64 },
}

impl GeneratedWorkload {
    pub fn generate(spec: &WorkloadSpec) -> Result<Self, KernelError> {
        spec.validate()?;
        match spec.params {
            KernelParams::Lud => Ok(GeneratedWorkload::Lud {
                matrix: generate_matrix(spec.size as usize, spec.seed)?,
            }),
            KernelParams::Kmeans { dims, k, max_iter } => {
                let points = generate_points(
                    spec.size as usize,
                    dims as usize,
                    k as usize,
                    spec.seed,
                )?;
                // Deterministic initial centers spread over the point set.
                let k = k as usize;
                let stride = points.count() / k;
                let initial_centers: Vec<f64> = (0..k)
                    .flat_map(|c| points.point(c * stride).to_vec())
                    .collect();
                Ok(GeneratedWorkload::Kmeans {
                    points,
                    initial_centers,
                    k,
                    max_iter,
                })
            }
            KernelParams::BpTree { order, queries } => {
                let keys = generate_keys(spec.size as usize, spec.seed);
                let qs = generate_queries(&keys, queries as usize, spec.seed.wrapping_add(1));
                Ok(GeneratedWorkload::BpTree {
                    keys,
                    queries: qs.queries,
                    expected_hits: qs.present as u64,
                    order,
                })
            }
        }
    }

    /// One kernel execution over the generated input.
    pub fn run(&self, threads: usize) -> Result<KernelRun, KernelError> {
        match self {
            GeneratedWorkload::Lud { matrix } => {
                let (lower, upper) = lud(matrix, threads)?;
                Ok(KernelRun::Lud { lower, upper })
            }
            GeneratedWorkload::Kmeans {
                points,
                initial_centers,
                k,
                max_iter,
            } => Ok(KernelRun::Kmeans(kmeans(
                points,
                *k,
                initial_centers,
                *max_iter,
                threads,
            )?)),
            GeneratedWorkload::BpTree {
                keys,
                queries,
                order,
                ..
            } => {
                let tree = bptree_build(keys, *order)?;
                let hits = bptree_search(&tree, queries, threads);
                Ok(KernelRun::BpTree { tree, hits })
            }
        }
    }

    /// Correctness gate run once per point before any timing is recorded:
    /// LU reconstruction residual, Kmeans fixed point, or B+Tree validation
    /// plus membership counts.
    pub fn verify(&self, run: &KernelRun, threads: usize) -> Result<(), String> {
        match (self, run) {
            (GeneratedWorkload::Lud { matrix }, KernelRun::Lud { lower, upper }) => {
                let tol = tau_lu(matrix.n(), max_abs(matrix));
                let res = residual_max(matrix, lower, upper, threads);
                if res > tol {
                    return Err(format!(
                        "LU reconstruction residual {res:e} exceeds tolerance {tol:e}"
                    ));
                }
                Ok(())
            }
            (GeneratedWorkload::Kmeans { points, k, .. }, KernelRun::Kmeans(out)) => {
                if !out.converged {
                    // A capped run is legal but its outputs are not a fixed
                    // point, so the stronger checks below would not apply.
                    return Ok(());
                }
                let reassigned = nearest_assignments(points, &out.centers, threads);
                if reassigned != out.assignments {
                    return Err("assignments are not a fixed point of the final centers".into());
                }
                let means = cluster_means(points, &out.assignments, *k, &out.centers, threads);
                let scale = out.centers.iter().fold(1.0f64, |a, v| a.max(v.abs()));
                for (a, b) in means.iter().zip(&out.centers) {
                    if (a - b).abs() > 1e-9 * scale {
                        return Err(format!("center {b} is not the mean {a} of its cluster"));
                    }
                }
                for w in out.wcss_history.windows(2) {
                    if w[1] > w[0] * (1.0 + 1e-12) + 1e-12 {
                        return Err(format!("WCSS increased: {} -> {}", w[0], w[1]));
                    }
                }
                Ok(())
            }
            (
                GeneratedWorkload::BpTree {
                    keys,
                    expected_hits,
                    ..
                },
                KernelRun::BpTree { tree, hits },
            ) => {
                let report = validate_bptree(tree);
                if !report.pass {
                    return Err(format!("tree validation failed: {:?}", report.violation));
                }
                if *hits != *expected_hits {
                    return Err(format!(
                        "hit count {hits} differs from generated present count {expected_hits}"
                    ));
                }
                let all = bptree_search(tree, keys, threads);
                if all != keys.len() as u64 {
                    return Err(format!(
                        "only {all} of {} inserted keys were found",
                        keys.len()
                    ));
                }
                Ok(())
            }
            _ => Err("kernel output does not match the generated workload".into()),
        }
    }
}

impl KernelRun {
    /// FNV-1a digest of the kernel output, for cross-invocation determinism
    /// checks.
    pub fn checksum(&self) -> u64 {
        let mut h = Fnv::new();
        match self {
            KernelRun::Lud { lower, upper } => {
                for v in lower.elements() {
                    h.write_f64(*v);
                }
                for v in upper.elements() {
                    h.write_f64(*v);
                }
            }
            KernelRun::Kmeans(out) => {
                for v in &out.centers {
                    h.write_f64(*v);
                }
                for a in &out.assignments {
                    h.write_u64(u64::from(*a));
                }
                h.write_u64(u64::from(out.iterations));
            }
            KernelRun::BpTree { tree, hits } => {
                h.write_u64(*hits);
                h.write_u64(u64::from(tree.order()));
                h.write_u64(u64::from(tree.root()));
                h.write_u64(tree.nodes().len() as u64);
            }
        }
        h.finish()
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn write_f64(&mut self, v: f64) {
        self.write_u64(v.to_bits());
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
