//! Kmeans clustering with a deterministic parallel reduction.
//!
//! Points are processed in fixed blocks of [`crate::parallel::BLOCK_ITEMS`];
//! per-block partial sums are combined sequentially in block order, so the
//! centers, assignments and within-cluster sum of squares are bit-identical
//! for every thread count.

use super::KernelError;
use crate::parallel::{self, BLOCK_ITEMS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Dense point set: `count` points in `dims` dimensions, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    count: usize,
    dims: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(count: usize, dims: usize, coords: Vec<f64>) -> Result<Self, KernelError> {
        if count == 0 || dims == 0 {
            return Err(KernelError::InvalidSize(
                "point count and dimensionality must be positive".into(),
            ));
        }
        if coords.len() != count * dims {
            return Err(KernelError::InvalidInput(format!(
                "expected {} coordinates, got {}",
                count * dims,
                coords.len()
            )));
        }
        if !coords.iter().all(|v| v.is_finite()) {
            return Err(KernelError::InvalidInput("coordinates must be finite".into()));
        }
        Ok(PointSet { count, dims, coords })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dims..(i + 1) * self.dims]
    }
}

/// Spacing between generated cluster centers along the diagonal. Noise is
/// uniform in [-1, 1] per coordinate, so generated clusters never overlap and
/// the nearest generating center of a point is always its own.
const CENTER_SPACING: f64 = 32.0;

/// Generates `count` points around `k_true` well-separated centers; point `i`
/// belongs to generating cluster `i % k_true`. Deterministic for the inputs.
pub fn generate_points(
    count: usize,
    dims: usize,
    k_true: usize,
    seed: u64,
) -> Result<PointSet, KernelError> {
    if k_true == 0 {
        return Err(KernelError::InvalidSize("k_true must be positive".into()));
    }
    if count < k_true {
        return Err(KernelError::InvalidSize(format!(
            "count {count} is smaller than k_true {k_true}"
        )));
    }
    if dims == 0 {
        return Err(KernelError::InvalidSize("dims must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4b4d_4541);
    let mut coords = vec![0.0f64; count * dims];
    for i in 0..count {
        let center = (i % k_true) as f64 * CENTER_SPACING;
        let row = &mut coords[i * dims..(i + 1) * dims];
        for v in row.iter_mut() {
            *v = center + rng.gen_range(-1.0..=1.0);
        }
    }
    PointSet::new(count, dims, coords)
}

/// Result of a Kmeans run.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansOutput {
    /// Final centers, `k * dims`, row-major.
    pub centers: Vec<f64>,
    /// Index of the nearest final center for every point.
    pub assignments: Vec<u32>,
    /// Completed assign-then-recompute rounds.
    pub iterations: u32,
    /// Final within-cluster sum of squares.
    pub wcss: f64,
    /// WCSS after the initial assignment and after every round; non-increasing.
    pub wcss_history: Vec<f64>,
    /// False when the iteration cap stopped the run before stabilization.
    pub converged: bool,
}

/// Lloyd iteration with squared Euclidean distances. Ties go to the lowest
/// center index; a cluster that loses all points retains its previous center.
/// Terminates when an assignment pass changes nothing or after `max_iter`
/// rounds.
pub fn kmeans(
    points: &PointSet,
    k: usize,
    initial_centers: &[f64],
    max_iter: u32,
    threads: usize,
) -> Result<KmeansOutput, KernelError> {
    if k == 0 || k > points.count {
        return Err(KernelError::InvalidSize(format!(
            "k must be in 1..={}, got {k}",
            points.count
        )));
    }
    if max_iter == 0 {
        return Err(KernelError::InvalidSize("max_iter must be positive".into()));
    }
    if threads == 0 {
        return Err(KernelError::InvalidSize("thread count must be positive".into()));
    }
    if initial_centers.len() != k * points.dims {
        return Err(KernelError::InvalidInput(format!(
            "expected {} initial center coordinates, got {}",
            k * points.dims,
            initial_centers.len()
        )));
    }
    if !initial_centers.iter().all(|v| v.is_finite()) {
        return Err(KernelError::InvalidInput("initial centers must be finite".into()));
    }

    let mut centers = initial_centers.to_vec();
    let mut assignments = vec![0u32; points.count];
    let mut wcss = assign(points, &centers, threads, &mut assignments);
    let mut wcss_history = vec![wcss];
    let mut iterations = 0;
    let mut converged = false;
    let mut scratch = vec![0u32; points.count];

    for round in 1..=max_iter {
        recompute_centers(points, &assignments, k, threads, &mut centers);
        wcss = assign(points, &centers, threads, &mut scratch);
        wcss_history.push(wcss);
        iterations = round;
        if scratch == assignments {
            // Fixed point: `assignments` is the nearest-center map of
            // `centers`, and `centers` are the means of its clusters.
            converged = true;
            break;
        }
        std::mem::swap(&mut assignments, &mut scratch);
    }

    Ok(KmeansOutput {
        centers,
        assignments,
        iterations,
        wcss,
        wcss_history,
        converged,
    })
}

/// Nearest-center map of `centers`, with the same tie rule and block order
/// as the kernel's own assignment pass.
pub fn nearest_assignments(points: &PointSet, centers: &[f64], threads: usize) -> Vec<u32> {
    let mut out = vec![0u32; points.count];
    assign(points, centers, threads, &mut out);
    out
}

/// Per-cluster means of `assignments`; empty clusters keep the value from
/// `fallback_centers`.
pub fn cluster_means(
    points: &PointSet,
    assignments: &[u32],
    k: usize,
    fallback_centers: &[f64],
    threads: usize,
) -> Vec<f64> {
    let mut centers = fallback_centers.to_vec();
    recompute_centers(points, assignments, k, threads, &mut centers);
    centers
}

/// Nearest-center assignment pass; returns the WCSS under `centers`.
fn assign(points: &PointSet, centers: &[f64], threads: usize, out: &mut [u32]) -> f64 {
    let dims = points.dims;
    let k = centers.len() / dims;
    let coords = &points.coords;
    let block_costs = parallel::map_chunks_mut(threads, out, BLOCK_ITEMS, |block, chunk| {
        let base = block * BLOCK_ITEMS;
        let mut cost = 0.0f64;
        for (off, slot) in chunk.iter_mut().enumerate() {
            let p = &coords[(base + off) * dims..(base + off + 1) * dims];
            let mut best = 0u32;
            let mut best_d = squared_distance(p, &centers[0..dims]);
            for c in 1..k {
                let d = squared_distance(p, &centers[c * dims..(c + 1) * dims]);
                if d < best_d {
                    best_d = d;
                    best = c as u32;
                }
            }
            *slot = best;
            cost += best_d;
        }
        cost
    });
    // Fixed block order keeps the sum identical for any thread count.
    block_costs.into_iter().sum()
}

fn recompute_centers(
    points: &PointSet,
    assignments: &[u32],
    k: usize,
    threads: usize,
    centers: &mut [f64],
) {
    let dims = points.dims;
    let coords = &points.coords;
    let blocks = parallel::block_count(points.count, BLOCK_ITEMS);
    let partials = parallel::map_blocks(threads, blocks, |block| {
        let lo = block * BLOCK_ITEMS;
        let hi = (lo + BLOCK_ITEMS).min(points.count);
        let mut sums = vec![0.0f64; k * dims];
        let mut counts = vec![0u64; k];
        for i in lo..hi {
            let c = assignments[i] as usize;
            counts[c] += 1;
            let p = &coords[i * dims..(i + 1) * dims];
            let acc = &mut sums[c * dims..(c + 1) * dims];
            for (a, v) in acc.iter_mut().zip(p) {
                *a += v;
            }
        }
        (sums, counts)
    });
    let mut sums = vec![0.0f64; k * dims];
    let mut counts = vec![0u64; k];
    for (bs, bc) in partials {
        for (a, v) in sums.iter_mut().zip(&bs) {
            *a += v;
        }
        for (a, v) in counts.iter_mut().zip(&bc) {
            *a += v;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            continue; // empty cluster keeps its previous center
        }
        let inv = 1.0 / counts[c] as f64;
        for d in 0..dims {
            centers[c * dims + d] = sums[c * dims + d] * inv;
        }
    }
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}
