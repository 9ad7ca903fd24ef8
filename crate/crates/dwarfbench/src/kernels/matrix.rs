//! Dense matrix generation and unpivoted LU decomposition.
//!
//! The generator produces strictly diagonally dominant matrices, so every
//! leading principal minor is nonzero and the factorization exists without
//! pivoting. The decomposition itself is the right-looking Doolittle scheme:
//! at step `k` the trailing rows are updated against pivot row `k`. Rows are
//! updated independently with a fixed per-row operation order, so the result
//! is bit-identical for every thread count.

use super::KernelError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Barrier;
use std::thread;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    elements: Vec<f64>,
}

impl Matrix {
    pub fn new(n: usize, elements: Vec<f64>) -> Result<Self, KernelError> {
        if n == 0 {
            return Err(KernelError::InvalidSize("matrix order must be positive".into()));
        }
        if elements.len() != n * n {
            return Err(KernelError::InvalidInput(format!(
                "expected {} elements for order {n}, got {}",
                n * n,
                elements.len()
            )));
        }
        Ok(Matrix { n, elements })
    }

    pub fn identity(n: usize) -> Result<Self, KernelError> {
        let mut m = Matrix::new(n, vec![0.0; n * n])?;
        for i in 0..n {
            m.elements[i * n + i] = 1.0;
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[f64] {
        &self.elements
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.elements[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.elements[row * self.n..(row + 1) * self.n]
    }
}

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.elements.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Elementwise residual tolerance for `max|A - L*U|` on generated matrices:
/// `n * eps * max|A| * 64`, a growth-factor-scaled bound that is loose enough
/// for diagonally dominant inputs at every tested order.
pub fn tau_lu(n: usize, max_abs_a: f64) -> f64 {
    n as f64 * f64::EPSILON * max_abs_a * 64.0
}

/// Generates a strictly diagonally dominant matrix: off-diagonal entries are
/// uniform in [-1, 1] and each diagonal entry is 1 plus the absolute row sum,
/// which forces every leading principal minor to be nonzero.
///
/// Deterministic for a given `(n, seed)` pair.
pub fn generate_matrix(n: usize, seed: u64) -> Result<Matrix, KernelError> {
    if n == 0 {
        return Err(KernelError::InvalidSize("matrix order must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4c55_4421);
    let mut elements = vec![0.0f64; n * n];
    for i in 0..n {
        let row = &mut elements[i * n..(i + 1) * n];
        let mut off_sum = 0.0;
        for (j, v) in row.iter_mut().enumerate() {
            if j != i {
                *v = rng.gen_range(-1.0..=1.0);
                off_sum += v.abs();
            }
        }
        row[i] = 1.0 + off_sum;
    }
    Ok(Matrix { n, elements })
}

/// Shared factorization state for the lock-step workers. Row ownership is
/// cyclic (`row % workers`), and each step only reads the pivot row finished
/// in the previous step, so accesses never alias.
struct SharedMat {
    ptr: *mut f64,
    n: usize,
}

unsafe impl Sync for SharedMat {}

impl SharedMat {
    /// Caller must be the cyclic owner of `row` for the current step; the
    /// barrier between steps orders cross-worker access.
    #[inline]
    #[allow(clippy::mut_from_ref)]
    unsafe fn row_mut(&self, row: usize) -> &mut [f64] {
        std::slice::from_raw_parts_mut(self.ptr.add(row * self.n), self.n)
    }

    #[inline]
    unsafe fn row(&self, row: usize) -> &[f64] {
        std::slice::from_raw_parts(self.ptr.add(row * self.n), self.n)
    }
}

const NO_FAILURE: usize = usize::MAX;

/// Unpivoted Doolittle LU decomposition: `a = L * U` with `L` unit lower
/// triangular and `U` upper triangular. Fails with the elimination index if a
/// zero pivot is hit (no pivoting is performed).
///
/// The trailing-submatrix update at each step is parallelized over rows; the
/// output is bit-identical for every `threads >= 1`.
pub fn lud(a: &Matrix, threads: usize) -> Result<(Matrix, Matrix), KernelError> {
    if threads == 0 {
        return Err(KernelError::InvalidSize("thread count must be positive".into()));
    }
    let n = a.n;
    let mut data = a.elements.clone();
    let workers = threads.min(n).max(1);
    let failed = AtomicUsize::new(NO_FAILURE);

    if workers == 1 {
        for k in 0..n {
            let pivot = data[k * n + k];
            if pivot == 0.0 {
                return Err(KernelError::SingularPivot { index: k });
            }
            let (head, tail) = data.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            for row in tail.chunks_exact_mut(n) {
                eliminate_row(row, pivot_row, k, pivot);
            }
        }
    } else {
        let shared = SharedMat { ptr: data.as_mut_ptr(), n };
        let barrier = Barrier::new(workers);
        thread::scope(|s| {
            for w in 0..workers {
                let shared = &shared;
                let barrier = &barrier;
                let failed = &failed;
                s.spawn(move || {
                    for k in 0..n {
                        // Every worker reads the same finalized pivot, so all
                        // of them take the failure branch at the same step.
                        let pivot = unsafe { shared.row(k) }[k];
                        if pivot == 0.0 {
                            failed.store(k, Ordering::Relaxed);
                            return;
                        }
                        let mut i = k + 1 + (w + workers - ((k + 1) % workers)) % workers;
                        while i < n {
                            let row = unsafe { shared.row_mut(i) };
                            let pivot_row = unsafe { shared.row(k) };
                            eliminate_row(row, pivot_row, k, pivot);
                            i += workers;
                        }
                        barrier.wait();
                    }
                });
            }
        });
        let fail_at = failed.load(Ordering::Relaxed);
        if fail_at != NO_FAILURE {
            return Err(KernelError::SingularPivot { index: fail_at });
        }
    }

    // Split the in-place result into L (unit diagonal, exact zeros above) and
    // U (exact zeros below).
    let mut lower = vec![0.0f64; n * n];
    let mut upper = vec![0.0f64; n * n];
    for i in 0..n {
        lower[i * n + i] = 1.0;
        for j in 0..i {
            lower[i * n + j] = data[i * n + j];
        }
        for j in i..n {
            upper[i * n + j] = data[i * n + j];
        }
    }
    Ok((Matrix { n, elements: lower }, Matrix { n, elements: upper }))
}

#[inline]
fn eliminate_row(row: &mut [f64], pivot_row: &[f64], k: usize, pivot: f64) {
    let factor = row[k] / pivot;
    row[k] = factor;
    for j in k + 1..row.len() {
        row[j] -= factor * pivot_row[j];
    }
}

/// Max elementwise reconstruction error `max|a - L*U|`, exploiting the
/// triangular structure (the inner sum runs to `min(i, j)`). Parallel over
/// rows; used by the harness correctness gate and by tests.
pub fn residual_max(a: &Matrix, lower: &Matrix, upper: &Matrix, threads: usize) -> f64 {
    let n = a.n;
    assert_eq!(lower.n, n);
    assert_eq!(upper.n, n);
    let per_row = crate::parallel::map_blocks(threads, n, |i| {
        let mut worst = 0.0f64;
        let l_row = lower.row(i);
        for j in 0..n {
            let sum: f64 = l_row[..=i.min(j)]
                .iter()
                .enumerate()
                .map(|(k, &l)| l * upper.get(k, j))
                .sum();
            worst = worst.max((a.get(i, j) - sum).abs());
        }
        worst
    });
    per_row.into_iter().fold(0.0, f64::max)
}
