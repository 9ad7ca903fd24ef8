//! Minimal data-parallel helpers shared by the kernels.
//!
//! Work is always decomposed into fixed-size blocks whose boundaries depend
//! only on the input size, never on the thread count. Workers pick up blocks
//! by a static cyclic assignment and per-block results are combined in block
//! order, so every kernel produces bit-identical output for any `threads`
//! value.

use std::thread;

/// Block size (in items) for point- and query-parallel loops.
pub const BLOCK_ITEMS: usize = 4096;

/// Number of fixed blocks covering `items` items.
pub fn block_count(items: usize, block: usize) -> usize {
    items.div_ceil(block.max(1))
}

/// Runs `f(block_index)` for every block and returns the results ordered by
/// block index. Blocks are distributed cyclically over `threads` workers.
pub fn map_blocks<T, F>(threads: usize, blocks: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(blocks.max(1));
    if threads <= 1 || blocks <= 1 {
        return (0..blocks).map(f).collect();
    }
    let mut slots: Vec<Option<T>> = Vec::with_capacity(blocks);
    slots.resize_with(blocks, || None);
    thread::scope(|s| {
        let f = &f;
        let mut handles = Vec::with_capacity(threads);
        for w in 0..threads {
            handles.push(s.spawn(move || {
                let mut out = Vec::new();
                let mut b = w;
                while b < blocks {
                    out.push((b, f(b)));
                    b += threads;
                }
                out
            }));
        }
        for h in handles {
            for (b, v) in h.join().expect("worker panicked") {
                slots[b] = Some(v);
            }
        }
    });
    slots.into_iter().map(|v| v.expect("missing block")).collect()
}

/// Splits `data` into chunks of `chunk` items, runs `f(chunk_index, chunk)`
/// on each, and returns per-chunk results ordered by chunk index.
///
/// Chunks are handed out cyclically, one worker per residue class, so the
/// decomposition (and therefore any floating-point combination done by the
/// caller in chunk order) is independent of `threads`.
pub fn map_chunks_mut<T, U, F>(threads: usize, data: &mut [T], chunk: usize, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(usize, &mut [T]) -> U + Sync,
{
    let blocks = block_count(data.len(), chunk);
    let threads = threads.max(1).min(blocks.max(1));
    if threads <= 1 || blocks <= 1 {
        return data
            .chunks_mut(chunk.max(1))
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect();
    }
    // Route each chunk to its worker up front; &mut chunks are disjoint.
    let mut per_worker: Vec<Vec<(usize, &mut [T])>> = (0..threads).map(|_| Vec::new()).collect();
    for (i, c) in data.chunks_mut(chunk).enumerate() {
        per_worker[i % threads].push((i, c));
    }
    let mut slots: Vec<Option<U>> = Vec::with_capacity(blocks);
    slots.resize_with(blocks, || None);
    thread::scope(|s| {
        let f = &f;
        let mut handles = Vec::with_capacity(threads);
        for work in per_worker {
            handles.push(s.spawn(move || {
                work.into_iter()
                    .map(|(i, c)| (i, f(i, c)))
                    .collect::<Vec<_>>()
            }));
        }
        for h in handles {
            for (b, v) in h.join().expect("worker panicked") {
                slots[b] = Some(v);
            }
        }
    });
    slots.into_iter().map(|v| v.expect("missing chunk")).collect()
}
