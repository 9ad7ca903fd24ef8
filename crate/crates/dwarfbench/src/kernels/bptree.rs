//! B+Tree bulk build, key search and structural validation.
//!
//! Nodes live in an arena indexed by `u32` ids. Non-root internal nodes hold
//! `m` children with `ceil(b/2) <= m <= b`; non-root leaves hold between
//! `ceil(b/2)` and `b-1` keys; a root leaf may hold `1..=b-1` keys and a root
//! internal node `2..=b` children. All leaves sit at the same depth and are
//! chained left to right.
//!
//! Bulk loading packs leaves at fill `b-1` and then redistributes the last
//! two (or three) leaves when the tail falls below the minimum. A handful of
//! `(keys, order)` combinations admit no tree at all under these constraints
//! — for example any odd key count above 2 at order 3, where every non-root
//! leaf must hold exactly 2 keys — and those return
//! [`KernelError::InfeasibleTree`].

use super::KernelError;
use crate::parallel::{self, BLOCK_ITEMS};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type NodeId = u32;

/// Arena node: an internal routing node or a chained leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BpNode {
    Internal {
        /// Separators: `keys[i]` is the smallest key in child `i + 1`'s subtree.
        keys: Vec<u64>,
        children: Vec<NodeId>,
    },
    Leaf {
        keys: Vec<u64>,
        next: Option<NodeId>,
    },
}

/// B+Tree of branching factor `order`, bulk-loaded from sorted unique keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpTree {
    order: u32,
    root: NodeId,
    nodes: Vec<BpNode>,
}

impl BpTree {
    /// Assembles a tree from raw parts without any structural checking; pair
    /// with [`validate_bptree`] when the parts are not known to be well
    /// formed.
    pub fn from_parts(order: u32, root: NodeId, nodes: Vec<BpNode>) -> Self {
        BpTree { order, root, nodes }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[BpNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &BpNode {
        &self.nodes[id as usize]
    }

    /// True when `key` is present.
    pub fn contains(&self, key: u64) -> bool {
        let mut id = self.root;
        loop {
            match self.node(id) {
                BpNode::Internal { keys, children } => {
                    let idx = keys.partition_point(|&k| k <= key);
                    id = children[idx];
                }
                BpNode::Leaf { keys, .. } => return keys.binary_search(&key).is_ok(),
            }
        }
    }
}

fn leaf_min(order: u32) -> usize {
    (order as usize).div_ceil(2)
}

fn leaf_max(order: u32) -> usize {
    order as usize - 1
}

fn child_min(order: u32) -> usize {
    (order as usize).div_ceil(2)
}

/// Splits `total` keys into group sizes of at most `cap`, each at least
/// `min`, preferring full groups with a rebalanced tail. `None` when no such
/// split exists.
fn tail_balanced_sizes(total: usize, min: usize, cap: usize) -> Option<Vec<usize>> {
    debug_assert!(min <= cap);
    let groups = total.div_ceil(cap);
    if groups <= 1 {
        return Some(vec![total]);
    }
    let mut sizes = vec![cap; groups];
    sizes[groups - 1] = total - cap * (groups - 1);
    if sizes[groups - 1] >= min {
        return Some(sizes);
    }
    // Rebalance the last two groups, then the last three.
    for spread in 2..=3.min(groups) {
        let pool: usize = sizes[groups - spread..].iter().sum();
        if pool >= spread * min {
            for (i, slot) in sizes[groups - spread..].iter_mut().enumerate() {
                let share = pool / spread + usize::from(i < pool % spread);
                *slot = share;
            }
            debug_assert!(sizes[groups - spread..].iter().all(|&s| s >= min && s <= cap));
            return Some(sizes);
        }
    }
    None
}

/// Bulk-loads a B+Tree from strictly ascending keys.
pub fn bptree_build(keys: &[u64], order: u32) -> Result<BpTree, KernelError> {
    if order < 3 {
        return Err(KernelError::InvalidSize(format!(
            "order must be at least 3, got {order}"
        )));
    }
    if keys.is_empty() {
        return Err(KernelError::InvalidInput("at least one key is required".into()));
    }
    if !keys.windows(2).all(|w| w[0] < w[1]) {
        return Err(KernelError::InvalidInput(
            "keys must be sorted ascending and unique".into(),
        ));
    }

    let mut nodes: Vec<BpNode> = Vec::new();

    // Leaf level.
    let sizes = tail_balanced_sizes(keys.len(), leaf_min(order), leaf_max(order)).ok_or(
        KernelError::InfeasibleTree {
            keys: keys.len(),
            order,
        },
    )?;
    let mut level: Vec<(NodeId, u64)> = Vec::with_capacity(sizes.len());
    let mut offset = 0;
    for size in sizes {
        let slice = &keys[offset..offset + size];
        offset += size;
        let id = nodes.len() as NodeId;
        nodes.push(BpNode::Leaf {
            keys: slice.to_vec(),
            next: None,
        });
        level.push((id, slice[0]));
    }
    for i in 0..level.len().saturating_sub(1) {
        let next_id = level[i + 1].0;
        if let BpNode::Leaf { next, .. } = &mut nodes[level[i].0 as usize] {
            *next = Some(next_id);
        }
    }

    // Internal levels, bottom up. A single remaining node becomes the root.
    while level.len() > 1 {
        let fanouts = if level.len() <= order as usize {
            vec![level.len()]
        } else {
            // Child-count rebalance is always feasible for order >= 3: the
            // pool of the last two parents is at least order + 1 >= 2*min.
            tail_balanced_sizes(level.len(), child_min(order), order as usize)
                .expect("internal level split")
        };
        let mut parents: Vec<(NodeId, u64)> = Vec::with_capacity(fanouts.len());
        let mut start = 0;
        for m in fanouts {
            let group = &level[start..start + m];
            start += m;
            let id = nodes.len() as NodeId;
            nodes.push(BpNode::Internal {
                keys: group[1..].iter().map(|&(_, min)| min).collect(),
                children: group.iter().map(|&(id, _)| id).collect(),
            });
            parents.push((id, group[0].1));
        }
        level = parents;
    }

    Ok(BpTree {
        order,
        root: level[0].0,
        nodes,
    })
}

/// Counts how many queries hit a stored key. Queries are scanned in fixed
/// blocks distributed over `threads` workers; the count is an integer sum and
/// therefore independent of thread count and scheduling.
pub fn bptree_search(tree: &BpTree, queries: &[u64], threads: usize) -> u64 {
    let blocks = parallel::block_count(queries.len(), BLOCK_ITEMS);
    let partials = parallel::map_blocks(threads, blocks, |block| {
        let lo = block * BLOCK_ITEMS;
        let hi = (lo + BLOCK_ITEMS).min(queries.len());
        queries[lo..hi]
            .iter()
            .filter(|&&q| tree.contains(q))
            .count() as u64
    });
    partials.into_iter().sum()
}

/// One failed structural constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub node: NodeId,
    pub constraint: String,
}

/// Outcome of [`validate_bptree`]: pass/fail plus the first violation found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub violation: Option<Violation>,
    pub leaves: usize,
    pub depth: usize,
    pub key_count: usize,
}

macro_rules! fail {
    ($node:expr, $($msg:tt)*) => {
        return Err(Violation { node: $node, constraint: format!($($msg)*) })
    };
}

/// Checks every structural invariant: node fill bounds, key ordering,
/// separator consistency, equal leaf depth, and the left-to-right leaf chain.
pub fn validate_bptree(tree: &BpTree) -> ValidationReport {
    let mut leaves_in_order: Vec<NodeId> = Vec::new();
    let mut visited = vec![false; tree.nodes.len()];
    let result = check_subtree(
        tree,
        tree.root,
        true,
        None,
        None,
        &mut visited,
        &mut leaves_in_order,
    );
    match result {
        Err(v) => report(tree, false, Some(v), &leaves_in_order),
        Ok(depth) => match check_leaf_chain(tree, &leaves_in_order) {
            Err(v) => report(tree, false, Some(v), &leaves_in_order),
            Ok(()) => ValidationReport {
                pass: true,
                violation: None,
                leaves: leaves_in_order.len(),
                depth,
                key_count: leaves_in_order
                    .iter()
                    .map(|&id| match tree.node(id) {
                        BpNode::Leaf { keys, .. } => keys.len(),
                        BpNode::Internal { .. } => 0,
                    })
                    .sum(),
            },
        },
    }
}

fn report(
    tree: &BpTree,
    pass: bool,
    violation: Option<Violation>,
    leaves: &[NodeId],
) -> ValidationReport {
    let _ = tree;
    ValidationReport {
        pass,
        violation,
        leaves: leaves.len(),
        depth: 0,
        key_count: 0,
    }
}

/// Returns the subtree depth (leaf = 1) or the first violation.
fn check_subtree(
    tree: &BpTree,
    id: NodeId,
    is_root: bool,
    lower: Option<u64>,
    upper: Option<u64>,
    visited: &mut [bool],
    leaves: &mut Vec<NodeId>,
) -> Result<usize, Violation> {
    let b = tree.order as usize;
    if id as usize >= tree.nodes.len() {
        fail!(id, "child id {id} out of bounds");
    }
    if visited[id as usize] {
        fail!(id, "node reachable twice (not a tree)");
    }
    visited[id as usize] = true;

    match tree.node(id) {
        BpNode::Leaf { keys, .. } => {
            let (lo, hi) = if is_root { (1, b - 1) } else { (leaf_min(tree.order), b - 1) };
            if keys.len() < lo || keys.len() > hi {
                fail!(
                    id,
                    "leaf holds {} keys, outside [{lo}, {hi}] for order {b}",
                    keys.len()
                );
            }
            check_key_bounds(id, keys, lower, upper)?;
            leaves.push(id);
            Ok(1)
        }
        BpNode::Internal { keys, children } => {
            let m = children.len();
            let (lo, hi) = if is_root { (2, b) } else { (child_min(tree.order), b) };
            if m < lo || m > hi {
                fail!(id, "internal node has {m} children, outside [{lo}, {hi}] for order {b}");
            }
            if keys.len() != m - 1 {
                fail!(id, "internal node has {} separators for {m} children", keys.len());
            }
            check_key_bounds(id, keys, lower, upper)?;
            let mut depth = None;
            for (i, &child) in children.iter().enumerate() {
                let child_lower = if i == 0 { lower } else { Some(keys[i - 1]) };
                let child_upper = if i == m - 1 { upper } else { Some(keys[i]) };
                let d = check_subtree(tree, child, false, child_lower, child_upper, visited, leaves)?;
                match depth {
                    None => depth = Some(d),
                    Some(prev) if prev != d => {
                        fail!(id, "children at unequal depths ({prev} vs {d})")
                    }
                    _ => {}
                }
            }
            Ok(depth.unwrap() + 1)
        }
    }
}

fn check_key_bounds(
    id: NodeId,
    keys: &[u64],
    lower: Option<u64>,
    upper: Option<u64>,
) -> Result<(), Violation> {
    if !keys.windows(2).all(|w| w[0] < w[1]) {
        fail!(id, "keys not strictly ascending within node");
    }
    if let (Some(lo), Some(&first)) = (lower, keys.first()) {
        if first < lo {
            fail!(id, "key {first} below subtree lower bound {lo}");
        }
    }
    if let (Some(hi), Some(&last)) = (upper, keys.last()) {
        if last >= hi {
            fail!(id, "key {last} at or above subtree upper bound {hi}");
        }
    }
    Ok(())
}

fn check_leaf_chain(tree: &BpTree, leaves: &[NodeId]) -> Result<(), Violation> {
    for (i, &id) in leaves.iter().enumerate() {
        let BpNode::Leaf { keys, next } = tree.node(id) else {
            fail!(id, "non-leaf recorded at leaf level");
        };
        let expected = leaves.get(i + 1).copied();
        if *next != expected {
            fail!(id, "leaf chain link is {next:?}, expected {expected:?}");
        }
        if let Some(next_id) = expected {
            let BpNode::Leaf { keys: next_keys, .. } = tree.node(next_id) else {
                fail!(next_id, "leaf chain points at a non-leaf");
            };
            if let (Some(&last), Some(&first)) = (keys.last(), next_keys.first()) {
                if last >= first {
                    fail!(id, "keys not ascending across the leaf chain ({last} >= {first})");
                }
            }
        }
    }
    Ok(())
}

/// Generates `count` distinct even keys, sorted ascending. Keeping keys even
/// leaves every odd value free for guaranteed-absent queries.
pub fn generate_keys(count: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4254_5245);
    let mut keys: Vec<u64> = Vec::with_capacity(count + count / 16 + 8);
    while keys.len() < count {
        let need = count - keys.len();
        for _ in 0..need + need / 16 + 8 {
            keys.push(rng.next_u64() & !1u64);
        }
        keys.sort_unstable();
        keys.dedup();
    }
    keys.truncate(count);
    keys
}

/// Query workload over a key set.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    pub queries: Vec<u64>,
    /// How many queries are present in the key set (the expected hit count).
    pub present: usize,
}

/// Generates `count` queries, half present (drawn from `keys`) and half
/// absent (an odd neighbor of a drawn key, which by construction of
/// [`generate_keys`] can never be stored), shuffled deterministically.
pub fn generate_queries(keys: &[u64], count: usize, seed: u64) -> QuerySet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5152_5953);
    let present = count.div_ceil(2);
    let mut queries = Vec::with_capacity(count);
    for i in 0..count {
        let k = keys[rng.gen_range(0..keys.len())];
        queries.push(if i < present { k } else { k | 1 });
    }
    // Fisher-Yates with the same seeded generator.
    for i in (1..queries.len()).rev() {
        let j = rng.gen_range(0..=i);
        queries.swap(i, j);
    }
    QuerySet { queries, present }
}
