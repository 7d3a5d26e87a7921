//! Rate-A trees, their bounded extensions, and finite node regions.
//!
//! Nodes are addressed as `(j, k)`: generation `j ≥ 0` and index
//! `1 ≤ k ≤ A^j`. The root is `(0, 1)` and the children of `(j, k)` are
//! `(j + 1, A(k − 1) + 1) … (j + 1, Ak)`. Nothing here materializes the
//! tree; navigation is index arithmetic, so deep nodes are cheap to address.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest generation or index accepted by [`NodeId::new`].
pub const MAX_COORD: u64 = i64::MAX as u64;

/// Default cap on the number of nodes a region may materialize.
pub const DEFAULT_NODE_CAP: u128 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    gen: u64,
    index: u64,
}

impl NodeId {
    pub const ROOT: NodeId = NodeId { gen: 0, index: 1 };

    pub fn new(gen: u64, index: u64) -> Result<Self> {
        if index == 0 {
            return Err(Error::input(format!("node ({gen},{index}): index must be ≥ 1")));
        }
        if gen > MAX_COORD || index > MAX_COORD {
            return Err(Error::Range(format!("node ({gen},{index}) exceeds 63-bit coordinates")));
        }
        Ok(NodeId { gen, index })
    }

    /// Unvalidated constructor for coordinates already known to be in range.
    pub(crate) const fn raw(gen: u64, index: u64) -> Self {
        NodeId { gen, index }
    }

    pub fn generation(&self) -> u64 {
        self.gen
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn is_root(&self) -> bool {
        self.gen == 0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.gen, self.index)
    }
}

/// `base^exp` in u128, `None` on overflow.
pub(crate) fn checked_pow(base: u64, exp: u64) -> Option<u128> {
    let exp = u32::try_from(exp).ok()?;
    (base as u128).checked_pow(exp)
}

/// `(A^n − 1)/(A − 1)`, the node count of `n` consecutive full generations
/// starting at the root.
pub(crate) fn geometric_count(rate: u64, n: u64) -> Option<u128> {
    Some((checked_pow(rate, n)? - 1) / (rate as u128 - 1))
}

/// A rooted tree in which every node has exactly `rate` children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tree {
    rate: u64,
    node_cap: u128,
}

impl Tree {
    pub fn new(rate: u64) -> Result<Self> {
        if rate < 2 {
            return Err(Error::input(format!("branching rate must be ≥ 2, got {rate}")));
        }
        Ok(Tree { rate, node_cap: DEFAULT_NODE_CAP })
    }

    pub fn with_node_cap(mut self, cap: u128) -> Self {
        self.node_cap = cap;
        self
    }

    pub fn rate(&self) -> u64 {
        self.rate
    }

    pub fn node_cap(&self) -> u128 {
        self.node_cap
    }

    /// Number of nodes in generation `j`, `None` if it does not fit in u128.
    pub fn generation_size(&self, gen: u64) -> Option<u128> {
        checked_pow(self.rate, gen)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        match self.generation_size(v.gen) {
            Some(size) => (v.index as u128) <= size,
            None => true,
        }
    }

    pub fn validate(&self, v: NodeId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::input(format!("node {v} is not in the tree of rate {}", self.rate)))
        }
    }

    pub fn node(&self, gen: u64, index: u64) -> Result<NodeId> {
        let v = NodeId::new(gen, index)?;
        self.validate(v)?;
        Ok(v)
    }

    pub(crate) fn parent_unchecked(&self, v: NodeId) -> NodeId {
        NodeId { gen: v.gen - 1, index: (v.index - 1) / self.rate + 1 }
    }

    pub fn parent(&self, v: NodeId) -> Result<Option<NodeId>> {
        self.validate(v)?;
        Ok((!v.is_root()).then(|| self.parent_unchecked(v)))
    }

    /// Index range `first..=last` of the children of `v`.
    fn child_range(&self, v: NodeId) -> Result<(u64, u64)> {
        let overflow = || Error::Range(format!("children of {v} overflow 63-bit indices"));
        if v.gen >= MAX_COORD {
            return Err(overflow());
        }
        let last = v.index.checked_mul(self.rate).filter(|&i| i <= MAX_COORD).ok_or_else(overflow)?;
        Ok((last - self.rate + 1, last))
    }

    pub fn children(&self, v: NodeId) -> Result<Vec<NodeId>> {
        self.validate(v)?;
        let (first, last) = self.child_range(v)?;
        Ok((first..=last).map(|index| NodeId { gen: v.gen + 1, index }).collect())
    }

    /// Lowest common ancestor, found by lifting the deeper node first.
    pub fn lca(&self, v: NodeId, w: NodeId) -> Result<NodeId> {
        self.validate(v)?;
        self.validate(w)?;
        Ok(self.lca_unchecked(v, w))
    }

    fn lca_unchecked(&self, mut v: NodeId, mut w: NodeId) -> NodeId {
        while v.gen > w.gen {
            v = self.parent_unchecked(v);
        }
        while w.gen > v.gen {
            w = self.parent_unchecked(w);
        }
        while v != w {
            v = self.parent_unchecked(v);
            w = self.parent_unchecked(w);
        }
        v
    }

    /// Number of tree edges between `v` and `w`.
    pub fn distance(&self, v: NodeId, w: NodeId) -> Result<u64> {
        self.validate(v)?;
        self.validate(w)?;
        Ok(self.distance_unchecked(v, w))
    }

    pub(crate) fn distance_unchecked(&self, v: NodeId, w: NodeId) -> u64 {
        let top = self.lca_unchecked(v, w);
        v.gen + w.gen - 2 * top.gen
    }

    /// Closed-form node count of a region, `None` if it overflows u128.
    pub fn region_size(&self, region: &Region) -> Option<u128> {
        match *region {
            Region::Subtree { gens, .. } => geometric_count(self.rate, gens),
            Region::Strip { level, gens } => {
                checked_pow(self.rate, level)?.checked_mul(geometric_count(self.rate, gens)?)
            }
            Region::Generations { count } => geometric_count(self.rate, count),
        }
    }

    /// Rows (one per generation) of a region, after validation and the
    /// node-count cap check.
    pub fn region_rows(&self, region: &Region) -> Result<Vec<Row>> {
        region.check()?;
        let size = self.region_size(region).unwrap_or(u128::MAX);
        if size > self.node_cap {
            return Err(Error::Capacity { what: region.to_string(), needed: size, cap: self.node_cap });
        }
        let range_err = || Error::Range(format!("{region} leaves the 63-bit index range"));
        let full_row = |gen: u64| -> Result<Row> {
            let last = self.generation_size(gen).filter(|&n| n <= MAX_COORD as u128).ok_or_else(range_err)?;
            Ok(Row { gen, first: 1, last: last as u64 })
        };
        match *region {
            Region::Subtree { root, gens } => {
                self.validate(root)?;
                (0..gens)
                    .map(|t| {
                        let scale = checked_pow(self.rate, t).ok_or_else(range_err)?;
                        let first = scale * (root.index as u128 - 1) + 1;
                        let last = scale * root.index as u128;
                        if last > MAX_COORD as u128 || root.gen + t > MAX_COORD {
                            return Err(range_err());
                        }
                        Ok(Row { gen: root.gen + t, first: first as u64, last: last as u64 })
                    })
                    .collect()
            }
            Region::Strip { level, gens } => (level..level + gens).map(full_row).collect(),
            Region::Generations { count } => (0..count).map(full_row).collect(),
        }
    }

    /// All nodes of a region, generation-major and index-ascending.
    pub fn region_nodes(&self, region: &Region) -> Result<RegionIter> {
        let rows = self.region_rows(region)?;
        let remaining = rows.iter().map(Row::width).sum();
        let next = rows.first().map_or(0, |r| r.first);
        Ok(RegionIter { rows, row: 0, next, remaining })
    }
}

/// One generation's contiguous slice of a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Row {
    pub gen: u64,
    pub first: u64,
    pub last: u64,
}

impl Row {
    pub fn width(&self) -> usize {
        (self.last - self.first + 1) as usize
    }
}

/// A finite node set of a rate-A tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// `gens` generations of the subtree rooted at `root`.
    Subtree { root: NodeId, gens: u64 },
    /// Union of the `gens`-generation subtrees rooted at every node of
    /// generation `level`; that is, generations `level .. level + gens`.
    Strip { level: u64, gens: u64 },
    /// Generations `0 .. count`.
    Generations { count: u64 },
}

impl Region {
    fn check(&self) -> Result<()> {
        match *self {
            Region::Subtree { gens: 0, .. } | Region::Strip { gens: 0, .. } => {
                Err(Error::input(format!("{self}: depth must be ≥ 1")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Subtree { root, gens } => write!(f, "subtree{root}x{gens}"),
            Region::Strip { level, gens } => write!(f, "strip({level},{gens})"),
            Region::Generations { count } => write!(f, "generations({count})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegionIter {
    rows: Vec<Row>,
    row: usize,
    next: u64,
    remaining: usize,
}

impl Iterator for RegionIter {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let row = *self.rows.get(self.row)?;
        let v = NodeId { gen: row.gen, index: self.next };
        if self.next == row.last {
            self.row += 1;
            if let Some(r) = self.rows.get(self.row) {
                self.next = r.first;
            }
        } else {
            self.next += 1;
        }
        self.remaining -= 1;
        Some(v)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for RegionIter {}

/// A rate-A tree plus a finite set of extra edges of bounded tree span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSpec {
    tree: Tree,
    extra: Vec<(NodeId, NodeId)>,
    span: u64,
}

impl GraphSpec {
    pub fn tree_only(tree: Tree) -> Self {
        GraphSpec { tree, extra: Vec::new(), span: 0 }
    }

    /// Extra edges are unordered; repeated pairs collapse to one.
    pub fn new(tree: Tree, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        let mut span = 0;
        for (v, w) in edges {
            tree.validate(v)?;
            tree.validate(w)?;
            if v == w {
                return Err(Error::input(format!("extra edge {v}-{w} is a self-loop")));
            }
            let d = tree.distance_unchecked(v, w);
            if d == 1 {
                return Err(Error::input(format!("extra edge {v}-{w} duplicates a tree edge")));
            }
            span = span.max(d);
            set.insert(if v < w { (v, w) } else { (w, v) });
        }
        Ok(GraphSpec { tree, extra: set.into_iter().collect(), span })
    }

    /// Parse an edge list: one extra edge per line as `j k j' k'`; `#`
    /// starts a comment.
    pub fn parse_edge_list(tree: Tree, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|t| t.parse::<u64>().map_err(|e| Error::parse(i + 1, format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if nums.len() != 4 {
                return Err(Error::parse(i + 1, format!("expected 4 integers, found {}", nums.len())));
            }
            let v = NodeId::new(nums[0], nums[1]).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            let w = NodeId::new(nums[2], nums[3]).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            edges.push((v, w));
        }
        GraphSpec::new(tree, edges)
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn extra_edges(&self) -> &[(NodeId, NodeId)] {
        &self.extra
    }

    /// Maximum tree distance spanned by an extra edge (0 when there are none).
    pub fn span(&self) -> u64 {
        self.span
    }

    /// Shortest-path distance over tree edges plus the extra edges.
    ///
    /// A shortest path alternates tree geodesics and extra edges, so it is
    /// enough to run Dijkstra on the endpoints `{v, w}` and the extra-edge
    /// endpoints, weighting each pair by its tree distance (or 1 for an
    /// extra edge).
    pub fn distance(&self, v: NodeId, w: NodeId) -> Result<u64> {
        self.tree.validate(v)?;
        self.tree.validate(w)?;
        let direct = self.tree.distance_unchecked(v, w);
        if self.extra.is_empty() || direct <= 1 {
            return Ok(direct);
        }
        let mut keys: Vec<NodeId> = vec![v, w];
        for &(a, b) in &self.extra {
            keys.push(a);
            keys.push(b);
        }
        keys.sort_unstable();
        keys.dedup();
        let pos = |x: NodeId| keys.binary_search(&x).expect("key node");
        let n = keys.len();
        let mut weight = vec![0u64; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.tree.distance_unchecked(keys[i], keys[j]);
                weight[i * n + j] = d;
                weight[j * n + i] = d;
            }
        }
        for &(a, b) in &self.extra {
            let (i, j) = (pos(a), pos(b));
            weight[i * n + j] = 1;
            weight[j * n + i] = 1;
        }
        let (src, dst) = (pos(v), pos(w));
        let mut dist = vec![u64::MAX; n];
        let mut done = vec![false; n];
        dist[src] = 0;
        for _ in 0..n {
            let u = (0..n).filter(|&i| !done[i]).min_by_key(|&i| dist[i]).expect("unvisited node");
            if u == dst {
                break;
            }
            done[u] = true;
            for x in 0..n {
                if !done[x] {
                    dist[x] = dist[x].min(dist[u] + weight[u * n + x]);
                }
            }
        }
        Ok(dist[dst])
    }
}
