//! Maps of tree truncations into integer lattices: edge distortion, the
//! Lipschitz criterion, pigeonhole refutation of a given map and constant,
//! and transfer of mixing envelopes across such a map.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::bounds::MixingEnvelope;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::tree::{checked_pow, GraphSpec, NodeId, Region, Tree};

/// Finite injective assignment of tree nodes to points of `Z^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeMap {
    dim: usize,
    points: BTreeMap<NodeId, Vec<i64>>,
}

impl LatticeMap {
    pub fn new(dim: usize, points: impl IntoIterator<Item = (NodeId, Vec<i64>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("lattice dimension must be ≥ 1"));
        }
        let mut map = BTreeMap::new();
        let mut owner: HashMap<Vec<i64>, NodeId> = HashMap::new();
        for (v, x) in points {
            if x.len() != dim {
                return Err(Error::input(format!("point of {v} has {} coordinates, expected {dim}", x.len())));
            }
            if let Some(prev) = owner.insert(x.clone(), v) {
                if prev != v {
                    return Err(Error::input(format!("map is not injective: {prev} and {v} share {x:?}")));
                }
            }
            if map.insert(v, x).is_some() {
                return Err(Error::input(format!("{v} is mapped twice")));
            }
        }
        Ok(LatticeMap { dim, points: map })
    }

    /// Layout of generations `0..=depth`. In one dimension nodes are placed
    /// at their breadth-first index; otherwise `(j, k) ↦ (k, j, 0, …)`.
    pub fn row_layout(rate: u64, dim: usize, depth: u64) -> Result<Self> {
        let tree = Tree::new(rate)?;
        let nodes = tree.region_nodes(&Region::Generations { count: depth + 1 })?;
        let to_i64 = |x: u64| i64::try_from(x).expect("coordinates are 63-bit");
        let points = nodes.enumerate().map(|(i, v)| {
            let x = if dim == 1 {
                vec![i as i64]
            } else {
                let mut x = vec![0; dim];
                x[0] = to_i64(v.index());
                x[1] = to_i64(v.generation());
                x
            };
            (v, x)
        });
        Self::new(dim, points.collect::<Vec<_>>())
    }

    /// Parses lines `j k x1 … xN`; `#` starts a comment.
    pub fn parse(dim: usize, text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != dim + 2 {
                return Err(Error::parse(i + 1, format!("expected {} fields, found {}", dim + 2, fields.len())));
            }
            let node = |s: &str| s.parse::<u64>().map_err(|e| Error::parse(i + 1, format!("{s:?}: {e}")));
            let v = NodeId::new(node(fields[0])?, node(fields[1])?).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            let x = fields[2..]
                .iter()
                .map(|s| s.parse::<i64>().map_err(|e| Error::parse(i + 1, format!("{s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            points.push((v, x));
        }
        Self::new(dim, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, v: NodeId) -> Option<&[i64]> {
        self.points.get(&v).map(Vec::as_slice)
    }

    /// Deepest generation holding a mapped node.
    pub fn depth(&self) -> Option<u64> {
        self.points.keys().map(NodeId::generation).max()
    }

    /// Largest `d` such that every node of generations `0..=d` is mapped.
    pub fn closed_depth(&self, rate: u64) -> Option<u64> {
        let mut d = None;
        for j in 0..=self.depth()? {
            let width = checked_pow(rate, j)?;
            let mapped = self.points.range(NodeId::raw(j, 1)..=NodeId::raw(j, u64::MAX)).count() as u128;
            if mapped != width {
                break;
            }
            d = Some(j);
        }
        d
    }

    fn chebyshev(&self, v: NodeId, w: NodeId) -> Option<u64> {
        let (a, b) = (self.points.get(&v)?, self.points.get(&w)?);
        Some(a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0))
    }
}

/// Largest image distance across a graph edge; tree edges are taken up to
/// the map's depth. Infinite when an edge endpoint is unmapped.
pub fn distortion_constant(graph: &GraphSpec, map: &LatticeMap) -> f64 {
    let tree = graph.tree();
    let mut worst: f64 = 0.0;
    let depth = map.depth().unwrap_or(0);
    let mut edge = |v: NodeId, w: NodeId| match map.chebyshev(v, w) {
        Some(d) => worst = worst.max(d as f64),
        None => worst = f64::INFINITY,
    };
    for j in 1..=depth {
        let Some(width) = tree.generation_size(j) else { break };
        for k in 1..=width as u64 {
            let child = NodeId::raw(j, k);
            edge(tree.parent_unchecked(child), child);
        }
    }
    for &(v, w) in graph.extra_edges() {
        edge(v, w);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Counterexample {
    pub v: NodeId,
    pub w: NodeId,
    pub image_distance: u64,
    pub graph_distance: u64,
}

/// Checks `d_∞(v', w') ≤ C d_G(v, w)` on the given pairs, scanned in
/// lexicographic order; returns the first violation.
pub fn lipschitz_check(
    graph: &GraphSpec,
    map: &LatticeMap,
    constant: f64,
    pairs: &[(NodeId, NodeId)],
) -> Result<Option<Counterexample>> {
    if constant.is_nan() || constant < 0.0 {
        return Err(Error::input(format!("constant {constant} is negative")));
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_unstable();
    for (v, w) in sorted {
        let image = map.chebyshev(v, w).ok_or_else(|| Error::input(format!("pair {v}, {w} is not mapped")))?;
        let dist = graph.distance(v, w)?;
        if image as f64 > constant * dist as f64 {
            return Ok(Some(Counterexample { v, w, image_distance: image, graph_distance: dist }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub generation: u64,
    pub v: NodeId,
    pub w: NodeId,
    pub image_distance: u64,
    pub tree_distance: u64,
}

/// Whether generation `k` is large enough that pigeonhole forces a wide
/// pair: `A^k > (2⌈C⌉k + 1)^N`, compared in log space.
pub fn pigeonhole_applies(rate: u64, dim: usize, constant: f64, k: u64) -> bool {
    let ball = 2.0 * constant.ceil() * k as f64 + 1.0;
    k as f64 * (rate as f64).ln() > dim as f64 * ball.ln()
}

pub fn refutation_witness(rate: u64, map: &LatticeMap, constant: f64, k_max: u64) -> Result<Option<Witness>> {
    refutation_witness_with(Exec::default(), &Tree::new(rate)?, map, constant, k_max)
}

/// First same-generation pair `(v, w)`, in `(k, v, w)` order over the
/// generations where pigeonhole applies, whose image distance exceeds
/// `C d_T(v, w)`.
pub fn refutation_witness_with(
    exec: Exec,
    tree: &Tree,
    map: &LatticeMap,
    constant: f64,
    k_max: u64,
) -> Result<Option<Witness>> {
    if !(constant.is_finite() && constant >= 0.0) {
        return Err(Error::input(format!("constant {constant} must be finite and non-negative")));
    }
    let rate = tree.rate();
    let widest = tree.generation_size(k_max).unwrap_or(u128::MAX);
    if widest > tree.node_cap() {
        return Err(Error::Capacity { what: format!("generation {k_max}"), needed: widest, cap: tree.node_cap() });
    }
    if map.closed_depth(rate).is_none_or(|d| d < k_max) {
        return Err(Error::input(format!("map does not cover every generation up to {k_max}")));
    }
    for k in 1..=k_max {
        let width = tree.generation_size(k).expect("checked above");
        if !pigeonhole_applies(rate, map.dim(), constant, k) {
            continue;
        }
        let width = width as u64;
        let found = par::find_first(exec, 1..width + 1, |a| {
            let v = NodeId::raw(k, a);
            (a + 1..=width).find_map(|b| {
                let w = NodeId::raw(k, b);
                let image = map.chebyshev(v, w)?;
                let dist = tree.distance_unchecked(v, w);
                (image as f64 > constant * dist as f64).then_some(Witness {
                    generation: k,
                    v,
                    w,
                    image_distance: image,
                    tree_distance: dist,
                })
            })
        });
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

/// Envelope in lattice distance implied by a graph envelope and a map of
/// distortion `C`: `n ↦ α(⌊n / C⌋)` for `n ≥ C`, 1 below.
pub fn mixing_transfer(envelope: &MixingEnvelope, constant: f64) -> Result<MixingEnvelope> {
    envelope.rescaled(constant)
}
