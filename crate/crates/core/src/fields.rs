//! Bounded, centered random fields on tree regions.
//!
//! Every innovation is a pure function of `(master_seed, replicate, node)`
//! through [`crate::rng`], so a sampled field is identical whatever order or
//! thread computes it.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bounds::{MixingEnvelope, Provenance};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::rng;
use crate::tree::{checked_pow, geometric_count, NodeId, Region, Row, Tree};

/// Largest innovation ball an m-dependent field may average over.
pub const MAX_BALL: u128 = 1 << 20;

/// Length of the heuristic table reported for branching fields.
const AR_TABLE_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKind {
    /// I.i.d. uniform on `[−C, C]`.
    Independent,
    /// `C` times the mean of uniform `[−1, 1]` innovations over the tree
    /// ball of radius `m`.
    MDependent { m: u64 },
    /// Root uniform on `[−C, C]`; each child is `a · parent + (1 − |a|) U`
    /// with `U` uniform on `[−C, C]`.
    BranchingAr { a: f64 },
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldKind::Independent => write!(f, "independent"),
            FieldKind::MDependent { m } => write!(f, "m_dependent:{m}"),
            FieldKind::BranchingAr { a } => write!(f, "branching_ar:{a}"),
        }
    }
}

/// Parses `independent`, `m_dependent:M` and `branching_ar:A`.
impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let bad = |e: &dyn fmt::Display| Error::input(format!("field kind {s:?}: {e}"));
        match head {
            "independent" if rest.is_empty() => Ok(FieldKind::Independent),
            "m_dependent" => Ok(FieldKind::MDependent { m: rest.trim().parse().map_err(|e| bad(&e))? }),
            "branching_ar" => Ok(FieldKind::BranchingAr { a: rest.trim().parse().map_err(|e| bad(&e))? }),
            _ => Err(Error::input(format!("unknown field kind {s:?}"))),
        }
    }
}

impl Serialize for FieldKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSpec {
    pub kind: FieldKind,
    pub amplitude: f64,
    pub master_seed: u64,
}

impl FieldSpec {
    pub fn new(kind: FieldKind, amplitude: f64, master_seed: u64) -> Result<Self> {
        let spec = FieldSpec { kind, amplitude, master_seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            bad.push(format!("amplitude = {} is not positive", self.amplitude));
        }
        match self.kind {
            FieldKind::MDependent { m: 0 } => bad.push("m_dependent radius must be ≥ 1".into()),
            FieldKind::BranchingAr { a } if a.is_nan() || a.abs() >= 1.0 => {
                bad.push(format!("branching_ar coefficient |{a}| must be < 1"))
            }
            _ => {}
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

/// Bounds a field is known (or guessed) to satisfy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldCertificate {
    pub amplitude: f64,
    pub sigma2: f64,
    pub envelope: MixingEnvelope,
}

impl FieldCertificate {
    pub fn provenance(&self) -> Provenance {
        self.envelope.provenance()
    }
}

pub fn field_certificate(spec: &FieldSpec) -> FieldCertificate {
    let c = spec.amplitude;
    let (sigma2, envelope) = match spec.kind {
        FieldKind::Independent => (c * c / 3.0, MixingEnvelope::zero().with_provenance(Provenance::Exact)),
        FieldKind::MDependent { m } => {
            // the smallest ball sits at the root and has at least 2^(m+1) − 1 nodes
            let ball = geometric_count(2, m.saturating_add(1).min(127)).unwrap_or(u128::MAX) as f64;
            (c * c / (3.0 * ball), MixingEnvelope::m_dependent(m).with_provenance(Provenance::Exact))
        }
        FieldKind::BranchingAr { a } => {
            let values = (1..=AR_TABLE_LEN as i32).map(|n| a.abs().powi(n).min(0.25)).collect();
            let table = MixingEnvelope::table(values).expect("powers of |a| < 1 are a valid table");
            (c * c / 3.0, table.with_provenance(Provenance::Heuristic))
        }
    };
    FieldCertificate { amplitude: c, sigma2, envelope }
}

/// One realization of a field over a region, generation-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub nodes: Vec<NodeId>,
    pub values: Vec<f64>,
}

impl SampledField {
    pub fn get(&self, v: NodeId) -> Option<f64> {
        self.nodes.binary_search(&v).ok().map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.nodes.iter().copied().zip(self.values.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn sample_field(spec: &FieldSpec, region: &Region, tree: &Tree, replicate: u64) -> Result<SampledField> {
    sample_field_with(Exec::default(), spec, region, tree, replicate)
}

pub fn sample_field_with(
    exec: Exec,
    spec: &FieldSpec,
    region: &Region,
    tree: &Tree,
    replicate: u64,
) -> Result<SampledField> {
    let rows = tree.region_rows(region)?;
    let sampler = Sampler::new(spec, tree, &rows)?;
    let values = sampler.values(exec, replicate);
    let nodes = rows.iter().flat_map(|r| (r.first..=r.last).map(move |k| NodeId::raw(r.gen, k))).collect();
    Ok(SampledField { nodes, values })
}

/// Samples a fixed set of region rows, replicate by replicate.
#[derive(Debug, Clone)]
pub(crate) struct Sampler<'a> {
    spec: FieldSpec,
    tree: &'a Tree,
    rows: &'a [Row],
}

impl<'a> Sampler<'a> {
    pub fn new(spec: &FieldSpec, tree: &'a Tree, rows: &'a [Row]) -> Result<Self> {
        spec.validate()?;
        if let FieldKind::MDependent { m } = spec.kind {
            let ball = checked_pow(tree.rate(), m)
                .and_then(|p| p.checked_mul(m as u128 + 1))
                .and_then(|n| n.checked_mul(tree.rate() as u128));
            if ball.is_none_or(|n| n > MAX_BALL) {
                return Err(Error::Capacity {
                    what: format!("innovation ball of radius {m}"),
                    needed: ball.unwrap_or(u128::MAX),
                    cap: MAX_BALL,
                });
            }
        }
        Ok(Sampler { spec: *spec, tree, rows })
    }

    fn innovation(&self, replicate: u64, v: NodeId) -> f64 {
        rng::symmetric(rng::node_key(self.spec.master_seed, replicate, v.generation(), v.index()))
    }

    /// Values of every row, concatenated in row order.
    pub fn values(&self, exec: Exec, replicate: u64) -> Vec<f64> {
        let c = self.spec.amplitude;
        match self.spec.kind {
            FieldKind::Independent => self.row_map(exec, |v| c * self.innovation(replicate, v)),
            FieldKind::MDependent { m } => self.row_map(exec, |v| c * self.ball_mean(replicate, v, m)),
            FieldKind::BranchingAr { a } => self.branching(exec, replicate, a),
        }
    }

    fn row_map(&self, exec: Exec, f: impl Fn(NodeId) -> f64 + Sync + Send) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows.iter().map(Row::width).sum());
        for r in self.rows {
            out.extend(par::map_range(exec, r.first..r.last + 1, |k| f(NodeId::raw(r.gen, k))));
        }
        out
    }

    fn ball_mean(&self, replicate: u64, v: NodeId, m: u64) -> f64 {
        let mut sum = 0.0;
        let mut count = 0u64;
        let mut add_range = |gen: u64, lo: u128, hi: u128| {
            for k in lo..=hi {
                sum += self.innovation(replicate, NodeId::raw(gen, k as u64));
                count += 1;
            }
        };
        let a = self.tree.rate() as u128;
        let (j, k) = (v.generation(), v.index() as u128);
        let mut scale = 1u128;
        for d in 0..=m {
            add_range(j + d, scale * (k - 1) + 1, scale * k);
            scale *= a;
        }
        let mut below = v;
        for up in 1..=m.min(j) {
            let u = self.tree.parent_unchecked(below);
            let (uk, bk) = (u.index() as u128, below.index() as u128);
            add_range(u.generation(), uk, uk);
            // descendants of u outside the branch through `below`
            let (mut su, mut sb) = (a, 1u128);
            for d in 1..=m - up {
                let gen = u.generation() + d;
                let (lo, hi) = (su * (uk - 1) + 1, su * uk);
                let (blo, bhi) = (sb * (bk - 1) + 1, sb * bk);
                if lo < blo {
                    add_range(gen, lo, blo - 1);
                }
                if bhi < hi {
                    add_range(gen, bhi + 1, hi);
                }
                su *= a;
                sb *= a;
            }
            below = u;
        }
        sum / count as f64
    }

    fn ar_step(&self, a: f64, parent: f64, replicate: u64, v: NodeId) -> f64 {
        let c = self.spec.amplitude;
        (a * parent + (1.0 - a.abs()) * (c * self.innovation(replicate, v))).clamp(-c, c)
    }

    /// Value at an arbitrary node, built down the ancestor chain with the
    /// same arithmetic as row propagation.
    fn ar_value(&self, a: f64, replicate: u64, v: NodeId) -> f64 {
        let mut chain = Vec::with_capacity(v.generation() as usize + 1);
        let mut cur = v;
        while !cur.is_root() {
            chain.push(cur);
            cur = self.tree.parent_unchecked(cur);
        }
        let mut z = self.spec.amplitude * self.innovation(replicate, NodeId::ROOT);
        for &node in chain.iter().rev() {
            z = self.ar_step(a, z, replicate, node);
        }
        z
    }

    fn branching(&self, exec: Exec, replicate: u64, a: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(self.rows.iter().map(Row::width).sum());
        let mut prev: Option<(Row, usize)> = None;
        for &r in self.rows {
            let rate = self.tree.rate();
            let row: Vec<f64> = match prev {
                Some((p, start)) if p.gen + 1 == r.gen => {
                    let parents = &out[start..start + p.width()];
                    par::map_range(exec, r.first..r.last + 1, |k| {
                        let parent = parents[((k - 1) / rate + 1 - p.first) as usize];
                        self.ar_step(a, parent, replicate, NodeId::raw(r.gen, k))
                    })
                }
                _ => par::map_range(exec, r.first..r.last + 1, |k| self.ar_value(a, replicate, NodeId::raw(r.gen, k))),
            };
            prev = Some((r, out.len()));
            out.extend(row);
        }
        out
    }
}

/// Value of the field at arbitrary nodes, matching [`sample_field`] on
/// every node both cover.
pub fn field_values_at(spec: &FieldSpec, tree: &Tree, replicate: u64, nodes: &[NodeId]) -> Result<Vec<f64>> {
    for &v in nodes {
        tree.validate(v)?;
    }
    let sampler = Sampler::new(spec, tree, &[])?;
    let c = spec.amplitude;
    Ok(nodes
        .iter()
        .map(|&v| match spec.kind {
            FieldKind::Independent => c * sampler.innovation(replicate, v),
            FieldKind::MDependent { m } => c * sampler.ball_mean(replicate, v, m),
            FieldKind::BranchingAr { a } => sampler.ar_value(a, replicate, v),
        })
        .collect())
}
