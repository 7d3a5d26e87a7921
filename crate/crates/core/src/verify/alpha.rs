use serde::Serialize;

use crate::bounds::{MixingEnvelope, Provenance};
use crate::error::{Error, Result};
use crate::fields::{field_values_at, FieldSpec};
use crate::par::{self, Exec};
use crate::tree::{NodeId, Tree};

/// Two node sets and one threshold event on each: `{Σ_I Z > t_I}` and
/// `{Σ_J Z > t_J}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPair {
    pub left: Vec<NodeId>,
    pub right: Vec<NodeId>,
    pub left_threshold: f64,
    pub right_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub pairs: Vec<EventPair>,
    pub replicates: u64,
}

impl SamplePlan {
    /// Single nodes `(d, 1)` and `(d + n, 1)` for each start depth, with
    /// zero thresholds.
    pub fn vertical(separation: u64, depths: impl IntoIterator<Item = u64>, replicates: u64) -> Self {
        let pairs = depths
            .into_iter()
            .map(|d| EventPair {
                left: vec![NodeId::raw(d, 1)],
                right: vec![NodeId::raw(d + separation, 1)],
                left_threshold: 0.0,
                right_threshold: 0.0,
            })
            .collect();
        SamplePlan { pairs, replicates }
    }
}

/// Largest sampled `|P̂(A ∩ B) − P̂(A) P̂(B)|`: a statistical lower bound on
/// the mixing coefficient at the plan's separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaEstimate {
    pub separation: u64,
    pub estimate: f64,
    pub std_error: f64,
    /// Index of the plan pair attaining the maximum.
    pub pair: usize,
}

fn set_distance(tree: &Tree, a: &[NodeId], b: &[NodeId]) -> Result<u64> {
    let mut best = u64::MAX;
    for &v in a {
        for &w in b {
            best = best.min(tree.distance(v, w)?);
        }
    }
    Ok(best)
}

pub fn empirical_alpha_lower(field: &FieldSpec, tree: &Tree, separation: u64, plan: &SamplePlan) -> Result<AlphaEstimate> {
    empirical_alpha_lower_with(Exec::default(), field, tree, separation, plan)
}

pub fn empirical_alpha_lower_with(
    exec: Exec,
    field: &FieldSpec,
    tree: &Tree,
    separation: u64,
    plan: &SamplePlan,
) -> Result<AlphaEstimate> {
    if plan.pairs.is_empty() || plan.replicates < 2 {
        return Err(Error::input("sample plan needs at least one event pair and two replicates"));
    }
    for (i, p) in plan.pairs.iter().enumerate() {
        if p.left.is_empty() || p.right.is_empty() {
            return Err(Error::input(format!("event pair {i} has an empty node set")));
        }
        let d = set_distance(tree, &p.left, &p.right)?;
        if d < separation {
            return Err(Error::input(format!("event pair {i} is at distance {d} < {separation}")));
        }
    }
    let n = plan.replicates;
    let mut best: Option<AlphaEstimate> = None;
    for (i, p) in plan.pairs.iter().enumerate() {
        let nodes: Vec<NodeId> = p.left.iter().chain(&p.right).copied().collect();
        let split = p.left.len();
        let hits = par::map_range(exec, 0..n, |r| -> Result<(bool, bool)> {
            let z = field_values_at(field, tree, r, &nodes)?;
            Ok((z[..split].iter().sum::<f64>() > p.left_threshold, z[split..].iter().sum::<f64>() > p.right_threshold))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let nf = n as f64;
        let pa = hits.iter().filter(|h| h.0).count() as f64 / nf;
        let pb = hits.iter().filter(|h| h.1).count() as f64 / nf;
        let pab = hits.iter().filter(|h| h.0 && h.1).count() as f64 / nf;
        let d = pab - pa * pb;
        // delta method: influence of one replicate is (1_A − pa)(1_B − pb) − d
        let var = hits
            .iter()
            .map(|&(a, b)| ((a as u8 as f64 - pa) * (b as u8 as f64 - pb) - d).powi(2))
            .sum::<f64>()
            / (nf - 1.0);
        let est = AlphaEstimate { separation, estimate: d.abs(), std_error: (var / nf).sqrt(), pair: i };
        if best.is_none_or(|b| est.estimate > b.estimate) {
            best = Some(est);
        }
    }
    Ok(best.expect("plan is nonempty"))
}

/// Heuristic envelope from sampled lower bounds at separations
/// `1..=max_separation`: each estimate plus three standard errors, capped at
/// 1/4 and made non-increasing from the right. Never a certificate.
pub fn calibrated_envelope(
    field: &FieldSpec,
    tree: &Tree,
    max_separation: u64,
    plan_for: impl Fn(u64) -> SamplePlan,
) -> Result<MixingEnvelope> {
    if max_separation == 0 {
        return Err(Error::input("calibration needs at least one separation"));
    }
    let mut values = (1..=max_separation)
        .map(|n| empirical_alpha_lower(field, tree, n, &plan_for(n)).map(|e| (e.estimate + 3.0 * e.std_error).min(0.25)))
        .collect::<Result<Vec<f64>>>()?;
    for i in (0..values.len() - 1).rev() {
        values[i] = values[i].max(values[i + 1]);
    }
    Ok(MixingEnvelope::table(values)?.with_provenance(Provenance::Heuristic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldKind;
    use crate::verify::FiniteSpace;

    fn tree() -> Tree {
        Tree::new(2).unwrap()
    }

    #[test]
    fn independent_field_near_zero() {
        let f = FieldSpec::new(FieldKind::Independent, 1.0, 8).unwrap();
        let e = empirical_alpha_lower(&f, &tree(), 1, &SamplePlan::vertical(1, [0], 10_000)).unwrap();
        assert!(e.estimate < 3.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn m_dependent_beyond_range_near_zero() {
        let f = FieldSpec::new(FieldKind::MDependent { m: 1 }, 1.0, 8).unwrap();
        let e = empirical_alpha_lower(&f, &tree(), 3, &SamplePlan::vertical(3, [2], 10_000)).unwrap();
        assert!(e.estimate < 3.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn branching_neighbours_detected() {
        let f = FieldSpec::new(FieldKind::BranchingAr { a: 0.9 }, 1.0, 8).unwrap();
        let e = empirical_alpha_lower(&f, &tree(), 1, &SamplePlan::vertical(1, [0], 10_000)).unwrap();
        assert!(e.estimate > 5.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn plan_checks() {
        let f = FieldSpec::new(FieldKind::Independent, 1.0, 8).unwrap();
        let empty = SamplePlan { pairs: vec![], replicates: 100 };
        assert!(empirical_alpha_lower(&f, &tree(), 1, &empty).is_err());
        assert!(empirical_alpha_lower(&f, &tree(), 3, &SamplePlan::vertical(2, [0], 100)).is_err());
    }

    #[test]
    fn never_above_exact_alpha_of_the_sample() {
        // the empirical law of (1_A, 1_B) is a finite space whose exact
        // coefficient dominates any single event pair
        let f = FieldSpec::new(FieldKind::BranchingAr { a: 0.7 }, 1.0, 5).unwrap();
        let plan = SamplePlan::vertical(2, [1], 400);
        let e = empirical_alpha_lower(&f, &tree(), 2, &plan).unwrap();
        let nodes = [NodeId::raw(1, 1), NodeId::raw(3, 1)];
        let hits: Vec<(usize, usize)> = (0..400)
            .map(|r| {
                let z = field_values_at(&f, &tree(), r, &nodes).unwrap();
                ((z[0] > 0.0) as usize, (z[1] > 0.0) as usize)
            })
            .collect();
        let atoms = |side: fn(&(usize, usize)) -> usize| -> Vec<Vec<usize>> {
            (0..2).map(|v| (0..400).filter(|&i| side(&hits[i]) == v).collect::<Vec<_>>()).filter(|a| !a.is_empty()).collect()
        };
        let space = FiniteSpace::new(vec![1.0 / 400.0; 400], atoms(|h| h.0), atoms(|h| h.1), vec![0.0; 400], vec![0.0; 400]).unwrap();
        assert!(e.estimate <= space.exact_alpha() + 1e-12);
    }

    #[test]
    fn calibration_is_heuristic_and_monotone() {
        let f = FieldSpec::new(FieldKind::BranchingAr { a: 0.6 }, 1.0, 8).unwrap();
        let env = calibrated_envelope(&f, &tree(), 4, |n| SamplePlan::vertical(n, [0], 2000)).unwrap();
        assert_eq!(env.provenance(), Provenance::Heuristic);
        assert!((1..4).all(|n| env.eval(n + 1) <= env.eval(n)));
    }
}
