use std::cmp::Ordering;

use super::bernstein::{beta_cap, BernsteinInput, StripModel};
use super::envelope::MixingEnvelope;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::tree::checked_pow;

/// Candidate `β` values for each `(P2, Q2)`.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaGrid {
    /// `cap · 10^(−i / per_decade)` for `i = 0 ..= decades · per_decade`.
    Log { decades: u32, per_decade: u32 },
    /// Fixed values; those above the cap are skipped.
    Values(Vec<f64>),
}

impl Default for BetaGrid {
    fn default() -> Self {
        BetaGrid::Log { decades: 3, per_decade: 32 }
    }
}

impl BetaGrid {
    fn points(&self, cap: f64) -> Vec<f64> {
        match self {
            BetaGrid::Log { decades, per_decade } => {
                let steps = decades * per_decade;
                (0..=steps).map(|i| cap * 10f64.powf(-(i as f64) / *per_decade as f64)).collect()
            }
            BetaGrid::Values(v) => v.iter().copied().filter(|b| *b > 0.0 && *b <= cap).collect(),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            BetaGrid::Log { per_decade, .. } => *per_decade == 0,
            BetaGrid::Values(v) => v.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub p2: Vec<u64>,
    pub q2: Vec<u64>,
    pub beta: BetaGrid,
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid { p2: (2..=128).collect(), q2: (2..=128).collect(), beta: BetaGrid::default() }
    }
}

/// The strip and field data the optimizer holds fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct StripProblem {
    pub rate: u64,
    pub level: u64,
    pub depth: u64,
    pub amplitude: f64,
    pub sigma2: f64,
    pub envelope: MixingEnvelope,
    pub epsilon: f64,
}

impl StripProblem {
    pub fn input(&self, p2: u64, q2: u64, beta: f64) -> BernsteinInput {
        BernsteinInput {
            rate: self.rate,
            level: self.level,
            depth: self.depth,
            p2,
            q2,
            beta,
            epsilon: self.epsilon,
            amplitude: self.amplitude,
            sigma2: self.sigma2,
            envelope: self.envelope.clone(),
        }
    }
}

pub fn optimize_params(problem: &StripProblem, grid: &ParamGrid) -> Result<BernsteinInput> {
    optimize_params_with(Exec::default(), problem, grid)
}

/// Admissible grid point with the smallest bound. Ties go to the smallest
/// `P2`, then the smallest `Q2`, then the largest `β`.
pub fn optimize_params_with(exec: Exec, problem: &StripProblem, grid: &ParamGrid) -> Result<BernsteinInput> {
    if grid.p2.is_empty() || grid.q2.is_empty() || grid.beta.is_empty() {
        return Err(Error::input("parameter grid is empty"));
    }
    let mut p2s = grid.p2.clone();
    let mut q2s = grid.q2.clone();
    p2s.sort_unstable();
    p2s.dedup();
    q2s.sort_unstable();
    q2s.dedup();
    let roots = checked_pow(problem.rate, problem.level).unwrap_or(u128::MAX);
    let pairs: Vec<(u64, u64)> = p2s
        .iter()
        .flat_map(|&p| q2s.iter().map(move |&q| (p, q)))
        .filter(|&(p, q)| q >= 2 && q <= p && (p as u128 + q as u128) < roots)
        .collect();
    let infeasible = || Error::Infeasible(format!("no admissible (p2, q2, beta) on the grid for {problem:?}"));
    if pairs.is_empty() {
        return Err(infeasible());
    }
    // checks the fixed fields once, on an admissible point
    let (p, q) = pairs[0];
    problem.input(p, q, beta_cap(problem.rate, problem.depth, p, problem.amplitude)).validate()?;
    let model = StripModel::new(
        problem.rate,
        problem.level,
        problem.depth,
        problem.amplitude,
        problem.sigma2,
        &problem.envelope,
    )?;
    let best_per_pair = par::map_slice(exec, &pairs, |&(p, q)| {
        let cap = beta_cap(problem.rate, problem.depth, p, problem.amplitude);
        let mut betas = grid.beta.points(cap);
        betas.sort_by(|a, b| b.total_cmp(a));
        let mut best: Option<(f64, f64)> = None;
        for beta in betas {
            let value = model.evaluate(p, q, beta, problem.epsilon).log_total;
            if value.is_finite() && best.is_none_or(|(v, _)| value < v) {
                best = Some((value, beta));
            }
        }
        best.map(|(v, b)| (v, p, q, b))
    });
    let best = best_per_pair.into_iter().flatten().fold(None, |acc: Option<(f64, u64, u64, f64)>, cur| match acc {
        Some(a) if cur.0.total_cmp(&a.0) != Ordering::Less => Some(a),
        _ => Some(cur),
    });
    let (_, p2, q2, beta) = best.ok_or_else(infeasible)?;
    Ok(problem.input(p2, q2, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::bernstein_bound;

    fn problem(epsilon: f64) -> StripProblem {
        StripProblem {
            rate: 2,
            level: 5,
            depth: 3,
            amplitude: 1.0,
            sigma2: 1.0 / 3.0,
            envelope: MixingEnvelope::zero(),
            epsilon,
        }
    }

    #[test]
    fn infeasible_and_empty_grids() {
        let bad = ParamGrid { p2: vec![20, 30], q2: vec![20, 30], beta: BetaGrid::default() };
        assert!(matches!(optimize_params(&problem(100.0), &bad), Err(Error::Infeasible(_))));
        let only_q1 = ParamGrid { p2: vec![4], q2: vec![1], beta: BetaGrid::default() };
        assert!(matches!(optimize_params(&problem(100.0), &only_q1), Err(Error::Infeasible(_))));
        let empty = ParamGrid { p2: vec![], q2: vec![2], beta: BetaGrid::default() };
        assert!(matches!(optimize_params(&problem(100.0), &empty), Err(Error::Input(_))));
        let over_cap = ParamGrid { p2: vec![4], q2: vec![4], beta: BetaGrid::Values(vec![1.0]) };
        assert!(matches!(optimize_params(&problem(100.0), &over_cap), Err(Error::Infeasible(_))));
    }

    #[test]
    fn singleton_grid_returns_its_point() {
        let grid = ParamGrid { p2: vec![6], q2: vec![3], beta: BetaGrid::Values(vec![1e-3]) };
        let got = optimize_params(&problem(100.0), &grid).unwrap();
        assert_eq!((got.p2, got.q2, got.beta), (6, 3, 1e-3));
    }

    #[test]
    fn never_worse_than_any_scanned_point() {
        let betas: Vec<f64> = (1..=5).map(|i| i as f64 * 4e-4).collect();
        let grid = ParamGrid { p2: vec![2, 4, 6, 8, 10], q2: vec![2, 3, 4, 5, 6], beta: BetaGrid::Values(betas.clone()) };
        for eps in [20.0, 120.0, 400.0] {
            let best = bernstein_bound(&optimize_params(&problem(eps), &grid).unwrap()).unwrap().log_total;
            for &p in &grid.p2 {
                for &q in &grid.q2 {
                    for &b in &betas {
                        if let Ok(bd) = bernstein_bound(&problem(eps).input(p, q, b)) {
                            assert!(best <= bd.log_total, "({p},{q},{b}) beats optimum at eps {eps}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tie_break_prefers_small_blocks_and_large_beta() {
        // zero epsilon-dependence in beta is impossible, but equal values
        // arise across q2 under the zero envelope when A^L/(P2+Q2) ties
        let grid = ParamGrid { p2: vec![4], q2: vec![2, 3, 4], beta: BetaGrid::Values(vec![1e-4]) };
        let got = optimize_params(&problem(100.0), &grid).unwrap();
        assert_eq!(got.p2, 4);
        let a = bernstein_bound(&problem(100.0).input(4, got.q2, 1e-4)).unwrap().log_total;
        for q in [2, 3, 4] {
            let b = bernstein_bound(&problem(100.0).input(4, q, 1e-4)).unwrap().log_total;
            assert!(a < b || (a == b && got.q2 <= q));
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let grid = ParamGrid::default();
        let prob = StripProblem { envelope: MixingEnvelope::m_dependent(1), ..problem(150.0) };
        assert_eq!(
            optimize_params_with(Exec::Sequential, &prob, &grid).unwrap(),
            optimize_params_with(Exec::Parallel, &prob, &grid).unwrap()
        );
    }
}
