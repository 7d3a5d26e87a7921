use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::bounds::{
    bernstein_bound, concentration_bound, optimize_params_with, BoundParams, ConcentrationInput, ParamGrid,
    StripProblem, DEFAULT_ETA, DEFAULT_SCHEDULE,
};
use crate::error::{Error, Result};
use crate::fields::{field_certificate, FieldSpec, Sampler};
use crate::par::{self, Exec};
use crate::tree::{Region, Tree};

pub const MIN_REPLICATES: u64 = 100;

/// One-sided confidence level of the reported upper limit.
pub const CONFIDENCE: f64 = 0.99;

/// Exact (Clopper–Pearson) one-sided upper confidence limit for a
/// binomial proportion: the `u` with `P(Bin(n, u) ≤ x) = 1 − level`.
pub fn binomial_upper_limit(x: u64, n: u64, level: f64) -> f64 {
    assert!(x <= n && n > 0, "need 0 ≤ x ≤ n, n > 0");
    let alpha = 1.0 - level;
    if x == n {
        return 1.0;
    }
    if x == 0 {
        return 1.0 - alpha.powf(1.0 / n as f64);
    }
    // P(Bin(n, u) ≤ x) = I_{1−u}(n − x, x + 1), decreasing in u
    let cdf = |u: f64| beta_reg((n - x) as f64, (x + 1) as f64, 1.0 - u);
    let (mut lo, mut hi) = (x as f64 / n as f64, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailOptions {
    pub eta: f64,
    pub schedule: f64,
    /// Grid searched for strip regions.
    pub grid: ParamGrid,
    pub exec: Exec,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions { eta: DEFAULT_ETA, schedule: DEFAULT_SCHEDULE, grid: ParamGrid::default(), exec: Exec::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub epsilon: f64,
    pub n_replicates: u64,
    pub n_exceed: u64,
    pub p_hat: f64,
    pub ci_upper_99: f64,
    /// Natural log of the bound; 0 when no admissible parameters exist.
    pub log_bound: f64,
    pub bound_params: Option<BoundParams>,
    /// `ci_upper_99 > bound` with `bound < 1`; absent when the envelope is
    /// not certified.
    pub violated: Option<bool>,
    pub certified: bool,
}

/// Monte Carlo exceedance of `|Σ Z_v|` over a strip, or of `|Σ Z_v| / |V_L|`
/// over a generation ball, paired with the matching bound.
pub fn mc_tail(
    field: &FieldSpec,
    region: &Region,
    tree: &Tree,
    eps_grid: &[f64],
    n_replicates: u64,
    options: &TailOptions,
) -> Result<Vec<TailEstimate>> {
    if n_replicates < MIN_REPLICATES {
        return Err(Error::input(format!("replicates = {n_replicates} < {MIN_REPLICATES}")));
    }
    if let Some(e) = eps_grid.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::input(format!("epsilon = {e} is not positive")));
    }
    let normalize = match region {
        Region::Strip { .. } => 1.0,
        Region::Generations { .. } => tree.region_size(region).unwrap_or(u128::MAX) as f64,
        Region::Subtree { .. } => {
            return Err(Error::input(format!("{region}: tail bounds cover strips and generation balls only")))
        }
    };
    let cert = field_certificate(field);
    let rows = tree.region_rows(region)?;
    let sampler = Sampler::new(field, tree, &rows)?;
    let c = field.amplitude;
    let stats = par::map_range(options.exec, 0..n_replicates, |r| {
        let values = sampler.values(Exec::Sequential, r);
        let out_of_range = values.iter().position(|z| z.is_nan() || z.abs() > c);
        (values.iter().sum::<f64>().abs() / normalize, out_of_range.map(|i| (i, values[i])))
    });
    if let Some((r, (i, z))) = stats.iter().enumerate().find_map(|(r, s)| s.1.map(|b| (r, b))) {
        return Err(Error::Validation(vec![format!("replicate {r}, node #{i}: |Z| = {} exceeds amplitude {c}", z.abs())]));
    }
    let certified = cert.provenance().is_certified();
    eps_grid
        .iter()
        .map(|&epsilon| {
            let n_exceed = stats.iter().filter(|(s, _)| *s > epsilon).count() as u64;
            let p_hat = n_exceed as f64 / n_replicates as f64;
            let ci_upper_99 = binomial_upper_limit(n_exceed, n_replicates, CONFIDENCE).max(p_hat);
            let bound = match *region {
                Region::Strip { level, gens } => {
                    let problem = StripProblem {
                        rate: tree.rate(),
                        level,
                        depth: gens,
                        amplitude: cert.amplitude,
                        sigma2: cert.sigma2,
                        envelope: cert.envelope.clone(),
                        epsilon,
                    };
                    optimize_params_with(options.exec, &problem, &options.grid).and_then(|i| bernstein_bound(&i))
                }
                Region::Generations { count } => concentration_bound(&ConcentrationInput {
                    rate: tree.rate(),
                    levels: count,
                    epsilon,
                    amplitude: cert.amplitude,
                    sigma2: cert.sigma2,
                    envelope: cert.envelope.clone(),
                    eta: options.eta,
                    schedule: options.schedule,
                }),
                Region::Subtree { .. } => unreachable!("rejected above"),
            };
            let (log_bound, bound_params) = match bound {
                Ok(b) => (b.log_total, Some(b.params)),
                // no admissible parameters: only the trivial bound 1 remains
                Err(Error::Infeasible(_) | Error::Validation(_)) => (0.0, None),
                Err(e) => return Err(e),
            };
            let violated = certified.then(|| log_bound < 0.0 && ci_upper_99 > log_bound.exp());
            Ok(TailEstimate { epsilon, n_replicates, n_exceed, p_hat, ci_upper_99, log_bound, bound_params, violated, certified })
        })
        .collect()
}
