use std::f64::consts::{E, LN_2};

use serde::Serialize;

use super::envelope::{MixingEnvelope, Provenance};
use crate::error::{Error, Result};
use crate::paircount::{self, PairCount};
use crate::tree::checked_pow;

/// Relative slack allowed when checking `beta` against its cap, so that a
/// cap computed by [`beta_cap`] is always admissible.
const BETA_CAP_SLACK: f64 = 1e-12;

/// Inputs of the tail bound for the sum over a strip: generations
/// `level .. level + depth` of a rate-`rate` tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BernsteinInput {
    pub rate: u64,
    pub level: u64,
    pub depth: u64,
    /// Big-block length, in strip subtrees.
    pub p2: u64,
    /// Small-block length, in strip subtrees.
    pub q2: u64,
    pub beta: f64,
    pub epsilon: f64,
    /// Almost-sure bound on `|Z_v|`.
    pub amplitude: f64,
    /// Bound on `Var(Z_v)`.
    pub sigma2: f64,
    pub envelope: MixingEnvelope,
}

impl BernsteinInput {
    /// Separation between distinct big blocks: `2⌈log Q2 / log A⌉`.
    pub fn block_separation(&self) -> u64 {
        block_separation(self.rate, self.q2)
    }

    pub fn beta_cap(&self) -> f64 {
        beta_cap(self.rate, self.depth, self.p2, self.amplitude)
    }

    /// Every violated constraint, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.rate < 2 {
            bad.push(format!("rate = {} < 2", self.rate));
        }
        if self.depth < 1 {
            bad.push("depth = 0 < 1".to_string());
        }
        if self.q2 < 2 {
            bad.push(format!("q2 = {} < 2", self.q2));
        }
        if self.q2 > self.p2 {
            bad.push(format!("q2 = {} > p2 = {}", self.q2, self.p2));
        }
        if self.rate >= 2 {
            if let Some(roots) = checked_pow(self.rate, self.level) {
                if self.p2 as u128 + self.q2 as u128 >= roots {
                    bad.push(format!("p2 + q2 = {} ≥ rate^level = {roots}", self.p2 + self.q2));
                }
            }
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            bad.push(format!("amplitude = {} is not positive", self.amplitude));
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            bad.push(format!("sigma2 = {} is not positive", self.sigma2));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            bad.push(format!("epsilon = {} is not positive", self.epsilon));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            bad.push(format!("beta = {} is not positive", self.beta));
        } else if self.rate >= 2 && self.depth >= 1 && self.p2 >= 1 && self.amplitude > 0.0 {
            let cap = self.beta_cap();
            if self.beta > cap * (1.0 + BETA_CAP_SLACK) {
                bad.push(format!("beta = {} exceeds cap {cap}", self.beta));
            }
        }
        bad
    }

    pub fn validate(&self) -> Result<()> {
        let bad = self.violations();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

/// Block and threshold choices behind a breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    pub level: u64,
    pub depth: u64,
    pub p2: u64,
    pub q2: u64,
    pub beta: f64,
    /// Separation at which the mixing factor reads the envelope.
    pub f: u64,
    /// Threshold applied to the strip sum.
    pub epsilon: f64,
    /// Wedge depth of the concentration split; `None` for a plain strip bound.
    pub p1: Option<u64>,
}

/// The evaluated pieces of a tail bound, in log space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundBreakdown {
    /// `ln 2 − β ε`.
    pub log_factor_markov: f64,
    /// Exponent of the block-coupling factor.
    pub log_factor_mixing: f64,
    /// Exponent of the block-variance factor.
    pub log_factor_variance: f64,
    /// `(A^P − 1)/(A − 1) σ² + 4C² Σ_k α(k) N(P, k)`.
    pub variance_proxy: f64,
    /// `⌈A^L / (P2 + Q2)⌉`.
    pub block_count: f64,
    pub log_total: f64,
    /// `min(0, log_total)`, the bound as a probability.
    pub log_total_clamped: f64,
    /// Deterministic wedge term of the concentration split (0 or 1).
    pub indicator_wedge: u8,
    pub envelope_provenance: Provenance,
    #[serde(flatten)]
    pub params: BoundParams,
}

impl BoundBreakdown {
    /// The bound as a probability, `min(1, exp(log_total))`.
    pub fn probability(&self) -> f64 {
        self.log_total_clamped.exp()
    }
}

/// `(A − 1) / (4e C P2 (A^P − 1))`.
pub fn beta_cap(rate: u64, depth: u64, p2: u64, amplitude: f64) -> f64 {
    let a = rate as f64;
    (a - 1.0) / (4.0 * E * amplitude * p2 as f64 * (a.powf(depth as f64) - 1.0))
}

/// Smallest `e` with `rate^e ≥ x`.
fn ceil_log(rate: u64, x: u64) -> u64 {
    let mut e = 0;
    let mut p: u128 = 1;
    while p < x as u128 {
        p *= rate as u128;
        e += 1;
    }
    e
}

pub(crate) fn block_separation(rate: u64, q2: u64) -> u64 {
    2 * ceil_log(rate, q2)
}

/// `Σ_{k=1}^{2(P−1)} α(k) N(P, k)`, each term formed in log space.
pub(crate) fn weighted_pair_sum(envelope: &MixingEnvelope, counts: &[PairCount]) -> f64 {
    counts
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let alpha = envelope.eval(i as u64 + 1);
            if alpha == 0.0 || n.is_zero() {
                0.0
            } else {
                (alpha.ln() + n.ln()).exp()
            }
        })
        .sum()
}

/// Everything in the bound that does not depend on the block choice or
/// the threshold, computed once.
#[derive(Debug, Clone)]
pub(crate) struct StripModel<'a> {
    pub rate: u64,
    pub level: u64,
    pub depth: u64,
    pub envelope: &'a MixingEnvelope,
    pub variance_proxy: f64,
    roots: f64,
}

impl<'a> StripModel<'a> {
    pub fn new(rate: u64, level: u64, depth: u64, amplitude: f64, sigma2: f64, envelope: &'a MixingEnvelope) -> Result<Self> {
        let counts = paircount::pair_counts(rate, depth)?;
        let a = rate as f64;
        let subtree = (a.powf(depth as f64) - 1.0) / (a - 1.0);
        let variance_proxy =
            subtree * sigma2 + 4.0 * amplitude * amplitude * weighted_pair_sum(envelope, &counts);
        Ok(StripModel { rate, level, depth, envelope, variance_proxy, roots: a.powf(level as f64) })
    }

    pub fn evaluate(&self, p2: u64, q2: u64, beta: f64, epsilon: f64) -> BoundBreakdown {
        let blocks = (p2 + q2) as f64;
        let f = block_separation(self.rate, q2);
        let log_factor_markov = LN_2 - beta * epsilon;
        let alpha_f = self.envelope.eval(f);
        // 0^x = 0 for x > 0, so an independent field has mixing factor 1.
        let log_factor_mixing = if alpha_f == 0.0 {
            0.0
        } else {
            let exponent = blocks / (2.0 * blocks + self.roots);
            10.0 * E.sqrt() * (exponent * alpha_f.ln()).exp() * self.roots / blocks
        };
        let log_factor_variance =
            4.0 * beta * beta * E * (p2 as f64).powi(2) * self.variance_proxy * (self.roots / blocks + 1.0);
        let log_total = log_factor_markov + log_factor_mixing + log_factor_variance;
        BoundBreakdown {
            log_factor_markov,
            log_factor_mixing,
            log_factor_variance,
            variance_proxy: self.variance_proxy,
            block_count: (self.roots / blocks).ceil(),
            log_total,
            log_total_clamped: log_total.min(0.0),
            indicator_wedge: 0,
            envelope_provenance: self.envelope.provenance(),
            params: BoundParams { level: self.level, depth: self.depth, p2, q2, beta, f, epsilon, p1: None },
        }
    }
}

/// Tail bound for `|Σ_{v ∈ strip} Z_v| > ε`.
pub fn bernstein_bound(input: &BernsteinInput) -> Result<BoundBreakdown> {
    input.validate()?;
    let model = StripModel::new(input.rate, input.level, input.depth, input.amplitude, input.sigma2, &input.envelope)?;
    Ok(model.evaluate(input.p2, input.q2, input.beta, input.epsilon))
}

/// `Σ_k α(k) N(P, k) / (P · A^P)`; bounded in `P` exactly when the
/// envelope decays fast enough for the concentration bound.
pub fn summability_ratio(envelope: &MixingEnvelope, rate: u64, depth: u64) -> Result<f64> {
    let counts = paircount::pair_counts(rate, depth)?;
    let scale = (depth as f64).ln() + depth as f64 * (rate as f64).ln();
    Ok((weighted_pair_sum(envelope, &counts).ln() - scale).exp())
}
