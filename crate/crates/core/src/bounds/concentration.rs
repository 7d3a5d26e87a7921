use serde::Serialize;

use super::bernstein::{beta_cap, BernsteinInput, BoundBreakdown, StripModel};
use super::envelope::MixingEnvelope;
use crate::error::{Error, Result};
use crate::tree::{checked_pow, GraphSpec};

pub const DEFAULT_ETA: f64 = 0.5;
pub const DEFAULT_SCHEDULE: f64 = 1.0;

/// Inputs of the tail bound for the normalized sum over the first `levels`
/// generations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationInput {
    pub rate: u64,
    pub levels: u64,
    pub epsilon: f64,
    pub amplitude: f64,
    pub sigma2: f64,
    pub envelope: MixingEnvelope,
    /// Wedge depth exponent: `P1 = ⌊levels^eta⌋`.
    pub eta: f64,
    /// Block-length constant `D`.
    pub schedule: f64,
}

impl ConcentrationInput {
    pub fn new(rate: u64, levels: u64, epsilon: f64, amplitude: f64, sigma2: f64, envelope: MixingEnvelope) -> Self {
        ConcentrationInput { rate, levels, epsilon, amplitude, sigma2, envelope, eta: DEFAULT_ETA, schedule: DEFAULT_SCHEDULE }
    }
}

/// Derived block choices of the concentration split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub p1: u64,
    /// Level of the strip, `levels − p1`.
    pub strip_level: u64,
    pub p2: u64,
    pub q2: u64,
    pub beta: f64,
    /// Threshold for the strip sum, `(ε/2) |V_L|`.
    pub strip_epsilon: f64,
    pub indicator_wedge: u8,
}

fn geometric_f64(a: f64, n: u64) -> f64 {
    (a.powf(n as f64) - 1.0) / (a - 1.0)
}

/// The strip input the concentration bound evaluates, plus the wedge
/// indicator. Fails naming the derived quantity that broke admissibility.
pub fn concentration_schedule(input: &ConcentrationInput) -> Result<(Schedule, BernsteinInput)> {
    let mut bad = Vec::new();
    if input.rate < 2 {
        bad.push(format!("rate = {} < 2", input.rate));
    }
    if !(input.eta > 0.0 && input.eta < 1.0) {
        bad.push(format!("eta = {} outside (0, 1)", input.eta));
    }
    if !(input.schedule.is_finite() && input.schedule > 0.0) {
        bad.push(format!("schedule = {} is not positive", input.schedule));
    }
    if input.levels < 2 {
        bad.push(format!("levels = {} < 2", input.levels));
    }
    if !bad.is_empty() {
        return Err(Error::Validation(bad));
    }
    let (a, l) = (input.rate as f64, input.levels);
    let p1 = (l as f64).powf(input.eta).floor() as u64;
    if p1 < 1 || p1 >= l {
        return Err(Error::Validation(vec![format!("derived p1 = {p1} leaves no strip below level {l}")]));
    }
    let strip_level = l - p1;
    let raw = input.schedule * a.powf(strip_level as f64) / strip_level as f64 * (l as f64).ln();
    if !raw.is_finite() || raw >= u64::MAX as f64 {
        return Err(Error::Validation(vec![format!("derived p2 = {raw} overflows")]));
    }
    let p2 = raw.floor() as u64;
    let q2 = p2;
    if p2 < 2 {
        return Err(Error::Validation(vec![format!("derived p2 = {p2} < 2")]));
    }
    if let Some(roots) = checked_pow(input.rate, strip_level) {
        if 2 * p2 as u128 >= roots {
            return Err(Error::Validation(vec![format!(
                "derived p2 + q2 = {} ≥ rate^(levels − p1) = {roots}",
                2 * p2
            )]));
        }
    }
    let beta = beta_cap(input.rate, p1, p2, input.amplitude);
    let total = geometric_f64(a, l);
    let strip_epsilon = input.epsilon / 2.0 * total;
    let wedge = 2.0 * input.amplitude * geometric_f64(a, strip_level);
    let indicator_wedge = u8::from(wedge > input.epsilon / 2.0 * total);
    let strip = BernsteinInput {
        rate: input.rate,
        level: strip_level,
        depth: p1,
        p2,
        q2,
        beta,
        epsilon: strip_epsilon,
        amplitude: input.amplitude,
        sigma2: input.sigma2,
        envelope: input.envelope.clone(),
    };
    strip.validate()?;
    Ok((Schedule { p1, strip_level, p2, q2, beta, strip_epsilon, indicator_wedge }, strip))
}

/// Tail bound for `|Σ_{v ∈ V_L} Z_v| / |V_L| > ε`: the wedge indicator
/// plus the strip bound at threshold `(ε/2)|V_L|`.
pub fn concentration_bound(input: &ConcentrationInput) -> Result<BoundBreakdown> {
    let (schedule, strip) = concentration_schedule(input)?;
    let model = StripModel::new(strip.rate, strip.level, strip.depth, strip.amplitude, strip.sigma2, &strip.envelope)?;
    let mut out = model.evaluate(strip.p2, strip.q2, strip.beta, strip.epsilon);
    if schedule.indicator_wedge == 1 {
        // ln(1 + e^b)
        let b = out.log_total;
        out.log_total = b.max(0.0) + (-b.abs()).exp().ln_1p();
    }
    out.log_total_clamped = out.log_total.min(0.0);
    out.indicator_wedge = schedule.indicator_wedge;
    out.params.p1 = Some(schedule.p1);
    Ok(out)
}

/// Concentration bound for a field indexed by a tree with extra edges,
/// given an envelope in graph distance. Tree separation `n` guarantees
/// graph separation `n / S`, so the envelope is read at `⌊n / S⌋`.
pub fn concentration_bound_graph(graph: &GraphSpec, input: &ConcentrationInput) -> Result<BoundBreakdown> {
    if graph.tree().rate() != input.rate {
        return Err(Error::input(format!(
            "graph rate {} differs from input rate {}",
            graph.tree().rate(),
            input.rate
        )));
    }
    let span = graph.span();
    if span <= 1 {
        return concentration_bound(input);
    }
    let mut tree_input = input.clone();
    tree_input.envelope = input.envelope.rescaled(span as f64)?;
    concentration_bound(&tree_input)
}
