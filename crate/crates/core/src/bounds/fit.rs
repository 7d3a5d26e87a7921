use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares fit of `log_bound ≈ ln c1 − c2 · ε · L / ln L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticFit {
    pub c1: f64,
    pub c2: f64,
    /// Coefficient of determination.
    pub r_squared: f64,
}

pub fn asymptotic_fit(series: &[(u64, f64)], epsilon: f64) -> Result<AsymptoticFit> {
    if series.len() < 4 {
        return Err(Error::input(format!("asymptotic fit needs at least 4 points, got {}", series.len())));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::input(format!("epsilon = {epsilon} is not positive")));
    }
    if let Some((l, y)) = series.iter().find(|(l, y)| *l < 2 || !y.is_finite()) {
        return Err(Error::input(format!("unusable point (L = {l}, log bound = {y})")));
    }
    let xs: Vec<f64> = series.iter().map(|&(l, _)| -epsilon * l as f64 / (l as f64).ln()).collect();
    let ys: Vec<f64> = series.iter().map(|&(_, y)| y).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) {
        return Err(Error::input("degenerate design: every point has the same L"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { if ss_res == 0.0 { 1.0 } else { 0.0 } } else { 1.0 - ss_res / ss_tot };
    Ok(AsymptoticFit { c1: intercept.exp(), c2: slope, r_squared })
}
