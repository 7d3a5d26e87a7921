use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where an envelope's values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Proven for the field it certifies.
    Exact,
    /// Supplied by the caller, or derived from an exact envelope by an
    /// inequality.
    Assumed,
    /// Calibrated or guessed; bounds built on it are not certificates.
    Heuristic,
}

impl Provenance {
    pub fn is_certified(self) -> bool {
        self != Provenance::Heuristic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeKind {
    Zero,
    /// 1/4 up to separation `2m`, 0 beyond.
    MDependent { m: u64 },
    /// `exp(−n g(n))` with `g(n) = scale · n^power`.
    SuperExponential { scale: f64, power: f64 },
    /// `values[i]` bounds the coefficient at separation `i + 1`; separations
    /// past the end reuse the last entry.
    Table { values: Vec<f64> },
    /// `n ↦ inner(⌊n / constant⌋)` for `n ≥ constant`, 1 below.
    Rescaled { inner: Box<MixingEnvelope>, constant: f64 },
}

/// Non-increasing upper bound `n ↦ α(n)` on a field's mixing coefficients.
///
/// Separation 0 always evaluates to 1: the coefficient of overlapping sets
/// carries no information and no bound consumes it.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingEnvelope {
    kind: EnvelopeKind,
    provenance: Provenance,
}

impl MixingEnvelope {
    pub fn zero() -> Self {
        MixingEnvelope { kind: EnvelopeKind::Zero, provenance: Provenance::Assumed }
    }

    pub fn m_dependent(m: u64) -> Self {
        MixingEnvelope { kind: EnvelopeKind::MDependent { m }, provenance: Provenance::Assumed }
    }

    pub fn super_exponential(scale: f64, power: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) || !(power.is_finite() && power >= 0.0) {
            return Err(Error::input(format!(
                "super-exponential envelope needs scale > 0 and power ≥ 0, got {scale}, {power}"
            )));
        }
        Ok(MixingEnvelope { kind: EnvelopeKind::SuperExponential { scale, power }, provenance: Provenance::Assumed })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("table envelope needs at least one value"));
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::input(format!("table envelope value {bad} outside [0, 1]")));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::input(format!("table envelope increases at separation {}", i + 2)));
        }
        Ok(MixingEnvelope { kind: EnvelopeKind::Table { values }, provenance: Provenance::Assumed })
    }

    /// `n ↦ self(⌊n / constant⌋)` for `n ≥ constant` and the vacuous 1
    /// below. Used to move an envelope across a Lipschitz map with the
    /// given constant. Exact inputs come back as assumed.
    pub fn rescaled(&self, constant: f64) -> Result<Self> {
        if !(constant.is_finite() && constant >= 1.0) {
            return Err(Error::input(format!("rescaling constant must be finite and ≥ 1, got {constant}")));
        }
        let provenance = match self.provenance {
            Provenance::Exact => Provenance::Assumed,
            p => p,
        };
        Ok(MixingEnvelope {
            kind: EnvelopeKind::Rescaled { inner: Box::new(self.clone()), constant },
            provenance,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn kind(&self) -> &EnvelopeKind {
        &self.kind
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, EnvelopeKind::Zero)
    }

    pub fn eval(&self, n: u64) -> f64 {
        if n == 0 {
            return 1.0;
        }
        match &self.kind {
            EnvelopeKind::Zero => 0.0,
            EnvelopeKind::MDependent { m } => {
                if n <= m.saturating_mul(2) {
                    0.25
                } else {
                    0.0
                }
            }
            EnvelopeKind::SuperExponential { scale, power } => {
                let n = n as f64;
                (-n * scale * n.powf(*power)).exp()
            }
            EnvelopeKind::Table { values } => values[(n as usize).min(values.len()) - 1],
            EnvelopeKind::Rescaled { inner, constant } => {
                if (n as f64) < *constant {
                    1.0
                } else {
                    inner.eval((n as f64 / constant).floor() as u64)
                }
            }
        }
    }
}

impl fmt::Display for MixingEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            EnvelopeKind::Zero => write!(f, "zero"),
            EnvelopeKind::MDependent { m } => write!(f, "m_dependent:{m}"),
            EnvelopeKind::SuperExponential { scale, power } => write!(f, "super_exponential:{scale}:{power}"),
            EnvelopeKind::Table { values } => {
                let vals: Vec<String> = values.iter().map(f64::to_string).collect();
                write!(f, "table:{}", vals.join(","))
            }
            EnvelopeKind::Rescaled { inner, constant } => write!(f, "rescaled({inner},{constant})"),
        }
    }
}

impl Serialize for MixingEnvelope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Parses `zero`, `m_dependent:M`, `super_exponential:SCALE[:POWER]` and
/// `table:V1,V2,…`. Parsed envelopes are [`Provenance::Assumed`].
impl FromStr for MixingEnvelope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| Error::input(format!("envelope {s:?}: {e}")));
        match head {
            "zero" if rest.is_empty() => Ok(MixingEnvelope::zero()),
            "m_dependent" => {
                let m = rest.trim().parse().map_err(|e| Error::input(format!("envelope {s:?}: {e}")))?;
                Ok(MixingEnvelope::m_dependent(m))
            }
            "super_exponential" => {
                let (scale, power) = rest.split_once(':').unwrap_or((rest, "1"));
                MixingEnvelope::super_exponential(num(scale)?, num(power)?)
            }
            "table" => MixingEnvelope::table(rest.split(',').map(num).collect::<Result<_>>()?),
            _ => Err(Error::input(format!("unknown envelope {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn non_increasing(env: &MixingEnvelope, upto: u64) -> bool {
        (1..upto).all(|n| env.eval(n + 1) <= env.eval(n))
    }

    #[test]
    fn kinds_evaluate_as_documented() {
        let z = MixingEnvelope::zero();
        assert!((1..50).all(|n| z.eval(n) == 0.0));
        let m = MixingEnvelope::m_dependent(1);
        assert_eq!(m.eval(2), 0.25);
        assert_eq!(m.eval(3), 0.0);
        let s = MixingEnvelope::super_exponential(1.0, 1.0).unwrap();
        assert!((s.eval(3) - (-9f64).exp()).abs() < 1e-18);
        let t = MixingEnvelope::table(vec![0.1, 0.01]).unwrap();
        assert_eq!((t.eval(1), t.eval(2), t.eval(7)), (0.1, 0.01, 0.01));
        for env in [z, m, s, t] {
            assert!(non_increasing(&env, 100));
            assert_eq!(env.eval(0), 1.0);
        }
    }

    #[test]
    fn invalid_envelopes_rejected() {
        assert!(MixingEnvelope::table(vec![0.1, 0.2]).is_err());
        assert!(MixingEnvelope::table(vec![1.5]).is_err());
        assert!(MixingEnvelope::table(vec![]).is_err());
        assert!(MixingEnvelope::super_exponential(0.0, 1.0).is_err());
        assert!(MixingEnvelope::super_exponential(1.0, -1.0).is_err());
        assert!(MixingEnvelope::zero().rescaled(0.5).is_err());
    }

    #[test]
    fn rescaling() {
        let t = MixingEnvelope::table(vec![0.1, 0.01]).unwrap().with_provenance(Provenance::Exact);
        let r = t.rescaled(2.0).unwrap();
        assert_eq!(r.eval(1), 1.0);
        assert_eq!(r.eval(2), 0.1);
        assert_eq!(r.eval(4), 0.01);
        assert_eq!(r.provenance(), Provenance::Assumed);
        assert!(non_increasing(&r, 50));
        let same = t.rescaled(1.0).unwrap();
        assert!((1..30).all(|n| same.eval(n) == t.eval(n)));
    }

    #[test]
    fn parse_round_trip() {
        for text in ["zero", "m_dependent:2", "super_exponential:0.5:1", "table:0.2,0.1,0"] {
            let env: MixingEnvelope = text.parse().unwrap();
            assert_eq!(env.to_string(), text);
            assert_eq!(env.provenance(), Provenance::Assumed);
        }
        assert!("bogus".parse::<MixingEnvelope>().is_err());
        assert!("table:0.1,x".parse::<MixingEnvelope>().is_err());
    }
}
