use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Most atoms a partition may have; the exact supremum scans every union.
pub const MAX_ATOMS: usize = 12;

const PROB_TOL: f64 = 1e-12;
const CONJUGACY_TOL: f64 = 1e-9;
const DAVYDOV_TOL: f64 = 1e-12;
const ALPHA_NOISE: f64 = 1e-15;

/// A finite probability space with two partitions and a random variable
/// measurable with respect to each.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    probs: Vec<f64>,
    g: Vec<Vec<usize>>,
    h: Vec<Vec<usize>>,
    xi: Vec<f64>,
    eta: Vec<f64>,
}

fn check_partition(name: &str, atoms: &[Vec<usize>], n: usize) -> Result<()> {
    if atoms.len() > MAX_ATOMS {
        return Err(Error::Capacity { what: format!("partition {name}"), needed: atoms.len() as u128, cap: MAX_ATOMS as u128 });
    }
    let mut seen = vec![false; n];
    for atom in atoms {
        if atom.is_empty() {
            return Err(Error::input(format!("partition {name} has an empty atom")));
        }
        for &i in atom {
            match seen.get_mut(i) {
                None => return Err(Error::input(format!("partition {name} names outcome {i} of {n}"))),
                Some(true) => return Err(Error::input(format!("partition {name} repeats outcome {i}"))),
                Some(s) => *s = true,
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::input(format!("partition {name} misses outcome {i}")));
    }
    Ok(())
}

impl FiniteSpace {
    pub fn new(probs: Vec<f64>, g: Vec<Vec<usize>>, h: Vec<Vec<usize>>, xi: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        let n = probs.len();
        if n == 0 {
            return Err(Error::input("space has no outcomes"));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::input(format!("probability {p} is not a non-negative number")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::input(format!("probabilities sum to {total}, not 1")));
        }
        check_partition("G", &g, n)?;
        check_partition("H", &h, n)?;
        if xi.len() != n || eta.len() != n {
            return Err(Error::input(format!("xi and eta need {n} values, got {} and {}", xi.len(), eta.len())));
        }
        Ok(FiniteSpace { probs, g, h, xi, eta })
    }

    /// A random space with `2..=max_outcomes` outcomes and at most
    /// `max_atoms` atoms per partition; `xi` and `eta` are drawn per atom
    /// so they are measurable by construction.
    pub fn random(rng: &mut CounterRng, max_outcomes: usize, max_atoms: usize) -> Self {
        let n = rng.range(2, max_outcomes.max(2) as u64) as usize;
        let weights: Vec<f64> = (0..n).map(|_| rng.next_f64() + 1e-3).collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let partition = |rng: &mut CounterRng| {
            let k = rng.range(1, max_atoms.clamp(1, MAX_ATOMS).min(n) as u64) as usize;
            let labels: Vec<usize> = (0..n).map(|_| rng.range(0, k as u64 - 1) as usize).collect();
            let atoms: Vec<Vec<usize>> =
                (0..k).map(|a| (0..n).filter(|&i| labels[i] == a).collect::<Vec<_>>()).filter(|a| !a.is_empty()).collect();
            let values: Vec<f64> = atoms.iter().map(|_| 4.0 * rng.next_f64() - 2.0).collect();
            let mut per_outcome = vec![0.0; n];
            for (atom, v) in atoms.iter().zip(&values) {
                for &i in atom {
                    per_outcome[i] = *v;
                }
            }
            (atoms, per_outcome)
        };
        let (g, xi) = partition(rng);
        let (h, eta) = partition(rng);
        FiniteSpace::new(probs, g, h, xi, eta).expect("generated space is valid")
    }

    pub fn outcomes(&self) -> usize {
        self.probs.len()
    }

    /// `P(a ∩ b)` for every pair of atoms.
    fn joint(&self) -> Vec<Vec<f64>> {
        let mut label = vec![0; self.probs.len()];
        for (b, atom) in self.h.iter().enumerate() {
            for &i in atom {
                label[i] = b;
            }
        }
        self.g
            .iter()
            .map(|atom| {
                let mut row = vec![0.0; self.h.len()];
                for &i in atom {
                    row[label[i]] += self.probs[i];
                }
                row
            })
            .collect()
    }

    /// `sup |P(A ∩ B) − P(A) P(B)|` over unions `A` of G-atoms and `B` of
    /// H-atoms. For fixed `A` the best `B` collects every atom whose
    /// contribution has one sign, so only `A` is enumerated.
    pub fn exact_alpha(&self) -> f64 {
        let joint = self.joint();
        let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
        let pb: Vec<f64> = (0..self.h.len()).map(|b| joint.iter().map(|r| r[b]).sum()).collect();
        let cov: Vec<Vec<f64>> =
            joint.iter().zip(&pa).map(|(r, a)| r.iter().zip(&pb).map(|(ab, b)| ab - a * b).collect()).collect();
        let mut best: f64 = 0.0;
        let mut c = vec![0.0; self.h.len()];
        for mask in 1u32..(1 << self.g.len()) {
            c.iter_mut().for_each(|x| *x = 0.0);
            for (a, row) in cov.iter().enumerate() {
                if mask >> a & 1 == 1 {
                    c.iter_mut().zip(row).for_each(|(x, v)| *x += v);
                }
            }
            let pos: f64 = c.iter().filter(|x| **x > 0.0).sum();
            let neg: f64 = -c.iter().filter(|x| **x < 0.0).sum::<f64>();
            best = best.max(pos).max(neg);
        }
        // below this the value is rounding noise of an exactly zero sum
        if best < ALPHA_NOISE {
            0.0
        } else {
            best.min(0.25)
        }
    }

    fn norm(&self, x: &[f64], p: f64) -> f64 {
        if p.is_infinite() {
            return x.iter().zip(&self.probs).filter(|(_, w)| **w > 0.0).map(|(v, _)| v.abs()).fold(0.0, f64::max);
        }
        x.iter().zip(&self.probs).map(|(v, w)| w * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }

    fn measurable(atoms: &[Vec<usize>], x: &[f64]) -> Option<usize> {
        atoms.iter().position(|a| a.iter().any(|&i| x[i] != x[a[0]]))
    }

    pub fn davydov_check(&self, p: f64, q: f64, r: f64) -> Result<DavydovCheck> {
        let mut bad = Vec::new();
        for (name, v) in [("p", p), ("q", q), ("r", r)] {
            if v.is_nan() || v < 1.0 {
                bad.push(format!("{name} = {v} < 1"));
            }
        }
        let sum = 1.0 / p + 1.0 / q + 1.0 / r;
        if bad.is_empty() && (sum - 1.0).abs() > CONJUGACY_TOL {
            bad.push(format!("1/p + 1/q + 1/r = {sum}, not 1"));
        }
        if let Some(a) = Self::measurable(&self.g, &self.xi) {
            bad.push(format!("xi is not constant on G-atom {a}"));
        }
        if let Some(a) = Self::measurable(&self.h, &self.eta) {
            bad.push(format!("eta is not constant on H-atom {a}"));
        }
        if !bad.is_empty() {
            return Err(Error::Input(bad.join("; ")));
        }
        let e = |x: &[f64]| x.iter().zip(&self.probs).map(|(v, w)| v * w).sum::<f64>();
        let prod: Vec<f64> = self.xi.iter().zip(&self.eta).map(|(a, b)| a * b).collect();
        let lhs = (e(&prod) - e(&self.xi) * e(&self.eta)).abs();
        let alpha = self.exact_alpha();
        let rhs = 10.0 * alpha.powf(1.0 / r) * self.norm(&self.xi, p) * self.norm(&self.eta, q);
        Ok(DavydovCheck { lhs, rhs, alpha, holds: lhs <= rhs + DAVYDOV_TOL })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DavydovCheck {
    /// `|Cov(ξ, η)|`.
    pub lhs: f64,
    /// `10 α^(1/r) ‖ξ‖_p ‖η‖_q`.
    pub rhs: f64,
    pub alpha: f64,
    pub holds: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unions of atoms as outcome masks.
    fn unions(atoms: &[Vec<usize>]) -> Vec<Vec<usize>> {
        (0u32..1 << atoms.len())
            .map(|m| (0..atoms.len()).filter(|a| m >> a & 1 == 1).flat_map(|a| atoms[a].clone()).collect())
            .collect()
    }

    fn brute_alpha(s: &FiniteSpace) -> f64 {
        let pr = |set: &[usize]| set.iter().map(|&i| s.probs[i]).sum::<f64>();
        let mut best: f64 = 0.0;
        for a in unions(&s.g) {
            for b in unions(&s.h) {
                let both: Vec<usize> = a.iter().copied().filter(|i| b.contains(i)).collect();
                best = best.max((pr(&both) - pr(&a) * pr(&b)).abs());
            }
        }
        best
    }

    fn product_space() -> FiniteSpace {
        // outcome 2i + j has probability p_i q_j
        let (p, q) = ([0.3, 0.7], [0.6, 0.4]);
        let probs = vec![p[0] * q[0], p[0] * q[1], p[1] * q[0], p[1] * q[1]];
        FiniteSpace::new(probs, vec![vec![0, 1], vec![2, 3]], vec![vec![0, 2], vec![1, 3]], vec![1.0, 1.0, -2.0, -2.0], vec![0.5, 3.0, 0.5, 3.0])
            .unwrap()
    }

    #[test]
    fn independent_partitions() {
        let s = product_space();
        assert_eq!(s.exact_alpha(), 0.0);
        let d = s.davydov_check(4.0, 4.0, 2.0).unwrap();
        assert!(d.lhs < 1e-15 && d.rhs == 0.0 && d.holds);
    }

    #[test]
    fn identical_halves_give_quarter() {
        let s = FiniteSpace::new(vec![0.5, 0.5], vec![vec![0], vec![1]], vec![vec![0], vec![1]], vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert_eq!(s.exact_alpha(), 0.25);
        assert_eq!(brute_alpha(&s), 0.25);
    }

    #[test]
    fn matches_brute_force_on_random_spaces() {
        let mut rng = CounterRng::new(11, 0);
        for _ in 0..200 {
            let s = FiniteSpace::random(&mut rng, 24, 6);
            assert!((s.exact_alpha() - brute_alpha(&s)).abs() < 2e-15);
        }
    }

    #[test]
    fn refining_never_decreases() {
        let mut rng = CounterRng::new(12, 0);
        for _ in 0..200 {
            let s = FiniteSpace::random(&mut rng, 32, 6);
            // split the largest H-atom in two
            let mut h = s.h.clone();
            let big = (0..h.len()).max_by_key(|&i| h[i].len()).unwrap();
            if h[big].len() < 2 || h.len() == MAX_ATOMS {
                continue;
            }
            let half = h[big].len() / 2;
            let tail = h[big].split_off(half);
            h.push(tail);
            let fine = FiniteSpace { h, ..s.clone() };
            assert!(fine.exact_alpha() >= s.exact_alpha() - 1e-15);
        }
    }

    #[test]
    fn constant_xi_holds() {
        let mut s = FiniteSpace::random(&mut CounterRng::new(3, 3), 16, 4);
        s.xi.iter_mut().for_each(|x| *x = 2.0);
        let d = s.davydov_check(3.0, 3.0, 3.0).unwrap();
        assert!(d.lhs < 1e-15 && d.holds);
    }

    #[test]
    fn bad_inputs_named() {
        let s = product_space();
        let err = s.davydov_check(2.0, 2.0, 2.0).unwrap_err().to_string();
        assert!(err.contains("1/p + 1/q + 1/r"), "{err}");
        let mut t = s.clone();
        t.xi[0] = 5.0;
        let err = t.davydov_check(4.0, 4.0, 2.0).unwrap_err().to_string();
        assert!(err.contains("xi is not constant"), "{err}");
        assert!(s.davydov_check(f64::INFINITY, 1.0, f64::INFINITY).is_ok());
        let atoms: Vec<Vec<usize>> = (0..13).map(|i| vec![i]).collect();
        let probs = vec![1.0 / 13.0; 13];
        assert!(matches!(
            FiniteSpace::new(probs, atoms.clone(), atoms, vec![0.0; 13], vec![0.0; 13]),
            Err(Error::Capacity { .. })
        ));
        assert!(FiniteSpace::new(vec![0.5, 0.6], vec![vec![0, 1]], vec![vec![0, 1]], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(FiniteSpace::new(vec![0.5, 0.5], vec![vec![0]], vec![vec![0, 1]], vec![0.0; 2], vec![0.0; 2]).is_err());
    }
}
