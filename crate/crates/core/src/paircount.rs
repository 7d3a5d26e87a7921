//! Ordered node pairs at exact tree distance inside a `P`-generation subtree.
//!
//! `N(P, L)` is computed three ways: exhaustive enumeration (small trees
//! only), the double sum over the apex generation `h` and the apex-to-first
//! node distance `i`, and the five-term closed form. All arithmetic is
//! exact; counts outgrow 64 bits quickly.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::tree::{geometric_count, Region, Tree};

/// Largest subtree the enumeration oracle will materialize.
pub const ENUM_NODE_LIMIT: u128 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairCount(BigUint);

impl PairCount {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_inner(self) -> BigUint {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Natural log, `-inf` for zero. Exact up to f64 rounding for any size.
    pub fn ln(&self) -> f64 {
        ln_big(&self.0)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }
}

impl From<u64> for PairCount {
    fn from(v: u64) -> Self {
        PairCount(BigUint::from(v))
    }
}

impl fmt::Display for PairCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub(crate) fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit mantissa");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn check_shape(rate: u64, gens: u64) -> Result<()> {
    if rate < 2 {
        return Err(Error::input(format!("rate must be ≥ 2, got {rate}")));
    }
    if gens < 1 {
        return Err(Error::input("subtree must have at least one generation"));
    }
    Ok(())
}

/// Largest distance realized inside a `gens`-generation subtree.
pub fn diameter(gens: u64) -> u64 {
    2 * gens.saturating_sub(1)
}

/// Pair-distance histogram by exhaustive enumeration: entry `L` counts
/// ordered pairs `(v, w)`, `v ≠ w`, at tree distance `L`.
pub fn pair_histogram_enum(exec: Exec, rate: u64, gens: u64) -> Result<Vec<u64>> {
    check_shape(rate, gens)?;
    let size = geometric_count(rate, gens).unwrap_or(u128::MAX);
    if size > ENUM_NODE_LIMIT {
        return Err(Error::Capacity {
            what: format!("pair enumeration for rate {rate}, {gens} generations"),
            needed: size,
            cap: ENUM_NODE_LIMIT,
        });
    }
    let tree = Tree::new(rate)?;
    let nodes: Vec<_> = tree.region_nodes(&Region::Generations { count: gens })?.collect();
    let width = diameter(gens) as usize + 1;
    let rows = par::map_slice(exec, &nodes, |&v| {
        let mut hist = vec![0u64; width];
        for &w in &nodes {
            if v != w {
                hist[tree.distance_unchecked(v, w) as usize] += 1;
            }
        }
        hist
    });
    Ok(rows.into_iter().fold(vec![0u64; width], |mut acc, row| {
        acc.iter_mut().zip(row).for_each(|(a, r)| *a += r);
        acc
    }))
}

/// `N(P, L)` by brute force over all ordered pairs. Oracle scale only.
pub fn count_pairs_enum(rate: u64, gens: u64, dist: u64) -> Result<PairCount> {
    count_pairs_enum_with(Exec::default(), rate, gens, dist)
}

pub fn count_pairs_enum_with(exec: Exec, rate: u64, gens: u64, dist: u64) -> Result<PairCount> {
    let hist = pair_histogram_enum(exec, rate, gens)?;
    Ok(PairCount::from(hist.get(dist as usize).copied().unwrap_or(0)))
}

fn pow(rate: u64, exp: u64) -> BigUint {
    BigUint::from(rate).pow(u32::try_from(exp).expect("exponent fits u32"))
}

/// `N(P, L)` from the double sum over apex generation and split point.
pub fn count_pairs_sum(rate: u64, gens: u64, dist: u64) -> Result<PairCount> {
    check_shape(rate, gens)?;
    let (p, l) = (gens as i64, dist as i64);
    if l < 1 || l > 2 * (p - 1) {
        return Ok(PairCount(BigUint::zero()));
    }
    let a = BigUint::from(rate);
    let mut total = BigUint::zero();
    // h ≤ ⌊P − 1 − L/2⌋, in integers
    let h_max = (2 * (p - 1) - l).div_euclid(2);
    for h in 0..=h_max {
        let room = p - 1 - h;
        let lo = 1.max(l - room);
        let hi = l.min(room);
        let mut inner = BigUint::zero();
        for i in lo..=hi {
            let mut term = BigUint::zero();
            if l == i {
                term += 2u32;
            } else {
                term += (&a - 1u32) * pow(rate, (l - i - 1) as u64);
            }
            inner += pow(rate, i as u64) * term;
        }
        total += pow(rate, h as u64) * inner;
    }
    Ok(PairCount(total))
}

/// `N(P, L)` from the closed form.
pub fn count_pairs_closed(rate: u64, gens: u64, dist: u64) -> Result<PairCount> {
    check_shape(rate, gens)?;
    let (p, l) = (gens as i64, dist as i64);
    if l < 1 || l > 2 * (p - 1) {
        return Ok(PairCount(BigUint::zero()));
    }
    let big = |x: i64| BigInt::from(x);
    let pw = |e: i64| BigInt::from(pow(rate, e as u64));
    let am1 = big(rate as i64 - 1);
    let half_floor = l / 2;
    let half_ceil = (l + 1) / 2;
    let exact_div = |num: BigInt| -> BigInt {
        let (q, r) = (&num / &am1, &num % &am1);
        debug_assert!(r.is_zero(), "closed-form term not divisible by A − 1");
        q
    };

    let mut n = BigInt::zero();
    // ancestor/descendant pairs, both orders
    if l < p {
        n += big(2) * exact_div(pw(p) - pw(l));
    }
    if l <= p {
        n += big(l - 1) * (pw(p) - pw(l - 1));
    }
    if l >= 4 {
        let top = pw(p - 1 + half_floor);
        n += big(2 * (p - 1) - l + 1) * (&top - pw((l - 1).max(p)));
        let num = ((&am1 * big(p - 1 - half_ceil)) - BigInt::one()) * &top + pw(l);
        n -= big(2) * exact_div(num);
    }
    if 4 <= l && l < p {
        let num = ((&am1 * big(p - l)) - BigInt::one()) * pw(p) + pw(l);
        n += big(2) * exact_div(num);
    }
    let n = n.to_biguint().ok_or_else(|| Error::input(format!("negative closed-form count at ({rate},{gens},{dist})")))?;
    Ok(PairCount(n))
}

/// `N(P, k)` for `k = 1 ..= 2(P − 1)` from the closed form.
pub fn pair_counts(rate: u64, gens: u64) -> Result<Vec<PairCount>> {
    (1..=diameter(gens)).map(|k| count_pairs_closed(rate, gens, k)).collect()
}

/// `N(P, L) / (P · A^(P + L/2))`, evaluated in log space.
pub fn growth_ratio(rate: u64, gens: u64, dist: u64) -> Result<f64> {
    let n = count_pairs_closed(rate, gens, dist)?;
    if n.is_zero() {
        return Ok(0.0);
    }
    Ok(log_growth_ratio(&n, rate, gens, dist).exp())
}

/// `ln N − ln P − (P + L/2) ln A`.
pub fn log_growth_ratio(n: &PairCount, rate: u64, gens: u64, dist: u64) -> f64 {
    n.ln() - (gens as f64).ln() - (gens as f64 + dist as f64 / 2.0) * (rate as f64).ln()
}
