//! Positive rationals for ε and the exact geometric boxes built on Δ.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A positive rational `num / den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::input("epsilon", "must be a positive rational"));
        }
        let g = num.gcd(&den);
        Ok(Ratio { num: num / g, den: den / g })
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `value <= self * bound`, exactly.
    pub fn scales_above(&self, value: u64, bound: u64) -> bool {
        value as u128 * self.den as u128 <= bound as u128 * self.num as u128
    }

    /// `1 + self`.
    pub fn one_plus(&self) -> Ratio {
        Ratio::new(self.num + self.den, self.den).expect("positive")
    }
}

impl FromStr for Ratio {
    type Err = Error;

    /// Accepts `a/b`, integers and plain decimals such as `0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::input("epsilon", format!("cannot parse {s:?} as a positive rational"));
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            return Ratio::new(a, b);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 18 {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac_val: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|x| x.checked_add(frac_val)).ok_or_else(bad)?;
        Ratio::new(num, den)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Geometric boxes `{0}` and `[Δ^l, Δ^{l+1})` for an exact `Δ = p / q > 1`.
///
/// Lookups start from a floating-point guess and are then settled by integer
/// comparisons `p^l <= v * q^l`, so the returned index never depends on
/// rounding.
#[derive(Debug, Clone)]
pub struct GeometricBoxes {
    p: BigUint,
    q: BigUint,
    ln_delta: f64,
    powers: HashMap<u32, (BigUint, BigUint)>,
    memo: HashMap<u64, i64>,
}

impl GeometricBoxes {
    pub fn new(p: u128, q: u128) -> Self {
        assert!(p > q && q > 0, "base must exceed one");
        let ln_delta = ((p - q) as f64 / q as f64).ln_1p();
        GeometricBoxes {
            p: BigUint::from(p),
            q: BigUint::from(q),
            ln_delta,
            powers: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    fn power(&mut self, l: u32) -> &(BigUint, BigUint) {
        let (p, q) = (&self.p, &self.q);
        self.powers.entry(l).or_insert_with(|| (p.pow(l), q.pow(l)))
    }

    /// `Δ^l <= v`.
    fn reaches(&mut self, v: u64, l: u32) -> bool {
        let (pl, ql) = self.power(l);
        *pl <= ql * v
    }

    /// `-1` for zero, otherwise the `l` with `Δ^l <= v < Δ^{l+1}`.
    pub fn index(&mut self, v: u64) -> i64 {
        if v == 0 {
            return -1;
        }
        if let Some(&l) = self.memo.get(&v) {
            return l;
        }
        let guess = ((v as f64).ln() / self.ln_delta).floor().max(0.0);
        let mut l = if guess.is_finite() && guess < u32::MAX as f64 { guess as u32 } else { 0 };
        while l > 0 && !self.reaches(v, l) {
            l -= 1;
        }
        while self.reaches(v, l + 1) {
            l += 1;
        }
        self.memo.insert(v, l as i64);
        l as i64
    }

    /// Smallest `l` with `Δ^l >= v` (zero for `v <= 1`).
    pub fn ceil_log(&mut self, v: u64) -> u64 {
        if v <= 1 {
            return 0;
        }
        let l = self.index(v) as u32;
        let (pl, ql) = self.power(l);
        if *pl == ql * v {
            l as u64
        } else {
            l as u64 + 1
        }
    }

    /// `a <= Δ^l * b`, exactly.
    pub fn within(&mut self, a: u64, b: u64, l: u32) -> bool {
        let (pl, ql) = self.power(l);
        ql * a <= pl * b
    }

    /// `Δ^l <= 1 + eps`, exactly.
    pub fn power_at_most(&mut self, l: u32, one_plus_eps: Ratio) -> bool {
        let (pl, ql) = self.power(l);
        pl * one_plus_eps.den() <= ql * one_plus_eps.num()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!("1/10".parse::<Ratio>().unwrap(), Ratio::new(1, 10).unwrap());
        assert_eq!("0.1".parse::<Ratio>().unwrap(), Ratio::new(1, 10).unwrap());
        assert_eq!("2".parse::<Ratio>().unwrap(), Ratio::new(2, 1).unwrap());
        assert_eq!(".5".parse::<Ratio>().unwrap(), Ratio::new(1, 2).unwrap());
        assert_eq!("4/8".parse::<Ratio>().unwrap().to_string(), "1/2");
        for bad in ["", "0", "-1", "1/0", "a", "1e-3", "."] {
            assert!(bad.parse::<Ratio>().is_err(), "{bad}");
        }
    }

    #[test]
    fn box_boundaries_are_exact() {
        let mut boxes = GeometricBoxes::new(5, 4);
        assert_eq!(boxes.index(0), -1);
        assert_eq!(boxes.index(1), 0);
        // (5/4)^3 = 125/64 <= 2 < 625/256
        assert_eq!(boxes.index(2), 3);
        assert_eq!(boxes.index(125), 21);
        assert_eq!(boxes.ceil_log(2), 4);
        assert_eq!(boxes.ceil_log(1), 0);
    }

    #[test]
    fn index_matches_linear_scan() {
        let mut boxes = GeometricBoxes::new(41, 40);
        let mut scan = GeometricBoxes::new(41, 40);
        for v in 1..2000u64 {
            let mut l = 0u32;
            while scan.reaches(v, l + 1) {
                l += 1;
            }
            assert_eq!(boxes.index(v), l as i64, "v = {v}");
        }
    }

    #[test]
    fn exact_power_boundary() {
        // Δ = 2: 8 sits exactly on Δ^3
        let mut boxes = GeometricBoxes::new(2, 1);
        assert_eq!(boxes.index(7), 2);
        assert_eq!(boxes.index(8), 3);
        assert_eq!(boxes.ceil_log(8), 3);
        assert_eq!(boxes.ceil_log(9), 4);
        assert!(boxes.within(8, 1, 3));
        assert!(!boxes.within(9, 1, 3));
        assert!(boxes.power_at_most(1, Ratio::new(1, 1).unwrap().one_plus()));
    }
}
