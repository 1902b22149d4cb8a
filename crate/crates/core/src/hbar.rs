//! Finite Laurent polynomials in ħ with complex coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default admissible window of ħ exponents.
pub const DEFAULT_HBAR_WINDOW: (i32, i32) = (-8, 8);

/// `Σ_k c_k ħ^k` with finitely many nonzero `c_k`; exact zeros are never stored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HbarScalar {
    terms: BTreeMap<i32, Complex64>,
}

impl HbarScalar {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(0, c)
    }

    pub fn real(c: f64) -> Self {
        Self::constant(Complex64::new(c, 0.0))
    }

    pub fn monomial(exp: i32, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert(exp, c);
        }
        Self { terms }
    }

    /// `(i/ħ)^n`, the perturbative S-matrix prefactor.
    pub fn i_over_hbar_pow(n: usize) -> Self {
        Self::monomial(-(n as i32), Complex64::new(0.0, 1.0).powu(n as u32))
    }

    pub fn coeff(&self, exp: i32) -> Complex64 {
        self.terms.get(&exp).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.terms.iter().map(|(&e, &c)| (e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Lowest and highest exponent carried, `None` for zero.
    pub fn exponent_range(&self) -> Option<(i32, i32)> {
        let lo = *self.terms.keys().next()?;
        let hi = *self.terms.keys().next_back()?;
        Some((lo, hi))
    }

    pub fn within(&self, window: (i32, i32)) -> bool {
        self.exponent_range()
            .is_none_or(|(lo, hi)| lo >= window.0 && hi <= window.1)
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn add_term(&mut self, exp: i32, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry(exp).or_default();
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.terms.remove(&exp);
        }
    }

    pub fn add_assign_scaled(&mut self, other: &HbarScalar, factor: Complex64, shift: i32) {
        for (e, c) in other.iter() {
            self.add_term(e + shift, c * factor);
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero();
        out.add_assign_scaled(self, c, 0);
        out
    }

    /// Multiplies by `ħ^k`.
    pub fn shift(&self, k: i32) -> Self {
        Self {
            terms: self.terms.iter().map(|(&e, &c)| (e + k, c)).collect(),
        }
    }

    /// Keeps only the `ħ^exp` component.
    pub fn part(&self, exp: i32) -> Self {
        Self::monomial(exp, self.coeff(exp))
    }

    /// Evaluates at a numerical value of ħ.
    pub fn at(&self, hbar: f64) -> Complex64 {
        self.iter().map(|(e, c)| c * hbar.powi(e)).sum()
    }

    pub fn to_triples(&self) -> Vec<[f64; 3]> {
        self.iter().map(|(e, c)| [e as f64, c.re, c.im]).collect()
    }

    pub fn from_triples(triples: &[[f64; 3]]) -> Self {
        let mut out = Self::zero();
        for t in triples {
            out.add_term(t[0] as i32, Complex64::new(t[1], t[2]));
        }
        out
    }
}

impl From<Complex64> for HbarScalar {
    fn from(c: Complex64) -> Self {
        Self::constant(c)
    }
}

impl Add for &HbarScalar {
    type Output = HbarScalar;
    fn add(self, rhs: &HbarScalar) -> HbarScalar {
        let mut out = self.clone();
        out.add_assign_scaled(rhs, Complex64::new(1.0, 0.0), 0);
        out
    }
}

impl Sub for &HbarScalar {
    type Output = HbarScalar;
    fn sub(self, rhs: &HbarScalar) -> HbarScalar {
        let mut out = self.clone();
        out.add_assign_scaled(rhs, Complex64::new(-1.0, 0.0), 0);
        out
    }
}

impl Mul for &HbarScalar {
    type Output = HbarScalar;
    fn mul(self, rhs: &HbarScalar) -> HbarScalar {
        let mut out = HbarScalar::zero();
        for (ea, ca) in self.iter() {
            for (eb, cb) in rhs.iter() {
                out.add_term(ea + eb, ca * cb);
            }
        }
        out
    }
}

impl Neg for &HbarScalar {
    type Output = HbarScalar;
    fn neg(self) -> HbarScalar {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl fmt::Display for HbarScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .iter()
            .map(|(e, c)| format!("({:.6e}{:+.6e}i)ħ^{}", c.re, c.im, e))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// JSON form `[[exp, re, im], ...]`.
impl Serialize for HbarScalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_triples().serialize(s)
    }
}

impl<'de> Deserialize<'de> for HbarScalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let triples = Vec::<[f64; 3]>::deserialize(d)?;
        Ok(Self::from_triples(&triples))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_convolves_exponents() {
        let a = &HbarScalar::monomial(-1, c(2.0, 0.0)) + &HbarScalar::monomial(1, c(0.0, 1.0));
        let b = &HbarScalar::one() + &HbarScalar::monomial(2, c(3.0, 0.0));
        let p = &a * &b;
        assert_eq!(p.coeff(-1), c(2.0, 0.0));
        assert_eq!(p.coeff(1), c(6.0, 1.0));
        assert_eq!(p.coeff(3), c(0.0, 3.0));
        assert_eq!(p.exponent_range(), Some((-1, 3)));
    }

    #[test]
    fn cancellation_removes_entries() {
        let a = HbarScalar::monomial(2, c(1.5, -1.0));
        assert!((&a - &a).is_zero());
        assert!(HbarScalar::zero().within((0, 0)));
    }

    #[test]
    fn prefactor_powers() {
        let p = HbarScalar::i_over_hbar_pow(2);
        assert_eq!(p.coeff(-2), c(-1.0, 0.0));
        assert_eq!(HbarScalar::i_over_hbar_pow(0), HbarScalar::one());
    }

    #[test]
    fn json_roundtrip() {
        let a = &HbarScalar::monomial(-3, c(1.0, 2.0)) + &HbarScalar::monomial(4, c(-0.5, 0.0));
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[[-3.0,1.0,2.0],[4.0,-0.5,0.0]]");
        let back: HbarScalar = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
    }
}
