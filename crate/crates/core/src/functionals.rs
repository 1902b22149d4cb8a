//! Polynomial functionals of lattice field configurations.
//!
//! `F(φ) = Σ_M c_M Π_{x∈M} φ(x)` where `M` runs over multisets of sites
//! (sorted site-index vectors) and `c_M` are ħ-Laurent coefficients. Keying
//! by multiset makes every coefficient tensor symmetric by construction: the
//! symmetric tensor entry `F_n(x_1,…,x_n)` is `c_M / (n!/Π α_i!)`, but nothing
//! downstream needs that normalisation, so only `c_M` is stored.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::hbar::HbarScalar;
use crate::lattice::{FieldConfiguration, LatticePoint, LatticeShape, Region};
use crate::report::Report;

/// Sorted site indices, repeated for powers.
pub type Monomial = Vec<u32>;

/// Symmetric tensor keyed by sorted site multisets.
pub type SymTensor = BTreeMap<Monomial, HbarScalar>;

/// Canonical, hashable image of a functional (exact bit patterns).
pub type Fingerprint = Vec<(Monomial, Vec<(i32, u64, u64)>)>;

/// Default absolute threshold below which numerically computed coefficients
/// are treated as zero in support computations.
pub const SUPPORT_EPS: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct PolyFunctional {
    shape: LatticeShape,
    terms: BTreeMap<Monomial, HbarScalar>,
}

/// `(site, multiplicity)` runs of a sorted monomial.
pub fn multiplicities(m: &[u32]) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = Vec::new();
    for &s in m {
        match out.last_mut() {
            Some((site, k)) if *site == s => *k += 1,
            _ => out.push((s, 1)),
        }
    }
    out
}

/// Calls `f(ks)` for every `ks` with `0 <= ks[i] <= groups[i].1`.
pub fn for_each_submultiset(groups: &[(u32, u32)], mut f: impl FnMut(&[u32])) {
    let mut ks = vec![0u32; groups.len()];
    loop {
        f(&ks);
        let mut i = 0;
        loop {
            if i == groups.len() {
                return;
            }
            if ks[i] < groups[i].1 {
                ks[i] += 1;
                break;
            }
            ks[i] = 0;
            i += 1;
        }
    }
}

pub(crate) fn falling(a: u32, k: u32) -> f64 {
    (0..k).map(|j| (a - j) as f64).product()
}

pub(crate) fn binomial(a: u32, k: u32) -> f64 {
    falling(a, k) / falling(k, k)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

fn norm_bits(x: f64) -> u64 {
    (x + 0.0).to_bits()
}

impl PolyFunctional {
    pub fn zero(shape: LatticeShape) -> Self {
        Self { shape, terms: BTreeMap::new() }
    }

    pub fn constant(shape: LatticeShape, c: HbarScalar) -> Self {
        let mut f = Self::zero(shape);
        f.add_term(Vec::new(), &c);
        f
    }

    /// `φ(p)`.
    pub fn field(shape: LatticeShape, p: LatticePoint) -> Self {
        Self::monomial(shape, &[p], HbarScalar::one())
    }

    /// `c · Π φ(points)`.
    pub fn monomial(shape: LatticeShape, points: &[LatticePoint], c: HbarScalar) -> Self {
        let mut m: Monomial = points.iter().map(|&p| shape.index(p) as u32).collect();
        m.sort_unstable();
        let mut f = Self::zero(shape);
        f.add_term(m, &c);
        f
    }

    /// `Σ_x c(x) φ(x)`.
    pub fn linear(c: &FieldConfiguration) -> Self {
        let shape = c.shape();
        let mut f = Self::zero(shape);
        for (i, v) in c.values().iter().enumerate() {
            f.add_term(vec![i as u32], &HbarScalar::constant(*v));
        }
        f
    }

    pub fn from_terms(shape: LatticeShape, terms: impl IntoIterator<Item = (Monomial, HbarScalar)>) -> Self {
        let mut f = Self::zero(shape);
        for (mut m, c) in terms {
            m.sort_unstable();
            f.add_term(m, &c);
        }
        f
    }

    pub fn shape(&self) -> LatticeShape {
        self.shape
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, HbarScalar> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.len()).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> HbarScalar {
        self.terms.get(&Vec::new()).cloned().unwrap_or_default()
    }

    /// `F(0) = 0`.
    pub fn is_unit_preserving(&self) -> bool {
        !self.terms.contains_key(&Vec::new())
    }

    pub fn add_term(&mut self, m: Monomial, c: &HbarScalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c.clone());
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &PolyFunctional, factor: Complex64) {
        debug_assert_eq!(self.shape, other.shape);
        for (m, c) in &other.terms {
            self.add_term(m.clone(), &c.scale(factor));
        }
    }

    pub fn add(&self, other: &PolyFunctional) -> PolyFunctional {
        let mut out = self.clone();
        out.add_scaled(other, Complex64::new(1.0, 0.0));
        out
    }

    pub fn sub(&self, other: &PolyFunctional) -> PolyFunctional {
        let mut out = self.clone();
        out.add_scaled(other, Complex64::new(-1.0, 0.0));
        out
    }

    pub fn scale(&self, c: Complex64) -> PolyFunctional {
        let mut out = Self::zero(self.shape);
        out.add_scaled(self, c);
        out
    }

    pub fn scale_real(&self, c: f64) -> PolyFunctional {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Multiplies every coefficient by an ħ-Laurent scalar.
    pub fn scale_hbar(&self, c: &HbarScalar) -> PolyFunctional {
        let mut out = Self::zero(self.shape);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), &(v * c));
        }
        out
    }

    /// Multiplies by `ħ^k`.
    pub fn shift_hbar(&self, k: i32) -> PolyFunctional {
        PolyFunctional {
            shape: self.shape,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.shift(k))).collect(),
        }
    }

    /// Keeps only the `ħ^exp` part of every coefficient.
    pub fn hbar_part(&self, exp: i32) -> PolyFunctional {
        let mut out = Self::zero(self.shape);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), &c.part(exp));
        }
        out
    }

    /// Overall ħ-exponent window, `None` for zero.
    pub fn hbar_range(&self) -> Option<(i32, i32)> {
        self.terms.values().filter_map(|c| c.exponent_range()).fold(None, |acc, (lo, hi)| match acc {
            None => Some((lo, hi)),
            Some((a, b)) => Some((a.min(lo), b.max(hi))),
        })
    }

    pub fn degree_part(&self, n: usize) -> PolyFunctional {
        PolyFunctional {
            shape: self.shape,
            terms: self.terms.iter().filter(|(m, _)| m.len() == n).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    pub fn without_constant(&self) -> PolyFunctional {
        let mut out = self.clone();
        out.terms.remove(&Vec::new());
        out
    }

    /// Classical pointwise product.
    pub fn mul(&self, other: &PolyFunctional) -> PolyFunctional {
        let mut out = Self::zero(self.shape);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut m = ma.clone();
                m.extend_from_slice(mb);
                m.sort_unstable();
                out.add_term(m, &(ca * cb));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    /// Largest coefficient modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &PolyFunctional) -> f64 {
        self.sub(other).max_abs()
    }

    /// Drops coefficients (per ħ-power) with modulus `<= eps`.
    pub fn pruned(&self, eps: f64) -> PolyFunctional {
        let mut out = Self::zero(self.shape);
        for (m, c) in &self.terms {
            for (e, v) in c.iter() {
                if v.norm() > eps {
                    out.add_term(m.clone(), &HbarScalar::monomial(e, v));
                }
            }
        }
        out
    }

    pub fn ensure_shape(&self, shape: LatticeShape) -> Result<()> {
        self.shape.ensure_same(&shape)
    }

    pub fn evaluate(&self, phi: &FieldConfiguration) -> Result<HbarScalar> {
        self.ensure_shape(phi.shape())?;
        let mut out = HbarScalar::zero();
        for (m, c) in &self.terms {
            let prod: Complex64 = m.iter().map(|&s| phi.at_site(s as usize)).product();
            out.add_assign_scaled(c, prod, 0);
        }
        Ok(out)
    }

    /// Union of all sites in monomials of degree ≥ 1.
    pub fn support(&self) -> Region {
        Region::from_sites(self.shape, self.terms.keys().flatten().map(|&s| s as usize))
    }

    /// Support ignoring coefficients with `max_abs <= eps`.
    pub fn support_tol(&self, eps: f64) -> Region {
        Region::from_sites(
            self.shape,
            self.terms.iter().filter(|(_, c)| c.max_abs() > eps).flat_map(|(m, _)| m.iter().map(|&s| s as usize)),
        )
    }

    /// `δF/δφ(site)` as a functional.
    pub fn partial(&self, site: usize) -> PolyFunctional {
        let s = site as u32;
        let mut out = Self::zero(self.shape);
        for (m, c) in &self.terms {
            let k = m.iter().filter(|&&x| x == s).count();
            if k == 0 {
                continue;
            }
            let mut rest = m.clone();
            let pos = rest.iter().position(|&x| x == s).unwrap();
            rest.remove(pos);
            out.add_term(rest, &c.scale(Complex64::new(k as f64, 0.0)));
        }
        out
    }

    /// `F^(n)(φ)` as a symmetric tensor: entry at sorted key `K` is
    /// `∂^n F / ∂φ(k_1)…∂φ(k_n)` at `φ`.
    pub fn derivative(&self, n: usize, phi: &FieldConfiguration) -> Result<SymTensor> {
        self.ensure_shape(phi.shape())?;
        let mut out = SymTensor::new();
        for (m, c) in &self.terms {
            if m.len() < n {
                continue;
            }
            let groups = multiplicities(m);
            for_each_submultiset(&groups, |ks| {
                if ks.iter().sum::<u32>() as usize != n {
                    return;
                }
                let mut w = Complex64::new(1.0, 0.0);
                let mut key = Vec::with_capacity(n);
                for (&(site, a), &k) in groups.iter().zip(ks) {
                    w *= falling(a, k) * phi.at_site(site as usize).powu(a - k);
                    key.extend(std::iter::repeat_n(site, k as usize));
                }
                if w != Complex64::new(0.0, 0.0) {
                    let e = out.entry(key).or_default();
                    e.add_assign_scaled(c, w, 0);
                }
            });
        }
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    /// `F^φ0(ψ) = F(φ0 + ψ)` as a functional of `ψ`.
    pub fn shifted(&self, phi0: &FieldConfiguration) -> Result<PolyFunctional> {
        let series = self.shift_series(phi0, self.degree())?;
        let mut out = Self::zero(self.shape);
        for s in &series {
            out.add_scaled(s, Complex64::new(1.0, 0.0));
        }
        Ok(out)
    }

    /// Coefficients of `λ^j` in `F(ψ + λφ0)`, `j = 0..=cap`.
    pub fn shift_series(&self, phi0: &FieldConfiguration, cap: usize) -> Result<Vec<PolyFunctional>> {
        self.ensure_shape(phi0.shape())?;
        let mut out = vec![Self::zero(self.shape); cap + 1];
        for (m, c) in &self.terms {
            let groups = multiplicities(m);
            for_each_submultiset(&groups, |ks| {
                let kept: u32 = ks.iter().sum();
                let j = m.len() - kept as usize;
                if j > cap {
                    return;
                }
                let mut w = Complex64::new(1.0, 0.0);
                let mut key = Vec::with_capacity(kept as usize);
                for (&(site, a), &k) in groups.iter().zip(ks) {
                    w *= binomial(a, k) * phi0.at_site(site as usize).powu(a - k);
                    key.extend(std::iter::repeat_n(site, k as usize));
                }
                if w != Complex64::new(0.0, 0.0) {
                    out[j].add_term(key, &c.scale(w));
                }
            });
        }
        Ok(out)
    }

    /// Largest Chebyshev distance between two sites of one monomial.
    pub fn monomial_diameter(&self) -> usize {
        let shape = self.shape;
        self.terms
            .keys()
            .map(|m| {
                let mut d = 0;
                for &a in m {
                    for &b in m {
                        d = d.max(shape.chebyshev(shape.point(a as usize), shape.point(b as usize)));
                    }
                }
                d
            })
            .max()
            .unwrap_or(0)
    }

    /// Largest temporal extent of a single monomial.
    pub fn monomial_time_extent(&self) -> usize {
        let shape = self.shape;
        self.terms
            .keys()
            .map(|m| {
                let ts = m.iter().map(|&s| shape.point(s as usize).t);
                let (lo, hi) = ts.fold((usize::MAX, 0), |(lo, hi), t| (lo.min(t), hi.max(t)));
                if m.is_empty() {
                    0
                } else {
                    hi - lo
                }
            })
            .max()
            .unwrap_or(0)
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.terms
            .iter()
            .map(|(m, c)| (m.clone(), c.iter().map(|(e, v)| (e, norm_bits(v.re), norm_bits(v.im))).collect()))
            .collect()
    }

    /// `{degree: [{points: [[t,x],…], coeff: [[exp,re,im],…]}]}`.
    pub fn to_json(&self) -> Value {
        let mut by_degree: BTreeMap<usize, Vec<Value>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let points: Vec<Value> = m
                .iter()
                .map(|&s| {
                    let p = self.shape.point(s as usize);
                    json!([p.t, p.x])
                })
                .collect();
            by_degree.entry(m.len()).or_default().push(json!({"points": points, "coeff": c.to_triples()}));
        }
        let mut map = Map::new();
        for (d, v) in by_degree {
            map.insert(d.to_string(), Value::Array(v));
        }
        Value::Object(map)
    }

    pub fn from_json(shape: LatticeShape, value: &Value) -> Result<PolyFunctional> {
        let bad = |reason: String| Error::InvalidConfig { field: "functional".into(), reason };
        let obj = value.as_object().ok_or_else(|| bad("expected an object keyed by degree".into()))?;
        let mut out = Self::zero(shape);
        for (deg, entries) in obj {
            let deg: usize = deg.parse().map_err(|_| bad(format!("degree key `{deg}` is not an integer")))?;
            let entries = entries.as_array().ok_or_else(|| bad(format!("degree {deg}: expected a list")))?;
            for e in entries {
                let points = e["points"].as_array().ok_or_else(|| bad("missing `points`".into()))?;
                if points.len() != deg {
                    return Err(bad(format!("degree {deg} entry has {} points", points.len())));
                }
                let mut m = Monomial::new();
                for p in points {
                    let t = p[0].as_i64().ok_or_else(|| bad("point t must be an integer".into()))?;
                    let x = p[1].as_i64().ok_or_else(|| bad("point x must be an integer".into()))?;
                    m.push(shape.index(shape.checked_point(t, x)?) as u32);
                }
                m.sort_unstable();
                let coeff: Vec<[f64; 3]> = serde_json::from_value(e["coeff"].clone())?;
                out.add_term(m, &HbarScalar::from_triples(&coeff));
            }
        }
        Ok(out)
    }
}

/// One additivity sample `(φ1, φ2, φ3)`.
pub type AdditivitySample = (FieldConfiguration, FieldConfiguration, FieldConfiguration);

/// Residuals of `F(φ1+φ2+φ3) = F(φ1+φ2) + F(φ2+φ3) − F(φ2)` and of its
/// `φ2 = 0` instance, per sample.
///
/// Samples whose outer supports come within Chebyshev distance `gap` of each
/// other are flagged and skipped. `gap = 0` only requires disjointness;
/// densities with first differences couple nearest neighbours and need
/// `gap = 1`.
pub fn check_additivity(f: &PolyFunctional, samples: &[AdditivitySample], gap: usize, tol: f64) -> Result<Report> {
    let suite = "functionals";
    let shape = f.shape();
    let mut report = Report::new();
    let zero = FieldConfiguration::zeros(shape);
    let f0 = f.evaluate(&zero)?;
    for (i, (p1, p2, p3)) in samples.iter().enumerate() {
        let (s1, s3) = (p1.support(), p3.support());
        let too_close = s1.points().any(|a| s3.points().any(|b| shape.chebyshev(a, b) <= gap));
        if too_close {
            report.verdict(suite, "ill-formed-sample", format!("{i}"), false, format!("supports of φ1 and φ3 closer than {}", gap + 1));
            continue;
        }
        let eval = |phi: &FieldConfiguration| f.evaluate(phi);
        let lhs = eval(&p1.add(p2).add(p3))?;
        let rhs = &(&eval(&p1.add(p2))? + &eval(&p2.add(p3))?) - &eval(p2)?;
        report.residual(suite, "additivity", None, format!("{i}"), (&lhs - &rhs).max_abs(), tol);
        let lhs = eval(&p1.add(p3))?;
        let rhs = &(&eval(p1)? + &eval(p3)?) - &f0;
        report.residual(suite, "disjoint-additivity", None, format!("{i}"), (&lhs - &rhs).max_abs(), tol);
    }
    Ok(report)
}

/// Splits `g` into `n` time bands realising property L1 for `f1 ⊣ f2`:
/// `g_i ⪯ f2` for `i < n`, `f1 ⪯ g_i` for `i ≥ 2`, and `g_i ⪯ g_j` for
/// `i + 1 < j`. Bands are sharp: each monomial goes to the band of its
/// earliest time, so `Σ g_i = g` exactly.
///
/// With `r` the largest temporal extent of a monomial of `g`, cut points step
/// by `max(r, 1)` starting just after `f1`, which needs
/// `(n − 2)·max(r, 1) + r` empty rows between `f1` and `f2`.
pub fn decompose_l1(g: &PolyFunctional, f1: &Region, f2: &Region, n: usize) -> Result<Vec<PolyFunctional>> {
    if n <= 3 {
        return Err(Error::Precondition(format!("L1 decomposition needs N > 3, got {n}")));
    }
    let shape = g.shape();
    shape.ensure_same(&f1.shape())?;
    shape.ensure_same(&f2.shape())?;
    let r = g.monomial_time_extent() as i64;
    let step = r.max(1);
    let t1 = f1.time_range().map_or(-1, |(_, hi)| hi as i64);
    let t2 = f2.time_range().map_or(shape.nt as i64 + r, |(lo, _)| lo as i64);
    let required = (n as i64 - 2) * step + r;
    let found = t2 - t1 - 1;
    if found < required {
        return Err(Error::NoSeparatingSlab { required: required as usize, found });
    }
    // cut[i] is the first row of band i+1 (0-based bands), i = 0..n-1
    let cuts: Vec<i64> = (0..n as i64 - 1).map(|i| t1 + 1 + i * step).collect();
    let mut out = vec![PolyFunctional::zero(shape); n];
    for (m, c) in g.terms() {
        let band = match m.iter().map(|&s| shape.point(s as usize).t as i64).min() {
            None => 0,
            Some(t) => cuts.iter().filter(|&&cut| t >= cut).count(),
        };
        out[band].add_term(m.clone(), c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{not_later_than, Lattice};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shape() -> LatticeShape {
        LatticeShape { nt: 8, nx: 8 }
    }

    fn c(re: f64) -> HbarScalar {
        HbarScalar::real(re)
    }

    fn random_functional(rng: &mut ChaCha8Rng, s: LatticeShape, deg: usize, terms: usize) -> PolyFunctional {
        PolyFunctional::from_terms(
            s,
            (0..terms).map(|_| {
                let d = rng.gen_range(0..=deg);
                let m: Monomial = (0..d).map(|_| rng.gen_range(0..s.sites() as u32)).collect();
                (m, HbarScalar::constant(Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            }),
        )
    }

    fn random_field(rng: &mut ChaCha8Rng, s: LatticeShape) -> FieldConfiguration {
        FieldConfiguration::from_fn(s, |_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0))
    }

    #[test]
    fn evaluate_examples() {
        let s = shape();
        let a = LatticePoint::new(2, 3);
        assert_eq!(PolyFunctional::constant(s, c(2.5)).evaluate(&FieldConfiguration::zeros(s)).unwrap(), c(2.5));
        let sq = PolyFunctional::monomial(s, &[a, a], HbarScalar::one());
        let two = FieldConfiguration::from_fn(s, |_| Complex64::new(2.0, 0.0));
        assert_eq!(sq.evaluate(&two).unwrap(), c(4.0));
        let other = LatticeShape { nt: 4, nx: 4 };
        assert!(matches!(sq.evaluate(&FieldConfiguration::zeros(other)), Err(Error::LatticeMismatch(..))));
    }

    #[test]
    fn evaluate_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = shape();
        for _ in 0..10 {
            let f = random_functional(&mut rng, s, 3, 12);
            let phi = random_field(&mut rng, s);
            let mut naive = Complex64::new(0.0, 0.0);
            for (m, coeff) in f.terms() {
                let mut p = coeff.coeff(0);
                for &x in m {
                    p *= phi.values()[x as usize];
                }
                naive += p;
            }
            assert!((f.evaluate(&phi).unwrap().coeff(0) - naive).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_examples() {
        let s = shape();
        let a = LatticePoint::new(1, 1);
        let lin = PolyFunctional::linear(&FieldConfiguration::from_fn(s, |p| Complex64::new(p.x as f64 + 1.0, 0.0)));
        let phi = FieldConfiguration::zeros(s);
        let d1 = lin.derivative(1, &phi).unwrap();
        assert_eq!(d1.len(), s.sites());
        assert_eq!(d1[&vec![s.index(a) as u32]], c(2.0));
        assert!(lin.derivative(2, &phi).unwrap().is_empty());
        let sq = PolyFunctional::monomial(s, &[a, a], HbarScalar::one());
        let phi = FieldConfiguration::from_fn(s, |_| Complex64::new(3.0, 0.0));
        assert_eq!(sq.derivative(1, &phi).unwrap()[&vec![s.index(a) as u32]], c(6.0));
        assert_eq!(sq.derivative(2, &phi).unwrap()[&vec![s.index(a) as u32; 2]], c(2.0));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = shape();
        for _ in 0..10 {
            let f = random_functional(&mut rng, s, 4, 10);
            let phi = random_field(&mut rng, s);
            let psi = random_field(&mut rng, s);
            let t = 1e-4;
            let fd = (f.evaluate(&phi.add(&psi.scale(Complex64::new(t, 0.0)))).unwrap().coeff(0)
                - f.evaluate(&phi.sub(&psi.scale(Complex64::new(t, 0.0)))).unwrap().coeff(0))
                / (2.0 * t);
            let d1 = f.derivative(1, &phi).unwrap();
            let exact: Complex64 = d1.iter().map(|(k, v)| v.coeff(0) * psi.values()[k[0] as usize]).sum();
            assert!((fd - exact).norm() < 1e-6);
        }
    }

    #[test]
    fn support_matches_variational_probe() {
        let s = shape();
        assert!(PolyFunctional::constant(s, c(1.0)).support().is_empty());
        let (a, b) = (LatticePoint::new(0, 1), LatticePoint::new(5, 6));
        let ab = PolyFunctional::monomial(s, &[a, b], HbarScalar::one());
        assert_eq!(ab.support().points().collect::<Vec<_>>(), vec![a, b]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_functional(&mut rng, s, 3, 6);
        let phis: Vec<_> = (0..10).map(|_| random_field(&mut rng, s)).collect();
        for site in 0..s.sites() {
            let p = s.point(site);
            let delta = FieldConfiguration::delta(s, p);
            let moves = phis.iter().any(|phi| {
                (&f.evaluate(&phi.add(&delta)).unwrap() - &f.evaluate(phi).unwrap()).max_abs() > 1e-12
            });
            assert_eq!(moves, f.support().contains(p), "site {p:?}");
        }
    }

    #[test]
    fn shift_series_recombines() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = shape();
        let f = random_functional(&mut rng, s, 3, 8);
        let phi0 = random_field(&mut rng, s);
        let psi = random_field(&mut rng, s);
        let lam: f64 = 0.7;
        let series = f.shift_series(&phi0, 3).unwrap();
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, g) in series.iter().enumerate() {
            acc += g.evaluate(&psi).unwrap().coeff(0) * lam.powi(j as i32);
        }
        let direct = f.evaluate(&psi.add(&phi0.scale(Complex64::new(lam, 0.0)))).unwrap().coeff(0);
        assert!((acc - direct).norm() < 1e-12);
        let sh = f.shifted(&phi0).unwrap();
        let direct = f.evaluate(&psi.add(&phi0)).unwrap().coeff(0);
        assert!((sh.evaluate(&psi).unwrap().coeff(0) - direct).norm() < 1e-12);
    }

    #[test]
    fn partial_and_product() {
        let s = shape();
        let a = LatticePoint::new(1, 2);
        let b = LatticePoint::new(3, 2);
        let f = PolyFunctional::monomial(s, &[a, a, b], c(2.0));
        let d = f.partial(s.index(a));
        assert_eq!(d, PolyFunctional::monomial(s, &[a, b], c(4.0)));
        let g = PolyFunctional::field(s, a).mul(&PolyFunctional::field(s, b));
        assert_eq!(g, PolyFunctional::monomial(s, &[b, a], HbarScalar::one()));
        assert!(f.sub(&f).is_zero());
    }

    #[test]
    fn json_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = shape();
        let f = random_functional(&mut rng, s, 3, 8).add(&PolyFunctional::constant(s, HbarScalar::monomial(-2, Complex64::new(0.0, 1.0))));
        let v = f.to_json();
        assert!(v.get("0").is_some());
        assert_eq!(PolyFunctional::from_json(s, &v).unwrap(), f);
        let bad = json!({"2": [{"points": [[0, 0]], "coeff": [[0, 1, 0]]}]});
        assert!(PolyFunctional::from_json(s, &bad).is_err());
        let oob = json!({"1": [{"points": [[9, 0]], "coeff": [[0, 1, 0]]}]});
        assert!(matches!(PolyFunctional::from_json(s, &oob), Err(Error::PointOutOfRange { .. })));
    }

    fn far_sample(rng: &mut ChaCha8Rng, s: LatticeShape, a: LatticePoint, b: LatticePoint) -> AdditivitySample {
        let mut p1 = FieldConfiguration::zeros(s);
        p1.set(a, Complex64::new(rng.gen_range(0.5..1.5), 0.0));
        let mut p3 = FieldConfiguration::zeros(s);
        p3.set(b, Complex64::new(rng.gen_range(0.5..1.5), 0.0));
        (p1, random_field(rng, s), p3)
    }

    #[test]
    fn additivity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = shape();
        let (a, b) = (LatticePoint::new(2, 1), LatticePoint::new(5, 5));
        let samples: Vec<_> = (0..5).map(|_| far_sample(&mut rng, s, a, b)).collect();
        let lin = PolyFunctional::linear(&random_field(&mut rng, s));
        assert!(check_additivity(&lin, &samples, 1, 1e-12).unwrap().passed());
        let mut cubic = PolyFunctional::zero(s);
        for i in 0..s.sites() {
            let p = s.point(i);
            cubic = cubic.add(&PolyFunctional::monomial(s, &[p, p, p], HbarScalar::one()));
        }
        assert!(check_additivity(&cubic, &samples, 1, 1e-12).unwrap().passed());
        let bilocal = PolyFunctional::monomial(s, &[a, b], HbarScalar::one());
        let r = check_additivity(&bilocal, &samples, 1, 1e-12).unwrap();
        assert!(r.for_axiom("additivity").all(|e| !e.pass));
        let touching = far_sample(&mut rng, s, a, LatticePoint::new(2, 2));
        let r = check_additivity(&cubic, &[touching], 1, 1e-12).unwrap();
        assert_eq!(r.for_axiom("ill-formed-sample").count(), 1);
    }

    #[test]
    fn l1_single_row_and_sum() {
        let l = Lattice::new(16, 8, 0.5).unwrap();
        let s = l.shape();
        let f1 = Region::rectangle(s, 0, 2, 0, 2);
        let f2 = Region::rectangle(s, 13, 16, 0, 2);
        let row = PolyFunctional::from_terms(s, (0..8).map(|x| (vec![s.index(LatticePoint::new(7, x)) as u32; 2], c(1.0))));
        let parts = decompose_l1(&row, &f1, &f2, 4).unwrap();
        assert_eq!(parts.iter().filter(|p| !p.is_zero()).count(), 1);
        assert!(parts.contains(&row));

        let mut g = PolyFunctional::zero(s);
        for t in 3..9 {
            for x in 0..8 {
                let p = LatticePoint::new(t, x);
                let q = LatticePoint::new(t + 1, x);
                g = g.add(&PolyFunctional::monomial(s, &[p, q], c(-1.0))).add(&PolyFunctional::monomial(s, &[p, p], c(0.5)));
            }
        }
        let parts = decompose_l1(&g, &f1, &f2, 4).unwrap();
        let sum = parts.iter().fold(PolyFunctional::zero(s), |acc, p| acc.add(p));
        assert_eq!(sum, g);
        let nonempty = |r: &Region| !r.is_empty();
        for (i, gi) in parts.iter().enumerate() {
            let si = gi.support();
            if i + 1 < parts.len() && nonempty(&si) {
                assert!(not_later_than(&si, &f2), "rel1 {i}");
            }
            if i >= 1 && nonempty(&si) {
                assert!(not_later_than(&f1, &si), "rel2 {i}");
            }
            for (j, gj) in parts.iter().enumerate() {
                let sj = gj.support();
                if i + 1 < j && nonempty(&si) && nonempty(&sj) {
                    assert!(not_later_than(&si, &sj), "rel3 {i} {j}");
                }
            }
        }
        let tight = Region::rectangle(s, 3, 4, 0, 2);
        assert!(matches!(decompose_l1(&g, &f1, &tight, 4), Err(Error::NoSeparatingSlab { required: 3, .. })));
    }
}
