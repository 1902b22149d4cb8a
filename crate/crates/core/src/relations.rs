//! Locality and causality relations on finite carriers, and checkers for the
//! compatible group structures and the generalized Hammerstein property.
//!
//! Finite relations are stored as dense boolean matrices over element indices
//! `0..n`. Infinite carriers (functionals, test functions) go through the
//! sample-based checkers, which take the relation as a predicate.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::report::Report;

pub type ElementSet = BTreeSet<usize>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryRelation {
    n: usize,
    holds: Vec<bool>,
}

impl BinaryRelation {
    pub fn empty(n: usize) -> Self {
        Self { n, holds: vec![false; n * n] }
    }

    pub fn from_fn(n: usize, mut pred: impl FnMut(usize, usize) -> bool) -> Self {
        let mut r = Self::empty(n);
        for a in 0..n {
            for b in 0..n {
                r.holds[a * n + b] = pred(a, b);
            }
        }
        r
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut r = Self::empty(n);
        for (a, b) in pairs {
            r.check(a)?;
            r.check(b)?;
            r.holds[a * n + b] = true;
        }
        Ok(r)
    }

    /// Decodes the low `n*n` bits of `mask` row-major.
    pub fn from_bits(n: usize, mask: u64) -> Self {
        Self::from_fn(n, |a, b| mask >> (a * n + b) & 1 == 1)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn check(&self, a: usize) -> Result<()> {
        if a >= self.n {
            return Err(Error::OutsideUniverse(a, self.n));
        }
        Ok(())
    }

    #[inline]
    pub fn holds(&self, a: usize, b: usize) -> bool {
        self.holds[a * self.n + b]
    }

    pub fn set(&mut self, a: usize, b: usize, v: bool) {
        self.holds[a * self.n + b] = v;
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|a| (0..self.n).map(move |b| (a, b)))
            .filter(|&(a, b)| self.holds(a, b))
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|a| (0..self.n).all(|b| self.holds(a, b) == self.holds(b, a)))
    }

    pub fn is_negation_reflexive(&self) -> bool {
        (0..self.n).all(|a| !self.holds(a, a))
    }

    /// Some pair with `a ⊣ b` and not `b ⊣ a`.
    pub fn asymmetric_pair(&self) -> Option<(usize, usize)> {
        self.pairs().into_iter().find(|&(a, b)| !self.holds(b, a))
    }

    pub fn is_subrelation_of(&self, other: &BinaryRelation) -> bool {
        self.n == other.n && self.holds.iter().zip(&other.holds).all(|(&a, &b)| !a || b)
    }
}

/// A symmetric relation `⊥`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalityStructure {
    relation: BinaryRelation,
}

impl LocalityStructure {
    pub fn new(relation: BinaryRelation) -> Result<Self> {
        if let Some((a, b)) = (0..relation.n)
            .flat_map(|a| (0..relation.n).map(move |b| (a, b)))
            .find(|&(a, b)| relation.holds(a, b) != relation.holds(b, a))
        {
            return Err(Error::InvalidStructure(format!("locality relation not symmetric at ({a}, {b})")));
        }
        Ok(Self { relation })
    }

    pub fn relation(&self) -> &BinaryRelation {
        &self.relation
    }

    pub fn size(&self) -> usize {
        self.relation.n
    }
}

/// A relation `⊣` whose negation is reflexive and which is not symmetric.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalityStructure {
    relation: BinaryRelation,
}

impl CausalityStructure {
    pub fn new(relation: BinaryRelation) -> Result<Self> {
        Self::validate(&relation, true)?;
        Ok(Self { relation })
    }

    /// Skips the asymmetry requirement (negation reflexivity is still enforced).
    pub fn new_allow_symmetric(relation: BinaryRelation) -> Result<Self> {
        Self::validate(&relation, false)?;
        Ok(Self { relation })
    }

    fn validate(relation: &BinaryRelation, require_asymmetry: bool) -> Result<()> {
        if let Some(a) = (0..relation.n).find(|&a| relation.holds(a, a)) {
            return Err(Error::InvalidStructure(format!("causality relation holds on the diagonal at {a}")));
        }
        if require_asymmetry && relation.asymmetric_pair().is_none() {
            return Err(Error::InvalidStructure("causality relation is symmetric".into()));
        }
        Ok(())
    }

    pub fn relation(&self) -> &BinaryRelation {
        &self.relation
    }

    pub fn size(&self) -> usize {
        self.relation.n
    }
}

fn check_set(u: &ElementSet, n: usize) -> Result<()> {
    match u.iter().find(|&&a| a >= n) {
        Some(&a) => Err(Error::OutsideUniverse(a, n)),
        None => Ok(()),
    }
}

/// `U^⊥ = {x | x ⊥ y for all y ∈ U}`.
pub fn polar(u: &ElementSet, s: &LocalityStructure) -> Result<ElementSet> {
    check_set(u, s.size())?;
    Ok((0..s.size()).filter(|&x| u.iter().all(|&y| s.relation.holds(x, y))).collect())
}

/// `^⊣U = {x | x ⊣ y for all y ∈ U}`.
pub fn polar_left(u: &ElementSet, s: &CausalityStructure) -> Result<ElementSet> {
    check_set(u, s.size())?;
    Ok((0..s.size()).filter(|&x| u.iter().all(|&y| s.relation.holds(x, y))).collect())
}

/// `U^⊣ = {x | y ⊣ x for all y ∈ U}`.
pub fn polar_right(u: &ElementSet, s: &CausalityStructure) -> Result<ElementSet> {
    check_set(u, s.size())?;
    Ok((0..s.size()).filter(|&x| u.iter().all(|&y| s.relation.holds(y, x))).collect())
}

/// Membership in `X^{⊥k}`: all distinct positions pairwise related.
pub fn mutually_independent(tuple: &[usize], s: &LocalityStructure) -> bool {
    let n = s.size();
    tuple.iter().enumerate().all(|(i, &a)| {
        tuple.iter().enumerate().all(|(j, &b)| i == j || (a < n && b < n && s.relation.holds(a, b)))
    })
}

/// `x ⊥ y` iff `x ⊣ y` and `y ⊣ x`.
pub fn symmetrize(s: &CausalityStructure) -> LocalityStructure {
    let r = &s.relation;
    LocalityStructure { relation: BinaryRelation::from_fn(r.n, |a, b| r.holds(a, b) && r.holds(b, a)) }
}

/// Checks the group-with-causality axioms on every triple drawn from `samples`.
///
/// The unit is exempt from negation reflexivity: `{0}^⊣ = G` forces `0 ⊣ 0`,
/// so the two requirements cannot both hold at the unit.
pub fn check_group_with_causality<T: PartialEq>(
    samples: &[T],
    zero: &T,
    add: impl Fn(&T, &T) -> T,
    related: impl Fn(&T, &T) -> bool,
) -> Report {
    let suite = "relations";
    let mut report = Report::new();
    for (i, x) in samples.iter().enumerate() {
        if x != zero && related(x, x) {
            report.verdict(suite, "negation-reflexive", format!("{i}"), false, format!("element {i} is related to itself"));
        }
        if !related(zero, x) {
            report.verdict(suite, "unit-polar-right", format!("{i}"), false, format!("0 ⊣ {i} fails"));
        }
        if !related(x, zero) {
            report.verdict(suite, "unit-polar-left", format!("{i}"), false, format!("{i} ⊣ 0 fails"));
        }
    }
    for (a, x1) in samples.iter().enumerate() {
        for (b, x2) in samples.iter().enumerate() {
            let sum = add(x1, x2);
            for (c, y) in samples.iter().enumerate() {
                if related(x1, y) && related(x2, y) && !related(&sum, y) {
                    report.verdict(suite, "sum-left", format!("{a},{b},{c}"), false, format!("{a}+{b} ⊣ {c} fails"));
                }
                if related(y, x1) && related(y, x2) && !related(y, &sum) {
                    report.verdict(suite, "sum-right", format!("{a},{b},{c}"), false, format!("{c} ⊣ {a}+{b} fails"));
                }
            }
        }
    }
    if report.is_empty() {
        report.verdict(suite, "group-with-causality", "all", true, "");
    }
    report
}

/// Checks `m((U^⊥ × U^⊥) ∩ ⊥) ⊆ U^⊥` for every supplied `U`, and `{0}^⊥ = G`.
/// `sets` are index sets into `samples`; polars are taken inside `samples`.
pub fn check_group_with_locality<T: PartialEq>(
    samples: &[T],
    zero: &T,
    sets: &[ElementSet],
    add: impl Fn(&T, &T) -> T,
    related: impl Fn(&T, &T) -> bool,
) -> Report {
    let suite = "relations";
    let mut report = Report::new();
    for (i, x) in samples.iter().enumerate() {
        if !related(zero, x) {
            report.verdict(suite, "unit-polar", format!("{i}"), false, format!("0 ⊥ {i} fails"));
        }
    }
    for (k, u) in sets.iter().enumerate() {
        let members: Vec<&T> = u.iter().map(|&i| &samples[i]).collect();
        let in_polar = |x: &T| members.iter().all(|y| related(x, y));
        let polar: Vec<usize> = (0..samples.len()).filter(|&i| in_polar(&samples[i])).collect();
        for &a in &polar {
            for &b in &polar {
                if related(&samples[a], &samples[b]) && !in_polar(&add(&samples[a], &samples[b])) {
                    report.verdict(suite, "polar-closed", format!("U{k}:{a},{b}"), false, format!("{a}+{b} leaves U{k}^⊥"));
                }
            }
        }
    }
    if report.is_empty() {
        report.verdict(suite, "group-with-locality", "all", true, "");
    }
    report
}

/// Target group of a Hammerstein check.
pub trait TargetGroup {
    type Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Result<Self::Elem>;
    fn distance(&self, a: &Self::Elem, b: &Self::Elem) -> f64;
}

/// `(ℝ, +)`.
pub struct RealAdditive;

impl TargetGroup for RealAdditive {
    type Elem = f64;
    fn mul(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn inv(&self, a: &f64) -> Result<f64> {
        Ok(-a)
    }
    fn distance(&self, a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }
}

/// For each sample `(f1, f, f2)` with `f1 ⊣ f2`, checks
/// `φ(f1+f+f2) = φ(f2+f)·φ(f)⁻¹·φ(f+f1)` and the `f = 0` instance
/// `φ(f1+f2) = φ(f2)·φ(0)⁻¹·φ(f1)` (disjoint additivity in the abelian case).
/// Samples violating the relation are flagged and not evaluated.
#[allow(clippy::too_many_arguments)]
pub fn check_hammerstein<X, G: TargetGroup>(
    suite: &str,
    map: impl Fn(&X) -> G::Elem,
    add: impl Fn(&X, &X) -> X,
    zero: &X,
    target: &G,
    related: impl Fn(&X, &X) -> bool,
    samples: &[(X, X, X)],
    tol: f64,
) -> Report {
    let mut report = Report::new();
    let phi0 = map(zero);
    let phi0_inv = target.inv(&phi0);
    for (i, (f1, f, f2)) in samples.iter().enumerate() {
        let id = format!("{i}");
        if !related(f1, f2) {
            report.verdict(suite, "rejected-sample", id, false, "sample does not satisfy f1 ⊣ f2");
            continue;
        }
        let lhs = map(&add(&add(f1, f), f2));
        let rhs = match target.inv(&map(f)) {
            Ok(inv) => target.mul(&target.mul(&map(&add(f2, f)), &inv), &map(&add(f, f1))),
            Err(e) => {
                report.verdict(suite, "hammerstein", id, false, e.to_string());
                continue;
            }
        };
        report.residual(suite, "hammerstein", None, id.clone(), target.distance(&lhs, &rhs), tol);
        if let Ok(inv0) = &phi0_inv {
            let lhs = map(&add(f1, f2));
            let rhs = target.mul(&target.mul(&map(f2), inv0), &map(f1));
            report.residual(suite, "disjoint-additivity", None, id, target.distance(&lhs, &rhs), tol);
        }
    }
    report
}
