//! Truncated power series in λ, symmetric multilinear families and the
//! expansion of a family on a series argument.
//!
//! The engine is ħ-agnostic: ħ-weights live in the coefficients
//! (`HbarScalar`, or functionals with `HbarScalar` coefficients).

use std::collections::HashMap;
use std::sync::Mutex;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::{factorial, Fingerprint, PolyFunctional};
use crate::hbar::HbarScalar;
use crate::star_algebra::StarAlgebraContext;

/// Vector-space operations on series coefficients and family arguments.
pub trait Linear: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn scale(&self, c: Complex64) -> Self;
    fn scale_hbar(&self, c: &HbarScalar) -> Self;
    /// Largest coefficient modulus of `self − other`.
    fn distance(&self, other: &Self) -> f64;
    fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }
}

/// Canonical key for memoisation.
pub trait Keyed {
    fn key(&self) -> Fingerprint;
}

impl Linear for HbarScalar {
    fn zero_like(&self) -> Self {
        HbarScalar::zero()
    }
    fn is_zero(&self) -> bool {
        HbarScalar::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn scale(&self, c: Complex64) -> Self {
        HbarScalar::scale(self, c)
    }
    fn scale_hbar(&self, c: &HbarScalar) -> Self {
        self * c
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }
}

impl Keyed for HbarScalar {
    fn key(&self) -> Fingerprint {
        PolyFunctional::constant(crate::lattice::LatticeShape { nt: 1, nx: 1 }, self.clone()).fingerprint()
    }
}

impl Linear for PolyFunctional {
    fn zero_like(&self) -> Self {
        PolyFunctional::zero(self.shape())
    }
    fn is_zero(&self) -> bool {
        PolyFunctional::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        PolyFunctional::add(self, other)
    }
    fn scale(&self, c: Complex64) -> Self {
        PolyFunctional::scale(self, c)
    }
    fn scale_hbar(&self, c: &HbarScalar) -> Self {
        PolyFunctional::scale_hbar(self, c)
    }
    fn distance(&self, other: &Self) -> f64 {
        self.max_abs_diff(other)
    }
}

impl Keyed for PolyFunctional {
    fn key(&self) -> Fingerprint {
        self.fingerprint()
    }
}

/// A bilinear product with unit on a coefficient space.
pub trait Product<T> {
    fn mul(&self, a: &T, b: &T) -> Result<T>;
    fn unit(&self, like: &T) -> T;
}

/// Commutative product of ħ-Laurent scalars.
pub struct ScalarProduct;

impl Product<HbarScalar> for ScalarProduct {
    fn mul(&self, a: &HbarScalar, b: &HbarScalar) -> Result<HbarScalar> {
        Ok(a * b)
    }
    fn unit(&self, _: &HbarScalar) -> HbarScalar {
        HbarScalar::one()
    }
}

/// The ⋆-product of a lattice context.
pub struct StarProduct<'a>(pub &'a StarAlgebraContext);

impl Product<PolyFunctional> for StarProduct<'_> {
    fn mul(&self, a: &PolyFunctional, b: &PolyFunctional) -> Result<PolyFunctional> {
        self.0.star(a, b)
    }
    fn unit(&self, like: &PolyFunctional) -> PolyFunctional {
        PolyFunctional::constant(like.shape(), HbarScalar::one())
    }
}

/// The classical pointwise product.
pub struct PointwiseProduct;

impl Product<PolyFunctional> for PointwiseProduct {
    fn mul(&self, a: &PolyFunctional, b: &PolyFunctional) -> Result<PolyFunctional> {
        Ok(a.mul(b))
    }
    fn unit(&self, like: &PolyFunctional) -> PolyFunctional {
        PolyFunctional::constant(like.shape(), HbarScalar::one())
    }
}

/// `Σ_{n ≤ cap} λⁿ c_n`. Products and inverses silently drop orders above `cap`.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Linear> LambdaSeries<T> {
    /// Coefficients `c_0 … c_cap`; must be nonempty.
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the order-0 coefficient");
        Self { coeffs }
    }

    pub fn zero(cap: usize, like: &T) -> Self {
        Self { coeffs: vec![like.zero_like(); cap + 1] }
    }

    /// `λ·x` truncated at `cap`.
    pub fn linear(x: &T, cap: usize) -> Self {
        let mut s = Self::zero(cap, x);
        if cap >= 1 {
            s.coeffs[1] = x.clone();
        }
        s
    }

    pub fn cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &T {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn set(&mut self, n: usize, v: T) {
        self.coeffs[n] = v;
    }

    fn same_cap(&self, other: &Self) -> Result<()> {
        if self.cap() != other.cap() {
            return Err(Error::CapMismatch(self.cap(), other.cap()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_cap(other)?;
        Ok(Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.add(b)).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_cap(other)?;
        Ok(Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.sub(b)).collect() })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a.scale(c)).collect() }
    }

    /// Cauchy product `(ab)_n = Σ_k a_k b_{n−k}`, `a` on the left.
    pub fn multiply(&self, other: &Self, prod: &impl Product<T>) -> Result<Self> {
        self.same_cap(other)?;
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for n in 0..=self.cap() {
            let mut acc = self.coeffs[0].zero_like();
            for k in 0..=n {
                if self.coeffs[k].is_zero() || other.coeffs[n - k].is_zero() {
                    continue;
                }
                acc = acc.add(&prod.mul(&self.coeffs[k], &other.coeffs[n - k])?);
            }
            coeffs.push(acc);
        }
        Ok(Self { coeffs })
    }

    /// Two-sided inverse for `a_0 = 1`: `b_0 = 1`, `b_n = −Σ_{k=1}^n a_k b_{n−k}`.
    pub fn invert(&self, prod: &impl Product<T>) -> Result<Self> {
        let unit = prod.unit(&self.coeffs[0]);
        if self.coeffs[0].distance(&unit) != 0.0 {
            return Err(Error::NotUnit);
        }
        let mut b: Vec<T> = vec![unit];
        for n in 1..=self.cap() {
            let mut acc = self.coeffs[0].zero_like();
            for k in 1..=n {
                if self.coeffs[k].is_zero() || b[n - k].is_zero() {
                    continue;
                }
                acc = acc.add(&prod.mul(&self.coeffs[k], &b[n - k])?);
            }
            b.push(acc.scale(Complex64::new(-1.0, 0.0)));
        }
        Ok(Self { coeffs: b })
    }

    /// Per-order distances to `other`.
    pub fn distances(&self, other: &Self) -> Result<Vec<f64>> {
        self.same_cap(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.distance(b)).collect())
    }

    pub fn truncate(&self, cap: usize) -> Self {
        Self { coeffs: self.coeffs[..=cap.min(self.cap())].to_vec() }
    }

    pub fn map<U: Linear>(&self, f: impl Fn(&T) -> U) -> LambdaSeries<U> {
        LambdaSeries { coeffs: self.coeffs.iter().map(f).collect() }
    }
}

type DirectFn<A, T> = Box<dyn Fn(&[&A]) -> Result<T> + Send + Sync>;
type DiagonalFn<A, T> = Box<dyn Fn(usize, &A) -> Result<T> + Send + Sync>;

enum Mode<A, T> {
    Direct(DirectFn<A, T>),
    Diagonal(DiagonalFn<A, T>),
}

/// `n ↦ T_n`, evaluated on demand with a memo keyed by the canonicalised
/// argument multiset. The memo is internally synchronised; concurrent misses
/// may compute the same value twice and keep either copy.
pub struct MultilinearFamily<A, T> {
    mode: Mode<A, T>,
    symmetric: bool,
    memo: Mutex<HashMap<Vec<Fingerprint>, T>>,
}

impl<A: Linear + Keyed, T: Linear> MultilinearFamily<A, T> {
    /// Family with a mixed-argument evaluator.
    pub fn direct(symmetric: bool, f: impl Fn(&[&A]) -> Result<T> + Send + Sync + 'static) -> Self {
        Self { mode: Mode::Direct(Box::new(f)), symmetric, memo: Mutex::new(HashMap::new()) }
    }

    /// Symmetric family known only on diagonals `T_n(f^{⊗n})`.
    pub fn diagonal(f: impl Fn(usize, &A) -> Result<T> + Send + Sync + 'static) -> Self {
        Self { mode: Mode::Diagonal(Box::new(f)), symmetric: true, memo: Mutex::new(HashMap::new()) }
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn has_direct(&self) -> bool {
        matches!(self.mode, Mode::Direct(_))
    }

    fn memo_key(&self, args: &[&A]) -> Vec<Fingerprint> {
        let mut key: Vec<Fingerprint> = args.iter().map(|a| a.key()).collect();
        if self.symmetric {
            key.sort();
        }
        key
    }

    /// `T_n(args)` with `n = args.len()`.
    pub fn eval(&self, args: &[&A]) -> Result<T> {
        let key = self.memo_key(args);
        if let Some(v) = self.memo.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let value = match &self.mode {
            Mode::Direct(f) => f(args)?,
            Mode::Diagonal(d) if key.windows(2).all(|w| w[0] == w[1]) => d(args.len(), args[0])?,
            Mode::Diagonal(d) => polarize(|x| d(args.len(), x), args)?,
        };
        self.memo.lock().unwrap().entry(key).or_insert_with(|| value.clone());
        Ok(value)
    }

    /// `T_n(f^{⊗n})`.
    pub fn eval_diagonal(&self, n: usize, f: &A) -> Result<T> {
        match &self.mode {
            Mode::Diagonal(d) => d(n, f),
            Mode::Direct(_) => self.eval(&vec![f; n]),
        }
    }
}

/// `T_n(f_1,…,f_n) = (1/n!) Σ_{∅≠S⊆[n]} (−1)^{n−|S|} T_n((Σ_{i∈S} f_i)^{⊗n})`.
pub fn polarize<A: Linear, T: Linear>(diag: impl Fn(&A) -> Result<T>, args: &[&A]) -> Result<T> {
    let n = args.len();
    if n == 0 {
        return Err(Error::Precondition("polarization needs at least one argument".into()));
    }
    let mut acc: Option<T> = None;
    for mask in 1u64..(1u64 << n) {
        let mut sum = args[0].zero_like();
        let mut size = 0;
        for (i, a) in args.iter().enumerate() {
            if mask >> i & 1 == 1 {
                sum = sum.add(a);
                size += 1;
            }
        }
        let sign = if (n - size).is_multiple_of(2) { 1.0 } else { -1.0 };
        let v = diag(&sum)?.scale(Complex64::new(sign, 0.0));
        acc = Some(match acc {
            None => v,
            Some(a) => a.add(&v),
        });
    }
    Ok(acc.unwrap().scale(Complex64::new(1.0 / factorial(n), 0.0)))
}

/// Integer partitions of `n` as nonincreasing part lists.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=max.min(n)).rev() {
            cur.push(p);
            rec(n - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// Coefficients of `unit + Σ_k (1/k!) prefactor(k) T_k(g^{⊗k})` for a series
/// argument `g` with `g_0 = 0`. The order-`N` coefficient is
/// `Σ_k prefactor(k)/k! Σ_{m_1+…+m_k=N} T_k(g_{m_1},…,g_{m_k})`, summed here
/// over partitions with weight `1/Π mult!` (the compositions of one partition
/// number `k!/Π mult!`). `unit = None` leaves order 0 at zero.
pub fn expand_on_series_argument<A: Linear + Keyed, T: Linear>(
    family: &MultilinearFamily<A, T>,
    g: &LambdaSeries<A>,
    prefactor: impl Fn(usize) -> HbarScalar,
    unit: Option<T>,
    like: &T,
) -> Result<LambdaSeries<T>> {
    if !g.coeff(0).is_zero() {
        return Err(Error::Precondition("series argument must vanish at order 0".into()));
    }
    let cap = g.cap();
    let mut out = LambdaSeries::zero(cap, like);
    if let Some(u) = unit {
        out.set(0, u);
    }
    for n in 1..=cap {
        let mut acc = like.zero_like();
        for parts in partitions(n) {
            if parts.iter().any(|&m| g.coeff(m).is_zero()) {
                continue;
            }
            let mut weight = 1.0;
            let mut i = 0;
            while i < parts.len() {
                let j = parts[i..].iter().take_while(|&&p| p == parts[i]).count();
                weight /= factorial(j);
                i += j;
            }
            let args: Vec<&A> = parts.iter().map(|&m| g.coeff(m)).collect();
            let v = family.eval(&args)?;
            acc = acc.add(&v.scale_hbar(&prefactor(parts.len())).scale(Complex64::new(weight, 0.0)));
        }
        out.set(n, acc);
    }
    Ok(out)
}

/// `(S∘Z)(λf)`: builds `g_1 = f`, `g_m = Z_m(f^{⊗m})/m!` and expands `S` on it.
/// `z` must return `f` at `m = 1`.
pub fn compose_sz<A: Linear + Keyed, T: Linear>(
    s_family: &MultilinearFamily<A, T>,
    s_prefactor: impl Fn(usize) -> HbarScalar,
    s_unit: Option<T>,
    like: &T,
    z: impl Fn(usize, &A) -> Result<A>,
    f: &A,
    cap: usize,
) -> Result<LambdaSeries<T>> {
    let z1 = z(1, f)?;
    if z1.distance(f) != 0.0 {
        return Err(Error::Precondition("renormalization map violates Z = id + O(λ)".into()));
    }
    let mut g = LambdaSeries::zero(cap, f);
    for m in 1..=cap {
        g.set(m, z(m, f)?.scale(Complex64::new(1.0 / factorial(m), 0.0)));
    }
    expand_on_series_argument(s_family, &g, s_prefactor, s_unit, like)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(re: f64) -> HbarScalar {
        HbarScalar::real(re)
    }

    fn series(xs: &[f64]) -> LambdaSeries<HbarScalar> {
        LambdaSeries::new(xs.iter().map(|&x| h(x)).collect())
    }

    /// `T_k(x_1..x_k) = c_k Π x_i` on scalars.
    fn product_family(c: Vec<f64>) -> MultilinearFamily<HbarScalar, HbarScalar> {
        MultilinearFamily::direct(true, move |args: &[&HbarScalar]| {
            let k = args.len();
            let mut p = h(*c.get(k).unwrap_or(&0.0));
            for a in args {
                p = &p * *a;
            }
            Ok(p)
        })
    }

    /// Truncated polynomial arithmetic in λ (independent oracle).
    fn poly_mul(a: &[f64], b: &[f64], cap: usize) -> Vec<f64> {
        let mut out = vec![0.0; cap + 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                if i + j <= cap {
                    out[i + j] += x * y;
                }
            }
        }
        out
    }

    #[test]
    fn multiply_examples() {
        let a = series(&[1.0, 2.0, 0.0]);
        let b = series(&[1.0, -2.0, 0.0]);
        assert_eq!(a.multiply(&b, &ScalarProduct).unwrap(), series(&[1.0, 0.0, -4.0]));
        let unit = series(&[1.0, 0.0, 0.0]);
        assert_eq!(a.multiply(&unit, &ScalarProduct).unwrap(), a);
        assert!(matches!(a.multiply(&series(&[1.0]), &ScalarProduct), Err(Error::CapMismatch(2, 0))));
    }

    #[test]
    fn invert_examples() {
        let unit = series(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(unit.invert(&ScalarProduct).unwrap(), unit);
        let x = 0.7;
        let a = series(&[1.0, x, 0.0, 0.0]);
        let inv = a.invert(&ScalarProduct).unwrap();
        let expect = series(&[1.0, -x, x * x, -x * x * x]);
        assert!(inv.distances(&expect).unwrap().iter().all(|&d| d < 1e-15));
        assert!(matches!(series(&[2.0, 1.0]).invert(&ScalarProduct), Err(Error::NotUnit)));
        let back = inv.invert(&ScalarProduct).unwrap();
        assert!(back.distances(&a).unwrap().iter().all(|&d| d < 1e-15));
    }

    #[test]
    fn expansion_on_single_order_argument() {
        let fam = product_family(vec![0.0, 1.0, 3.0, 5.0, 7.0]);
        let f = h(0.9);
        let g = LambdaSeries::linear(&f, 4);
        let pref = |k: usize| HbarScalar::i_over_hbar_pow(k);
        let out = expand_on_series_argument(&fam, &g, pref, Some(HbarScalar::one()), &h(0.0)).unwrap();
        let c = [0.0, 1.0, 3.0, 5.0, 7.0];
        for n in 1..=4 {
            let expect = HbarScalar::i_over_hbar_pow(n).scale(Complex64::new(c[n] * 0.9f64.powi(n as i32) / factorial(n), 0.0));
            assert!((out.coeff(n) - &expect).max_abs() < 1e-14, "order {n}");
        }
        // affine case
        let affine = product_family(vec![0.0, 1.0]);
        let g = series(&[0.0, 0.5, -0.25, 0.125]);
        let out = expand_on_series_argument(&affine, &g, |_| HbarScalar::one(), Some(HbarScalar::one()), &h(0.0)).unwrap();
        assert_eq!(out, series(&[1.0, 0.5, -0.25, 0.125]));
        assert!(expand_on_series_argument(&affine, &series(&[1.0, 0.0]), |_| HbarScalar::one(), None, &h(0.0)).is_err());
    }

    #[test]
    fn composition_matches_polynomial_oracle() {
        // S(x) = 1 + Σ s_k x^k / k!, Z(λf) = λf + Σ z_m f^m λ^m / m!
        let s = vec![0.0, 1.0, 0.6, -0.4, 0.3];
        let z = vec![0.0, 1.0, 0.5, -0.2, 0.1];
        let f = 0.8;
        let cap = 4;
        let fam = product_family(s.clone());
        let zc = z.clone();
        let out = compose_sz(
            &fam,
            |_| HbarScalar::one(),
            Some(HbarScalar::one()),
            &h(0.0),
            move |m, x: &HbarScalar| Ok(x.scale(Complex64::new(zc[m] * x.coeff(0).re.powi(m as i32 - 1), 0.0))),
            &h(f),
            cap,
        )
        .unwrap();
        let zser: Vec<f64> = (0..=cap).map(|m| if m == 0 { 0.0 } else { z[m] * f.powi(m as i32) / factorial(m) }).collect();
        let mut oracle = vec![0.0; cap + 1];
        oracle[0] = 1.0;
        let mut power = vec![1.0, 0.0, 0.0, 0.0, 0.0];
        for k in 1..=cap {
            power = poly_mul(&power, &zser, cap);
            for n in 0..=cap {
                oracle[n] += s[k] / factorial(k) * power[n];
            }
        }
        for n in 0..=cap {
            assert!((out.coeff(n).coeff(0).re - oracle[n]).abs() < 1e-14, "order {n}");
        }
        // Z = id leaves S unchanged
        let id = compose_sz(&fam, |_| HbarScalar::one(), Some(HbarScalar::one()), &h(0.0), |m, x: &HbarScalar| Ok(if m == 1 { x.clone() } else { h(0.0) }), &h(f), cap).unwrap();
        for n in 1..=cap {
            assert!((id.coeff(n).coeff(0).re - s[n] * f.powi(n as i32) / factorial(n)).abs() < 1e-14);
        }
        // Z_1 must be the identity
        assert!(compose_sz(&fam, |_| HbarScalar::one(), None, &h(0.0), |_, x: &HbarScalar| Ok(x.scale(Complex64::new(2.0, 0.0))), &h(f), cap).is_err());
    }

    #[test]
    fn polarization_roundtrip() {
        let direct = product_family(vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        let diag = MultilinearFamily::diagonal(|n, x: &HbarScalar| {
            let mut p = h(n as f64);
            for _ in 0..n {
                p = &p * x;
            }
            Ok(p)
        });
        let xs = [h(0.3), h(-1.2), h(0.7), h(2.0)];
        for n in 1..=4 {
            let args: Vec<&HbarScalar> = xs[..n].iter().collect();
            let a = direct.eval(&args).unwrap();
            let b = diag.eval(&args).unwrap();
            assert!((&a - &b).max_abs() < 1e-12, "n = {n}");
        }
        assert!(!diag.has_direct());
    }

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (1..=6).map(|n| partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11]);
    }
}
