//! Finite 1+1D Minkowski lattice: causal cones, the discrete Klein–Gordon
//! operator and its two-point kernels.
//!
//! Sites are `(t, x)` with `t ∈ [0, nt)` (open time slab) and `x ∈ [0, nx)`
//! (periodic). Spacing is `dt = dx = 1`, so the domain of dependence of the
//! leapfrog scheme is exactly the discrete light cone
//! `J⁺(p) = {q : q.t ≥ p.t, d(q.x, p.x) ≤ q.t − p.t}` with `d` the torus distance.
//!
//! Kernel convention: `K(x, y)` is indexed `(field point, source point)`.
//! `Δ^R(x, y) ≠ 0` only if `y ∈ J⁻(x)`, i.e. the retarded kernel propagates a
//! source at `y` into its future. Rows `1..nt-1` are the interior rows on
//! which operator identities are asserted.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeShape {
    pub nt: usize,
    pub nx: usize,
}

impl LatticeShape {
    pub fn sites(&self) -> usize {
        self.nt * self.nx
    }

    pub fn index(&self, p: LatticePoint) -> usize {
        p.t * self.nx + p.x
    }

    pub fn point(&self, index: usize) -> LatticePoint {
        LatticePoint { t: index / self.nx, x: index % self.nx }
    }

    /// Checked constructor accepting any integers; `x` is *not* wrapped.
    pub fn checked_point(&self, t: i64, x: i64) -> Result<LatticePoint> {
        if t < 0 || x < 0 || t as usize >= self.nt || x as usize >= self.nx {
            return Err(Error::PointOutOfRange { t, x, nt: self.nt, nx: self.nx });
        }
        Ok(LatticePoint { t: t as usize, x: x as usize })
    }

    pub fn torus_distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        d.min(self.nx - d)
    }

    /// `q ∈ J⁺(p)`.
    pub fn in_future(&self, p: LatticePoint, q: LatticePoint) -> bool {
        q.t >= p.t && self.torus_distance(q.x, p.x) <= q.t - p.t
    }

    pub fn is_interior_row(&self, t: usize) -> bool {
        t >= 1 && t + 1 < self.nt
    }

    pub fn ensure_same(&self, other: &LatticeShape) -> Result<()> {
        if self != other {
            return Err(Error::LatticeMismatch(self.nt, self.nx, other.nt, other.nx));
        }
        Ok(())
    }

    /// Chebyshev distance with periodic `x`.
    pub fn chebyshev(&self, a: LatticePoint, b: LatticePoint) -> usize {
        a.t.abs_diff(b.t).max(self.torus_distance(a.x, b.x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LatticePoint {
    pub t: usize,
    pub x: usize,
}

impl LatticePoint {
    pub fn new(t: usize, x: usize) -> Self {
        Self { t, x }
    }
}

/// A finite set of lattice sites, stored as site indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    shape: LatticeShape,
    sites: BTreeSet<usize>,
}

impl Region {
    pub fn empty(shape: LatticeShape) -> Self {
        Self { shape, sites: BTreeSet::new() }
    }

    pub fn from_points(shape: LatticeShape, points: impl IntoIterator<Item = LatticePoint>) -> Result<Self> {
        let mut sites = BTreeSet::new();
        for p in points {
            shape.checked_point(p.t as i64, p.x as i64)?;
            sites.insert(shape.index(p));
        }
        Ok(Self { shape, sites })
    }

    pub fn from_sites(shape: LatticeShape, sites: impl IntoIterator<Item = usize>) -> Self {
        let sites: BTreeSet<usize> = sites.into_iter().collect();
        debug_assert!(sites.iter().all(|&s| s < shape.sites()));
        Self { shape, sites }
    }

    /// Rectangle `t0..t1` × `x0..x1` (half-open, `x` wrapped).
    pub fn rectangle(shape: LatticeShape, t0: usize, t1: usize, x0: usize, x1: usize) -> Self {
        let mut sites = BTreeSet::new();
        for t in t0..t1.min(shape.nt) {
            for x in x0..x1 {
                sites.insert(shape.index(LatticePoint::new(t, x % shape.nx)));
            }
        }
        Self { shape, sites }
    }

    pub fn shape(&self) -> LatticeShape {
        self.shape
    }

    pub fn sites(&self) -> &BTreeSet<usize> {
        &self.sites
    }

    pub fn points(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        self.sites.iter().map(|&s| self.shape.point(s))
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        self.sites.contains(&self.shape.index(p))
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn union(&self, other: &Region) -> Region {
        Region { shape: self.shape, sites: self.sites.union(&other.sites).copied().collect() }
    }

    pub fn intersects(&self, other: &Region) -> bool {
        self.sites.iter().any(|s| other.sites.contains(s))
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.sites.is_subset(&other.sites)
    }

    /// All sites within Chebyshev distance `radius`.
    pub fn fattened(&self, radius: usize) -> Region {
        let mut sites = BTreeSet::new();
        for p in self.points() {
            let r = radius as i64;
            for dt in -r..=r {
                let t = p.t as i64 + dt;
                if t < 0 || t >= self.shape.nt as i64 {
                    continue;
                }
                for dx in -r..=r {
                    let x = (p.x as i64 + dx).rem_euclid(self.shape.nx as i64) as usize;
                    sites.insert(self.shape.index(LatticePoint::new(t as usize, x)));
                }
            }
        }
        Region { shape: self.shape, sites }
    }

    pub fn time_range(&self) -> Option<(usize, usize)> {
        let ts = self.points().map(|p| p.t);
        let (mut lo, mut hi) = (usize::MAX, 0);
        let mut any = false;
        for t in ts {
            any = true;
            lo = lo.min(t);
            hi = hi.max(t);
        }
        any.then_some((lo, hi))
    }

    /// Spatial extent on the torus is small enough that spacelike sampling is meaningful.
    pub fn spatially_compact(&self) -> bool {
        let pts: Vec<_> = self.points().collect();
        pts.iter()
            .all(|a| pts.iter().all(|b| self.shape.torus_distance(a.x, b.x) * 2 < self.shape.nx))
    }
}

/// A (possibly complex) field value per site.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldConfiguration {
    shape: LatticeShape,
    values: Vec<Complex64>,
}

impl FieldConfiguration {
    pub fn zeros(shape: LatticeShape) -> Self {
        Self { shape, values: vec![ZERO; shape.sites()] }
    }

    pub fn from_fn(shape: LatticeShape, mut f: impl FnMut(LatticePoint) -> Complex64) -> Self {
        let values = (0..shape.sites()).map(|i| f(shape.point(i))).collect();
        Self { shape, values }
    }

    pub fn from_real(shape: LatticeShape, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), shape.sites());
        Self { shape, values: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect() }
    }

    pub fn delta(shape: LatticeShape, p: LatticePoint) -> Self {
        let mut out = Self::zeros(shape);
        out.values[shape.index(p)] = Complex64::new(1.0, 0.0);
        out
    }

    pub fn shape(&self) -> LatticeShape {
        self.shape
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, p: LatticePoint) -> Complex64 {
        self.values[self.shape.index(p)]
    }

    pub fn at_site(&self, site: usize) -> Complex64 {
        self.values[site]
    }

    pub fn set(&mut self, p: LatticePoint, v: Complex64) {
        let i = self.shape.index(p);
        self.values[i] = v;
    }

    pub fn support(&self) -> Region {
        Region::from_sites(
            self.shape,
            self.values.iter().enumerate().filter(|(_, v)| **v != ZERO).map(|(i, _)| i),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            shape: self.shape,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { shape: self.shape, values: self.values.iter().map(|v| v * c).collect() }
    }

    /// Max modulus over interior rows only.
    pub fn interior_max_abs(&self) -> f64 {
        (0..self.shape.sites())
            .filter(|&i| self.shape.is_interior_row(self.shape.point(i).t))
            .map(|i| self.values[i].norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Retarded,
    Advanced,
    PauliJordan,
    Hadamard,
    Wightman,
    Feynman,
    Other,
}

/// Dense complex two-point function on lattice sites.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub kind: KernelKind,
    shape: LatticeShape,
    mass: f64,
    entries: Vec<Complex64>,
}

/// JSON dump: `{kind, nt, nx, mass, entries: [[re, im], ...]}` row-major.
#[derive(Serialize, Deserialize)]
pub struct KernelDump {
    pub kind: KernelKind,
    pub nt: usize,
    pub nx: usize,
    pub mass: f64,
    pub entries: Vec<[f64; 2]>,
}

impl Kernel {
    pub fn zeros(kind: KernelKind, shape: LatticeShape, mass: f64) -> Self {
        let n = shape.sites();
        Self { kind, shape, mass, entries: vec![ZERO; n * n] }
    }

    pub fn shape(&self) -> LatticeShape {
        self.shape
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.entries[x * self.shape.sites() + y]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: Complex64) {
        let n = self.shape.sites();
        self.entries[x * n + y] = v;
    }

    pub fn at(&self, x: LatticePoint, y: LatticePoint) -> Complex64 {
        self.get(self.shape.index(x), self.shape.index(y))
    }

    /// Entrywise `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &Kernel, b: Complex64, kind: KernelKind) -> Kernel {
        Kernel {
            kind,
            shape: self.shape,
            mass: self.mass,
            entries: self.entries.iter().zip(&other.entries).map(|(p, q)| a * p + b * q).collect(),
        }
    }

    pub fn transpose(&self) -> Kernel {
        let n = self.shape.sites();
        let mut out = self.clone();
        for x in 0..n {
            for y in 0..n {
                out.entries[x * n + y] = self.entries[y * n + x];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Kernel) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max |K(x,y) - K(y,x)|`.
    pub fn symmetry_residual(&self) -> f64 {
        self.max_abs_diff(&self.transpose())
    }

    /// `max |K(x,y) + K(y,x)|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        self.max_abs_diff(&self.transpose().combine(Complex64::new(-1.0, 0.0), self, ZERO, self.kind))
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|c| c.im == 0.0)
    }

    /// `Σ_y K(x,y) v(y)`.
    pub fn apply(&self, v: &FieldConfiguration) -> FieldConfiguration {
        let n = self.shape.sites();
        FieldConfiguration::from_fn(self.shape, |p| {
            let x = self.shape.index(p);
            (0..n).map(|y| self.entries[x * n + y] * v.values[y]).sum()
        })
    }

    pub fn to_dump(&self) -> KernelDump {
        KernelDump {
            kind: self.kind,
            nt: self.shape.nt,
            nx: self.shape.nx,
            mass: self.mass,
            entries: self.entries.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_dump(d: &KernelDump) -> Result<Kernel> {
        let shape = LatticeShape { nt: d.nt, nx: d.nx };
        if d.entries.len() != shape.sites() * shape.sites() {
            return Err(Error::InvalidConfig {
                field: "entries".into(),
                reason: format!("expected {} entries", shape.sites() * shape.sites()),
            });
        }
        Ok(Kernel {
            kind: d.kind,
            shape,
            mass: d.mass,
            entries: d.entries.iter().map(|e| Complex64::new(e[0], e[1])).collect(),
        })
    }

    /// Discrete operator applied in the first (`first = true`) or second
    /// argument; returns the max modulus over entries whose acted-on point lies
    /// on an interior row. `subtract_identity` removes `δ(x,y)`.
    pub fn operator_residual(&self, lattice: &Lattice, first: bool, subtract_identity: bool) -> f64 {
        let n = self.shape.sites();
        let mut worst: f64 = 0.0;
        for other in 0..n {
            let column = FieldConfiguration::from_fn(self.shape, |p| {
                let i = self.shape.index(p);
                if first {
                    self.entries[i * n + other]
                } else {
                    self.entries[other * n + i]
                }
            });
            let applied = lattice.klein_gordon_apply(&column);
            for i in 0..n {
                let p = self.shape.point(i);
                if !self.shape.is_interior_row(p.t) {
                    continue;
                }
                let mut r = applied.values[i];
                if subtract_identity && i == other {
                    r -= Complex64::new(1.0, 0.0);
                }
                worst = worst.max(r.norm());
            }
        }
        worst
    }

    /// Least eigenvalue of the Hermitian Gram matrix `⟨K, f̄⊗f⟩` over delta
    /// test functions (computed on the real `2n×2n` embedding).
    pub fn min_hermitian_eigenvalue(&self) -> f64 {
        let n = self.shape.sites();
        let mut real = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for x in 0..n {
            for y in 0..n {
                // Hermitian part, so roundoff asymmetry cannot leak in.
                let h = 0.5 * (self.get(x, y) + self.get(y, x).conj());
                real[(x, y)] = h.re;
                real[(x + n, y + n)] = h.re;
                real[(x, y + n)] = -h.im;
                real[(x + n, y)] = h.im;
            }
        }
        let eig = SymmetricEigen::new(real);
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Lattice geometry plus mass; all kernels are assembled from it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    nt: usize,
    nx: usize,
    mass: f64,
}

/// All kernels of one lattice, with warnings raised during assembly.
#[derive(Clone, Debug)]
pub struct Propagators {
    pub retarded: Kernel,
    pub advanced: Kernel,
    pub pauli_jordan: Kernel,
    pub hadamard: Kernel,
    pub wightman: Kernel,
    pub feynman: Kernel,
    pub warnings: Vec<String>,
}

impl Lattice {
    pub fn new(nt: usize, nx: usize, mass: f64) -> Result<Self> {
        if nt < 4 {
            return Err(Error::InvalidConfig { field: "nt".into(), reason: format!("must be >= 4, got {nt}") });
        }
        if nx < 4 {
            return Err(Error::InvalidConfig { field: "nx".into(), reason: format!("must be >= 4, got {nx}") });
        }
        if !mass.is_finite() || mass < 0.0 {
            return Err(Error::InvalidConfig { field: "mass".into(), reason: format!("must be finite and >= 0, got {mass}") });
        }
        Ok(Self { nt, nx, mass })
    }

    pub fn shape(&self) -> LatticeShape {
        LatticeShape { nt: self.nt, nx: self.nx }
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn point(&self, t: i64, x: i64) -> Result<LatticePoint> {
        self.shape().checked_point(t, x)
    }

    pub fn causal_future(&self, p: LatticePoint) -> Result<Region> {
        let shape = self.shape();
        shape.checked_point(p.t as i64, p.x as i64)?;
        Ok(Region::from_sites(
            shape,
            (0..shape.sites()).filter(|&i| shape.in_future(p, shape.point(i))),
        ))
    }

    pub fn causal_past(&self, p: LatticePoint) -> Result<Region> {
        let shape = self.shape();
        shape.checked_point(p.t as i64, p.x as i64)?;
        Ok(Region::from_sites(
            shape,
            (0..shape.sites()).filter(|&i| shape.in_future(shape.point(i), p)),
        ))
    }

    /// `A ⪯ B`: `A ∩ J⁺(B) = ∅`.
    pub fn not_later_than(&self, a: &Region, b: &Region) -> bool {
        not_later_than(a, b)
    }

    /// `(Pφ)(t,x) = −[∂²_t φ − ∂²_x φ + m²φ]` with zero padding outside the slab.
    pub fn klein_gordon_apply(&self, phi: &FieldConfiguration) -> FieldConfiguration {
        let shape = self.shape();
        let m2 = self.mass * self.mass;
        let get = |t: i64, x: usize| -> Complex64 {
            if t < 0 || t >= shape.nt as i64 {
                ZERO
            } else {
                phi.values[shape.index(LatticePoint::new(t as usize, x))]
            }
        };
        FieldConfiguration::from_fn(shape, |p| {
            let t = p.t as i64;
            let xp = (p.x + 1) % shape.nx;
            let xm = (p.x + shape.nx - 1) % shape.nx;
            let c = get(t, p.x);
            let dtt = get(t + 1, p.x) - 2.0 * c + get(t - 1, p.x);
            let dxx = get(t, xp) - 2.0 * c + get(t, xm);
            -(dtt - dxx + m2 * c)
        })
    }

    /// One leapfrog step `u(t±1) = u(t)(x+1) + u(t)(x−1) − u(t∓1) − m² u(t)`.
    fn step(&self, cur: &[f64], prev: &[f64]) -> Vec<f64> {
        let nx = self.nx;
        let m2 = self.mass * self.mass;
        (0..nx)
            .map(|x| cur[(x + 1) % nx] + cur[(x + nx - 1) % nx] - prev[x] - m2 * cur[x])
            .collect()
    }

    fn green(&self, kind: KernelKind) -> Kernel {
        let shape = self.shape();
        let mut k = Kernel::zeros(kind, shape, self.mass);
        for src in 0..shape.sites() {
            let s = shape.point(src);
            let mut rows = vec![vec![0.0; self.nx]; self.nt];
            let forward = kind == KernelKind::Retarded;
            let next = if forward { s.t + 1 } else { s.t.wrapping_sub(1) };
            if next >= self.nt {
                continue;
            }
            rows[next][s.x] = -1.0;
            let mut prev_t = s.t;
            let mut cur_t = next;
            loop {
                let nt_i = if forward { cur_t + 1 } else { cur_t.wrapping_sub(1) };
                if nt_i >= self.nt {
                    break;
                }
                let new = self.step(&rows[cur_t], &rows[prev_t]);
                rows[nt_i] = new;
                prev_t = cur_t;
                cur_t = nt_i;
            }
            for (t, row) in rows.iter().enumerate() {
                for (x, &v) in row.iter().enumerate() {
                    if v != 0.0 {
                        k.set(shape.index(LatticePoint::new(t, x)), src, Complex64::new(v, 0.0));
                    }
                }
            }
        }
        k
    }

    /// Forward time-stepping solution of `P u = δ_y` with zero data before `y`.
    pub fn green_retarded(&self) -> Kernel {
        self.green(KernelKind::Retarded)
    }

    /// Backward time-stepping solution of `P u = δ_y` with zero data after `y`.
    pub fn green_advanced(&self) -> Kernel {
        self.green(KernelKind::Advanced)
    }

    pub fn pauli_jordan(&self) -> Kernel {
        pauli_jordan(&self.green_retarded(), &self.green_advanced())
    }

    /// Symmetric part `H` of the two-point function, as a sum over spatial
    /// modes `k = 2πj/nx` of `cos(k(x−x')) Re[g_k(t) conj(g_k(t'))]`.
    ///
    /// Each `g_k` solves the temporal recurrence of the mode with
    /// `Im(g(t₀)·conj(g(t₀+1))) = 1/2`, so `2 Im W` reproduces the commutator
    /// function of the leapfrog scheme. Oscillating modes
    /// (`4 sin²(ω/2) = 4 sin²(k/2) + m² < 4`) use `g = e^{−iω(t−t₀)}/√(2 sin ω)`;
    /// the zero mode, the `ω = π` edge and the modes for which the explicit
    /// scheme is not oscillatory use `g = (r₁ − i r₂)/√2` in the real basis
    /// `r₁(t₀)=1, r₁(t₀+1)=0, r₂(t₀)=0, r₂(t₀+1)=1`, and are reported as warnings.
    pub fn hadamard_kernel(&self) -> (Kernel, Vec<String>) {
        let shape = self.shape();
        let t0 = (self.nt - 1) / 2;
        let m2 = self.mass * self.mass;
        let mut warnings = Vec::new();
        let mut modes: Vec<Vec<Complex64>> = Vec::with_capacity(self.nx);
        for j in 0..self.nx {
            let k = 2.0 * PI * j as f64 / self.nx as f64;
            let c = 2.0 - 4.0 * (k / 2.0).sin().powi(2) - m2;
            let r1 = self.temporal_solution(c, t0, 1.0, 0.0);
            let r2 = self.temporal_solution(c, t0, 0.0, 1.0);
            let (alpha, beta) = if c.abs() < 2.0 - 1e-12 {
                let omega = (c / 2.0).acos();
                let norm = 1.0 / (2.0 * omega.sin()).sqrt();
                (Complex64::new(norm, 0.0), Complex64::from_polar(norm, -omega))
            } else {
                let kind = if (c - 2.0).abs() <= 1e-12 {
                    "zero mode (omega = 0)"
                } else if (c + 2.0).abs() <= 1e-12 {
                    "edge mode (omega = pi)"
                } else {
                    "non-oscillatory leapfrog mode"
                };
                warnings.push(format!(
                    "mode j={j} (k={k:.4}) is a {kind}; using the symmetric pseudo-vacuum for it"
                ));
                let s = std::f64::consts::FRAC_1_SQRT_2;
                (Complex64::new(s, 0.0), Complex64::new(0.0, -s))
            };
            modes.push(r1.iter().zip(&r2).map(|(&a, &b)| alpha * a + beta * b).collect());
        }
        let mut h = Kernel::zeros(KernelKind::Hadamard, shape, self.mass);
        let n = shape.sites();
        let inv_nx = 1.0 / self.nx as f64;
        for xi in 0..n {
            let p = shape.point(xi);
            for yi in xi..n {
                let q = shape.point(yi);
                let dx = (p.x as f64) - (q.x as f64);
                let mut acc = 0.0;
                for (j, g) in modes.iter().enumerate() {
                    let k = 2.0 * PI * j as f64 / self.nx as f64;
                    acc += (k * dx).cos() * (g[p.t] * g[q.t].conj()).re;
                }
                let v = Complex64::new(acc * inv_nx, 0.0);
                h.set(xi, yi, v);
                h.set(yi, xi, v);
            }
        }
        (h, warnings)
    }

    /// Solution of `u(t+1) + u(t−1) = c·u(t)` with `u(t₀)=a, u(t₀+1)=b`.
    fn temporal_solution(&self, c: f64, t0: usize, a: f64, b: f64) -> Vec<f64> {
        let mut u = vec![0.0; self.nt];
        u[t0] = a;
        if t0 + 1 < self.nt {
            u[t0 + 1] = b;
        }
        for t in (t0 + 1)..self.nt.saturating_sub(1) {
            u[t + 1] = c * u[t] - u[t - 1];
        }
        // backward: u(t−1) = c·u(t) − u(t+1)
        let mut hi = if t0 + 1 < self.nt { b } else { c * a };
        let mut cur = a;
        for t in (0..t0).rev() {
            let prev = c * cur - hi;
            u[t] = prev;
            hi = cur;
            cur = prev;
        }
        u
    }

    pub fn propagators(&self) -> Propagators {
        let retarded = self.green_retarded();
        let advanced = self.green_advanced();
        let pj = pauli_jordan(&retarded, &advanced);
        let (hadamard, mut warnings) = self.hadamard_kernel();
        if self.mass == 0.0 {
            warnings.insert(0, "m = 0: zero mode handled by infrared regularization".into());
        }
        let wightman = wightman(&pj, &hadamard);
        let feynman = feynman(&retarded, &advanced, &hadamard);
        Propagators { retarded, advanced, pauli_jordan: pj, hadamard, wightman, feynman, warnings }
    }
}

/// `A ⪯ B`: no point of `A` lies in the causal future of `B`.
pub fn not_later_than(a: &Region, b: &Region) -> bool {
    let shape = a.shape();
    !a.points().any(|p| b.points().any(|q| shape.in_future(q, p)))
}

pub fn spacelike(a: &Region, b: &Region) -> bool {
    not_later_than(a, b) && not_later_than(b, a)
}

/// `Δ = Δ^R − Δ^A`.
pub fn pauli_jordan(retarded: &Kernel, advanced: &Kernel) -> Kernel {
    retarded.combine(Complex64::new(1.0, 0.0), advanced, Complex64::new(-1.0, 0.0), KernelKind::PauliJordan)
}

/// `W = (i/2)Δ + H`.
pub fn wightman(pauli_jordan: &Kernel, hadamard: &Kernel) -> Kernel {
    pauli_jordan.combine(0.5 * I, hadamard, Complex64::new(1.0, 0.0), KernelKind::Wightman)
}

/// `Δ^F = (i/2)(Δ^A + Δ^R) + H`.
pub fn feynman(retarded: &Kernel, advanced: &Kernel, hadamard: &Kernel) -> Kernel {
    retarded
        .combine(0.5 * I, advanced, 0.5 * I, KernelKind::Feynman)
        .combine(Complex64::new(1.0, 0.0), hadamard, Complex64::new(1.0, 0.0), KernelKind::Feynman)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(nt: usize, nx: usize, m: f64) -> Lattice {
        Lattice::new(nt, nx, m).unwrap()
    }

    #[test]
    fn validation() {
        assert!(matches!(Lattice::new(3, 8, 0.5), Err(Error::InvalidConfig { field, .. }) if field == "nt"));
        assert!(Lattice::new(8, 3, 0.5).is_err());
        assert!(Lattice::new(8, 8, -1.0).is_err());
        assert!(Lattice::new(8, 8, f64::NAN).is_err());
        assert!(lat(8, 8, 0.0).point(8, 0).is_err());
    }

    #[test]
    fn cone_rows() {
        let l = lat(8, 8, 0.5);
        let fut = l.causal_future(LatticePoint::new(0, 0)).unwrap();
        let row1: Vec<usize> = fut.points().filter(|p| p.t == 1).map(|p| p.x).collect();
        assert_eq!(row1, vec![0, 1, 7]);
        let row0: Vec<_> = fut.points().filter(|p| p.t == 0).collect();
        assert_eq!(row0, vec![LatticePoint::new(0, 0)]);
        // brute-force count on 4x8
        let l = lat(4, 8, 0.5);
        let fut = l.causal_future(LatticePoint::new(0, 0)).unwrap();
        let brute = (0..4usize)
            .flat_map(|t| (0..8usize).map(move |x| (t, x)))
            .filter(|&(t, x)| {
                let d = x.min(8 - x);
                d <= t
            })
            .count();
        assert_eq!(brute, 16);
        assert_eq!(fut.len(), 16);
        let past = l.causal_past(LatticePoint::new(3, 4)).unwrap();
        assert_eq!(past.len(), 16);
    }

    #[test]
    fn not_later_than_examples() {
        let l = lat(8, 8, 0.5);
        let s = l.shape();
        let a = Region::from_points(s, [LatticePoint::new(0, 0)]).unwrap();
        let b = Region::from_points(s, [LatticePoint::new(3, 0)]).unwrap();
        assert!(l.not_later_than(&a, &b));
        assert!(!l.not_later_than(&b, &a));
        assert!(!l.not_later_than(&a, &a));
        let l = lat(8, 16, 0.5);
        let s = l.shape();
        let a = Region::from_points(s, [LatticePoint::new(2, 0)]).unwrap();
        let b = Region::from_points(s, [LatticePoint::new(2, 4)]).unwrap();
        assert!(spacelike(&a, &b));
    }

    #[test]
    fn klein_gordon_examples() {
        let l = lat(8, 8, 0.0);
        let s = l.shape();
        let zero = FieldConfiguration::zeros(s);
        assert_eq!(l.klein_gordon_apply(&zero).interior_max_abs(), 0.0);
        let linear = FieldConfiguration::from_fn(s, |p| Complex64::new(p.t as f64, 0.0));
        assert_eq!(l.klein_gordon_apply(&linear).interior_max_abs(), 0.0);

        let m = 0.5;
        let l = lat(10, 16, m);
        let s = l.shape();
        let k = 2.0 * PI * 2.0 / 16.0;
        let rhs: f64 = 4.0 * (k / 2.0).sin().powi(2) + m * m;
        let omega = 2.0 * (rhs.sqrt() / 2.0).asin();
        let wave = FieldConfiguration::from_fn(s, |p| {
            Complex64::new((k * p.x as f64 - omega * p.t as f64).cos(), 0.0)
        });
        assert!(l.klein_gordon_apply(&wave).interior_max_abs() < 1e-12);
    }

    #[test]
    fn green_support_and_identity() {
        let l = lat(8, 8, 0.5);
        let s = l.shape();
        let r = l.green_retarded();
        let a = l.green_advanced();
        for x in 0..s.sites() {
            for y in 0..s.sites() {
                let (px, py) = (s.point(x), s.point(y));
                if r.get(x, y) != ZERO {
                    assert!(s.in_future(py, px));
                }
                if a.get(x, y) != ZERO {
                    assert!(s.in_future(px, py));
                }
                assert_eq!(a.get(x, y), r.get(y, x));
            }
        }
        assert!(r.operator_residual(&l, true, true) < 1e-10);
        assert!(a.operator_residual(&l, true, true) < 1e-10);
    }

    #[test]
    fn retarded_first_step_is_stencil() {
        let l = lat(8, 8, 0.0);
        let r = l.green_retarded();
        let src = LatticePoint::new(2, 3);
        assert_eq!(r.at(LatticePoint::new(3, 3), src), Complex64::new(-1.0, 0.0));
        // second step: u(t+2) = u(x+1) + u(x-1) - 0
        assert_eq!(r.at(LatticePoint::new(4, 2), src), Complex64::new(-1.0, 0.0));
        assert_eq!(r.at(LatticePoint::new(4, 4), src), Complex64::new(-1.0, 0.0));
        assert_eq!(r.at(LatticePoint::new(4, 3), src), ZERO);
        assert_eq!(r.at(LatticePoint::new(1, 3), src), ZERO);
    }

    #[test]
    fn hadamard_mode_sum_reproduces_commutator() {
        let l = lat(8, 8, 0.5);
        let props = l.propagators();
        assert_eq!(props.hadamard.symmetry_residual(), 0.0);
        assert!(props.hadamard.is_real());
        assert!(props.pauli_jordan.antisymmetry_residual() < 1e-12);
        // rebuild the imaginary part of W from modes and compare to Δ/2
        let s = l.shape();
        let t0 = (l.nt - 1) / 2;
        let m2 = 0.25;
        let n = s.sites();
        let mut worst: f64 = 0.0;
        let modes: Vec<Vec<Complex64>> = (0..l.nx)
            .map(|j| {
                let k = 2.0 * PI * j as f64 / l.nx as f64;
                let c = 2.0 - 4.0 * (k / 2.0).sin().powi(2) - m2;
                let r1 = l.temporal_solution(c, t0, 1.0, 0.0);
                let r2 = l.temporal_solution(c, t0, 0.0, 1.0);
                let (al, be) = if c.abs() < 2.0 {
                    let w = (c / 2.0).acos();
                    let nm = 1.0 / (2.0 * w.sin()).sqrt();
                    (Complex64::new(nm, 0.0), Complex64::from_polar(nm, -w))
                } else {
                    let q = std::f64::consts::FRAC_1_SQRT_2;
                    (Complex64::new(q, 0.0), Complex64::new(0.0, -q))
                };
                r1.iter().zip(&r2).map(|(&a, &b)| al * a + be * b).collect()
            })
            .collect();
        for x in 0..n {
            for y in 0..n {
                let (p, q) = (s.point(x), s.point(y));
                let im: f64 = modes
                    .iter()
                    .enumerate()
                    .map(|(j, g)| {
                        let k = 2.0 * PI * j as f64 / l.nx as f64;
                        (k * (p.x as f64 - q.x as f64)).cos() * (g[p.t] * g[q.t].conj()).im
                    })
                    .sum::<f64>()
                    / l.nx as f64;
                worst = worst.max((2.0 * im - props.pauli_jordan.get(x, y).re).abs());
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn hadamard_bisolution_and_positivity() {
        let l = lat(12, 12, 0.5);
        let props = l.propagators();
        assert!(props.hadamard.operator_residual(&l, true, false) < 1e-10);
        assert!(props.hadamard.operator_residual(&l, false, false) < 1e-10);
        assert!(props.wightman.min_hermitian_eigenvalue() > -1e-10);
        let w = &props.wightman;
        let n = l.shape().sites();
        for x in 0..n {
            for y in 0..n {
                assert_eq!(2.0 * w.get(x, y).im, props.pauli_jordan.get(x, y).re);
            }
        }
        assert_eq!(props.feynman.symmetry_residual(), 0.0);
    }

    #[test]
    fn equal_time_hadamard_decreases_with_mass() {
        let p = LatticePoint::new(4, 3);
        let light = lat(10, 12, 0.5).hadamard_kernel().0.at(p, p).re;
        let heavy = lat(10, 12, 1.5).hadamard_kernel().0.at(p, p).re;
        assert!(light > heavy && heavy > 0.0);
    }

    #[test]
    fn massless_zero_mode_warns() {
        let props = lat(8, 8, 0.0).propagators();
        assert!(props.warnings.iter().any(|w| w.contains("zero mode")));
    }

    #[test]
    fn kernel_dump_roundtrip() {
        let l = lat(4, 4, 0.5);
        let k = l.pauli_jordan();
        let s = serde_json::to_string(&k.to_dump()).unwrap();
        let back = Kernel::from_dump(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back, k);
    }
}
