//! Local densities on the first jet and generalized Lagrangians built from them.
//!
//! A density at `x = (t, s)` is a polynomial in `φ(x)`, the forward time
//! difference `φ(t+1, s) − φ(x)` and the forward space difference
//! `φ(t, s+1) − φ(x)`. Sites past the last time row read as zero.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::PolyFunctional;
use crate::hbar::HbarScalar;
use crate::lattice::{FieldConfiguration, LatticePoint, LatticeShape, Region};

/// Stencil radius of every density.
pub const STENCIL_RADIUS: usize = 1;

/// `c · φ^a (∂_t φ)^b (∂_x φ)^c`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetTerm {
    pub coeff: Complex64,
    pub powers: [u32; 3],
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct JetDensity {
    pub terms: Vec<JetTerm>,
}

impl JetDensity {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, coeff: f64, phi: u32, dt: u32, dx: u32) -> Self {
        self.terms.push(JetTerm { coeff: Complex64::new(coeff, 0.0), powers: [phi, dt, dx] });
        self
    }

    /// `φⁿ`.
    pub fn power(coeff: f64, n: u32) -> Self {
        Self::new().term(coeff, n, 0, 0)
    }

    /// `½[(∂_t φ)² − (∂_x φ)² − m²φ²]`.
    pub fn free_scalar(mass: f64) -> Self {
        Self::new().term(0.5, 0, 2, 0).term(-0.5, 0, 0, 2).term(-0.5 * mass * mass, 2, 0, 0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.powers.iter().sum()).max().unwrap_or(0)
    }

    /// The density at `p` as a functional of the field.
    pub fn at(&self, shape: LatticeShape, p: LatticePoint) -> PolyFunctional {
        let here = PolyFunctional::field(shape, p);
        let next_t = if p.t + 1 < shape.nt {
            PolyFunctional::field(shape, LatticePoint::new(p.t + 1, p.x))
        } else {
            PolyFunctional::zero(shape)
        };
        let next_x = PolyFunctional::field(shape, LatticePoint::new(p.t, (p.x + 1) % shape.nx));
        let jets = [here.clone(), next_t.sub(&here), next_x.sub(&here)];
        let mut out = PolyFunctional::zero(shape);
        for term in &self.terms {
            let mut f = PolyFunctional::constant(shape, HbarScalar::constant(term.coeff));
            for (jet, &k) in jets.iter().zip(&term.powers) {
                for _ in 0..k {
                    f = f.mul(jet);
                }
            }
            out = out.add(&f);
        }
        out
    }
}

/// `Σ_{x ∈ window} density_x`.
pub fn local_functional_from_density(density: &JetDensity, window: &Region) -> PolyFunctional {
    let shape = window.shape();
    window.points().fold(PolyFunctional::zero(shape), |acc, p| acc.add(&density.at(shape, p)))
}

/// `f ↦ L(f) = Σ_x f(x)·density_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedLagrangian {
    shape: LatticeShape,
    density: JetDensity,
}

impl GeneralizedLagrangian {
    pub fn new(shape: LatticeShape, density: JetDensity) -> Self {
        Self { shape, density }
    }

    pub fn free_scalar(shape: LatticeShape, mass: f64) -> Self {
        Self::new(shape, JetDensity::free_scalar(mass))
    }

    pub fn shape(&self) -> LatticeShape {
        self.shape
    }

    pub fn density(&self) -> &JetDensity {
        &self.density
    }

    pub fn apply(&self, f: &FieldConfiguration) -> Result<PolyFunctional> {
        self.shape.ensure_same(&f.shape())?;
        let mut out = PolyFunctional::zero(self.shape);
        for (i, &w) in f.values().iter().enumerate() {
            if w != Complex64::new(0.0, 0.0) {
                out.add_scaled(&self.density.at(self.shape, self.shape.point(i)), w);
            }
        }
        Ok(out)
    }

    /// `L(χ_R)` for the indicator of a region.
    pub fn on_region(&self, r: &Region) -> Result<PolyFunctional> {
        self.apply(&indicator(r))
    }

    /// Standard admissible cutoff for `ψ`: the indicator of its support
    /// fattened by the stencil radius.
    pub fn cutoff_for(&self, psi: &FieldConfiguration) -> Result<Region> {
        self.shape.ensure_same(&psi.shape())?;
        let supp = psi.support();
        if supp.len() == self.shape.sites() {
            return Err(Error::Precondition("ψ is supported on the whole lattice; no compact cutoff exists".into()));
        }
        Ok(supp.fattened(STENCIL_RADIUS))
    }

    /// `φ ↦ δL(ψ)[φ] = L(f)[φ+ψ] − L(f)[φ]` with `f` the standard cutoff.
    pub fn delta_l(&self, psi: &FieldConfiguration) -> Result<PolyFunctional> {
        let cut = self.cutoff_for(psi)?;
        self.delta_l_with_cutoff(psi, &cut)
    }

    /// As [`Self::delta_l`] with an explicit cutoff region, which must
    /// contain the stencil-fattened support of `ψ`.
    pub fn delta_l_with_cutoff(&self, psi: &FieldConfiguration, cutoff: &Region) -> Result<PolyFunctional> {
        let need = psi.support().fattened(STENCIL_RADIUS);
        if !need.is_subset(cutoff) {
            return Err(Error::Precondition("cutoff is not identically 1 near supp ψ".into()));
        }
        let lf = self.on_region(cutoff)?;
        Ok(lf.shifted(psi)?.sub(&lf))
    }

    /// `dL(φ)(y) = ∂L(1)/∂φ(y)` at `φ`; equals `Pφ` on interior rows for the
    /// free scalar.
    pub fn euler_lagrange(&self, phi: &FieldConfiguration) -> Result<FieldConfiguration> {
        let all = Region::from_sites(self.shape, 0..self.shape.sites());
        let l = self.on_region(&all)?;
        let d1 = l.derivative(1, phi)?;
        let mut out = FieldConfiguration::zeros(self.shape);
        for (k, v) in d1 {
            out.set(self.shape.point(k[0] as usize), v.coeff(0));
        }
        Ok(out)
    }
}

pub fn indicator(r: &Region) -> FieldConfiguration {
    FieldConfiguration::from_fn(r.shape(), |p| {
        if r.contains(p) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::check_additivity;
    use crate::lattice::Lattice;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn field(rng: &mut ChaCha8Rng, s: LatticeShape, region: Option<&Region>) -> FieldConfiguration {
        FieldConfiguration::from_fn(s, |p| {
            if region.is_none_or(|r| r.contains(p)) {
                Complex64::new(rng.gen_range(-1.0..1.0), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn single_point_square() {
        let s = LatticeShape { nt: 6, nx: 6 };
        let a = LatticePoint::new(2, 2);
        let w = Region::from_points(s, [a]).unwrap();
        let f = local_functional_from_density(&JetDensity::power(1.0, 2), &w);
        assert_eq!(f, PolyFunctional::monomial(s, &[a, a], HbarScalar::one()));
    }

    #[test]
    fn free_density_expands_to_forward_differences() {
        let s = LatticeShape { nt: 6, nx: 6 };
        let m = 0.5;
        let p = LatticePoint::new(2, 5);
        let f = JetDensity::free_scalar(m).at(s, p);
        let x = s.index(p) as u32;
        let t1 = s.index(LatticePoint::new(3, 5)) as u32;
        let x1 = s.index(LatticePoint::new(2, 0)) as u32;
        let c = |v: f64| HbarScalar::real(v);
        let expect = PolyFunctional::from_terms(
            s,
            [
                (vec![t1, t1], c(0.5)),
                (vec![x, t1], c(-1.0)),
                (vec![x1, x1], c(-0.5)),
                (vec![x, x1], c(1.0)),
                (vec![x, x], c(0.5 - 0.5 - 0.5 * m * m)),
            ],
        );
        assert_eq!(f, expect);
    }

    #[test]
    fn densities_are_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = LatticeShape { nt: 8, nx: 8 };
        let window = Region::rectangle(s, 1, 7, 0, 8);
        let dens = JetDensity::free_scalar(0.5).term(0.3, 4, 0, 0).term(0.2, 1, 1, 1);
        let f = local_functional_from_density(&dens, &window);
        let a = Region::rectangle(s, 1, 3, 0, 2);
        let b = Region::rectangle(s, 5, 7, 4, 6);
        let samples: Vec<_> = (0..20).map(|_| (field(&mut rng, s, Some(&a)), field(&mut rng, s, None), field(&mut rng, s, Some(&b)))).collect();
        let r = check_additivity(&f, &samples, STENCIL_RADIUS, 1e-12).unwrap();
        assert!(r.passed(), "{}", r.summary());
    }

    #[test]
    fn delta_l_cutoff_independent_and_two_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = LatticeShape { nt: 10, nx: 10 };
        let l = GeneralizedLagrangian::free_scalar(s, 0.5);
        let region = Region::rectangle(s, 4, 6, 3, 5);
        let psi = field(&mut rng, s, Some(&region));
        let phi = field(&mut rng, s, None);
        let d1 = l.delta_l(&psi).unwrap();
        let d2 = l.delta_l_with_cutoff(&psi, &psi.support().fattened(2)).unwrap();
        assert!(d1.max_abs_diff(&d2) < 1e-12);
        // direct subtraction with f ≡ 1
        let all = Region::from_sites(s, 0..s.sites());
        let lf = l.on_region(&all).unwrap();
        let direct = &lf.evaluate(&phi.add(&psi)).unwrap() - &lf.evaluate(&phi).unwrap();
        assert!((&d1.evaluate(&phi).unwrap() - &direct).max_abs() < 1e-12);
        assert!(l.delta_l(&FieldConfiguration::zeros(s)).unwrap().is_zero());
        let full = FieldConfiguration::from_fn(s, |_| Complex64::new(1.0, 0.0));
        assert!(l.delta_l(&full).is_err());
    }

    #[test]
    fn euler_lagrange_is_klein_gordon() {
        let lat = Lattice::new(10, 16, 0.5).unwrap();
        let s = lat.shape();
        let l = GeneralizedLagrangian::free_scalar(s, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi = field(&mut rng, s, None);
        let dl = l.euler_lagrange(&phi).unwrap();
        let p = lat.klein_gordon_apply(&phi);
        assert!(dl.sub(&p).interior_max_abs() < 1e-12);

        let k = 2.0 * PI * 3.0 / 16.0;
        let rhs: f64 = 4.0 * (k / 2.0).sin().powi(2) + 0.25;
        let w = 2.0 * (rhs.sqrt() / 2.0).asin();
        let wave = FieldConfiguration::from_fn(s, |q| Complex64::new((k * q.x as f64 - w * q.t as f64).cos(), 0.0));
        assert!(l.euler_lagrange(&wave).unwrap().interior_max_abs() < 1e-10);

        // difference quotient of δL
        let region = Region::rectangle(s, 3, 6, 2, 6);
        let psi = field(&mut rng, s, Some(&region));
        let t = 1e-5;
        let quot = |h: f64| l.delta_l(&psi.scale(Complex64::new(h, 0.0))).unwrap().evaluate(&phi).unwrap().coeff(0);
        // symmetric quotient: the O(t) term of a quadratic L cancels
        let q = (quot(t) - quot(-t)) / (2.0 * t);
        let pairing: Complex64 = dl.values().iter().zip(psi.values()).map(|(a, b)| a * b).sum();
        assert!((q - pairing).norm() < 1e-8);
    }
}
