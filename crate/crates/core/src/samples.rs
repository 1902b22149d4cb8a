//! Seeded sample generators for the axiom suites. Region layouts scale with
//! the lattice; on the default 12×16 lattice causal triples use rows 1–3
//! (`f1`), 2–9 (`f`) and 7–10 (`f2`).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::functionals::{AdditivitySample, Monomial, PolyFunctional};
use crate::hbar::HbarScalar;
use crate::lattice::{FieldConfiguration, LatticeShape, Region};
use crate::smatrix::Triple;

pub struct SampleGenerator {
    shape: LatticeShape,
    rng: ChaCha8Rng,
}

impl SampleGenerator {
    pub fn new(shape: LatticeShape, seed: u64) -> Self {
        Self { shape, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn shape(&self) -> LatticeShape {
        self.shape
    }

    fn coeff(&mut self) -> f64 {
        let v: f64 = self.rng.gen_range(0.2..1.0);
        if self.rng.gen_bool(0.5) {
            v
        } else {
            -v
        }
    }

    fn site(&mut self, region: &Region) -> u32 {
        let n = region.len();
        *region.sites().iter().nth(self.rng.gen_range(0..n)).unwrap() as u32
    }

    /// `Σ c_j φ(x_j)^{k_j}` with `terms` distinct sites drawn from `region`,
    /// `1 ≤ k_j ≤ max_degree`, `|c_j| ≤ 1`.
    pub fn functional(&mut self, region: &Region, max_degree: usize, terms: usize) -> PolyFunctional {
        let mut out = PolyFunctional::zero(self.shape);
        let mut used = Vec::new();
        while used.len() < terms.min(region.len()) {
            let s = self.site(region);
            if used.contains(&s) {
                continue;
            }
            used.push(s);
            let k = self.rng.gen_range(1..=max_degree);
            let c = self.coeff();
            out.add_term(vec![s; k], &HbarScalar::real(c));
        }
        out
    }

    /// Monomials over arbitrary site tuples in `region`.
    pub fn general_functional(&mut self, region: &Region, max_degree: usize, terms: usize) -> PolyFunctional {
        let mut out = PolyFunctional::zero(self.shape);
        for _ in 0..terms {
            let k = self.rng.gen_range(1..=max_degree);
            let mut m: Monomial = (0..k).map(|_| self.site(region)).collect();
            m.sort_unstable();
            let c = Complex64::new(self.coeff(), self.coeff());
            out.add_term(m, &HbarScalar::constant(c));
        }
        out
    }

    /// Field with uniform values in `[-1, 1]` on `region`.
    pub fn field(&mut self, region: &Region) -> FieldConfiguration {
        let rng = &mut self.rng;
        FieldConfiguration::from_fn(self.shape, |p| {
            if region.contains(p) {
                Complex64::new(rng.gen_range(-1.0..1.0), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    fn rows(&self, t0: usize, t1: usize) -> Region {
        Region::rectangle(self.shape, t0, t1 + 1, 0, self.shape.nx)
    }

    /// `(f1, f, f2)` with `f1` strictly earlier than `f2` and `f` overlapping both.
    pub fn causal_triple(&mut self, max_degree: usize, terms: usize) -> Triple {
        let nt = self.shape.nt;
        let early = self.rows(1, (nt / 4).max(1));
        let late = self.rows(nt / 2 + 1, nt - 2);
        let middle = self.rows(2.min(nt - 2), nt - 3);
        Triple {
            f1: self.functional(&early, max_degree, terms),
            f: self.functional(&middle, max_degree, terms),
            f2: self.functional(&late, max_degree, terms),
        }
    }

    /// Pair on one time slab with supports spatially far apart.
    pub fn spacelike_pair(&mut self, max_degree: usize, terms: usize) -> (PolyFunctional, PolyFunctional) {
        let (nt, nx) = (self.shape.nt, self.shape.nx);
        let t0 = nt / 3;
        let a = Region::rectangle(self.shape, t0, t0 + 2, 0, 3);
        let b = Region::rectangle(self.shape, t0, t0 + 2, nx / 2, nx / 2 + 3);
        (self.functional(&a, max_degree, terms), self.functional(&b, max_degree, terms))
    }

    /// `n` factors on consecutive row bands of the interior, earliest first.
    pub fn causal_chain(&mut self, n: usize, max_degree: usize, terms: usize) -> Vec<PolyFunctional> {
        let rows = self.shape.nt - 2;
        let width = (rows / n).max(1);
        (0..n)
            .map(|i| {
                let t0 = 1 + i * width;
                let band = self.rows(t0, (t0 + width - 1).min(self.shape.nt - 2));
                self.functional(&band, max_degree, terms)
            })
            .collect()
    }

    /// `(φ1, φ2, φ3)` with `φ1`, `φ3` on spatial blocks at Chebyshev distance 3
    /// and `φ2` anywhere.
    pub fn additivity_sample(&mut self) -> AdditivitySample {
        let (nt, nx) = (self.shape.nt, self.shape.nx);
        let a = Region::rectangle(self.shape, 0, nt, 0, nx / 2 - 2);
        let b = Region::rectangle(self.shape, 0, nt, nx / 2, nx - 2);
        let all = Region::rectangle(self.shape, 0, nt, 0, nx);
        (self.field(&a), self.field(&all), self.field(&b))
    }

    /// Field supported on a small block of interior rows.
    pub fn interior_field(&mut self) -> FieldConfiguration {
        let nt = self.shape.nt;
        let t0 = nt / 3;
        let block = Region::rectangle(self.shape, t0, t0 + 2, 1, 4);
        self.field(&block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{not_later_than, spacelike};

    #[test]
    fn layouts_on_default_lattice() {
        let shape = LatticeShape { nt: 12, nx: 16 };
        let mut g = SampleGenerator::new(shape, 7);
        for _ in 0..10 {
            let t = g.causal_triple(2, 3);
            assert!(not_later_than(&t.f1.support(), &t.f2.support()));
            assert!(!not_later_than(&t.f2.support(), &t.f1.support()));
            assert!(t.f.max_abs() <= 1.0 && t.f.terms().len() == 3);
            let (a, b) = g.spacelike_pair(2, 2);
            assert!(spacelike(&a.support(), &b.support()));
            let chain = g.causal_chain(4, 2, 2);
            for w in chain.windows(2) {
                assert!(not_later_than(&w[0].support(), &w[1].support()));
            }
            let (p1, _, p3) = g.additivity_sample();
            let far = p1.support().points().all(|x| p3.support().points().all(|y| shape.chebyshev(x, y) > 1));
            assert!(far);
        }
    }

    #[test]
    fn seeds_reproduce() {
        let shape = LatticeShape { nt: 12, nx: 16 };
        let a = SampleGenerator::new(shape, 3).causal_triple(3, 2);
        let b = SampleGenerator::new(shape, 3).causal_triple(3, 2);
        assert_eq!(a.f.fingerprint(), b.f.fingerprint());
    }
}
