//! ⋆-product, time-ordered products and commutators on polynomial functionals.
//!
//! All products are instances of one contraction product
//! `(F ∘_K G) = Σ_n ħⁿ/n! ⟨F^(n), K^{⊗n} G^(n)⟩`: `K = W` gives `⋆`,
//! `K = Δ^F` gives `·_T`. On monomials this is a sum over partial matchings
//! between the factors of the two monomials, enumerated with multiplicities.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::{falling, multiplicities, Fingerprint, Monomial, PolyFunctional};
use crate::hbar::HbarScalar;
use crate::lattice::{FieldConfiguration, Kernel, Lattice, Propagators};

/// Which contraction orders to keep and whether to attach `ħⁿ`.
#[derive(Clone, Copy, Debug)]
pub struct Contraction {
    pub min_order: usize,
    pub max_order: usize,
    pub hbar_weight: bool,
}

impl Contraction {
    pub const FULL: Contraction = Contraction { min_order: 0, max_order: usize::MAX, hbar_weight: true };

    pub fn exactly(n: usize) -> Self {
        Self { min_order: n, max_order: n, hbar_weight: true }
    }
}

/// Contraction product with kernel `k` (first argument in `F`, second in `G`).
pub fn contraction_product(f: &PolyFunctional, g: &PolyFunctional, k: &Kernel, opts: Contraction) -> Result<PolyFunctional> {
    let shape = f.shape();
    shape.ensure_same(&g.shape())?;
    shape.ensure_same(&k.shape())?;
    let mut out = PolyFunctional::zero(shape);
    for (ma, ca) in f.terms() {
        let ga = multiplicities(ma);
        for (mb, cb) in g.terms() {
            let gb = multiplicities(mb);
            let base = ca * cb;
            let terms = monomial_contractions(&ga, &gb, k, opts);
            for (m, order, w) in terms {
                let shift = if opts.hbar_weight { order as i32 } else { 0 };
                let mut c = HbarScalar::zero();
                c.add_assign_scaled(&base, w, shift);
                out.add_term(m, &c);
            }
        }
    }
    Ok(out)
}

/// All `(remaining monomial, contraction order, weight)` for one pair of
/// monomials given as `(site, multiplicity)` runs.
fn monomial_contractions(
    ga: &[(u32, u32)],
    gb: &[(u32, u32)],
    k: &Kernel,
    opts: Contraction,
) -> Vec<(Monomial, usize, Complex64)> {
    let (na, nb) = (ga.len(), gb.len());
    let kv: Vec<Complex64> = ga
        .iter()
        .flat_map(|&(a, _)| gb.iter().map(move |&(b, _)| k.get(a as usize, b as usize)))
        .collect();
    let mut counts = vec![0u32; na * nb];
    let mut row = vec![0u32; na];
    let mut col = vec![0u32; nb];
    let mut out = Vec::new();
    struct Ctx<'a> {
        ga: &'a [(u32, u32)],
        gb: &'a [(u32, u32)],
        kv: &'a [Complex64],
        opts: Contraction,
    }
    fn rec(
        cx: &Ctx,
        cell: usize,
        order: usize,
        w: Complex64,
        counts: &mut [u32],
        row: &mut [u32],
        col: &mut [u32],
        out: &mut Vec<(Monomial, usize, Complex64)>,
    ) {
        let nb = cx.gb.len();
        if cell == counts.len() {
            if order < cx.opts.min_order {
                return;
            }
            let mut weight = w;
            let mut m = Monomial::new();
            for (i, &(a, alpha)) in cx.ga.iter().enumerate() {
                weight *= falling(alpha, row[i]);
                m.extend(std::iter::repeat_n(a, (alpha - row[i]) as usize));
            }
            for (j, &(b, beta)) in cx.gb.iter().enumerate() {
                weight *= falling(beta, col[j]);
                m.extend(std::iter::repeat_n(b, (beta - col[j]) as usize));
            }
            m.sort_unstable();
            out.push((m, order, weight));
            return;
        }
        let (i, j) = (cell / nb, cell % nb);
        let kij = cx.kv[cell];
        let cap = (cx.ga[i].1 - row[i]).min(cx.gb[j].1 - col[j]);
        let cap = if kij == Complex64::new(0.0, 0.0) { 0 } else { cap };
        let mut wn = w;
        let mut fact = 1.0;
        for n in 0..=cap {
            if order + n as usize > cx.opts.max_order {
                break;
            }
            if n > 0 {
                wn *= kij;
                fact *= n as f64;
            }
            counts[cell] = n;
            row[i] += n;
            col[j] += n;
            rec(cx, cell + 1, order + n as usize, wn / fact, counts, row, col, out);
            row[i] -= n;
            col[j] -= n;
        }
        counts[cell] = 0;
    }
    let cx = Ctx { ga, gb, kv: &kv, opts };
    rec(&cx, 0, 0, Complex64::new(1.0, 0.0), &mut counts, &mut row, &mut col, &mut out);
    out
}

/// `{F, G}(φ) = Σ F^(1)(φ)(x) Δ(x,y) G^(1)(φ)(y)`.
pub fn poisson_bracket(
    pauli_jordan: &Kernel,
    f: &PolyFunctional,
    g: &PolyFunctional,
    phi: &FieldConfiguration,
) -> Result<HbarScalar> {
    poisson_bracket_functional(pauli_jordan, f, g)?.evaluate(phi)
}

/// `{F, G}` as a functional.
pub fn poisson_bracket_functional(pauli_jordan: &Kernel, f: &PolyFunctional, g: &PolyFunctional) -> Result<PolyFunctional> {
    contraction_product(f, g, pauli_jordan, Contraction { min_order: 1, max_order: 1, hbar_weight: false })
}

/// Product data of one lattice and one choice of `H`.
pub struct StarAlgebraContext {
    pub wightman: Kernel,
    pub feynman: Kernel,
    pub pauli_jordan: Kernel,
    tn_memo: Mutex<HashMap<Vec<Fingerprint>, Arc<PolyFunctional>>>,
}

impl Clone for StarAlgebraContext {
    fn clone(&self) -> Self {
        Self::from_kernels(self.wightman.clone(), self.feynman.clone(), self.pauli_jordan.clone())
    }
}

impl std::fmt::Debug for StarAlgebraContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StarAlgebraContext").field("shape", &self.wightman.shape()).finish()
    }
}

impl StarAlgebraContext {
    pub fn new(lattice: &Lattice) -> Self {
        Self::from_propagators(&lattice.propagators())
    }

    pub fn from_propagators(p: &Propagators) -> Self {
        Self::from_kernels(p.wightman.clone(), p.feynman.clone(), p.pauli_jordan.clone())
    }

    pub fn from_kernels(wightman: Kernel, feynman: Kernel, pauli_jordan: Kernel) -> Self {
        Self { wightman, feynman, pauli_jordan, tn_memo: Mutex::new(HashMap::new()) }
    }

    /// Checks `W − (i/2)Δ` real symmetric and `Δ^F` symmetric.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let h = self.wightman.combine(Complex64::new(1.0, 0.0), &self.pauli_jordan, Complex64::new(0.0, -0.5), self.wightman.kind);
        let n = h.shape().sites();
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                worst = worst.max(h.get(x, y).im.abs()).max((h.get(x, y) - h.get(y, x)).norm());
            }
        }
        if worst > tol || self.feynman.symmetry_residual() > tol {
            return Err(Error::InvalidStructure(format!("product kernels inconsistent (residual {worst:.3e})")));
        }
        Ok(())
    }

    pub fn star(&self, f: &PolyFunctional, g: &PolyFunctional) -> Result<PolyFunctional> {
        contraction_product(f, g, &self.wightman, Contraction::FULL)
    }

    pub fn commutator(&self, f: &PolyFunctional, g: &PolyFunctional) -> Result<PolyFunctional> {
        Ok(self.star(f, g)?.sub(&self.star(g, f)?))
    }

    /// `F ·_T G`.
    pub fn time_ordered_product(&self, f: &PolyFunctional, g: &PolyFunctional) -> Result<PolyFunctional> {
        contraction_product(f, g, &self.feynman, Contraction::FULL)
    }

    /// `T_n(F_1,…,F_n) = F_1 ·_T ⋯ ·_T F_n`, symmetric in its arguments.
    /// `T_0 = 1`.
    pub fn time_ordered_tn(&self, factors: &[&PolyFunctional]) -> Result<PolyFunctional> {
        let shape = self.feynman.shape();
        if factors.is_empty() {
            return Ok(PolyFunctional::constant(shape, HbarScalar::one()));
        }
        let mut keyed: Vec<(Fingerprint, &PolyFunctional)> = factors.iter().map(|f| (f.fingerprint(), *f)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        Ok((*self.tn_sorted(&keyed)?).clone())
    }

    fn tn_sorted(&self, keyed: &[(Fingerprint, &PolyFunctional)]) -> Result<Arc<PolyFunctional>> {
        if keyed.len() == 1 {
            return Ok(Arc::new(keyed[0].1.clone()));
        }
        let key: Vec<Fingerprint> = keyed.iter().map(|k| k.0.clone()).collect();
        if let Some(v) = self.tn_memo.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let tail = self.tn_sorted(&keyed[1..])?;
        let value = Arc::new(self.time_ordered_product(keyed[0].1, &tail)?);
        self.tn_memo.lock().unwrap().entry(key).or_insert_with(|| value.clone());
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticePoint, LatticeShape, Region};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctx() -> (Lattice, StarAlgebraContext) {
        let l = Lattice::new(8, 8, 0.5).unwrap();
        let c = StarAlgebraContext::new(&l);
        (l, c)
    }

    fn random_in(rng: &mut ChaCha8Rng, s: LatticeShape, region: &Region, deg: usize, terms: usize) -> PolyFunctional {
        let sites: Vec<usize> = region.sites().iter().copied().collect();
        PolyFunctional::from_terms(
            s,
            (0..terms).map(|_| {
                let d = rng.gen_range(1..=deg);
                let m: Monomial = (0..d).map(|_| sites[rng.gen_range(0..sites.len())] as u32).collect();
                (m, HbarScalar::constant(Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            }),
        )
    }

    /// Brute-force contraction over labelled factors: every injective partial
    /// matching between positions, weighted `ħ^n Π K`.
    fn brute(f: &PolyFunctional, g: &PolyFunctional, k: &Kernel) -> PolyFunctional {
        let s = f.shape();
        let mut out = PolyFunctional::zero(s);
        for (ma, ca) in f.terms() {
            for (mb, cb) in g.terms() {
                fn go(i: usize, ma: &[u32], mb: &[u32], used: &mut Vec<bool>, keep: &mut Vec<u32>, n: usize, w: Complex64, k: &Kernel, acc: &mut Vec<(Monomial, usize, Complex64)>) {
                    if i == ma.len() {
                        let mut m = keep.clone();
                        m.extend(mb.iter().enumerate().filter(|(j, _)| !used[*j]).map(|(_, &b)| b));
                        m.sort_unstable();
                        acc.push((m, n, w));
                        return;
                    }
                    keep.push(ma[i]);
                    go(i + 1, ma, mb, used, keep, n, w, k, acc);
                    keep.pop();
                    for j in 0..mb.len() {
                        if !used[j] {
                            used[j] = true;
                            go(i + 1, ma, mb, used, keep, n + 1, w * k.get(ma[i] as usize, mb[j] as usize), k, acc);
                            used[j] = false;
                        }
                    }
                }
                let mut acc = Vec::new();
                go(0, ma, mb, &mut vec![false; mb.len()], &mut Vec::new(), 0, Complex64::new(1.0, 0.0), k, &mut acc);
                let base = ca * cb;
                for (m, n, w) in acc {
                    let mut c = HbarScalar::zero();
                    c.add_assign_scaled(&base, w, n as i32);
                    out.add_term(m, &c);
                }
            }
        }
        out
    }

    #[test]
    fn contraction_matches_labelled_enumeration() {
        let (l, c) = ctx();
        let s = l.shape();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let region = Region::rectangle(s, 2, 5, 1, 4);
        for _ in 0..10 {
            let f = random_in(&mut rng, s, &region, 4, 4);
            let g = random_in(&mut rng, s, &region, 4, 4);
            let fast = c.star(&f, &g).unwrap();
            assert!(fast.max_abs_diff(&brute(&f, &g, &c.wightman)) < 1e-12);
        }
    }

    #[test]
    fn star_examples() {
        let (l, c) = ctx();
        let s = l.shape();
        let (a, b) = (LatticePoint::new(2, 1), LatticePoint::new(4, 3));
        let one = PolyFunctional::constant(s, HbarScalar::one());
        let g = PolyFunctional::monomial(s, &[a, b, b], HbarScalar::real(2.0));
        assert_eq!(c.star(&one, &g).unwrap(), g);
        let fa = PolyFunctional::field(s, a);
        let fb = PolyFunctional::field(s, b);
        let expect = fa.mul(&fb).add(&PolyFunctional::constant(s, HbarScalar::monomial(1, c.wightman.at(a, b))));
        assert_eq!(c.star(&fa, &fb).unwrap(), expect);
        let comm = c.commutator(&fa, &fb).unwrap();
        let ihd = Complex64::new(0.0, 1.0) * c.pauli_jordan.at(a, b);
        assert!((comm.constant_term().coeff(1) - ihd).norm() < 1e-14);
        assert_eq!(comm.degree(), 0);
        // T_2 of two fields
        let t2 = c.time_ordered_tn(&[&fa, &fb]).unwrap();
        let expect = fa.mul(&fb).add(&PolyFunctional::constant(s, HbarScalar::monomial(1, c.feynman.at(a, b))));
        assert_eq!(t2, expect);
        assert_eq!(c.time_ordered_tn(&[&g]).unwrap(), g);
    }

    #[test]
    fn squares_contract_with_two_factorials() {
        let (l, c) = ctx();
        let s = l.shape();
        let (a, b) = (LatticePoint::new(3, 1), LatticePoint::new(3, 2));
        let fa = PolyFunctional::monomial(s, &[a, a], HbarScalar::one());
        let fb = PolyFunctional::monomial(s, &[b, b], HbarScalar::one());
        let p = c.star(&fa, &fb).unwrap();
        let w = c.wightman.at(a, b);
        assert!((p.constant_term().coeff(2) - 2.0 * w * w).norm() < 1e-14);
        let mixed = p.terms()[&vec![s.index(a) as u32, s.index(b) as u32]].coeff(1);
        assert!((mixed - 4.0 * w).norm() < 1e-14);
    }

    #[test]
    fn associativity_and_classical_limit() {
        let (l, c) = ctx();
        let s = l.shape();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let all = Region::from_sites(s, 0..s.sites());
        for _ in 0..5 {
            let f = random_in(&mut rng, s, &all, 3, 3);
            let g = random_in(&mut rng, s, &all, 3, 3);
            let h = random_in(&mut rng, s, &all, 3, 3);
            let left = c.star(&c.star(&f, &g).unwrap(), &h).unwrap();
            let right = c.star(&f, &c.star(&g, &h).unwrap()).unwrap();
            assert!(left.max_abs_diff(&right) < 1e-10);
            assert_eq!(c.star(&f, &g).unwrap().hbar_part(0), f.mul(&g));
            let tfg = c.time_ordered_product(&f, &g).unwrap();
            assert!(tfg.max_abs_diff(&c.time_ordered_product(&g, &f).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn poisson_bracket_examples() {
        let (l, c) = ctx();
        let s = l.shape();
        let (a, b) = (LatticePoint::new(2, 1), LatticePoint::new(5, 2));
        let phi = FieldConfiguration::zeros(s);
        let fa = PolyFunctional::field(s, a);
        let fb = PolyFunctional::field(s, b);
        assert_eq!(poisson_bracket(&c.pauli_jordan, &fa, &fb, &phi).unwrap().coeff(0), c.pauli_jordan.at(a, b));
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let lin = PolyFunctional::linear(&FieldConfiguration::from_fn(s, |_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)));
        assert!(poisson_bracket(&c.pauli_jordan, &lin, &lin, &phi).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn tn_is_symmetric_and_memo_consistent() {
        let (l, c) = ctx();
        let s = l.shape();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let all = Region::from_sites(s, 0..s.sites());
        let fs: Vec<_> = (0..3).map(|_| random_in(&mut rng, s, &all, 2, 2)).collect();
        let a = c.time_ordered_tn(&[&fs[0], &fs[1], &fs[2]]).unwrap();
        let b = c.time_ordered_tn(&[&fs[2], &fs[0], &fs[1]]).unwrap();
        assert_eq!(a, b);
        let fresh = StarAlgebraContext::new(&l);
        let direct = fresh.time_ordered_product(&fs[2], &fresh.time_ordered_product(&fs[0], &fs[1]).unwrap()).unwrap();
        assert!(a.max_abs_diff(&direct) < 1e-12);
    }
}
