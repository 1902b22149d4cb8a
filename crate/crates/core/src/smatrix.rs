//! Generalized local S-matrices on the lattice, renormalization maps, their
//! axiom suites, and the constructive extraction of `Z` from two S-matrices.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::formal_series::{expand_on_series_argument, LambdaSeries, Linear, MultilinearFamily, StarProduct};
use crate::functionals::{factorial, check_additivity, AdditivitySample, Fingerprint, PolyFunctional};
use crate::hbar::HbarScalar;
use crate::lagrangian::GeneralizedLagrangian;
use crate::lattice::{not_later_than, spacelike, FieldConfiguration, Kernel, KernelKind, Lattice, LatticeShape, Region};
use crate::report::{Report, Tolerances};
use crate::star_algebra::StarAlgebraContext;

type Family = MultilinearFamily<PolyFunctional, PolyFunctional>;
pub type Series = LambdaSeries<PolyFunctional>;

const SUITE_S: &str = "S";
const SUITE_Z: &str = "Z";

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

enum SKind {
    Lattice(Family),
    Composed { base: Arc<SMatrix>, z: Arc<RenormalizationMap> },
}

/// `S(λV) = 1 + Σ_n (i/ħ)ⁿ/n! T_n(V^{⊗n})` with `T_n` from one `Δ^F`, plus the
/// `⋆`-product used by the axiom checks.
pub struct SMatrix {
    ctx: Arc<StarAlgebraContext>,
    kind: SKind,
    tag: String,
}

impl std::fmt::Debug for SMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SMatrix").field("tag", &self.tag).finish()
    }
}

/// S-matrix of the lattice's own Hadamard choice.
pub fn build_smatrix(lattice: &Lattice) -> Result<SMatrix> {
    let p = lattice.propagators();
    build_smatrix_with_hadamard(lattice, &p.hadamard, "exact-bisolution")
}

/// S-matrix for an explicit real symmetric `H`; `W = (i/2)Δ + H`,
/// `Δ^F = (i/2)(Δ^A + Δ^R) + H`.
pub fn build_smatrix_with_hadamard(lattice: &Lattice, hadamard: &Kernel, tag: &str) -> Result<SMatrix> {
    lattice.shape().ensure_same(&hadamard.shape())?;
    if !hadamard.is_real() || hadamard.symmetry_residual() > 0.0 {
        return Err(Error::InvalidStructure("Hadamard kernel must be real and symmetric".into()));
    }
    let r = lattice.green_retarded();
    let a = lattice.green_advanced();
    let pj = crate::lattice::pauli_jordan(&r, &a);
    let w = crate::lattice::wightman(&pj, hadamard);
    let f = crate::lattice::feynman(&r, &a, hadamard);
    Ok(SMatrix::from_context(Arc::new(StarAlgebraContext::from_kernels(w, f, pj)), tag))
}

impl SMatrix {
    pub fn from_context(ctx: Arc<StarAlgebraContext>, tag: &str) -> Self {
        let inner = ctx.clone();
        let family = Family::direct(true, move |args: &[&PolyFunctional]| inner.time_ordered_tn(args));
        Self { ctx, kind: SKind::Lattice(family), tag: tag.into() }
    }

    pub fn context(&self) -> &StarAlgebraContext {
        &self.ctx
    }

    pub fn shape(&self) -> LatticeShape {
        self.ctx.feynman.shape()
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    fn zero(&self) -> PolyFunctional {
        PolyFunctional::zero(self.shape())
    }

    fn unit(&self) -> PolyFunctional {
        PolyFunctional::constant(self.shape(), HbarScalar::one())
    }

    /// `S(g)` for a series argument with `g_0 = 0`.
    pub fn apply_series(&self, g: &Series) -> Result<Series> {
        match &self.kind {
            SKind::Lattice(family) => {
                expand_on_series_argument(family, g, HbarScalar::i_over_hbar_pow, Some(self.unit()), &self.zero())
            }
            SKind::Composed { base, z } => base.apply_series(&z.apply_series(g)?),
        }
    }

    /// `S(λf)` through `λ^cap`.
    pub fn apply(&self, f: &PolyFunctional, cap: usize) -> Result<Series> {
        self.apply_series(&Series::linear(f, cap))
    }

    /// `T_n(args)` with the prefactor stripped; only for lattice S-matrices.
    pub fn tn(&self, args: &[&PolyFunctional]) -> Result<PolyFunctional> {
        match &self.kind {
            SKind::Lattice(family) => {
                if args.is_empty() {
                    Ok(self.unit())
                } else {
                    family.eval(args)
                }
            }
            SKind::Composed { .. } => Err(Error::Unsupported("T_n of a composed S-matrix".into())),
        }
    }

    pub fn star_series(&self, a: &Series, b: &Series) -> Result<Series> {
        a.multiply(b, &StarProduct(&self.ctx))
    }

    pub fn invert_series(&self, a: &Series) -> Result<Series> {
        a.invert(&StarProduct(&self.ctx))
    }
}

/// `S ∘ Z`: same `⋆`, `S̃(g) = S(Z(g))`.
pub fn compose(s: &Arc<SMatrix>, z: &Arc<RenormalizationMap>) -> SMatrix {
    SMatrix {
        ctx: s.ctx.clone(),
        kind: SKind::Composed { base: s.clone(), z: z.clone() },
        tag: format!("composed({}, {})", s.tag, z.tag),
    }
}

fn series_residuals(a: &Series, b: &Series) -> Result<Vec<f64>> {
    a.distances(b)
}

/// Largest coefficient of a monomial of `g` that has a site in `J^+(later)`,
/// i.e. the amount by which `supp g ⪯ later` fails.
pub fn earlier_violation(g: &PolyFunctional, later: &Region) -> f64 {
    let shape = g.shape();
    let bad = |s: u32| {
        let q = shape.point(s as usize);
        later.points().any(|p| shape.in_future(p, q))
    };
    g.terms().iter().filter(|(m, _)| m.iter().any(|&s| bad(s))).map(|(_, v)| v.max_abs()).fold(0.0, f64::max)
}

/// Largest coefficient of a monomial of `g` with a site `q` such that
/// `earlier` meets `J^+(q)`, i.e. the amount by which `earlier ⪯ supp g` fails.
pub fn later_violation(g: &PolyFunctional, earlier: &Region) -> f64 {
    let shape = g.shape();
    let bad = |s: u32| {
        let q = shape.point(s as usize);
        earlier.points().any(|p| shape.in_future(q, p))
    };
    g.terms().iter().filter(|(m, _)| m.iter().any(|&s| bad(s))).map(|(_, v)| v.max_abs()).fold(0.0, f64::max)
}

/// Causal triple `(f1, f, f2)` with `supp f1 ⪯ supp f2`.
#[derive(Clone, Debug)]
pub struct Triple {
    pub f1: PolyFunctional,
    pub f: PolyFunctional,
    pub f2: PolyFunctional,
}

/// Samples for the S- and Z-suites.
#[derive(Clone, Debug)]
pub struct SamplePlan {
    pub triples: Vec<Triple>,
    /// Pairs with spacelike supports.
    pub spacelike: Vec<(PolyFunctional, PolyFunctional)>,
    /// Additivity samples for λ𝒱-membership of Z outputs.
    pub additivity: Vec<AdditivitySample>,
    pub additivity_gap: usize,
    pub cap: usize,
    pub tolerances: Tolerances,
}

impl SamplePlan {
    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.triples.iter().enumerate() {
            if !not_later_than(&t.f1.support(), &t.f2.support()) {
                return Err(Error::Precondition(format!("triple {i}: supp f1 is not ⪯ supp f2")));
            }
        }
        for (i, (a, b)) in self.spacelike.iter().enumerate() {
            if !spacelike(&a.support(), &b.support()) {
                return Err(Error::Precondition(format!("pair {i}: supports are not spacelike")));
            }
        }
        if self.cap == 0 {
            return Err(Error::Precondition("plan λ-cap must be at least 1".into()));
        }
        Ok(())
    }

    fn tol(&self, order: usize) -> f64 {
        self.tolerances.for_order(order)
    }
}

fn push_orders(report: &mut Report, suite: &str, axiom: &str, id: &str, residuals: &[f64], plan: &SamplePlan) {
    for (n, r) in residuals.iter().enumerate() {
        report.residual(suite, axiom, Some(n), id, *r, plan.tol(n));
    }
}

/// S1–S4, the causality corollary `S(f1+f2) = S(f2) ⋆ S(f1)` for `f1 ⪯ f2`,
/// and the locality corollary `[S(f1), S(f2)]_⋆ = 0` on spacelike pairs.
pub fn check_s_axioms(s: &SMatrix, plan: &SamplePlan) -> Result<Report> {
    plan.validate()?;
    let cap = plan.cap;
    let mut report = Report::new();
    let zero = s.zero();
    let s0 = s.apply(&zero, cap)?;
    let mut one = Series::zero(cap, &zero);
    one.set(0, s.unit());
    push_orders(&mut report, SUITE_S, "S1", "zero", &series_residuals(&s0, &one)?, plan);

    for (i, t) in plan.triples.iter().enumerate() {
        let id = format!("triple-{i}");
        let all = s.apply(&t.f1.add(&t.f).add(&t.f2), cap)?;
        let later = s.apply(&t.f2.add(&t.f), cap)?;
        let mid = s.invert_series(&s.apply(&t.f, cap)?)?;
        let earlier = s.apply(&t.f.add(&t.f1), cap)?;
        let rhs = s.star_series(&s.star_series(&later, &mid)?, &earlier)?;
        push_orders(&mut report, SUITE_S, "S2", &id, &series_residuals(&all, &rhs)?, plan);

        let s1 = s.apply(&t.f1, cap)?;
        let order1 = s1.coeff(1).distance(&t.f1.scale_hbar(&HbarScalar::i_over_hbar_pow(1)));
        report.residual(SUITE_S, "S3", Some(1), &id, order1, plan.tol(1));

        let s2 = s.apply(&t.f2, cap)?;
        let (r1, r2) = (t.f1.support(), t.f2.support());
        let v1 = s1.coeffs().iter().map(|g| earlier_violation(g, &r2)).fold(0.0, f64::max);
        let v2 = s2.coeffs().iter().map(|g| later_violation(g, &r1)).fold(0.0, f64::max);
        report.verdict(SUITE_S, "S4", &id, v1 == 0.0 && v2 == 0.0, if v1 == 0.0 && v2 == 0.0 { String::new() } else { format!("support violation {:.3e}", v1.max(v2)) });

        let joint = s.apply(&t.f1.add(&t.f2), cap)?;
        let product = s.star_series(&s2, &s1)?;
        push_orders(&mut report, SUITE_S, "causality", &id, &series_residuals(&joint, &product)?, plan);
    }

    for (i, (a, b)) in plan.spacelike.iter().enumerate() {
        let id = format!("spacelike-{i}");
        let (sa, sb) = (s.apply(a, cap)?, s.apply(b, cap)?);
        let ab = s.star_series(&sa, &sb)?;
        let ba = s.star_series(&sb, &sa)?;
        push_orders(&mut report, SUITE_S, "locality", &id, &series_residuals(&ab, &ba)?, plan);
    }
    Ok(report)
}

/// T1: `T_n(F_1,…,F_n) = T_{n−k}(F_{k+1},…,F_n) ⋆ T_k(F_1,…,F_k)` whenever
/// `F_1,…,F_k ⪯ F_{k+1},…,F_n`. `factors` must be listed earliest first.
pub fn check_causal_factorization(s: &SMatrix, factors: &[PolyFunctional], id: &str, tol: f64) -> Result<Report> {
    let mut report = Report::new();
    let n = factors.len();
    for k in 1..n {
        let early = factors[..k].iter().fold(Region::empty(s.shape()), |r, f| r.union(&f.support()));
        let late = factors[k..].iter().fold(Region::empty(s.shape()), |r, f| r.union(&f.support()));
        if !not_later_than(&early, &late) {
            return Err(Error::Precondition(format!("{id}: factors are not causally ordered at split {k}")));
        }
    }
    let refs: Vec<&PolyFunctional> = factors.iter().collect();
    let full = s.tn(&refs)?;
    for k in 1..n {
        let split = s.context().star(&s.tn(&refs[k..])?, &s.tn(&refs[..k])?)?;
        report.residual(SUITE_S, "T1", Some(n), format!("{id}-split-{k}"), full.max_abs_diff(&split), tol);
    }
    Ok(report)
}

/// The order-`n` coefficient of `S(λV)` has ħ-exponents in `[−n, ∞)` and
/// at most `n·(deg V)/2 − n` from above.
pub fn check_hbar_accounting(s: &SMatrix, v: &PolyFunctional, cap: usize, id: &str) -> Result<Report> {
    let mut report = Report::new();
    let series = s.apply(v, cap)?;
    let deg = v.degree() as i32;
    for n in 1..=cap {
        let ok = match series.coeff(n).hbar_range() {
            None => true,
            Some((lo, hi)) => {
                let n = n as i32;
                lo >= -n && hi <= (n * deg) / 2 - n
            }
        };
        report.verdict(SUITE_S, "hbar-grading", format!("{id}-order-{n}"), ok, "");
    }
    Ok(report)
}

/// `Z(λf) = λf + Σ_{n≥2} λⁿ/n! Z_n(f^{⊗n})`. The family evaluates `Z_1` as
/// the identity.
pub struct RenormalizationMap {
    family: Family,
    tag: String,
}

impl std::fmt::Debug for RenormalizationMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RenormalizationMap").field("tag", &self.tag).finish()
    }
}

impl RenormalizationMap {
    pub fn identity() -> Self {
        Self::from_multilinear("identity", |args| Ok(args[0].zero_like()))
    }

    /// Map with `Z_n`, `n ≥ 2`, given by a mixed-argument evaluator.
    pub fn from_multilinear(
        tag: &str,
        zn: impl Fn(&[&PolyFunctional]) -> Result<PolyFunctional> + Send + Sync + 'static,
    ) -> Self {
        let family = Family::direct(true, move |args: &[&PolyFunctional]| {
            if args.len() == 1 {
                Ok(args[0].clone())
            } else {
                zn(args)
            }
        });
        Self { family, tag: tag.into() }
    }

    /// Map known only through diagonal values `Z_n(f^{⊗n})`, `n ≥ 2`;
    /// off-diagonal values come from polarization.
    pub fn from_diagonal(tag: &str, zn: impl Fn(usize, &PolyFunctional) -> Result<PolyFunctional> + Send + Sync + 'static) -> Self {
        let family = Family::diagonal(move |n, f: &PolyFunctional| if n == 1 { Ok(f.clone()) } else { zn(n, f) });
        Self { family, tag: tag.into() }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// `Z_n(args)`.
    pub fn eval(&self, args: &[&PolyFunctional]) -> Result<PolyFunctional> {
        self.family.eval(args)
    }

    /// `Z_n(f^{⊗n})`.
    pub fn value(&self, n: usize, f: &PolyFunctional) -> Result<PolyFunctional> {
        if n == 0 {
            return Ok(f.zero_like());
        }
        self.family.eval_diagonal(n, f)
    }

    /// `Z(g)` for a series argument with `g_0 = 0`.
    pub fn apply_series(&self, g: &Series) -> Result<Series> {
        let zero = g.coeff(0).zero_like();
        expand_on_series_argument(&self.family, g, |_| HbarScalar::one(), None, &zero)
    }

    pub fn apply(&self, f: &PolyFunctional, cap: usize) -> Result<Series> {
        self.apply_series(&Series::linear(f, cap))
    }
}

/// `Z_2(f, g) = κ Σ_{x∈window} ∂f/∂φ(x) · ∂g/∂φ(x)`, `Z_n = 0` for `n ≥ 3`.
pub fn make_handcrafted_z(kappa: f64, window: &Region) -> Result<RenormalizationMap> {
    let shape = window.shape();
    if window.points().any(|p| !shape.is_interior_row(p.t)) {
        return Err(Error::Precondition("handcrafted Z window must lie in interior rows".into()));
    }
    let sites: Vec<usize> = window.sites().iter().copied().collect();
    Ok(RenormalizationMap::from_multilinear(&format!("handcrafted(κ={kappa})"), move |args| {
        let mut out = args[0].zero_like();
        if args.len() == 2 && kappa != 0.0 {
            for &x in &sites {
                out.add_scaled(&args[0].partial(x).mul(&args[1].partial(x)), c(kappa));
            }
        }
        Ok(out)
    }))
}

/// A deliberately nonlocal map: `Z_2(f, g) = (κ/2)(∂_a f ∂_b g + ∂_b f ∂_a g)`.
pub fn make_bilocal_z(kappa: f64, a: usize, b: usize) -> RenormalizationMap {
    RenormalizationMap::from_multilinear(&format!("bilocal(κ={kappa})"), move |args| {
        let mut out = args[0].zero_like();
        if args.len() == 2 {
            out.add_scaled(&args[0].partial(a).mul(&args[1].partial(b)), c(kappa / 2.0));
            out.add_scaled(&args[0].partial(b).mul(&args[1].partial(a)), c(kappa / 2.0));
        }
        Ok(out)
    })
}

fn retag(mut r: Report, suite: &str, axiom: &str, order: usize, id: &str) -> Report {
    for e in &mut r.entries {
        e.suite = suite.into();
        if e.axiom != "ill-formed-sample" {
            e.axiom = axiom.into();
        }
        e.order = Some(order);
        e.sample_id = format!("{id}/{}", e.sample_id);
    }
    r
}

/// Z1, Z2 (support level), Z3, Z4 and λ𝒱-membership of every `Z_n` output.
pub fn check_z_axioms(z: &RenormalizationMap, plan: &SamplePlan) -> Result<Report> {
    plan.validate()?;
    let cap = plan.cap;
    let mut report = Report::new();
    if let Some(t) = plan.triples.first() {
        let zero = t.f.zero_like();
        let z0 = z.apply(&zero, cap)?;
        for n in 0..=cap {
            report.residual(SUITE_Z, "Z1", Some(n), "zero", z0.coeff(n).max_abs(), plan.tol(n));
        }
    }
    for (i, t) in plan.triples.iter().enumerate() {
        let id = format!("triple-{i}");
        let zf = z.apply(&t.f, cap)?;
        let z4 = zf.coeff(0).max_abs().max(zf.coeff(1).distance(&t.f));
        report.residual(SUITE_Z, "Z4", Some(1), &id, z4, plan.tol(1));

        let zf1 = z.apply(&t.f.add(&t.f1), cap)?;
        let zf2 = z.apply(&t.f.add(&t.f2), cap)?;
        let zall = z.apply(&t.f1.add(&t.f).add(&t.f2), cap)?;
        let (r1, r2) = (t.f1.support(), t.f2.support());
        for n in 0..=cap {
            let rhs = zf1.coeff(n).sub(zf.coeff(n)).add(zf2.coeff(n));
            report.residual(SUITE_Z, "Z3", Some(n), &id, zall.coeff(n).distance(&rhs), plan.tol(n));
            let v1 = earlier_violation(&zf1.coeff(n).sub(zf.coeff(n)), &r2);
            let v2 = later_violation(&zf2.coeff(n).sub(zf.coeff(n)), &r1);
            report.residual(SUITE_Z, "Z2", Some(n), &id, v1.max(v2), crate::functionals::SUPPORT_EPS);
        }
        if !plan.additivity.is_empty() {
            for (name, g) in [("f", &t.f), ("f1+f+f2", &t.f1.add(&t.f).add(&t.f2))] {
                for n in 2..=cap {
                    let out = z.value(n, g)?;
                    let r = check_additivity(&out, &plan.additivity, plan.additivity_gap, plan.tol(n))?;
                    report.extend(retag(r, SUITE_Z, "lambda-V", n, &format!("{id}/{name}")));
                }
            }
        }
    }
    Ok(report)
}

/// `Z_n(f^{⊗n})`, `n = 0..=cap`, with `S ∘ Z^{cap}` matching `S̃` at `λf`
/// through order `cap`. Entry 0 is zero and entry 1 is `f`.
pub fn extract_z(s: &SMatrix, s_tilde: &SMatrix, f: &PolyFunctional, cap: usize) -> Result<Vec<PolyFunctional>> {
    let target = s_tilde.apply(f, cap)?;
    let base = s.apply(f, cap.min(1))?;
    if cap >= 1 {
        let d = target.coeff(1).distance(base.coeff(1));
        if d > 1e-12 * (1.0 + base.coeff(1).max_abs()) {
            return Err(Error::Precondition(format!("order-1 coefficients of S and S̃ differ by {d:.3e} (S3 violated)")));
        }
    }
    let mut z = vec![f.zero_like(), f.clone()];
    for n in 1..cap {
        let mut g = Series::zero(n + 1, f);
        for (k, zk) in z.iter().enumerate().skip(1) {
            g.set(k, zk.scale(c(1.0 / factorial(k))));
        }
        let approx = s.apply_series(&g)?;
        let diff = target.coeff(n + 1).sub(approx.coeff(n + 1));
        z.push(diff.scale(Complex64::new(0.0, -factorial(n + 1))).shift_hbar(1));
    }
    z.truncate(cap + 1);
    Ok(z)
}

/// Per-order residuals of `S(Z^{cap}(λf))` against `S̃(λf)`.
pub fn compose_back_residuals(s: &SMatrix, s_tilde: &SMatrix, f: &PolyFunctional, z: &[PolyFunctional]) -> Result<Vec<f64>> {
    let cap = z.len() - 1;
    let mut g = Series::zero(cap, f);
    for (k, zk) in z.iter().enumerate().skip(1) {
        g.set(k, zk.scale(c(1.0 / factorial(k))));
    }
    s.apply_series(&g)?.distances(&s_tilde.apply(f, cap)?)
}

/// The renormalization map recovered from `S` and `S̃` by pointwise
/// extraction through `cap`, polarized on demand. Orders above `cap` are zero.
pub fn extracted_map(s: Arc<SMatrix>, s_tilde: Arc<SMatrix>, cap: usize) -> RenormalizationMap {
    let cache: Mutex<HashMap<Fingerprint, Arc<Vec<PolyFunctional>>>> = Mutex::new(HashMap::new());
    RenormalizationMap::from_diagonal("extracted", move |n, f| {
        if n > cap {
            return Ok(f.zero_like());
        }
        let key = f.fingerprint();
        if let Some(v) = cache.lock().unwrap().get(&key) {
            return Ok(v[n].clone());
        }
        let v = Arc::new(extract_z(&s, &s_tilde, f, cap)?);
        cache.lock().unwrap().entry(key).or_insert_with(|| v.clone());
        Ok(v[n].clone())
    })
}

/// Reconstructs `Z_n` on `basis` by polarization of extracted diagonal values
/// and runs the Z-suite on it, plus λ𝒱-membership of the polarized values.
pub fn verify_extracted_locality(
    s: Arc<SMatrix>,
    s_tilde: Arc<SMatrix>,
    basis: &[PolyFunctional],
    plan: &SamplePlan,
) -> Result<Report> {
    let cap = plan.cap;
    if basis.len() < cap {
        return Err(Error::InsufficientFamily { required: cap, available: basis.len() });
    }
    let z = extracted_map(s, s_tilde, cap);
    let mut report = check_z_axioms(&z, plan)?;
    for n in 2..=cap {
        let args: Vec<&PolyFunctional> = basis[..n].iter().collect();
        let out = z.eval(&args)?;
        if !plan.additivity.is_empty() {
            let r = check_additivity(&out, &plan.additivity, plan.additivity_gap, plan.tol(n))?;
            report.extend(retag(r, SUITE_Z, "lambda-V-polarized", n, "basis"));
        }
    }
    Ok(report)
}

/// Z3 and Z2 residuals of `z` at `f` and at `f = 0`; passes when the general
/// residual is within `factor` times the `f = 0` one (floored at `floor`).
pub fn check_lemma_consistency(z: &RenormalizationMap, triples: &[Triple], cap: usize, factor: f64, floor: f64) -> Result<Report> {
    let mut report = Report::new();
    let residuals = |f1: &PolyFunctional, f: &PolyFunctional, f2: &PolyFunctional| -> Result<(f64, f64)> {
        let zf = z.apply(f, cap)?;
        let zf1 = z.apply(&f.add(f1), cap)?;
        let zf2 = z.apply(&f.add(f2), cap)?;
        let zall = z.apply(&f1.add(f).add(f2), cap)?;
        let (r1, r2) = (f1.support(), f2.support());
        let (mut z3, mut z2) = (0.0f64, 0.0f64);
        for n in 0..=cap {
            let rhs = zf1.coeff(n).sub(zf.coeff(n)).add(zf2.coeff(n));
            z3 = z3.max(zall.coeff(n).distance(&rhs));
            z2 = z2.max(earlier_violation(&zf1.coeff(n).sub(zf.coeff(n)), &r2));
            z2 = z2.max(later_violation(&zf2.coeff(n).sub(zf.coeff(n)), &r1));
        }
        Ok((z3, z2))
    };
    for (i, t) in triples.iter().enumerate() {
        let id = format!("triple-{i}");
        let (g3, g2) = residuals(&t.f1, &t.f, &t.f2)?;
        let (o3, o2) = residuals(&t.f1, &t.f.zero_like(), &t.f2)?;
        for (axiom, g, o) in [("lemma-Z3", g3, o3), ("lemma-Z2", g2, o2)] {
            let bound = factor * o.max(floor);
            report.push(crate::report::Entry {
                suite: SUITE_Z.into(),
                axiom: axiom.into(),
                order: Some(cap),
                sample_id: id.clone(),
                residual: g,
                pass: g <= bound,
                detail: Some(format!("f=0 residual {o:.3e}, bound {bound:.3e}")),
            });
        }
    }
    Ok(report)
}

/// Diagonal, smooth, real perturbation `D(x,x) = scale·(1 + ½ sin(2πx/nx + a) cos(πt/nt + b))`
/// with seeded phases `a, b`.
pub fn diagonal_perturbation(shape: LatticeShape, seed: u64, scale: f64) -> Kernel {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (a, b): (f64, f64) = (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..std::f64::consts::TAU));
    let mut d = Kernel::zeros(KernelKind::Other, shape, 0.0);
    for i in 0..shape.sites() {
        let p = shape.point(i);
        let sx = (std::f64::consts::TAU * p.x as f64 / shape.nx as f64 + a).sin();
        let ct = (std::f64::consts::PI * p.t as f64 / shape.nt as f64 + b).cos();
        d.set(i, i, c(scale * (1.0 + 0.5 * sx * ct)));
    }
    d
}

/// `S̃` built from `H + D` with `D` from [`diagonal_perturbation`].
pub fn perturbed_smatrix(lattice: &Lattice, seed: u64, scale: f64) -> Result<SMatrix> {
    let p = lattice.propagators();
    let d = diagonal_perturbation(lattice.shape(), seed, scale);
    let h = p.hadamard.combine(c(1.0), &d, c(1.0), KernelKind::Hadamard);
    build_smatrix_with_hadamard(lattice, &h, &format!("perturbed(seed={seed}, scale={scale})"))
}

/// S6 with `φ = λφ0`:
/// `S(λF) ⋆ S(δL(λφ0)) = S(λF^{λφ0} + δL(λφ0)) = S(δL(λφ0)) ⋆ S(λF)`,
/// per λ-order through `cap`. Entries pass when within `tol`.
pub fn check_schwinger_dyson(
    s: &SMatrix,
    l: &GeneralizedLagrangian,
    f: &PolyFunctional,
    phi0: &FieldConfiguration,
    cap: usize,
    tol: f64,
    id: &str,
) -> Result<Report> {
    let shape = s.shape();
    shape.ensure_same(&l.shape())?;
    if let Some((lo, hi)) = phi0.support().time_range() {
        if !shape.is_interior_row(lo) || !shape.is_interior_row(hi) {
            return Err(Error::Precondition("φ0 touches the time boundary".into()));
        }
    }
    let cutoff = l.cutoff_for(phi0)?;
    let lf = l.on_region(&cutoff)?;
    let dl_parts = lf.shift_series(phi0, cap)?;
    let f_parts = f.shift_series(phi0, cap)?;
    let zero = f.zero_like();
    let mut dl = Series::zero(cap, &zero);
    let mut mid = Series::zero(cap, &zero);
    for k in 1..=cap {
        dl.set(k, dl_parts[k].clone());
        mid.set(k, dl_parts[k].add(&f_parts[k - 1]));
    }
    let sf = s.apply(f, cap)?;
    let sdl = s.apply_series(&dl)?;
    let smid = s.apply_series(&mid)?;
    let left = s.star_series(&sf, &sdl)?;
    let right = s.star_series(&sdl, &sf)?;
    let mut report = Report::new();
    for (n, (a, b)) in left.distances(&smid)?.into_iter().zip(right.distances(&smid)?).enumerate() {
        report.residual(SUITE_S, "S6", Some(n), id, a.max(b), tol);
    }
    Ok(report)
}

/// Coefficients `R[i][j]` of `λ^i μ^j` in `S(λV)^{-1} ⋆ S(λV + μF)`.
pub fn relative_smatrix(s: &SMatrix, v: &PolyFunctional, f: &PolyFunctional, lambda_cap: usize, mu_cap: usize) -> Result<Vec<Vec<PolyFunctional>>> {
    let zero = v.zero_like();
    // joint[i][j] = (i/ħ)^{i+j}/(i! j!) T_{i+j}(V^i, F^j)
    let mut joint = vec![vec![zero.clone(); mu_cap + 1]; lambda_cap + 1];
    for (i, row) in joint.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let mut args: Vec<&PolyFunctional> = vec![v; i];
            args.extend(std::iter::repeat_n(f, j));
            let w = HbarScalar::i_over_hbar_pow(i + j).scale(c(1.0 / (factorial(i) * factorial(j))));
            *cell = s.tn(&args)?.scale_hbar(&w);
        }
    }
    let sv = Series::new(joint.iter().map(|row| row[0].clone()).collect());
    let inv = s.invert_series(&sv)?;
    let mut out = vec![vec![zero.clone(); mu_cap + 1]; lambda_cap + 1];
    for i in 0..=lambda_cap {
        for j in 0..=mu_cap {
            let mut acc = zero.clone();
            for k in 0..=i {
                if inv.coeff(k).is_zero() || joint[i - k][j].is_zero() {
                    continue;
                }
                acc = acc.add(&s.context().star(inv.coeff(k), &joint[i - k][j])?);
            }
            out[i][j] = acc;
        }
    }
    Ok(out)
}

/// `F_int = −iħ ∂_μ S_{λV}(μF)|_{μ=0}` through `λ^cap`.
pub fn interacting_observable(s: &SMatrix, v: &PolyFunctional, f: &PolyFunctional, cap: usize) -> Result<Series> {
    let r = relative_smatrix(s, v, f, cap, 1)?;
    Ok(Series::new(r.iter().map(|row| row[1].scale(Complex64::new(0.0, -1.0)).shift_hbar(1)).collect()))
}

/// `ω_int(F_1,…,F_n) = (F_{1,int} ⋆ ⋯ ⋆ F_{n,int})|_{φ=0}` per λ-order.
pub fn correlation(s: &SMatrix, v: &PolyFunctional, observables: &[PolyFunctional], cap: usize) -> Result<Vec<HbarScalar>> {
    let mut chain = Series::zero(cap, &v.zero_like());
    chain.set(0, PolyFunctional::constant(s.shape(), HbarScalar::one()));
    for f in observables {
        chain = s.star_series(&chain, &interacting_observable(s, v, f, cap)?)?;
    }
    Ok(chain.coeffs().iter().map(|g| g.constant_term()).collect())
}
