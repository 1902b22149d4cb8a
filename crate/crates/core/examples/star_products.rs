//! Wick star product, its commutator at first order in ħ, associativity, and
//! the time-ordered product built from the Feynman propagator.

use paqft::functionals::PolyFunctional;
use paqft::lattice::{FieldConfiguration, Lattice, LatticePoint};
use paqft::star_algebra::{poisson_bracket_functional, StarAlgebraContext};
use paqft::HbarScalar;

fn main() -> paqft::Result<()> {
    let lattice = Lattice::new(8, 8, 0.5)?;
    let shape = lattice.shape();
    let ctx = StarAlgebraContext::new(&lattice);
    let a = LatticePoint::new(2, 3);
    let b = LatticePoint::new(5, 4);
    let f = PolyFunctional::monomial(shape, &[a, a], HbarScalar::one());
    let g = PolyFunctional::monomial(shape, &[b, b], HbarScalar::one());

    let fg = ctx.star(&f, &g)?;
    let vacuum = FieldConfiguration::zeros(shape);
    println!("<φ(a)² ⋆ φ(b)²> = {}", fg.evaluate(&vacuum)?);

    let comm = ctx.commutator(&f, &g)?;
    let bracket = poisson_bracket_functional(&ctx.pauli_jordan, &f, &g)?;
    let diff = comm.hbar_part(1).max_abs_diff(&bracket.scale(num_complex::Complex64::new(0.0, 1.0)).shift_hbar(1));
    println!("[F, G] at order ħ vs iħ{{F, G}}: {diff:.2e}");

    let h = PolyFunctional::field(shape, LatticePoint::new(4, 0));
    let left = ctx.star(&ctx.star(&f, &g)?, &h)?;
    let right = ctx.star(&f, &ctx.star(&g, &h)?)?;
    println!("associativity defect: {:.2e}", left.max_abs_diff(&right));

    let t = ctx.time_ordered_product(&f, &g)?;
    println!("b later than a, so F ·T G = G ⋆ F: {:.2e}", t.max_abs_diff(&ctx.star(&g, &f)?));
    Ok(())
}
