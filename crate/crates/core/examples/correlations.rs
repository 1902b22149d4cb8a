//! Interacting two-point function of a φ⁴ perturbation, order by order in λ
//! and ħ, evaluated in the quasifree state of W.

use paqft::functionals::PolyFunctional;
use paqft::lattice::{Lattice, LatticePoint};
use paqft::smatrix::{build_smatrix, correlation, interacting_observable};
use paqft::HbarScalar;

fn main() -> paqft::Result<()> {
    let lattice = Lattice::new(10, 10, 0.5)?;
    let shape = lattice.shape();
    let s = build_smatrix(&lattice)?;
    let c = LatticePoint::new(3, 5);
    let v = PolyFunctional::monomial(shape, &[c; 4], HbarScalar::one());
    let a = PolyFunctional::field(shape, LatticePoint::new(6, 4));
    let b = PolyFunctional::field(shape, LatticePoint::new(7, 6));

    let interacting = interacting_observable(&s, &v, &a, 2)?;
    for n in 0..=2 {
        println!("φ_int(a) at λ^{n}: {} terms", interacting.coeff(n).terms().len());
    }
    for (n, w) in correlation(&s, &v, &[a, b], 4)?.iter().enumerate() {
        println!("<φ(a) ⋆ φ(b)>_V at λ^{n}: {w}");
    }
    Ok(())
}
