//! Two S-matrices built from Hadamard parametrices differing by a smooth
//! diagonal D are related by a renormalization map whose second order is the
//! change of the Feynman contraction.

use std::sync::Arc;

use paqft::lattice::Lattice;
use paqft::samples::SampleGenerator;
use paqft::star_algebra::{contraction_product, Contraction};
use paqft::smatrix::{build_smatrix, extract_z, perturbed_smatrix};
use paqft::HbarScalar;

fn main() -> paqft::Result<()> {
    let lattice = Lattice::new(8, 8, 0.5)?;
    let s = Arc::new(build_smatrix(&lattice)?);
    let s_prime = Arc::new(perturbed_smatrix(&lattice, 1, 1e-2)?);
    let f = SampleGenerator::new(lattice.shape(), 9).causal_triple(2, 3).f;

    let z = extract_z(&s, &s_prime, &f, 3)?;
    let expected = contraction_product(&f, &f, &s_prime.context().feynman, Contraction::FULL)?
        .sub(&contraction_product(&f, &f, &s.context().feynman, Contraction::FULL)?)
        .scale_hbar(&HbarScalar::i_over_hbar_pow(1));
    println!("|Z_2(f)| = {:.3e}", z[2].max_abs());
    println!("Z_2 vs kernel difference: {:.2e}", z[2].max_abs_diff(&expected));
    println!("|Z_3(f)| = {:.3e}", z[3].max_abs());
    Ok(())
}
