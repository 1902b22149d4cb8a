//! Plants a local renormalization map Z, composes S̃ = S∘Z, and recovers Z
//! order by order from the pair (S, S̃).

use std::sync::Arc;

use paqft::formal_series::Linear;
use paqft::lattice::{Lattice, Region};
use paqft::samples::SampleGenerator;
use paqft::smatrix::{build_smatrix, compose, compose_back_residuals, extract_z, make_handcrafted_z};

fn main() -> paqft::Result<()> {
    let lattice = Lattice::new(8, 8, 0.5)?;
    let shape = lattice.shape();
    let s = Arc::new(build_smatrix(&lattice)?);
    let window = Region::rectangle(shape, 1, shape.nt - 1, 0, shape.nx);
    let z = Arc::new(make_handcrafted_z(0.3, &window)?);
    let s_tilde = compose(&s, &z);

    let f = SampleGenerator::new(shape, 3).causal_triple(2, 3).f;
    let cap = 4;
    let extracted = extract_z(&s, &s_tilde, &f, cap)?;
    for (n, zn) in extracted.iter().enumerate().skip(1) {
        let planted = z.value(n, &f)?;
        println!("Z_{n}(f): {:3} terms, distance to planted {:.2e}", zn.terms().len(), zn.distance(&planted));
    }
    let back = compose_back_residuals(&s, &s_tilde, &f, &extracted)?;
    let back: Vec<String> = back.iter().map(|r| format!("{r:.1e}")).collect();
    println!("S̃ vs S∘Z per order: {}", back.join(" "));
    Ok(())
}
