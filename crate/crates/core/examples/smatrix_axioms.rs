//! Builds the formal S-matrix on an 8×8 lattice and checks its axioms on
//! seeded causal triples and spacelike pairs.

use paqft::lattice::Lattice;
use paqft::report::Tolerances;
use paqft::samples::SampleGenerator;
use paqft::smatrix::{build_smatrix, check_causal_factorization, check_s_axioms, SamplePlan};

fn main() -> paqft::Result<()> {
    let lattice = Lattice::new(8, 8, 0.5)?;
    let s = build_smatrix(&lattice)?;
    let mut g = SampleGenerator::new(lattice.shape(), 17);

    let v = g.causal_triple(2, 2).f;
    let sv = s.apply(&v, 3)?;
    for n in 0..=3 {
        println!("S(λV) order λ^{n}: {} terms", sv.coeff(n).terms().len());
    }

    let plan = SamplePlan {
        triples: (0..3).map(|_| g.causal_triple(2, 2)).collect(),
        spacelike: vec![g.spacelike_pair(2, 2)],
        additivity: Vec::new(),
        additivity_gap: 1,
        cap: 3,
        tolerances: Tolerances::default(),
    };
    let mut report = check_s_axioms(&s, &plan)?;
    report.extend(check_causal_factorization(&s, &g.causal_chain(3, 2, 2), "chain", 1e-10)?);
    println!("{}", report.summary());
    Ok(())
}
