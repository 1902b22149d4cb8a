//! Schwinger-Dyson identity for the free Lagrangian, then the same check
//! against a Lagrangian with the wrong mass.

use paqft::lagrangian::GeneralizedLagrangian;
use paqft::lattice::{Lattice, Region};
use paqft::samples::SampleGenerator;
use paqft::smatrix::{build_smatrix, check_schwinger_dyson};

fn main() -> paqft::Result<()> {
    let lattice = Lattice::new(12, 12, 0.5)?;
    let shape = lattice.shape();
    let s = build_smatrix(&lattice)?;
    let mut g = SampleGenerator::new(shape, 21);
    let f = g.functional(&Region::rectangle(shape, 3, 7, 0, 5), 2, 3);
    let phi0 = g.interior_field();

    for (label, mass) in [("m = 0.5", 0.5), ("m = 0.7", 0.7)] {
        let l = GeneralizedLagrangian::free_scalar(shape, mass);
        let report = check_schwinger_dyson(&s, &l, &f, &phi0, 3, 1e-8, label)?;
        let worst = report.entries.iter().map(|e| e.residual).fold(0.0, f64::max);
        println!("{label}: passed={} worst residual {worst:.2e}", report.passed());
    }
    Ok(())
}
