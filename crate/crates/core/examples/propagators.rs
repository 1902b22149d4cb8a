//! Retarded, advanced, Pauli-Jordan and Wightman kernels on a small lattice.

use paqft::lattice::{Lattice, LatticePoint};

fn main() -> paqft::Result<()> {
    let lattice = Lattice::new(10, 12, 0.5)?;
    let shape = lattice.shape();
    let p = lattice.propagators();
    let y = shape.index(LatticePoint::new(3, 6));
    println!("ΔR(x, y) along x = 6, y = (3, 6):");
    for t in 0..shape.nt {
        let x = shape.index(LatticePoint::new(t, 6));
        println!("  t={t:2}  ΔR={:+.6}  ΔA={:+.6}", p.retarded.get(x, y).re, p.advanced.get(x, y).re);
    }
    println!("PΔR - 1: {:.2e}", p.retarded.operator_residual(&lattice, true, true));
    println!("P W (first / second argument): {:.2e} / {:.2e}",
        p.wightman.operator_residual(&lattice, true, false),
        p.wightman.operator_residual(&lattice, false, false));
    println!("min eigenvalue of W: {:.3e}", p.wightman.min_hermitian_eigenvalue());
    for w in &p.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
