//! Causal order on lattice regions, polars of a finite relation, and the
//! group-with-causality axioms on field configurations.

use paqft::lattice::{not_later_than, FieldConfiguration, LatticeShape, Region};
use paqft::relations::{check_group_with_causality, polar_left, symmetrize, BinaryRelation, CausalityStructure};
use paqft::samples::SampleGenerator;

fn main() -> paqft::Result<()> {
    let shape = LatticeShape { nt: 10, nx: 12 };
    let early = Region::rectangle(shape, 1, 3, 0, 4);
    let late = Region::rectangle(shape, 6, 9, 0, 12);
    println!("early ⪯ late: {}", not_later_than(&early, &late));
    println!("late ⪯ early: {}", not_later_than(&late, &early));

    // 0 < 1 < 2 as a strict order on three elements.
    let order = BinaryRelation::from_pairs(3, [(0, 1), (0, 2), (1, 2)])?;
    let causal = CausalityStructure::new(order)?;
    let u = [2].into_iter().collect();
    println!("elements earlier than {{2}}: {:?}", polar_left(&u, &causal)?);
    println!("symmetrized pairs: {:?}", symmetrize(&causal).relation().pairs());

    let mut g = SampleGenerator::new(shape, 5);
    let mut fields: Vec<FieldConfiguration> = (0..4).map(|_| g.field(&early)).collect();
    fields.extend((0..4).map(|_| g.field(&late)));
    fields.push(FieldConfiguration::zeros(shape));
    let report = check_group_with_causality(
        &fields,
        &FieldConfiguration::zeros(shape),
        |a, b| a.add(b),
        |a, b| not_later_than(&a.support(), &b.support()),
    );
    println!("{}", report.summary());
    Ok(())
}
