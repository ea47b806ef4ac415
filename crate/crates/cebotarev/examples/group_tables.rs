//! Builds the stock finite groups, prints their conjugacy class structure,
//! and takes a quotient by the center.

use cebotarev::{FiniteGroup, Result};

fn describe(name: &str, g: &FiniteGroup) {
    let classes = g.conjugacy_classes();
    let sizes: Vec<usize> = classes.iter().map(|c| c.size()).collect();
    println!(
        "{name}: order {}, abelian {}, exponent {}, center {}, class sizes {:?}",
        g.order(),
        g.is_abelian(),
        g.exponent(),
        g.center().members().len(),
        sizes
    );
}

fn main() -> Result<()> {
    describe("Z/12", &FiniteGroup::cyclic(12));
    describe(
        "Z/2 x Z/2",
        &FiniteGroup::direct_product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(2)),
    );
    describe("D4", &FiniteGroup::dihedral(4));
    describe("Q8", &FiniteGroup::quaternion());

    let h = FiniteGroup::heisenberg(3)?;
    describe("Heisenberg(3)", &h);

    // The quotient of the Heisenberg group by its center is elementary
    // abelian of rank 2.
    let center = h.center();
    let q = h.quotient(&center)?;
    describe("Heisenberg(3)/Z", &q.group);

    // Element orders in Q8: one identity, one central involution, six
    // elements of order 4.
    let q8 = FiniteGroup::quaternion();
    let orders: Vec<usize> = (0..q8.order()).map(|g| q8.element_order(g)).collect();
    println!("Q8 element orders: {orders:?}");

    let normals = FiniteGroup::dihedral(4).normal_subgroups();
    println!(
        "D4 normal subgroup orders: {:?}",
        normals.iter().map(|s| s.members().len()).collect::<Vec<_>>()
    );
    Ok(())
}
