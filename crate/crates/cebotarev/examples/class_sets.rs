//! Classwise sets of primes over a fixed Galois context: densities, lifting
//! between levels, and the comparison predicates.
//!
//! The context is the Heisenberg group of order 27. Levels are labelled by
//! the fields they fix: "K" (the base, trivial quotient) and "N" (the whole
//! extension) always exist; "L" here is the fixed field of the center.

use cebotarev::arith::ratio_string;
use cebotarev::cset::{
    almost_equal, almost_subset, density, full_cset, is_disjoint, lift_to_level, make_cset,
    GaloisContext,
};
use cebotarev::{FiniteGroup, Result, Subgroup};

fn main() -> Result<()> {
    let h = FiniteGroup::heisenberg(3)?;
    let (sigma, _tau, rho) = FiniteGroup::heisenberg_generators(3);
    let center = h.center();

    let mut ctx = GaloisContext::new(h);
    ctx.register_field("L", center.members().to_vec())?;

    // The center is generated by rho, so its class at level N is a single
    // element and the density is 1/27.
    let rho_set = make_cset(&ctx, "N", rho)?;
    println!(
        "class of rho at N: {} classes, density {}",
        rho_set.class_reps().len(),
        ratio_string(density(&ctx, &rho_set)?)
    );

    // sigma has a class of size 3 at the top level.
    let sigma_set = make_cset(&ctx, "N", sigma)?;
    println!(
        "class of sigma at N: density {}",
        ratio_string(density(&ctx, &sigma_set)?)
    );

    // At level L the quotient is abelian of order 9; the image of sigma
    // picks out a single coset, so the density rises to 1/9.
    let sigma_bar = ctx.level("L")?.projection[sigma];
    let sigma_at_l = make_cset(&ctx, "L", sigma_bar)?;
    println!(
        "class of sigma at L: density {}",
        ratio_string(density(&ctx, &sigma_at_l)?)
    );

    // Lifting the level-L set back to N collects every class meeting the
    // coset; the lifted set contains the original class of sigma.
    let lifted = lift_to_level(&ctx, &sigma_at_l, "N")?;
    println!(
        "lift of the L-set to N: {} classes, density {}",
        lifted.class_reps().len(),
        ratio_string(density(&ctx, &lifted)?)
    );
    println!(
        "sigma-class inside the lift: {}",
        almost_subset(&mut ctx, &sigma_set, &lifted)?
    );
    println!(
        "lift equals the sigma class: {}",
        almost_equal(&mut ctx, &lifted, &sigma_set)?
    );

    // Disjointness of distinct classes at the same level.
    let disjoint = is_disjoint(&mut ctx, &rho_set, &sigma_set)?;
    println!("rho-class and sigma-class disjoint: {disjoint}");

    // The full set at any level has density 1.
    let everything = full_cset(&ctx, "K")?;
    println!(
        "full set at K: density {}",
        ratio_string(density(&ctx, &everything)?)
    );

    // A non-normal subgroup cannot be registered as a level.
    let d4 = FiniteGroup::dihedral(4);
    let mut bad = GaloisContext::new(d4.clone());
    let reflection = Subgroup::generated(&d4, &[4])?;
    match bad.register_field("M", reflection.members().to_vec()) {
        Err(e) => println!("registering a non-normal subgroup fails: {e}"),
        Ok(()) => unreachable!("reflection subgroups of D4 are not normal"),
    }
    Ok(())
}
