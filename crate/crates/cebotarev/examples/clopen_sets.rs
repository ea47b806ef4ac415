//! Finitely presented sets of primes: membership, boolean algebra over a
//! fixed multiquadratic universe, and closedness certificates.

use std::collections::BTreeSet;

use cebotarev::arith::MultiQuadContext;
use cebotarev::topology::{
    closure_over_approx, refine_partition, same_set, set_complement, set_difference,
    set_intersection, Atom, FinPresSet,
};
use cebotarev::Result;

fn members_upto(s: &FinPresSet, bound: u64) -> Result<Vec<u64>> {
    Ok(cebotarev::arith::primes_up_to(bound)?
        .into_iter()
        .filter(|&p| s.member(p))
        .collect())
}

fn main() -> Result<()> {
    // Primes split in Q(i): the clause (-1 | +1).
    let split_gauss = FinPresSet::from_clause(vec![Atom::quad(-1, 1)?]);
    println!("split in Q(i) up to 60: {:?}", members_upto(&split_gauss, 60)?);

    // Presentations carry exception lists. Adjoining 2 and removing 13
    // changes membership at exactly those primes.
    let tweaked = FinPresSet::new(
        split_gauss.clauses().to_vec(),
        BTreeSet::from([2]),
        BTreeSet::from([13]),
    )?;
    println!("tweaked up to 60:        {:?}", members_upto(&tweaked, 60)?);

    // The boolean algebra works over an explicit universe of radicands.
    let ctx = MultiQuadContext::new(&[-1, 5])?;
    let split_five = FinPresSet::from_clause(vec![Atom::quad(5, 1)?]);
    let both = set_intersection(&split_gauss, &split_five, &ctx)?;
    println!("split in both up to 120: {:?}", members_upto(&both, 120)?);

    let neither = set_intersection(
        &set_complement(&split_gauss, &ctx)?,
        &set_complement(&split_five, &ctx)?,
        &ctx,
    )?;
    let union_dm = set_complement(&neither, &ctx)?;
    let diff = set_difference(&union_dm, &split_five, &ctx)?;
    println!(
        "de morgan round trip gives split-in-Q(i)-only: {}",
        same_set(
            &diff,
            &set_difference(&split_gauss, &split_five, &ctx)?,
            &ctx
        )?
    );

    // A pure sign clause weakly admits its ramified prime, so the raw set
    // is not certified closed: 2 is the witness.
    let cert = closure_over_approx(&split_gauss);
    println!(
        "closure of the raw pure set: certified {}, witness {:?}, candidates {:?}",
        cert.certified, cert.witness, cert.candidates
    );
    println!(
        "certificate over-approximation contains 2: {}",
        cert.over_approx.member(2)
    );

    // Stripping the witness into the removed list yields the same set of
    // primes with a certified presentation.
    let stripped = FinPresSet::new(
        split_gauss.clauses().to_vec(),
        BTreeSet::new(),
        BTreeSet::from([2]),
    )?;
    let cert = closure_over_approx(&stripped);
    println!(
        "closure after stripping 2: certified {}, witness {:?}",
        cert.certified, cert.witness
    );

    // Refining a covering makes the pieces disjoint without changing the
    // union: the later piece loses what the earlier one already holds.
    let cover = vec![split_gauss.clone(), FinPresSet::full()];
    let refined = refine_partition(&cover, &ctx)?;
    for (i, piece) in refined.iter().enumerate() {
        println!("refined piece {i} up to 60: {:?}", members_upto(piece, 60)?);
    }
    Ok(())
}
