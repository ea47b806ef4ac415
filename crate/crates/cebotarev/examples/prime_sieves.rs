//! Empirical densities of splitting conditions, checked against the exact
//! values the class structure predicts.

use cebotarev::arith::{frobenius_quad, ratio_string, sieve_stats, FrobeniusSymbol, QuadField};
use cebotarev::Result;

fn main() -> Result<()> {
    let bound = 1_000_000;

    // Split primes of one quadratic field: density 1/2.
    let field = QuadField::new(-1)?;
    let stats = sieve_stats(bound, |p| {
        matches!(frobenius_quad(p, &field), FrobeniusSymbol::Split)
    })?;
    println!(
        "split in Q(i) up to {bound}: {} of {} ({}), expected 1/2",
        stats.count,
        stats.primes_checked,
        ratio_string(stats.density)
    );

    // Joint condition over two independent fields: density 1/4.
    let f5 = QuadField::new(5)?;
    let joint = sieve_stats(bound, |p| {
        matches!(frobenius_quad(p, &field), FrobeniusSymbol::Split)
            && matches!(frobenius_quad(p, &f5), FrobeniusSymbol::Inert)
    })?;
    println!(
        "split in Q(i) and inert in Q(sqrt 5): {} ({}), expected 1/4",
        joint.count,
        ratio_string(joint.density)
    );

    // Dependent conditions do not multiply: the sign at -4 is determined
    // by the signs at 8 and -8, so this triple condition has density 1/4,
    // not 1/8.
    let f2 = QuadField::new(2)?;
    let fm2 = QuadField::new(-2)?;
    let dependent = sieve_stats(bound, |p| {
        matches!(frobenius_quad(p, &field), FrobeniusSymbol::Split)
            && matches!(frobenius_quad(p, &f2), FrobeniusSymbol::Split)
            && matches!(frobenius_quad(p, &fm2), FrobeniusSymbol::Split)
    })?;
    println!(
        "split in all of Q(i), Q(sqrt 2), Q(sqrt -2): {} ({}), expected 1/4",
        dependent.count,
        ratio_string(dependent.density)
    );

    let members: Vec<u64> = dependent.members.iter().take(8).copied().collect();
    println!("first such primes: {members:?}  (all are 1 mod 8)");
    Ok(())
}
