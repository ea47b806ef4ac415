//! Pins a target prime with one sign condition per small prime, then lists
//! which primes survive all the conditions.
//!
//! Each p <= 50 contributes the field Q(sqrt((-1)^eps p)) whose discriminant
//! is supported only at p, and a sign matched to the symbol the target
//! q0 = 101 actually has there. The target survives every condition by
//! construction; with one independent sign demand per small prime, few
//! other primes do.

use cebotarev::arith::{assignment_avoiding, exceptional_field, exceptional_primes, primes_up_to};
use cebotarev::Result;

fn main() -> Result<()> {
    let q0 = 101u64;
    let small = primes_up_to(50)?;
    let assignment = assignment_avoiding(q0, &small)?;

    println!("survivor conditions matched to {q0}:");
    for (&p, &sign) in &assignment {
        let field = exceptional_field(p)?;
        let want = if -sign == 1 { "+1" } else { "-1" };
        println!("  symbol in Q(sqrt {}) must be {want}", field.radicand());
    }

    let survivors = exceptional_primes(&assignment, 100_000)?;
    println!(
        "{} survivors up to 100000, first few: {:?}",
        survivors.len(),
        &survivors[..survivors.len().min(12)]
    );
    println!("{q0} survives: {}", survivors.contains(&q0));
    println!("smallest survivor: {:?}", survivors.first());
    Ok(())
}
