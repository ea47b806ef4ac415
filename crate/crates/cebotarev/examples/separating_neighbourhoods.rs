//! Separates pairs of primes by disjoint certified clopen neighbourhoods,
//! and checks the separation empirically.

use cebotarev::arith::primes_up_to;
use cebotarev::topology::separate_primes;
use cebotarev::Result;

fn main() -> Result<()> {
    for (p1, p2) in [(7u64, 2u64), (13, 19), (3, 5)] {
        let sep = separate_primes(p1, p2)?;
        println!("separating {p1} and {p2}:");
        println!(
            "  auxiliary primes q1 = {}, q2 = {}, sign targets {} and {}",
            sep.q1, sep.q2, sep.sigma1, sep.sigma2
        );
        println!(
            "  W1 certified {}, W2 certified {}, disjoint {}",
            sep.w1_certificate.certified, sep.w2_certificate.certified, sep.disjoint
        );
        println!(
            "  W1 holds {p1}: {};  W2 holds {p2}: {}",
            sep.w1.member(p1),
            sep.w2.member(p2)
        );

        // Empirical check: no prime up to 100000 lies in both.
        let mut overlap = 0usize;
        for p in primes_up_to(100_000)? {
            if sep.w1.member(p) && sep.w2.member(p) {
                overlap += 1;
            }
        }
        println!("  primes in both up to 100000: {overlap}");
    }
    Ok(())
}
