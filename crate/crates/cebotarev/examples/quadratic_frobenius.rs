//! Splitting symbols in quadratic and cyclotomic fields, and joint splitting
//! signatures over a multiquadratic compositum.

use cebotarev::arith::{
    frobenius_cyclotomic, frobenius_quad, CycloClass, FrobeniusSymbol, MultiQuadContext,
    QuadField, Signature,
};
use cebotarev::Result;

fn main() -> Result<()> {
    let field = QuadField::new(5)?;
    println!(
        "Q(sqrt 5): radicand {}, discriminant {}, ramified {:?}",
        field.radicand(),
        field.discriminant(),
        field.ramified_primes()
    );
    for p in [2u64, 5, 11, 19, 23] {
        let sym = match frobenius_quad(p, &field) {
            FrobeniusSymbol::Split => "split",
            FrobeniusSymbol::Inert => "inert",
            FrobeniusSymbol::Ramified => "ramified",
        };
        println!("  {p}: {sym}");
    }

    // Q(i) ramifies only at 2; the discriminant is -4.
    let gauss = QuadField::new(-1)?;
    println!(
        "Q(i): discriminant {}, ramified {:?}",
        gauss.discriminant(),
        gauss.ramified_primes()
    );

    // In the eighth cyclotomic field the symbol is the residue of p mod 8.
    for p in [3u64, 5, 7, 17] {
        match frobenius_cyclotomic(p, 8)? {
            CycloClass::Residue(r) => println!("Q(zeta_8) at {p}: residue {r}"),
            CycloClass::Ramified => println!("Q(zeta_8) at {p}: ramified"),
        }
    }

    // A compositum tracks all sign coordinates at once. Dependent radicands
    // collapse: -1, 2, and -2 span only a rank-2 group of sign characters.
    let ctx = MultiQuadContext::new(&[-1, 2, -2])?;
    println!(
        "compositum of sqrt(-1), sqrt(2), sqrt(-2): rank {}, basis {:?}",
        ctx.rank(),
        ctx.basis()
    );
    for p in [3u64, 7, 17, 23, 2] {
        match ctx.signature(p) {
            Signature::Unramified(signs) => println!("  {p}: signs {signs:?}"),
            Signature::Ramified(at) => println!("  {p}: ramified at basis slots {at:?}"),
        }
    }
    Ok(())
}
