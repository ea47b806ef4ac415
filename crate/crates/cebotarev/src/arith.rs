//! Splitting arithmetic over the rationals.
//!
//! Everything reduces to Kronecker symbols. A quadratic field is its
//! squarefree radicand, Frobenius at an unramified prime is the symbol of the
//! fundamental discriminant, and multiquadratic data lives in GF(2) vectors
//! over the square-class coordinates {-1, 2, odd primes}.

use std::collections::BTreeMap;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on sieve bounds.
pub const SIEVE_CAP: u64 = 10_000_000;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Kronecker symbol (a|n), the full extension of the Legendre symbol:
/// multiplicative in both arguments, zero exactly when gcd(a, n) > 1.
pub fn kronecker(a: i64, n: i64) -> i32 {
    // (a|2) by residue mod 8.
    const TAB2: [i32; 8] = [0, 1, 0, -1, 0, -1, 0, 1];
    let (mut a, mut n) = (a, n);
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    if a % 2 == 0 && n % 2 == 0 {
        return 0;
    }
    let mut v = 0u32;
    while n % 2 == 0 {
        n /= 2;
        v += 1;
    }
    let mut k = if v % 2 == 0 { 1 } else { TAB2[(a & 7) as usize] };
    if n < 0 {
        n = -n;
        if a < 0 {
            k = -k;
        }
    }
    loop {
        // n odd and positive from here on.
        if a == 0 {
            return if n > 1 { 0 } else { k };
        }
        v = 0;
        while a % 2 == 0 {
            a /= 2;
            v += 1;
        }
        if v % 2 == 1 {
            k *= TAB2[(n & 7) as usize];
        }
        // Reciprocity flip; the bit test reads residues mod 4 in two's
        // complement, which is exact for negative a as well.
        if a & n & 2 != 0 {
            k = -k;
        }
        let r = a.abs();
        a = n % r;
        n = r;
    }
}

pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_squarefree(n: i64) -> bool {
    n != 0 && factor(n.unsigned_abs()).iter().all(|&(_, e)| e == 1)
}

/// All primes up to and including `bound`, ascending.
pub fn primes_up_to(bound: u64) -> Result<Vec<u64>> {
    if bound > SIEVE_CAP {
        return Err(Error::SieveCap { bound, cap: SIEVE_CAP });
    }
    if bound < 2 {
        return Ok(Vec::new());
    }
    let n = bound as usize;
    let mut composite = vec![false; n + 1];
    let mut p = 2usize;
    while p * p <= n {
        if !composite[p] {
            let mut m = p * p;
            while m <= n {
                composite[m] = true;
                m += p;
            }
        }
        p += 1;
    }
    Ok((2..=n).filter(|&x| !composite[x]).map(|x| x as u64).collect())
}

/// Quadratic field by its squarefree radicand a (not 0 or 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuadField {
    radicand: i64,
}

impl QuadField {
    pub fn new(radicand: i64) -> Result<QuadField> {
        if radicand == 0 || radicand == 1 || !is_squarefree(radicand) {
            return Err(Error::BadRadicand(radicand));
        }
        Ok(QuadField { radicand })
    }

    pub fn radicand(&self) -> i64 {
        self.radicand
    }

    /// a if a = 1 mod 4, else 4a.
    pub fn discriminant(&self) -> i64 {
        if self.radicand.rem_euclid(4) == 1 {
            self.radicand
        } else {
            4 * self.radicand
        }
    }

    /// Primes dividing the discriminant, ascending.
    pub fn ramified_primes(&self) -> Vec<u64> {
        factor(self.discriminant().unsigned_abs()).into_iter().map(|(p, _)| p).collect()
    }
}

impl std::fmt::Display for QuadField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Q(sqrt({}))", self.radicand)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrobeniusSymbol {
    Split,
    Inert,
    Ramified,
}

impl FrobeniusSymbol {
    pub fn sign(&self) -> i8 {
        match self {
            FrobeniusSymbol::Split => 1,
            FrobeniusSymbol::Inert => -1,
            FrobeniusSymbol::Ramified => 0,
        }
    }

    pub fn from_sign(sign: i8) -> Result<FrobeniusSymbol> {
        match sign {
            1 => Ok(FrobeniusSymbol::Split),
            -1 => Ok(FrobeniusSymbol::Inert),
            _ => Err(Error::BadAtom(format!("sign must be +1 or -1, got {sign}"))),
        }
    }
}

/// Frobenius of a prime in a quadratic field: the Kronecker symbol of the
/// fundamental discriminant. `p` must be prime.
pub fn frobenius_quad(p: u64, field: &QuadField) -> FrobeniusSymbol {
    debug_assert!(is_prime(p), "{p} is not prime");
    match kronecker(field.discriminant(), p as i64) {
        1 => FrobeniusSymbol::Split,
        -1 => FrobeniusSymbol::Inert,
        _ => FrobeniusSymbol::Ramified,
    }
}

/// Frobenius data in the n-th cyclotomic field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CycloClass {
    Ramified,
    Residue(u64),
}

/// Conductors are n >= 3 with n != 2 mod 4 (those repeat smaller fields).
/// Unramified Frobenius is the residue of p in (Z/n)*.
pub fn frobenius_cyclotomic(p: u64, conductor: u64) -> Result<CycloClass> {
    if conductor < 3 || conductor % 4 == 2 {
        return Err(Error::BadConductor(conductor));
    }
    debug_assert!(is_prime(p), "{p} is not prime");
    if conductor % p == 0 {
        Ok(CycloClass::Ramified)
    } else {
        Ok(CycloClass::Residue(p % conductor))
    }
}

/// Signature of a prime over a multiquadratic basis: one Frobenius sign per
/// basis field, or the positions where the prime ramifies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    Unramified(Vec<i8>),
    Ramified(Vec<usize>),
}

#[derive(Clone, Debug)]
struct Row {
    /// GF(2) support vector over `coords`.
    vec: u64,
    pivot: u32,
    /// Which basis radicands multiply to this vector modulo squares.
    expr: u32,
}

/// A list of square classes with a GF(2) basis extracted by Gaussian
/// elimination in input order. Coordinates are the sign and the primes
/// appearing in any input.
#[derive(Clone, Debug)]
pub struct MultiQuadContext {
    inputs: Vec<i64>,
    /// For each input, its expression as a product of basis radicands.
    input_exprs: Vec<u32>,
    basis: Vec<i64>,
    rows: Vec<Row>,
    coords: Vec<i64>,
}

impl MultiQuadContext {
    pub fn new(radicands: &[i64]) -> Result<MultiQuadContext> {
        let mut ctx = MultiQuadContext {
            inputs: Vec::new(),
            input_exprs: Vec::new(),
            basis: Vec::new(),
            rows: Vec::new(),
            coords: Vec::new(),
        };
        for &a in radicands {
            QuadField::new(a)?;
            let v = ctx.support_mask_mut(a)?;
            let (residual, expr) = ctx.reduce(v);
            if residual == 0 {
                ctx.input_exprs.push(expr);
            } else {
                let s = ctx.basis.len();
                if s >= 32 {
                    return Err(Error::BadRadicand(a));
                }
                let new_expr = expr ^ (1 << s);
                let pivot = residual.trailing_zeros();
                // Keep reduced echelon form: clear the new pivot everywhere.
                for row in &mut ctx.rows {
                    if row.vec >> pivot & 1 == 1 {
                        row.vec ^= residual;
                        row.expr ^= new_expr;
                    }
                }
                ctx.rows.push(Row { vec: residual, pivot, expr: new_expr });
                ctx.basis.push(a);
                ctx.input_exprs.push(1 << s);
            }
            ctx.inputs.push(a);
        }
        Ok(ctx)
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn inputs(&self) -> &[i64] {
        &self.inputs
    }

    pub fn basis(&self) -> &[i64] {
        &self.basis
    }

    /// Expression of input i over the basis, as a bitmask of basis positions.
    pub fn input_expression(&self, i: usize) -> u32 {
        self.input_exprs[i]
    }

    /// Expresses a square class over the basis, if it lies in the span.
    pub fn expression_of(&self, a: i64) -> Result<Option<u32>> {
        QuadField::new(a)?;
        let Some(v) = self.support_mask(a) else {
            return Ok(None);
        };
        let (residual, expr) = self.reduce(v);
        Ok(if residual == 0 { Some(expr) } else { None })
    }

    /// Primes ramifying somewhere in the compositum, ascending.
    pub fn ramified_primes(&self) -> Vec<u64> {
        let mut set = std::collections::BTreeSet::new();
        for &b in &self.basis {
            set.extend(QuadField::new(b).expect("basis validated").ramified_primes());
        }
        set.into_iter().collect()
    }

    /// Frobenius signs of p over the basis fields. `p` must be prime.
    pub fn signature(&self, p: u64) -> Signature {
        let mut signs = Vec::with_capacity(self.basis.len());
        let mut ramified = Vec::new();
        for (i, &b) in self.basis.iter().enumerate() {
            let f = QuadField::new(b).expect("basis validated");
            match frobenius_quad(p, &f) {
                FrobeniusSymbol::Ramified => ramified.push(i),
                s => signs.push(s.sign()),
            }
        }
        if ramified.is_empty() {
            Signature::Unramified(signs)
        } else {
            Signature::Ramified(ramified)
        }
    }

    /// Packs a sign vector into 0..2^s: bit i set iff entry i is -1.
    pub fn signature_index(signs: &[i8]) -> usize {
        signs.iter().enumerate().fold(0, |acc, (i, &s)| acc | (usize::from(s < 0) << i))
    }

    fn coord(&self, place: i64) -> Option<u32> {
        self.coords.iter().position(|&c| c == place).map(|i| i as u32)
    }

    fn support_places(a: i64) -> Vec<i64> {
        let mut places = Vec::new();
        if a < 0 {
            places.push(-1);
        }
        places.extend(factor(a.unsigned_abs()).into_iter().map(|(p, _)| p as i64));
        places
    }

    fn support_mask(&self, a: i64) -> Option<u64> {
        let mut v = 0u64;
        for place in Self::support_places(a) {
            v |= 1u64 << self.coord(place)?;
        }
        Some(v)
    }

    fn support_mask_mut(&mut self, a: i64) -> Result<u64> {
        let mut v = 0u64;
        for place in Self::support_places(a) {
            let idx = match self.coord(place) {
                Some(i) => i,
                None => {
                    if self.coords.len() >= 64 {
                        return Err(Error::BadRadicand(a));
                    }
                    self.coords.push(place);
                    (self.coords.len() - 1) as u32
                }
            };
            v |= 1u64 << idx;
        }
        Ok(v)
    }

    fn reduce(&self, mut v: u64) -> (u64, u32) {
        let mut expr = 0u32;
        for row in &self.rows {
            if v >> row.pivot & 1 == 1 {
                v ^= row.vec;
                expr ^= row.expr;
            }
        }
        (v, expr)
    }
}

/// Canonical text form of an exact rational: "n" when integral, else "n/d".
pub fn ratio_string(r: Rational64) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) fn serialize_ratio<S: serde::Serializer>(
    r: &Rational64,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&ratio_string(*r))
}

#[derive(Clone, Debug, Serialize)]
pub struct SieveStats {
    pub bound: u64,
    /// pi(bound): primes examined.
    pub primes_checked: usize,
    pub members: Vec<u64>,
    pub count: usize,
    /// count / pi(bound), exact.
    #[serde(serialize_with = "serialize_ratio")]
    pub density: Rational64,
}

/// Runs a predicate over every prime up to `bound`.
pub fn sieve_stats(bound: u64, pred: impl Fn(u64) -> bool) -> Result<SieveStats> {
    let primes = primes_up_to(bound)?;
    let primes_checked = primes.len();
    let members: Vec<u64> = primes.into_iter().filter(|&p| pred(p)).collect();
    let count = members.len();
    let density = if primes_checked == 0 {
        Rational64::new(0, 1)
    } else {
        Rational64::new(count as i64, primes_checked as i64)
    };
    Ok(SieveStats { bound, primes_checked, members, count, density })
}

/// epsilon(2) = 0 and epsilon(l) = (l-1)/2 for odd l, read mod 2.
pub fn epsilon(p: u64) -> u32 {
    if p == 2 {
        0
    } else {
        (((p - 1) / 2) % 2) as u32
    }
}

/// The field Q(sqrt((-1)^epsilon(p) p)): discriminant supported exactly at p
/// (at 2 the field is Q(sqrt 2), discriminant 8).
pub fn exceptional_field(p: u64) -> Result<QuadField> {
    if !is_prime(p) {
        return Err(Error::BadRadicand(p as i64));
    }
    let radicand = if epsilon(p) == 0 { p as i64 } else { -(p as i64) };
    QuadField::new(radicand)
}

/// Primes q <= bound lying in every P(sigma'_p) up to the exception q = p,
/// where sigma'_p = -sigma_p and the fields are the exceptional fields L_p.
/// The assignment maps each p in S to sigma_p.
pub fn exceptional_primes(assignment: &BTreeMap<u64, i8>, bound: u64) -> Result<Vec<u64>> {
    let mut fields = Vec::new();
    for (&p, &sigma) in assignment {
        if sigma != 1 && sigma != -1 {
            return Err(Error::BadAtom(format!("sign for {p} must be +1 or -1, got {sigma}")));
        }
        fields.push((p, exceptional_field(p)?, -sigma));
    }
    let survivors = sieve_stats(bound, |q| {
        fields
            .iter()
            .all(|&(p, ref lp, target)| q == p || frobenius_quad(q, lp).sign() == target)
    })?;
    Ok(survivors.members)
}

/// The assignment whose survivor conditions are exactly the Frobenius signs
/// of q0, so q0 itself survives: sigma_p = -frobenius(q0, L_p).
pub fn assignment_avoiding(q0: u64, s: &[u64]) -> Result<BTreeMap<u64, i8>> {
    if !is_prime(q0) {
        return Err(Error::BadRadicand(q0 as i64));
    }
    let mut out = BTreeMap::new();
    for &p in s {
        let lp = exceptional_field(p)?;
        let f = frobenius_quad(q0, &lp);
        if f == FrobeniusSymbol::Ramified && q0 != p {
            return Err(Error::Internal(format!("{q0} ramifies in L_{p}")));
        }
        // q0 = p satisfies the exception clause; pick +1 arbitrarily there.
        let sign = if q0 == p { 1 } else { -f.sign() };
        out.insert(p, sign);
    }
    Ok(out)
}
