//! Finitely presented clopen sets of rational primes.
//!
//! A set is presented as a union of clauses (conjunctions of splitting
//! conditions in quadratic or cyclotomic fields) adjusted by finitely many
//! explicitly added/removed primes. Closedness is certified by a sound,
//! incomplete over-approximation argument; exact boolean algebra happens in
//! the signature space of a [`MultiQuadContext`] universe.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::arith::{
    frobenius_quad, is_prime, kronecker, MultiQuadContext, QuadField, Signature,
};
use crate::error::{Error, Result};

/// Largest universe rank the signature bitsets support (2^16 cells).
pub const MAX_SIG_RANK: usize = 16;

const AUX_PRIME_SEARCH_BOUND: u64 = 1_000_000;
const COVER_WITNESS_BOUND: u64 = 1_000_000;

/// One splitting condition: a Frobenius sign in a quadratic field, or a
/// residue class for the conductor of a cyclotomic field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AtomRepr", into = "AtomRepr")]
pub enum Atom {
    Quad { field: QuadField, sign: i8 },
    Cyclo { conductor: u64, residue: u64 },
}

#[derive(Serialize, Deserialize)]
struct AtomRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quad: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sign: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cyclo: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    residue: Option<u64>,
}

impl TryFrom<AtomRepr> for Atom {
    type Error = Error;

    fn try_from(r: AtomRepr) -> Result<Atom> {
        match (r.quad, r.sign, r.cyclo, r.residue) {
            (Some(a), Some(s), None, None) => Atom::quad(a, s),
            (None, None, Some(n), Some(res)) => Atom::cyclo(n, res),
            _ => Err(Error::BadAtom(
                "expected {\"quad\": a, \"sign\": s} or {\"cyclo\": n, \"residue\": r}".into(),
            )),
        }
    }
}

impl From<Atom> for AtomRepr {
    fn from(a: Atom) -> AtomRepr {
        match a {
            Atom::Quad { field, sign } => AtomRepr {
                quad: Some(field.radicand()),
                sign: Some(sign),
                cyclo: None,
                residue: None,
            },
            Atom::Cyclo { conductor, residue } => AtomRepr {
                quad: None,
                sign: None,
                cyclo: Some(conductor),
                residue: Some(residue),
            },
        }
    }
}

impl Atom {
    pub fn quad(radicand: i64, sign: i8) -> Result<Atom> {
        if sign != 1 && sign != -1 {
            return Err(Error::BadAtom(format!("sign {sign} is not +1 or -1")));
        }
        Ok(Atom::Quad { field: QuadField::new(radicand)?, sign })
    }

    /// Conductor must be >= 3 and not 2 mod 4; the residue a reduced unit.
    pub fn cyclo(conductor: u64, residue: u64) -> Result<Atom> {
        if conductor < 3 || conductor % 4 == 2 {
            return Err(Error::BadConductor(conductor));
        }
        let residue = residue % conductor;
        if residue.gcd(&conductor) != 1 {
            return Err(Error::BadAtom(format!(
                "residue {residue} is not a unit mod {conductor}"
            )));
        }
        Ok(Atom::Cyclo { conductor, residue })
    }

    pub fn ramified_at(&self, p: u64) -> bool {
        match self {
            Atom::Quad { field, .. } => field.ramified_primes().contains(&p),
            Atom::Cyclo { conductor, .. } => conductor % p == 0,
        }
    }

    pub fn ramified_primes(&self) -> Vec<u64> {
        match self {
            Atom::Quad { field, .. } => field.ramified_primes(),
            Atom::Cyclo { conductor, .. } => {
                crate::arith::factor(*conductor).into_iter().map(|(p, _)| p).collect()
            }
        }
    }

    /// Frobenius condition holds at p (in particular p is unramified here).
    pub fn strongly_satisfied_by(&self, p: u64) -> bool {
        match self {
            Atom::Quad { field, sign } => {
                !self.ramified_at(p) && frobenius_quad(p, field).sign() == *sign
            }
            Atom::Cyclo { conductor, residue } => {
                conductor % p != 0 && p % conductor == *residue
            }
        }
    }

    /// Holds or could hold after ramification: used by the closure bound.
    pub fn weakly_satisfied_by(&self, p: u64) -> bool {
        self.ramified_at(p) || self.strongly_satisfied_by(p)
    }

    fn sort_key(&self) -> (u8, i64, i64) {
        match self {
            Atom::Quad { field, sign } => (0, field.radicand(), i64::from(*sign)),
            Atom::Cyclo { conductor, residue } => (1, *conductor as i64, *residue as i64),
        }
    }

    /// Two conditions on the same field that no prime satisfies together.
    fn contradicts(&self, other: &Atom) -> bool {
        match (self, other) {
            (Atom::Quad { field: f, sign: s }, Atom::Quad { field: g, sign: t }) => {
                f == g && s != t
            }
            (Atom::Cyclo { conductor: n, residue: r }, Atom::Cyclo { conductor: m, residue: q }) => {
                n == m && r != q
            }
            _ => false,
        }
    }
}

impl std::fmt::Display for Atom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Atom::Quad { field, sign } => write!(f, "({}|{})", field.radicand(), sign),
            Atom::Cyclo { conductor, residue } => write!(f, "(mod {conductor}={residue})"),
        }
    }
}

/// Union of conjunctive clauses over [`Atom`]s, plus finitely many explicit
/// exceptions. `added` primes are members regardless of the clauses; `removed`
/// primes are not members. Canonical form: atoms and clauses sorted and
/// deduplicated, contradictory and subsumed clauses dropped, `added` keeps
/// only primes no clause already captures, `removed` keeps only primes that
/// weakly satisfy some clause (those carry the closedness certificate).
///
/// The full set is the single empty clause; the empty set has no clauses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FinPresRepr")]
pub struct FinPresSet {
    clauses: Vec<Vec<Atom>>,
    #[serde(skip_serializing_if = "BTreeSet::is_empty")]
    added: BTreeSet<u64>,
    #[serde(skip_serializing_if = "BTreeSet::is_empty")]
    removed: BTreeSet<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FinPresRepr {
    clauses: Vec<Vec<Atom>>,
    #[serde(default)]
    added: Vec<u64>,
    #[serde(default)]
    removed: Vec<u64>,
}

impl TryFrom<FinPresRepr> for FinPresSet {
    type Error = Error;

    fn try_from(r: FinPresRepr) -> Result<FinPresSet> {
        FinPresSet::new(
            r.clauses,
            r.added.into_iter().collect(),
            r.removed.into_iter().collect(),
        )
    }
}

impl FinPresSet {
    pub fn new(
        clauses: Vec<Vec<Atom>>,
        added: BTreeSet<u64>,
        removed: BTreeSet<u64>,
    ) -> Result<FinPresSet> {
        for &p in added.iter().chain(removed.iter()) {
            if !is_prime(p) {
                return Err(Error::BadPresentation(format!("exception {p} is not prime")));
            }
        }
        if let Some(p) = added.intersection(&removed).next() {
            return Err(Error::BadPresentation(format!("{p} both added and removed")));
        }
        let mut s = FinPresSet { clauses, added, removed };
        s.canonicalize();
        Ok(s)
    }

    pub fn from_clause(atoms: Vec<Atom>) -> FinPresSet {
        let mut s = FinPresSet { clauses: vec![atoms], added: BTreeSet::new(), removed: BTreeSet::new() };
        s.canonicalize();
        s
    }

    /// All primes: one empty clause.
    pub fn full() -> FinPresSet {
        FinPresSet { clauses: vec![Vec::new()], added: BTreeSet::new(), removed: BTreeSet::new() }
    }

    pub fn empty() -> FinPresSet {
        FinPresSet { clauses: Vec::new(), added: BTreeSet::new(), removed: BTreeSet::new() }
    }

    pub fn clauses(&self) -> &[Vec<Atom>] {
        &self.clauses
    }

    pub fn added(&self) -> &BTreeSet<u64> {
        &self.added
    }

    pub fn removed(&self) -> &BTreeSet<u64> {
        &self.removed
    }

    /// Membership of a prime.
    pub fn member(&self, p: u64) -> bool {
        debug_assert!(is_prime(p));
        if self.added.contains(&p) {
            return true;
        }
        if self.removed.contains(&p) {
            return false;
        }
        self.clauses.iter().any(|c| c.iter().all(|a| a.strongly_satisfied_by(p)))
    }

    /// Membership in the closure over-approximation: clause-wise weak
    /// satisfaction, minus removed, plus added.
    pub fn over_approx_member(&self, p: u64) -> bool {
        if self.added.contains(&p) {
            return true;
        }
        if self.removed.contains(&p) {
            return false;
        }
        self.clauses.iter().any(|c| c.iter().all(|a| a.weakly_satisfied_by(p)))
    }

    /// Distinct quadratic radicands appearing in any clause, input order.
    pub fn quad_radicands(&self) -> Vec<i64> {
        let mut out = Vec::new();
        for c in &self.clauses {
            for a in c {
                if let Atom::Quad { field, .. } = a {
                    if !out.contains(&field.radicand()) {
                        out.push(field.radicand());
                    }
                }
            }
        }
        out
    }

    fn ramified_candidates(&self) -> BTreeSet<u64> {
        let mut set = BTreeSet::new();
        for c in &self.clauses {
            for a in c {
                set.extend(a.ramified_primes());
            }
        }
        set
    }

    fn canonicalize(&mut self) {
        for c in &mut self.clauses {
            c.sort_by_key(Atom::sort_key);
            c.dedup();
        }
        self.clauses.retain(|c| {
            !c.iter().enumerate().any(|(i, a)| c[i + 1..].iter().any(|b| a.contradicts(b)))
        });
        self.clauses.sort_by(|a, b| {
            let ka: Vec<_> = a.iter().map(Atom::sort_key).collect();
            let kb: Vec<_> = b.iter().map(Atom::sort_key).collect();
            ka.cmp(&kb)
        });
        self.clauses.dedup();
        // A clause implies any clause it extends; keep the smaller one.
        let keep: Vec<bool> = self
            .clauses
            .iter()
            .map(|c| {
                !self
                    .clauses
                    .iter()
                    .any(|d| d != c && d.iter().all(|a| c.contains(a)))
            })
            .collect();
        let mut it = keep.iter();
        self.clauses.retain(|_| *it.next().expect("same length"));
        let clauses = std::mem::take(&mut self.clauses);
        self.added.retain(|&p| {
            !clauses.iter().any(|c| c.iter().all(|a| a.strongly_satisfied_by(p)))
        });
        self.removed.retain(|&p| {
            clauses.iter().any(|c| c.iter().all(|a| a.weakly_satisfied_by(p)))
        });
        self.clauses = clauses;
    }
}

impl std::fmt::Display for FinPresSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.clauses.is_empty() {
            write!(f, "(none)")?;
        } else if self.clauses.len() == 1 && self.clauses[0].is_empty() {
            write!(f, "(all)")?;
        } else {
            for (i, c) in self.clauses.iter().enumerate() {
                if i > 0 {
                    write!(f, " | ")?;
                }
                for (j, a) in c.iter().enumerate() {
                    if j > 0 {
                        write!(f, " & ")?;
                    }
                    write!(f, "{a}")?;
                }
            }
        }
        if !self.added.is_empty() {
            let v: Vec<String> = self.added.iter().map(u64::to_string).collect();
            write!(f, " + {{{}}}", v.join(","))?;
        }
        if !self.removed.is_empty() {
            let v: Vec<String> = self.removed.iter().map(u64::to_string).collect();
            write!(f, " \\ {{{}}}", v.join(","))?;
        }
        Ok(())
    }
}

/// Result of the closedness check. `certified` means the over-approximation
/// adds nothing, which soundly implies the set is closed; otherwise `witness`
/// is the smallest prime in the gap. `candidates` lists the only primes whose
/// membership the two evaluations can disagree on, and `over_approx` is the
/// over-approximation materialized as a presentation.
#[derive(Clone, Debug, Serialize)]
pub struct ClopenCertificate {
    pub certified: bool,
    pub witness: Option<u64>,
    pub candidates: Vec<u64>,
    pub over_approx: FinPresSet,
}

/// Checks whether the clause-wise ramified over-approximation of the closure
/// collapses back onto the set itself.
pub fn closure_over_approx(s: &FinPresSet) -> ClopenCertificate {
    let candidates: Vec<u64> = s
        .ramified_candidates()
        .into_iter()
        .filter(|p| !s.added.contains(p) && !s.removed.contains(p))
        .collect();
    let gap: Vec<u64> = candidates
        .iter()
        .copied()
        .filter(|&p| s.over_approx_member(p) && !s.member(p))
        .collect();
    let over_approx = FinPresSet::new(
        s.clauses.clone(),
        s.added.union(&gap.iter().copied().collect()).copied().collect(),
        s.removed.clone(),
    )
    .expect("gap primes are fresh ramified primes");
    ClopenCertificate {
        certified: gap.is_empty(),
        witness: gap.first().copied(),
        candidates,
        over_approx,
    }
}

/// A set in signature coordinates: one bit per sign pattern over the universe
/// basis, plus explicit per-prime exceptions. Every prime ramified in the
/// universe is always an exception key; an unramified key is kept only when
/// its value differs from the bit of its own pattern, so equal sets have
/// equal representations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigSet {
    rank: usize,
    words: Vec<u64>,
    exceptions: BTreeMap<u64, bool>,
}

impl SigSet {
    fn cells(rank: usize) -> usize {
        1usize << rank
    }

    fn blank(rank: usize) -> SigSet {
        SigSet {
            rank,
            words: vec![0; Self::cells(rank).div_ceil(64)],
            exceptions: BTreeMap::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn exceptions(&self) -> &BTreeMap<u64, bool> {
        &self.exceptions
    }

    /// Builds a canonical set over `universe` from a per-cell membership rule
    /// plus a membership oracle for the exception keys (the universe's
    /// ramified primes, extended by `extra_keys`).
    pub fn build(
        universe: &MultiQuadContext,
        cell_member: impl Fn(usize) -> bool,
        prime_member: impl Fn(u64) -> bool,
        extra_keys: &BTreeSet<u64>,
    ) -> Result<SigSet> {
        let rank = universe.rank();
        if rank > MAX_SIG_RANK {
            return Err(Error::BadConfig(format!(
                "signature universe rank {rank} exceeds {MAX_SIG_RANK}"
            )));
        }
        let mut sig = SigSet::blank(rank);
        for cell in 0..Self::cells(rank) {
            sig.set_bit(cell, cell_member(cell));
        }
        for p in universe.ramified_primes() {
            sig.exceptions.insert(p, prime_member(p));
        }
        for &p in extra_keys {
            sig.exceptions.entry(p).or_insert_with(|| prime_member(p));
        }
        Ok(sig.canonical(universe))
    }

    /// Membership bit of an unramified sign-pattern cell.
    pub fn cell_bit(&self, cell: usize) -> bool {
        self.bit(cell)
    }

    fn bit(&self, cell: usize) -> bool {
        self.words[cell / 64] >> (cell % 64) & 1 == 1
    }

    fn set_bit(&mut self, cell: usize, v: bool) {
        if v {
            self.words[cell / 64] |= 1 << (cell % 64);
        } else {
            self.words[cell / 64] &= !(1 << (cell % 64));
        }
    }

    fn cell_of(&self, p: u64, universe: &MultiQuadContext) -> Option<usize> {
        match universe.signature(p) {
            Signature::Unramified(signs) => Some(MultiQuadContext::signature_index(&signs)),
            Signature::Ramified(_) => None,
        }
    }

    /// Membership of a prime: its exception value if listed, else the bit of
    /// its sign pattern.
    pub fn member(&self, p: u64, universe: &MultiQuadContext) -> bool {
        if let Some(&v) = self.exceptions.get(&p) {
            return v;
        }
        let cell = self.cell_of(p, universe).expect("ramified primes are always exception keys");
        self.bit(cell)
    }

    pub fn is_empty_set(&self) -> bool {
        self.words.iter().all(|&w| w == 0) && self.exceptions.values().all(|&v| !v)
    }

    pub fn is_full_set(&self) -> bool {
        let cells = Self::cells(self.rank);
        (0..cells).all(|c| self.bit(c)) && self.exceptions.values().all(|&v| v)
    }

    pub fn count_cells(&self) -> usize {
        (0..Self::cells(self.rank)).filter(|&c| self.bit(c)).count()
    }

    fn canonical(mut self, universe: &MultiQuadContext) -> SigSet {
        let mandatory: BTreeSet<u64> = universe.ramified_primes().into_iter().collect();
        let mut keep = BTreeMap::new();
        for (&p, &v) in &self.exceptions {
            if mandatory.contains(&p) {
                keep.insert(p, v);
                continue;
            }
            let cell = self.cell_of(p, universe).expect("non-mandatory keys are unramified");
            if self.bit(cell) != v {
                keep.insert(p, v);
            }
        }
        self.exceptions = keep;
        self
    }

    fn combine(
        &self,
        other: &SigSet,
        universe: &MultiQuadContext,
        word_op: impl Fn(u64, u64) -> u64,
        val_op: impl Fn(bool, bool) -> bool,
    ) -> SigSet {
        assert_eq!(self.rank, other.rank, "signature sets from different universes");
        let mut out = SigSet::blank(self.rank);
        for (i, w) in out.words.iter_mut().enumerate() {
            *w = word_op(self.words[i], other.words[i]);
        }
        let keys: BTreeSet<u64> =
            self.exceptions.keys().chain(other.exceptions.keys()).copied().collect();
        for p in keys {
            let a = self
                .exceptions
                .get(&p)
                .copied()
                .unwrap_or_else(|| self.bit(self.cell_of(p, universe).expect("unramified")));
            let b = other
                .exceptions
                .get(&p)
                .copied()
                .unwrap_or_else(|| other.bit(other.cell_of(p, universe).expect("unramified")));
            out.exceptions.insert(p, val_op(a, b));
        }
        out.mask_tail();
        out.canonical(universe)
    }

    pub fn and(&self, other: &SigSet, universe: &MultiQuadContext) -> SigSet {
        self.combine(other, universe, |a, b| a & b, |a, b| a && b)
    }

    pub fn or(&self, other: &SigSet, universe: &MultiQuadContext) -> SigSet {
        self.combine(other, universe, |a, b| a | b, |a, b| a || b)
    }

    pub fn minus(&self, other: &SigSet, universe: &MultiQuadContext) -> SigSet {
        self.combine(other, universe, |a, b| a & !b, |a, b| a && !b)
    }

    pub fn not(&self, universe: &MultiQuadContext) -> SigSet {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        for v in out.exceptions.values_mut() {
            *v = !*v;
        }
        out.mask_tail();
        out.canonical(universe)
    }

    pub fn subset_of(&self, other: &SigSet, universe: &MultiQuadContext) -> bool {
        self.minus(other, universe).is_empty_set()
    }

    fn mask_tail(&mut self) {
        let cells = Self::cells(self.rank);
        let last = self.words.len() - 1;
        let used = cells - last * 64;
        if used < 64 {
            self.words[last] &= (1u64 << used) - 1;
        }
    }
}

/// Translates a presentation into signature coordinates. Every clause atom
/// must be quadratic with its radicand in the span of the universe.
pub fn to_sig(s: &FinPresSet, universe: &MultiQuadContext) -> Result<SigSet> {
    let rank = universe.rank();
    if rank > MAX_SIG_RANK {
        return Err(Error::BadConfig(format!(
            "signature universe rank {rank} exceeds {MAX_SIG_RANK}"
        )));
    }
    let mut sig = SigSet::blank(rank);
    let cells = SigSet::cells(rank);
    for clause in &s.clauses {
        let mut exprs = Vec::with_capacity(clause.len());
        for atom in clause {
            match atom {
                Atom::Quad { field, sign } => match universe.expression_of(field.radicand())? {
                    Some(mask) => exprs.push((mask, *sign)),
                    None => {
                        return Err(Error::Unregistered(format!("{} is outside the span", field)))
                    }
                },
                Atom::Cyclo { conductor, .. } => {
                    return Err(Error::Unregistered(format!(
                        "cyclotomic conditions mod {conductor} have no sign coordinates"
                    )))
                }
            }
        }
        for cell in 0..cells {
            let hit = exprs.iter().all(|&(mask, sign)| {
                let neg = (mask & cell as u32).count_ones() % 2 == 1;
                (sign < 0) == neg
            });
            if hit {
                sig.set_bit(cell, true);
            }
        }
    }
    for p in universe.ramified_primes() {
        sig.exceptions.insert(p, s.member(p));
    }
    for &p in s.added.iter().chain(s.removed.iter()) {
        sig.exceptions.entry(p).or_insert_with(|| s.member(p));
    }
    Ok(sig.canonical(universe))
}

/// Rebuilds a canonical presentation from signature coordinates: a greedy
/// prime-implicant cover over the basis atoms, then exceptions materialized
/// as added/removed primes.
pub fn from_sig(sig: &SigSet, universe: &MultiQuadContext) -> FinPresSet {
    let rank = sig.rank;
    let cells = SigSet::cells(rank);
    let minterms: Vec<u32> = (0..cells).filter(|&c| sig.bit(c)).map(|c| c as u32).collect();

    let clauses: Vec<Vec<Atom>> = if minterms.len() == cells {
        vec![Vec::new()]
    } else {
        cover_cubes(&minterms, rank)
            .into_iter()
            .map(|(free, vals)| {
                (0..rank)
                    .filter(|i| free >> i & 1 == 0)
                    .map(|i| {
                        let sign = if vals >> i & 1 == 0 { 1 } else { -1 };
                        Atom::quad(universe.basis()[i], sign).expect("basis radicands are valid")
                    })
                    .collect()
            })
            .collect()
    };

    let mut added = BTreeSet::new();
    let mut removed = BTreeSet::new();
    for (&p, &v) in &sig.exceptions {
        let strong = clauses.iter().any(|c| c.iter().all(|a| a.strongly_satisfied_by(p)));
        let weak = clauses.iter().any(|c| c.iter().all(|a| a.weakly_satisfied_by(p)));
        if v && !strong {
            added.insert(p);
        } else if !v && weak {
            removed.insert(p);
        }
    }
    FinPresSet::new(clauses, added, removed).expect("materialized exceptions are prime")
}

/// Quine-McCluskey: merge minterms into prime implicants, then cover greedily.
/// Cubes are (free-variable mask, fixed values); deterministic throughout.
fn cover_cubes(minterms: &[u32], rank: usize) -> Vec<(u32, u32)> {
    if minterms.is_empty() {
        return Vec::new();
    }
    let mut current: BTreeSet<(u32, u32)> = minterms.iter().map(|&m| (0u32, m)).collect();
    let mut primes: BTreeSet<(u32, u32)> = BTreeSet::new();
    while !current.is_empty() {
        // Cubes merge only when their free masks agree and values differ in
        // one bit, so bucket by mask and look partners up directly.
        let mut by_free: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        for &(f, v) in &current {
            by_free.entry(f).or_default().insert(v);
        }
        let mut next = BTreeSet::new();
        for (&f, vals) in &by_free {
            for &v in vals {
                let mut merged = false;
                for bit in (0..rank as u32).map(|b| 1u32 << b) {
                    if f & bit == 0 && vals.contains(&(v ^ bit)) {
                        merged = true;
                        next.insert((f | bit, v & !bit));
                    }
                }
                if !merged {
                    primes.insert((f, v));
                }
            }
        }
        current = next;
    }

    let covers = |cube: (u32, u32), m: u32| m & !cube.0 == cube.1;
    let mut uncovered: BTreeSet<u32> = minterms.iter().copied().collect();
    let mut chosen = Vec::new();
    while !uncovered.is_empty() {
        let best = primes
            .iter()
            .map(|&c| (uncovered.iter().filter(|&&m| covers(c, m)).count(), c))
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .expect("prime implicants cover every minterm");
        chosen.push(best.1);
        uncovered.retain(|&m| !covers(best.1, m));
    }
    chosen
}

/// Exact boolean operations on presentations, via the signature algebra of a
/// shared universe. Results are canonical and pass the clopen certificate by
/// construction.
pub fn set_intersection(
    a: &FinPresSet,
    b: &FinPresSet,
    universe: &MultiQuadContext,
) -> Result<FinPresSet> {
    Ok(from_sig(&to_sig(a, universe)?.and(&to_sig(b, universe)?, universe), universe))
}

pub fn set_union(a: &FinPresSet, b: &FinPresSet, universe: &MultiQuadContext) -> Result<FinPresSet> {
    Ok(from_sig(&to_sig(a, universe)?.or(&to_sig(b, universe)?, universe), universe))
}

pub fn set_difference(
    a: &FinPresSet,
    b: &FinPresSet,
    universe: &MultiQuadContext,
) -> Result<FinPresSet> {
    Ok(from_sig(&to_sig(a, universe)?.minus(&to_sig(b, universe)?, universe), universe))
}

pub fn set_complement(s: &FinPresSet, universe: &MultiQuadContext) -> Result<FinPresSet> {
    Ok(from_sig(&to_sig(s, universe)?.not(universe), universe))
}

pub fn same_set(a: &FinPresSet, b: &FinPresSet, universe: &MultiQuadContext) -> Result<bool> {
    Ok(to_sig(a, universe)? == to_sig(b, universe)?)
}

/// Splits a covering into pairwise disjoint certified pieces: the first cover
/// element is kept verbatim when it already passes the certificate, and each
/// later piece subtracts everything before it.
pub fn refine_partition(
    cover: &[FinPresSet],
    universe: &MultiQuadContext,
) -> Result<Vec<FinPresSet>> {
    if cover.is_empty() {
        return Err(Error::BadPresentation("empty cover".into()));
    }
    let sigs: Vec<SigSet> = cover
        .iter()
        .map(|u| to_sig(u, universe))
        .collect::<Result<_>>()?;
    let mut union = sigs[0].clone();
    for s in &sigs[1..] {
        union = union.or(s, universe);
    }
    if !union.is_full_set() {
        let witness = smallest_prime_outside(&union, universe)?;
        return Err(Error::BadPresentation(format!("cover misses prime {witness}")));
    }
    let mut out = Vec::with_capacity(cover.len());
    let mut running: Option<SigSet> = None;
    for (i, sig) in sigs.iter().enumerate() {
        let piece_sig = match &running {
            None => sig.clone(),
            Some(prev) => sig.minus(prev, universe),
        };
        let piece = if i == 0 && closure_over_approx(&cover[0]).certified {
            cover[0].clone()
        } else {
            from_sig(&piece_sig, universe)
        };
        running = Some(match running {
            None => sig.clone(),
            Some(prev) => prev.or(sig, universe),
        });
        out.push(piece);
    }
    Ok(out)
}

fn smallest_prime_outside(sig: &SigSet, universe: &MultiQuadContext) -> Result<u64> {
    let mut p = 2;
    while p <= COVER_WITNESS_BOUND {
        if is_prime(p) && !sig.member(p, universe) {
            return Ok(p);
        }
        p += 1;
    }
    Err(Error::Internal("uncovered signature cell with no small prime".into()))
}

/// Disjoint certified neighbourhoods of two distinct primes, with the
/// auxiliary primes the construction sieves for.
#[derive(Clone, Debug, Serialize)]
pub struct Separation {
    pub p1: u64,
    pub p2: u64,
    /// Frobenius sign targets for the two neighbourhood constructions.
    pub sigma1: i8,
    pub sigma2: i8,
    /// Auxiliary primes: q1 for the neighbourhood of p1, q2 for p2.
    pub q1: u64,
    pub q2: u64,
    pub v1: FinPresSet,
    pub v2: FinPresSet,
    pub w1: FinPresSet,
    pub w2: FinPresSet,
    pub w1_certificate: ClopenCertificate,
    pub w2_certificate: ClopenCertificate,
    pub disjoint: bool,
}

/// The field Q(sqrt(p*)) with p* = (-1)^((p-1)/2) p, ramified only at p.
fn starred_radicand(p: u64) -> i64 {
    crate::arith::exceptional_field(p).expect("prime validated").radicand()
}

/// Smallest odd prime q with (avoid/q) = -sigma, (target/q) = sigma and
/// (-1/q) = 1; both starred-field atoms at sign sigma then exclude each
/// other's ramified prime, which is what certifies the neighbourhood.
fn aux_prime_two_sided(avoid: u64, target: u64, sigma: i8) -> Result<u64> {
    let mut q = 3;
    while q <= AUX_PRIME_SEARCH_BOUND {
        if q != avoid && q != target && is_prime(q) {
            let qi = q as i64;
            if kronecker(avoid as i64, qi) == -i32::from(sigma)
                && kronecker(target as i64, qi) == i32::from(sigma)
                && kronecker(-1, qi) == 1
            {
                return Ok(q);
            }
        }
        q += 2;
    }
    Err(Error::SearchExhausted(format!(
        "no auxiliary prime below {AUX_PRIME_SEARCH_BOUND} separates {target} from {avoid}"
    )))
}

/// Variant for a neighbourhood of odd p1 avoiding 2: (p1/q) = sigma,
/// (2/q) = -sigma, paired with the field Q(sqrt(2)).
fn aux_prime_avoiding_two(p1: u64, sigma: i8) -> Result<u64> {
    let mut q = 3;
    while q <= AUX_PRIME_SEARCH_BOUND {
        if q != p1 && is_prime(q) {
            let qi = q as i64;
            if kronecker(p1 as i64, qi) == i32::from(sigma)
                && kronecker(2, qi) == -i32::from(sigma)
            {
                return Ok(q);
            }
        }
        q += 2;
    }
    Err(Error::SearchExhausted(format!(
        "no auxiliary prime below {AUX_PRIME_SEARCH_BOUND} separates {p1} from 2"
    )))
}

fn neighbourhood(radicands: [i64; 2], sign: i8) -> FinPresSet {
    FinPresSet::from_clause(
        radicands
            .into_iter()
            .map(|r| Atom::quad(r, sign).expect("starred radicands are squarefree"))
            .collect(),
    )
}

/// Builds disjoint certified clopen neighbourhoods W1 of p1 and W2 of p2 from
/// quadratic conditions only. Each V_i is an intersection of two prime-power
/// discriminant fields chosen so that every ramified prime of the presentation
/// strongly fails the other atom; W1 = V1 \ V2 and W2 = V2 \ V1 are then
/// computed exactly in the signature algebra.
pub fn separate_primes(p1: u64, p2: u64) -> Result<Separation> {
    if !is_prime(p1) || !is_prime(p2) {
        return Err(Error::BadCommand("separation needs two primes".into()));
    }
    if p1 == p2 {
        return Err(Error::BadCommand("separation needs two distinct primes".into()));
    }
    if p1 == 2 {
        let s = separate_primes(p2, p1)?;
        return Ok(Separation {
            p1,
            p2,
            sigma1: s.sigma2,
            sigma2: s.sigma1,
            q1: s.q2,
            q2: s.q1,
            v1: s.v2,
            v2: s.v1,
            w1: s.w2,
            w2: s.w1,
            w1_certificate: s.w2_certificate,
            w2_certificate: s.w1_certificate,
            disjoint: s.disjoint,
        });
    }

    // Neighbourhood of p2 avoiding odd p1.
    let sigma2 = frobenius_quad(p2, &crate::arith::exceptional_field(p1)?).sign();
    let q2 = aux_prime_two_sided(p1, p2, sigma2)?;
    let v2 = neighbourhood([starred_radicand(p1), starred_radicand(q2)], sigma2);

    // Neighbourhood of p1 avoiding p2.
    let (sigma1, q1, v1) = if p2 == 2 {
        let sigma = i8::try_from(kronecker(2, p1 as i64)).expect("kronecker is a sign here");
        let q = aux_prime_avoiding_two(p1, sigma)?;
        (sigma, q, neighbourhood([2, starred_radicand(q)], sigma))
    } else {
        let sigma = frobenius_quad(p1, &crate::arith::exceptional_field(p2)?).sign();
        let q = aux_prime_two_sided(p2, p1, sigma)?;
        (sigma, q, neighbourhood([starred_radicand(p2), starred_radicand(q)], sigma))
    };

    let mut radicands: Vec<i64> = Vec::new();
    for r in v1.quad_radicands().into_iter().chain(v2.quad_radicands()) {
        if !radicands.contains(&r) {
            radicands.push(r);
        }
    }
    let universe = MultiQuadContext::new(&radicands)?;
    let sig1 = to_sig(&v1, &universe)?;
    let sig2 = to_sig(&v2, &universe)?;
    let w1 = from_sig(&sig1.minus(&sig2, &universe), &universe);
    let w2 = from_sig(&sig2.minus(&sig1, &universe), &universe);
    let disjoint = to_sig(&w1, &universe)?.and(&to_sig(&w2, &universe)?, &universe).is_empty_set();
    let w1_certificate = closure_over_approx(&w1);
    let w2_certificate = closure_over_approx(&w2);
    Ok(Separation {
        p1,
        p2,
        sigma1,
        sigma2,
        q1,
        q2,
        v1,
        v2,
        w1,
        w2,
        w1_certificate,
        w2_certificate,
        disjoint,
    })
}
