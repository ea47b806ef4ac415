//! Finite groups as explicit Cayley tables.
//!
//! Element 0 is always the identity. Tables are validated on construction:
//! Latin square, two-sided identity at index 0, inverses, and associativity
//! (Light's test over a greedy generating set). Groups built from permutation
//! generators get a deterministic element numbering: breadth-first closure
//! from the identity, multiplying by generators in input order.

use serde::{Deserialize, Serialize};

use crate::arith::is_prime;
use crate::error::{Error, Result};

/// Default cap on group orders. Everything here is exhaustive, so the cap
/// keeps accidental monsters out rather than enabling big computations.
pub const DEFAULT_ORDER_BOUND: usize = 10_000;

/// Permutation generators act on points 1..=12.
pub const MAX_PERMUTATION_POINTS: usize = 12;

#[derive(Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    /// Row-major Cayley table: `table[a * order + b] = a * b`.
    table: Vec<u16>,
    inv: Vec<u16>,
}

impl std::fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FiniteGroup(order={})", self.order)
    }
}

/// Conjugacy class. `members` is sorted ascending and `representative` is the
/// smallest member, so class lists are deterministic.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConjClass {
    pub representative: usize,
    pub members: Vec<usize>,
}

impl ConjClass {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, g: usize) -> bool {
        self.members.binary_search(&g).is_ok()
    }
}

/// Subgroup given by its sorted member list. Always contains 0.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Subgroup {
    members: Vec<usize>,
}

impl Subgroup {
    /// Validates closure under the parent's multiplication. Inverses follow
    /// from closure in a finite group.
    pub fn new(parent: &FiniteGroup, mut members: Vec<usize>) -> Result<Subgroup> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::InvalidSubgroup("empty member list".into()));
        }
        for &m in &members {
            if m >= parent.order {
                return Err(Error::ElementRange { index: m, order: parent.order });
            }
        }
        if members[0] != 0 {
            return Err(Error::InvalidSubgroup("missing identity".into()));
        }
        for &a in &members {
            for &b in &members {
                if members.binary_search(&parent.mul(a, b)).is_err() {
                    return Err(Error::InvalidSubgroup(format!(
                        "not closed: {a} * {b} = {} is outside",
                        parent.mul(a, b)
                    )));
                }
            }
        }
        Ok(Subgroup { members })
    }

    /// Smallest subgroup containing `gens`, by breadth-first closure.
    pub fn generated(parent: &FiniteGroup, gens: &[usize]) -> Result<Subgroup> {
        for &g in gens {
            if g >= parent.order {
                return Err(Error::ElementRange { index: g, order: parent.order });
            }
        }
        let mut seen = vec![false; parent.order];
        seen[0] = true;
        let mut elems = vec![0usize];
        let mut queue = vec![0usize];
        while let Some(x) = queue.pop() {
            for &g in gens {
                for y in [parent.mul(x, g), parent.mul(g, x)] {
                    if !seen[y] {
                        seen[y] = true;
                        elems.push(y);
                        queue.push(y);
                    }
                }
            }
        }
        elems.sort_unstable();
        Ok(Subgroup { members: elems })
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, g: usize) -> bool {
        self.members.binary_search(&g).is_ok()
    }

    pub fn is_trivial(&self) -> bool {
        self.members.len() == 1
    }

    pub fn is_normal(&self, parent: &FiniteGroup) -> bool {
        for x in 0..parent.order {
            for &h in &self.members {
                let conj = parent.mul(parent.mul(x, h), parent.inv(x));
                if !self.contains(conj) {
                    return false;
                }
            }
        }
        true
    }
}

impl FiniteGroup {
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < self.order && b < self.order);
        self.table[a * self.order + b] as usize
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        debug_assert!(a < self.order);
        self.inv[a] as usize
    }

    pub fn element_order(&self, g: usize) -> usize {
        let mut x = g;
        let mut n = 1;
        while x != 0 {
            x = self.mul(x, g);
            n += 1;
        }
        n
    }

    /// Least common multiple of element orders.
    pub fn exponent(&self) -> usize {
        (0..self.order).fold(1, |acc, g| num_integer::lcm(acc, self.element_order(g)))
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (a..self.order).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn power(&self, g: usize, mut e: u64) -> usize {
        let mut acc = 0usize;
        let mut base = g;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn center(&self) -> Subgroup {
        let members = (0..self.order)
            .filter(|&z| (0..self.order).all(|x| self.mul(z, x) == self.mul(x, z)))
            .collect();
        Subgroup { members }
    }

    pub fn trivial_subgroup(&self) -> Subgroup {
        Subgroup { members: vec![0] }
    }

    pub fn full_subgroup(&self) -> Subgroup {
        Subgroup { members: (0..self.order).collect() }
    }

    /// Builds and validates a group from an explicit table.
    pub fn from_table(rows: Vec<Vec<usize>>) -> Result<FiniteGroup> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        if n > DEFAULT_ORDER_BOUND {
            return Err(Error::OrderBound { order: n, bound: DEFAULT_ORDER_BOUND });
        }
        let mut table = vec![0u16; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGroup(format!("row {i} has length {}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if v >= n {
                    return Err(Error::InvalidGroup(format!("entry ({i},{j}) = {v} out of range")));
                }
                table[i * n + j] = v as u16;
            }
        }
        Self::validate(n, table)
    }

    fn validate(n: usize, table: Vec<u16>) -> Result<FiniteGroup> {
        // Two-sided identity at index 0.
        for j in 0..n {
            if table[j] as usize != j {
                return Err(Error::InvalidGroup("index 0 is not a left identity".into()));
            }
            if table[j * n] as usize != j {
                return Err(Error::InvalidGroup("index 0 is not a right identity".into()));
            }
        }
        // Latin square.
        let mut seen_row = vec![false; n];
        let mut seen_col = vec![false; n];
        for i in 0..n {
            seen_row.iter_mut().for_each(|s| *s = false);
            seen_col.iter_mut().for_each(|s| *s = false);
            for j in 0..n {
                let r = table[i * n + j] as usize;
                let c = table[j * n + i] as usize;
                if seen_row[r] {
                    return Err(Error::InvalidGroup(format!("row {i} repeats {r}")));
                }
                if seen_col[c] {
                    return Err(Error::InvalidGroup(format!("column {i} repeats {c}")));
                }
                seen_row[r] = true;
                seen_col[c] = true;
            }
        }
        // Inverses: some a*b = 0 per row; two-sidedness follows once
        // associativity is established.
        let mut inv = vec![0u16; n];
        for a in 0..n {
            let mut found = None;
            for b in 0..n {
                if table[a * n + b] == 0 {
                    found = Some(b);
                    break;
                }
            }
            match found {
                Some(b) => inv[a] = b as u16,
                None => return Err(Error::InvalidGroup(format!("{a} has no inverse"))),
            }
        }
        let g = FiniteGroup { order: n, table, inv };
        g.check_associativity()?;
        Ok(g)
    }

    /// Light's test: associativity over a greedy generating set suffices.
    /// The set of elements m with (am)b = a(mb) for all a, b contains the
    /// identity and is closed under multiplication, so covering a generating
    /// set covers the group.
    fn check_associativity(&self) -> Result<()> {
        let n = self.order;
        let mut span = vec![false; n];
        self.close_over(&mut span, 0);
        let mut gens = Vec::new();
        for g in 0..n {
            if !span[g] {
                gens.push(g);
                self.close_over(&mut span, g);
            }
        }
        for &c in &gens {
            for a in 0..n {
                let ac = self.table[a * n + c] as usize;
                for b in 0..n {
                    let cb = self.table[c * n + b] as usize;
                    if self.table[ac * n + b] != self.table[a * n + cb] {
                        return Err(Error::InvalidGroup(format!(
                            "associativity fails at ({a}, {c}, {b})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn close_over(&self, span: &mut [bool], seed: usize) {
        let n = self.order;
        if span.iter().all(|s| !*s) {
            span[0] = true;
        }
        let mut queue: Vec<usize> = if span[seed] { Vec::new() } else { vec![seed] };
        span[seed] = true;
        let mut known: Vec<usize> = (0..n).filter(|&x| span[x]).collect();
        while let Some(x) = queue.pop() {
            let mut fresh = Vec::new();
            for &y in &known {
                for z in [self.table[x * n + y] as usize, self.table[y * n + x] as usize] {
                    if !span[z] {
                        span[z] = true;
                        fresh.push(z);
                    }
                }
            }
            for z in fresh {
                known.push(z);
                queue.push(z);
            }
        }
    }

    /// Deterministic closure of permutation generators given in cycle
    /// notation, e.g. `"(1 2 3)(4 5)"`. Numbering is breadth-first from the
    /// identity, multiplying on the right by generators in input order.
    pub fn from_permutation_generators(gens: &[String], bound: usize) -> Result<FiniteGroup> {
        if gens.is_empty() {
            return Err(Error::InvalidGroup("no generators".into()));
        }
        let parsed: Vec<Vec<Vec<usize>>> =
            gens.iter().map(|g| parse_cycles(g)).collect::<Result<_>>()?;
        // All generators act on the same point set 1..=degree.
        let degree = parsed
            .iter()
            .flat_map(|cycles| cycles.iter().flatten().copied())
            .max()
            .unwrap_or(1)
            .max(1);
        let perms: Vec<Vec<usize>> = parsed
            .iter()
            .map(|cycles| cycles_to_perm(cycles, degree))
            .collect::<Result<_>>()?;

        let identity: Vec<usize> = (0..degree).collect();
        let mut index: std::collections::HashMap<Vec<usize>, usize> = std::collections::HashMap::new();
        let mut elems: Vec<Vec<usize>> = vec![identity.clone()];
        index.insert(identity, 0);
        let mut head = 0;
        while head < elems.len() {
            let current = elems[head].clone();
            head += 1;
            for p in &perms {
                // Apply `current` first, then the generator.
                let next: Vec<usize> = current.iter().map(|&x| p[x]).collect();
                if !index.contains_key(&next) {
                    if elems.len() >= bound {
                        return Err(Error::OrderBound { order: elems.len() + 1, bound });
                    }
                    index.insert(next.clone(), elems.len());
                    elems.push(next);
                }
            }
        }
        let n = elems.len();
        let mut table = vec![0u16; n * n];
        for a in 0..n {
            for b in 0..n {
                let prod: Vec<usize> = elems[a].iter().map(|&x| elems[b][x]).collect();
                table[a * n + b] = *index
                    .get(&prod)
                    .ok_or_else(|| Error::Internal("permutation closure not closed".into()))?
                    as u16;
            }
        }
        Self::validate(n, table)
    }

    pub fn cyclic(n: usize) -> FiniteGroup {
        assert!(n >= 1 && n <= DEFAULT_ORDER_BOUND);
        let mut table = vec![0u16; n * n];
        for a in 0..n {
            for b in 0..n {
                table[a * n + b] = ((a + b) % n) as u16;
            }
        }
        let inv = (0..n).map(|a| ((n - a) % n) as u16).collect();
        FiniteGroup { order: n, table, inv }
    }

    /// Product numbering: (a, b) -> a * |B| + b, so (0, 0) stays at 0.
    pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup) -> FiniteGroup {
        let n = a.order * b.order;
        assert!(n <= DEFAULT_ORDER_BOUND);
        let mut table = vec![0u16; n * n];
        for xa in 0..a.order {
            for xb in 0..b.order {
                let x = xa * b.order + xb;
                for ya in 0..a.order {
                    for yb in 0..b.order {
                        let y = ya * b.order + yb;
                        table[x * n + y] = (a.mul(xa, ya) * b.order + b.mul(xb, yb)) as u16;
                    }
                }
            }
        }
        let inv = (0..n)
            .map(|x| (a.inv(x / b.order) * b.order + b.inv(x % b.order)) as u16)
            .collect();
        FiniteGroup { order: n, table, inv }
    }

    pub fn dihedral(n: usize) -> FiniteGroup {
        assert!(n >= 1 && 2 * n <= DEFAULT_ORDER_BOUND);
        // Element (a, s) = r^a s^b with index b * n + a.
        let ord = 2 * n;
        let mut table = vec![0u16; ord * ord];
        for b1 in 0..2usize {
            for a1 in 0..n {
                let x = b1 * n + a1;
                for b2 in 0..2usize {
                    for a2 in 0..n {
                        let y = b2 * n + a2;
                        let a = if b1 == 0 { (a1 + a2) % n } else { (a1 + n - a2 % n) % n };
                        let b = b1 ^ b2;
                        table[x * ord + y] = (b * n + a) as u16;
                    }
                }
            }
        }
        Self::validate(ord, table).expect("dihedral table is a group")
    }

    /// Quaternion group of order 8, numbered [1, -1, i, -i, j, -j, k, -k].
    pub fn quaternion() -> FiniteGroup {
        // Basis products with signs: i*j = k, j*k = i, k*i = j, x*x = -1.
        const BASIS: [[(usize, bool); 4]; 4] = [
            [(0, false), (1, false), (2, false), (3, false)],
            [(1, false), (0, true), (3, false), (2, true)],
            [(2, false), (3, true), (0, true), (1, false)],
            [(3, false), (2, false), (1, true), (0, true)],
        ];
        let n = 8;
        let mut table = vec![0u16; n * n];
        for x in 0..n {
            for y in 0..n {
                let (bx, sx) = (x / 2, x % 2 == 1);
                let (by, sy) = (y / 2, y % 2 == 1);
                let (bz, flip) = BASIS[bx][by];
                let sz = sx ^ sy ^ flip;
                table[x * n + y] = (bz * 2 + sz as usize) as u16;
            }
        }
        Self::validate(n, table).expect("quaternion table is a group")
    }

    /// Heisenberg group of order p^3 (p an odd prime): triples (a, b, c) over
    /// Z/p with (a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab'), numbered
    /// a*p^2 + b*p + c. Generators sigma = (1,0,0), tau = (0,1,0),
    /// rho = (0,0,1) satisfy sigma^p = tau^p = rho^p = 1, rho central,
    /// [sigma, tau] = rho; the group has exponent p.
    pub fn heisenberg(p: usize) -> Result<FiniteGroup> {
        if p < 3 || p % 2 == 0 || !is_prime(p as u64) {
            return Err(Error::InvalidGroup(format!("heisenberg needs an odd prime, got {p}")));
        }
        let n = p * p * p;
        if n > DEFAULT_ORDER_BOUND {
            return Err(Error::OrderBound { order: n, bound: DEFAULT_ORDER_BOUND });
        }
        let mut table = vec![0u16; n * n];
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    let x = a * p * p + b * p + c;
                    for a2 in 0..p {
                        for b2 in 0..p {
                            for c2 in 0..p {
                                let y = a2 * p * p + b2 * p + c2;
                                let za = (a + a2) % p;
                                let zb = (b + b2) % p;
                                let zc = (c + c2 + a * b2) % p;
                                table[x * n + y] = (za * p * p + zb * p + zc) as u16;
                            }
                        }
                    }
                }
            }
        }
        Self::validate(n, table)
    }

    /// Indices of (sigma, tau, rho) in the `heisenberg(p)` numbering.
    pub fn heisenberg_generators(p: usize) -> (usize, usize, usize) {
        (p * p, p, 1)
    }

    /// Conjugacy classes sorted by representative; the identity class comes
    /// first and each representative is its class's smallest member.
    pub fn conjugacy_classes(&self) -> Vec<ConjClass> {
        let mut seen = vec![false; self.order];
        let mut classes = Vec::new();
        for g in 0..self.order {
            if seen[g] {
                continue;
            }
            let mut members = Vec::new();
            for x in 0..self.order {
                let c = self.mul(self.mul(x, g), self.inv(x));
                if !seen[c] {
                    seen[c] = true;
                    members.push(c);
                }
            }
            members.sort_unstable();
            classes.push(ConjClass { representative: g, members });
        }
        classes
    }

    pub fn class_of(&self, g: usize) -> ConjClass {
        let mut members: Vec<usize> =
            (0..self.order).map(|x| self.mul(self.mul(x, g), self.inv(x))).collect();
        members.sort_unstable();
        members.dedup();
        ConjClass { representative: members[0], members }
    }

    pub fn centralizer(&self, g: usize) -> Result<Subgroup> {
        if g >= self.order {
            return Err(Error::ElementRange { index: g, order: self.order });
        }
        let members = (0..self.order).filter(|&x| self.mul(x, g) == self.mul(g, x)).collect();
        Ok(Subgroup { members })
    }

    /// Quotient by a normal subgroup. Cosets are numbered by their smallest
    /// member, so the identity coset is 0 and the numbering is deterministic.
    pub fn quotient(&self, h: &Subgroup) -> Result<Quotient> {
        if !h.is_normal(self) {
            return Err(Error::NotNormal(format!("subgroup of order {}", h.order())));
        }
        let mut coset_of = vec![usize::MAX; self.order];
        let mut reps = Vec::new();
        for g in 0..self.order {
            if coset_of[g] != usize::MAX {
                continue;
            }
            let id = reps.len();
            reps.push(g);
            for &x in h.members() {
                coset_of[self.mul(g, x)] = id;
            }
        }
        let m = reps.len();
        let mut table = vec![0u16; m * m];
        for a in 0..m {
            for b in 0..m {
                table[a * m + b] = coset_of[self.mul(reps[a], reps[b])] as u16;
            }
        }
        let inv = (0..m).map(|a| coset_of[self.inv(reps[a])] as u16).collect();
        let group = FiniteGroup { order: m, table, inv };
        let projection = coset_of;
        Ok(Quotient { group, projection })
    }

    /// Does the class meet the coset gH?
    pub fn class_meets_coset(&self, class: &ConjClass, g: usize, h: &Subgroup) -> bool {
        let mut in_coset = vec![false; self.order];
        for &x in h.members() {
            in_coset[self.mul(g, x)] = true;
        }
        class.members.iter().any(|&m| in_coset[m])
    }

    /// Setwise product H1 H2, the intersection, and normality flags. The
    /// product is only a subgroup in general when one factor is normal;
    /// otherwise this errors.
    pub fn subgroup_lattice_ops(&self, h1: &Subgroup, h2: &Subgroup) -> Result<LatticeOps> {
        let mut prod = vec![false; self.order];
        for &a in h1.members() {
            for &b in h2.members() {
                prod[self.mul(a, b)] = true;
            }
        }
        let product_members: Vec<usize> = (0..self.order).filter(|&x| prod[x]).collect();
        let product = Subgroup::new(self, product_members)
            .map_err(|_| Error::InvalidSubgroup("H1 H2 is not a subgroup".into()))?;
        let intersection = Subgroup {
            members: h1.members().iter().copied().filter(|&x| h2.contains(x)).collect(),
        };
        Ok(LatticeOps {
            product_normal: product.is_normal(self),
            intersection_normal: intersection.is_normal(self),
            product,
            intersection,
        })
    }

    /// A Sylow l-subgroup, grown from a cyclic l-subgroup through normalizer
    /// quotients, plus whether it is cyclic. Deterministic: scans in element
    /// order at every choice point.
    pub fn sylow_and_cyclicity(&self, ell: usize) -> Result<SylowInfo> {
        if !is_prime(ell as u64) {
            return Err(Error::InvalidGroup(format!("{ell} is not prime")));
        }
        let mut target = 1usize;
        let mut rem = self.order;
        while rem % ell == 0 {
            rem /= ell;
            target *= ell;
        }
        if target == 1 {
            return Ok(SylowInfo { subgroup: self.trivial_subgroup(), is_cyclic: true });
        }
        // Cauchy seed: an element of order l.
        let mut seed = None;
        for g in 1..self.order {
            let ord = self.element_order(g);
            if ord % ell == 0 {
                seed = Some(self.power(g, (ord / ell) as u64));
                break;
            }
        }
        let seed = seed.ok_or_else(|| Error::Internal("Cauchy element missing".into()))?;
        let mut h = Subgroup::generated(self, &[seed])?;
        while h.order() < target {
            let normalizer: Vec<usize> = (0..self.order)
                .filter(|&x| {
                    h.members().iter().all(|&m| h.contains(self.mul(self.mul(x, m), self.inv(x))))
                })
                .collect();
            // |H| < l-part of |G| forces l | [N:H]; find a coset of order l
            // in N/H and adjoin a representative.
            let mut grown = false;
            'outer: for &x in &normalizer {
                if h.contains(x) {
                    continue;
                }
                // Order of xH in N/H.
                let mut c = x;
                let mut j = 1usize;
                while !h.contains(c) {
                    c = self.mul(c, x);
                    j += 1;
                }
                if j % ell == 0 {
                    let z = self.power(x, (j / ell) as u64);
                    if !h.contains(z) {
                        let mut gens: Vec<usize> = h.members().to_vec();
                        gens.push(z);
                        h = Subgroup::generated(self, &gens)?;
                        grown = true;
                        break 'outer;
                    }
                }
            }
            if !grown {
                return Err(Error::Internal("Sylow climb stalled".into()));
            }
        }
        let is_cyclic = h.members().iter().any(|&g| self.element_order(g) == h.order());
        Ok(SylowInfo { subgroup: h, is_cyclic })
    }

    /// All subgroups, found by closing each found subgroup with each outside
    /// element. Exhaustive; meant for small test corpora.
    pub fn all_subgroups(&self) -> Vec<Subgroup> {
        let mut found: std::collections::BTreeSet<Vec<usize>> = std::collections::BTreeSet::new();
        let trivial = self.trivial_subgroup();
        let mut queue = vec![trivial.members().to_vec()];
        found.insert(queue[0].clone());
        while let Some(members) = queue.pop() {
            let h = Subgroup { members };
            for g in 1..self.order {
                if h.contains(g) {
                    continue;
                }
                let mut gens = h.members().to_vec();
                gens.push(g);
                let k = Subgroup::generated(self, &gens).expect("closure is a subgroup");
                if found.insert(k.members().to_vec()) {
                    queue.push(k.members().to_vec());
                }
            }
        }
        found.into_iter().map(|members| Subgroup { members }).collect()
    }

    pub fn normal_subgroups(&self) -> Vec<Subgroup> {
        self.all_subgroups().into_iter().filter(|h| h.is_normal(self)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Quotient {
    pub group: FiniteGroup,
    /// projection[g] = index of the coset gH in the quotient numbering.
    pub projection: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct LatticeOps {
    pub product: Subgroup,
    pub intersection: Subgroup,
    pub product_normal: bool,
    pub intersection_normal: bool,
}

#[derive(Clone, Debug)]
pub struct SylowInfo {
    pub subgroup: Subgroup,
    pub is_cyclic: bool,
}

fn parse_cycles(s: &str) -> Result<Vec<Vec<usize>>> {
    let s = s.trim();
    if s.is_empty() || s == "()" {
        return Ok(Vec::new());
    }
    if !s.starts_with('(') || !s.ends_with(')') {
        return Err(Error::InvalidGroup(format!("malformed cycle notation {s:?}")));
    }
    let mut cycles = Vec::new();
    let mut used = std::collections::BTreeSet::new();
    for chunk in s[1..s.len() - 1].split(")(") {
        let mut cycle = Vec::new();
        for tok in chunk.split_whitespace() {
            let p: usize = tok
                .parse()
                .map_err(|_| Error::InvalidGroup(format!("bad point {tok:?} in {s:?}")))?;
            if p == 0 || p > MAX_PERMUTATION_POINTS {
                return Err(Error::InvalidGroup(format!(
                    "point {p} outside 1..={MAX_PERMUTATION_POINTS}"
                )));
            }
            if !used.insert(p) {
                return Err(Error::InvalidGroup(format!("point {p} repeats in {s:?}")));
            }
            cycle.push(p);
        }
        if cycle.is_empty() {
            return Err(Error::InvalidGroup(format!("empty cycle in {s:?}")));
        }
        cycles.push(cycle);
    }
    Ok(cycles)
}

fn cycles_to_perm(cycles: &[Vec<usize>], degree: usize) -> Result<Vec<usize>> {
    let mut perm: Vec<usize> = (0..degree).collect();
    for cycle in cycles {
        for w in 0..cycle.len() {
            let from = cycle[w] - 1;
            let to = cycle[(w + 1) % cycle.len()] - 1;
            perm[from] = to;
        }
    }
    Ok(perm)
}

/// One of `table` or `permutation_generators`, the two input file shapes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation_generators: Option<Vec<String>>,
}

/// Builds a group from a spec with the default order bound.
pub fn build_group(spec: &GroupSpec) -> Result<FiniteGroup> {
    build_group_bounded(spec, DEFAULT_ORDER_BOUND)
}

pub fn build_group_bounded(spec: &GroupSpec, bound: usize) -> Result<FiniteGroup> {
    match (&spec.table, &spec.permutation_generators) {
        (Some(rows), None) => {
            if rows.len() > bound {
                return Err(Error::OrderBound { order: rows.len(), bound });
            }
            FiniteGroup::from_table(rows.clone())
        }
        (None, Some(gens)) => FiniteGroup::from_permutation_generators(gens, bound),
        _ => Err(Error::InvalidGroup(
            "spec needs exactly one of `table` or `permutation_generators`".into(),
        )),
    }
}
