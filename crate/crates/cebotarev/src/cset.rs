//! Class-set algebra over a fixed Galois context.
//!
//! A context is an ambient finite group together with named normal subgroups,
//! one per intermediate field. A class set lives at one named level and is a
//! set of conjugacy classes of the quotient there; it stands for the primes
//! whose Frobenius class is one of those classes, up to ramified primes.
//! All operations are exact and symbolic: lifting replaces a class by the
//! classes meeting its preimage coset, intersection happens at the compositum
//! level (intersection of subgroups), and containment up to density zero is
//! decided by conjugacy and centralizer counts at the meet level (product of
//! subgroups), never by sieving.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::arith::MultiQuadContext;
use crate::error::{Error, Result};
use crate::group::{build_group, ConjClass, FiniteGroup, GroupSpec, Subgroup};

static NEXT_CONTEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Everything cached about one registered level (intermediate field).
#[derive(Clone, Debug)]
pub struct LevelEntry {
    pub subgroup: Subgroup,
    pub quotient: FiniteGroup,
    /// Ambient element -> quotient element.
    pub projection: Vec<usize>,
    /// Quotient element -> its smallest ambient preimage.
    pub coset_reps: Vec<usize>,
    /// Conjugacy classes of the quotient, sorted by representative.
    pub classes: Vec<ConjClass>,
    /// Quotient element -> representative of its class.
    pub class_rep_of: Vec<usize>,
}

impl LevelEntry {
    fn build(ambient: &FiniteGroup, subgroup: Subgroup) -> Result<LevelEntry> {
        let q = ambient.quotient(&subgroup)?;
        let m = q.group.order();
        let mut coset_reps = vec![usize::MAX; m];
        for g in 0..ambient.order() {
            let c = q.projection[g];
            if coset_reps[c] == usize::MAX {
                coset_reps[c] = g;
            }
        }
        let classes = q.group.conjugacy_classes();
        let mut class_rep_of = vec![0usize; m];
        for class in &classes {
            for &x in &class.members {
                class_rep_of[x] = class.representative;
            }
        }
        Ok(LevelEntry {
            subgroup,
            quotient: q.group,
            projection: q.projection,
            coset_reps,
            classes,
            class_rep_of,
        })
    }

    pub fn class_by_rep(&self, rep: usize) -> Option<&ConjClass> {
        self.classes.iter().find(|c| c.representative == rep)
    }
}

/// JSON input shape: a group plus named subgroups by element indices, and
/// optionally names for individual elements so commands can refer to them.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextSpec {
    pub group: GroupSpec,
    #[serde(default)]
    pub fields: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    pub elements: BTreeMap<String, usize>,
}

/// An ambient group with a growing set of named levels. "K" is the ambient
/// level (full subgroup, trivial quotient) and "N" the top (trivial subgroup,
/// quotient = ambient). Labels derived from set operations reuse an existing
/// label whenever the subgroup is already registered.
#[derive(Debug)]
pub struct GaloisContext {
    id: u64,
    ambient: FiniteGroup,
    levels: BTreeMap<String, LevelEntry>,
}

impl GaloisContext {
    pub fn new(ambient: FiniteGroup) -> GaloisContext {
        let full = ambient.full_subgroup();
        let trivial = ambient.trivial_subgroup();
        let mut levels = BTreeMap::new();
        levels.insert(
            "K".to_string(),
            LevelEntry::build(&ambient, full).expect("full subgroup is normal"),
        );
        levels.insert(
            "N".to_string(),
            LevelEntry::build(&ambient, trivial).expect("trivial subgroup is normal"),
        );
        GaloisContext {
            id: NEXT_CONTEXT_ID.fetch_add(1, Ordering::Relaxed),
            ambient,
            levels,
        }
    }

    pub fn from_spec(spec: &ContextSpec) -> Result<GaloisContext> {
        let ambient = build_group(&spec.group)?;
        let mut ctx = GaloisContext::new(ambient);
        for (label, members) in &spec.fields {
            ctx.register_field(label, members.clone())?;
        }
        Ok(ctx)
    }

    pub fn ambient(&self) -> &FiniteGroup {
        &self.ambient
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.levels.keys().map(|s| s.as_str())
    }

    pub fn level(&self, label: &str) -> Result<&LevelEntry> {
        self.levels.get(label).ok_or_else(|| Error::UnknownLevel(label.to_string()))
    }

    /// Registers a normal subgroup under a fresh label. Re-registering the
    /// same members under the same label is a no-op.
    pub fn register_field(&mut self, label: &str, members: Vec<usize>) -> Result<()> {
        if label.is_empty() {
            return Err(Error::BadLabel(label.to_string(), "empty".into()));
        }
        if label == "K" || label == "N" {
            return Err(Error::BadLabel(label.to_string(), "reserved".into()));
        }
        if label.contains('*') || label.contains('&') {
            return Err(Error::BadLabel(
                label.to_string(),
                "'*' and '&' are reserved for derived levels".into(),
            ));
        }
        let subgroup = Subgroup::new(&self.ambient, members)?;
        if let Some(existing) = self.levels.get(label) {
            if existing.subgroup == subgroup {
                return Ok(());
            }
            return Err(Error::BadLabel(label.to_string(), "already registered".into()));
        }
        self.insert_level(label.to_string(), subgroup)
    }

    fn insert_level(&mut self, label: String, subgroup: Subgroup) -> Result<()> {
        if !subgroup.is_normal(&self.ambient) {
            return Err(Error::NotNormal(format!("field {label:?}")));
        }
        let entry = LevelEntry::build(&self.ambient, subgroup)?;
        self.levels.insert(label, entry);
        Ok(())
    }

    fn label_of_subgroup(&self, members: &[usize]) -> Option<String> {
        self.levels
            .iter()
            .find(|(_, e)| e.subgroup.members() == members)
            .map(|(l, _)| l.clone())
    }

    /// Level of the compositum of two fields: intersection of subgroups.
    /// Reuses any registered label with the same subgroup, otherwise
    /// registers "a*b" (operands sorted).
    pub fn ensure_compositum(&mut self, a: &str, b: &str) -> Result<String> {
        let ha = self.level(a)?.subgroup.clone();
        let hb = self.level(b)?.subgroup.clone();
        let members: Vec<usize> =
            ha.members().iter().copied().filter(|&x| hb.contains(x)).collect();
        self.ensure_derived(a, b, members, '*')
    }

    /// Level of the intersection of two fields: product of subgroups
    /// (a subgroup because both are normal). Label "a&b" when fresh.
    pub fn ensure_field_intersection(&mut self, a: &str, b: &str) -> Result<String> {
        let ha = self.level(a)?.subgroup.clone();
        let hb = self.level(b)?.subgroup.clone();
        let mut in_prod = vec![false; self.ambient.order()];
        for &x in ha.members() {
            for &y in hb.members() {
                in_prod[self.ambient.mul(x, y)] = true;
            }
        }
        let members: Vec<usize> = (0..self.ambient.order()).filter(|&g| in_prod[g]).collect();
        self.ensure_derived(a, b, members, '&')
    }

    fn ensure_derived(
        &mut self,
        a: &str,
        b: &str,
        members: Vec<usize>,
        op: char,
    ) -> Result<String> {
        if let Some(label) = self.label_of_subgroup(&members) {
            return Ok(label);
        }
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        let label = format!("{x}{op}{y}");
        let subgroup = Subgroup::new(&self.ambient, members)?;
        self.insert_level(label.clone(), subgroup)?;
        Ok(label)
    }
}

/// A set of conjugacy classes at one level, identified by class
/// representatives in the quotient there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CebClassSet {
    context_id: u64,
    level: String,
    reps: BTreeSet<usize>,
}

impl CebClassSet {
    pub fn level(&self) -> &str {
        &self.level
    }

    pub fn class_reps(&self) -> &BTreeSet<usize> {
        &self.reps
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn classes<'a>(&self, ctx: &'a GaloisContext) -> Result<Vec<&'a ConjClass>> {
        self.check(ctx)?;
        let entry = ctx.level(&self.level)?;
        Ok(entry
            .classes
            .iter()
            .filter(|c| self.reps.contains(&c.representative))
            .collect())
    }

    fn check(&self, ctx: &GaloisContext) -> Result<()> {
        if self.context_id != ctx.id {
            return Err(Error::ContextMismatch);
        }
        Ok(())
    }

    fn singleton_rep(&self) -> Result<usize> {
        if self.reps.len() != 1 {
            return Err(Error::NotSingleton(format!(
                "set at level {:?} has {} classes",
                self.level,
                self.reps.len()
            )));
        }
        Ok(*self.reps.first().expect("len checked"))
    }
}

/// The set with the single class of `sigma`, an element of the quotient at
/// `level`. With sigma the identity this is the splitting set of the level.
pub fn make_cset(ctx: &GaloisContext, level: &str, sigma: usize) -> Result<CebClassSet> {
    let entry = ctx.level(level)?;
    if sigma >= entry.quotient.order() {
        return Err(Error::ElementRange { index: sigma, order: entry.quotient.order() });
    }
    let mut reps = BTreeSet::new();
    reps.insert(entry.class_rep_of[sigma]);
    Ok(CebClassSet { context_id: ctx.id, level: level.to_string(), reps })
}

/// The set of all classes at a level (the full set of unramified primes).
pub fn full_cset(ctx: &GaloisContext, level: &str) -> Result<CebClassSet> {
    let entry = ctx.level(level)?;
    let reps = entry.classes.iter().map(|c| c.representative).collect();
    Ok(CebClassSet { context_id: ctx.id, level: level.to_string(), reps })
}

/// Rewrites a set at a finer level (smaller subgroup): the classes meeting
/// the preimages of the original classes' cosets. Membership of unramified
/// primes is unchanged.
pub fn lift_to_level(ctx: &GaloisContext, s: &CebClassSet, finer: &str) -> Result<CebClassSet> {
    s.check(ctx)?;
    let fine = ctx.level(finer)?;
    let coarse = ctx.level(&s.level)?;
    if !fine.subgroup.members().iter().all(|&m| coarse.subgroup.contains(m)) {
        return Err(Error::InvalidSubgroup(format!(
            "{finer:?} is not a refinement of {:?}",
            s.level
        )));
    }
    if finer == s.level {
        return Ok(s.clone());
    }
    let hits: Vec<bool> = (0..coarse.quotient.order())
        .map(|x| s.reps.contains(&coarse.class_rep_of[x]))
        .collect();
    // Map a fine quotient element to the coarse quotient through ambient
    // coset representatives.
    let phi: Vec<usize> =
        fine.coset_reps.iter().map(|&g| coarse.projection[g]).collect();
    let reps = fine
        .classes
        .iter()
        .filter(|c| c.members.iter().any(|&m| hits[phi[m]]))
        .map(|c| c.representative)
        .collect();
    Ok(CebClassSet { context_id: ctx.id, level: finer.to_string(), reps })
}

/// Intersection, computed at the compositum level.
pub fn intersect(
    ctx: &mut GaloisContext,
    a: &CebClassSet,
    b: &CebClassSet,
) -> Result<CebClassSet> {
    a.check(ctx)?;
    b.check(ctx)?;
    let comp = ctx.ensure_compositum(&a.level, &b.level)?;
    let la = lift_to_level(ctx, a, &comp)?;
    let lb = lift_to_level(ctx, b, &comp)?;
    let reps = la.reps.intersection(&lb.reps).copied().collect();
    Ok(CebClassSet { context_id: ctx.id, level: comp, reps })
}

/// Exact disjointness for two singleton sets, by conjugation search in the
/// ambient group: the sets meet iff some conjugate of a lift of sigma2 falls
/// in the coset of a lift of sigma1 modulo the product subgroup.
pub fn is_disjoint(ctx: &mut GaloisContext, a: &CebClassSet, b: &CebClassSet) -> Result<bool> {
    a.check(ctx)?;
    b.check(ctx)?;
    let ra = a.singleton_rep()?;
    let rb = b.singleton_rep()?;
    let la = ctx.level(&a.level)?;
    let lb = ctx.level(&b.level)?;
    let g = &ctx.ambient;
    let s1 = la.coset_reps[ra];
    let s2 = lb.coset_reps[rb];
    let mut in_prod = vec![false; g.order()];
    for &x in la.subgroup.members() {
        for &y in lb.subgroup.members() {
            in_prod[g.mul(x, y)] = true;
        }
    }
    let s1_inv = g.inv(s1);
    let meets = (0..g.order()).any(|rho| {
        let conj = g.mul(g.mul(rho, s2), g.inv(rho));
        in_prod[g.mul(s1_inv, conj)]
    });
    Ok(!meets)
}

/// Exact density: total class size over quotient order.
pub fn density(ctx: &GaloisContext, s: &CebClassSet) -> Result<Rational64> {
    s.check(ctx)?;
    let entry = ctx.level(&s.level)?;
    let total: usize = entry
        .classes
        .iter()
        .filter(|c| s.reps.contains(&c.representative))
        .map(|c| c.size())
        .sum();
    Ok(Rational64::new(total as i64, entry.quotient.order() as i64))
}

/// Containment up to a density-zero difference, for singleton sets, decided
/// at the meet level (product subgroup): the reductions must be conjugate
/// and the centralizer of b's element must keep its order under reduction.
/// "Stabilizer" of a class element here always means its centralizer.
pub fn almost_subset(ctx: &mut GaloisContext, a: &CebClassSet, b: &CebClassSet) -> Result<bool> {
    a.check(ctx)?;
    b.check(ctx)?;
    let ra = a.singleton_rep()?;
    let rb = b.singleton_rep()?;
    let meet = ctx.ensure_field_intersection(&a.level, &b.level)?;
    let f = ctx.level(&meet)?;
    let la = ctx.level(&a.level)?;
    let lb = ctx.level(&b.level)?;
    let s1_bar = f.projection[la.coset_reps[ra]];
    let s2_bar = f.projection[lb.coset_reps[rb]];
    if f.class_rep_of[s1_bar] != f.class_rep_of[s2_bar] {
        return Ok(false);
    }
    let st_b = lb.quotient.centralizer(rb)?.order();
    let st_bar = f.quotient.centralizer(s2_bar)?.order();
    Ok(st_b == st_bar)
}

/// Equality up to density zero: containment both ways.
pub fn almost_equal(ctx: &mut GaloisContext, a: &CebClassSet, b: &CebClassSet) -> Result<bool> {
    Ok(almost_subset(ctx, a, b)? && almost_subset(ctx, b, a)?)
}

/// Containment test available when b's element is central in its quotient:
/// b's field must sit inside a's and a's element must reduce to b's. Agrees
/// with `almost_subset` wherever both apply.
pub fn bauer_subset(ctx: &GaloisContext, a: &CebClassSet, b: &CebClassSet) -> Result<bool> {
    a.check(ctx)?;
    b.check(ctx)?;
    let ra = a.singleton_rep()?;
    let rb = b.singleton_rep()?;
    let la = ctx.level(&a.level)?;
    let lb = ctx.level(&b.level)?;
    let central = lb
        .quotient
        .centralizer(rb)?
        .order()
        == lb.quotient.order();
    if !central {
        return Err(Error::NotCentral(format!(
            "element {rb} at level {:?}",
            b.level
        )));
    }
    // Field containment L_b inside L_a is subgroup containment H_a inside H_b.
    if !la.subgroup.members().iter().all(|&m| lb.subgroup.contains(m)) {
        return Ok(false);
    }
    Ok(lb.projection[la.coset_reps[ra]] == rb)
}

/// All classes at the same level not in the set.
pub fn complement_unramified(ctx: &GaloisContext, s: &CebClassSet) -> Result<CebClassSet> {
    s.check(ctx)?;
    let entry = ctx.level(&s.level)?;
    let reps = entry
        .classes
        .iter()
        .map(|c| c.representative)
        .filter(|r| !s.reps.contains(r))
        .collect();
    Ok(CebClassSet { context_id: s.context_id, level: s.level.clone(), reps })
}

/// Sufficient test for an isolated ramified point: the Sylow subgroup at ell
/// of the decomposition group is non-cyclic and survives into the quotient
/// by inertia.
pub fn isolated_sufficient(g_p: &FiniteGroup, t_p: &Subgroup, ell: usize) -> Result<bool> {
    if !t_p.is_normal(g_p) {
        return Err(Error::NotNormal("inertia subgroup".into()));
    }
    let syl = g_p.sylow_and_cyclicity(ell)?;
    if syl.is_cyclic {
        return Ok(false);
    }
    Ok(syl.subgroup.members().iter().any(|&m| !t_p.contains(m)))
}

impl MultiQuadContext {
    /// The abstract context of the compositum: ambient (Z/2)^rank with XOR
    /// as multiplication, one index-2 level per input radicand (its label is
    /// the radicand in decimal), cut out by the parity character the input's
    /// basis expression defines.
    pub fn to_galois_context(&self) -> Result<GaloisContext> {
        let s = self.rank();
        let n = 1usize << s;
        let rows: Vec<Vec<usize>> = (0..n).map(|i| (0..n).map(|j| i ^ j).collect()).collect();
        let g = FiniteGroup::from_table(rows)?;
        let mut ctx = GaloisContext::new(g);
        for (i, &a) in self.inputs().iter().enumerate() {
            let expr = self.input_expression(i);
            let members: Vec<usize> = (0..n)
                .filter(|&x| ((x as u32) & expr).count_ones() % 2 == 0)
                .collect();
            ctx.register_field(&a.to_string(), members)?;
        }
        Ok(ctx)
    }

    /// The ambient element a prime's signature picks out: bit i set iff the
    /// sign at basis field i is -1. Aligns with `to_galois_context`.
    pub fn signature_element(signs: &[i8]) -> usize {
        MultiQuadContext::signature_index(signs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{frobenius_quad, primes_up_to, FrobeniusSymbol, QuadField, Signature};

    fn heis_ctx() -> (GaloisContext, usize) {
        let g = FiniteGroup::heisenberg(3).unwrap();
        let (sigma, _, _) = FiniteGroup::heisenberg_generators(3);
        let center = g.center();
        let mut ctx = GaloisContext::new(g);
        ctx.register_field("L", center.members().to_vec()).unwrap();
        (ctx, sigma)
    }

    fn klein_ctx() -> GaloisContext {
        let g = FiniteGroup::direct_product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(2));
        let mut ctx = GaloisContext::new(g);
        ctx.register_field("L1", vec![0, 1]).unwrap();
        ctx.register_field("L2", vec![0, 2]).unwrap();
        ctx
    }

    #[test]
    fn context_reserved_levels() {
        let ctx = GaloisContext::new(FiniteGroup::cyclic(4));
        assert_eq!(ctx.level("K").unwrap().quotient.order(), 1);
        assert_eq!(ctx.level("N").unwrap().quotient.order(), 4);
        assert!(ctx.level("X").is_err());
    }

    #[test]
    fn register_field_validation() {
        let mut ctx = GaloisContext::new(FiniteGroup::cyclic(4));
        assert!(ctx.register_field("K", vec![0]).is_err());
        assert!(ctx.register_field("a*b", vec![0]).is_err());
        assert!(ctx.register_field("", vec![0]).is_err());
        ctx.register_field("L", vec![0, 2]).unwrap();
        // Idempotent re-registration.
        ctx.register_field("L", vec![0, 2]).unwrap();
        assert!(ctx.register_field("L", vec![0]).is_err());
        // Non-normal subgroup rejected: order-2 subgroup of S3.
        let s3 = FiniteGroup::from_permutation_generators(
            &["(1 2 3)".into(), "(1 2)".into()],
            100,
        )
        .unwrap();
        let mut ctx = GaloisContext::new(s3);
        assert!(matches!(ctx.register_field("T", vec![0, 2]), Err(Error::NotNormal(_))));
    }

    #[test]
    fn make_cset_basics() {
        let (ctx, sigma) = heis_ctx();
        let d = make_cset(&ctx, "N", 0).unwrap();
        assert_eq!(density(&ctx, &d).unwrap(), Rational64::new(1, 27));
        let s = make_cset(&ctx, "N", sigma).unwrap();
        assert_eq!(s.classes(&ctx).unwrap()[0].size(), 3);
        assert_eq!(density(&ctx, &s).unwrap(), Rational64::new(1, 9));
        let rho = make_cset(&ctx, "N", 1).unwrap();
        assert_eq!(density(&ctx, &rho).unwrap(), Rational64::new(1, 27));
        assert!(make_cset(&ctx, "N", 99).is_err());
        assert!(make_cset(&ctx, "missing", 0).is_err());
    }

    #[test]
    fn lift_examples() {
        let ctx = klein_ctx();
        let s = make_cset(&ctx, "L1", 1).unwrap();
        let lifted = lift_to_level(&ctx, &s, "N").unwrap();
        let reps: Vec<usize> = lifted.class_reps().iter().copied().collect();
        assert_eq!(reps, vec![2, 3]);
        assert_eq!(density(&ctx, &s).unwrap(), density(&ctx, &lifted).unwrap());

        // Same-level lift is the identity.
        let same = lift_to_level(&ctx, &s, "L1").unwrap();
        assert_eq!(same, s);

        // Lifting the reduced class of sigma recovers exactly its class.
        let (ctx, sigma) = heis_ctx();
        let level_l = ctx.level("L").unwrap();
        let sigma_bar = level_l.projection[sigma];
        let s = make_cset(&ctx, "L", sigma_bar).unwrap();
        let lifted = lift_to_level(&ctx, &s, "N").unwrap();
        assert_eq!(lifted.class_reps().iter().copied().collect::<Vec<_>>(), vec![sigma]);

        // Coarsening is rejected.
        let (ctx, _) = heis_ctx();
        let s = make_cset(&ctx, "N", 0).unwrap();
        assert!(lift_to_level(&ctx, &s, "L").is_err());
    }

    #[test]
    fn intersect_examples() {
        let mut ctx = klein_ctx();
        let a = make_cset(&ctx, "L1", 1).unwrap();
        let b = make_cset(&ctx, "L2", 1).unwrap();
        let both = intersect(&mut ctx, &a, &b).unwrap();
        assert_eq!(both.level(), "N");
        assert_eq!(both.class_reps().iter().copied().collect::<Vec<_>>(), vec![3]);
        assert_eq!(density(&ctx, &both).unwrap(), Rational64::new(1, 4));

        // Idempotence.
        let aa = intersect(&mut ctx, &a, &a).unwrap();
        assert_eq!(aa.class_reps(), lift_to_level(&ctx, &a, aa.level()).unwrap().class_reps());

        // Commutativity lands at the same derived level.
        let ba = intersect(&mut ctx, &b, &a).unwrap();
        assert_eq!(ba, both);

        // Same level, different classes: empty.
        let x = make_cset(&ctx, "N", 1).unwrap();
        let y = make_cset(&ctx, "N", 2).unwrap();
        assert!(intersect(&mut ctx, &x, &y).unwrap().is_empty());
    }

    #[test]
    fn disjointness_matches_intersection() {
        // Exhaustive cross-check over several contexts and all singleton
        // pairs at all registered levels.
        let mut contexts: Vec<GaloisContext> = Vec::new();
        contexts.push(klein_ctx());
        contexts.push(heis_ctx().0);
        let mut z4 = GaloisContext::new(FiniteGroup::cyclic(4));
        z4.register_field("L", vec![0, 2]).unwrap();
        contexts.push(z4);
        let s3 = FiniteGroup::from_permutation_generators(
            &["(1 2 3)".into(), "(1 2)".into()],
            100,
        )
        .unwrap();
        let mut s3ctx = GaloisContext::new(s3);
        s3ctx.register_field("A", vec![0, 1, 3]).unwrap();
        contexts.push(s3ctx);

        for ctx in contexts.iter_mut() {
            let labels: Vec<String> = ctx.labels().map(String::from).collect();
            for la in &labels {
                for lb in &labels {
                    let ca: Vec<usize> =
                        ctx.level(la).unwrap().classes.iter().map(|c| c.representative).collect();
                    let cb: Vec<usize> =
                        ctx.level(lb).unwrap().classes.iter().map(|c| c.representative).collect();
                    for &x in &ca {
                        for &y in &cb {
                            let a = make_cset(ctx, la, x).unwrap();
                            let b = make_cset(ctx, lb, y).unwrap();
                            let dis = is_disjoint(ctx, &a, &b).unwrap();
                            let inter = intersect(ctx, &a, &b).unwrap();
                            assert_eq!(dis, inter.is_empty(), "{la} {x} vs {lb} {y}");
                            let d = density(ctx, &inter).unwrap();
                            assert_eq!(dis, d == Rational64::new(0, 1));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn linearly_disjoint_levels_always_meet() {
        let mut ctx = klein_ctx();
        for x in 0..2 {
            for y in 0..2 {
                let a = make_cset(&ctx, "L1", x).unwrap();
                let b = make_cset(&ctx, "L2", y).unwrap();
                assert!(!is_disjoint(&mut ctx, &a, &b).unwrap());
            }
        }
    }

    #[test]
    fn complement_splits_density() {
        let (ctx, sigma) = heis_ctx();
        let s = make_cset(&ctx, "N", sigma).unwrap();
        let c = complement_unramified(&ctx, &s).unwrap();
        assert_eq!(c.class_reps().len(), 10);
        assert_eq!(density(&ctx, &c).unwrap(), Rational64::new(8, 9));
        let full = full_cset(&ctx, "N").unwrap();
        assert_eq!(density(&ctx, &full).unwrap(), Rational64::new(1, 1));
        assert!(complement_unramified(&ctx, &full).unwrap().is_empty());
    }

    #[test]
    fn almost_subset_heisenberg() {
        let (mut ctx, sigma) = heis_ctx();
        let a = make_cset(&ctx, "N", sigma).unwrap();
        let sigma_bar = ctx.level("L").unwrap().projection[sigma];
        let b = make_cset(&ctx, "L", sigma_bar).unwrap();
        assert!(almost_equal(&mut ctx, &a, &b).unwrap());
    }

    #[test]
    fn almost_subset_fails_across_klein_factors() {
        let mut ctx = klein_ctx();
        let a = make_cset(&ctx, "L1", 1).unwrap();
        let b = make_cset(&ctx, "L2", 1).unwrap();
        assert!(!almost_subset(&mut ctx, &a, &b).unwrap());
        assert!(almost_subset(&mut ctx, &a, &a).unwrap());
    }

    /// Brute-force containment: lift both to the compositum and compare
    /// class sets.
    fn almost_subset_oracle(
        ctx: &mut GaloisContext,
        a: &CebClassSet,
        b: &CebClassSet,
    ) -> bool {
        let comp = ctx.ensure_compositum(a.level(), b.level()).unwrap();
        let la = lift_to_level(ctx, a, &comp).unwrap();
        let lb = lift_to_level(ctx, b, &comp).unwrap();
        la.class_reps().is_subset(lb.class_reps())
    }

    #[test]
    fn almost_subset_matches_oracle_small() {
        // Register every normal subgroup as a level and compare the
        // criterion against the lifted-containment oracle on all pairs.
        for g in [
            FiniteGroup::cyclic(8),
            FiniteGroup::from_permutation_generators(&["(1 2 3)".into(), "(1 2)".into()], 100)
                .unwrap(),
            FiniteGroup::dihedral(4),
            FiniteGroup::quaternion(),
        ] {
            let normals = g.normal_subgroups();
            let mut ctx = GaloisContext::new(g);
            let mut labels: Vec<String> = vec!["K".into(), "N".into()];
            for (i, h) in normals.iter().enumerate() {
                let label = format!("H{i}");
                if ctx.register_field(&label, h.members().to_vec()).is_ok() {
                    labels.push(label);
                }
            }
            for la in &labels {
                for lb in &labels {
                    let ca: Vec<usize> =
                        ctx.level(la).unwrap().classes.iter().map(|c| c.representative).collect();
                    let cb: Vec<usize> =
                        ctx.level(lb).unwrap().classes.iter().map(|c| c.representative).collect();
                    for &x in &ca {
                        for &y in &cb {
                            let a = make_cset(&ctx, la, x).unwrap();
                            let b = make_cset(&ctx, lb, y).unwrap();
                            let fast = almost_subset(&mut ctx, &a, &b).unwrap();
                            let slow = almost_subset_oracle(&mut ctx, &a, &b);
                            assert_eq!(fast, slow, "{la}({x}) vs {lb}({y})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bauer_examples() {
        let mut ctx = GaloisContext::new(FiniteGroup::cyclic(4));
        ctx.register_field("L2", vec![0, 2]).unwrap();
        let a = make_cset(&ctx, "N", 3).unwrap();
        let b1 = make_cset(&ctx, "L2", 1).unwrap();
        let b0 = make_cset(&ctx, "L2", 0).unwrap();
        assert!(bauer_subset(&ctx, &a, &b1).unwrap());
        assert!(!bauer_subset(&ctx, &a, &b0).unwrap());
        // Same level, both central: equality iff same element.
        let x = make_cset(&ctx, "N", 1).unwrap();
        let y = make_cset(&ctx, "N", 1).unwrap();
        let z = make_cset(&ctx, "N", 2).unwrap();
        assert!(bauer_subset(&ctx, &x, &y).unwrap() && bauer_subset(&ctx, &y, &x).unwrap());
        assert!(!bauer_subset(&ctx, &x, &z).unwrap());
        // Non-central target errors.
        let s3 = FiniteGroup::from_permutation_generators(
            &["(1 2 3)".into(), "(1 2)".into()],
            100,
        )
        .unwrap();
        let ctx = GaloisContext::new(s3);
        let a = make_cset(&ctx, "N", 0).unwrap();
        let b = make_cset(&ctx, "N", 2).unwrap();
        assert!(matches!(bauer_subset(&ctx, &a, &b), Err(Error::NotCentral(_))));
    }

    #[test]
    fn bauer_agrees_with_almost_subset() {
        // Abelian corpus: every element is central, so both tests apply.
        for g in [
            FiniteGroup::cyclic(12),
            FiniteGroup::cyclic(16),
            FiniteGroup::direct_product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(4)),
            FiniteGroup::direct_product(
                &FiniteGroup::cyclic(2),
                &FiniteGroup::direct_product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(2)),
            ),
        ] {
            let normals = g.normal_subgroups();
            let mut ctx = GaloisContext::new(g);
            let mut labels: Vec<String> = Vec::new();
            for (i, h) in normals.iter().enumerate() {
                let label = format!("H{i}");
                ctx.register_field(&label, h.members().to_vec()).unwrap();
                labels.push(label);
            }
            for la in &labels {
                for lb in &labels {
                    let na = ctx.level(la).unwrap().quotient.order();
                    let nb = ctx.level(lb).unwrap().quotient.order();
                    for x in 0..na {
                        for y in 0..nb {
                            let a = make_cset(&ctx, la, x).unwrap();
                            let b = make_cset(&ctx, lb, y).unwrap();
                            assert_eq!(
                                bauer_subset(&ctx, &a, &b).unwrap(),
                                almost_subset(&mut ctx, &a, &b).unwrap(),
                                "{la}({x}) vs {lb}({y})"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn isolated_sufficient_verdicts() {
        let z4 = FiniteGroup::cyclic(4);
        for t in z4.all_subgroups() {
            assert!(!isolated_sufficient(&z4, &t, 2).unwrap());
            assert!(!isolated_sufficient(&z4, &t, 3).unwrap());
        }
        let v4 = FiniteGroup::direct_product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(2));
        let t = Subgroup::new(&v4, vec![0, 1]).unwrap();
        assert!(isolated_sufficient(&v4, &t, 2).unwrap());
        assert!(!isolated_sufficient(&v4, &v4.full_subgroup(), 2).unwrap());
        let h = FiniteGroup::heisenberg(3).unwrap();
        let center = h.center();
        assert!(isolated_sufficient(&h, &center, 3).unwrap());
        // Non-normal inertia rejected.
        let s3 = FiniteGroup::from_permutation_generators(
            &["(1 2 3)".into(), "(1 2)".into()],
            100,
        )
        .unwrap();
        let t = Subgroup::new(&s3, vec![0, 2]).unwrap();
        assert!(isolated_sufficient(&s3, &t, 2).is_err());
    }

    #[test]
    fn context_mismatch_detected() {
        let ctx1 = klein_ctx();
        let mut ctx2 = klein_ctx();
        let a = make_cset(&ctx1, "L1", 1).unwrap();
        let b = make_cset(&ctx2, "L2", 1).unwrap();
        assert!(matches!(intersect(&mut ctx2, &a, &b), Err(Error::ContextMismatch)));
    }

    #[test]
    fn context_spec_roundtrip() {
        let json = r#"{
            "group": {"permutation_generators": ["(1 2)(3 4)", "(1 3)(2 4)"]},
            "fields": {"L1": [0, 1]}
        }"#;
        let spec: ContextSpec = serde_json::from_str(json).unwrap();
        let ctx = GaloisContext::from_spec(&spec).unwrap();
        assert_eq!(ctx.ambient().order(), 4);
        assert!(ctx.level("L1").is_ok());
    }

    #[test]
    fn multiquad_to_context_is_faithful() {
        let mq = MultiQuadContext::new(&[-1, 5, -5]).unwrap();
        let ctx = mq.to_galois_context().unwrap();
        assert_eq!(ctx.ambient().order(), 4);
        let fields: Vec<i64> = vec![-1, 5, -5];
        for p in primes_up_to(100_000).unwrap() {
            let Signature::Unramified(signs) = mq.signature(p) else { continue };
            let elem = MultiQuadContext::signature_element(&signs);
            for &a in &fields {
                let f = QuadField::new(a).unwrap();
                let arithmetical = frobenius_quad(p, &f);
                let level = ctx.level(&a.to_string()).unwrap();
                let split = level.projection[elem] == 0;
                match arithmetical {
                    FrobeniusSymbol::Split => assert!(split, "p={p} a={a}"),
                    FrobeniusSymbol::Inert => assert!(!split, "p={p} a={a}"),
                    FrobeniusSymbol::Ramified => unreachable!(),
                }
            }
        }
    }

    #[test]
    fn lift_preserves_density_everywhere() {
        let (ctx, _) = heis_ctx();
        for label in ["K", "L", "N"] {
            let n_classes = ctx.level(label).unwrap().classes.len();
            for i in 0..n_classes {
                let rep = ctx.level(label).unwrap().classes[i].representative;
                let s = make_cset(&ctx, label, rep).unwrap();
                let lifted = lift_to_level(&ctx, &s, "N").unwrap();
                assert_eq!(density(&ctx, &s).unwrap(), density(&ctx, &lifted).unwrap());
            }
        }
    }
}
