//! Discriminant-filtered partitions of the primes and the distance they
//! induce.
//!
//! For each level `d` the quadratic fields of absolute discriminant exactly
//! `d` split the primes into Frobenius sign classes, with a clopen
//! neighbourhood carved out around each prime ramified at that level.
//! Walking the levels in order refines these partitions, and the level at
//! which two primes first land in different pieces becomes an ultrametric
//! distance between them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{
    frobenius_quad, is_prime, primes_up_to, FrobeniusSymbol, MultiQuadContext, QuadField,
};
use crate::error::{Error, Result};
use crate::topology::{
    closure_over_approx, from_sig, to_sig, Atom, FinPresSet, SigSet, MAX_SIG_RANK,
};

const COMPAT_LEVEL3: &[(i64, i8)] = &[(-1, -1), (5, -1)];
const COMPAT_LEVEL4: &[(i64, i8)] = &[(-3, 1), (5, 1)];

/// Quadratic fields whose discriminant has absolute value exactly `d`,
/// positive radicand first.
pub fn fields_with_abs_disc(d: u64) -> Vec<QuadField> {
    let mut out = Vec::new();
    let mut push = |a: i64| {
        if let Ok(f) = QuadField::new(a) {
            if f.discriminant().unsigned_abs() == d {
                out.push(f);
            }
        }
    };
    let di = d as i64;
    push(di);
    push(-di);
    if d % 4 == 0 {
        push(di / 4);
        push(-di / 4);
    }
    out
}

/// Knobs for building a [`MetricSpace`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    /// Deepest level the distance walk visits.
    pub d_max: u64,
    /// Largest absolute discriminant the searches may draw fields from.
    pub search_disc_bound: u64,
    /// Widest clause the complexity search accepts.
    pub search_clause_width: usize,
    /// Use the fixed level 3 and 4 neighbourhoods instead of searching.
    pub compat: bool,
    /// Default sieve depth for empirical checks.
    pub sieve_bound: u64,
}

impl Default for MetricConfig {
    fn default() -> MetricConfig {
        MetricConfig {
            d_max: 20,
            search_disc_bound: 24,
            search_clause_width: 4,
            compat: false,
            sieve_bound: 100_000,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_max == 0 {
            return Err(Error::BadConfig("d_max must be at least 1".into()));
        }
        if self.d_max > self.search_disc_bound {
            return Err(Error::BadConfig(format!(
                "d_max {} exceeds the search discriminant bound {}",
                self.d_max, self.search_disc_bound
            )));
        }
        if self.search_clause_width == 0 {
            return Err(Error::BadConfig("search_clause_width must be at least 1".into()));
        }
        if self.sieve_bound < 2 {
            return Err(Error::BadConfig("sieve_bound must be at least 2".into()));
        }
        Ok(())
    }
}

/// One piece of a level's partition: a pure sign class (neighbourhoods cut
/// away), the neighbourhood of a ramified prime, or whatever is left over.
/// The leftover block is empty outside compatibility mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Block {
    Sign(usize),
    Nbhd(u64),
    Stray,
}

/// Everything attached to one nonempty level: its fields, the primes
/// ramified there, the neighbourhoods carved out around them, and the
/// resulting blocks.
#[derive(Clone, Debug)]
pub struct LevelData {
    pub d: u64,
    pub fields: Vec<QuadField>,
    pub ramified: Vec<u64>,
    /// Absolute discriminant the neighbourhood search settled on.
    pub search_cap: u64,
    pub tilde: BTreeMap<u64, FinPresSet>,
    blocks: Vec<(Block, SigSet)>,
}

impl LevelData {
    /// Number of sign classes a prime unramified here can land in.
    pub fn sign_classes(&self) -> usize {
        1 << self.fields.len()
    }

    pub fn block_sets(&self) -> &[(Block, SigSet)] {
        &self.blocks
    }

    /// Position of a block in the fixed enumeration: sign classes first,
    /// then neighbourhoods by ramified prime, then the stray block.
    pub fn block_index(&self, block: &Block) -> usize {
        match block {
            Block::Sign(i) => *i,
            Block::Nbhd(alpha) => {
                self.sign_classes()
                    + self.ramified.iter().position(|p| p == alpha).expect("neighbourhood key")
            }
            Block::Stray => self.sign_classes() + self.ramified.len(),
        }
    }

    pub fn block_label(&self, block: &Block) -> String {
        match block {
            Block::Sign(i) => {
                let signs: Vec<&str> =
                    (0..self.fields.len()).map(|j| if i >> j & 1 == 1 { "-" } else { "+" }).collect();
                format!("sign({})", signs.join(","))
            }
            Block::Nbhd(alpha) => format!("nbhd({alpha})"),
            Block::Stray => "stray".into(),
        }
    }

    /// Which block a prime lands in at this level.
    pub fn block_of(&self, p: u64) -> Block {
        for (alpha, t) in &self.tilde {
            if t.member(p) {
                return Block::Nbhd(*alpha);
            }
        }
        let mut idx = 0;
        for (j, f) in self.fields.iter().enumerate() {
            match frobenius_quad(p, f) {
                FrobeniusSymbol::Ramified => return Block::Stray,
                s => idx |= usize::from(s.sign() < 0) << j,
            }
        }
        Block::Sign(idx)
    }
}

/// One piece of the joint refinement up to some level: the block chosen at
/// each nonempty level, with the set this chain cuts out.
#[derive(Clone, Debug)]
pub struct Cell {
    pub blocks: Vec<(u64, Block)>,
    sig: SigSet,
}

impl Cell {
    pub fn sig(&self) -> &SigSet {
        &self.sig
    }

    pub fn is_empty(&self) -> bool {
        self.sig.is_empty_set()
    }

    fn is_formal(&self) -> bool {
        self.blocks.iter().all(|(_, b)| matches!(b, Block::Sign(_)))
    }
}

/// A distance value: zero, an exact reciprocal, or an interval bound when the
/// walk runs out of levels without separating the pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaValue {
    Zero,
    Exact { n: u64 },
    AtMost { d: u64 },
}

impl fmt::Display for DeltaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaValue::Zero => write!(f, "0"),
            DeltaValue::Exact { n: 1 } => write!(f, "1"),
            DeltaValue::Exact { n } => write!(f, "1/{n}"),
            DeltaValue::AtMost { d } => write!(f, "(0,1/{d}]"),
        }
    }
}

impl Serialize for DeltaValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// One row of the level walk for a pair of primes.
#[derive(Clone, Debug, Serialize)]
pub struct LevelTrace {
    pub d: u64,
    pub x_block: String,
    pub y_block: String,
    pub same_cell: bool,
}

/// Distance between two primes under both value conventions, with the walk
/// that produced it. `n_literal` is the deepest level bound the pair shares a
/// cell through; `None` means they never split (or are equal).
#[derive(Clone, Debug, Serialize)]
pub struct DeltaResult {
    pub pair: (u64, u64),
    pub n_literal: Option<u64>,
    pub literal: DeltaValue,
    pub variant: DeltaValue,
    pub trace: Vec<LevelTrace>,
}

/// Distance matrix over a list of primes, with ultrametric bookkeeping.
#[derive(Clone, Debug, Serialize)]
pub struct DeltaMatrix {
    pub primes: Vec<u64>,
    pub entries: Vec<Vec<DeltaResult>>,
    /// Triples (x, y, z) with delta(x,z) > max(delta(x,y), delta(y,z)).
    pub ultrametric_violations: Vec<(u64, u64, u64)>,
}

impl DeltaMatrix {
    /// Square CSV table of the literal values, primes as header row and
    /// column. Interval entries contain a comma, so they are quoted.
    pub fn to_csv(&self) -> String {
        let quote = |s: String| if s.contains(',') { format!("\"{s}\"") } else { s };
        let mut out = String::from("delta");
        for p in &self.primes {
            out.push(',');
            out.push_str(&p.to_string());
        }
        out.push('\n');
        for (i, x) in self.primes.iter().enumerate() {
            out.push_str(&x.to_string());
            for entry in &self.entries[i] {
                out.push(',');
                out.push_str(&quote(entry.literal.to_string()));
            }
            out.push('\n');
        }
        out
    }
}

/// Level-by-level evidence for one compared pair.
#[derive(Clone, Debug, Serialize)]
pub struct LevelEvidence {
    pub d: u64,
    pub same_cell: bool,
    pub x_block: String,
    pub y_block: String,
    /// Frobenius symbol of each prime in every field consulted at this level.
    pub frobenius: BTreeMap<i64, (String, String)>,
}

/// A computed distance for one small pair scored against the reference
/// classification.
#[derive(Clone, Debug, Serialize)]
pub struct PairComparison {
    pub pair: (u64, u64),
    pub reference_value: String,
    pub computed_value: String,
    pub computed_variant: String,
    pub agrees: bool,
    pub levels: Vec<LevelEvidence>,
}

/// Outcome of the presentation-complexity search: the smallest discriminant
/// cap the set is expressible under, and the clause width realized there.
#[derive(Clone, Debug, Serialize)]
pub struct ComplexityBound {
    pub max_abs_disc: u64,
    pub clause_width: usize,
    /// The reported cap is an upper bound on the true infimum unless zero.
    pub bound_only: bool,
    /// False when no cap met the configured clause width; the smallest
    /// expressible cap is reported instead.
    pub width_within_bound: bool,
}

/// Reference classification for pairs of primes up to 19: the two known
/// lists, everything else at distance 1.
fn reference_value(x: u64, y: u64) -> &'static str {
    const THIRDS: [(u64, u64); 6] = [(2, 7), (2, 13), (5, 11), (7, 13), (7, 19), (13, 19)];
    const QUARTER_INTERVAL: [(u64, u64); 2] = [(2, 19), (5, 17)];
    let key = (x.min(y), x.max(y));
    if THIRDS.contains(&key) {
        "1/3"
    } else if QUARTER_INTERVAL.contains(&key) {
        "(0,1/4]"
    } else {
        "1"
    }
}

fn symbol_name(s: FrobeniusSymbol) -> &'static str {
    match s {
        FrobeniusSymbol::Split => "split",
        FrobeniusSymbol::Inert => "inert",
        FrobeniusSymbol::Ramified => "ramified",
    }
}

fn gf2_rank(mut rows: Vec<u32>) -> usize {
    let mut rank = 0;
    for bit in (0..32).rev() {
        if let Some(i) = (rank..rows.len()).find(|&i| rows[i] >> bit & 1 == 1) {
            rows.swap(rank, i);
            for j in 0..rows.len() {
                if j != rank && rows[j] >> bit & 1 == 1 {
                    rows[j] ^= rows[rank];
                }
            }
            rank += 1;
        }
    }
    rank
}

/// The ambient data for the prime-distance computations: one signature
/// universe over every field up to the search bound, plus the per-level
/// partitions.
pub struct MetricSpace {
    config: MetricConfig,
    universe: MultiQuadContext,
    all_fields: Vec<QuadField>,
    caps: Vec<u64>,
    levels: Vec<LevelData>,
}

impl MetricSpace {
    pub fn new(config: MetricConfig) -> Result<MetricSpace> {
        config.validate()?;
        let mut all_fields = Vec::new();
        let mut caps = Vec::new();
        for d in 1..=config.search_disc_bound {
            let fs = fields_with_abs_disc(d);
            if !fs.is_empty() {
                caps.push(d);
            }
            all_fields.extend(fs);
        }
        let radicands: Vec<i64> = all_fields.iter().map(|f| f.radicand()).collect();
        let universe = MultiQuadContext::new(&radicands)?;
        if universe.rank() > MAX_SIG_RANK {
            return Err(Error::BadConfig(format!(
                "search bound {} needs signature rank {}, the limit is {}",
                config.search_disc_bound,
                universe.rank(),
                MAX_SIG_RANK
            )));
        }
        let mut space = MetricSpace { config, universe, all_fields, caps, levels: Vec::new() };
        let mut levels = Vec::new();
        for d in 1..=space.config.d_max {
            let fields = fields_with_abs_disc(d);
            if !fields.is_empty() {
                levels.push(space.build_level(d, fields)?);
            }
        }
        space.levels = levels;
        Ok(space)
    }

    pub fn config(&self) -> &MetricConfig {
        &self.config
    }

    pub fn universe(&self) -> &MultiQuadContext {
        &self.universe
    }

    pub fn levels(&self) -> &[LevelData] {
        &self.levels
    }

    pub fn level(&self, d: u64) -> Option<&LevelData> {
        self.levels.iter().find(|l| l.d == d)
    }

    fn expr(&self, f: &QuadField) -> u32 {
        self.universe
            .expression_of(f.radicand())
            .expect("valid radicand")
            .expect("universe input")
    }

    fn avail(&self, cap: u64, alpha: u64) -> Vec<&QuadField> {
        self.all_fields
            .iter()
            .filter(|f| {
                f.discriminant().unsigned_abs() <= cap && !f.ramified_primes().contains(&alpha)
            })
            .collect()
    }

    /// Smallest cap whose fields unramified at `alpha` are nonempty and span
    /// everything available to lower levels.
    fn min_cap(&self, d: u64, alpha: u64) -> Result<u64> {
        let forced: Vec<u32> = self.avail(d, alpha).iter().map(|f| self.expr(f)).collect();
        for &c in &self.caps {
            let masks: Vec<u32> = self.avail(c, alpha).iter().map(|f| self.expr(f)).collect();
            if masks.is_empty() {
                continue;
            }
            let r = gf2_rank(masks.clone());
            let mut joint = masks;
            joint.extend(forced.iter().copied());
            if gf2_rank(joint) == r {
                return Ok(c);
            }
        }
        Err(Error::SearchExhausted(format!(
            "no discriminant cap up to {} spans the constraints around {alpha} at level {d}",
            self.config.search_disc_bound
        )))
    }

    /// The clause over every field below the cap unramified at `alpha`,
    /// with signs matching `alpha`'s Frobenius, stripped of its ramified
    /// weak satisfiers until the closedness certificate passes.
    fn neighbourhood_at(&self, cap: u64, alpha: u64) -> Result<FinPresSet> {
        let atoms: Vec<Atom> = self
            .avail(cap, alpha)
            .iter()
            .map(|f| Atom::quad(f.radicand(), frobenius_quad(alpha, f).sign()))
            .collect::<Result<_>>()?;
        let mut s = FinPresSet::from_clause(atoms);
        loop {
            match closure_over_approx(&s).witness {
                None => return Ok(s),
                Some(w) => {
                    let mut removed = s.removed().clone();
                    removed.insert(w);
                    s = FinPresSet::new(s.clauses().to_vec(), s.added().clone(), removed)?;
                }
            }
        }
    }

    fn search_neighbourhoods(
        &self,
        d: u64,
        ramified: &[u64],
    ) -> Result<(BTreeMap<u64, FinPresSet>, u64)> {
        let mut cap = 0;
        for &alpha in ramified {
            cap = cap.max(self.min_cap(d, alpha)?);
        }
        loop {
            let mut tilde = BTreeMap::new();
            for &alpha in ramified {
                tilde.insert(alpha, self.neighbourhood_at(cap, alpha)?);
            }
            let sigs: Vec<SigSet> =
                tilde.values().map(|t| to_sig(t, &self.universe)).collect::<Result<_>>()?;
            let disjoint = (0..sigs.len()).all(|i| {
                (i + 1..sigs.len()).all(|j| sigs[i].and(&sigs[j], &self.universe).is_empty_set())
            });
            if disjoint {
                return Ok((tilde, cap));
            }
            cap = self.caps.iter().copied().find(|&c| c > cap).ok_or_else(|| {
                Error::SearchExhausted(format!(
                    "level {d} neighbourhoods still overlap at the search bound {}",
                    self.config.search_disc_bound
                ))
            })?;
        }
    }

    fn pinned_clause(atoms: &[(i64, i8)]) -> Result<FinPresSet> {
        let atoms: Vec<Atom> =
            atoms.iter().map(|&(a, s)| Atom::quad(a, s)).collect::<Result<_>>()?;
        Ok(FinPresSet::from_clause(atoms))
    }

    fn build_level(&self, d: u64, fields: Vec<QuadField>) -> Result<LevelData> {
        let mut ramified = BTreeSet::new();
        for f in &fields {
            ramified.extend(f.ramified_primes());
        }
        let ramified: Vec<u64> = ramified.into_iter().collect();

        let (tilde, search_cap) = if self.config.compat && d == 3 {
            (BTreeMap::from([(3, Self::pinned_clause(COMPAT_LEVEL3)?)]), 5)
        } else if self.config.compat && d == 4 {
            (BTreeMap::from([(2, Self::pinned_clause(COMPAT_LEVEL4)?)]), 5)
        } else {
            self.search_neighbourhoods(d, &ramified)?
        };

        let tilde_sigs: Vec<(u64, SigSet)> = tilde
            .iter()
            .map(|(&a, t)| Ok((a, to_sig(t, &self.universe)?)))
            .collect::<Result<_>>()?;
        let nbhd_union = tilde_sigs
            .iter()
            .map(|(_, s)| s.clone())
            .reduce(|a, b| a.or(&b, &self.universe));

        let mut blocks = Vec::new();
        for pattern in 0..1usize << fields.len() {
            let atoms: Vec<Atom> = fields
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    Atom::quad(f.radicand(), if pattern >> j & 1 == 1 { -1 } else { 1 })
                })
                .collect::<Result<_>>()?;
            let mut set = to_sig(&FinPresSet::from_clause(atoms), &self.universe)?;
            if let Some(u) = &nbhd_union {
                set = set.minus(u, &self.universe);
            }
            blocks.push((Block::Sign(pattern), set));
        }
        for (alpha, sig) in tilde_sigs {
            blocks.push((Block::Nbhd(alpha), sig));
        }
        let covered = blocks
            .iter()
            .map(|(_, s)| s.clone())
            .reduce(|a, b| a.or(&b, &self.universe))
            .expect("at least one sign class");
        let stray = to_sig(&FinPresSet::full(), &self.universe)?.minus(&covered, &self.universe);
        if !stray.is_empty_set() {
            blocks.push((Block::Stray, stray));
        }
        Ok(LevelData { d, fields, ramified, search_cap, tilde, blocks })
    }

    /// Joint refinement of every nonempty level up to `d`. Chains of pure
    /// sign blocks are the formal sign classes and are kept even when empty;
    /// chains through a neighbourhood or stray block are kept only when
    /// inhabited.
    pub fn cells(&self, d: u64) -> Result<Vec<Cell>> {
        let full = to_sig(&FinPresSet::full(), &self.universe)?;
        let mut cells = vec![Cell { blocks: Vec::new(), sig: full }];
        for level in self.levels.iter().filter(|l| l.d <= d) {
            let mut next = Vec::new();
            for cell in &cells {
                for (block, set) in &level.blocks {
                    let sig = cell.sig.and(set, &self.universe);
                    let formal = cell.is_formal() && matches!(block, Block::Sign(_));
                    if formal || !sig.is_empty_set() {
                        let mut blocks = cell.blocks.clone();
                        blocks.push((level.d, *block));
                        next.push(Cell { blocks, sig });
                    }
                }
            }
            cells = next;
        }
        cells.sort_by(|a, b| self.cell_sort_key(a).cmp(&self.cell_sort_key(b)));
        Ok(cells)
    }

    /// Sign-only chains sort first in sign order; chains through special
    /// blocks sort by where the special levels sit, then by block positions.
    fn cell_sort_key(&self, cell: &Cell) -> (Vec<u64>, Vec<usize>) {
        let mut special = Vec::new();
        let mut indices = Vec::new();
        for (d, block) in &cell.blocks {
            let level = self.level(*d).expect("cell levels exist");
            if !matches!(block, Block::Sign(_)) {
                special.push(*d);
            }
            indices.push(level.block_index(block));
        }
        (special, indices)
    }

    pub fn cell_presentation(&self, cell: &Cell) -> FinPresSet {
        from_sig(&cell.sig, &self.universe)
    }

    pub fn cell_labels(&self, cell: &Cell) -> Vec<String> {
        cell.blocks
            .iter()
            .map(|(d, b)| {
                let level = self.level(*d).expect("cell levels exist");
                format!("d{}:{}", d, level.block_label(b))
            })
            .collect()
    }

    pub fn cell_members_upto(&self, cell: &Cell, bound: u64) -> Result<Vec<u64>> {
        Ok(primes_up_to(bound)?
            .into_iter()
            .filter(|&p| cell.sig.member(p, &self.universe))
            .collect())
    }

    fn check_prime(&self, p: u64) -> Result<()> {
        if !is_prime(p) {
            return Err(Error::BadCommand(format!("{p} is not prime")));
        }
        if p > self.config.sieve_bound {
            return Err(Error::BadCommand(format!(
                "prime {p} exceeds the sieve bound {}",
                self.config.sieve_bound
            )));
        }
        Ok(())
    }

    /// Distance between two primes: walk the nonempty levels in order and
    /// record where the pair first separates. The literal convention reports
    /// 1/n for a split after level n; the variant convention reports 1 for a
    /// split at the very first level.
    pub fn delta(&self, x: u64, y: u64) -> Result<DeltaResult> {
        self.check_prime(x)?;
        self.check_prime(y)?;
        if x == y {
            return Ok(DeltaResult {
                pair: (x, y),
                n_literal: None,
                literal: DeltaValue::Zero,
                variant: DeltaValue::Zero,
                trace: Vec::new(),
            });
        }
        let mut trace = Vec::new();
        let mut split_at = None;
        for level in &self.levels {
            let bx = level.block_of(x);
            let by = level.block_of(y);
            let same = bx == by;
            trace.push(LevelTrace {
                d: level.d,
                x_block: level.block_label(&bx),
                y_block: level.block_label(&by),
                same_cell: same,
            });
            if !same {
                split_at = Some(level.d);
                break;
            }
        }
        Ok(match split_at {
            Some(m) => {
                let n = m - 1;
                let literal = DeltaValue::Exact { n };
                let variant = if self.levels.first().map(|l| l.d) == Some(m) {
                    DeltaValue::Exact { n: 1 }
                } else {
                    literal
                };
                DeltaResult { pair: (x, y), n_literal: Some(n), literal, variant, trace }
            }
            None => {
                let bound = DeltaValue::AtMost { d: self.config.d_max };
                DeltaResult { pair: (x, y), n_literal: None, literal: bound, variant: bound, trace }
            }
        })
    }

    /// Full matrix over the given primes, with every triple checked for the
    /// strong triangle inequality (in both conventions at once, since both
    /// are decreasing in the separation depth).
    pub fn delta_matrix(&self, primes: &[u64]) -> Result<DeltaMatrix> {
        if primes.is_empty() {
            return Err(Error::BadCommand("the matrix needs at least one prime".into()));
        }
        let entries: Vec<Vec<DeltaResult>> = primes
            .iter()
            .map(|&x| primes.iter().map(|&y| self.delta(x, y)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let depth = |i: usize, j: usize| -> u64 {
            if primes[i] == primes[j] {
                u64::MAX
            } else {
                entries[i][j].n_literal.unwrap_or(self.config.d_max)
            }
        };
        let mut ultrametric_violations = Vec::new();
        let n = primes.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if depth(i, k) < depth(i, j).min(depth(j, k)) {
                        ultrametric_violations.push((primes[i], primes[j], primes[k]));
                    }
                }
            }
        }
        Ok(DeltaMatrix { primes: primes.to_vec(), entries, ultrametric_violations })
    }

    /// Distances among the primes up to 19, walked through level 4 only and
    /// scored against the reference classification. A pair agrees when either
    /// convention reproduces the reference value.
    pub fn comparison_report(&self) -> Result<Vec<PairComparison>> {
        let primes: Vec<u64> = [2u64, 3, 5, 7, 11, 13, 17, 19]
            .into_iter()
            .filter(|&p| p <= self.config.sieve_bound)
            .collect();
        let mut out = Vec::new();
        for i in 0..primes.len() {
            for j in i + 1..primes.len() {
                let (x, y) = (primes[i], primes[j]);
                let mut levels = Vec::new();
                let mut split_at = None;
                let mut first = None;
                for level in self.levels.iter().filter(|l| l.d <= 4) {
                    first.get_or_insert(level.d);
                    let bx = level.block_of(x);
                    let by = level.block_of(y);
                    let same = bx == by;
                    let mut rads: BTreeSet<i64> =
                        level.fields.iter().map(|f| f.radicand()).collect();
                    for t in level.tilde.values() {
                        rads.extend(t.quad_radicands());
                    }
                    let mut frobenius = BTreeMap::new();
                    for r in rads {
                        let f = QuadField::new(r)?;
                        frobenius.insert(
                            r,
                            (
                                symbol_name(frobenius_quad(x, &f)).to_string(),
                                symbol_name(frobenius_quad(y, &f)).to_string(),
                            ),
                        );
                    }
                    levels.push(LevelEvidence {
                        d: level.d,
                        same_cell: same,
                        x_block: level.block_label(&bx),
                        y_block: level.block_label(&by),
                        frobenius,
                    });
                    if !same {
                        split_at = Some(level.d);
                        break;
                    }
                }
                let (value, variant) = match split_at {
                    Some(m) => {
                        let lit = DeltaValue::Exact { n: m - 1 };
                        (lit, if first == Some(m) { DeltaValue::Exact { n: 1 } } else { lit })
                    }
                    None => {
                        let bound = DeltaValue::AtMost { d: 4 };
                        (bound, bound)
                    }
                };
                let reference = reference_value(x, y).to_string();
                let computed_value = value.to_string();
                let computed_variant = variant.to_string();
                let agrees = computed_value == reference || computed_variant == reference;
                out.push(PairComparison {
                    pair: (x, y),
                    reference_value: reference,
                    computed_value,
                    computed_variant,
                    agrees,
                    levels,
                });
            }
        }
        Ok(out)
    }

    /// Smallest discriminant cap under which the set is expressible, scanning
    /// upward and stopping at the first cap whose realized clause width fits
    /// the configured limit. Exceptions are free at any cap. When no cap fits
    /// the width, the smallest expressible cap is reported with
    /// `width_within_bound` unset.
    pub fn presentation_complexity(&self, s: &FinPresSet) -> Result<ComplexityBound> {
        let sig = to_sig(s, &self.universe)?;
        let rank = self.universe.rank();
        let mut fallback: Option<(u64, usize)> = None;
        for cap in std::iter::once(0).chain(self.caps.iter().copied()) {
            let fields: Vec<&QuadField> = self
                .all_fields
                .iter()
                .filter(|f| f.discriminant().unsigned_abs() <= cap)
                .collect();
            // Expressible at this cap iff the membership bit is constant on
            // groups of cells sharing every sign over these fields.
            let exprs: Vec<usize> = fields.iter().map(|f| self.expr(f) as usize).collect();
            let mut groups: BTreeMap<Vec<bool>, bool> = BTreeMap::new();
            let mut expressible = true;
            for cell in 0..1usize << rank {
                let key: Vec<bool> =
                    exprs.iter().map(|&e| (e & cell).count_ones() % 2 == 1).collect();
                let bit = sig.cell_bit(cell);
                if *groups.entry(key).or_insert(bit) != bit {
                    expressible = false;
                    break;
                }
            }
            if !expressible {
                continue;
            }
            let width = if cap == 0 {
                0
            } else {
                let rads: Vec<i64> = fields.iter().map(|f| f.radicand()).collect();
                let sub = MultiQuadContext::new(&rads)?;
                let sub_exprs: Vec<usize> = sub
                    .basis()
                    .iter()
                    .map(|&b| {
                        Ok(self
                            .universe
                            .expression_of(b)?
                            .expect("sub-basis radicands are universe inputs")
                            as usize)
                    })
                    .collect::<Result<_>>()?;
                let mut bits = vec![false; 1 << sub.rank()];
                for cell in 0..1usize << rank {
                    let signs: Vec<i8> = sub_exprs
                        .iter()
                        .map(|&e| if (e & cell).count_ones() % 2 == 1 { -1 } else { 1 })
                        .collect();
                    bits[MultiQuadContext::signature_index(&signs)] = sig.cell_bit(cell);
                }
                let extra: BTreeSet<u64> =
                    s.added().iter().chain(s.removed().iter()).copied().collect();
                let sub_sig =
                    SigSet::build(&sub, |c| bits[c], |p| s.member(p), &extra)?;
                from_sig(&sub_sig, &sub).clauses().iter().map(|c| c.len()).max().unwrap_or(0)
            };
            if width <= self.config.search_clause_width {
                return Ok(ComplexityBound {
                    max_abs_disc: cap,
                    clause_width: width,
                    bound_only: cap > 0,
                    width_within_bound: true,
                });
            }
            if fallback.is_none() {
                fallback = Some((cap, width));
            }
        }
        let (max_abs_disc, clause_width) =
            fallback.expect("the top cap spans the whole universe");
        Ok(ComplexityBound { max_abs_disc, clause_width, bound_only: true, width_within_bound: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::kronecker;

    fn strict() -> MetricSpace {
        MetricSpace::new(MetricConfig::default()).unwrap()
    }

    fn compat() -> MetricSpace {
        MetricSpace::new(MetricConfig { compat: true, ..MetricConfig::default() }).unwrap()
    }

    fn quad(a: i64, s: i8) -> Atom {
        Atom::quad(a, s).unwrap()
    }

    fn clause_minus(atoms: &[(i64, i8)], removed: &[u64]) -> FinPresSet {
        FinPresSet::new(
            vec![atoms.iter().map(|&(a, s)| quad(a, s)).collect()],
            BTreeSet::new(),
            removed.iter().copied().collect(),
        )
        .unwrap()
    }

    #[test]
    fn fields_by_abs_disc_match_the_table() {
        let table: &[(u64, &[i64])] = &[
            (1, &[]),
            (2, &[]),
            (3, &[-3]),
            (4, &[-1]),
            (5, &[5]),
            (6, &[]),
            (7, &[-7]),
            (8, &[2, -2]),
            (9, &[]),
            (10, &[]),
            (11, &[-11]),
            (12, &[3]),
            (13, &[13]),
            (14, &[]),
            (15, &[-15]),
            (16, &[]),
            (17, &[17]),
            (18, &[]),
            (19, &[-19]),
            (20, &[-5]),
            (21, &[21]),
            (22, &[]),
            (23, &[-23]),
            (24, &[6, -6]),
        ];
        for &(d, rads) in table {
            let got: Vec<i64> = fields_with_abs_disc(d).iter().map(|f| f.radicand()).collect();
            assert_eq!(got, rads, "level {d}");
        }
    }

    #[test]
    fn universe_covers_the_search_bound() {
        let space = strict();
        let inputs: Vec<i64> = space.universe().inputs().to_vec();
        assert_eq!(
            inputs,
            vec![-3, -1, 5, -7, 2, -2, -11, 3, 13, -15, 17, -19, -5, 21, -23, 6, -6]
        );
        assert_eq!(space.universe().rank(), 10);
        let nonempty: Vec<u64> = space.levels().iter().map(|l| l.d).collect();
        assert_eq!(nonempty, vec![3, 4, 5, 7, 8, 11, 12, 13, 15, 17, 19, 20]);
    }

    #[test]
    fn strict_neighbourhoods_are_the_expected_presentations() {
        let space = strict();
        let tilde = |d: u64, alpha: u64| space.level(d).unwrap().tilde[&alpha].clone();
        assert_eq!(tilde(3, 3), clause_minus(&[(-1, -1)], &[2]));
        assert_eq!(tilde(4, 2), clause_minus(&[(-3, -1)], &[3]));
        assert_eq!(tilde(5, 5), clause_minus(&[(-3, -1), (-1, 1)], &[2]));
        assert_eq!(tilde(7, 7), clause_minus(&[(-3, 1), (-1, -1), (5, -1)], &[3]));
        assert_eq!(tilde(8, 2), clause_minus(&[(-3, -1), (5, -1), (-7, 1)], &[]));
        assert_eq!(
            tilde(12, 2),
            clause_minus(&[(-3, -1), (5, -1), (-7, 1), (-11, -1)], &[])
        );
        assert_eq!(
            tilde(12, 3),
            clause_minus(&[(-11, 1), (-7, -1), (-2, 1), (-1, -1), (2, -1), (5, -1)], &[])
        );

        let caps: Vec<(u64, u64)> =
            space.levels().iter().map(|l| (l.d, l.search_cap)).collect();
        assert_eq!(
            caps,
            vec![
                (3, 4),
                (4, 3),
                (5, 4),
                (7, 5),
                (8, 7),
                (11, 8),
                (12, 11),
                (13, 11),
                (15, 13),
                (17, 13),
                (19, 17),
                (20, 19)
            ]
        );
    }

    #[test]
    fn neighbourhood_invariants_hold() {
        let space = strict();
        for level in space.levels() {
            let sigs: Vec<(u64, crate::topology::SigSet)> = level
                .tilde
                .iter()
                .map(|(&a, t)| (a, to_sig(t, space.universe()).unwrap()))
                .collect();
            for (alpha, t) in &level.tilde {
                assert!(t.member(*alpha), "level {} neighbourhood misses {alpha}", level.d);
                assert!(closure_over_approx(t).certified, "level {} at {alpha}", level.d);
            }
            for i in 0..sigs.len() {
                for j in i + 1..sigs.len() {
                    assert!(
                        sigs[i].1.and(&sigs[j].1, space.universe()).is_empty_set(),
                        "level {} neighbourhoods overlap",
                        level.d
                    );
                }
            }
            // Deeper neighbourhoods of the same prime shrink.
            for earlier in space.levels().iter().filter(|l| l.d < level.d) {
                for (alpha, t) in &level.tilde {
                    if let Some(t0) = earlier.tilde.get(alpha) {
                        let a = to_sig(t, space.universe()).unwrap();
                        let b = to_sig(t0, space.universe()).unwrap();
                        assert!(
                            a.minus(&b, space.universe()).is_empty_set(),
                            "level {} neighbourhood of {alpha} escapes level {}",
                            level.d,
                            earlier.d
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn compat_pins_level_three_and_four() {
        let space = compat();
        assert_eq!(
            space.level(3).unwrap().tilde[&3],
            FinPresSet::from_clause(vec![quad(-1, -1), quad(5, -1)])
        );
        assert_eq!(
            space.level(4).unwrap().tilde[&2],
            FinPresSet::from_clause(vec![quad(-3, 1), quad(5, 1)])
        );
        // Level 5 onward searches as usual.
        assert_eq!(space.level(5).unwrap().tilde[&5], clause_minus(&[(-3, -1), (-1, 1)], &[2]));

        let level4 = space.level(4).unwrap();
        let stray: Vec<&(Block, crate::topology::SigSet)> =
            level4.block_sets().iter().filter(|(b, _)| matches!(b, Block::Stray)).collect();
        assert_eq!(stray.len(), 1);
        let members: Vec<u64> = primes_up_to(100)
            .unwrap()
            .into_iter()
            .filter(|&p| stray[0].1.member(p, space.universe()))
            .collect();
        assert_eq!(members, vec![2]);
        assert_eq!(level4.block_of(2), Block::Stray);
        // Strict mode leaves nothing stray anywhere.
        for level in strict().levels() {
            assert!(level.block_sets().iter().all(|(b, _)| !matches!(b, Block::Stray)));
        }
    }

    #[test]
    fn compat_cells_reproduce_the_small_tables() {
        let space = compat();
        let members = |cell: &Cell| space.cell_members_upto(cell, 19).unwrap();

        let w3 = space.cells(3).unwrap();
        assert_eq!(w3.len(), 3);
        assert_eq!(members(&w3[0]), vec![13, 19]);
        assert_eq!(members(&w3[1]), vec![2, 5, 11, 17]);
        assert_eq!(members(&w3[2]), vec![3, 7]);
        assert_eq!(w3[2].blocks, vec![(3, Block::Nbhd(3))]);

        let w4 = space.cells(4).unwrap();
        assert_eq!(w4.len(), 7);
        let got: Vec<Vec<u64>> = w4.iter().map(|c| members(c)).collect();
        assert_eq!(
            got,
            vec![
                vec![13],
                vec![],
                vec![5, 17],
                vec![11],
                vec![3, 7],
                vec![19],
                vec![2]
            ]
        );
        assert_eq!(w4[4].blocks, vec![(3, Block::Nbhd(3)), (4, Block::Sign(1))]);
        assert_eq!(w4[5].blocks, vec![(3, Block::Sign(0)), (4, Block::Nbhd(2))]);
        assert_eq!(w4[6].blocks, vec![(3, Block::Sign(1)), (4, Block::Stray)]);

        // Independent membership oracle for the seven cells, checked deeper.
        let t3 = |p: u64| p != 2 && p != 5 && kronecker(-1, p as i64) == -1 && kronecker(5, p as i64) == -1;
        let t4 = |p: u64| p != 2 && p != 3 && p != 5 && kronecker(-3, p as i64) == 1 && kronecker(5, p as i64) == 1;
        for p in primes_up_to(1000).unwrap() {
            let expected = if p == 2 {
                6
            } else if t3(p) {
                4
            } else if t4(p) {
                5
            } else {
                let i = usize::from(kronecker(-3, p as i64) < 0);
                let j = usize::from(kronecker(-1, p as i64) < 0);
                2 * i + j
            };
            let hit: Vec<usize> = (0..w4.len())
                .filter(|&k| w4[k].sig().member(p, space.universe()))
                .collect();
            assert_eq!(hit, vec![expected], "prime {p}");
        }
    }

    #[test]
    fn levels_partition_exactly() {
        for space in [strict(), compat()] {
            for level in space.levels() {
                let blocks = level.block_sets();
                for i in 0..blocks.len() {
                    for j in i + 1..blocks.len() {
                        assert!(
                            blocks[i].1.and(&blocks[j].1, space.universe()).is_empty_set(),
                            "level {} blocks {i},{j} overlap",
                            level.d
                        );
                    }
                }
                let union = blocks
                    .iter()
                    .map(|(_, s)| s.clone())
                    .reduce(|a, b| a.or(&b, space.universe()))
                    .unwrap();
                assert!(union.is_full_set(), "level {} blocks miss something", level.d);
                for p in primes_up_to(5_000).unwrap() {
                    let b = level.block_of(p);
                    let via_sets: Vec<&Block> = blocks
                        .iter()
                        .filter(|(_, s)| s.member(p, space.universe()))
                        .map(|(b, _)| b)
                        .collect();
                    assert_eq!(via_sets, vec![&b], "level {} prime {p}", level.d);
                }
            }
        }
    }

    #[test]
    fn cells_cover_disjointly_and_refine() {
        let space = strict();
        assert_eq!(space.cells(1).unwrap().len(), 1);
        assert!(space.cells(1).unwrap()[0].sig().is_full_set());

        let mut previous: Option<Vec<Cell>> = None;
        for d in [3u64, 4, 5, 7, 8] {
            let cells = space.cells(d).unwrap();
            let union = cells
                .iter()
                .map(|c| c.sig().clone())
                .reduce(|a, b| a.or(&b, space.universe()))
                .unwrap();
            assert!(union.is_full_set(), "cells at {d} miss something");
            let total: usize = cells.iter().map(|c| c.sig().count_cells()).sum();
            assert_eq!(total, 1 << space.universe().rank(), "cells at {d} overlap");
            for key in space.universe().ramified_primes() {
                let owners =
                    cells.iter().filter(|c| c.sig().exceptions()[&key]).count();
                assert_eq!(owners, 1, "prime {key} at level {d}");
            }
            if let Some(prev) = previous {
                for parent in &prev {
                    let refined = cells
                        .iter()
                        .filter(|c| c.blocks[..parent.blocks.len()] == parent.blocks[..])
                        .map(|c| c.sig().clone())
                        .reduce(|a, b| a.or(&b, space.universe()));
                    let refined = refined.expect("every parent cell persists");
                    assert!(
                        refined.minus(parent.sig(), space.universe()).is_empty_set()
                            && parent.sig().minus(&refined, space.universe()).is_empty_set(),
                        "refinement broke a cell at {d}"
                    );
                }
            }
            previous = Some(cells);
        }
    }

    #[test]
    fn delta_frozen_values() {
        let space = strict();
        let d = |x, y| space.delta(x, y).unwrap();
        assert_eq!(d(7, 7).literal, DeltaValue::Zero);
        assert_eq!(d(2, 3).literal, DeltaValue::Exact { n: 2 });
        assert_eq!(d(2, 3).variant, DeltaValue::Exact { n: 1 });
        assert_eq!(d(11, 19).literal, DeltaValue::Exact { n: 3 });
        assert_eq!(d(11, 19).variant, DeltaValue::Exact { n: 3 });
        assert_eq!(d(2, 5).literal, DeltaValue::Exact { n: 4 });
        assert_eq!(d(5, 17).literal, DeltaValue::Exact { n: 7 });
        assert_eq!(d(5, 17).trace.len(), 5);
        assert_eq!(d(2, 3).literal.to_string(), "1/2");
        assert_eq!(d(2, 3).variant.to_string(), "1");

        let compat = compat();
        assert_eq!(compat.delta(5, 11).unwrap().literal, DeltaValue::Exact { n: 3 });
        assert_eq!(compat.delta(13, 19).unwrap().literal, DeltaValue::Exact { n: 3 });
        assert_eq!(compat.delta(2, 7).unwrap().literal, DeltaValue::Exact { n: 2 });

        assert!(space.delta(4, 5).is_err());
        assert!(space.delta(3, 1_000_003).is_err());
    }

    #[test]
    fn delta_matrix_is_symmetric_ultrametric_with_csv() {
        let space = strict();
        let m = space.delta_matrix(&[2, 3, 5]).unwrap();
        assert!(m.ultrametric_violations.is_empty());
        for i in 0..3 {
            assert_eq!(m.entries[i][i].literal, DeltaValue::Zero);
            for j in 0..3 {
                assert_eq!(m.entries[i][j].literal, m.entries[j][i].literal);
            }
        }
        assert_eq!(
            m.to_csv(),
            "delta,2,3,5\n2,0,1/2,1/4\n3,1/2,0,1/2\n5,1/4,1/2,0\n"
        );

        // An interval entry gets quoted.
        let wide = space.delta_matrix(&[5, 17]).unwrap();
        assert_eq!(wide.entries[0][1].literal, DeltaValue::Exact { n: 7 });
        let far = MetricSpace::new(MetricConfig { d_max: 7, ..MetricConfig::default() })
            .unwrap()
            .delta_matrix(&[5, 17])
            .unwrap();
        assert_eq!(far.entries[0][1].literal, DeltaValue::AtMost { d: 7 });
        assert!(far.to_csv().contains("\"(0,1/7]\""));
    }

    #[test]
    fn comparison_report_scores_the_reference_pairs() {
        let space = compat();
        let report = space.comparison_report().unwrap();
        assert_eq!(report.len(), 28);
        let agrees: Vec<(u64, u64)> =
            report.iter().filter(|r| r.agrees).map(|r| r.pair).collect();
        let disagrees: Vec<(u64, u64)> =
            report.iter().filter(|r| !r.agrees).map(|r| r.pair).collect();
        assert_eq!(
            disagrees,
            vec![
                (2, 5),
                (2, 7),
                (2, 11),
                (2, 13),
                (2, 17),
                (2, 19),
                (3, 7),
                (7, 13),
                (7, 19),
                (11, 17)
            ]
        );
        assert_eq!(agrees.len(), 18);
        for r in &report {
            assert!(!r.levels.is_empty());
            let last = r.levels.last().unwrap();
            match r.computed_value.as_str() {
                "(0,1/4]" => assert!(last.same_cell),
                _ => assert!(!last.same_cell),
            }
        }
        let pair_5_11 = report.iter().find(|r| r.pair == (5, 11)).unwrap();
        assert_eq!(pair_5_11.reference_value, "1/3");
        assert_eq!(pair_5_11.computed_value, "1/3");
        let pair_5_17 = report.iter().find(|r| r.pair == (5, 17)).unwrap();
        assert_eq!(pair_5_17.computed_value, "(0,1/4]");
        assert!(pair_5_17.agrees);
        let pair_2_19 = report.iter().find(|r| r.pair == (2, 19)).unwrap();
        assert_eq!(pair_2_19.computed_value, "1/2");
        assert_eq!(pair_2_19.computed_variant, "1");
        assert!(!pair_2_19.agrees);
    }

    #[test]
    fn complexity_search_matches_examples() {
        let space = strict();
        let set = FinPresSet::from_clause(vec![quad(-1, -1), quad(5, -1)]);
        let c = space.presentation_complexity(&set).unwrap();
        assert_eq!((c.max_abs_disc, c.clause_width), (5, 2));
        assert!(c.bound_only && c.width_within_bound);

        let c = space.presentation_complexity(&FinPresSet::full()).unwrap();
        assert_eq!((c.max_abs_disc, c.clause_width), (0, 0));
        assert!(!c.bound_only && c.width_within_bound);

        let c = space
            .presentation_complexity(&FinPresSet::from_clause(vec![quad(-3, 1)]))
            .unwrap();
        assert_eq!((c.max_abs_disc, c.clause_width), (3, 1));

        // Signs of -3 and -1 disagreeing: realizable at cap 4 with width 2;
        // a width cap of 1 is never met by the clause search, which reports
        // the smallest expressible cap with the flag unset.
        let xor = FinPresSet::new(
            vec![vec![quad(-3, 1), quad(-1, -1)], vec![quad(-3, -1), quad(-1, 1)]],
            BTreeSet::new(),
            BTreeSet::new(),
        )
        .unwrap();
        let c = space.presentation_complexity(&xor).unwrap();
        assert_eq!((c.max_abs_disc, c.clause_width), (4, 2));
        let narrow = MetricSpace::new(MetricConfig {
            search_clause_width: 1,
            ..MetricConfig::default()
        })
        .unwrap();
        let c = narrow.presentation_complexity(&xor).unwrap();
        assert_eq!((c.max_abs_disc, c.clause_width), (4, 2));
        assert!(!c.width_within_bound);
    }

    #[test]
    fn config_validation_catches_bad_bounds() {
        assert!(MetricConfig { d_max: 0, ..MetricConfig::default() }.validate().is_err());
        assert!(MetricConfig { d_max: 25, ..MetricConfig::default() }.validate().is_err());
        let too_wide = MetricConfig { d_max: 20, search_disc_bound: 60, ..MetricConfig::default() };
        assert!(matches!(MetricSpace::new(too_wide), Err(Error::BadConfig(_))));
    }
}
