//! Exact arithmetic for sets of rational primes cut out by splitting
//! conditions in finite Galois extensions.
//!
//! The crate has three layers. [`group`] and [`arith`] provide the raw
//! material: finite groups as validated Cayley tables, and quadratic or
//! cyclotomic splitting data for concrete primes via Kronecker symbols.
//! [`cset`] works inside one fixed Galois group and computes with classes of
//! Frobenius elements across a lattice of named fields: lifting, intersection
//! at a compositum, density, containment up to finitely many exceptions.
//! [`topology`] and [`metric`] sit on top and treat the splitting conditions
//! themselves as a basis of clopen sets: finite presentations with explicit
//! exception lists, certified closure checks, separation of primes, and an
//! ultrametric measuring how deep two primes agree.
//!
//! Everything is exact. Densities are rationals, set algebra runs on finite
//! signature tables plus explicit finite exception sets, and every numeric
//! claim in the API is either a theorem of the finite data or is reported as
//! uncertified.
//!
//! The `examples/` directory is the front door: each example is a runnable
//! walkthrough of one capability. A thin `cebotarev` binary exposes the same
//! operations as subcommands printing JSON.

pub mod arith;
pub mod cli;
pub mod cset;
pub mod error;
pub mod group;
pub mod metric;
pub mod topology;

pub use arith::{
    exceptional_primes, frobenius_cyclotomic, frobenius_quad, kronecker, primes_up_to,
    sieve_stats, CycloClass, FrobeniusSymbol, MultiQuadContext, QuadField, Signature,
};
pub use cset::{CebClassSet, ContextSpec, GaloisContext};
pub use error::{Error, Result};
pub use group::{build_group, ConjClass, FiniteGroup, GroupSpec, Quotient, Subgroup};
pub use metric::{
    fields_with_abs_disc, Block, Cell, ComplexityBound, DeltaMatrix, DeltaResult, DeltaValue,
    LevelData, LevelEvidence, LevelTrace, MetricConfig, MetricSpace, PairComparison,
};
pub use topology::{
    closure_over_approx, refine_partition, same_set, separate_primes, set_complement,
    set_difference, set_intersection, set_union, Atom, ClopenCertificate, FinPresSet, Separation,
    SigSet,
};
