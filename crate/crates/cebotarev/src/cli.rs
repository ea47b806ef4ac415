//! Command-line front end. Every subcommand produces one JSON document on
//! stdout: a `CommandResult` envelope on success, a structured error object
//! on failure. Output is byte-identical across runs for identical inputs
//! and configuration; timing goes to stderr only.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::{
    frobenius_cyclotomic, frobenius_quad, is_prime, primes_up_to, ratio_string, sieve_stats,
    CycloClass, FrobeniusSymbol, MultiQuadContext, QuadField, Signature,
};
use crate::cset::{
    almost_equal, almost_subset, bauer_subset, density, is_disjoint, make_cset, CebClassSet,
    ContextSpec, GaloisContext,
};
use crate::error::{Error, Result};
use crate::group::{build_group, GroupSpec};
use crate::metric::{MetricConfig, MetricSpace};
use crate::topology::{
    closure_over_approx, refine_partition, separate_primes, set_complement, Atom, FinPresSet,
};

/// One executed command: the argv echo, the effective configuration after
/// precedence resolution, and the subcommand's JSON payload. `runtime_ms`
/// is deliberately excluded from serialization so stdout stays reproducible.
#[derive(Debug, Serialize)]
pub struct CommandResult {
    pub command: String,
    pub config: MetricConfig,
    pub payload: Value,
    pub status: i32,
    #[serde(skip)]
    pub runtime_ms: u128,
}

#[derive(Parser)]
#[command(name = "cebotarev", version, no_binary_name = true)]
#[command(about = "Splitting sets of primes: groups, densities, topology, and the level metric")]
struct Cli {
    /// JSON config file; flags override its entries.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Depth for empirical prime scans.
    #[arg(long = "sieve-bound", global = true, value_name = "N")]
    sieve_bound: Option<u64>,
    /// Deepest level used by the distance walk.
    #[arg(long = "dmax", global = true, value_name = "D")]
    dmax: Option<u64>,
    /// Largest absolute discriminant the neighbourhood search may use.
    #[arg(long = "disc-bound", global = true, value_name = "N")]
    disc_bound: Option<u64>,
    /// Widest clause accepted before the complexity search falls back.
    #[arg(long = "clause-width", global = true, value_name = "W")]
    clause_width: Option<usize>,
    /// Pin the level 3 and 4 neighbourhoods to their published shapes.
    #[arg(long, global = true)]
    compat: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inspect a finite group loaded from a JSON file.
    Group {
        #[command(subcommand)]
        cmd: GroupCmd,
    },
    /// Operations on classwise sets over a Galois context file.
    Cset {
        #[command(subcommand)]
        cmd: CsetCmd,
    },
    /// Splitting symbol of a prime in one quadratic or cyclotomic field.
    Frobenius {
        p: u64,
        /// Radicand of a quadratic field.
        #[arg(long, value_name = "A", allow_hyphen_values = true)]
        quad: Option<i64>,
        /// Conductor of a cyclotomic field.
        #[arg(long, value_name = "N")]
        conductor: Option<u64>,
    },
    /// Count and list primes satisfying a splitting predicate.
    Sieve {
        /// Boolean combination of quad(a)=+1|-1 and cyclo(n)=r atoms
        /// using ! & | and parentheses.
        #[arg(long)]
        pred: String,
        /// Scan depth; defaults to the configured sieve bound.
        #[arg(long)]
        bound: Option<u64>,
        /// Largest number of members echoed back.
        #[arg(long, default_value_t = 100)]
        limit: usize,
    },
    /// Membership, complements, closures, and separation for presented sets.
    Topology {
        #[command(subcommand)]
        cmd: TopologyCmd,
    },
    /// Level partitions and the prime distance.
    Metric {
        #[command(subcommand)]
        cmd: MetricCmd,
    },
    /// Write a schema-versioned report file.
    Report {
        #[arg(value_enum)]
        kind: ReportKind,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Radicands for the density audit, comma separated.
        #[arg(long, value_name = "a,b,...", allow_hyphen_values = true)]
        universe: Option<String>,
    },
}

#[derive(Subcommand)]
enum GroupCmd {
    /// Order, center, abelianness, and conjugacy classes.
    Info {
        #[arg(long, value_name = "PATH")]
        group: PathBuf,
    },
}

#[derive(Subcommand)]
enum CsetCmd {
    /// Classes and density of the set picked by one element at one level.
    Show {
        #[arg(long, value_name = "PATH")]
        context: PathBuf,
        #[arg(long)]
        level: String,
        /// Named element from the context file, or a numeric element index.
        #[arg(long = "class-of", value_name = "ELEM")]
        class_of: String,
    },
    /// Natural density of the set.
    Density {
        #[arg(long, value_name = "PATH")]
        context: PathBuf,
        #[arg(long)]
        level: String,
        #[arg(long = "class-of", value_name = "ELEM")]
        class_of: String,
    },
    /// Inclusion up to finitely many primes.
    Subset {
        #[arg(long, value_name = "PATH")]
        context: PathBuf,
        #[arg(long = "level-a")]
        level_a: String,
        #[arg(long = "class-a", value_name = "ELEM")]
        class_a: String,
        #[arg(long = "level-b")]
        level_b: String,
        #[arg(long = "class-b", value_name = "ELEM")]
        class_b: String,
    },
    /// Equality up to finitely many primes.
    Equal {
        #[arg(long, value_name = "PATH")]
        context: PathBuf,
        #[arg(long = "level-a")]
        level_a: String,
        #[arg(long = "class-a", value_name = "ELEM")]
        class_a: String,
        #[arg(long = "level-b")]
        level_b: String,
        #[arg(long = "class-b", value_name = "ELEM")]
        class_b: String,
    },
    /// Emptiness of the intersection.
    Disjoint {
        #[arg(long, value_name = "PATH")]
        context: PathBuf,
        #[arg(long = "level-a")]
        level_a: String,
        #[arg(long = "class-a", value_name = "ELEM")]
        class_a: String,
        #[arg(long = "level-b")]
        level_b: String,
        #[arg(long = "class-b", value_name = "ELEM")]
        class_b: String,
    },
    /// The abelian inclusion criterion, where its precondition holds.
    BauerSubset {
        #[arg(long, value_name = "PATH")]
        context: PathBuf,
        #[arg(long = "level-a")]
        level_a: String,
        #[arg(long = "class-a", value_name = "ELEM")]
        class_a: String,
        #[arg(long = "level-b")]
        level_b: String,
        #[arg(long = "class-b", value_name = "ELEM")]
        class_b: String,
    },
}

#[derive(Subcommand)]
enum TopologyCmd {
    /// Membership of one prime, strong and weak.
    Member {
        p: u64,
        #[arg(long, value_name = "PATH")]
        set: PathBuf,
    },
    /// Complement within the quadratic universe of the presentation.
    Complement {
        #[arg(long, value_name = "PATH")]
        set: PathBuf,
        /// Extra radicands joined into the universe, comma separated.
        #[arg(long, value_name = "a,b,...", allow_hyphen_values = true)]
        universe: Option<String>,
    },
    /// Closedness certificate from the ramified over-approximation.
    Closure {
        #[arg(long, value_name = "PATH")]
        set: PathBuf,
    },
    /// Split a covering family into disjoint certified pieces.
    Refine {
        /// JSON file holding an array of presentations.
        #[arg(long, value_name = "PATH")]
        cover: PathBuf,
    },
    /// Disjoint certified clopen neighbourhoods around two primes.
    Separate { p1: u64, p2: u64 },
}

#[derive(Subcommand)]
enum MetricCmd {
    /// Distance between two primes with the per-level trace.
    Delta { x: u64, y: u64 },
    /// Distance matrix over a prime list or a bound.
    Matrix {
        /// Comma-separated primes, or a single integer bound.
        #[arg(long, value_name = "list|bound")]
        primes: String,
        /// Also write the matrix as CSV to this path.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// The cells of the partition at one level.
    Partition { d: u64 },
    /// Pair comparison against the reference classification.
    Report,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportKind {
    /// Full pair comparison in pinned-neighbourhood mode.
    CompatComparison,
    /// Only the disagreeing pairs of the comparison.
    Discrepancy,
    /// Empirical signature densities against the uniform prediction.
    DensityAudit,
}

impl ReportKind {
    fn schema(self) -> &'static str {
        match self {
            ReportKind::CompatComparison => "cebotarev.compat-comparison.v1",
            ReportKind::Discrepancy => "cebotarev.discrepancy.v1",
            ReportKind::DensityAudit => "cebotarev.density-audit.v1",
        }
    }
}

/// Parses argv (without the binary name), resolves the configuration, and
/// runs the subcommand. Help and version requests come back as successful
/// results with the rendered text in the payload.
pub fn execute(argv: &[String]) -> Result<CommandResult> {
    let start = Instant::now();
    let command = argv.join(" ");
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return Ok(CommandResult {
                command,
                config: MetricConfig::default(),
                payload: json!({ "help": e.to_string() }),
                status: 0,
                runtime_ms: start.elapsed().as_millis(),
            });
        }
        Err(e) => return Err(Error::BadCommand(e.to_string())),
    };
    let config = resolve_config(&cli)?;
    let payload = dispatch(&cli.cmd, &config)?;
    Ok(CommandResult {
        command,
        config,
        payload,
        status: 0,
        runtime_ms: start.elapsed().as_millis(),
    })
}

/// Executes and prints: envelope or error object to stdout, timing to
/// stderr. Returns the process exit code.
pub fn run(args: impl IntoIterator<Item = String>) -> i32 {
    let argv: Vec<String> = args.into_iter().collect();
    match execute(&argv) {
        Ok(result) => {
            println!("{}", serde_json::to_string_pretty(&result).expect("result serializes"));
            eprintln!("# finished in {} ms", result.runtime_ms);
            result.status
        }
        Err(e) => {
            let status = e.exit_code();
            let kind = match status {
                3 => "search-exhausted",
                4 => "internal",
                _ => "input",
            };
            let doc = json!({
                "command": argv.join(" "),
                "error": { "kind": kind, "message": e.to_string() },
                "status": status,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("error serializes"));
            status
        }
    }
}

/// Precedence: flags over config file over defaults.
fn resolve_config(cli: &Cli) -> Result<MetricConfig> {
    let mut cfg = match &cli.config {
        Some(path) => read_json::<MetricConfig>(path)?,
        None => MetricConfig::default(),
    };
    if let Some(b) = cli.sieve_bound {
        cfg.sieve_bound = b;
    }
    if let Some(d) = cli.dmax {
        cfg.d_max = d;
    }
    if let Some(b) = cli.disc_bound {
        cfg.search_disc_bound = b;
    }
    if let Some(w) = cli.clause_width {
        cfg.search_clause_width = w;
    }
    if cli.compat {
        cfg.compat = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cmd: &Cmd, config: &MetricConfig) -> Result<Value> {
    match cmd {
        Cmd::Group { cmd } => group_cmd(cmd),
        Cmd::Cset { cmd } => cset_cmd(cmd),
        Cmd::Frobenius { p, quad, conductor } => frobenius_cmd(*p, *quad, *conductor),
        Cmd::Sieve { pred, bound, limit } => {
            sieve_cmd(pred, bound.unwrap_or(config.sieve_bound), *limit)
        }
        Cmd::Topology { cmd } => topology_cmd(cmd),
        Cmd::Metric { cmd } => metric_cmd(cmd, config),
        Cmd::Report { kind, out, universe } => {
            report_cmd(*kind, out, universe.as_deref(), config)
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn group_cmd(cmd: &GroupCmd) -> Result<Value> {
    let GroupCmd::Info { group } = cmd;
    let spec: GroupSpec = read_json(group)?;
    let g = build_group(&spec)?;
    let classes: Vec<Value> = g
        .conjugacy_classes()
        .iter()
        .map(|c| {
            json!({
                "representative": c.representative,
                "size": c.size(),
                "members": c.members,
            })
        })
        .collect();
    Ok(json!({
        "order": g.order(),
        "abelian": g.is_abelian(),
        "exponent": g.exponent(),
        "center": g.center().members(),
        "class_count": classes.len(),
        "conjugacy_classes": classes,
    }))
}

fn load_context(path: &Path) -> Result<(ContextSpec, GaloisContext)> {
    let spec: ContextSpec = read_json(path)?;
    let ctx = GaloisContext::from_spec(&spec)?;
    Ok((spec, ctx))
}

/// Resolves a `--class-of` argument to an ambient element: a name from the
/// context file's `elements` map, otherwise a numeric element index.
fn resolve_element(spec: &ContextSpec, ctx: &GaloisContext, name: &str) -> Result<usize> {
    let order = ctx.ambient().order();
    let index = match spec.elements.get(name) {
        Some(&i) => i,
        None => name.parse::<usize>().map_err(|_| {
            Error::BadCommand(format!(
                "unknown element {name:?}: not a named element of the context and not an index"
            ))
        })?,
    };
    if index >= order {
        return Err(Error::ElementRange { index, order });
    }
    Ok(index)
}

/// The set of the class of an ambient element, viewed at `level`.
fn build_set(
    spec: &ContextSpec,
    ctx: &GaloisContext,
    level: &str,
    class_of: &str,
) -> Result<CebClassSet> {
    let g = resolve_element(spec, ctx, class_of)?;
    let sigma = ctx.level(level)?.projection[g];
    make_cset(ctx, level, sigma)
}

fn cset_cmd(cmd: &CsetCmd) -> Result<Value> {
    match cmd {
        CsetCmd::Show { context, level, class_of } => {
            let (spec, ctx) = load_context(context)?;
            let s = build_set(&spec, &ctx, level, class_of)?;
            let classes: Vec<Vec<usize>> =
                s.classes(&ctx)?.iter().map(|c| c.members.clone()).collect();
            Ok(json!({
                "level": s.level(),
                "classes": classes,
                "density": ratio_string(density(&ctx, &s)?),
            }))
        }
        CsetCmd::Density { context, level, class_of } => {
            let (spec, ctx) = load_context(context)?;
            let s = build_set(&spec, &ctx, level, class_of)?;
            Ok(json!({ "density": ratio_string(density(&ctx, &s)?) }))
        }
        CsetCmd::Subset { context, level_a, class_a, level_b, class_b } => {
            let (spec, mut ctx) = load_context(context)?;
            let a = build_set(&spec, &ctx, level_a, class_a)?;
            let b = build_set(&spec, &ctx, level_b, class_b)?;
            Ok(json!({ "almost_subset": almost_subset(&mut ctx, &a, &b)? }))
        }
        CsetCmd::Equal { context, level_a, class_a, level_b, class_b } => {
            let (spec, mut ctx) = load_context(context)?;
            let a = build_set(&spec, &ctx, level_a, class_a)?;
            let b = build_set(&spec, &ctx, level_b, class_b)?;
            Ok(json!({ "almost_equal": almost_equal(&mut ctx, &a, &b)? }))
        }
        CsetCmd::Disjoint { context, level_a, class_a, level_b, class_b } => {
            let (spec, mut ctx) = load_context(context)?;
            let a = build_set(&spec, &ctx, level_a, class_a)?;
            let b = build_set(&spec, &ctx, level_b, class_b)?;
            Ok(json!({ "disjoint": is_disjoint(&mut ctx, &a, &b)? }))
        }
        CsetCmd::BauerSubset { context, level_a, class_a, level_b, class_b } => {
            let (spec, ctx) = load_context(context)?;
            let a = build_set(&spec, &ctx, level_a, class_a)?;
            let b = build_set(&spec, &ctx, level_b, class_b)?;
            Ok(json!({ "bauer_subset": bauer_subset(&ctx, &a, &b)? }))
        }
    }
}

fn check_prime(p: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::BadCommand(format!("{p} is not prime")));
    }
    Ok(())
}

fn frobenius_cmd(p: u64, quad: Option<i64>, conductor: Option<u64>) -> Result<Value> {
    check_prime(p)?;
    match (quad, conductor) {
        (Some(a), None) => {
            let field = QuadField::new(a)?;
            let name = match frobenius_quad(p, &field) {
                FrobeniusSymbol::Split => "split",
                FrobeniusSymbol::Inert => "inert",
                FrobeniusSymbol::Ramified => "ramified",
            };
            Ok(json!({ "symbol": name }))
        }
        (None, Some(n)) => match frobenius_cyclotomic(p, n)? {
            CycloClass::Ramified => Ok(json!({ "symbol": "ramified" })),
            CycloClass::Residue(r) => Ok(json!({
                "symbol": "residue",
                "residue": r,
                "conductor": n,
            })),
        },
        _ => Err(Error::BadCommand(
            "pass exactly one of --quad or --conductor".into(),
        )),
    }
}

fn sieve_cmd(pred: &str, bound: u64, limit: usize) -> Result<Value> {
    let pred = Pred::parse(pred)?;
    let stats = sieve_stats(bound, |p| pred.eval(p))?;
    let members: Vec<u64> = stats.members.iter().take(limit).copied().collect();
    Ok(json!({
        "bound": stats.bound,
        "primes_checked": stats.primes_checked,
        "count": stats.count,
        "density": ratio_string(stats.density),
        "members": members,
        "truncated": stats.count > limit,
    }))
}

fn read_presentation(path: &Path) -> Result<FinPresSet> {
    read_json(path)
}

fn parse_radicands(text: &str) -> Result<Vec<i64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| Error::BadCommand(format!("bad radicand {t:?}")))
        })
        .collect()
}

fn topology_cmd(cmd: &TopologyCmd) -> Result<Value> {
    match cmd {
        TopologyCmd::Member { p, set } => {
            check_prime(*p)?;
            let s = read_presentation(set)?;
            Ok(json!({
                "prime": p,
                "member": s.member(*p),
                "over_approx_member": s.over_approx_member(*p),
            }))
        }
        TopologyCmd::Complement { set, universe } => {
            let s = read_presentation(set)?;
            let mut rads = s.quad_radicands();
            if let Some(extra) = universe {
                for a in parse_radicands(extra)? {
                    if !rads.contains(&a) {
                        rads.push(a);
                    }
                }
            }
            let ctx = MultiQuadContext::new(&rads)?;
            let out = set_complement(&s, &ctx)?;
            let certificate = closure_over_approx(&out);
            Ok(json!({
                "universe": ctx.inputs(),
                "result": out,
                "certificate": certificate,
            }))
        }
        TopologyCmd::Closure { set } => {
            let s = read_presentation(set)?;
            let certificate = closure_over_approx(&s);
            Ok(json!({ "set": s, "certificate": certificate }))
        }
        TopologyCmd::Refine { cover } => {
            let pieces: Vec<FinPresSet> = read_json(cover)?;
            let mut rads: Vec<i64> = Vec::new();
            for s in &pieces {
                for a in s.quad_radicands() {
                    if !rads.contains(&a) {
                        rads.push(a);
                    }
                }
            }
            let ctx = MultiQuadContext::new(&rads)?;
            let refined = refine_partition(&pieces, &ctx)?;
            Ok(json!({ "universe": ctx.inputs(), "pieces": refined }))
        }
        TopologyCmd::Separate { p1, p2 } => {
            check_prime(*p1)?;
            check_prime(*p2)?;
            if p1 == p2 {
                return Err(Error::BadCommand("the primes must be distinct".into()));
            }
            Ok(serde_json::to_value(separate_primes(*p1, *p2)?)?)
        }
    }
}

/// A `--primes` argument: an explicit comma list, or a single bound.
fn parse_primes_arg(text: &str) -> Result<Vec<u64>> {
    if text.contains(',') {
        let list: Vec<u64> = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::BadCommand(format!("bad prime {t:?}")))
            })
            .collect::<Result<_>>()?;
        for &p in &list {
            check_prime(p)?;
        }
        Ok(list)
    } else {
        let bound = text
            .trim()
            .parse::<u64>()
            .map_err(|_| Error::BadCommand(format!("bad prime bound {text:?}")))?;
        primes_up_to(bound)
    }
}

fn metric_cmd(cmd: &MetricCmd, config: &MetricConfig) -> Result<Value> {
    let space = MetricSpace::new(config.clone())?;
    match cmd {
        MetricCmd::Delta { x, y } => Ok(serde_json::to_value(space.delta(*x, *y)?)?),
        MetricCmd::Matrix { primes, csv } => {
            let list = parse_primes_arg(primes)?;
            let matrix = space.delta_matrix(&list)?;
            if let Some(path) = csv {
                std::fs::write(path, matrix.to_csv())?;
            }
            Ok(json!({
                "matrix": matrix,
                "csv_written": csv.as_ref().map(|p| p.display().to_string()),
            }))
        }
        MetricCmd::Partition { d } => {
            if *d > config.d_max {
                return Err(Error::BadCommand(format!(
                    "level {d} is beyond d_max {}",
                    config.d_max
                )));
            }
            let cells = space.cells(*d)?;
            let mut rows = Vec::new();
            for cell in &cells {
                rows.push(json!({
                    "labels": space.cell_labels(cell),
                    "presentation": space.cell_presentation(cell),
                    "empty": cell.is_empty(),
                    "members_upto_50": space.cell_members_upto(cell, 50)?,
                }));
            }
            let level = space.level(*d);
            Ok(json!({
                "d": d,
                "fields": level.map(|l| l.fields.iter().map(|f| f.radicand()).collect::<Vec<_>>()),
                "ramified": level.map(|l| l.ramified.clone()),
                "search_cap": level.map(|l| l.search_cap),
                "neighbourhoods": level.map(|l| l.tilde.clone()),
                "cells": rows,
            }))
        }
        MetricCmd::Report => Ok(serde_json::to_value(space.comparison_report()?)?),
    }
}

fn report_cmd(
    kind: ReportKind,
    out: &Path,
    universe: Option<&str>,
    config: &MetricConfig,
) -> Result<Value> {
    let (data, records) = match kind {
        ReportKind::CompatComparison | ReportKind::Discrepancy => {
            let mut cfg = config.clone();
            cfg.compat = true;
            let space = MetricSpace::new(cfg)?;
            let mut report = space.comparison_report()?;
            if matches!(kind, ReportKind::Discrepancy) {
                report.retain(|row| !row.agrees);
            }
            let n = report.len();
            (serde_json::to_value(report)?, n)
        }
        ReportKind::DensityAudit => {
            let rads = match universe {
                Some(text) => parse_radicands(text)?,
                None => vec![-1, 5],
            };
            let ctx = MultiQuadContext::new(&rads)?;
            let rank = ctx.rank();
            let mut counts = vec![0u64; 1 << rank];
            let primes = primes_up_to(config.sieve_bound)?;
            let mut checked = 0u64;
            for &p in &primes {
                if let Signature::Unramified(signs) = ctx.signature(p) {
                    counts[MultiQuadContext::signature_index(&signs)] += 1;
                    checked += 1;
                }
            }
            let expected = ratio_string(Rational64::new(1, 1 << rank));
            let rows: Vec<Value> = counts
                .iter()
                .enumerate()
                .map(|(idx, &count)| {
                    let signs: Vec<&str> = (0..rank)
                        .map(|j| if idx >> j & 1 == 1 { "-" } else { "+" })
                        .collect();
                    let density = if checked == 0 {
                        "0".to_string()
                    } else {
                        ratio_string(Rational64::new(count as i64, checked as i64))
                    };
                    json!({
                        "signs": signs,
                        "count": count,
                        "density": density,
                        "expected": expected,
                    })
                })
                .collect();
            let n = rows.len();
            (
                json!({
                    "universe": ctx.inputs(),
                    "basis": ctx.basis(),
                    "bound": config.sieve_bound,
                    "primes_checked": checked,
                    "rows": rows,
                }),
                n,
            )
        }
    };
    let doc = json!({
        "schema": kind.schema(),
        "config": config,
        "data": data,
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    std::fs::write(out, text)?;
    Ok(json!({
        "written": out.display().to_string(),
        "schema": kind.schema(),
        "records": records,
    }))
}

/// Splitting predicates for the sieve: `quad(a)=+1|-1` and `cyclo(n)=r`
/// atoms combined with `!`, `&`, `|`, and parentheses.
enum Pred {
    Atom(Atom),
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
}

impl Pred {
    fn eval(&self, p: u64) -> bool {
        match self {
            Pred::Atom(a) => a.strongly_satisfied_by(p),
            Pred::Not(q) => !q.eval(p),
            Pred::And(a, b) => a.eval(p) && b.eval(p),
            Pred::Or(a, b) => a.eval(p) || b.eval(p),
        }
    }

    fn parse(src: &str) -> Result<Pred> {
        let mut parser = PredParser { src: src.as_bytes(), pos: 0 };
        let pred = parser.expr()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.fail("trailing input"));
        }
        Ok(pred)
    }
}

struct PredParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl PredParser<'_> {
    fn fail(&self, what: &str) -> Error {
        Error::BadCommand(format!("bad predicate at byte {}: {what}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos) == Some(&b' ') {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.fail(&format!("expected {:?}", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Pred> {
        let mut lhs = self.term()?;
        while self.eat(b'|') {
            lhs = Pred::Or(Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Pred> {
        let mut lhs = self.factor()?;
        while self.eat(b'&') {
            lhs = Pred::And(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Pred> {
        if self.eat(b'!') {
            return Ok(Pred::Not(Box::new(self.factor()?)));
        }
        if self.eat(b'(') {
            let inner = self.expr()?;
            self.expect(b')')?;
            return Ok(inner);
        }
        self.atom()
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_lowercase())
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn integer(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.src.get(self.pos), Some(&b'-') | Some(&b'+')) {
            self.pos += 1;
        }
        while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|t| t.parse::<i64>().ok())
            .ok_or_else(|| self.fail("expected an integer"))
    }

    fn atom(&mut self) -> Result<Pred> {
        let name = self.ident();
        match name.as_str() {
            "quad" => {
                self.expect(b'(')?;
                let a = self.integer()?;
                self.expect(b')')?;
                self.expect(b'=')?;
                let sign = match self.integer()? {
                    1 => 1i8,
                    -1 => -1i8,
                    other => return Err(self.fail(&format!("quad sign must be 1 or -1, got {other}"))),
                };
                Ok(Pred::Atom(Atom::quad(a, sign)?))
            }
            "cyclo" => {
                self.expect(b'(')?;
                let n = self.integer()?;
                self.expect(b')')?;
                self.expect(b'=')?;
                let r = self.integer()?;
                if n <= 0 || r < 0 {
                    return Err(self.fail("cyclo arguments must be nonnegative"));
                }
                Ok(Pred::Atom(Atom::cyclo(n as u64, r as u64)?))
            }
            "" => Err(self.fail("expected quad(..) or cyclo(..)")),
            other => Err(self.fail(&format!("unknown atom {other:?}"))),
        }
    }
}
