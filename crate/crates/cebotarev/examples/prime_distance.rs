//! The level metric on primes: distances with their traces, a distance
//! matrix, the cell partition at small levels, and the pair comparison
//! against the reference classification.

use cebotarev::{MetricConfig, MetricSpace, Result};

fn main() -> Result<()> {
    let space = MetricSpace::new(MetricConfig::default())?;

    // delta(2, 3): the primes part ways at the very first level, so the
    // literal reading is 1/2 and the first-level convention reads 1.
    let d = space.delta(2, 3)?;
    println!("delta(2,3): literal {}, variant {}", d.literal, d.variant);

    // A deep agreement: 5 and 17 share every block until level 8.
    let d = space.delta(5, 17)?;
    println!("delta(5,17): literal {}, split at level {:?}", d.literal, d.n_literal.map(|n| n + 1));
    for row in &d.trace {
        println!(
            "  level {:>2}: {} vs {} ({})",
            row.d,
            row.x_block,
            row.y_block,
            if row.same_cell { "same" } else { "differ" }
        );
    }

    // Matrix over the primes below 20, as CSV.
    let primes: Vec<u64> = cebotarev::arith::primes_up_to(20)?;
    let matrix = space.delta_matrix(&primes)?;
    println!("\ndistance matrix, primes below 20:");
    print!("{}", matrix.to_csv());
    println!("ultrametric violations: {:?}", matrix.ultrametric_violations);

    // The partition tables at levels 3 and 4 in pinned-neighbourhood mode.
    let compat = MetricSpace::new(MetricConfig { compat: true, ..MetricConfig::default() })?;
    for d in [3u64, 4] {
        println!("\ncells at level {d} (pinned mode):");
        for cell in compat.cells(d)? {
            let members = compat.cell_members_upto(&cell, 19)?;
            println!(
                "  {:icon$}  members <= 19: {:?}",
                compat.cell_labels(&cell).join(" & "),
                members,
                icon = 28
            );
        }
    }

    // How the computed distances compare with the reference pair values.
    let report = compat.comparison_report()?;
    let disagreements: Vec<_> = report.iter().filter(|r| !r.agrees).map(|r| r.pair).collect();
    println!(
        "\nreference comparison: {} pairs, {} disagree: {:?}",
        report.len(),
        disagreements.len(),
        disagreements
    );

    // Complexity of a neighbourhood presentation: smallest discriminant cap
    // that can express it, and the widest clause needed.
    let level = space.level(7).expect("level 7 is nonempty");
    let (alpha, tilde) = level.tilde.iter().next().expect("level 7 has a neighbourhood");
    let bound = space.presentation_complexity(tilde)?;
    println!(
        "neighbourhood of {alpha} at level 7: max |disc| {}, clause width {}",
        bound.max_abs_disc, bound.clause_width
    );
    Ok(())
}
