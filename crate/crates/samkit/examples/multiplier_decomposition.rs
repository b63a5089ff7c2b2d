//! Average expenditure propensities, the fixed-price multiplier matrix and
//! its transfer / open-loop / closed-loop decomposition on the balanced
//! Malaysia micro table.

use samkit::malaysia;
use samkit::multiplier::{analyse, Partition};

fn main() {
    let (sam, _) = malaysia::balanced_micro_sam();
    let partition = Partition::default_for(sam.registry(), true);
    let result = analyse(&sam, &partition, 1.0, true).expect("analysis runs");

    let n = result.propensities.order.len();
    println!(
        "endogenous accounts: {n} (activities {}, factors {}, institutions {})",
        result.propensities.blocks[0], result.propensities.blocks[1], result.propensities.blocks[2]
    );
    println!(
        "condition estimate of I - A: {:.2}",
        result.multiplier.condition_estimate
    );
    if let Some(rho) = result.multiplier.spectral_radius {
        println!("spectral radius estimate: {rho:.6}");
    }

    // Output multipliers: column sums of Ma over the activity block say how
    // much total endogenous income one unit of demand for each sector pulls.
    println!("\n{:<20} {:>9} {:>9}", "sector", "own mult", "leakage");
    let ma = &result.multiplier.matrix;
    for (j, id) in result.propensities.order.iter().take(18).enumerate() {
        let column_sum: f64 = (0..n).map(|i| ma[(i, j)]).sum();
        println!(
            "{:<20} {:>9.3} {:>9.3}",
            id.as_str(),
            column_sum,
            result.leakages[j]
        );
    }

    let d = result.decomposition.as_ref().expect("requested");
    let product = d.product();
    let max_gap = (product - ma)
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    println!("\ndecomposition identity |M3 M2 M1 - Ma| max: {max_gap:.2e}");
}
