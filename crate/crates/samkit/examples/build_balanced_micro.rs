//! Completes the partial 51-account transcription into an analysis-ready
//! balanced micro SAM and writes it to data/malaysia_micro_2000_balanced.csv.
//!
//! The pipeline: margins from the macro control totals and the observed
//! micro row totals, a structure-respecting proportional seed for the
//! illegible regions, trusted cells on top, then RAS with the two negative
//! capital/ROW cells frozen. Deterministic end to end.

use samkit::aggregate::UnitConversion;
use samkit::ingest;
use samkit::malaysia;

fn main() {
    let partial = malaysia::micro_partial_sam();
    let macro_sam = malaysia::macro_sam();
    let mapping = malaysia::micro_to_macro_mapping();

    let (balanced, outcome) =
        malaysia::build_balanced_micro(&partial, &macro_sam, &mapping).expect("pipeline runs");

    println!(
        "RAS: converged={} iterations={} final_residual={:.3e} (RM million)",
        outcome.converged, outcome.iterations, outcome.final_residual
    );

    // How well the completed table reproduces the macro control cells.
    let discrepancies = samkit::aggregate::control_total_check(
        &balanced,
        &macro_sam,
        &mapping,
        UnitConversion::Factor(0.001),
        0.5, // RM billion
    )
    .expect("control check runs");
    println!(
        "control cells off by more than 0.5 RM billion: {}",
        discrepancies.len()
    );
    for d in discrepancies.iter().take(8) {
        println!(
            "  {} <- {}: aggregated {:.3} vs control {:.3}",
            d.row, d.col, d.aggregated, d.control
        );
    }

    let out = concat!(env!("CARGO_MANIFEST_DIR"), "/data/malaysia_micro_2000_balanced.csv");
    std::fs::write(out, ingest::write_sam(&balanced)).expect("write balanced table");
    println!("wrote {out}");
}
