//! Aggregates the micro tables onto the 13-account macro layout and checks
//! them against the macro control totals — the top-down construction
//! discipline: the aggregate is the control value for the disaggregation.

use samkit::aggregate::{aggregate, control_total_check, UnitConversion};
use samkit::malaysia;

fn main() {
    let macro_sam = malaysia::macro_sam();
    let mapping = malaysia::micro_to_macro_mapping();
    let to_billion = UnitConversion::Factor(0.001);

    // The raw partial transcription first: its trusted cells cover about
    // three quarters of the intermediate-use control.
    let partial = malaysia::micro_partial_sam();
    let agg = aggregate(
        &partial,
        &mapping,
        &macro_sam.registry_arc(),
        to_billion,
        "RM billion",
    )
    .expect("aggregate runs");
    let trusted_intermediates = agg.cell_by_id(&"production".into(), &"production".into()).unwrap();
    let control = macro_sam.cell_by_id(&"production".into(), &"production".into()).unwrap();
    println!("intermediate use (production <- production), RM billion:");
    println!("  control total            {control:.3}");
    println!("  trusted transcription    {trusted_intermediates:.3}");
    println!("  gap for missing columns  {:.3}", control - trusted_intermediates);

    // The completed table: every control cell within 2 RM billion.
    let (balanced, _) = malaysia::balanced_micro_sam();
    let discrepancies =
        control_total_check(&balanced, &macro_sam, &mapping, to_billion, 2.0).expect("check runs");
    println!(
        "\ncompleted table: control cells off by more than 2 RM billion: {}",
        discrepancies.len()
    );
    let all = control_total_check(&balanced, &macro_sam, &mapping, to_billion, 0.0).expect("check runs");
    let worst = all.iter().map(|d| d.difference.abs()).fold(0.0, f64::max);
    println!("worst control gap: {worst:.3} RM billion");

    // Household income control drives the balancing step.
    let hh = aggregate(
        &balanced,
        &mapping,
        &macro_sam.registry_arc(),
        to_billion,
        "RM billion",
    )
    .unwrap()
    .row_total(&"households".into())
    .unwrap();
    println!("household income: aggregated {hh:.3} vs control 188.018 RM billion");
}
