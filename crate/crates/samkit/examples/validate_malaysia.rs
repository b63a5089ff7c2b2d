//! Loads the shipped Malaysia 2000 macro table and runs the full check
//! suite: account census, balance residuals against the 0.01 RM-billion
//! tolerance, permitted-flow (structural) warnings, and sign checks.

use samkit::ingest::validate_file_set;
use samkit::malaysia;
use samkit::sam::MACRO_BALANCE_TOL;

fn main() {
    let registry = malaysia::macro_registry();
    let sam = malaysia::macro_sam();
    let report = validate_file_set(&registry, &sam, &malaysia::structural_mask(), MACRO_BALANCE_TOL);

    println!("accounts: {} (canonical macro: {})", report.census.total_accounts, report.census.canonical_macro);
    println!("unit: {}, grand total: {:.3}", sam.unit(), sam.grand_total());
    println!();
    println!("{:<22} {:>10} {:>10} {:>9}", "account", "row", "col", "residual");
    for e in &report.balance_residuals.entries {
        let flag = if e.residual.abs() > MACRO_BALANCE_TOL { "  <- beyond tolerance" } else { "" };
        println!(
            "{:<22} {:>10.3} {:>10.3} {:>9.3}{flag}",
            e.account.as_str(),
            e.row_total,
            e.col_total,
            e.residual
        );
    }
    println!();
    println!(
        "structural warnings ({}): flows outside the schematic mask",
        report.structural_violations.len()
    );
    for v in &report.structural_violations {
        println!("  {} <- {}: {}", v.row, v.col, v.value);
    }
    println!("sign violations: {}", report.sign_violations.len());

    // The household band is the headline figure of the dataset.
    let household = sam.row_total(&"households".into()).unwrap();
    println!("\ntotal household income: {household:.3} RM billion");
}
