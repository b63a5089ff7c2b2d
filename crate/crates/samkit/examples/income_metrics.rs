//! Distribution statistics over the nine household groups of the balanced
//! micro table: income shares, between-group Gini, and the ethnic and
//! urban/rural disparity ratios. Population weights are equal here (the
//! tables carry none), so per-capita means are per-group means.

use samkit::account::{AccountCategory, TagFilter};
use samkit::malaysia;
use samkit::metrics::{disparity_ratio, gini_grouped, income_shares, GroupIncome};

fn main() {
    let (sam, _) = malaysia::balanced_micro_sam();
    let registry = sam.registry();

    let groups: Vec<GroupIncome> = registry
        .of_category(AccountCategory::Household)
        .iter()
        .map(|h| GroupIncome::new(h.id.clone(), sam.row_total(&h.id).unwrap(), 1.0))
        .collect();

    println!("{:<20} {:>12} {:>8}", "group", "income", "share");
    for (id, share) in income_shares(&groups).expect("shares") {
        let income = groups.iter().find(|g| g.account == id).unwrap().income;
        println!("{:<20} {:>12.1} {:>8.4}", id.as_str(), income, share);
    }

    let gini = gini_grouped(&groups).expect("gini");
    println!("\nbetween-group gini (equal weights): {gini:.4}");
    println!("note: with equal weights this reflects group totals, not per-capita living standards");

    let accounts: Vec<_> = registry.accounts().to_vec();
    let pairs = [
        ("chinese vs malay", "ethnicity=chinese", "ethnicity=malay"),
        ("indian vs malay", "ethnicity=indian", "ethnicity=malay"),
        ("urban vs rural", "region=urban", "region=rural"),
    ];
    println!();
    for (label, num, den) in pairs {
        let ratio = disparity_ratio(
            &accounts,
            &groups,
            &TagFilter::parse(num).unwrap(),
            &TagFilter::parse(den).unwrap(),
        )
        .expect("ratio");
        println!("disparity {label}: {ratio:.3}");
    }
}
