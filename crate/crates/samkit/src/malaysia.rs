//! The Malaysia 2000 dataset: canonical registries, the permitted-flow mask,
//! the shipped macro and partial micro transcriptions, and the deterministic
//! pipeline that completes the partial micro table into an analysis-ready
//! balanced SAM.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::account::{AccountCategory, AccountId, AccountRegistry};
use crate::aggregate::AccountMapping;
use crate::ingest;
use crate::ras::{ras_balance, RasConfig, RasError, RasOutcome};
use crate::sam::{Sam, StructuralMask};

pub const MACRO_REGISTRY_CSV: &str = include_str!("../data/malaysia_macro_registry.csv");
pub const MACRO_SAM_CSV: &str = include_str!("../data/malaysia_macro_2000.csv");
pub const MICRO_REGISTRY_CSV: &str = include_str!("../data/malaysia_micro_registry.csv");
pub const MICRO_PARTIAL_CSV: &str = include_str!("../data/malaysia_micro_2000_partial.csv");
pub const MICRO_TO_MACRO_CSV: &str = include_str!("../data/malaysia_micro_to_macro.csv");
pub const MICRO_PROVENANCE: &str = include_str!("../data/malaysia_micro_2000_provenance.txt");

pub fn macro_registry() -> Arc<AccountRegistry> {
    Arc::new(ingest::parse_registry(MACRO_REGISTRY_CSV).expect("shipped macro registry parses"))
}

pub fn micro_registry() -> Arc<AccountRegistry> {
    Arc::new(ingest::parse_registry(MICRO_REGISTRY_CSV).expect("shipped micro registry parses"))
}

/// The 13-account macro table, RM billion.
pub fn macro_sam() -> Sam {
    ingest::parse_sam(MACRO_SAM_CSV, &macro_registry()).expect("shipped macro table parses")
}

/// The partial 51-account transcription, RM million. Blank source cells are
/// zero here; see the provenance notes for what is trusted.
pub fn micro_partial_sam() -> Sam {
    ingest::parse_sam(MICRO_PARTIAL_CSV, &micro_registry()).expect("shipped micro table parses")
}

pub fn micro_to_macro_mapping() -> AccountMapping {
    let pairs = ingest::parse_mapping(MICRO_TO_MACRO_CSV).expect("shipped mapping parses");
    AccountMapping::new(pairs, &micro_registry(), &macro_registry())
        .expect("shipped mapping is total and category-consistent")
}

/// Permitted (receiver, payer) category pairs: the schematic flow structure
/// plus the inventory band the macro table adds. Factor income is routed
/// through the factor account (the placement under which the published
/// macro columns close exactly), public expenditure is funded by the public
/// current account and public investment by the public capital account.
pub fn structural_mask() -> StructuralMask {
    use AccountCategory::*;
    let mut pairs = vec![
        // Production receipts: intermediates, consumption, public current
        // purchases, public and private investment, exports, inventory.
        (ProductionSector, ProductionSector),
        (ProductionSector, Household),
        (ProductionSector, PublicCurrentExpenditure),
        (ProductionSector, PublicCapitalInvestment),
        (ProductionSector, PrivateCapital),
        (ProductionSector, RowCurrent),
        (ProductionSector, ChangesInInventory),
        // Value added.
        (FactorOfProduction, ProductionSector),
        // Household receipts: factor income, inter-household transfers,
        // distributed profits, government transfers, transfers from abroad.
        (Household, FactorOfProduction),
        (Household, Household),
        (Household, Company),
        (Household, PublicCurrentExpenditure),
        (Household, RowCurrent),
        // Company receipts.
        (Company, FactorOfProduction),
        (Company, RowCurrent),
        // Public expenditure programmes are funded from the current account,
        // investment programmes from the capital account.
        (PublicCurrentExpenditure, PublicCurrent),
        (PublicCapitalInvestment, PublicCapital),
        // Indirect taxes.
        (IndirectTax, ProductionSector),
        (IndirectTax, Household),
        (IndirectTax, Company),
        (IndirectTax, PublicCapital),
        (IndirectTax, PrivateCapital),
        // Public current receipts.
        (PublicCurrent, Household),
        (PublicCurrent, Company),
        (PublicCurrent, IndirectTax),
        (PublicCurrent, RowCurrent),
        // Public capital chain.
        (PublicCapital, PublicCurrent),
        (PublicCapital, PrivateCapital),
        (PublicCapital, RowCapital),
        // Private capital sources.
        (PrivateCapital, Household),
        (PrivateCapital, Company),
        (PrivateCapital, RowCapital),
        // ROW capital.
        (RowCapital, Company),
        (RowCapital, RowCurrent),
        // Inventory build-up financed by the capital accounts.
        (ChangesInInventory, PublicCapital),
        (ChangesInInventory, PrivateCapital),
    ];
    // Import and transfer leakages: ROW current receives from everyone.
    for category in AccountCategory::ALL {
        pairs.push((AccountCategory::RowCurrent, category));
    }
    StructuralMask::new(pairs)
}

/// Default balancing tolerance for the completed micro table, RM million.
/// The source anchors themselves disagree at the 0.1 RM-million level, so
/// demanding more than this is noise-chasing.
pub const MICRO_RAS_TOLERANCE: f64 = 1e-3;

/// Row totals printed in the source appendix, RM million. These anchor the
/// margin weights for accounts whose rows are not fully legible.
const OBSERVED_ROW_TOTALS: &[(&str, f64)] = &[
    ("hh_rural_indian", 2808.48),
    ("hh_rural_others", 414.63),
    ("hh_urban_malay", 52140.76),
    ("hh_urban_chinese", 64608.17),
    ("hh_urban_indian", 13304.95),
    ("hh_urban_others", 1138.47),
    ("hh_noncitizen", 10213.13),
    ("pubexp_agriculture", 1323.00),
    ("pubexp_education", 11335.99),
    ("pubexp_health", 4198.41),
    ("pubexp_administration", 5055.72),
    ("pubexp_order_defence", 8504.26),
    ("pubexp_other_admin", 4444.50),
    ("pubexp_household_transfers", 7861.00),
    ("pubinv_agriculture", 376.77),
    ("pubinv_industry", 1679.79),
    ("pubinv_trade", 626.43),
    ("pubinv_transport", 847.59),
    ("pubinv_education_health", 3283.20),
    ("pubinv_administration", 3010.17),
    ("pubinv_others", 772.92),
    ("tax_domestic", 14650.40),
    ("tax_imports", 5826.82),
];

/// Production columns whose 51 rows are all legible, so their computed
/// column sums can serve as gross-output observations.
const COMPLETE_PRODUCTION_COLUMNS: &[&str] = &[
    "agriculture",
    "forestry",
    "fishing",
    "mining",
    "manufacturing",
    "utilities",
    "education",
    "health",
    "private_services",
    "general_admin",
    "public_order",
    "other_public_admin",
];

/// Households with no legible row total; they split the household band
/// remainder equally.
const UNOBSERVED_HOUSEHOLDS: &[&str] = &["hh_rural_malay", "hh_rural_chinese"];

/// Where each programme's spending lands in the production account, as
/// (programme, [(sector, weight)]).
///
/// Current expenditure buys the services of the matching sector (the
/// legible cells show exactly this: administration, order & defence and
/// other-administration spending each land on their own sector in full).
/// Capital investment is gross fixed capital formation and buys structures
/// and equipment, i.e. construction and manufacturing — routing it to the
/// administered service sectors is infeasible against their observed gross
/// outputs. Agricultural investment is the exception: drainage, irrigation
/// and rural development works are demands on the agricultural sector
/// itself.
const PROGRAMME_SECTORS: &[(&str, &[(&str, f64)])] = &[
    ("pubexp_agriculture", &[("agriculture", 1.0)]),
    ("pubexp_education", &[("education", 1.0)]),
    ("pubexp_health", &[("health", 1.0)]),
    ("pubexp_administration", &[("general_admin", 1.0)]),
    ("pubexp_order_defence", &[("public_order", 1.0)]),
    ("pubexp_other_admin", &[("other_public_admin", 1.0)]),
    ("pubinv_agriculture", &[("agriculture", 1.0)]),
    ("pubinv_industry", &[("construction", 0.6), ("manufacturing", 0.4)]),
    ("pubinv_trade", &[("construction", 0.6), ("manufacturing", 0.4)]),
    ("pubinv_transport", &[("construction", 0.6), ("manufacturing", 0.4)]),
    ("pubinv_education_health", &[("construction", 0.6), ("manufacturing", 0.4)]),
    ("pubinv_administration", &[("construction", 0.6), ("manufacturing", 0.4)]),
    ("pubinv_others", &[("construction", 0.6), ("manufacturing", 0.4)]),
];

/// Sectors that sell (nearly) nothing outside government purchases and
/// intermediates in the legible data. Seeding consumption, investment,
/// inventory or export demand for them would fight the hard single-cell
/// programme columns, so their rows take no proportional fill in those bands.
/// Public order's entire output is pinned by its programme plus one
/// intermediate cell, so it takes no proportional fill at all.
const GOV_SERVICE_ROWS: &[&str] = &["general_admin", "public_order", "other_public_admin"];
const FULLY_PINNED_ROWS: &[&str] = &["public_order"];

/// Cells that keep their printed (negative) values during balancing.
const FROZEN_CELLS: &[(&str, &str)] = &[
    ("private_capital", "row_capital"),
    ("row_capital", "row_current"),
];

/// Trusted transcription regions of the partial table, as
/// (row ids, column ids) rectangles. Cells inside them override the
/// proportional seed during completion.
fn trusted_regions(registry: &AccountRegistry) -> Vec<(Vec<usize>, Vec<usize>)> {
    let ids: Vec<&str> = registry.iter().map(|a| a.id.as_str()).collect();
    let pos = |id: &str| ids.iter().position(|x| *x == id).expect("known id");
    let range = |from: &str, to: &str| -> Vec<usize> { (pos(from)..=pos(to)).collect() };
    let all: Vec<usize> = (0..registry.len()).collect();
    vec![
        (all.clone(), range("agriculture", "utilities")),
        (all, range("education", "other_public_admin")),
        (
            range("agriculture", "trade"),
            range("factor", "hh_urban_chinese"),
        ),
        (
            range("education", "row_capital"),
            range("pubexp_administration", "pubinv_trade"),
        ),
        (
            range("hh_rural_indian", "row_capital"),
            range("public_capital", "row_capital"),
        ),
    ]
}

/// Per-account margins (equal row and column targets) for the completed
/// micro table, RM million, in micro registry order.
///
/// Anchors, in order of preference: observed source row totals (programme,
/// tax and most household accounts, used exactly — the single-cell
/// programme columns make any rescaling infeasible); computed column sums
/// for the twelve fully legible production columns; macro band controls
/// for everything else, with unobserved members splitting the band
/// remainder equally.
pub fn micro_margins(partial: &Sam, macro_sam: &Sam, mapping: &AccountMapping) -> Vec<f64> {
    let micro_reg = partial.registry();
    let macro_reg = macro_sam.registry();
    let observed: BTreeMap<&str, f64> = OBSERVED_ROW_TOTALS.iter().copied().collect();

    let complete_cols: Vec<usize> = COMPLETE_PRODUCTION_COLUMNS
        .iter()
        .map(|id| micro_reg.position(&AccountId::new(*id)).expect("known id"))
        .collect();
    let production_total = 1000.0
        * 0.5
        * (macro_sam.row_total(&AccountId::new("production")).unwrap()
            + macro_sam.col_total(&AccountId::new("production")).unwrap());
    let known_output: f64 = complete_cols.iter().map(|&c| partial.col_total_at(c)).sum();
    let production_count = micro_reg.of_category(AccountCategory::ProductionSector).len();
    let missing_sector_share =
        (production_total - known_output).max(0.0) / (production_count - complete_cols.len()) as f64;

    let household_total = 1000.0 * macro_sam.row_total(&AccountId::new("households")).unwrap();
    let observed_household: f64 = micro_reg
        .of_category(AccountCategory::Household)
        .iter()
        .filter_map(|a| observed.get(a.id.as_str()))
        .sum();
    let unobserved_household_share =
        (household_total - observed_household).max(0.0) / UNOBSERVED_HOUSEHOLDS.len() as f64;

    micro_reg
        .iter()
        .enumerate()
        .map(|(k, account)| {
            if let Some(&total) = observed.get(account.id.as_str()) {
                return total;
            }
            match account.category {
                AccountCategory::ProductionSector => {
                    if complete_cols.contains(&k) {
                        partial.col_total_at(k)
                    } else {
                        missing_sector_share
                    }
                }
                AccountCategory::Household => unobserved_household_share,
                _ => {
                    // Singleton band: the macro control, averaged over the
                    // table's rounding noise.
                    let target = mapping.target(&account.id).expect("total mapping");
                    let band = macro_reg.position(target).expect("macro account");
                    1000.0 * 0.5 * (macro_sam.row_total_at(band) + macro_sam.col_total_at(band))
                }
            }
        })
        .collect()
}

/// Builds the seed for the completion: macro cells spread over their bands
/// in proportion to the margins, programme columns placed on their matching
/// sectors, and every trusted transcription cell written on top.
fn completion_seed(
    partial: &Sam,
    macro_sam: &Sam,
    mapping: &AccountMapping,
    margins: &[f64],
) -> Vec<f64> {
    let micro_reg = partial.registry();
    let macro_reg = macro_sam.registry();
    let n = micro_reg.len();

    let band_of: Vec<usize> = micro_reg
        .iter()
        .map(|a| macro_reg.position(mapping.target(&a.id).unwrap()).unwrap())
        .collect();
    let mut band_margin_sum = vec![0.0; macro_reg.len()];
    for (k, &m) in margins.iter().enumerate() {
        band_margin_sum[band_of[k]] += m;
    }
    let share = |k: usize| -> f64 {
        let band = band_of[k];
        if band_margin_sum[band] == 0.0 {
            0.0
        } else {
            margins[k] / band_margin_sum[band]
        }
    };

    // Bands whose interior is pinned by structure or trusted data rather
    // than proportional spread.
    use AccountCategory::*;
    let structured_bands = [
        (ProductionSector, PublicCurrentExpenditure),
        (ProductionSector, PublicCapitalInvestment),
        (Household, PublicCurrentExpenditure),
        (Household, RowCurrent),
    ];
    // Demand bands the government-service sectors stay out of (their sales
    // are pinned by the programme columns).
    let restricted_demand = [
        (ProductionSector, ProductionSector),
        (ProductionSector, Household),
        (ProductionSector, PrivateCapital),
        (ProductionSector, ChangesInInventory),
        (ProductionSector, RowCurrent),
    ];
    let gov_rows: Vec<usize> = GOV_SERVICE_ROWS
        .iter()
        .map(|id| micro_reg.position(&AccountId::new(*id)).expect("known id"))
        .collect();
    let pinned_rows: Vec<usize> = FULLY_PINNED_ROWS
        .iter()
        .map(|id| micro_reg.position(&AccountId::new(*id)).expect("known id"))
        .collect();

    // Proportional default layer.
    let mut default_layer = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let pair = (micro_reg.get(r).category, micro_reg.get(c).category);
            if structured_bands.contains(&pair) {
                continue;
            }
            if restricted_demand.contains(&pair)
                && (pinned_rows.contains(&r)
                    || (gov_rows.contains(&r) && pair != (ProductionSector, ProductionSector)))
            {
                continue;
            }
            let v = macro_sam.cell(band_of[r], band_of[c]) * 1000.0;
            if v != 0.0 {
                default_layer[r * n + c] = v * share(r) * share(c);
            }
        }
    }

    // Pinned layer: programme placements, then trusted transcription cells
    // wherever the source is legible.
    let mut pinned: Vec<Option<f64>> = vec![None; n * n];
    for (programme, sectors) in PROGRAMME_SECTORS {
        let c = micro_reg.position(&AccountId::new(*programme)).expect("known id");
        for (sector, weight) in *sectors {
            let r = micro_reg.position(&AccountId::new(*sector)).unwrap();
            pinned[r * n + c] = Some(margins[c] * weight);
        }
    }
    for (rows, cols) in trusted_regions(micro_reg) {
        for &r in &rows {
            for &c in &cols {
                pinned[r * n + c] = Some(partial.cell(r, c));
            }
        }
    }

    // Per band, defaults only fill the gap the pinned cells leave, so the
    // seed reproduces every macro control cell instead of double counting.
    let nb = macro_reg.len();
    let mut pinned_sum = vec![0.0; nb * nb];
    let mut default_sum = vec![0.0; nb * nb];
    for r in 0..n {
        for c in 0..n {
            let band = band_of[r] * nb + band_of[c];
            match pinned[r * n + c] {
                Some(v) => pinned_sum[band] += v,
                None => default_sum[band] += default_layer[r * n + c],
            }
        }
    }
    let mut seed = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let band = band_of[r] * nb + band_of[c];
            seed[r * n + c] = match pinned[r * n + c] {
                Some(v) => v,
                None => {
                    let target = macro_sam.cell(band_of[r], band_of[c]) * 1000.0;
                    let gap = (target - pinned_sum[band]).max(0.0);
                    if default_sum[band] > 0.0 {
                        default_layer[r * n + c] * gap / default_sum[band]
                    } else {
                        0.0
                    }
                }
            };
        }
    }
    seed
}

/// Completes and balances the partial micro table against the macro control
/// totals. Deterministic: same inputs, bit-identical output.
pub fn build_balanced_micro(
    partial: &Sam,
    macro_sam: &Sam,
    mapping: &AccountMapping,
) -> Result<(Sam, RasOutcome), RasError> {
    let micro_reg = partial.registry_arc();
    let margins = micro_margins(partial, macro_sam, mapping);
    let seed = completion_seed(partial, macro_sam, mapping, &margins);

    let frozen = FROZEN_CELLS
        .iter()
        .map(|(r, c)| {
            (
                micro_reg.position(&AccountId::new(*r)).expect("known id"),
                micro_reg.position(&AccountId::new(*c)).expect("known id"),
            )
        })
        .collect();
    let config = RasConfig {
        max_iterations: 50000,
        tolerance: MICRO_RAS_TOLERANCE,
        frozen,
    };
    let n = micro_reg.len();
    let outcome = ras_balance(&seed, n, n, &margins, &margins, &config)?;
    let sam = Sam::new(micro_reg, outcome.cells.clone(), "RM million")
        .expect("square by construction");
    Ok((sam, outcome))
}

/// Convenience: the full pipeline over the shipped transcriptions.
pub fn balanced_micro_sam() -> (Sam, RasOutcome) {
    build_balanced_micro(&micro_partial_sam(), &macro_sam(), &micro_to_macro_mapping())
        .expect("shipped data completes")
}
