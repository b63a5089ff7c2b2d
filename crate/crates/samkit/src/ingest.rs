//! File formats: SAM tables, account registries, account mappings, weights,
//! scenarios, and the machine-readable validation report.
//!
//! SAM tables are CSV grids: the first row holds the unit in the corner cell
//! (may be blank) followed by account ids in column order; each subsequent
//! row holds an account id followed by one decimal cell per column. Blank
//! cells read as zero. A trailing `TOTAL` row/column is ignored on read and
//! emitted on write. Row ids and column ids must be identical sets in
//! identical order.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::account::{Account, AccountCategory, AccountId, AccountRegistry};
use crate::sam::{BalanceEntry, CellFinding, Sam, StructuralMask};
use crate::simulate::Scenario;

pub const TOTAL_LABEL: &str = "TOTAL";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: header must start with a blank corner cell or unit label")]
    MissingHeader { line: usize },
    #[error("line {line}, column {column}: cell `{text}` is not a finite decimal")]
    BadCell {
        line: usize,
        column: usize,
        text: String,
    },
    #[error("line {line}: duplicate account id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unknown account id `{id}`")]
    UnknownId { line: usize, id: String },
    #[error("line {line}: row ids do not match column ids (`{row_id}` vs `{col_id}`)")]
    RowColMismatch {
        line: usize,
        row_id: String,
        col_id: String,
    },
    #[error("table covers {found} accounts but registry has {expected}")]
    RegistryCoverage { found: usize, expected: usize },
    #[error("line {line}: unknown category token `{token}`")]
    BadCategory { line: usize, token: String },
    #[error("line {line}: malformed tag `{tag}` (expected key=value)")]
    BadTag { line: usize, tag: String },
    #[error("line {line}: weight for `{id}` must be a positive finite number")]
    BadWeight { line: usize, id: String },
    #[error("scenario: {0}")]
    Scenario(#[from] serde_json::Error),
    #[error(transparent)]
    Sam(#[from] crate::sam::SamError),
    #[error(transparent)]
    Registry(#[from] crate::account::RegistryError),
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn parse_cell(text: &str, line: usize, column: usize) -> Result<f64, IngestError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(0.0);
    }
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IngestError::BadCell {
            line,
            column,
            text: text.to_string(),
        }),
    }
}

/// Parses a SAM table. Cells are returned in registry order regardless of
/// the order the file lists accounts in.
pub fn parse_sam(text: &str, registry: &Arc<AccountRegistry>) -> Result<Sam, IngestError> {
    let mut records = reader(text).into_records();
    let header = records
        .next()
        .ok_or(IngestError::MissingHeader { line: 1 })??;
    let unit = header.get(0).unwrap_or("").trim().to_string();

    let mut col_ids: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    // A trailing TOTAL column is emitted by writers; drop it.
    let has_total_col = col_ids.last().map(|s| s == TOTAL_LABEL).unwrap_or(false);
    if has_total_col {
        col_ids.pop();
    }
    for (k, id) in col_ids.iter().enumerate() {
        if id.is_empty() {
            return Err(IngestError::BadCell {
                line: 1,
                column: k + 2,
                text: String::new(),
            });
        }
        if col_ids[..k].contains(id) {
            return Err(IngestError::DuplicateId {
                line: 1,
                id: id.clone(),
            });
        }
    }

    let mut row_ids: Vec<String> = Vec::with_capacity(col_ids.len());
    let mut grid: Vec<Vec<f64>> = Vec::with_capacity(col_ids.len());
    for (k, record) in records.enumerate() {
        let record = record?;
        let line = k + 2;
        let id = record.get(0).unwrap_or("").trim().to_string();
        if id == TOTAL_LABEL {
            continue;
        }
        if row_ids.contains(&id) {
            return Err(IngestError::DuplicateId { line, id });
        }
        let found = record.len().saturating_sub(1);
        let expected = col_ids.len();
        // Rows may carry one extra field when a TOTAL column is present.
        let max = if has_total_col { expected + 1 } else { expected };
        if found < expected || found > max {
            return Err(IngestError::FieldCount {
                line,
                expected,
                found,
            });
        }
        let mut row = Vec::with_capacity(expected);
        for c in 0..expected {
            row.push(parse_cell(record.get(c + 1).unwrap_or(""), line, c + 2)?);
        }
        row_ids.push(id);
        grid.push(row);
    }

    if row_ids.len() != col_ids.len() {
        return Err(IngestError::RegistryCoverage {
            found: row_ids.len(),
            expected: col_ids.len(),
        });
    }
    for (k, (row_id, col_id)) in row_ids.iter().zip(col_ids.iter()).enumerate() {
        if row_id != col_id {
            return Err(IngestError::RowColMismatch {
                line: k + 2,
                row_id: row_id.clone(),
                col_id: col_id.clone(),
            });
        }
    }
    if row_ids.len() != registry.len() {
        return Err(IngestError::RegistryCoverage {
            found: row_ids.len(),
            expected: registry.len(),
        });
    }

    // Map file positions onto registry positions.
    let mut file_pos_of = vec![usize::MAX; registry.len()];
    for (file_pos, id) in row_ids.iter().enumerate() {
        let reg_pos = registry
            .position(&AccountId::new(id.clone()))
            .ok_or_else(|| IngestError::UnknownId {
                line: file_pos + 2,
                id: id.clone(),
            })?;
        file_pos_of[reg_pos] = file_pos;
    }

    let n = registry.len();
    let mut cells = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            cells[r * n + c] = grid[file_pos_of[r]][file_pos_of[c]];
        }
    }
    Ok(Sam::new(Arc::clone(registry), cells, unit)?)
}

fn format_cell(value: f64) -> String {
    if value == 0.0 {
        String::new()
    } else {
        format!("{value}")
    }
}

/// Writes a SAM table with its unit in the corner cell and a computed TOTAL
/// row and column. `parse_sam` of the output reproduces the input exactly.
pub fn write_sam(sam: &Sam) -> String {
    let n = sam.len();
    let mut writer = csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(Vec::new());

    let mut header: Vec<String> = Vec::with_capacity(n + 2);
    header.push(sam.unit().to_string());
    for account in sam.registry().iter() {
        header.push(account.id.to_string());
    }
    header.push(TOTAL_LABEL.to_string());
    writer.write_record(&header).expect("in-memory write");

    for r in 0..n {
        let mut record: Vec<String> = Vec::with_capacity(n + 2);
        record.push(sam.registry().get(r).id.to_string());
        for c in 0..n {
            record.push(format_cell(sam.cell(r, c)));
        }
        record.push(format!("{}", sam.row_total_at(r)));
        writer.write_record(&record).expect("in-memory write");
    }

    let mut totals: Vec<String> = Vec::with_capacity(n + 2);
    totals.push(TOTAL_LABEL.to_string());
    for c in 0..n {
        totals.push(format!("{}", sam.col_total_at(c)));
    }
    totals.push(format!("{}", sam.grand_total()));
    writer.write_record(&totals).expect("in-memory write");

    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf8")
}

/// Parses a registry file: one `id,name,category,tags` row per account, tags
/// being optional `key=value` pairs joined by `;`.
pub fn parse_registry(text: &str) -> Result<AccountRegistry, IngestError> {
    let mut accounts = Vec::new();
    for (k, record) in reader(text).into_records().enumerate() {
        let record = record?;
        let line = k + 1;
        if record.len() < 3 || record.len() > 4 {
            return Err(IngestError::FieldCount {
                line,
                expected: 4,
                found: record.len(),
            });
        }
        let id = record.get(0).unwrap_or("").trim();
        let name = record.get(1).unwrap_or("").trim();
        let token = record.get(2).unwrap_or("").trim();
        let category = AccountCategory::parse_token(token).ok_or(IngestError::BadCategory {
            line,
            token: token.to_string(),
        })?;
        let mut account = Account::new(id, name, category);
        if let Some(tags) = record.get(3) {
            for tag in tags.split(';') {
                let tag = tag.trim();
                if tag.is_empty() {
                    continue;
                }
                let (key, value) = tag.split_once('=').ok_or(IngestError::BadTag {
                    line,
                    tag: tag.to_string(),
                })?;
                account = account.with_tag(key.trim(), value.trim());
            }
        }
        accounts.push(account);
    }
    Ok(AccountRegistry::new(accounts)?)
}

/// Writes a registry in canonical form: registry order, tags sorted by key.
/// Write → parse → write is byte-identical.
pub fn write_registry(registry: &AccountRegistry) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for account in registry.iter() {
        let tags: Vec<String> = account
            .tags
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        writer
            .write_record([
                account.id.as_str(),
                account.name.as_str(),
                account.category.token(),
                &tags.join(";"),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf8")
}

/// Parses a mapping file: one `micro_id,macro_id` row per micro account.
pub fn parse_mapping(text: &str) -> Result<Vec<(AccountId, AccountId)>, IngestError> {
    let mut pairs = Vec::new();
    for (k, record) in reader(text).into_records().enumerate() {
        let record = record?;
        let line = k + 1;
        if record.len() != 2 {
            return Err(IngestError::FieldCount {
                line,
                expected: 2,
                found: record.len(),
            });
        }
        let micro = record.get(0).unwrap_or("").trim();
        let macro_ = record.get(1).unwrap_or("").trim();
        if micro.is_empty() || macro_.is_empty() {
            return Err(IngestError::UnknownId {
                line,
                id: String::new(),
            });
        }
        pairs.push((AccountId::new(micro), AccountId::new(macro_)));
    }
    Ok(pairs)
}

pub fn write_mapping(pairs: &[(AccountId, AccountId)]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for (micro, macro_) in pairs {
        writer
            .write_record([micro.as_str(), macro_.as_str()])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf8")
}

/// Parses a population-weight file: `account_id,population` rows.
pub fn parse_weights(text: &str) -> Result<BTreeMap<AccountId, f64>, IngestError> {
    let mut weights = BTreeMap::new();
    for (k, record) in reader(text).into_records().enumerate() {
        let record = record?;
        let line = k + 1;
        if record.len() != 2 {
            return Err(IngestError::FieldCount {
                line,
                expected: 2,
                found: record.len(),
            });
        }
        let id = record.get(0).unwrap_or("").trim().to_string();
        let value = parse_cell(record.get(1).unwrap_or(""), line, 2)?;
        if value <= 0.0 {
            return Err(IngestError::BadWeight { line, id });
        }
        weights.insert(AccountId::new(id), value);
    }
    Ok(weights)
}

/// Parses a scenario file (JSON).
pub fn parse_scenario(text: &str) -> Result<Scenario, IngestError> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_scenario(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(scenario).expect("scenario serializes")
}

/// Census section of the validation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusReport {
    pub total_accounts: usize,
    pub by_category: Vec<CategoryCount>,
    pub canonical_micro: bool,
    pub canonical_macro: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryCount {
    pub category: AccountCategory,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalanceSection {
    pub tolerance: f64,
    pub entries: Vec<BalanceEntry>,
    pub violations: Vec<AccountId>,
}

/// Aggregated findings for a registry/SAM pair. Sign violations are errors;
/// balance and structural findings are warnings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub census: CensusReport,
    pub balance_residuals: BalanceSection,
    pub structural_violations: Vec<CellFinding>,
    pub sign_violations: Vec<CellFinding>,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        !self.sign_violations.is_empty()
    }

    pub fn has_warnings(&self) -> bool {
        !self.balance_residuals.violations.is_empty() || !self.structural_violations.is_empty()
    }
}

/// Runs the full check suite over a registry/SAM pair.
pub fn validate_file_set(
    registry: &AccountRegistry,
    sam: &Sam,
    mask: &StructuralMask,
    balance_tolerance: f64,
) -> ValidationReport {
    let entries = sam.balance_residuals();
    let violations = entries
        .iter()
        .filter(|e| e.residual.abs() > balance_tolerance)
        .map(|e| e.account.clone())
        .collect();
    ValidationReport {
        census: CensusReport {
            total_accounts: registry.len(),
            by_category: registry
                .census()
                .into_iter()
                .map(|(category, count)| CategoryCount { category, count })
                .collect(),
            canonical_micro: registry.is_canonical_micro(),
            canonical_macro: registry.is_canonical_macro(),
        },
        balance_residuals: BalanceSection {
            tolerance: balance_tolerance,
            entries,
            violations,
        },
        structural_violations: sam.structural_violations(mask),
        sign_violations: sam.sign_violations(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_registry() -> Arc<AccountRegistry> {
        Arc::new(
            AccountRegistry::new(vec![
                Account::new("prod", "Production", AccountCategory::ProductionSector),
                Account::new("hh", "Households", AccountCategory::Household),
                Account::new("row", "ROW current", AccountCategory::RowCurrent),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn parse_reorders_to_registry_order() {
        let registry = toy_registry();
        let shuffled = "\
RM million,hh,row,prod
hh,1,2,3
row,4,5,6
prod,7,8,9
";
        let canonical = "\
RM million,prod,hh,row
prod,9,7,8
hh,3,1,2
row,6,4,5
";
        let a = parse_sam(shuffled, &registry).unwrap();
        let b = parse_sam(canonical, &registry).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cell(0, 0), 9.0);
        assert_eq!(a.unit(), "RM million");
    }

    #[test]
    fn blank_cells_read_as_zero_and_totals_are_ignored() {
        let registry = toy_registry();
        let text = "\
,prod,hh,row,TOTAL
prod,,1.5,,1.5
hh,2.5,,,2.5
row,,,,0
TOTAL,2.5,1.5,0,4
";
        let sam = parse_sam(text, &registry).unwrap();
        assert_eq!(sam.cell(0, 1), 1.5);
        assert_eq!(sam.cell(0, 0), 0.0);
        assert_eq!(sam.grand_total(), 4.0);
    }

    #[test]
    fn roundtrip_write_parse_is_identity_and_byte_stable() {
        let registry = toy_registry();
        let sam = Sam::zeros(Arc::clone(&registry), "RM billion")
            .with_cell(0, 1, 116.583)
            .with_cell(1, 2, 1.301)
            .with_cell(2, 0, -32.274);
        let text = write_sam(&sam);
        let reparsed = parse_sam(&text, &registry).unwrap();
        assert_eq!(reparsed, sam);
        assert_eq!(write_sam(&reparsed), text);
        // Negative cell survives with its sign.
        assert_eq!(reparsed.cell(2, 0), -32.274);
    }

    #[test]
    fn one_by_one_zero_table() {
        let registry = Arc::new(
            AccountRegistry::new(vec![Account::new(
                "only",
                "Only",
                AccountCategory::ProductionSector,
            )])
            .unwrap(),
        );
        let sam = parse_sam(",only\nonly,0\n", &registry).unwrap();
        assert_eq!(sam.grand_total(), 0.0);
    }

    #[test]
    fn empty_registry_writes_header_only() {
        let registry = Arc::new(AccountRegistry::new(vec![]).unwrap());
        let sam = Sam::zeros(Arc::clone(&registry), "");
        let text = write_sam(&sam);
        assert_eq!(text, ",TOTAL\nTOTAL,0\n");
        assert_eq!(parse_sam(&text, &registry).unwrap(), sam);
    }

    #[test]
    fn mismatched_row_and_col_ids_rejected_with_position() {
        let registry = toy_registry();
        let text = "\
,prod,hh,row
prod,1,2,3
row,4,5,6
hh,7,8,9
";
        match parse_sam(text, &registry) {
            Err(IngestError::RowColMismatch { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected RowColMismatch, got {other:?}"),
        }
    }

    #[test]
    fn bad_cell_reported_with_position() {
        let registry = toy_registry();
        let text = "\
,prod,hh,row
prod,1,x2,3
hh,4,5,6
row,7,8,9
";
        match parse_sam(text, &registry) {
            Err(IngestError::BadCell { line, column, .. }) => {
                assert_eq!((line, column), (2, 3));
            }
            other => panic!("expected BadCell, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_row_id_rejected() {
        let registry = toy_registry();
        let text = "\
,prod,hh,row
prod,1,2,3
prod,4,5,6
row,7,8,9
";
        assert!(matches!(
            parse_sam(text, &registry),
            Err(IngestError::DuplicateId { line: 3, .. })
        ));
    }

    #[test]
    fn registry_roundtrip_byte_identical() {
        let text = "\
prod,Production sectors,production_sector,
hh_rural_malay,Rural Malay,household,ethnicity=malay;region=rural
finance,\"Financial, insurance and real estate\",production_sector,
";
        let registry = parse_registry(text).unwrap();
        let written = write_registry(&registry);
        let reparsed = parse_registry(&written).unwrap();
        assert_eq!(registry, reparsed);
        assert_eq!(write_registry(&reparsed), written);
        assert_eq!(
            registry.accounts()[1].tag("region"),
            Some("rural"),
            "tags parsed"
        );
    }

    #[test]
    fn registry_rejects_bad_category() {
        assert!(matches!(
            parse_registry("x,X,not_a_category,\n"),
            Err(IngestError::BadCategory { line: 1, .. })
        ));
    }

    #[test]
    fn weights_must_be_positive() {
        assert!(parse_weights("hh,0\n").is_err());
        let weights = parse_weights("hh,2.5\nother,1\n").unwrap();
        assert_eq!(weights[&AccountId::new("hh")], 2.5);
    }

    #[test]
    fn balanced_table_yields_a_clean_report() {
        let registry = toy_registry();
        // Symmetric, hence balanced; all flows inside the mask.
        let sam = Sam::zeros(Arc::clone(&registry), "RM million")
            .with_cell(0, 1, 4.0)
            .with_cell(1, 0, 4.0);
        let mask = StructuralMask::new(vec![
            (AccountCategory::ProductionSector, AccountCategory::Household),
            (AccountCategory::Household, AccountCategory::ProductionSector),
        ]);
        let report = validate_file_set(&registry, &sam, &mask, 0.01);
        assert!(!report.has_errors());
        assert!(!report.has_warnings());
        assert!(report.balance_residuals.violations.is_empty());
        assert!(report.structural_violations.is_empty());
        assert!(report.sign_violations.is_empty());
    }

    #[test]
    fn validation_report_sections_populate() {
        let registry = toy_registry();
        // Unbalanced, with a negative in the production band: one sign
        // violation, and production/households unbalanced.
        let sam = Sam::zeros(Arc::clone(&registry), "RM million")
            .with_cell(0, 1, -5.0)
            .with_cell(1, 0, 2.0);
        let mask = StructuralMask::new(vec![
            (AccountCategory::ProductionSector, AccountCategory::Household),
            (AccountCategory::Household, AccountCategory::ProductionSector),
        ]);
        let report = validate_file_set(&registry, &sam, &mask, 0.01);
        assert!(report.has_errors());
        assert_eq!(report.sign_violations.len(), 1);
        assert_eq!(report.balance_residuals.violations.len(), 2);
        assert!(report.structural_violations.is_empty());
        assert!(!report.census.canonical_micro);
        let json = serde_json::to_string(&report).unwrap();
        for key in [
            "census",
            "balance_residuals",
            "structural_violations",
            "sign_violations",
        ] {
            assert!(json.contains(key), "missing key {key}");
        }
    }
}
