//! Top-down hierarchy: collapse a disaggregated SAM onto a coarser registry
//! through a many-to-one account mapping, and check the result against the
//! coarser table's control totals.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::account::{AccountId, AccountRegistry};
use crate::sam::Sam;

#[derive(Debug, Error, PartialEq)]
pub enum AggregateError {
    #[error("micro account `{0}` has no mapping entry")]
    UnmappedMicroAccount(String),
    #[error("mapping target `{0}` is not in the macro registry")]
    UnknownMacroAccount(String),
    #[error("mapping source `{0}` is not in the micro registry")]
    UnknownMicroAccount(String),
    #[error("micro account `{micro}` ({micro_category}) maps to `{macro_id}` ({macro_category}): categories differ")]
    CategoryMismatch {
        micro: String,
        micro_category: String,
        macro_id: String,
        macro_category: String,
    },
    #[error("units differ (`{micro_unit}` vs `{macro_unit}`) but no conversion factor was supplied")]
    MissingUnitFactor {
        micro_unit: String,
        macro_unit: String,
    },
}

/// Total many-to-one map from micro account ids to macro account ids.
///
/// Category-consistent by construction: every micro account's image must
/// carry the same `AccountCategory`.
#[derive(Debug, Clone, PartialEq)]
pub struct AccountMapping {
    entries: BTreeMap<AccountId, AccountId>,
}

impl AccountMapping {
    /// Validates pairs against both registries: total over the micro
    /// registry, targets present, categories consistent.
    pub fn new(
        pairs: Vec<(AccountId, AccountId)>,
        micro: &AccountRegistry,
        macro_: &AccountRegistry,
    ) -> Result<Self, AggregateError> {
        let mut entries = BTreeMap::new();
        for (from, to) in pairs {
            let micro_account = micro
                .by_id(&from)
                .ok_or_else(|| AggregateError::UnknownMicroAccount(from.to_string()))?;
            let macro_account = macro_
                .by_id(&to)
                .ok_or_else(|| AggregateError::UnknownMacroAccount(to.to_string()))?;
            if micro_account.category != macro_account.category {
                return Err(AggregateError::CategoryMismatch {
                    micro: from.to_string(),
                    micro_category: micro_account.category.to_string(),
                    macro_id: to.to_string(),
                    macro_category: macro_account.category.to_string(),
                });
            }
            entries.insert(from, to);
        }
        for account in micro.iter() {
            if !entries.contains_key(&account.id) {
                return Err(AggregateError::UnmappedMicroAccount(account.id.to_string()));
            }
        }
        Ok(AccountMapping { entries })
    }

    /// Identity mapping over one registry.
    pub fn identity(registry: &AccountRegistry) -> Self {
        AccountMapping {
            entries: registry
                .iter()
                .map(|a| (a.id.clone(), a.id.clone()))
                .collect(),
        }
    }

    pub fn target(&self, micro: &AccountId) -> Option<&AccountId> {
        self.entries.get(micro)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&AccountId, &AccountId)> {
        self.entries.iter()
    }
}

/// Unit handling for aggregation. Conversion must be explicit whenever the
/// two tables declare different units; silent conversion is forbidden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitConversion {
    SameUnit,
    Factor(f64),
}

impl UnitConversion {
    fn factor_for(self, micro: &Sam, target_unit: &str) -> Result<f64, AggregateError> {
        match self {
            UnitConversion::Factor(f) => Ok(f),
            UnitConversion::SameUnit => {
                if micro.unit() == target_unit {
                    Ok(1.0)
                } else {
                    Err(AggregateError::MissingUnitFactor {
                        micro_unit: micro.unit().to_string(),
                        macro_unit: target_unit.to_string(),
                    })
                }
            }
        }
    }
}

/// Collapses `micro` onto `macro_registry`: macro cell (I, J) is the sum of
/// all micro cells whose row maps to I and column maps to J, times the unit
/// factor. The grand total is preserved up to that factor.
pub fn aggregate(
    micro: &Sam,
    mapping: &AccountMapping,
    macro_registry: &Arc<AccountRegistry>,
    conversion: UnitConversion,
    target_unit: &str,
) -> Result<Sam, AggregateError> {
    let factor = conversion.factor_for(micro, target_unit)?;
    let n_micro = micro.len();
    let n_macro = macro_registry.len();

    let mut target_pos = vec![0usize; n_micro];
    for (k, account) in micro.registry().iter().enumerate() {
        let target = mapping
            .target(&account.id)
            .ok_or_else(|| AggregateError::UnmappedMicroAccount(account.id.to_string()))?;
        target_pos[k] = macro_registry
            .position(target)
            .ok_or_else(|| AggregateError::UnknownMacroAccount(target.to_string()))?;
    }

    let mut cells = vec![0.0; n_macro * n_macro];
    for r in 0..n_micro {
        for c in 0..n_micro {
            cells[target_pos[r] * n_macro + target_pos[c]] += micro.cell(r, c);
        }
    }
    for cell in cells.iter_mut() {
        *cell *= factor;
    }
    Ok(Sam::new(Arc::clone(macro_registry), cells, target_unit).expect("square by construction"))
}

/// One macro cell where the aggregated micro table disagrees with the
/// control table by more than the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlDiscrepancy {
    pub row: AccountId,
    pub col: AccountId,
    pub aggregated: f64,
    pub control: f64,
    pub difference: f64,
}

/// Compares `aggregate(micro)` against `control` cell by cell.
pub fn control_total_check(
    micro: &Sam,
    control: &Sam,
    mapping: &AccountMapping,
    conversion: UnitConversion,
    tolerance: f64,
) -> Result<Vec<ControlDiscrepancy>, AggregateError> {
    let aggregated = aggregate(
        micro,
        mapping,
        &control.registry_arc(),
        conversion,
        control.unit(),
    )?;
    let n = control.len();
    let mut out = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let a = aggregated.cell(r, c);
            let b = control.cell(r, c);
            if (a - b).abs() > tolerance {
                out.push(ControlDiscrepancy {
                    row: control.registry().get(r).id.clone(),
                    col: control.registry().get(c).id.clone(),
                    aggregated: a,
                    control: b,
                    difference: a - b,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::account::{Account, AccountCategory};

    fn micro_registry() -> Arc<AccountRegistry> {
        Arc::new(
            AccountRegistry::new(vec![
                Account::new("s1", "Sector 1", AccountCategory::ProductionSector),
                Account::new("s2", "Sector 2", AccountCategory::ProductionSector),
                Account::new("h1", "Household 1", AccountCategory::Household),
                Account::new("h2", "Household 2", AccountCategory::Household),
            ])
            .unwrap(),
        )
    }

    fn macro_registry() -> Arc<AccountRegistry> {
        Arc::new(
            AccountRegistry::new(vec![
                Account::new("prod", "Production", AccountCategory::ProductionSector),
                Account::new("hh", "Households", AccountCategory::Household),
            ])
            .unwrap(),
        )
    }

    fn mapping(micro: &AccountRegistry, macro_: &AccountRegistry) -> AccountMapping {
        AccountMapping::new(
            vec![
                ("s1".into(), "prod".into()),
                ("s2".into(), "prod".into()),
                ("h1".into(), "hh".into()),
                ("h2".into(), "hh".into()),
            ],
            micro,
            macro_,
        )
        .unwrap()
    }

    fn sample_micro(registry: &Arc<AccountRegistry>) -> Sam {
        let cells = vec![
            1.0, 2.0, 3.0, 4.0, //
            5.0, 6.0, 7.0, 8.0, //
            9.0, 10.0, 11.0, 12.0, //
            13.0, 14.0, 15.0, 16.0,
        ];
        Sam::new(Arc::clone(registry), cells, "RM million").unwrap()
    }

    #[test]
    fn block_sums_match_hand_computation() {
        let micro_reg = micro_registry();
        let macro_reg = macro_registry();
        let micro = sample_micro(&micro_reg);
        let map = mapping(&micro_reg, &macro_reg);
        let macro_sam = aggregate(&micro, &map, &macro_reg, UnitConversion::Factor(1.0), "RM million").unwrap();
        // 2x2 block sums of the 4x4 grid above.
        assert_eq!(macro_sam.cell(0, 0), 1.0 + 2.0 + 5.0 + 6.0);
        assert_eq!(macro_sam.cell(0, 1), 3.0 + 4.0 + 7.0 + 8.0);
        assert_eq!(macro_sam.cell(1, 0), 9.0 + 10.0 + 13.0 + 14.0);
        assert_eq!(macro_sam.cell(1, 1), 11.0 + 12.0 + 15.0 + 16.0);
    }

    #[test]
    fn grand_total_preserved_up_to_unit_factor() {
        let micro_reg = micro_registry();
        let macro_reg = macro_registry();
        let micro = sample_micro(&micro_reg);
        let map = mapping(&micro_reg, &macro_reg);
        let macro_sam = aggregate(&micro, &map, &macro_reg, UnitConversion::Factor(0.001), "RM billion").unwrap();
        assert!((macro_sam.grand_total() - micro.grand_total() * 0.001).abs() < 1e-12);
        assert_eq!(macro_sam.unit(), "RM billion");
    }

    #[test]
    fn aggregate_is_linear() {
        let micro_reg = micro_registry();
        let macro_reg = macro_registry();
        let map = mapping(&micro_reg, &macro_reg);
        let a = sample_micro(&micro_reg);
        let b = a.scaled(0.5, "RM million").with_cell(2, 1, 99.0);
        let combined_cells: Vec<f64> = a
            .cells()
            .iter()
            .zip(b.cells())
            .map(|(x, y)| 2.0 * x + 3.0 * y)
            .collect();
        let combined = Sam::new(Arc::clone(&micro_reg), combined_cells, "RM million").unwrap();
        let agg = |s: &Sam| {
            aggregate(s, &map, &macro_reg, UnitConversion::SameUnit, "RM million").unwrap()
        };
        let lhs = agg(&combined);
        let (ra, rb) = (agg(&a), agg(&b));
        for r in 0..2 {
            for c in 0..2 {
                let rhs = 2.0 * ra.cell(r, c) + 3.0 * rb.cell(r, c);
                assert!((lhs.cell(r, c) - rhs).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn permuting_micro_registry_order_leaves_aggregate_unchanged() {
        let micro_reg = micro_registry();
        let macro_reg = macro_registry();
        let map = mapping(&micro_reg, &macro_reg);
        let micro = sample_micro(&micro_reg);

        let permuted_accounts = vec![
            micro_reg.get(2).clone(),
            micro_reg.get(0).clone(),
            micro_reg.get(3).clone(),
            micro_reg.get(1).clone(),
        ];
        let permuted_reg = Arc::new(AccountRegistry::new(permuted_accounts).unwrap());
        let order = [2usize, 0, 3, 1];
        let mut cells = vec![0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                cells[r * 4 + c] = micro.cell(order[r], order[c]);
            }
        }
        let permuted = Sam::new(Arc::clone(&permuted_reg), cells, "RM million").unwrap();
        let a = aggregate(&micro, &map, &macro_reg, UnitConversion::SameUnit, "RM million").unwrap();
        let map_p = mapping(&permuted_reg, &macro_reg);
        let b = aggregate(&permuted, &map_p, &macro_reg, UnitConversion::SameUnit, "RM million").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identity_mapping_composition_is_idempotent() {
        let macro_reg = macro_registry();
        let micro_reg = micro_registry();
        let map = mapping(&micro_reg, &macro_reg);
        let micro = sample_micro(&micro_reg);
        let once = aggregate(&micro, &map, &macro_reg, UnitConversion::SameUnit, "RM million").unwrap();
        let identity = AccountMapping::identity(&macro_reg);
        let twice = aggregate(&once, &identity, &macro_reg, UnitConversion::SameUnit, "RM million").unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn unit_mismatch_without_factor_is_an_error() {
        let micro_reg = micro_registry();
        let macro_reg = macro_registry();
        let map = mapping(&micro_reg, &macro_reg);
        let micro = sample_micro(&micro_reg);
        let err = aggregate(&micro, &map, &macro_reg, UnitConversion::SameUnit, "RM billion").unwrap_err();
        assert!(matches!(err, AggregateError::MissingUnitFactor { .. }));
    }

    #[test]
    fn unmapped_and_category_mismatch_rejected() {
        let micro_reg = micro_registry();
        let macro_reg = macro_registry();
        let err = AccountMapping::new(
            vec![("s1".into(), "prod".into())],
            &micro_reg,
            &macro_reg,
        )
        .unwrap_err();
        assert!(matches!(err, AggregateError::UnmappedMicroAccount(_)));

        let err = AccountMapping::new(
            vec![
                ("s1".into(), "hh".into()),
                ("s2".into(), "prod".into()),
                ("h1".into(), "hh".into()),
                ("h2".into(), "hh".into()),
            ],
            &micro_reg,
            &macro_reg,
        )
        .unwrap_err();
        assert!(matches!(err, AggregateError::CategoryMismatch { .. }));
    }

    #[test]
    fn disaggregated_table_passes_control_check_and_perturbation_fails_once() {
        let micro_reg = micro_registry();
        let macro_reg = macro_registry();
        let map = mapping(&micro_reg, &macro_reg);
        let micro = sample_micro(&micro_reg);
        let control =
            aggregate(&micro, &map, &macro_reg, UnitConversion::SameUnit, "RM million").unwrap();

        let clean = control_total_check(&micro, &control, &map, UnitConversion::SameUnit, 1e-9)
            .unwrap();
        assert!(clean.is_empty());

        let tol = 0.5;
        let bumped = micro.with_cell(0, 3, micro.cell(0, 3) + 2.0 * tol);
        let found = control_total_check(&bumped, &control, &map, UnitConversion::SameUnit, tol)
            .unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].row, AccountId::new("prod"));
        assert_eq!(found[0].col, AccountId::new("hh"));
        assert!((found[0].difference - 1.0).abs() < 1e-12);
    }
}
