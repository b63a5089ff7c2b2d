//! The square labeled transaction matrix and its accounting invariants.
//!
//! Convention throughout: cell (i, j) is a payment from column account j to
//! row account i — rows receive, columns pay. An account is balanced when
//! its row total equals its column total within a declared tolerance.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::account::{AccountCategory, AccountId, AccountRegistry, RegistryError};

/// Default absolute balance tolerance for RM-billion macro tables.
pub const MACRO_BALANCE_TOL: f64 = 0.01;
/// Default absolute balance tolerance for RM-million micro tables.
pub const MICRO_BALANCE_TOL: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum SamError {
    #[error("cell grid is {rows}x{cols} but registry has {expected} accounts")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("cell ({row}, {col}) is not finite")]
    NonFiniteCell { row: usize, col: usize },
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

/// Square labeled matrix of transaction values in a declared currency unit.
///
/// Immutable after construction; cheap to clone (the registry is shared).
#[derive(Debug, Clone, PartialEq)]
pub struct Sam {
    registry: Arc<AccountRegistry>,
    cells: Vec<f64>,
    unit: String,
}

impl Sam {
    /// Builds a Sam from row-major cells. Every cell must be finite.
    pub fn new(
        registry: Arc<AccountRegistry>,
        cells: Vec<f64>,
        unit: impl Into<String>,
    ) -> Result<Self, SamError> {
        let n = registry.len();
        if cells.len() != n * n {
            let rows = cells.len().checked_div(n).unwrap_or(0);
            return Err(SamError::DimensionMismatch {
                rows,
                cols: n,
                expected: n,
            });
        }
        if let Some(pos) = cells.iter().position(|v| !v.is_finite()) {
            return Err(SamError::NonFiniteCell {
                row: pos / n,
                col: pos % n,
            });
        }
        Ok(Sam {
            registry,
            cells,
            unit: unit.into(),
        })
    }

    pub fn zeros(registry: Arc<AccountRegistry>, unit: impl Into<String>) -> Self {
        let n = registry.len();
        Sam {
            registry,
            cells: vec![0.0; n * n],
            unit: unit.into(),
        }
    }

    pub fn registry(&self) -> &AccountRegistry {
        &self.registry
    }

    pub fn registry_arc(&self) -> Arc<AccountRegistry> {
        Arc::clone(&self.registry)
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn len(&self) -> usize {
        self.registry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registry.is_empty()
    }

    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.len() + col]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Cell addressed by account ids.
    pub fn cell_by_id(&self, row: &AccountId, col: &AccountId) -> Result<f64, RegistryError> {
        let r = self.registry.require(row)?;
        let c = self.registry.require(col)?;
        Ok(self.cell(r, c))
    }

    /// Receipts of one account: compensated sum over its row, left to right.
    pub fn row_total_at(&self, row: usize) -> f64 {
        let n = self.len();
        kahan_sum(self.cells[row * n..(row + 1) * n].iter().copied())
    }

    /// Payments of one account: compensated sum over its column, top to bottom.
    pub fn col_total_at(&self, col: usize) -> f64 {
        let n = self.len();
        kahan_sum((0..n).map(|r| self.cells[r * n + col]))
    }

    pub fn row_total(&self, id: &AccountId) -> Result<f64, RegistryError> {
        Ok(self.row_total_at(self.registry.require(id)?))
    }

    pub fn col_total(&self, id: &AccountId) -> Result<f64, RegistryError> {
        Ok(self.col_total_at(self.registry.require(id)?))
    }

    pub fn row_totals(&self) -> Vec<f64> {
        (0..self.len()).map(|r| self.row_total_at(r)).collect()
    }

    pub fn col_totals(&self) -> Vec<f64> {
        (0..self.len()).map(|c| self.col_total_at(c)).collect()
    }

    /// Sum of every cell (equals both the sum of row totals and the sum of
    /// column totals).
    pub fn grand_total(&self) -> f64 {
        kahan_sum(self.cells.iter().copied())
    }

    /// Row total, column total and their difference for every account, in
    /// registry order.
    pub fn balance_residuals(&self) -> Vec<BalanceEntry> {
        (0..self.len())
            .map(|k| {
                let row_total = self.row_total_at(k);
                let col_total = self.col_total_at(k);
                BalanceEntry {
                    account: self.registry.get(k).id.clone(),
                    row_total,
                    col_total,
                    residual: row_total - col_total,
                }
            })
            .collect()
    }

    /// Accounts whose absolute residual exceeds `tolerance`.
    pub fn balance_violations(&self, tolerance: f64) -> Vec<BalanceEntry> {
        self.balance_residuals()
            .into_iter()
            .filter(|e| e.residual.abs() > tolerance)
            .collect()
    }

    pub fn is_balanced(&self, tolerance: f64) -> bool {
        self.balance_violations(tolerance).is_empty()
    }

    /// Nonzero cells whose (row category, column category) pair the mask
    /// does not permit. Findings are warnings, not failures.
    pub fn structural_violations(&self, mask: &StructuralMask) -> Vec<CellFinding> {
        let n = self.len();
        let mut out = Vec::new();
        for r in 0..n {
            let row = self.registry.get(r);
            for c in 0..n {
                let value = self.cells[r * n + c];
                if value != 0.0 && !mask.permits(row.category, self.registry.get(c).category) {
                    out.push(CellFinding {
                        row: row.id.clone(),
                        col: self.registry.get(c).id.clone(),
                        value,
                    });
                }
            }
        }
        out
    }

    /// Negative cells outside the bands that tolerate signed values.
    /// The band is determined by the receiving (row) account's category.
    pub fn sign_violations(&self) -> Vec<CellFinding> {
        let n = self.len();
        let mut out = Vec::new();
        for r in 0..n {
            let row = self.registry.get(r);
            if row.category.allows_negative() {
                continue;
            }
            for c in 0..n {
                let value = self.cells[r * n + c];
                if value < 0.0 {
                    out.push(CellFinding {
                        row: row.id.clone(),
                        col: self.registry.get(c).id.clone(),
                        value,
                    });
                }
            }
        }
        out
    }

    /// Same matrix with every cell multiplied by `factor`, expressed in
    /// `unit` (e.g. RM million to RM billion with factor 1e-3).
    pub fn scaled(&self, factor: f64, unit: impl Into<String>) -> Sam {
        Sam {
            registry: Arc::clone(&self.registry),
            cells: self.cells.iter().map(|v| v * factor).collect(),
            unit: unit.into(),
        }
    }

    /// Copy with one cell replaced. Intended for test construction.
    pub fn with_cell(&self, row: usize, col: usize, value: f64) -> Sam {
        let mut cells = self.cells.clone();
        let n = self.len();
        cells[row * n + col] = value;
        Sam {
            registry: Arc::clone(&self.registry),
            cells,
            unit: self.unit.clone(),
        }
    }
}

/// Balance record for one account.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceEntry {
    pub account: AccountId,
    pub row_total: f64,
    pub col_total: f64,
    pub residual: f64,
}

/// One offending cell, for structural and sign findings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFinding {
    pub row: AccountId,
    pub col: AccountId,
    pub value: f64,
}

/// Set of (receiving category, paying category) pairs permitted to hold
/// nonzero flows.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralMask {
    pairs: Vec<(AccountCategory, AccountCategory)>,
}

impl StructuralMask {
    pub fn new(mut pairs: Vec<(AccountCategory, AccountCategory)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        StructuralMask { pairs }
    }

    pub fn permits(&self, row: AccountCategory, col: AccountCategory) -> bool {
        self.pairs.binary_search(&(row, col)).is_ok()
    }

    pub fn pairs(&self) -> &[(AccountCategory, AccountCategory)] {
        &self.pairs
    }
}

/// Compensated (Kahan) summation in a fixed traversal order, so totals are
/// deterministic and stable against cancellation in signed bands.
pub fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}
