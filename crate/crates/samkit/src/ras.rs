//! Iterative biproportional (RAS) scaling: reconcile a non-negative seed
//! matrix to prescribed row and column totals while preserving its zero
//! pattern. Cells that must keep their value (including the few legitimately
//! negative capital/ROW cells) are frozen: excluded from scaling, subtracted
//! from the targets, and added back to the result.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sam::kahan_sum;

#[derive(Debug, Error, PartialEq)]
pub enum RasError {
    #[error("row targets have {rows} entries and col targets {cols}, matrix is {expect_rows}x{expect_cols}")]
    TargetLength {
        rows: usize,
        cols: usize,
        expect_rows: usize,
        expect_cols: usize,
    },
    #[error("frozen cell ({row}, {col}) is outside the matrix")]
    FrozenOutOfBounds { row: usize, col: usize },
    #[error("scalable cell ({row}, {col}) is negative ({value}); freeze it or fix the seed")]
    NegativeScalableCell { row: usize, col: usize, value: f64 },
    #[error("target sums are inconsistent beyond tolerance: rows {row_sum}, cols {col_sum}")]
    InconsistentTargets { row_sum: f64, col_sum: f64 },
    #[error("{line} has residual target {target} after frozen cells, which is negative")]
    NegativeResidualTarget { line: Line, target: f64 },
    #[error("{line} has target {target} but no scalable nonzero cell")]
    StructurallyInfeasible { line: Line, target: f64 },
    #[error("targets and seed must be finite")]
    NonFinite,
}

/// A matrix line, for error reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Line {
    Row(usize),
    Col(usize),
}

impl std::fmt::Display for Line {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Line::Row(i) => write!(f, "row {i}"),
            Line::Col(j) => write!(f, "column {j}"),
        }
    }
}

/// RAS controls. Tolerance is absolute, in the units of the table.
#[derive(Debug, Clone, PartialEq)]
pub struct RasConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub frozen: Vec<(usize, usize)>,
}

impl Default for RasConfig {
    fn default() -> Self {
        RasConfig {
            max_iterations: 1000,
            tolerance: 1e-8,
            frozen: Vec::new(),
        }
    }
}

/// Balanced matrix plus scaling diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RasOutcome {
    /// Balanced cells, row-major, with frozen cells restored.
    pub cells: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    /// Cumulative row scaling factors (the diagonal of R in R·S·C).
    pub row_factors: Vec<f64>,
    /// Cumulative column scaling factors (the diagonal of C).
    pub col_factors: Vec<f64>,
    pub iterations: usize,
    /// Max absolute margin residual of the returned matrix.
    pub final_residual: f64,
    /// Max absolute margin residual after each full row+column sweep.
    pub residual_trace: Vec<f64>,
    pub converged: bool,
    /// True when column targets were proportionally repaired to match the
    /// row-target sum (source-table rounding noise).
    pub col_targets_adjusted: bool,
}

impl RasOutcome {
    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col]
    }
}

struct Workspace {
    scalable: Vec<f64>,
    frozen_mask: Vec<bool>,
    row_targets: Vec<f64>,
    col_targets: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Workspace {
    fn margin_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            let sum = kahan_sum(self.scalable[i * self.cols..(i + 1) * self.cols].iter().copied());
            worst = worst.max((sum - self.row_targets[i]).abs());
        }
        for j in 0..self.cols {
            let sum = kahan_sum((0..self.rows).map(|i| self.scalable[i * self.cols + j]));
            worst = worst.max((sum - self.col_targets[j]).abs());
        }
        worst
    }
}

/// Balances `seed` (row-major, `rows` x `cols`) to the given margins.
///
/// Preconditions: scalable cells non-negative; row and column target sums
/// equal within tolerance; every line with a nonzero residual target has at
/// least one nonzero scalable cell. On non-convergence the best iterate is
/// returned with `converged = false`.
pub fn ras_balance(
    seed: &[f64],
    rows: usize,
    cols: usize,
    row_targets: &[f64],
    col_targets: &[f64],
    config: &RasConfig,
) -> Result<RasOutcome, RasError> {
    if row_targets.len() != rows || col_targets.len() != cols || seed.len() != rows * cols {
        return Err(RasError::TargetLength {
            rows: row_targets.len(),
            cols: col_targets.len(),
            expect_rows: rows,
            expect_cols: cols,
        });
    }
    if seed.iter().any(|v| !v.is_finite())
        || row_targets.iter().any(|v| !v.is_finite())
        || col_targets.iter().any(|v| !v.is_finite())
    {
        return Err(RasError::NonFinite);
    }

    let mut frozen_mask = vec![false; rows * cols];
    for &(r, c) in &config.frozen {
        if r >= rows || c >= cols {
            return Err(RasError::FrozenOutOfBounds { row: r, col: c });
        }
        frozen_mask[r * cols + c] = true;
    }

    let mut scalable = seed.to_vec();
    let mut frozen_row_sum = vec![0.0; rows];
    let mut frozen_col_sum = vec![0.0; cols];
    for i in 0..rows {
        for j in 0..cols {
            let idx = i * cols + j;
            if frozen_mask[idx] {
                frozen_row_sum[i] += scalable[idx];
                frozen_col_sum[j] += scalable[idx];
                scalable[idx] = 0.0;
            } else if scalable[idx] < 0.0 {
                return Err(RasError::NegativeScalableCell {
                    row: i,
                    col: j,
                    value: scalable[idx],
                });
            }
        }
    }

    let residual_rows: Vec<f64> = (0..rows).map(|i| row_targets[i] - frozen_row_sum[i]).collect();
    let mut residual_cols: Vec<f64> = (0..cols).map(|j| col_targets[j] - frozen_col_sum[j]).collect();
    for (i, &t) in residual_rows.iter().enumerate() {
        if t < 0.0 {
            return Err(RasError::NegativeResidualTarget {
                line: Line::Row(i),
                target: t,
            });
        }
    }
    for (j, &t) in residual_cols.iter().enumerate() {
        if t < 0.0 {
            return Err(RasError::NegativeResidualTarget {
                line: Line::Col(j),
                target: t,
            });
        }
    }

    let row_sum = kahan_sum(residual_rows.iter().copied());
    let col_sum = kahan_sum(residual_cols.iter().copied());
    let mut col_targets_adjusted = false;
    if row_sum != col_sum {
        if (row_sum - col_sum).abs() > config.tolerance {
            return Err(RasError::InconsistentTargets { row_sum, col_sum });
        }
        if col_sum > 0.0 {
            let fix = row_sum / col_sum;
            for t in residual_cols.iter_mut() {
                *t *= fix;
            }
            col_targets_adjusted = true;
        }
    }

    for i in 0..rows {
        let has_cell = (0..cols).any(|j| scalable[i * cols + j] != 0.0);
        if residual_rows[i] > config.tolerance && !has_cell {
            return Err(RasError::StructurallyInfeasible {
                line: Line::Row(i),
                target: residual_rows[i],
            });
        }
    }
    for j in 0..cols {
        let has_cell = (0..rows).any(|i| scalable[i * cols + j] != 0.0);
        if residual_cols[j] > config.tolerance && !has_cell {
            return Err(RasError::StructurallyInfeasible {
                line: Line::Col(j),
                target: residual_cols[j],
            });
        }
    }

    let mut ws = Workspace {
        scalable,
        frozen_mask,
        row_targets: residual_rows,
        col_targets: residual_cols,
        rows,
        cols,
    };

    let mut row_factors = vec![1.0; rows];
    let mut col_factors = vec![1.0; cols];
    let mut residual_trace = Vec::new();

    let initial = ws.margin_residual();
    residual_trace.push(initial);
    let mut best_cells = ws.scalable.clone();
    let mut best_row_factors = row_factors.clone();
    let mut best_col_factors = col_factors.clone();
    let mut best_residual = initial;
    let mut iterations = 0;
    let mut converged = initial <= config.tolerance;

    while !converged && iterations < config.max_iterations {
        for i in 0..rows {
            let sum = kahan_sum(ws.scalable[i * cols..(i + 1) * cols].iter().copied());
            if sum > 0.0 {
                let factor = ws.row_targets[i] / sum;
                for j in 0..cols {
                    ws.scalable[i * cols + j] *= factor;
                }
                row_factors[i] *= factor;
            }
        }
        for j in 0..cols {
            let sum = kahan_sum((0..rows).map(|i| ws.scalable[i * cols + j]));
            if sum > 0.0 {
                let factor = ws.col_targets[j] / sum;
                for i in 0..rows {
                    ws.scalable[i * cols + j] *= factor;
                }
                col_factors[j] *= factor;
            }
        }
        iterations += 1;

        let residual = ws.margin_residual();
        residual_trace.push(residual);
        if residual < best_residual {
            best_residual = residual;
            best_cells.copy_from_slice(&ws.scalable);
            best_row_factors.copy_from_slice(&row_factors);
            best_col_factors.copy_from_slice(&col_factors);
        }
        if residual <= config.tolerance {
            converged = true;
        }
    }

    // Restore frozen cells into the best iterate.
    let mut cells = best_cells;
    for i in 0..rows {
        for j in 0..cols {
            let idx = i * cols + j;
            if ws.frozen_mask[idx] {
                cells[idx] = seed[idx];
            }
        }
    }

    Ok(RasOutcome {
        cells,
        rows,
        cols,
        row_factors: best_row_factors,
        col_factors: best_col_factors,
        iterations,
        final_residual: best_residual,
        residual_trace,
        converged,
        col_targets_adjusted,
    })
}
