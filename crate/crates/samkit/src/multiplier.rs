//! Fixed-price multiplier analysis over a declared endogenous/exogenous
//! partition: average expenditure propensities, the multiplier matrix
//! (I - Ann)^-1, and its multiplicative decomposition into within-block
//! transfer, open-loop and closed-loop factors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::account::{AccountCategory, AccountId, AccountRegistry};
use crate::sam::Sam;

#[derive(Debug, Error, PartialEq)]
pub enum MultiplierError {
    #[error("endogenous account `{0}` is not in the registry")]
    UnknownAccount(String),
    #[error("endogenous account `{0}` appears in more than one block")]
    DuplicateAccount(String),
    #[error("partition has no endogenous accounts")]
    EmptyPartition,
    #[error("endogenous account `{0}` has column total {1}, which is not strictly positive")]
    NonPositiveColumnTotal(String, f64),
    #[error("SAM is unbalanced beyond tolerance {tolerance}: worst account `{account}` residual {residual}")]
    Unbalanced {
        account: String,
        residual: f64,
        tolerance: f64,
    },
    #[error("system is non-convergent (spectral radius {rho} >= 1); columns with non-positive leakage: {columns:?}")]
    NonConvergent { rho: f64, columns: Vec<String> },
    #[error("I - A is singular")]
    Singular,
    #[error("within-block system for `{0}` is singular")]
    SingularBlock(String),
}

/// Endogenous accounts grouped into the three conventional blocks, in the
/// order they enter the multiplier matrix. All other registry accounts are
/// exogenous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub activities: Vec<AccountId>,
    pub factors: Vec<AccountId>,
    pub institutions: Vec<AccountId>,
}

impl Partition {
    /// Default convention: production sectors, the factor account(s), and
    /// households as institutions — plus companies when `include_companies`
    /// is set (the default elsewhere), routing profits on to households.
    pub fn default_for(registry: &AccountRegistry, include_companies: bool) -> Partition {
        let ids = |category: AccountCategory| -> Vec<AccountId> {
            registry
                .of_category(category)
                .into_iter()
                .map(|a| a.id.clone())
                .collect()
        };
        let mut institutions = ids(AccountCategory::Household);
        if include_companies {
            institutions.extend(ids(AccountCategory::Company));
        }
        Partition {
            activities: ids(AccountCategory::ProductionSector),
            factors: ids(AccountCategory::FactorOfProduction),
            institutions,
        }
    }

    /// Endogenous accounts in block order.
    pub fn endogenous(&self) -> impl Iterator<Item = &AccountId> {
        self.activities
            .iter()
            .chain(self.factors.iter())
            .chain(self.institutions.iter())
    }

    pub fn endogenous_len(&self) -> usize {
        self.activities.len() + self.factors.len() + self.institutions.len()
    }

    pub fn block_sizes(&self) -> [usize; 3] {
        [
            self.activities.len(),
            self.factors.len(),
            self.institutions.len(),
        ]
    }

    pub fn contains(&self, id: &AccountId) -> bool {
        self.endogenous().any(|e| e == id)
    }

    /// Exogenous accounts: the registry complement, in registry order.
    pub fn exogenous(&self, registry: &AccountRegistry) -> Vec<AccountId> {
        registry
            .iter()
            .filter(|a| !self.contains(&a.id))
            .map(|a| a.id.clone())
            .collect()
    }

    /// Checks ids exist, no account sits in two blocks, and the partition is
    /// non-empty.
    pub fn validate(&self, registry: &AccountRegistry) -> Result<(), MultiplierError> {
        if self.endogenous_len() == 0 {
            return Err(MultiplierError::EmptyPartition);
        }
        let mut seen = std::collections::HashSet::new();
        for id in self.endogenous() {
            if registry.position(id).is_none() {
                return Err(MultiplierError::UnknownAccount(id.to_string()));
            }
            if !seen.insert(id.clone()) {
                return Err(MultiplierError::DuplicateAccount(id.to_string()));
            }
        }
        Ok(())
    }
}

/// Average expenditure propensities over the endogenous set: cell (i, j)
/// divided by the payer's full column total.
#[derive(Debug, Clone, PartialEq)]
pub struct Propensities {
    pub order: Vec<AccountId>,
    pub blocks: [usize; 3],
    pub matrix: DMatrix<f64>,
}

impl Propensities {
    /// 1 minus each column sum: the per-round share leaking to exogenous
    /// accounts.
    pub fn leakages(&self) -> Vec<f64> {
        (0..self.matrix.ncols())
            .map(|j| 1.0 - self.matrix.column(j).sum())
            .collect()
    }
}

/// Computes Ann for a balanced SAM. `balance_tolerance` is the absolute
/// residual allowed per account, in the table's own unit.
pub fn propensities(
    sam: &Sam,
    partition: &Partition,
    balance_tolerance: f64,
) -> Result<Propensities, MultiplierError> {
    partition.validate(sam.registry())?;

    if let Some(worst) = sam
        .balance_residuals()
        .into_iter()
        .max_by(|a, b| a.residual.abs().total_cmp(&b.residual.abs()))
    {
        if worst.residual.abs() > balance_tolerance {
            return Err(MultiplierError::Unbalanced {
                account: worst.account.to_string(),
                residual: worst.residual,
                tolerance: balance_tolerance,
            });
        }
    }

    let order: Vec<AccountId> = partition.endogenous().cloned().collect();
    let positions: Vec<usize> = order
        .iter()
        .map(|id| sam.registry().position(id).expect("validated"))
        .collect();

    let mut col_totals = Vec::with_capacity(order.len());
    for (id, &pos) in order.iter().zip(&positions) {
        let total = sam.col_total_at(pos);
        if total <= 0.0 {
            return Err(MultiplierError::NonPositiveColumnTotal(
                id.to_string(),
                total,
            ));
        }
        col_totals.push(total);
    }

    let n = order.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        sam.cell(positions[i], positions[j]) / col_totals[j]
    });
    Ok(Propensities {
        order,
        blocks: partition.block_sizes(),
        matrix,
    })
}

/// Multiplier matrix with inversion diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierMatrix {
    pub matrix: DMatrix<f64>,
    /// 1-norm condition estimate of I - Ann.
    pub condition_estimate: f64,
    /// Spectral radius estimate when power iteration ran (some column sum
    /// reached 1), else None.
    pub spectral_radius: Option<f64>,
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Power iteration estimate of the spectral radius of a non-negative matrix.
fn power_iteration_rho(a: &DMatrix<f64>, iterations: usize, tolerance: f64) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = nalgebra::DVector::from_element(n, 1.0 / n as f64);
    let mut rho = 0.0;
    for _ in 0..iterations {
        let y = a * &x;
        let norm = y.iter().map(|v| v.abs()).sum::<f64>();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm / x.iter().map(|v| v.abs()).sum::<f64>();
        let done = (next - rho).abs() <= tolerance;
        rho = next;
        x = y / norm;
        if done {
            break;
        }
    }
    rho
}

/// Inverts I - Ann. Precondition: spectral radius below one, checked via
/// column sums and, when some column is borderline, power iteration
/// (200 rounds, tolerance 1e-10).
pub fn multiplier_matrix(propensities: &Propensities) -> Result<MultiplierMatrix, MultiplierError> {
    let a = &propensities.matrix;
    let n = a.nrows();
    let leakages = propensities.leakages();

    let offending: Vec<String> = propensities
        .order
        .iter()
        .zip(&leakages)
        .filter(|(_, l)| **l <= 1e-9)
        .map(|(id, _)| id.to_string())
        .collect();

    let mut spectral_radius = None;
    if !offending.is_empty() {
        let rho = power_iteration_rho(a, 200, 1e-10);
        spectral_radius = Some(rho);
        if rho >= 1.0 - 1e-12 {
            return Err(MultiplierError::NonConvergent {
                rho,
                columns: offending,
            });
        }
    }

    let system = DMatrix::identity(n, n) - a;
    let inverse = system
        .clone()
        .try_inverse()
        .ok_or(MultiplierError::Singular)?;
    let condition_estimate = one_norm(&system) * one_norm(&inverse);
    Ok(MultiplierMatrix {
        matrix: inverse,
        condition_estimate,
        spectral_radius,
    })
}

/// The three factors of the multiplicative decomposition:
/// `multiplier = closed_loop * open_loop * transfer`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// M1: within-block transfer effects, (I - Abd)^-1 for the block
    /// diagonal Abd of Ann.
    pub transfer: DMatrix<f64>,
    /// M2 = I + A* + A*^2 with A* = M1 (Ann - Abd): cross-block open-loop
    /// effects.
    pub open_loop: DMatrix<f64>,
    /// M3 = (I - A*^3)^-1: circular closed-loop effects.
    pub closed_loop: DMatrix<f64>,
}

impl Decomposition {
    pub fn product(&self) -> DMatrix<f64> {
        &self.closed_loop * &self.open_loop * &self.transfer
    }
}

/// Splits Ann along the partition's three blocks and builds the standard
/// multiplicative decomposition.
pub fn decompose(propensities: &Propensities) -> Result<Decomposition, MultiplierError> {
    let a = &propensities.matrix;
    let n = a.nrows();
    let [na, nf, ni] = propensities.blocks;
    debug_assert_eq!(na + nf + ni, n);

    let block_names = ["activities", "factors", "institutions"];
    let offsets = [0, na, na + nf];
    let sizes = [na, nf, ni];

    // Block-diagonal transfer matrix M1: invert each (I - Abb) in place.
    let mut transfer = DMatrix::zeros(n, n);
    for (b, (&offset, &size)) in offsets.iter().zip(sizes.iter()).enumerate() {
        if size == 0 {
            continue;
        }
        let block = a.view((offset, offset), (size, size)).into_owned();
        let inv = (DMatrix::identity(size, size) - block)
            .try_inverse()
            .ok_or_else(|| MultiplierError::SingularBlock(block_names[b].to_string()))?;
        transfer.view_mut((offset, offset), (size, size)).copy_from(&inv);
    }

    // Off-block part of Ann.
    let mut off = a.clone();
    for (&offset, &size) in offsets.iter().zip(sizes.iter()) {
        off.view_mut((offset, offset), (size, size)).fill(0.0);
    }
    let a_star = &transfer * off;
    let identity = DMatrix::identity(n, n);
    let open_loop = &identity + &a_star + &a_star * &a_star;
    let a_star_cubed = &a_star * &a_star * &a_star;
    let closed_loop = (identity - a_star_cubed)
        .try_inverse()
        .ok_or(MultiplierError::Singular)?;

    Ok(Decomposition {
        transfer,
        open_loop,
        closed_loop,
    })
}

/// Full multiplier analysis for one SAM/partition pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierResult {
    pub propensities: Propensities,
    pub multiplier: MultiplierMatrix,
    pub leakages: Vec<f64>,
    pub decomposition: Option<Decomposition>,
}

pub fn analyse(
    sam: &Sam,
    partition: &Partition,
    balance_tolerance: f64,
    with_decomposition: bool,
) -> Result<MultiplierResult, MultiplierError> {
    let props = propensities(sam, partition, balance_tolerance)?;
    let multiplier = multiplier_matrix(&props)?;
    let leakages = props.leakages();
    let decomposition = if with_decomposition {
        Some(decompose(&props)?)
    } else {
        None
    };
    Ok(MultiplierResult {
        propensities: props,
        multiplier,
        leakages,
        decomposition,
    })
}

/// Matrix with account-id labels, the serializable report form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub accounts: Vec<AccountId>,
    pub rows: Vec<Vec<f64>>,
}

impl LabeledMatrix {
    pub fn from_matrix(accounts: &[AccountId], m: &DMatrix<f64>) -> Self {
        LabeledMatrix {
            accounts: accounts.to_vec(),
            rows: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
        }
    }
}
