//! Expenditure-shock evaluation: map programme-level injections to an
//! exogenous demand vector, push it through the multiplier matrix, and read
//! off household-group income incidence and distribution metrics.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::account::{AccountCategory, AccountId, TagFilter};
use crate::metrics::{self, GroupIncome, MetricsError};
use crate::multiplier::{self, MultiplierError, MultiplierResult, Partition};
use crate::sam::Sam;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("scenario references unknown account `{0}`")]
    UnknownAccount(String),
    #[error("injection for `{0}` is not finite")]
    NonFiniteAmount(String),
    #[error("explicit shares for programme `{0}` sum to {1}, expected 1")]
    SharesDoNotSumToOne(String, f64),
    #[error("share target `{target}` for programme `{programme}` is not an endogenous account")]
    ShareTargetNotEndogenous { programme: String, target: String },
    #[error("programme column `{0}` is entirely zero and no explicit shares were supplied")]
    ZeroProgrammeColumn(String),
    #[error(transparent)]
    Multiplier(#[from] MultiplierError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// A named exogenous injection: programme account (or direct household
/// transfer target) to amount, with optional explicit allocation shares per
/// programme. Default allocation follows the programme's base-year column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub injections: BTreeMap<AccountId, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shares: Option<BTreeMap<AccountId, BTreeMap<AccountId, f64>>>,
}

impl Scenario {
    pub fn single(name: &str, account: impl Into<AccountId>, amount: f64) -> Scenario {
        let mut injections = BTreeMap::new();
        injections.insert(account.into(), amount);
        Scenario {
            name: name.to_string(),
            injections,
            shares: None,
        }
    }

    pub fn total_injection(&self) -> f64 {
        self.injections.values().sum()
    }

    /// Scenario with every injection multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Scenario {
        Scenario {
            name: self.name.clone(),
            injections: self
                .injections
                .iter()
                .map(|(k, v)| (k.clone(), v * alpha))
                .collect(),
            shares: self.shares.clone(),
        }
    }
}

/// Exogenous demand change over the endogenous accounts, in partition block
/// order. Shares for a programme default to its base-SAM column proportions
/// (cell over full column total) restricted to endogenous rows, so the
/// import/tax content of programme spending leaks in the first round;
/// explicit shares must sum to one and land entirely on endogenous accounts.
pub fn injection_vector(
    scenario: &Scenario,
    sam: &Sam,
    partition: &Partition,
) -> Result<Vec<f64>, SimulateError> {
    let order: Vec<AccountId> = partition.endogenous().cloned().collect();
    let index_of: BTreeMap<&AccountId, usize> =
        order.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let mut delta = vec![0.0; order.len()];

    for (account, &amount) in &scenario.injections {
        if !amount.is_finite() {
            return Err(SimulateError::NonFiniteAmount(account.to_string()));
        }
        let pos = sam
            .registry()
            .position(account)
            .ok_or_else(|| SimulateError::UnknownAccount(account.to_string()))?;

        if let Some(&k) = index_of.get(account) {
            // Direct transfer onto an endogenous account (e.g. a household).
            delta[k] += amount;
            continue;
        }

        let explicit = scenario.shares.as_ref().and_then(|s| s.get(account));
        if let Some(shares) = explicit {
            let sum: f64 = shares.values().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(SimulateError::SharesDoNotSumToOne(account.to_string(), sum));
            }
            for (target, share) in shares {
                let k = index_of.get(target).copied().ok_or_else(|| {
                    SimulateError::ShareTargetNotEndogenous {
                        programme: account.to_string(),
                        target: target.to_string(),
                    }
                })?;
                delta[k] += amount * share;
            }
        } else {
            let col_total = sam.col_total_at(pos);
            if col_total == 0.0 {
                return Err(SimulateError::ZeroProgrammeColumn(account.to_string()));
            }
            for (k, id) in order.iter().enumerate() {
                let row = sam.registry().position(id).expect("validated partition");
                delta[k] += amount * sam.cell(row, pos) / col_total;
            }
        }
    }
    Ok(delta)
}

/// Per-household-group effect of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdIncidence {
    pub account: AccountId,
    pub base_income: f64,
    pub delta: f64,
    pub pct_of_base: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionMetrics {
    pub gini_before: f64,
    pub gini_after: f64,
    pub poor_share_of_gain: f64,
    /// Set when no weights file was supplied: every group was given weight
    /// one, which is almost certainly not the true population split.
    pub equal_weights_assumed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidenceDiagnostics {
    pub total_injection: f64,
    pub endogenous_injection: f64,
    /// Injection share flowing straight to exogenous accounts in the first
    /// round (imports, taxes embedded in programme purchases).
    pub first_round_leakage: f64,
}

/// Full result of one scenario evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidenceReport {
    pub scenario: String,
    pub unit: String,
    pub delta_endogenous: Vec<(AccountId, f64)>,
    pub households: Vec<HouseholdIncidence>,
    /// Household accounts ranked by absolute income gain, largest first,
    /// ties broken by account id.
    pub ranking: Vec<AccountId>,
    pub metrics: DistributionMetrics,
    pub diagnostics: IncidenceDiagnostics,
}

/// Knobs shared by `simulate` and `compare_programmes`.
#[derive(Debug, Clone)]
pub struct SimulationOptions {
    pub balance_tolerance: f64,
    /// Population weights per household account; equal weights when absent.
    pub weights: Option<BTreeMap<AccountId, f64>>,
    /// Defines the poor group for incidence shares. Default: rural region.
    pub poor_filter: TagFilter,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            balance_tolerance: crate::sam::MICRO_BALANCE_TOL,
            weights: None,
            poor_filter: TagFilter::parse("region=rural").expect("static filter"),
        }
    }
}

fn household_groups(
    sam: &Sam,
    partition: &Partition,
    weights: &Option<BTreeMap<AccountId, f64>>,
    deltas: Option<&BTreeMap<AccountId, f64>>,
) -> Vec<GroupIncome> {
    partition
        .institutions
        .iter()
        .filter_map(|id| {
            let account = sam.registry().by_id(id)?;
            if account.category != AccountCategory::Household {
                return None;
            }
            let base = sam.row_total(id).expect("validated partition");
            let delta = deltas.and_then(|d| d.get(id)).copied().unwrap_or(0.0);
            let weight = weights
                .as_ref()
                .and_then(|w| w.get(id))
                .copied()
                .unwrap_or(1.0);
            Some(GroupIncome::new(id.clone(), base + delta, weight))
        })
        .collect()
}

fn incidence_from_delta(
    sam: &Sam,
    partition: &Partition,
    result: &MultiplierResult,
    scenario: &Scenario,
    delta_x: &[f64],
    options: &SimulationOptions,
) -> Result<IncidenceReport, SimulateError> {
    let order = &result.propensities.order;
    let delta_y = &result.multiplier.matrix * DVector::from_column_slice(delta_x);

    let delta_by_account: BTreeMap<AccountId, f64> = order
        .iter()
        .cloned()
        .zip(delta_y.iter().copied())
        .collect();

    let mut households = Vec::new();
    for id in &partition.institutions {
        let account = sam
            .registry()
            .by_id(id)
            .ok_or_else(|| SimulateError::UnknownAccount(id.to_string()))?;
        if account.category != AccountCategory::Household {
            continue;
        }
        let base_income = sam.row_total(id).expect("validated partition");
        let delta = delta_by_account.get(id).copied().unwrap_or(0.0);
        let pct_of_base = if base_income != 0.0 {
            100.0 * delta / base_income
        } else {
            0.0
        };
        households.push(HouseholdIncidence {
            account: id.clone(),
            base_income,
            delta,
            pct_of_base,
        });
    }

    let mut ranking: Vec<&HouseholdIncidence> = households.iter().collect();
    ranking.sort_by(|a, b| {
        b.delta
            .total_cmp(&a.delta)
            .then_with(|| a.account.cmp(&b.account))
    });
    let ranking: Vec<AccountId> = ranking.into_iter().map(|h| h.account.clone()).collect();

    let before = household_groups(sam, partition, &options.weights, None);
    let after = household_groups(sam, partition, &options.weights, Some(&delta_by_account));
    let gini_before = metrics::gini_grouped(&before)?;
    let gini_after = metrics::gini_grouped(&after)?;

    let total_gain: f64 = households.iter().map(|h| h.delta).sum();
    let poor_gain: f64 = households
        .iter()
        .filter(|h| {
            sam.registry()
                .by_id(&h.account)
                .map(|a| options.poor_filter.matches(a))
                .unwrap_or(false)
        })
        .map(|h| h.delta)
        .sum();
    let poor_share_of_gain = if total_gain != 0.0 {
        poor_gain / total_gain
    } else {
        0.0
    };

    let total_injection = scenario.total_injection();
    let endogenous_injection: f64 = delta_x.iter().sum();
    Ok(IncidenceReport {
        scenario: scenario.name.clone(),
        unit: sam.unit().to_string(),
        delta_endogenous: order
            .iter()
            .cloned()
            .zip(delta_y.iter().copied())
            .collect(),
        households,
        ranking,
        metrics: DistributionMetrics {
            gini_before,
            gini_after,
            poor_share_of_gain,
            equal_weights_assumed: options.weights.is_none(),
        },
        diagnostics: IncidenceDiagnostics {
            total_injection,
            endogenous_injection,
            first_round_leakage: total_injection - endogenous_injection,
        },
    })
}

/// Evaluates one scenario end to end.
pub fn simulate(
    sam: &Sam,
    partition: &Partition,
    scenario: &Scenario,
    options: &SimulationOptions,
) -> Result<IncidenceReport, SimulateError> {
    let result = multiplier::analyse(sam, partition, options.balance_tolerance, false)?;
    let delta_x = injection_vector(scenario, sam, partition)?;
    incidence_from_delta(sam, partition, &result, scenario, &delta_x, options)
}

/// One programme's outcome in a comparison run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgrammeOutcome {
    pub programme: AccountId,
    pub total_household_gain: f64,
    pub poor_group_gain: f64,
    pub poor_share: f64,
}

/// Programme ranking table: identical injections pushed through every
/// public current-expenditure and capital-investment account.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgrammeComparison {
    pub amount: f64,
    pub unit: String,
    /// Ordered by poor-group gain, largest first; ties broken by id.
    pub rows: Vec<ProgrammeOutcome>,
}

/// Runs `simulate` with the same injection amount for every programme
/// account (all PublicCurrentExpenditure and PublicCapitalInvestment
/// accounts, in registry order) and ranks them by poor-group gain.
pub fn compare_programmes(
    sam: &Sam,
    partition: &Partition,
    amount: f64,
    options: &SimulationOptions,
) -> Result<ProgrammeComparison, SimulateError> {
    let result = multiplier::analyse(sam, partition, options.balance_tolerance, false)?;
    let mut rows = Vec::new();
    for account in sam.registry().iter() {
        if !matches!(
            account.category,
            AccountCategory::PublicCurrentExpenditure | AccountCategory::PublicCapitalInvestment
        ) {
            continue;
        }
        let scenario = Scenario::single(account.id.as_str(), account.id.clone(), amount);
        let delta_x = injection_vector(&scenario, sam, partition)?;
        let report = incidence_from_delta(sam, partition, &result, &scenario, &delta_x, options)?;
        let total: f64 = report.households.iter().map(|h| h.delta).sum();
        let poor: f64 = total * report.metrics.poor_share_of_gain;
        rows.push(ProgrammeOutcome {
            programme: account.id.clone(),
            total_household_gain: total,
            poor_group_gain: poor,
            poor_share: report.metrics.poor_share_of_gain,
        });
    }
    rows.sort_by(|a, b| {
        b.poor_group_gain
            .total_cmp(&a.poor_group_gain)
            .then_with(|| a.programme.cmp(&b.programme))
    });
    Ok(ProgrammeComparison {
        amount,
        unit: sam.unit().to_string(),
        rows,
    })
}
