//! Distribution statistics over household-group incomes. Groups are coarse,
//! so the Gini here is the between-group form over per-capita group means;
//! within-group inequality is not observable from a SAM.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::account::{Account, AccountId, TagFilter};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no groups supplied")]
    Empty,
    #[error("group `{0}` has non-positive weight {1}")]
    NonPositiveWeight(String, f64),
    #[error("group `{0}` has non-finite income")]
    NonFiniteIncome(String),
    #[error("total income is zero")]
    ZeroTotalIncome,
    #[error("tag filter `{0}` matches no group")]
    EmptyFilterMatch(String),
    #[error("denominator group has zero per-capita income")]
    ZeroDenominator,
}

/// One household group: total income plus an exogenous population weight
/// (head count or share — any positive scale).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupIncome {
    pub account: AccountId,
    pub income: f64,
    pub weight: f64,
}

impl GroupIncome {
    pub fn new(account: impl Into<AccountId>, income: f64, weight: f64) -> Self {
        GroupIncome {
            account: account.into(),
            income,
            weight,
        }
    }

    pub fn per_capita(&self) -> f64 {
        self.income / self.weight
    }
}

fn check(groups: &[GroupIncome]) -> Result<(), MetricsError> {
    if groups.is_empty() {
        return Err(MetricsError::Empty);
    }
    for g in groups {
        if !g.income.is_finite() {
            return Err(MetricsError::NonFiniteIncome(g.account.to_string()));
        }
        if !g.weight.is_finite() || g.weight <= 0.0 {
            return Err(MetricsError::NonPositiveWeight(g.account.to_string(), g.weight));
        }
    }
    Ok(())
}

/// Between-group Gini coefficient of the discrete distribution that assigns
/// each group's per-capita income to its population mass:
/// G = sum_ij w_i w_j |mu_i - mu_j| / (2 W^2 mu_bar).
pub fn gini_grouped(groups: &[GroupIncome]) -> Result<f64, MetricsError> {
    check(groups)?;
    let total_weight: f64 = groups.iter().map(|g| g.weight).sum();
    let total_income: f64 = groups.iter().map(|g| g.income).sum();
    if total_income == 0.0 {
        return Err(MetricsError::ZeroTotalIncome);
    }
    let mean = total_income / total_weight;
    let mut pairwise = 0.0;
    for gi in groups {
        for gj in groups {
            pairwise += gi.weight * gj.weight * (gi.per_capita() - gj.per_capita()).abs();
        }
    }
    Ok(pairwise / (2.0 * total_weight * total_weight * mean))
}

/// Ratio of weighted per-capita mean incomes between two tag-filtered sets
/// of groups (e.g. chinese vs malay, urban vs rural).
pub fn disparity_ratio(
    accounts: &[Account],
    groups: &[GroupIncome],
    numerator: &TagFilter,
    denominator: &TagFilter,
) -> Result<f64, MetricsError> {
    check(groups)?;
    let mean_of = |filter: &TagFilter| -> Result<f64, MetricsError> {
        let mut income = 0.0;
        let mut weight = 0.0;
        for g in groups {
            let account = accounts
                .iter()
                .find(|a| a.id == g.account)
                .ok_or_else(|| MetricsError::EmptyFilterMatch(filter.to_string()))?;
            if filter.matches(account) {
                income += g.income;
                weight += g.weight;
            }
        }
        if weight == 0.0 {
            return Err(MetricsError::EmptyFilterMatch(filter.to_string()));
        }
        Ok(income / weight)
    };
    let num = mean_of(numerator)?;
    let den = mean_of(denominator)?;
    if den == 0.0 {
        return Err(MetricsError::ZeroDenominator);
    }
    Ok(num / den)
}

/// Income shares summing to one.
pub fn income_shares(groups: &[GroupIncome]) -> Result<Vec<(AccountId, f64)>, MetricsError> {
    check(groups)?;
    let total: f64 = groups.iter().map(|g| g.income).sum();
    if total == 0.0 {
        return Err(MetricsError::ZeroTotalIncome);
    }
    Ok(groups
        .iter()
        .map(|g| (g.account.clone(), g.income / total))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::account::AccountCategory;

    fn equal_weight(incomes: &[f64]) -> Vec<GroupIncome> {
        incomes
            .iter()
            .enumerate()
            .map(|(i, &x)| GroupIncome::new(format!("g{i}"), x, 1.0))
            .collect()
    }

    #[test]
    fn equal_incomes_give_zero() {
        let g = equal_weight(&[5.0, 5.0, 5.0, 5.0]);
        assert_eq!(gini_grouped(&g).unwrap(), 0.0);
    }

    #[test]
    fn two_group_zero_one_case_is_half() {
        // Pairwise formula by hand: 2*|0-1| / (2 * 4 * 0.5) = 0.5.
        let g = equal_weight(&[0.0, 1.0]);
        assert!((gini_grouped(&g).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_owner_closed_form() {
        // One of n equal-weight groups owns everything: G = (n-1)/n.
        for n in [2usize, 5, 9] {
            let mut incomes = vec![0.0; n];
            incomes[n - 1] = 1.0;
            let g = equal_weight(&incomes);
            let expected = (n as f64 - 1.0) / n as f64;
            assert!((gini_grouped(&g).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn scale_invariance_is_exact() {
        let g = equal_weight(&[1.0, 4.0, 2.5, 9.0]);
        let scaled: Vec<GroupIncome> = g
            .iter()
            .map(|x| GroupIncome::new(x.account.clone(), x.income * 8.0, x.weight))
            .collect();
        assert_eq!(gini_grouped(&g).unwrap(), gini_grouped(&scaled).unwrap());
    }

    #[test]
    fn permutation_invariance() {
        let g = equal_weight(&[1.0, 4.0, 2.5, 9.0]);
        let mut reversed = g.clone();
        reversed.reverse();
        assert_eq!(gini_grouped(&g).unwrap(), gini_grouped(&reversed).unwrap());
    }

    #[test]
    fn bounds_and_errors() {
        assert_eq!(gini_grouped(&[]).unwrap_err(), MetricsError::Empty);
        let zero = equal_weight(&[0.0, 0.0]);
        assert_eq!(gini_grouped(&zero).unwrap_err(), MetricsError::ZeroTotalIncome);
        let bad = vec![GroupIncome::new("g", 1.0, 0.0)];
        assert!(matches!(
            gini_grouped(&bad).unwrap_err(),
            MetricsError::NonPositiveWeight(_, _)
        ));
        let g = equal_weight(&[0.0, 0.0, 0.0, 1.0]);
        let v = gini_grouped(&g).unwrap();
        assert!((0.0..1.0).contains(&v));
    }

    #[test]
    fn pigou_dalton_transfer_does_not_increase_gini() {
        let g = equal_weight(&[1.0, 4.0, 2.5, 9.0]);
        let before = gini_grouped(&g).unwrap();
        // Transfer from the richest to the poorest without rank reversal.
        let mut after = g.clone();
        after[3].income -= 0.5;
        after[0].income += 0.5;
        let after_v = gini_grouped(&after).unwrap();
        assert!(after_v <= before + 1e-12);
    }

    fn tagged_accounts() -> Vec<Account> {
        vec![
            Account::new("rm", "Rural Malay", AccountCategory::Household)
                .with_tag("region", "rural")
                .with_tag("ethnicity", "malay"),
            Account::new("uc", "Urban Chinese", AccountCategory::Household)
                .with_tag("region", "urban")
                .with_tag("ethnicity", "chinese"),
            Account::new("um", "Urban Malay", AccountCategory::Household)
                .with_tag("region", "urban")
                .with_tag("ethnicity", "malay"),
        ]
    }

    #[test]
    fn disparity_ratio_cases() {
        let accounts = tagged_accounts();
        let groups = vec![
            GroupIncome::new("rm", 10.0, 2.0),
            GroupIncome::new("uc", 22.5, 1.5),
            GroupIncome::new("um", 20.0, 2.0),
        ];
        let malay = TagFilter::parse("ethnicity=malay").unwrap();
        let chinese = TagFilter::parse("ethnicity=chinese").unwrap();
        // Malay per-capita: 30/4 = 7.5; chinese: 22.5/1.5 = 15 -> ratio 2.
        let r = disparity_ratio(&accounts, &groups, &chinese, &malay).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        // Same filter on both sides is exactly one.
        let same = disparity_ratio(&accounts, &groups, &malay, &malay).unwrap();
        assert_eq!(same, 1.0);
        // Construct chinese at exactly 1.5x the malay per-capita of 7.5.
        let adjusted = vec![
            GroupIncome::new("rm", 10.0, 2.0),
            GroupIncome::new("uc", 16.875, 1.5),
            GroupIncome::new("um", 20.0, 2.0),
        ];
        let r = disparity_ratio(&accounts, &adjusted, &chinese, &malay).unwrap();
        assert!((r - 1.5).abs() < 1e-12);
        // Urban vs rural at 2x: urban per-capita 42.5/3.5, rural 10/2 = 5.
        let urban = TagFilter::parse("region=urban").unwrap();
        let rural = TagFilter::parse("region=rural").unwrap();
        let groups2 = vec![
            GroupIncome::new("rm", 10.0, 2.0),
            GroupIncome::new("uc", 20.0, 1.5),
            GroupIncome::new("um", 15.0, 2.0),
        ];
        let r = disparity_ratio(&accounts, &groups2, &urban, &rural).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        // Filter matching nothing errors.
        let none = TagFilter::parse("region=offshore").unwrap();
        assert!(disparity_ratio(&accounts, &groups, &none, &malay).is_err());
    }

    #[test]
    fn shares_normalize_to_one() {
        let single = vec![GroupIncome::new("g", 7.0, 1.0)];
        assert_eq!(income_shares(&single).unwrap()[0].1, 1.0);

        let nine = equal_weight(&[3.0; 9]);
        for (_, share) in income_shares(&nine).unwrap() {
            assert!((share - 1.0 / 9.0).abs() < 1e-15);
        }

        let random = equal_weight(&[0.3, 7.1, 2.9, 11.0, 0.07]);
        let total: f64 = random.iter().map(|g| g.income).sum();
        let shares = income_shares(&random).unwrap();
        let sum: f64 = shares.iter().map(|(_, s)| s).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for ((_, share), g) in shares.iter().zip(random.iter()) {
            assert!((share - g.income / total).abs() < 1e-15);
        }
    }
}
