//! Account taxonomy: the 13 macro roles, individual accounts with
//! classification tags, and the ordered registry shared by every matrix.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The 13 macro roles. Every account, micro or macro, plays exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountCategory {
    ProductionSector,
    FactorOfProduction,
    Household,
    Company,
    PublicCurrentExpenditure,
    PublicCapitalInvestment,
    IndirectTax,
    PublicCurrent,
    PublicCapital,
    PrivateCapital,
    ChangesInInventory,
    RowCurrent,
    RowCapital,
}

impl AccountCategory {
    /// All categories in macro-table band order.
    pub const ALL: [AccountCategory; 13] = [
        AccountCategory::ProductionSector,
        AccountCategory::FactorOfProduction,
        AccountCategory::Household,
        AccountCategory::Company,
        AccountCategory::PublicCurrentExpenditure,
        AccountCategory::PublicCapitalInvestment,
        AccountCategory::IndirectTax,
        AccountCategory::PublicCurrent,
        AccountCategory::PublicCapital,
        AccountCategory::PrivateCapital,
        AccountCategory::ChangesInInventory,
        AccountCategory::RowCurrent,
        AccountCategory::RowCapital,
    ];

    /// Token used in registry files.
    pub fn token(self) -> &'static str {
        match self {
            AccountCategory::ProductionSector => "production_sector",
            AccountCategory::FactorOfProduction => "factor_of_production",
            AccountCategory::Household => "household",
            AccountCategory::Company => "company",
            AccountCategory::PublicCurrentExpenditure => "public_current_expenditure",
            AccountCategory::PublicCapitalInvestment => "public_capital_investment",
            AccountCategory::IndirectTax => "indirect_tax",
            AccountCategory::PublicCurrent => "public_current",
            AccountCategory::PublicCapital => "public_capital",
            AccountCategory::PrivateCapital => "private_capital",
            AccountCategory::ChangesInInventory => "changes_in_inventory",
            AccountCategory::RowCurrent => "row_current",
            AccountCategory::RowCapital => "row_capital",
        }
    }

    pub fn parse_token(token: &str) -> Option<AccountCategory> {
        Self::ALL.iter().copied().find(|c| c.token() == token)
    }

    /// Bands in which negative transaction values are tolerated.
    /// Everywhere else a negative cell is a sign violation.
    pub fn allows_negative(self) -> bool {
        matches!(
            self,
            AccountCategory::PrivateCapital
                | AccountCategory::PublicCapital
                | AccountCategory::ChangesInInventory
                | AccountCategory::RowCurrent
                | AccountCategory::RowCapital
        )
    }
}

impl fmt::Display for AccountCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Short unique token identifying an account within a registry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(pub String);

impl AccountId {
    pub fn new(id: impl Into<String>) -> Self {
        AccountId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AccountId {
    fn from(s: &str) -> Self {
        AccountId(s.to_string())
    }
}

impl From<String> for AccountId {
    fn from(s: String) -> Self {
        AccountId(s)
    }
}

/// One account: identity, display name, macro role and classification tags.
///
/// Tags are free-form `key=value` labels. Canonical usage: households carry
/// `region` (rural/urban/none) and `ethnicity`; public expenditure and
/// investment accounts carry `programme`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Account {
    pub id: AccountId,
    pub name: String,
    pub category: AccountCategory,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tags: BTreeMap<String, String>,
}

impl Account {
    pub fn new(id: &str, name: &str, category: AccountCategory) -> Self {
        Account {
            id: AccountId::new(id),
            name: name.to_string(),
            category,
            tags: BTreeMap::new(),
        }
    }

    pub fn with_tag(mut self, key: &str, value: &str) -> Self {
        self.tags.insert(key.to_string(), value.to_string());
        self
    }

    pub fn tag(&self, key: &str) -> Option<&str> {
        self.tags.get(key).map(|s| s.as_str())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RegistryError {
    #[error("duplicate account id `{0}`")]
    DuplicateId(String),
    #[error("unknown account id `{0}`")]
    UnknownId(String),
}

/// Ordered, immutable set of accounts. Order is significant: matrices,
/// reports and files all follow registry order.
#[derive(Debug, Clone, PartialEq)]
pub struct AccountRegistry {
    accounts: Vec<Account>,
    index: HashMap<AccountId, usize>,
}

impl AccountRegistry {
    pub fn new(accounts: Vec<Account>) -> Result<Self, RegistryError> {
        let mut index = HashMap::with_capacity(accounts.len());
        for (pos, account) in accounts.iter().enumerate() {
            if index.insert(account.id.clone(), pos).is_some() {
                return Err(RegistryError::DuplicateId(account.id.to_string()));
            }
        }
        Ok(AccountRegistry { accounts, index })
    }

    pub fn len(&self) -> usize {
        self.accounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty()
    }

    pub fn accounts(&self) -> &[Account] {
        &self.accounts
    }

    pub fn iter(&self) -> impl Iterator<Item = &Account> {
        self.accounts.iter()
    }

    pub fn get(&self, pos: usize) -> &Account {
        &self.accounts[pos]
    }

    pub fn position(&self, id: &AccountId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &AccountId) -> Result<usize, RegistryError> {
        self.position(id)
            .ok_or_else(|| RegistryError::UnknownId(id.to_string()))
    }

    pub fn by_id(&self, id: &AccountId) -> Option<&Account> {
        self.position(id).map(|pos| &self.accounts[pos])
    }

    /// Accounts of one category, in registry order.
    pub fn of_category(&self, category: AccountCategory) -> Vec<&Account> {
        self.accounts
            .iter()
            .filter(|a| a.category == category)
            .collect()
    }

    /// Count of accounts per category, in band order.
    pub fn census(&self) -> Vec<(AccountCategory, usize)> {
        AccountCategory::ALL
            .iter()
            .map(|&c| (c, self.accounts.iter().filter(|a| a.category == c).count()))
            .collect()
    }

    /// The canonical micro census: 51 accounts split
    /// 18/1/9/1/7/7/2/1/1/1/1/1/1 across the band order, with every
    /// household carrying region and ethnicity tags.
    pub fn is_canonical_micro(&self) -> bool {
        const EXPECTED: [usize; 13] = [18, 1, 9, 1, 7, 7, 2, 1, 1, 1, 1, 1, 1];
        if self.len() != 51 {
            return false;
        }
        let counts: Vec<usize> = self.census().iter().map(|(_, n)| *n).collect();
        if counts != EXPECTED {
            return false;
        }
        self.of_category(AccountCategory::Household)
            .iter()
            .all(|h| h.tag("region").is_some() && h.tag("ethnicity").is_some())
    }

    /// The canonical macro layout: 13 accounts, one per category, in band order.
    pub fn is_canonical_macro(&self) -> bool {
        self.len() == 13
            && self
                .accounts
                .iter()
                .zip(AccountCategory::ALL.iter())
                .all(|(a, &c)| a.category == c)
    }
}

/// Conjunction of `key=value` tag requirements, used to select account
/// groups (e.g. `region=rural` for the poor-group filter).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagFilter {
    pub requirements: Vec<(String, String)>,
}

impl TagFilter {
    pub fn new(requirements: Vec<(String, String)>) -> Self {
        TagFilter { requirements }
    }

    /// Parses `key=value` pairs separated by `;` or `,`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut requirements = Vec::new();
        for part in text.split([';', ',']) {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("tag filter term `{part}` is not key=value"))?;
            requirements.push((key.trim().to_string(), value.trim().to_string()));
        }
        Ok(TagFilter { requirements })
    }

    pub fn matches(&self, account: &Account) -> bool {
        self.requirements
            .iter()
            .all(|(k, v)| account.tag(k) == Some(v.as_str()))
    }
}

impl fmt::Display for TagFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .requirements
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        f.write_str(&terms.join(";"))
    }
}
