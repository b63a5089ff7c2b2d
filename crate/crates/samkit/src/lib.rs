//! Social accounting matrix toolkit: construction, validation, balancing
//! and fixed-price multiplier analysis of economy-wide transaction tables,
//! built around the Malaysia 2000 macro/micro account structure.
//!
//! # Layout
//!
//! - [`account`]: the 13 macro roles, accounts, tags and registries
//! - [`sam`]: the square transaction matrix and its accounting checks
//! - [`ingest`]: CSV/JSON file formats and the validation report
//! - [`aggregate`]: micro-to-macro aggregation and control-total checks
//! - [`ras`]: biproportional balancing to prescribed margins
//! - [`multiplier`]: propensities, (I - A)^-1 and its decomposition
//! - [`simulate`]: expenditure-shock incidence on household groups
//! - [`metrics`]: grouped Gini, disparity ratios, income shares
//! - [`malaysia`]: the shipped Malaysia 2000 dataset and its completion
//!   pipeline
//! - [`cli`]: the `samkit` command-line front end
//!
//! Runnable walkthroughs live in `examples/`; start with
//! `validate_malaysia` and `compare_programmes`.

pub mod account;
pub mod aggregate;
pub mod cli;
pub mod ingest;
pub mod malaysia;
pub mod metrics;
pub mod multiplier;
pub mod ras;
pub mod sam;
pub mod simulate;

pub use account::{Account, AccountCategory, AccountId, AccountRegistry, TagFilter};
pub use aggregate::{aggregate, control_total_check, AccountMapping, UnitConversion};
pub use ingest::{parse_registry, parse_sam, validate_file_set, write_registry, write_sam, ValidationReport};
pub use metrics::{disparity_ratio, gini_grouped, income_shares, GroupIncome};
pub use multiplier::{decompose, multiplier_matrix, propensities, Partition};
pub use ras::{ras_balance, RasConfig, RasOutcome};
pub use sam::{Sam, StructuralMask};
pub use simulate::{compare_programmes, injection_vector, simulate, Scenario, SimulationOptions};
