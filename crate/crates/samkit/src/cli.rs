//! Command-line front end. Subcommands mirror the analysis pipeline:
//! validate, aggregate, balance, multipliers, simulate, compare, report.
//!
//! Exit codes: 0 success, 1 validation or domain error, 2 usage error.
//! Identical inputs produce byte-identical artifacts: JSON/text reports
//! carry numbers rounded to 6 significant digits, data CSVs keep full
//! precision, and all orderings are fixed by the registry.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::account::{AccountRegistry, TagFilter};
use crate::aggregate::{self, AccountMapping, UnitConversion};
use crate::ingest;
use crate::malaysia;
use crate::multiplier::{self, LabeledMatrix, Partition};
use crate::ras::{ras_balance, RasConfig};
use crate::sam::{Sam, MACRO_BALANCE_TOL};
use crate::simulate::{self, IncidenceReport, ProgrammeComparison, SimulationOptions};

#[derive(Debug, Parser)]
#[command(
    name = "samkit",
    about = "Social accounting matrix validation, balancing and multiplier analysis",
    version
)]
pub struct RunConfig {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// SAM table CSV (unit in the corner cell).
    #[arg(long)]
    sam: PathBuf,
    /// Account registry CSV for the table.
    #[arg(long)]
    registry: PathBuf,
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    #[command(flatten)]
    table: TableArgs,
    /// Partition override file (JSON with activities/factors/institutions).
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Exclude companies from the endogenous institution block.
    #[arg(long)]
    exclude_companies: bool,
    /// Absolute balance tolerance in table units [default: 0.01 for tables
    /// in billions, 1.0 otherwise].
    #[arg(long)]
    tol_balance: Option<f64>,
    /// Population weights CSV (account_id,population). Equal weights with a
    /// report caveat when absent.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Tag filter defining the poor group [default: region=rural].
    #[arg(long)]
    poor_filter: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run census, balance, structural and sign checks over a table.
    Validate {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long)]
        tol_balance: Option<f64>,
        /// Output directory for the report artifact.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Aggregate a micro table onto a macro registry through a mapping.
    Aggregate {
        #[command(flatten)]
        table: TableArgs,
        /// micro_id,macro_id mapping CSV.
        #[arg(long)]
        mapping: PathBuf,
        /// Registry of the aggregate table.
        #[arg(long)]
        macro_registry: PathBuf,
        /// Multiply cells by this factor (mandatory when units differ).
        #[arg(long)]
        unit_factor: Option<f64>,
        /// Unit label of the aggregated table.
        #[arg(long)]
        unit: Option<String>,
        /// Compare against this control table and report discrepancies.
        #[arg(long)]
        control: Option<PathBuf>,
        /// Discrepancy tolerance for --control.
        #[arg(long, default_value_t = 1.0)]
        tol_control: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// RAS-balance a table to prescribed (or self-averaged) margins.
    Balance {
        #[command(flatten)]
        table: TableArgs,
        /// Margin targets CSV (account_id,target); defaults to the mean of
        /// each account's row and column totals.
        #[arg(long)]
        targets: Option<PathBuf>,
        /// Extra frozen cells CSV (row_id,col_id). Negative cells are
        /// always frozen.
        #[arg(long)]
        freeze: Option<PathBuf>,
        /// Convergence tolerance: absolute margin residual in table units.
        #[arg(long, default_value_t = 1e-8)]
        tol_balance: f64,
        #[arg(long, default_value_t = 20000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propensities, multiplier matrix and decomposition.
    Multipliers {
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Evaluate a scenario file and report household incidence.
    Simulate {
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Scenario JSON (name, injections, optional shares).
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Rank every public programme by an identical injection.
    Compare {
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Injection amount per programme, in table units.
        #[arg(long, default_value_t = 100.0)]
        amount: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Combined human-readable summary plus plot-ready CSV series.
    Report {
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Scenario JSON for the incidence series (optional).
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 100.0)]
        amount: f64,
        /// Output directory for the summary and CSV series.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Domain(String),
    #[error("validation failed: {0} sign violation(s); see report")]
    ValidationFailed(usize),
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_artifact(dir: &Path, name: &str, content: &str) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_registry(path: &Path) -> CliResult<Arc<AccountRegistry>> {
    let text = read(path)?;
    ingest::parse_registry(&text)
        .map(Arc::new)
        .map_err(|e| CliError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
}

fn load_table(args: &TableArgs) -> CliResult<(Arc<AccountRegistry>, Sam)> {
    let registry = load_registry(&args.registry)?;
    let text = read(&args.sam)?;
    let sam = ingest::parse_sam(&text, &registry).map_err(|e| CliError::Parse {
        path: args.sam.display().to_string(),
        message: e.to_string(),
    })?;
    Ok((registry, sam))
}

/// Balance tolerance default keyed to the declared unit: 0.01 for tables in
/// billions, 1.0 otherwise.
fn default_tolerance(sam: &Sam) -> f64 {
    if sam.unit().to_lowercase().contains("billion") {
        MACRO_BALANCE_TOL
    } else {
        crate::sam::MICRO_BALANCE_TOL
    }
}

fn load_partition(analysis: &AnalysisArgs, registry: &AccountRegistry) -> CliResult<Partition> {
    let partition = match &analysis.partition {
        Some(path) => {
            let text = read(path)?;
            serde_json::from_str(&text).map_err(|e| CliError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
        }
        None => Partition::default_for(registry, !analysis.exclude_companies),
    };
    partition
        .validate(registry)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    Ok(partition)
}

fn load_options(analysis: &AnalysisArgs, sam: &Sam) -> CliResult<SimulationOptions> {
    let weights = match &analysis.weights {
        Some(path) => {
            let text = read(path)?;
            Some(ingest::parse_weights(&text).map_err(|e| CliError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?)
        }
        None => None,
    };
    let poor_filter = match &analysis.poor_filter {
        Some(text) => TagFilter::parse(text).map_err(CliError::Domain)?,
        None => TagFilter::parse("region=rural").expect("static filter"),
    };
    Ok(SimulationOptions {
        balance_tolerance: analysis.tol_balance.unwrap_or_else(|| default_tolerance(sam)),
        weights,
        poor_filter,
    })
}

/// Rounds every number in a JSON tree to 6 significant digits; report
/// artifacts must be humane and byte-stable, not precision carriers.
fn round_report(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(rounded) = n.as_f64().and_then(|x| serde_json::Number::from_f64(sig6(x))) {
                    *n = rounded;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_report),
        Value::Object(map) => map.values_mut().for_each(round_report),
        _ => {}
    }
}

fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    // Values this small are accumulated float noise at any scale the
    // toolkit reports in; showing them as non-zero only misleads.
    if x.abs() < 1e-12 {
        return 0.0;
    }
    let exponent = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(5 - exponent);
    (x * factor).round() / factor
}

fn report_json<T: serde::Serialize>(value: &T) -> String {
    let mut tree = serde_json::to_value(value).expect("report serializes");
    round_report(&mut tree);
    let mut text = serde_json::to_string_pretty(&tree).expect("report prints");
    text.push('\n');
    text
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn csv_line(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_escape(f))
        .collect::<Vec<_>>()
        .join(",")
}

fn matrix_csv(matrix: &LabeledMatrix) -> String {
    let mut out = String::new();
    let mut header = vec![String::new()];
    header.extend(matrix.accounts.iter().map(|a| a.to_string()));
    out.push_str(&csv_line(&header));
    out.push('\n');
    for (id, row) in matrix.accounts.iter().zip(&matrix.rows) {
        let mut fields = vec![id.to_string()];
        fields.extend(row.iter().map(|v| format!("{v}")));
        out.push_str(&csv_line(&fields));
        out.push('\n');
    }
    out
}

fn incidence_csv(report: &IncidenceReport) -> String {
    let mut out = String::from("group,base,delta,pct\n");
    for h in &report.households {
        out.push_str(&csv_line(&[
            h.account.to_string(),
            format!("{}", h.base_income),
            format!("{}", h.delta),
            format!("{}", h.pct_of_base),
        ]));
        out.push('\n');
    }
    out
}

fn ranking_csv(comparison: &ProgrammeComparison) -> String {
    let mut out = String::from("rank,programme,total_household_gain,poor_group_gain,poor_share\n");
    for (k, row) in comparison.rows.iter().enumerate() {
        out.push_str(&csv_line(&[
            format!("{}", k + 1),
            row.programme.to_string(),
            format!("{}", row.total_household_gain),
            format!("{}", row.poor_group_gain),
            format!("{}", row.poor_share),
        ]));
        out.push('\n');
    }
    out
}

fn cmd_validate(
    table: &TableArgs,
    tol: Option<f64>,
    out: Option<&Path>,
    format: OutputFormat,
) -> CliResult<()> {
    let (registry, sam) = load_table(table)?;
    let tolerance = tol.unwrap_or_else(|| default_tolerance(&sam));
    let report = ingest::validate_file_set(&registry, &sam, &malaysia::structural_mask(), tolerance);
    let json = report_json(&report);
    match format {
        OutputFormat::Json => print!("{json}"),
        OutputFormat::Csv => {
            let mut text = String::from("account,row_total,col_total,residual,exceeds_tolerance\n");
            for e in &report.balance_residuals.entries {
                text.push_str(&csv_line(&[
                    e.account.to_string(),
                    format!("{}", e.row_total),
                    format!("{}", e.col_total),
                    format!("{}", e.residual),
                    format!("{}", e.residual.abs() > tolerance),
                ]));
                text.push('\n');
            }
            print!("{text}");
            if let Some(dir) = out {
                write_artifact(dir, "validation_balance.csv", &text)?;
            }
        }
    }
    if let Some(dir) = out {
        write_artifact(dir, "validation.json", &json)?;
    }
    if report.has_errors() {
        return Err(CliError::ValidationFailed(report.sign_violations.len()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_aggregate(
    table: &TableArgs,
    mapping_path: &Path,
    macro_registry_path: &Path,
    unit_factor: Option<f64>,
    unit: Option<&str>,
    control: Option<&Path>,
    tol_control: f64,
    out: Option<&Path>,
) -> CliResult<()> {
    let (registry, micro) = load_table(table)?;
    let macro_registry = load_registry(macro_registry_path)?;
    let pairs = ingest::parse_mapping(&read(mapping_path)?).map_err(|e| CliError::Parse {
        path: mapping_path.display().to_string(),
        message: e.to_string(),
    })?;
    let mapping = AccountMapping::new(pairs, &registry, &macro_registry)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let conversion = match unit_factor {
        Some(f) => UnitConversion::Factor(f),
        None => UnitConversion::SameUnit,
    };
    let target_unit = unit.unwrap_or_else(|| micro.unit());
    let aggregated = aggregate::aggregate(&micro, &mapping, &macro_registry, conversion, target_unit)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let table_text = ingest::write_sam(&aggregated);
    print!("{table_text}");
    if let Some(dir) = out {
        write_artifact(dir, "aggregated.csv", &table_text)?;
    }
    if let Some(control_path) = control {
        let control_text = read(control_path)?;
        let control_registry = load_registry(macro_registry_path)?;
        let control_sam =
            ingest::parse_sam(&control_text, &control_registry).map_err(|e| CliError::Parse {
                path: control_path.display().to_string(),
                message: e.to_string(),
            })?;
        let discrepancies =
            aggregate::control_total_check(&micro, &control_sam, &mapping, conversion, tol_control)
                .map_err(|e| CliError::Domain(e.to_string()))?;
        let json = report_json(&json!({ "control_discrepancies": discrepancies }));
        eprint!("{json}");
        if let Some(dir) = out {
            write_artifact(dir, "control_discrepancies.json", &json)?;
        }
    }
    Ok(())
}

fn cmd_balance(
    table: &TableArgs,
    targets: Option<&Path>,
    freeze: Option<&Path>,
    tol: f64,
    max_iter: usize,
    out: Option<&Path>,
) -> CliResult<()> {
    let (registry, sam) = load_table(table)?;
    let n = registry.len();

    let (row_targets, col_targets) = match targets {
        Some(path) => {
            let parsed = ingest::parse_weights(&read(path)?).map_err(|e| CliError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            let mut t = vec![0.0; n];
            for (id, value) in parsed {
                let pos = registry
                    .position(&id)
                    .ok_or_else(|| CliError::Domain(format!("unknown target account `{id}`")))?;
                t[pos] = value;
            }
            (t.clone(), t)
        }
        None => {
            let t: Vec<f64> = (0..n)
                .map(|k| 0.5 * (sam.row_total_at(k) + sam.col_total_at(k)))
                .collect();
            (t.clone(), t)
        }
    };

    let mut frozen: Vec<(usize, usize)> = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if sam.cell(r, c) < 0.0 {
                frozen.push((r, c));
            }
        }
    }
    if let Some(path) = freeze {
        for (row_id, col_id) in ingest::parse_mapping(&read(path)?).map_err(|e| CliError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })? {
            let r = registry
                .position(&row_id)
                .ok_or_else(|| CliError::Domain(format!("unknown frozen row `{row_id}`")))?;
            let c = registry
                .position(&col_id)
                .ok_or_else(|| CliError::Domain(format!("unknown frozen column `{col_id}`")))?;
            frozen.push((r, c));
        }
    }

    let auto_frozen = frozen.len();
    let config = RasConfig {
        max_iterations: max_iter,
        tolerance: tol,
        frozen,
    };
    let outcome = ras_balance(sam.cells(), n, n, &row_targets, &col_targets, &config)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let balanced = Sam::new(registry, outcome.cells.clone(), sam.unit())
        .expect("square by construction");
    let table_text = ingest::write_sam(&balanced);
    print!("{table_text}");

    let diagnostics = json!({
        "converged": outcome.converged,
        "iterations": outcome.iterations,
        "final_residual": outcome.final_residual,
        "col_targets_adjusted": outcome.col_targets_adjusted,
        "frozen_cells": auto_frozen,
        "row_factors": outcome.row_factors,
        "col_factors": outcome.col_factors,
    });
    let json_text = report_json(&diagnostics);
    eprint!("{json_text}");
    if let Some(dir) = out {
        write_artifact(dir, "balanced.csv", &table_text)?;
        write_artifact(dir, "balance_diagnostics.json", &json_text)?;
    }
    if !outcome.converged {
        return Err(CliError::Domain(format!(
            "RAS did not converge within {max_iter} iterations (residual {})",
            outcome.final_residual
        )));
    }
    Ok(())
}

fn multiplier_report(result: &multiplier::MultiplierResult) -> Value {
    let order = &result.propensities.order;
    let mut report = json!({
        "accounts": order,
        "blocks": {
            "activities": result.propensities.blocks[0],
            "factors": result.propensities.blocks[1],
            "institutions": result.propensities.blocks[2],
        },
        "leakages": order.iter().zip(&result.leakages)
            .map(|(id, l)| json!({"account": id, "leakage": l}))
            .collect::<Vec<_>>(),
        "condition_estimate": result.multiplier.condition_estimate,
        "spectral_radius": result.multiplier.spectral_radius,
        "propensities": LabeledMatrix::from_matrix(order, &result.propensities.matrix),
        "multiplier": LabeledMatrix::from_matrix(order, &result.multiplier.matrix),
    });
    if let Some(d) = &result.decomposition {
        report["decomposition"] = json!({
            "transfer": LabeledMatrix::from_matrix(order, &d.transfer),
            "open_loop": LabeledMatrix::from_matrix(order, &d.open_loop),
            "closed_loop": LabeledMatrix::from_matrix(order, &d.closed_loop),
        });
    }
    report
}

fn cmd_multipliers(
    analysis: &AnalysisArgs,
    out: Option<&Path>,
    format: OutputFormat,
) -> CliResult<()> {
    let (registry, sam) = load_table(&analysis.table)?;
    let partition = load_partition(analysis, &registry)?;
    let options = load_options(analysis, &sam)?;
    let result = multiplier::analyse(&sam, &partition, options.balance_tolerance, true)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let report = report_json(&multiplier_report(&result));
    match format {
        OutputFormat::Json => print!("{report}"),
        OutputFormat::Csv => {
            let order = &result.propensities.order;
            let text = matrix_csv(&LabeledMatrix::from_matrix(order, &result.multiplier.matrix));
            print!("{text}");
        }
    }
    if let Some(dir) = out {
        write_artifact(dir, "multipliers.json", &report)?;
        let order = &result.propensities.order;
        write_artifact(
            dir,
            "propensities.csv",
            &matrix_csv(&LabeledMatrix::from_matrix(order, &result.propensities.matrix)),
        )?;
        write_artifact(
            dir,
            "multiplier.csv",
            &matrix_csv(&LabeledMatrix::from_matrix(order, &result.multiplier.matrix)),
        )?;
    }
    Ok(())
}

fn cmd_simulate(
    analysis: &AnalysisArgs,
    scenario_path: &Path,
    out: Option<&Path>,
    format: OutputFormat,
) -> CliResult<()> {
    let (registry, sam) = load_table(&analysis.table)?;
    let partition = load_partition(analysis, &registry)?;
    let options = load_options(analysis, &sam)?;
    let scenario = ingest::parse_scenario(&read(scenario_path)?).map_err(|e| CliError::Parse {
        path: scenario_path.display().to_string(),
        message: e.to_string(),
    })?;
    let report = simulate::simulate(&sam, &partition, &scenario, &options)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let json = report_json(&report);
    let csv = incidence_csv(&report);
    match format {
        OutputFormat::Json => print!("{json}"),
        OutputFormat::Csv => print!("{csv}"),
    }
    if let Some(dir) = out {
        write_artifact(dir, "incidence.json", &json)?;
        write_artifact(dir, "incidence.csv", &csv)?;
    }
    Ok(())
}

fn cmd_compare(
    analysis: &AnalysisArgs,
    amount: f64,
    out: Option<&Path>,
    format: OutputFormat,
) -> CliResult<()> {
    let (registry, sam) = load_table(&analysis.table)?;
    let partition = load_partition(analysis, &registry)?;
    let options = load_options(analysis, &sam)?;
    let comparison = simulate::compare_programmes(&sam, &partition, amount, &options)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let json = report_json(&comparison);
    let csv = ranking_csv(&comparison);
    match format {
        OutputFormat::Json => print!("{json}"),
        OutputFormat::Csv => print!("{csv}"),
    }
    if let Some(dir) = out {
        write_artifact(dir, "ranking.json", &json)?;
        write_artifact(dir, "ranking.csv", &csv)?;
    }
    Ok(())
}

fn cmd_report(
    analysis: &AnalysisArgs,
    scenario_path: Option<&Path>,
    amount: f64,
    out: &Path,
) -> CliResult<()> {
    let (registry, sam) = load_table(&analysis.table)?;
    let partition = load_partition(analysis, &registry)?;
    let options = load_options(analysis, &sam)?;
    let tolerance = options.balance_tolerance;

    let validation =
        ingest::validate_file_set(&registry, &sam, &malaysia::structural_mask(), tolerance);
    let result = multiplier::analyse(&sam, &partition, tolerance, false)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let comparison = simulate::compare_programmes(&sam, &partition, amount, &options)
        .map_err(|e| CliError::Domain(e.to_string()))?;

    let mut leakage_csv = String::from("account,leakage\n");
    for (id, l) in result.propensities.order.iter().zip(&result.leakages) {
        leakage_csv.push_str(&csv_line(&[id.to_string(), format!("{l}")]));
        leakage_csv.push('\n');
    }
    write_artifact(out, "leakage_shares.csv", &leakage_csv)?;
    write_artifact(out, "programme_ranking.csv", &ranking_csv(&comparison))?;

    let mut summary = String::new();
    summary.push_str(&format!(
        "SAM summary  ({} accounts, unit: {})\n",
        registry.len(),
        sam.unit()
    ));
    summary.push_str(&format!(
        "grand total {}\n",
        fmt6(sam.grand_total())
    ));
    summary.push_str(&format!(
        "balance: {} account(s) beyond tolerance {}\n",
        validation.balance_residuals.violations.len(),
        tolerance
    ));
    summary.push_str(&format!(
        "structural warnings: {}, sign violations: {}\n\n",
        validation.structural_violations.len(),
        validation.sign_violations.len()
    ));
    summary.push_str(&format!(
        "programme comparison at {} per programme ({} programmes)\n",
        fmt6(amount),
        comparison.rows.len()
    ));
    summary.push_str(&format!(
        "{:<30} {:>14} {:>14} {:>10}\n",
        "programme", "household gain", "poor gain", "poor share"
    ));
    for row in &comparison.rows {
        summary.push_str(&format!(
            "{:<30} {:>14} {:>14} {:>10}\n",
            row.programme.as_str(),
            fmt6(row.total_household_gain),
            fmt6(row.poor_group_gain),
            fmt6(row.poor_share),
        ));
    }

    if let Some(path) = scenario_path {
        let scenario = ingest::parse_scenario(&read(path)?).map_err(|e| CliError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let incidence = simulate::simulate(&sam, &partition, &scenario, &options)
            .map_err(|e| CliError::Domain(e.to_string()))?;
        write_artifact(out, "incidence_by_group.csv", &incidence_csv(&incidence))?;
        summary.push_str(&format!(
            "\nscenario `{}`: injection {}, first-round leakage {}\n",
            incidence.scenario,
            fmt6(incidence.diagnostics.total_injection),
            fmt6(incidence.diagnostics.first_round_leakage),
        ));
        summary.push_str(&format!(
            "gini before {} after {}\n",
            fmt6(incidence.metrics.gini_before),
            fmt6(incidence.metrics.gini_after)
        ));
    }

    // Context constants from the national household surveys; they are not
    // derivable from the table and are reported only for orientation.
    summary.push_str(
        "\nsurvey gini series for context (not computed from this table): \
         1970 0.506, 1999 0.452, 2004 0.462, 2009 0.441\n",
    );

    write_artifact(out, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

fn fmt6(x: f64) -> String {
    format!("{}", sig6(x))
}

/// Parses `argv` and runs the requested subcommand; returns the process
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(argv) {
        Ok(config) => config,
        Err(err) => {
            // clap encodes --help/--version as "errors" with exit code 0.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    let result = match &config.command {
        Command::Validate {
            table,
            tol_balance,
            out,
            format,
        } => cmd_validate(table, *tol_balance, out.as_deref(), *format),
        Command::Aggregate {
            table,
            mapping,
            macro_registry,
            unit_factor,
            unit,
            control,
            tol_control,
            out,
        } => cmd_aggregate(
            table,
            mapping,
            macro_registry,
            *unit_factor,
            unit.as_deref(),
            control.as_deref(),
            *tol_control,
            out.as_deref(),
        ),
        Command::Balance {
            table,
            targets,
            freeze,
            tol_balance,
            max_iter,
            out,
        } => cmd_balance(
            table,
            targets.as_deref(),
            freeze.as_deref(),
            *tol_balance,
            *max_iter,
            out.as_deref(),
        ),
        Command::Multipliers {
            analysis,
            out,
            format,
        } => cmd_multipliers(analysis, out.as_deref(), *format),
        Command::Simulate {
            analysis,
            scenario,
            out,
            format,
        } => cmd_simulate(analysis, scenario, out.as_deref(), *format),
        Command::Compare {
            analysis,
            amount,
            out,
            format,
        } => cmd_compare(analysis, *amount, out.as_deref(), *format),
        Command::Report {
            analysis,
            scenario,
            amount,
            out,
        } => cmd_report(analysis, scenario.as_deref(), *amount, out),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}
