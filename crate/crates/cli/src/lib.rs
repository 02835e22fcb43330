//! Command-line driver: argument parsing, configuration files and dispatch.
//!
//! [`run_cli`] is the whole program minus process exit, so tests can drive it
//! with an argument vector and inspect the two output streams.

mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gigecon_core::experiments::{sweep, ExperimentError};
use gigecon_core::foc::{
    discrepancy_report, residuals, strict_solve, CandidateState, CoStateWeight, FocError, StrictOptions,
};
use gigecon_core::statics::{agreement_report, analytic_tfp_derivatives, erratum_report, fd_derivatives};
use gigecon_core::steady_state::{level_path, solve_with_constants};
use gigecon_core::tables::reproduce;
use gigecon_core::{
    compute_constants, predict_signs, sign_constants, AuxiliaryConstants, CapitalWeight, ConsumptionFormula,
    EconomyParams, ParamError, ParamField, RawParams, ReproductionTolerances, Sector, StaticsError, TableId,
    ValidationErrors, VariantPolicy,
};
use serde::Deserialize;
use thiserror::Error;

pub use output::Format;

#[derive(Debug, Parser)]
#[command(name = "gigecon", version, about = "Steady states of a two-sector growth model with a gig sector")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML file with the flat parameter keys and optional [policy], [solver]
    /// and [output] sections. Without it the Table-1 baseline is used.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one parameter, e.g. `--set A_p=1.02`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long, global = true, value_enum)]
    pub capital_weight: Option<CapitalWeightArg>,
    #[arg(long, global = true, value_enum)]
    pub consumption: Option<ConsumptionArg>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Diagnostics (solver trace, constants) on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CapitalWeightArg {
    PaperDisplay,
    TableConsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConsumptionArg {
    PaperDisplay,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoStateArg {
    B1,
    A2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form steady state.
    Solve {
        /// Also report aggregate levels at this time.
        #[arg(long)]
        time: Option<f64>,
    },
    /// Strict Newton solve of the first-order conditions, compared with the closed form.
    Verify(VerifyArgs),
    /// Sign constants and TFP derivatives, analytic and finite-difference.
    Statics(StaticsArgs),
    /// Solve over a grid of parameter values and classify each output's trend.
    Sweep(SweepArgs),
    /// Recompute a published table and compare it cell by cell.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Convergence threshold on the relative residual sup-norm [default: 1e-12].
    #[arg(long)]
    pub tol: Option<f64>,
    /// [default: 200]
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Relative step of the finite-difference Jacobian [default: 1e-7].
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Output elasticity weighting gig output in the co-state condition [default: b1].
    #[arg(long, value_enum)]
    pub co_state_weight: Option<CoStateArg>,
}

#[derive(Debug, Args)]
pub struct StaticsArgs {
    /// Relative step of the central differences [default: 1e-5].
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Relative tolerance for analytic/finite-difference agreement [default: 1e-6].
    #[arg(long)]
    pub agreement_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated parameter keys varied together.
    #[arg(long, value_delimiter = ',', required = true)]
    pub fields: Vec<String>,
    /// One grid point: a comma-separated value per field. Repeatable.
    #[arg(long = "point", value_name = "V1,V2,...")]
    pub points: Vec<String>,
    /// Shorthand for a single field: each value is one grid point.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub table: u8,
    /// Absolute tolerance for Table-1 cells [default: 0.005].
    #[arg(long)]
    pub table1_abs: Option<f64>,
    /// Relative tolerance for Table-2 cells with six or more significant digits [default: 1e-4].
    #[arg(long)]
    pub table2_precise_rel: Option<f64>,
    /// Relative tolerance for abbreviated Table-2 cells [default: 0.05].
    #[arg(long)]
    pub table2_abbreviated_rel: Option<f64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Config(#[from] toml::de::Error),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("invalid override {0:?}: expected KEY=VALUE with a numeric value")]
    BadOverride(String),
    #[error("invalid parameters: {0}")]
    Invalid(#[from] ValidationErrors),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("invalid grid point {0:?}")]
    BadPoint(String),
    #[error("parameters are {0}")]
    Infeasible(gigecon_core::FeasibilityReport),
    #[error(transparent)]
    Statics(StaticsError),
    #[error(transparent)]
    Foc(#[from] FocError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Infeasible(_) => exit::INFEASIBLE,
            CliError::Foc(_) => exit::NOT_CONVERGED,
            CliError::Statics(StaticsError::Infeasible(_) | StaticsError::PerturbationInfeasible { .. }) => {
                exit::INFEASIBLE
            }
            _ => exit::INVALID,
        }
    }
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const INFEASIBLE: i32 = 2;
    pub const INVALID: i32 = 3;
    pub const NOT_CONVERGED: i32 = 4;
    pub const MISMATCH: i32 = 5;
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicySection {
    capital_weight: Option<CapitalWeight>,
    consumption: Option<ConsumptionFormula>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    tol: Option<f64>,
    max_iter: Option<usize>,
    fd_step: Option<f64>,
    co_state_weight: Option<CoStateWeight>,
    statics_fd_step: Option<f64>,
    agreement_tol: Option<f64>,
    table1_abs: Option<f64>,
    table2_precise_rel: Option<f64>,
    table2_abbreviated_rel: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    format: Option<Format>,
}

/// Parsed configuration file.
#[derive(Debug, Default)]
struct ConfigFile {
    params: Option<RawParams>,
    policy: PolicySection,
    solver: SolverSection,
    output: OutputSection,
}

fn section<T: for<'de> Deserialize<'de> + Default>(table: &mut toml::Table, name: &str) -> Result<T, CliError> {
    match table.remove(name) {
        Some(value) => Ok(value.try_into()?),
        None => Ok(T::default()),
    }
}

fn parse_config(doc: &str) -> Result<ConfigFile, CliError> {
    let mut table: toml::Table = doc.parse()?;
    let policy = section(&mut table, "policy")?;
    let solver = section(&mut table, "solver")?;
    let output = section(&mut table, "output")?;
    let params = if table.is_empty() { None } else { Some(toml::Value::Table(table).try_into()?) };
    Ok(ConfigFile { params, policy, solver, output })
}

fn read_config(path: &Path) -> Result<ConfigFile, CliError> {
    let doc = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    parse_config(&doc)
}

fn parse_override(spec: &str) -> Result<(ParamField, f64), CliError> {
    let (key, value) = spec.split_once('=').ok_or_else(|| CliError::BadOverride(spec.to_owned()))?;
    let field: ParamField = key.trim().parse()?;
    let value: f64 = value.trim().parse().map_err(|_| CliError::BadOverride(spec.to_owned()))?;
    Ok((field, value))
}

/// Tolerances and step sizes of the numerical checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticsOptions {
    pub fd_step: f64,
    pub agreement_tol: f64,
}

impl Default for StaticsOptions {
    fn default() -> Self {
        StaticsOptions { fd_step: 1e-5, agreement_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandConfig {
    Solve { time: Option<f64> },
    Verify,
    Statics,
    Sweep { fields: Vec<ParamField>, grid: Vec<Vec<f64>> },
    Reproduce { table: TableId },
}

/// Everything a run needs, after merging flags, the config file and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandConfig,
    pub params: RawParams,
    pub policy: VariantPolicy,
    pub format: Format,
    pub strict: StrictOptions,
    pub statics: StaticsOptions,
    pub tolerances: ReproductionTolerances,
    pub verbose: bool,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let file = match &cli.common.config {
            Some(path) => read_config(path)?,
            None => ConfigFile::default(),
        };

        let mut params = file.params.unwrap_or_else(|| gigecon_core::experiments::table1_base().to_raw());
        for spec in &cli.common.set {
            let (field, value) = parse_override(spec)?;
            params.set(field, value);
        }

        let mut policy = VariantPolicy::default();
        if let Some(w) = cli.common.capital_weight.map(CapitalWeight::from).or(file.policy.capital_weight) {
            policy.capital_weight = w;
        }
        if let Some(c) = cli.common.consumption.map(ConsumptionFormula::from).or(file.policy.consumption) {
            policy.consumption = c;
        }
        let format = cli.common.format.or(file.output.format).unwrap_or_default();

        let s = &file.solver;
        let mut strict = StrictOptions::default();
        let mut statics = StaticsOptions::default();
        let mut tolerances = ReproductionTolerances::default();
        strict.tol = s.tol.unwrap_or(strict.tol);
        strict.max_iter = s.max_iter.unwrap_or(strict.max_iter);
        strict.fd_rel_step = s.fd_step.unwrap_or(strict.fd_rel_step);
        strict.co_state_weight = s.co_state_weight.unwrap_or(strict.co_state_weight);
        statics.fd_step = s.statics_fd_step.unwrap_or(statics.fd_step);
        statics.agreement_tol = s.agreement_tol.unwrap_or(statics.agreement_tol);
        tolerances.table1_abs = s.table1_abs.unwrap_or(tolerances.table1_abs);
        tolerances.table2_precise_rel = s.table2_precise_rel.unwrap_or(tolerances.table2_precise_rel);
        tolerances.table2_abbreviated_rel = s.table2_abbreviated_rel.unwrap_or(tolerances.table2_abbreviated_rel);

        let command = match &cli.command {
            Command::Solve { time } => CommandConfig::Solve { time: *time },
            Command::Verify(a) => {
                strict.tol = a.tol.unwrap_or(strict.tol);
                strict.max_iter = a.max_iter.unwrap_or(strict.max_iter);
                strict.fd_rel_step = a.fd_step.unwrap_or(strict.fd_rel_step);
                if let Some(w) = a.co_state_weight {
                    strict.co_state_weight = w.into();
                }
                CommandConfig::Verify
            }
            Command::Statics(a) => {
                statics.fd_step = a.fd_step.unwrap_or(statics.fd_step);
                statics.agreement_tol = a.agreement_tol.unwrap_or(statics.agreement_tol);
                CommandConfig::Statics
            }
            Command::Sweep(a) => {
                let fields = a.fields.iter().map(|f| f.trim().parse()).collect::<Result<Vec<ParamField>, _>>()?;
                let mut grid = a
                    .points
                    .iter()
                    .map(|p| {
                        p.split(',')
                            .map(|v| v.trim().parse::<f64>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|_| CliError::BadPoint(p.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                grid.extend(a.values.iter().map(|v| vec![*v]));
                CommandConfig::Sweep { fields, grid }
            }
            Command::Reproduce(a) => {
                tolerances.table1_abs = a.table1_abs.unwrap_or(tolerances.table1_abs);
                tolerances.table2_precise_rel = a.table2_precise_rel.unwrap_or(tolerances.table2_precise_rel);
                tolerances.table2_abbreviated_rel =
                    a.table2_abbreviated_rel.unwrap_or(tolerances.table2_abbreviated_rel);
                let table = if a.table == 1 { TableId::One } else { TableId::Two };
                CommandConfig::Reproduce { table }
            }
        };

        Ok(RunConfig { command, params, policy, format, strict, statics, tolerances, verbose: cli.common.verbose })
    }
}

impl From<CapitalWeightArg> for CapitalWeight {
    fn from(a: CapitalWeightArg) -> Self {
        match a {
            CapitalWeightArg::PaperDisplay => CapitalWeight::PaperDisplay,
            CapitalWeightArg::TableConsistent => CapitalWeight::TableConsistent,
        }
    }
}

impl From<ConsumptionArg> for ConsumptionFormula {
    fn from(a: ConsumptionArg) -> Self {
        match a {
            ConsumptionArg::PaperDisplay => ConsumptionFormula::PaperDisplay,
            ConsumptionArg::Table => ConsumptionFormula::Table,
        }
    }
}

impl From<CoStateArg> for CoStateWeight {
    fn from(a: CoStateArg) -> Self {
        match a {
            CoStateArg::B1 => CoStateWeight::B1,
            CoStateArg::A2 => CoStateWeight::A2,
        }
    }
}

/// Exit code and the bytes written to each stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
}

impl Outcome {
    fn error(err: &CliError) -> Self {
        Outcome { code: err.exit_code(), stdout: Vec::new(), stderr: format!("error: {err}\n").into_bytes() }
    }

    pub fn stdout_str(&self) -> &str {
        std::str::from_utf8(&self.stdout).unwrap_or("")
    }

    pub fn stderr_str(&self) -> &str {
        std::str::from_utf8(&self.stderr).unwrap_or("")
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string().into_bytes();
            return if e.use_stderr() {
                Outcome { code: exit::USAGE, stdout: Vec::new(), stderr: rendered }
            } else {
                Outcome { code: exit::OK, stdout: rendered, stderr: Vec::new() }
            };
        }
    };
    match RunConfig::from_cli(&cli) {
        Ok(cfg) => run(&cfg),
        Err(e) => Outcome::error(&e),
    }
}

fn feasible_params(cfg: &RunConfig, diag: &mut String) -> Result<(EconomyParams, AuxiliaryConstants), CliError> {
    let params = cfg.params.validate()?;
    let constants = compute_constants(&params);
    let report = gigecon_core::check_feasibility(&constants, &params);
    if cfg.verbose {
        diag.push_str(&format!(
            "M1={:e} M2={:e} M3={:e} P={:e} Delta={:e}\n{report}\n",
            constants.m1, constants.m2, constants.m3, constants.p, constants.delta
        ));
    }
    if !report.is_feasible() {
        return Err(CliError::Infeasible(report));
    }
    Ok((params, constants))
}

/// Executes a resolved configuration.
pub fn run(cfg: &RunConfig) -> Outcome {
    let mut diag = String::new();
    let result = dispatch(cfg, &mut diag);
    match result {
        Ok((code, stdout)) => Outcome { code, stdout: stdout.into_bytes(), stderr: diag.into_bytes() },
        Err(e) => {
            diag.push_str(&format!("error: {e}\n"));
            Outcome { code: e.exit_code(), stdout: Vec::new(), stderr: diag.into_bytes() }
        }
    }
}

fn dispatch(cfg: &RunConfig, diag: &mut String) -> Result<(i32, String), CliError> {
    match &cfg.command {
        CommandConfig::Solve { time } => {
            let (params, constants) = feasible_params(cfg, diag)?;
            let ss = solve_with_constants(&params, &constants, cfg.policy);
            let path =
                time.as_ref().map(|t| level_path(&ss, params.demo(), *t).expect("feasible state has a level path"));
            Ok((exit::OK, output::solve(cfg, &params, &constants, &ss, path.as_ref())))
        }
        CommandConfig::Verify => {
            let (params, constants) = feasible_params(cfg, diag)?;
            let closed = solve_with_constants(&params, &constants, cfg.policy);
            let guess = CandidateState::from_steady_state(&closed)?;
            let closed_residuals = residuals(&params, &guess, cfg.strict.co_state_weight);
            let sol = strict_solve(&params, &guess, &cfg.strict)?;
            if cfg.verbose {
                diag.push_str(&sol.trace_lines());
            }
            let report = discrepancy_report(&closed, &sol.state, &params);
            let code = if sol.converged() {
                exit::OK
            } else {
                diag.push_str(&format!(
                    "strict solve did not converge ({:?}) after {} iterations; residual {:e}\n",
                    sol.termination,
                    sol.iterations(),
                    sol.residuals.relative_sup_norm()
                ));
                exit::NOT_CONVERGED
            };
            Ok((code, output::verify(cfg, &sol, &closed_residuals, &report)))
        }
        CommandConfig::Statics => {
            let (params, _) = feasible_params(cfg, diag)?;
            let sc = sign_constants(&params).map_err(CliError::Statics)?;
            let signs = predict_signs(&sc);
            let mut derivs = Vec::new();
            for sector in [Sector::Physical, Sector::Gig] {
                let a = analytic_tfp_derivatives(&params, sector, cfg.policy.consumption).map_err(CliError::Statics)?;
                let f = fd_derivatives(&params, sector, cfg.statics.fd_step, cfg.policy).map_err(CliError::Statics)?;
                derivs.push((sector, a, f));
            }
            let agreement =
                agreement_report(&params, cfg.statics.fd_step, cfg.statics.agreement_tol, cfg.policy.consumption)
                    .map_err(CliError::Statics)?;
            let erratum = erratum_report(&sc);
            if cfg.verbose && (erratum.m4_sign_differs || erratum.m5_sign_differs) {
                diag.push_str("note: a printed sign constant disagrees in sign with the derivative-consistent one\n");
            }
            Ok((exit::OK, output::statics(cfg, &sc, &signs, &derivs, &agreement, &erratum)))
        }
        CommandConfig::Sweep { fields, grid } => {
            let base = cfg.params.validate()?;
            let result = sweep(&base, fields, grid, cfg.policy)?;
            if cfg.verbose {
                for c in &result.monotonicity.columns {
                    diag.push_str(&format!("{}: {}\n", c.field, c.trend));
                }
            }
            Ok((exit::OK, output::sweep(cfg, fields, &result)))
        }
        CommandConfig::Reproduce { table } => {
            let r = reproduce(*table, cfg.policy, &cfg.tolerances);
            let code = if r.pass() {
                exit::OK
            } else {
                let failed = r.failures().count();
                diag.push_str(&format!(
                    "reproduction mismatch: {failed} of {} cells outside tolerance\n",
                    r.cell_count()
                ));
                if cfg.verbose {
                    for (label, c) in r.failures() {
                        diag.push_str(&format!(
                            "  {label} {}: printed {} computed {:e} deviation {:e}\n",
                            c.column, c.printed_text, c.computed, c.deviation
                        ));
                    }
                }
                exit::MISMATCH
            };
            Ok((code, output::reproduce(cfg, &r)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_sections_are_split_from_params() {
        let doc = "rho = 0.015\nn = 0.01\nsigma1 = 0.8\nsigma2 = 0.2\nsigma = 0.04\nA_p = 1\na1 = 0.2\na2 = 0.8\n\
                   A_d = 1.0\nb1 = 0.3\nb2 = 0.5\nb3 = 0.2\ndelta = 0.03\n\
                   [policy]\ncapital_weight = \"paper-display\"\n[solver]\ntol = 1e-10\n[output]\nformat = \"json\"\n";
        let c = parse_config(doc).unwrap();
        assert_eq!(c.params.unwrap().a_p, 1.0);
        assert_eq!(c.policy.capital_weight, Some(CapitalWeight::PaperDisplay));
        assert_eq!(c.solver.tol, Some(1e-10));
        assert_eq!(c.output.format, Some(Format::Json));
    }

    #[test]
    fn policy_only_config_keeps_default_params() {
        let c = parse_config("[policy]\nconsumption = \"paper-display\"\n").unwrap();
        assert!(c.params.is_none());
    }

    #[test]
    fn unknown_section_key_is_rejected() {
        assert!(parse_config("[solver]\ntolerance = 1\n").is_err());
        assert!(parse_config("rho = 0.1\nbogus = 2\n").is_err());
    }

    #[test]
    fn overrides() {
        assert_eq!(parse_override("A_p=1.02").unwrap(), (ParamField::Ap, 1.02));
        assert!(matches!(parse_override("A_p"), Err(CliError::BadOverride(_))));
        assert!(matches!(parse_override("zeta=1"), Err(CliError::Param(ParamError::UnknownField(_)))));
    }
}
