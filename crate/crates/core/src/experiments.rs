//! Scenario tables and parameter sweeps.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::params::{EconomyParams, ParamField, RawParams, ValidationErrors};
use crate::statics::{sign_constants, SignConstants};
use crate::steady_state::{
    check_feasibility, compute_constants, solve_with_constants, AuxiliaryConstants, FeasibilityReport, SteadyState,
    VariantPolicy,
};

/// Tolerance below which consecutive sweep values count as tied.
pub const MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("scenario {label}: {errors}")]
    Invalid { label: String, errors: ValidationErrors },
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("grid point {index} has {got} values for {expected} fields")]
    GridShape { index: usize, expected: usize, got: usize },
    #[error("{field} = {a} and {field} = {b} are both {state}")]
    NoBoundary { field: ParamField, a: f64, b: f64, state: &'static str },
}

/// A base parameterization with a set of overrides applied jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub base: EconomyParams,
    pub overrides: Vec<(ParamField, f64)>,
}

impl Scenario {
    pub fn new(label: impl Into<String>, base: EconomyParams, overrides: Vec<(ParamField, f64)>) -> Self {
        Scenario { label: label.into(), base, overrides }
    }

    pub fn params(&self) -> Result<EconomyParams, ExperimentError> {
        self.base
            .to_raw()
            .with_overrides(&self.overrides)
            .validate()
            .map_err(|errors| ExperimentError::Invalid { label: self.label.clone(), errors })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RowOutcome {
    Feasible { steady_state: SteadyState, signs: SignConstants },
    Infeasible { report: FeasibilityReport },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub label: String,
    pub params: RawParams,
    /// First 16 hex digits of the SHA-256 of the parameter TOML.
    pub digest: String,
    pub constants: AuxiliaryConstants,
    pub outcome: RowOutcome,
}

impl ScenarioRow {
    pub fn steady_state(&self) -> Option<&SteadyState> {
        match &self.outcome {
            RowOutcome::Feasible { steady_state, .. } => Some(steady_state),
            RowOutcome::Infeasible { .. } => None,
        }
    }

    pub fn signs(&self) -> Option<&SignConstants> {
        match &self.outcome {
            RowOutcome::Feasible { signs, .. } => Some(signs),
            RowOutcome::Infeasible { .. } => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self.outcome, RowOutcome::Feasible { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTable {
    pub policy: VariantPolicy,
    pub rows: Vec<ScenarioRow>,
}

impl ScenarioTable {
    pub fn row(&self, label: &str) -> Option<&ScenarioRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

pub fn params_digest(raw: &RawParams) -> String {
    let hash = Sha256::digest(raw.to_toml_string().as_bytes());
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn run_one(scenario: &Scenario, policy: VariantPolicy) -> Result<ScenarioRow, ExperimentError> {
    let params = scenario.params()?;
    let constants = compute_constants(&params);
    let raw = params.to_raw();
    let digest = params_digest(&raw);
    let report = check_feasibility(&constants, &params);
    let outcome = if report.is_feasible() {
        let steady_state = solve_with_constants(&params, &constants, policy);
        let signs = sign_constants(&params).expect("feasibility already checked");
        RowOutcome::Feasible { steady_state, signs }
    } else {
        RowOutcome::Infeasible { report }
    };
    Ok(ScenarioRow { label: scenario.label.clone(), params: raw, digest, constants, outcome })
}

/// Solves every scenario, in parallel, keeping input order.
///
/// Infeasible scenarios become flagged rows; the first invalid scenario in
/// input order aborts the run.
pub fn run_scenarios(scenarios: &[Scenario], policy: VariantPolicy) -> Result<ScenarioTable, ExperimentError> {
    let results: Vec<_> = scenarios.par_iter().map(|s| run_one(s, policy)).collect();
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ScenarioTable { policy, rows })
}

pub fn table1_base() -> EconomyParams {
    RawParams {
        rho: 0.015,
        n: 0.01,
        n0: 1.0,
        sigma1: 0.8,
        sigma2: 0.2,
        sigma: 0.04,
        a_p: 1.0,
        a1: 0.2,
        a2: 0.8,
        a_d: 1.0,
        b1: 0.3,
        b2: 0.5,
        b3: 0.2,
        delta: 0.03,
    }
    .validate()
    .expect("table 1 base is valid")
}

pub fn table2_base() -> EconomyParams {
    RawParams {
        rho: 0.015,
        n: 0.01,
        n0: 1.0,
        sigma1: 0.5,
        sigma2: 0.5,
        sigma: 0.4,
        a_p: 1.0,
        a1: 0.6,
        a2: 0.4,
        a_d: 1.0,
        b1: 0.3,
        b2: 0.5,
        b3: 0.2,
        delta: 0.01,
    }
    .validate()
    .expect("table 2 base is valid")
}

/// `(A_p, A_d)` per Table-1 row.
pub const TABLE1_TFPS: [(&str, f64, f64); 3] = [("S1,1", 1.0, 1.0), ("S1,2", 1.02, 1.0), ("S1,3", 1.0, 1.02)];

/// `(b1, b2, b3)` per Table-2 row.
pub const TABLE2_ELASTICITIES: [(&str, [f64; 3]); 9] = [
    ("S2,1", [0.1, 0.7, 0.2]),
    ("S2,2", [0.1, 0.6, 0.3]),
    ("S2,3", [0.1, 0.5, 0.4]),
    ("S2,4", [0.3, 0.5, 0.2]),
    ("S2,5", [0.3, 0.4, 0.3]),
    ("S2,6", [0.3, 0.3, 0.4]),
    ("S2,7", [0.5, 0.3, 0.2]),
    ("S2,8", [0.5, 0.2, 0.3]),
    ("S2,9", [0.5, 0.1, 0.4]),
];

pub fn elasticity_overrides([b1, b2, b3]: [f64; 3]) -> Vec<(ParamField, f64)> {
    vec![(ParamField::B1, b1), (ParamField::B2, b2), (ParamField::B3, b3)]
}

pub fn table1_scenarios() -> Vec<Scenario> {
    let base = table1_base();
    TABLE1_TFPS
        .iter()
        .map(|&(label, a_p, a_d)| Scenario::new(label, base, vec![(ParamField::Ap, a_p), (ParamField::Ad, a_d)]))
        .collect()
}

pub fn table2_scenarios() -> Vec<Scenario> {
    let base = table2_base();
    TABLE2_ELASTICITIES.iter().map(|&(label, b)| Scenario::new(label, base, elasticity_overrides(b))).collect()
}

pub fn builtin_table1(policy: VariantPolicy) -> ScenarioTable {
    run_scenarios(&table1_scenarios(), policy).expect("builtin scenarios are valid")
}

pub fn builtin_table2(policy: VariantPolicy) -> ScenarioTable {
    run_scenarios(&table2_scenarios(), policy).expect("builtin scenarios are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "trend", rename_all = "kebab-case")]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
    /// `first_change` is the row index where the direction first changes.
    NonMonotone {
        first_change: usize,
    },
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trend::Increasing => f.write_str("increasing"),
            Trend::Decreasing => f.write_str("decreasing"),
            Trend::Constant => f.write_str("constant"),
            Trend::NonMonotone { first_change } => write!(f, "non-monotone at row {first_change}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Up,
    Down,
    Tie,
}

/// Classifies a sequence of `(row index, value)` points.
pub fn classify(points: &[(usize, f64)]) -> Trend {
    let steps: Vec<(usize, Step)> = points
        .windows(2)
        .map(|w| {
            let diff = w[1].1 - w[0].1;
            let step = if diff > MONOTONE_TOL {
                Step::Up
            } else if diff < -MONOTONE_TOL {
                Step::Down
            } else {
                Step::Tie
            };
            (w[0].0, step)
        })
        .collect();
    let Some(&(_, first)) = steps.first() else {
        return Trend::Constant;
    };
    match steps.iter().find(|(_, s)| *s != first) {
        Some(&(at, _)) => Trend::NonMonotone { first_change: at },
        None => match first {
            Step::Up => Trend::Increasing,
            Step::Down => Trend::Decreasing,
            Step::Tie => Trend::Constant,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnTrend {
    pub field: String,
    #[serde(flatten)]
    pub trend: Trend,
}

/// Per-column trends over the feasible rows of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub feasible_rows: Vec<usize>,
    pub columns: Vec<ColumnTrend>,
}

impl MonotonicityReport {
    pub fn trend(&self, field: &str) -> Option<Trend> {
        self.columns.iter().find(|c| c.field == field).map(|c| c.trend)
    }

    pub fn from_table(table: &ScenarioTable) -> Self {
        let feasible: Vec<(usize, &SteadyState)> =
            table.rows.iter().enumerate().filter_map(|(i, r)| r.steady_state().map(|s| (i, s))).collect();
        let columns = SteadyState::FIELD_NAMES
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let points: Vec<(usize, f64)> = feasible.iter().map(|(i, s)| (*i, s.values()[j])).collect();
                ColumnTrend { field: (*name).to_owned(), trend: classify(&points) }
            })
            .collect();
        MonotonicityReport { feasible_rows: feasible.iter().map(|(i, _)| *i).collect(), columns }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub table: ScenarioTable,
    pub monotonicity: MonotonicityReport,
}

/// Solves `base` at each grid point; point `i` sets `fields[j]` to `grid[i][j]`.
pub fn sweep(
    base: &EconomyParams,
    fields: &[ParamField],
    grid: &[Vec<f64>],
    policy: VariantPolicy,
) -> Result<SweepResult, ExperimentError> {
    if grid.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    let scenarios = grid
        .iter()
        .enumerate()
        .map(|(index, point)| {
            if point.len() != fields.len() {
                return Err(ExperimentError::GridShape { index, expected: fields.len(), got: point.len() });
            }
            let label = fields.iter().zip(point).map(|(f, v)| format!("{f}={v}")).collect::<Vec<_>>().join(";");
            Ok(Scenario::new(label, *base, fields.iter().copied().zip(point.iter().copied()).collect()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let table = run_scenarios(&scenarios, policy)?;
    let monotonicity = MonotonicityReport::from_table(&table);
    Ok(SweepResult { table, monotonicity })
}

/// Adjacent values of one parameter on either side of the feasibility
/// boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryBracket {
    pub field: ParamField,
    pub infeasible: f64,
    pub feasible: f64,
    pub iterations: usize,
}

fn is_feasible_at(base: &EconomyParams, field: ParamField, value: f64) -> Result<bool, ExperimentError> {
    let mut raw = base.to_raw();
    raw.set(field, value);
    let params =
        raw.validate().map_err(|errors| ExperimentError::Invalid { label: format!("{field}={value}"), errors })?;
    Ok(check_feasibility(&compute_constants(&params), &params).is_feasible())
}

/// Bisects `field` between `a` and `b`, which must lie on opposite sides of
/// the feasibility boundary, until the bracket ends are adjacent doubles.
pub fn feasibility_boundary(
    base: &EconomyParams,
    field: ParamField,
    a: f64,
    b: f64,
) -> Result<BoundaryBracket, ExperimentError> {
    let (fa, fb) = (is_feasible_at(base, field, a)?, is_feasible_at(base, field, b)?);
    if fa == fb {
        let state = if fa { "feasible" } else { "infeasible" };
        return Err(ExperimentError::NoBoundary { field, a, b, state });
    }
    let (mut infeasible, mut feasible) = if fa { (b, a) } else { (a, b) };
    let mut iterations = 0;
    loop {
        let mid = infeasible + (feasible - infeasible) / 2.0;
        if mid == infeasible || mid == feasible {
            break;
        }
        if is_feasible_at(base, field, mid)? {
            feasible = mid;
        } else {
            infeasible = mid;
        }
        iterations += 1;
    }
    Ok(BoundaryBracket { field, infeasible, feasible, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        let pts = |v: &[f64]| v.iter().copied().enumerate().collect::<Vec<_>>();
        assert_eq!(classify(&pts(&[1.0, 2.0, 3.0])), Trend::Increasing);
        assert_eq!(classify(&pts(&[3.0, 2.0])), Trend::Decreasing);
        assert_eq!(classify(&pts(&[1.0])), Trend::Constant);
        assert_eq!(classify(&pts(&[])), Trend::Constant);
        assert_eq!(classify(&pts(&[1.0, 1.0 + 1e-13])), Trend::Constant);
        assert_eq!(classify(&pts(&[1.0, 2.0, 1.5])), Trend::NonMonotone { first_change: 1 });
        assert_eq!(classify(&pts(&[1.0, 2.0, 2.0])), Trend::NonMonotone { first_change: 1 });
    }

    #[test]
    fn infeasible_scenario_is_flagged() {
        let s = Scenario::new("low", table1_base(), vec![(ParamField::Ap, 1e-6)]);
        let t = run_scenarios(&[s], VariantPolicy::default()).unwrap();
        assert!(!t.rows[0].is_feasible());
        assert!(t.rows[0].constants.m3 > 0.0);
    }

    #[test]
    fn invalid_scenario_aborts_with_label() {
        let good = Scenario::new("ok", table1_base(), vec![]);
        let bad = Scenario::new("bad", table1_base(), vec![(ParamField::Sigma2, 0.3)]);
        let err = run_scenarios(&[good, bad], VariantPolicy::default()).unwrap_err();
        assert!(matches!(err, ExperimentError::Invalid { ref label, .. } if label == "bad"));
    }

    #[test]
    fn empty_and_ragged_grids() {
        let p = table1_base();
        assert_eq!(sweep(&p, &[ParamField::Ap], &[], VariantPolicy::default()), Err(ExperimentError::EmptyGrid));
        let err = sweep(&p, &[ParamField::Ap], &[vec![1.0, 2.0]], VariantPolicy::default()).unwrap_err();
        assert!(matches!(err, ExperimentError::GridShape { index: 0, expected: 1, got: 2 }));
    }

    #[test]
    fn infeasible_points_are_skipped_by_trends() {
        let grid = vec![vec![1e-6], vec![1.0], vec![1.02]];
        let r = sweep(&table1_base(), &[ParamField::Ap], &grid, VariantPolicy::default()).unwrap();
        assert_eq!(r.monotonicity.feasible_rows, vec![1, 2]);
        assert_eq!(r.monotonicity.trend("h_p"), Some(Trend::Increasing));
    }

    #[test]
    fn boundary_bracket_is_tight() {
        let b = feasibility_boundary(&table1_base(), ParamField::Ap, 0.5, 1.0).unwrap();
        assert!(b.infeasible < b.feasible);
        assert_eq!(b.infeasible.next_up(), b.feasible);
        let err = feasibility_boundary(&table1_base(), ParamField::Ap, 1.0, 1.1).unwrap_err();
        assert!(matches!(err, ExperimentError::NoBoundary { state: "feasible", .. }));
    }

    #[test]
    fn digest_is_stable_and_distinguishes() {
        let a = params_digest(&table1_base().to_raw());
        assert_eq!(a, params_digest(&table1_base().to_raw()));
        assert_ne!(a, params_digest(&table2_base().to_raw()));
        assert_eq!(a.len(), 16);
    }
}
