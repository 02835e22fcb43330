//! Closed-form balanced-growth steady state.
//!
//! The steady state is governed by a handful of auxiliary constants built from
//! the exogenous parameters ([`AuxiliaryConstants`]). A meaningful steady
//! state exists iff `M2 - b3 > 0` and `M3 <= 0`; when it does, outputs solve a
//! 2x2 linear system with determinant `Delta` and every other quantity follows
//! from the outputs.
//!
//! Two places where the printed formulas and the tabulated simulations
//! disagree are exposed through [`VariantPolicy`]: the weight on gig output
//! in the capital split and the scale factor in the consumption formula.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::pow_prod;
use crate::params::{Demographics, EconomyParams, Preferences};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryConstants {
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    #[serde(rename = "M3")]
    pub m3: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
}

/// `1 - a2 (delta + n)/(delta + rho) + b3`, i.e. `M3 + M2`.
///
/// Kept separate so callers needing `M2 + M3` avoid the cancellation of
/// subtracting two numbers of size `M2`.
pub fn resource_offset(params: &EconomyParams) -> f64 {
    let t = params.tech();
    1.0 - t.a2 * params.investment_ratio() + t.b3
}

pub fn compute_constants(params: &EconomyParams) -> AuxiliaryConstants {
    let t = params.tech();
    let cost = params.capital_cost();

    // ln M1 = (ln A_p + a1 ln a1 + a2 ln a2 - a1 ln(delta + rho)) / a2
    let ln_m1 = (t.a_p.ln() + t.a1 * t.a1.ln() + t.a2 * t.a2.ln() - t.a1 * cost.ln()) / t.a2;
    // ln M2 = ((b2 + b3) ln M1 + b1 ln(delta + rho) - ln A_d - b1 ln b1 - b2 ln b2) / b3
    let ln_m2 = ((t.b2 + t.b3) * ln_m1 + t.b1 * cost.ln() - t.a_d.ln() - t.b1 * t.b1.ln() - t.b2 * t.b2.ln()) / t.b3;
    let m1 = ln_m1.exp();
    let m2 = ln_m2.exp();
    let m3 = resource_offset(params) - m2;
    let p = 1.0 - t.a1 * params.investment_ratio();
    let delta = p * (m2 + t.b2) - t.a2 * m3;
    AuxiliaryConstants { m1, m2, m3, p, delta }
}

impl AuxiliaryConstants {
    pub fn is_finite(&self) -> bool {
        [self.m1, self.m2, self.m3, self.p, self.delta].iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeasibilityViolation {
    /// `M2 - b3 <= 0`: consumption cannot be strictly positive.
    ConsumptionNotPositive { slack: f64 },
    /// `M3 > 0`: physical output would be negative.
    ResourceConstantPositive { m3: f64 },
    /// Some auxiliary constant overflowed or is undefined.
    NonFinite,
}

impl fmt::Display for FeasibilityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibilityViolation::ConsumptionNotPositive { slack } => {
                write!(f, "M2 - b3 <= 0 (M2 - b3 = {slack:e})")
            }
            FeasibilityViolation::ResourceConstantPositive { m3 } => write!(f, "M3 > 0 (M3 = {m3:e})"),
            FeasibilityViolation::NonFinite => f.write_str("auxiliary constants are not finite"),
        }
    }
}

/// Outcome of the existence test, with the numeric slack of both conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// `M2 - b3`; must be strictly positive.
    pub consumption_slack: f64,
    /// `-M3`; must be non-negative.
    pub resource_slack: f64,
    pub violations: Vec<FeasibilityViolation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    /// Feasible with `M3 = 0`, where physical output vanishes.
    pub fn is_boundary(&self) -> bool {
        self.is_feasible() && self.resource_slack == 0.0
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "feasible (M2 - b3 = {:e}, M3 = {:e})", self.consumption_slack, -self.resource_slack);
        }
        f.write_str("infeasible: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn check_feasibility(constants: &AuxiliaryConstants, params: &EconomyParams) -> FeasibilityReport {
    let consumption_slack = constants.m2 - params.tech().b3;
    let resource_slack = -constants.m3;
    let mut violations = Vec::new();
    if !constants.is_finite() {
        violations.push(FeasibilityViolation::NonFinite);
    } else {
        if consumption_slack <= 0.0 {
            violations.push(FeasibilityViolation::ConsumptionNotPositive { slack: consumption_slack });
        }
        if constants.m3 > 0.0 {
            violations.push(FeasibilityViolation::ResourceConstantPositive { m3: constants.m3 });
        }
    }
    FeasibilityReport { consumption_slack, resource_slack, violations }
}

/// Weight on gig output in the capital split and in the capital stock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapitalWeight {
    /// `a2`, as the share and capital formulas are printed.
    PaperDisplay,
    /// `b1`, the capital elasticity of gig output; reproduces the tables.
    #[default]
    TableConsistent,
}

/// Scale factor in front of `(M2 - b3) y_d` in steady-state consumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsumptionFormula {
    /// `sigma1 / sigma2`, as printed.
    PaperDisplay,
    /// `sigma1`, which reproduces the tables.
    #[default]
    Table,
}

impl ConsumptionFormula {
    pub fn factor(self, prefs: &Preferences) -> f64 {
        match self {
            ConsumptionFormula::PaperDisplay => prefs.sigma1 / prefs.sigma2,
            ConsumptionFormula::Table => prefs.sigma1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct VariantPolicy {
    pub capital_weight: CapitalWeight,
    pub consumption: ConsumptionFormula,
}

impl VariantPolicy {
    pub const ALL: [VariantPolicy; 4] = [
        VariantPolicy { capital_weight: CapitalWeight::PaperDisplay, consumption: ConsumptionFormula::PaperDisplay },
        VariantPolicy { capital_weight: CapitalWeight::PaperDisplay, consumption: ConsumptionFormula::Table },
        VariantPolicy { capital_weight: CapitalWeight::TableConsistent, consumption: ConsumptionFormula::PaperDisplay },
        VariantPolicy { capital_weight: CapitalWeight::TableConsistent, consumption: ConsumptionFormula::Table },
    ];

    pub fn capital_weight_value(&self, params: &EconomyParams) -> f64 {
        match self.capital_weight {
            CapitalWeight::PaperDisplay => params.tech().a2,
            CapitalWeight::TableConsistent => params.tech().b1,
        }
    }
}

/// Per-capita steady state. Field order is the serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub h_p: f64,
    pub h_d: f64,
    pub y_p: f64,
    pub y_d: f64,
    pub y: f64,
    pub c: f64,
    pub d: f64,
    pub u: f64,
    pub u_p: f64,
    pub u_d: f64,
    pub k: f64,
    pub lambda: f64,
}

impl SteadyState {
    pub const FIELD_NAMES: [&'static str; 12] =
        ["h_p", "h_d", "y_p", "y_d", "y", "c", "d", "u", "u_p", "u_d", "k", "lambda"];

    /// Values in [`Self::FIELD_NAMES`] order.
    pub fn values(&self) -> [f64; 12] {
        [
            self.h_p,
            self.h_d,
            self.y_p,
            self.y_d,
            self.y,
            self.c,
            self.d,
            self.u,
            self.u_p,
            self.u_d,
            self.k,
            self.lambda,
        ]
    }

    pub fn field(&self, name: &str) -> Option<f64> {
        Self::FIELD_NAMES.iter().position(|n| *n == name).map(|i| self.values()[i])
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteadyStateError {
    #[error("no meaningful steady state: {0}")]
    Infeasible(FeasibilityReport),
    #[error("utility flow needs positive consumption and leisure (c = {c}, d = {d})")]
    NonPositiveUtilityArgument { c: f64, d: f64 },
    #[error("time must be non-negative (t = {0})")]
    NegativeTime(f64),
}

/// Utility flow `(c^sigma1 d^sigma2)^(1-sigma) / (1-sigma)`.
pub fn utility_flow(c: f64, d: f64, prefs: &Preferences) -> Result<f64, SteadyStateError> {
    if !(c > 0.0 && d > 0.0) {
        return Err(SteadyStateError::NonPositiveUtilityArgument { c, d });
    }
    Ok(utility_flow_unchecked(c, d, prefs))
}

pub(crate) fn utility_flow_unchecked(c: f64, d: f64, prefs: &Preferences) -> f64 {
    let one_minus = 1.0 - prefs.sigma;
    pow_prod(&[(c, prefs.sigma1 * one_minus), (d, prefs.sigma2 * one_minus)]) / one_minus
}

/// Solves for the unique steady state, refusing infeasible parameters.
pub fn solve(params: &EconomyParams, policy: VariantPolicy) -> Result<SteadyState, SteadyStateError> {
    let constants = compute_constants(params);
    let report = check_feasibility(&constants, params);
    if !report.is_feasible() {
        return Err(SteadyStateError::Infeasible(report));
    }
    Ok(solve_with_constants(params, &constants, policy))
}

/// Closed-form evaluation for constants already known to be feasible.
pub fn solve_with_constants(params: &EconomyParams, k: &AuxiliaryConstants, policy: VariantPolicy) -> SteadyState {
    let t = params.tech();
    let prefs = params.prefs();

    let y_p = -k.m1 * k.m3 / k.delta;
    let y_d = k.m1 * k.p / k.delta;
    let y = y_p + y_d;

    // Shares carry a common denominator; each is its own ratio so that tiny
    // shares keep full relative precision.
    let num_hp = t.a2 * y_p;
    let num_hd = t.b2 * y_d;
    let num_d = k.m2 * y_d;
    let time_den = num_hp + num_hd + num_d;
    let h_p = num_hp / time_den;
    let h_d = num_hd / time_den;
    let d = num_d / time_den;

    let w = policy.capital_weight_value(params);
    let num_up = t.a1 * y_p;
    let num_ud = w * y_d;
    let cap_den = num_up + num_ud;
    let u_p = num_up / cap_den;
    let u_d = num_ud / cap_den;
    let capital = cap_den / params.capital_cost();

    let c = policy.consumption.factor(prefs) * (k.m2 - t.b3) * y_d;
    let u = utility_flow_unchecked(c, d, prefs);
    let lambda = (1.0 - prefs.sigma) * prefs.sigma1 * u / c;

    SteadyState { h_p, h_d, y_p, y_d, y, c, d, u, u_p, u_d, k: capital, lambda }
}

/// Aggregate levels along the balanced growth path at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelPath {
    pub t: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "Y_p")]
    pub y_p: f64,
    #[serde(rename = "Y_d")]
    pub y_d: f64,
    #[serde(rename = "Y")]
    pub y: f64,
}

pub fn level_path(ss: &SteadyState, demo: &Demographics, t: f64) -> Result<LevelPath, SteadyStateError> {
    if t.is_nan() || t < 0.0 {
        return Err(SteadyStateError::NegativeTime(t));
    }
    let n = demo.n0 * (demo.n * t).exp();
    Ok(LevelPath { t, n, k: n * ss.k, y_p: n * ss.y_p, y_d: n * ss.y_d, y: n * ss.y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::RawParams;
    use approx::assert_relative_eq;

    fn table1() -> EconomyParams {
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
        .unwrap()
    }

    fn s21() -> EconomyParams {
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
            b1: 0.1,
            b2: 0.7,
            b3: 0.2,
            delta: 0.01,
        }
        .validate()
        .unwrap()
    }

    // Reference values from a 50-digit evaluation of the constant definitions.
    #[test]
    fn constants_at_table1_baseline() {
        let k = compute_constants(&table1());
        assert_relative_eq!(k.m1, 1.1615672465847635, max_relative = 1e-13);
        assert_relative_eq!(k.m2, 0.555_094_761_511_508_2, max_relative = 1e-13);
        assert_relative_eq!(k.m3, -0.066_205_872_622_619_34, max_relative = 1e-12);
        assert_relative_eq!(k.p, 0.822_222_222_222_222_2, max_relative = 1e-14);
        assert_relative_eq!(k.delta, 0.920_487_057_563_113_3, max_relative = 1e-13);
    }

    #[test]
    fn constants_at_s21_keep_precision_under_fifth_power() {
        let k = compute_constants(&s21());
        assert_relative_eq!(k.m1, 47.030203061437, max_relative = 1e-13);
        assert_relative_eq!(k.m2, 58_455_140.246_426_81, max_relative = 1e-12);
        assert_relative_eq!(k.p, 0.52, max_relative = 1e-14);
        assert_relative_eq!(k.delta, 53_778_729.038_712_67, max_relative = 1e-12);
    }

    #[test]
    fn m1_is_one_when_numerator_matches_denominator() {
        // a1 = a2 = 0.5, A_p = 1: A_p a1^a1 a2^a2 = 0.5 = (delta + rho)^0.5 at delta + rho = 0.25
        let raw = RawParams { a1: 0.5, a2: 0.5, rho: 0.015, delta: 0.235, ..table1().to_raw() };
        let k = compute_constants(&raw.validate().unwrap());
        assert_relative_eq!(k.m1, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn table1_baseline_feasible() {
        let p = table1();
        let report = check_feasibility(&compute_constants(&p), &p);
        assert!(report.is_feasible());
        assert_relative_eq!(report.consumption_slack, 0.355_094_761_511_508_2, max_relative = 1e-12);
        assert!(!report.is_boundary());
    }

    #[test]
    fn low_physical_tfp_is_infeasible() {
        let p = RawParams { a_p: 0.9, ..table1().to_raw() }.validate().unwrap();
        let report = check_feasibility(&compute_constants(&p), &p);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], FeasibilityViolation::ResourceConstantPositive { .. }));
        assert!(report.to_string().contains("M3 > 0"));
        assert!(matches!(solve(&p, VariantPolicy::default()), Err(SteadyStateError::Infeasible(_))));
    }

    #[test]
    fn table1_row1_under_default_policy() {
        let ss = solve(&table1(), VariantPolicy::default()).unwrap();
        let expect = [
            (ss.h_p, 0.057539861818713235),
            (ss.h_d, 0.446_623_456_281_375_5),
            (ss.y_p, 0.083_545_523_577_038_11),
            (ss.y_d, 1.0375663567458556),
            (ss.y, 1.1211118803228938),
            (ss.c, 0.29474750240082724),
            (ss.d, 0.49583668189991127),
            (ss.u, 0.35626363188682176),
            (ss.u_p, 0.050_945_652_365_999_77),
            (ss.u_d, 0.949_054_347_634_000_2),
            (ss.k, 7.288_422_483_092_541),
            (ss.lambda, 0.928_287_659_981_580_2),
        ];
        for (got, want) in expect {
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn printed_variants_at_table1() {
        let policy = VariantPolicy {
            capital_weight: CapitalWeight::PaperDisplay,
            consumption: ConsumptionFormula::PaperDisplay,
        };
        let ss = solve(&table1(), policy).unwrap();
        assert_relative_eq!(ss.u_p, 0.019_732_936_721_224_78, max_relative = 1e-12);
        assert_relative_eq!(ss.k, 18.816937558046494, max_relative = 1e-12);
        assert_relative_eq!(ss.c, 1.473_737_512_004_136, max_relative = 1e-12);
        assert_relative_eq!(ss.u, 1.2262540486746858, max_relative = 1e-12);
        assert_relative_eq!(ss.lambda, 0.639_030_425_507_358_3, max_relative = 1e-12);
    }

    #[test]
    fn s21_tiny_shares_keep_precision() {
        let ss = solve(&s21(), VariantPolicy::default()).unwrap();
        assert_relative_eq!(ss.y_p, 51.1197856, max_relative = 1e-8);
        assert_relative_eq!(ss.c, 13.2911443, max_relative = 1e-8);
        assert_relative_eq!(ss.d, 0.56521739, max_relative = 1e-7);
        assert_relative_eq!(ss.u, 3.05198304, max_relative = 1e-8);
        assert_relative_eq!(ss.u_d, 1.482618423e-9, max_relative = 1e-8);
    }

    #[test]
    fn shares_sum_to_one() {
        for p in [table1(), s21()] {
            for policy in VariantPolicy::ALL {
                let ss = solve(&p, policy).unwrap();
                assert!((ss.h_p + ss.h_d + ss.d - 1.0).abs() <= 4.0 * f64::EPSILON);
                assert!((ss.u_p + ss.u_d - 1.0).abs() <= 4.0 * f64::EPSILON);
            }
        }
    }

    #[test]
    fn utility_flow_examples() {
        let t1 = *table1().prefs();
        assert_relative_eq!(utility_flow(0.295, 0.496, &t1).unwrap(), 0.356_520_541_203_9, max_relative = 1e-13);
        assert_relative_eq!(utility_flow(1.0, 1.0, &t1).unwrap(), 1.0 / 0.96, max_relative = 1e-15);
        let t2 = *s21().prefs();
        assert_relative_eq!(
            utility_flow(13.2911443, 0.56521739, &t2).unwrap(),
            3.0519830416595672,
            max_relative = 1e-13
        );
        assert!(utility_flow(0.0, 0.5, &t1).is_err());
        assert!(utility_flow(0.5, -1.0, &t1).is_err());
    }

    #[test]
    fn level_path_scales_per_capita_values() {
        let p = table1();
        let ss = solve(&p, VariantPolicy::default()).unwrap();
        let demo = Demographics { n: 0.01, n0: 3.0 };
        let at0 = level_path(&ss, &demo, 0.0).unwrap();
        assert_eq!(at0.y, 3.0 * ss.y);
        assert_eq!(at0.k, 3.0 * ss.k);
        let at1 = level_path(&ss, &demo, 1.0 / demo.n).unwrap();
        assert_relative_eq!(at1.y / at0.y, std::f64::consts::E, max_relative = 1e-14);
        assert_relative_eq!(at1.k / at0.k, at1.y / at0.y, max_relative = 1e-14);
        assert!(matches!(level_path(&ss, &demo, -1.0), Err(SteadyStateError::NegativeTime(_))));
    }

    #[test]
    fn boundary_solution_has_zero_physical_sector() {
        let p = table1();
        let mut k = compute_constants(&p);
        k.m3 = 0.0;
        k.delta = k.p * (k.m2 + p.tech().b2);
        let report = check_feasibility(&k, &p);
        assert!(report.is_boundary());
        let ss = solve_with_constants(&p, &k, VariantPolicy::default());
        assert_eq!(ss.y_p, 0.0);
        assert_eq!(ss.h_p, 0.0);
        assert_eq!(ss.u_p, 0.0);
        assert!(ss.y_d > 0.0);
    }
}
