//! Comparative statics of the steady state with respect to the two TFP levels.
//!
//! Analytic derivatives are evaluated with every term divided through by
//! `Delta` (or `Delta^2`), since `M2` reaches `1e7` and beyond in realistic
//! parameterizations and the unnormalized products overflow long before the
//! derivatives do.
//!
//! Two of the sign constants are not the literal printed expressions:
//!
//! * `M4` is the bracket that makes `dy/dA_p = P M1 M4 / (a2 A_p Delta^2)`
//!   hold, namely `M4 = ((P - M3) Delta + P M2 (b2+b3)/b3 (M2 + M3 + b2 - P - a2)) / P`.
//!   The printed form omits the `-(P + a2)` contribution and has the opposite
//!   sign at the TFP baseline.
//! * `M5` uses `1 - a2 (delta+n)/(delta+rho)`; the printed form drops the
//!   `a2` inside the bracket.
//!
//! Both printed forms are kept in [`SignConstants`] for comparison.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::rel_diff;
use crate::params::{EconomyParams, ParamField};
use crate::steady_state::{
    check_feasibility, compute_constants, resource_offset, solve, AuxiliaryConstants, ConsumptionFormula,
    FeasibilityReport, SteadyStateError, VariantPolicy,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StaticsError {
    #[error("parameters are infeasible: {0}")]
    Infeasible(FeasibilityReport),
    #[error("perturbing {field} leaves the feasible region: {report}")]
    PerturbationInfeasible { field: ParamField, report: FeasibilityReport },
    #[error("invalid perturbation of {field}: {message}")]
    InvalidPerturbation { field: ParamField, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignConstants {
    #[serde(rename = "M4")]
    pub m4: f64,
    #[serde(rename = "M5")]
    pub m5: f64,
    #[serde(rename = "M6")]
    pub m6: f64,
    #[serde(rename = "M7")]
    pub m7: f64,
    /// `M4` as printed, for comparison with [`Self::m4`].
    pub printed_m4: f64,
    /// `M5` as printed, for comparison with [`Self::m5`].
    pub printed_m5: f64,
}

/// Normalized pieces shared by the sign constants and the derivatives.
struct Normalized {
    k: AuxiliaryConstants,
    /// `(b2 + b3) / b3`
    growth: f64,
    /// `M2 + M3`, computed without cancellation
    offset: f64,
    /// `M4 / Delta^2`
    m4_n: f64,
    /// `M5 / Delta`
    m5_n: f64,
}

fn feasible_constants(params: &EconomyParams) -> Result<AuxiliaryConstants, StaticsError> {
    let k = compute_constants(params);
    let report = check_feasibility(&k, params);
    if !report.is_feasible() {
        return Err(StaticsError::Infeasible(report));
    }
    Ok(k)
}

fn normalized(params: &EconomyParams) -> Result<Normalized, StaticsError> {
    let k = feasible_constants(params)?;
    let t = params.tech();
    let growth = (t.b2 + t.b3) / t.b3;
    let offset = resource_offset(params);
    let (m2n, m3n) = (k.m2 / k.delta, k.m3 / k.delta);
    // ((P - M3) Delta + P M2 g (M2 + M3 + b2 - P - a2)) / (P Delta^2)
    let m4_n = (k.p / k.delta - m3n + k.p * m2n * growth * (offset + t.b2 - k.p - t.a2) / k.delta) / k.p;
    let a2_bracket = 1.0 - t.a2 * params.investment_ratio();
    // (M2 g (P (b2 + b3) - a2 (1 - a2 (delta+n)/(delta+rho))) + (M2 - b3) Delta) / Delta
    let m5_n = m2n * growth * (k.p * (t.b2 + t.b3) - t.a2 * a2_bracket) + (k.m2 - t.b3);
    Ok(Normalized { k, growth, offset, m4_n, m5_n })
}

/// Evaluates `M4`..`M7` (and the printed forms of `M4`, `M5`) at feasible
/// parameters.
pub fn sign_constants(params: &EconomyParams) -> Result<SignConstants, StaticsError> {
    let nz = normalized(params)?;
    let k = &nz.k;
    let t = params.tech();
    let ratio = params.investment_ratio();
    let a2_bracket = 1.0 - t.a2 * ratio;

    let m6 = k.p + t.a2 - t.b2 - t.b3 - a2_bracket;
    let m7 = t.a2 * a2_bracket - k.p * (t.b2 + t.b3);

    let printed_m4 = k.p * k.p * (k.m2 + t.b2) - k.p * (t.a2 * k.m3 + k.m2 * k.m3 + t.b2 * k.m3)
        + t.a2 * k.m3 * k.m3
        + k.p * k.m2 * nz.growth * (nz.offset + t.b2);
    let printed_m5 = k.m2 * nz.growth * (k.p * (t.b2 + t.b3) - t.a2 * (1.0 - ratio)) + (k.m2 - t.b3) * k.delta;

    Ok(SignConstants { m4: nz.m4_n * k.delta * k.delta, m5: nz.m5_n * k.delta, m6, m7, printed_m4, printed_m5 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Physical,
    Gig,
}

impl Sector {
    pub fn tfp_field(self) -> ParamField {
        match self {
            Sector::Physical => ParamField::Ap,
            Sector::Gig => ParamField::Ad,
        }
    }
}

/// Derivatives of steady-state outputs and consumption with respect to one
/// TFP level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSet {
    pub d_yp: f64,
    pub d_yd: f64,
    pub d_y: f64,
    pub d_c: f64,
}

impl DerivativeSet {
    pub fn as_array(&self) -> [f64; 4] {
        [self.d_yp, self.d_yd, self.d_y, self.d_c]
    }

    pub const FIELD_NAMES: [&'static str; 4] = ["d_yp", "d_yd", "d_y", "d_c"];
}

/// Closed-form TFP derivatives. `d_c` is scaled by the consumption factor of
/// `consumption`; with a unit factor it is the appendix expression.
pub fn analytic_tfp_derivatives(
    params: &EconomyParams,
    sector: Sector,
    consumption: ConsumptionFormula,
) -> Result<DerivativeSet, StaticsError> {
    let nz = normalized(params)?;
    let k = &nz.k;
    let t = params.tech();
    let c_factor = consumption.factor(params.prefs());
    let sc = sign_constants(params)?;
    let (m2n, m3n, offset_n, b2n) = (k.m2 / k.delta, k.m3 / k.delta, nz.offset / k.delta, t.b2 / k.delta);

    Ok(match sector {
        Sector::Physical => {
            let scale = k.m1 / (t.a2 * t.a_p);
            let d_yp = scale * (-m3n * (k.p * m2n + k.p * b2n - t.a2 * m3n) + k.p * m2n * nz.growth * (offset_n + b2n));
            let d_yd = scale * k.p * (1.0 - m2n * nz.growth * (k.p + t.a2)) / k.delta;
            let d_y = scale * k.p * nz.m4_n;
            let d_c = c_factor * scale * k.p * nz.m5_n / k.delta;
            DerivativeSet { d_yp, d_yd, d_y, d_c }
        }
        Sector::Gig => {
            let g = k.p * k.m1 / (t.b3 * t.a_d) * m2n / k.delta;
            DerivativeSet {
                d_yp: -g * (nz.offset + t.b2),
                d_yd: g * (k.p + t.a2),
                d_y: g * sc.m6,
                d_c: c_factor * g * sc.m7,
            }
        }
    })
}

/// Central finite differences of the closed-form solve with step
/// `rel_step * value` in the TFP of `sector`.
pub fn fd_derivatives(
    params: &EconomyParams,
    sector: Sector,
    rel_step: f64,
    policy: VariantPolicy,
) -> Result<DerivativeSet, StaticsError> {
    feasible_constants(params)?;
    let field = sector.tfp_field();
    let base = params.get(field);
    let h = rel_step * base;
    let solve_at = |value: f64| {
        let mut raw = params.to_raw();
        raw.set(field, value);
        let shifted =
            raw.validate().map_err(|e| StaticsError::InvalidPerturbation { field, message: e.to_string() })?;
        solve(&shifted, policy).map_err(|e| match e {
            SteadyStateError::Infeasible(report) => StaticsError::PerturbationInfeasible { field, report },
            other => StaticsError::InvalidPerturbation { field, message: other.to_string() },
        })
    };
    let up = solve_at(base + h)?;
    let down = solve_at(base - h)?;
    let diff = |a: f64, b: f64| (a - b) / (2.0 * h);
    Ok(DerivativeSet {
        d_yp: diff(up.y_p, down.y_p),
        d_yd: diff(up.y_d, down.y_d),
        d_y: diff(up.y, down.y),
        d_c: diff(up.c, down.c),
    })
}

/// Three-valued sign, serialized as `+`, `-` and `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "0")]
    Zero,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
            Sign::Zero => "0",
        }
    }
}

/// Predicted direction of total output and consumption after each TFP shock.
/// `Zero` marks the boundary case where the governing constant vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignReport {
    pub y_wrt_a_p: Sign,
    pub c_wrt_a_p: Sign,
    pub y_wrt_a_d: Sign,
    pub c_wrt_a_d: Sign,
}

pub fn predict_signs(sc: &SignConstants) -> SignReport {
    SignReport {
        y_wrt_a_p: Sign::of(sc.m4),
        c_wrt_a_p: Sign::of(sc.m5),
        y_wrt_a_d: Sign::of(sc.m6),
        c_wrt_a_d: Sign::of(sc.m7),
    }
}

/// One analytic-versus-finite-difference comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub sector: Sector,
    pub field: String,
    pub analytic: f64,
    pub finite_difference: f64,
    pub rel_diff: f64,
    pub pass: bool,
}

/// Compares analytic and finite-difference derivatives for both sectors.
///
/// `d_c` is compared under `consumption`; outputs are policy invariant.
pub fn agreement_report(
    params: &EconomyParams,
    rel_step: f64,
    tol: f64,
    consumption: ConsumptionFormula,
) -> Result<Vec<Agreement>, StaticsError> {
    let policy = VariantPolicy { consumption, ..VariantPolicy::default() };
    let mut out = Vec::with_capacity(8);
    for sector in [Sector::Physical, Sector::Gig] {
        let a = analytic_tfp_derivatives(params, sector, consumption)?;
        let f = fd_derivatives(params, sector, rel_step, policy)?;
        for ((name, av), fv) in DerivativeSet::FIELD_NAMES.iter().zip(a.as_array()).zip(f.as_array()) {
            let rd = rel_diff(av, fv, 0.0);
            out.push(Agreement {
                sector,
                field: (*name).to_owned(),
                analytic: av,
                finite_difference: fv,
                rel_diff: rd,
                pass: rd <= tol,
            });
        }
    }
    Ok(out)
}

/// Printed-versus-consistent sign constants at one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErratumReport {
    pub printed_m4: f64,
    pub consistent_m4: f64,
    pub printed_m5: f64,
    pub consistent_m5: f64,
    pub m4_sign_differs: bool,
    pub m5_sign_differs: bool,
}

pub fn erratum_report(sc: &SignConstants) -> ErratumReport {
    ErratumReport {
        printed_m4: sc.printed_m4,
        consistent_m4: sc.m4,
        printed_m5: sc.printed_m5,
        consistent_m5: sc.m5,
        m4_sign_differs: Sign::of(sc.printed_m4) != Sign::of(sc.m4),
        m5_sign_differs: Sign::of(sc.printed_m5) != Sign::of(sc.m5),
    }
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

    // Reference values: 50-digit central differences of the closed form with
    // step 1e-20 (outputs) and a unit consumption factor (d_c).
    #[test]
    fn physical_derivatives_at_baseline() {
        let d = analytic_tfp_derivatives(&table1(), Sector::Physical, ConsumptionFormula::Table).unwrap();
        assert_relative_eq!(d.d_yp, 2.8114483, max_relative = 1e-7);
        assert_relative_eq!(d.d_yd, -3.1437655, max_relative = 1e-7);
        assert_relative_eq!(d.d_y, -0.33231725, max_relative = 1e-7);
        assert_relative_eq!(d.d_c, 0.8 * 1.4034363, max_relative = 1e-7);
    }

    #[test]
    fn gig_derivatives_at_baseline() {
        let d = analytic_tfp_derivatives(&table1(), Sector::Gig, ConsumptionFormula::PaperDisplay).unwrap();
        assert_relative_eq!(d.d_yp, -3.093733, max_relative = 1e-6);
        assert_relative_eq!(d.d_yd, 5.0751125, max_relative = 1e-7);
        assert_relative_eq!(d.d_y, 1.9813795, max_relative = 1e-7);
        assert_relative_eq!(d.d_c, 4.0 * -1.0775924, max_relative = 1e-7);
    }

    #[test]
    fn sign_constants_at_baseline() {
        let sc = sign_constants(&table1()).unwrap();
        assert!(sc.m4 < 0.0);
        assert_relative_eq!(sc.m4, -0.23585478, max_relative = 1e-7);
        assert_relative_eq!(sc.m5, 0.99605771, max_relative = 1e-7);
        assert_relative_eq!(sc.m6, 0.633_333_333_333_333_3, max_relative = 1e-13);
        assert_relative_eq!(sc.m7, -0.34444444444444444, max_relative = 1e-13);
        // printed forms, evaluated literally
        assert_relative_eq!(sc.printed_m4, 2.39748, max_relative = 1e-5);
        assert_relative_eq!(sc.printed_m5, 1.27237, max_relative = 1e-5);
        let e = erratum_report(&sc);
        assert!(e.m4_sign_differs);
        assert!(!e.m5_sign_differs);
    }

    #[test]
    fn printed_m4_relation() {
        // P M4 = printed M4 - P M2 (b2+b3)/b3 (P + a2)
        let p = table1();
        let sc = sign_constants(&p).unwrap();
        let k = compute_constants(&p);
        let t = p.tech();
        let rhs = sc.printed_m4 - k.p * k.m2 * (t.b2 + t.b3) / t.b3 * (k.p + t.a2);
        assert_relative_eq!(k.p * sc.m4, rhs, max_relative = 1e-12);
    }

    #[test]
    fn derivative_sum_identity() {
        for sector in [Sector::Physical, Sector::Gig] {
            let d = analytic_tfp_derivatives(&table1(), sector, ConsumptionFormula::Table).unwrap();
            let scale = d.d_yp.abs().max(d.d_yd.abs());
            assert!((d.d_y - d.d_yp - d.d_yd).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn predict_signs_table1_regime() {
        let r = predict_signs(&sign_constants(&table1()).unwrap());
        assert_eq!(
            r,
            SignReport {
                y_wrt_a_p: Sign::Negative,
                c_wrt_a_p: Sign::Positive,
                y_wrt_a_d: Sign::Positive,
                c_wrt_a_d: Sign::Negative,
            }
        );
    }

    #[test]
    fn predict_signs_degenerate() {
        let zero = SignConstants { m4: 0.0, m5: 0.0, m6: 0.0, m7: 0.0, printed_m4: 0.0, printed_m5: 0.0 };
        let r = predict_signs(&zero);
        assert!([r.y_wrt_a_p, r.c_wrt_a_p, r.y_wrt_a_d, r.c_wrt_a_d].iter().all(|s| *s == Sign::Zero));
    }

    #[test]
    fn fd_matches_analytic_at_baseline() {
        let report = agreement_report(&table1(), 1e-5, 1e-6, ConsumptionFormula::PaperDisplay).unwrap();
        for a in &report {
            assert!(a.pass, "{a:?}");
        }
    }

    #[test]
    fn fd_error_when_perturbation_infeasible() {
        // sit just above the M3 = 0 boundary
        let p = RawParams { a_p: 0.97139, ..table1().to_raw() }.validate().unwrap();
        let err = fd_derivatives(&p, Sector::Physical, 1e-5, VariantPolicy::default()).unwrap_err();
        assert!(matches!(err, StaticsError::PerturbationInfeasible { field: ParamField::Ap, .. }));
    }

    #[test]
    fn sign_symbols() {
        assert_eq!(Sign::of(-2.0).symbol(), "-");
        assert_eq!(Sign::of(0.0).symbol(), "0");
        assert_eq!(Sign::of(1e-300).symbol(), "+");
    }
}
