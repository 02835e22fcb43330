//! Exogenous parameters of the economy: preferences, demographics and the two
//! production technologies.
//!
//! Values enter as a [`RawParams`] candidate (arbitrary finite scalars, e.g.
//! parsed from a flat key-value document) and become an [`EconomyParams`]
//! only through [`validate`], which checks every structural restriction of
//! the model and reports all violations at once.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for the sum-to-one restrictions on utility weights and
/// production elasticities.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preferences {
    /// Utility weight on consumption.
    pub sigma1: f64,
    /// Utility weight on digital leisure.
    pub sigma2: f64,
    /// Curvature of the utility flow.
    pub sigma: f64,
    /// Intertemporal discount rate.
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    /// Population growth rate.
    pub n: f64,
    /// Initial number of workers.
    #[serde(rename = "N0")]
    pub n0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Technology {
    #[serde(rename = "A_p")]
    pub a_p: f64,
    pub a1: f64,
    pub a2: f64,
    #[serde(rename = "A_d")]
    pub a_d: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub delta: f64,
}

/// Scalar fields addressable by name, with the exact keys of the parameter
/// document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParamField {
    #[serde(rename = "rho")]
    Rho,
    #[serde(rename = "n")]
    N,
    #[serde(rename = "N0")]
    N0,
    #[serde(rename = "sigma1")]
    Sigma1,
    #[serde(rename = "sigma2")]
    Sigma2,
    #[serde(rename = "sigma")]
    Sigma,
    #[serde(rename = "A_p")]
    Ap,
    #[serde(rename = "a1")]
    A1,
    #[serde(rename = "a2")]
    A2,
    #[serde(rename = "A_d")]
    Ad,
    #[serde(rename = "b1")]
    B1,
    #[serde(rename = "b2")]
    B2,
    #[serde(rename = "b3")]
    B3,
    #[serde(rename = "delta")]
    Delta,
}

impl ParamField {
    pub const ALL: [ParamField; 14] = [
        ParamField::Rho,
        ParamField::N,
        ParamField::N0,
        ParamField::Sigma1,
        ParamField::Sigma2,
        ParamField::Sigma,
        ParamField::Ap,
        ParamField::A1,
        ParamField::A2,
        ParamField::Ad,
        ParamField::B1,
        ParamField::B2,
        ParamField::B3,
        ParamField::Delta,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ParamField::Rho => "rho",
            ParamField::N => "n",
            ParamField::N0 => "N0",
            ParamField::Sigma1 => "sigma1",
            ParamField::Sigma2 => "sigma2",
            ParamField::Sigma => "sigma",
            ParamField::Ap => "A_p",
            ParamField::A1 => "a1",
            ParamField::A2 => "a2",
            ParamField::Ad => "A_d",
            ParamField::B1 => "b1",
            ParamField::B2 => "b2",
            ParamField::B3 => "b3",
            ParamField::Delta => "delta",
        }
    }
}

impl fmt::Display for ParamField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ParamField {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ParamField::ALL.iter().copied().find(|f| f.key() == s).ok_or_else(|| ParamError::UnknownField(s.to_owned()))
    }
}

/// A single violated restriction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("{field} must be finite (got {value})")]
    NonFinite { field: ParamField, value: f64 },
    #[error("{field} must be strictly positive (got {value})")]
    NonPositive { field: ParamField, value: f64 },
    #[error("sigma weights must sum to 1 (sigma1 + sigma2 = {sum})")]
    SigmaWeightSum { sum: f64 },
    #[error("sigma must differ from 1")]
    UnitCurvature,
    #[error("discount rate must exceed population growth (rho = {rho}, n = {n})")]
    DiscountNotAboveGrowth { rho: f64, n: f64 },
    #[error("{field} must lie strictly between 0 and 1 (got {value})")]
    ElasticityOutOfRange { field: ParamField, value: f64 },
    #[error("physical elasticities must sum to 1 (a1 + a2 = {sum})")]
    PhysicalReturnsToScale { sum: f64 },
    #[error("gig elasticities must sum to 1 (b1 + b2 + b3 = {sum})")]
    GigReturnsToScale { sum: f64 },
}

/// Every violation found in one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("unknown parameter field `{0}`")]
    UnknownField(String),
    #[error("invalid parameters: {0}")]
    Invalid(#[from] ValidationErrors),
    #[error("malformed parameter document: {0}")]
    Parse(#[from] toml::de::Error),
}

fn default_n0() -> f64 {
    1.0
}

/// Unvalidated parameter candidate, mirroring the flat key-value document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub rho: f64,
    pub n: f64,
    #[serde(rename = "N0", default = "default_n0")]
    pub n0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma: f64,
    #[serde(rename = "A_p")]
    pub a_p: f64,
    pub a1: f64,
    pub a2: f64,
    #[serde(rename = "A_d")]
    pub a_d: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub delta: f64,
}

impl RawParams {
    /// Parses the flat key-value document. Unknown keys are rejected and `N0`
    /// defaults to 1.
    pub fn from_toml_str(doc: &str) -> Result<Self, ParamError> {
        Ok(toml::from_str(doc)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat f64 record always serializes")
    }

    pub fn get(&self, field: ParamField) -> f64 {
        match field {
            ParamField::Rho => self.rho,
            ParamField::N => self.n,
            ParamField::N0 => self.n0,
            ParamField::Sigma1 => self.sigma1,
            ParamField::Sigma2 => self.sigma2,
            ParamField::Sigma => self.sigma,
            ParamField::Ap => self.a_p,
            ParamField::A1 => self.a1,
            ParamField::A2 => self.a2,
            ParamField::Ad => self.a_d,
            ParamField::B1 => self.b1,
            ParamField::B2 => self.b2,
            ParamField::B3 => self.b3,
            ParamField::Delta => self.delta,
        }
    }

    pub fn set(&mut self, field: ParamField, value: f64) {
        let slot = match field {
            ParamField::Rho => &mut self.rho,
            ParamField::N => &mut self.n,
            ParamField::N0 => &mut self.n0,
            ParamField::Sigma1 => &mut self.sigma1,
            ParamField::Sigma2 => &mut self.sigma2,
            ParamField::Sigma => &mut self.sigma,
            ParamField::Ap => &mut self.a_p,
            ParamField::A1 => &mut self.a1,
            ParamField::A2 => &mut self.a2,
            ParamField::Ad => &mut self.a_d,
            ParamField::B1 => &mut self.b1,
            ParamField::B2 => &mut self.b2,
            ParamField::B3 => &mut self.b3,
            ParamField::Delta => &mut self.delta,
        };
        *slot = value;
    }

    /// Applies several overrides jointly, so simplex-constrained triples can
    /// move together before re-validation.
    pub fn with_overrides(mut self, overrides: &[(ParamField, f64)]) -> Self {
        for &(field, value) in overrides {
            self.set(field, value);
        }
        self
    }

    pub fn validate(&self) -> Result<EconomyParams, ValidationErrors> {
        validate(self)
    }
}

/// Parameters certified to satisfy every model restriction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EconomyParams {
    prefs: Preferences,
    demo: Demographics,
    tech: Technology,
}

impl EconomyParams {
    pub fn prefs(&self) -> &Preferences {
        &self.prefs
    }

    pub fn demo(&self) -> &Demographics {
        &self.demo
    }

    pub fn tech(&self) -> &Technology {
        &self.tech
    }

    pub fn get(&self, field: ParamField) -> f64 {
        self.to_raw().get(field)
    }

    pub fn to_raw(&self) -> RawParams {
        let (p, d, t) = (&self.prefs, &self.demo, &self.tech);
        RawParams {
            rho: p.rho,
            n: d.n,
            n0: d.n0,
            sigma1: p.sigma1,
            sigma2: p.sigma2,
            sigma: p.sigma,
            a_p: t.a_p,
            a1: t.a1,
            a2: t.a2,
            a_d: t.a_d,
            b1: t.b1,
            b2: t.b2,
            b3: t.b3,
            delta: t.delta,
        }
    }

    /// `delta + rho`, the effective user cost of capital.
    pub fn capital_cost(&self) -> f64 {
        self.tech.delta + self.prefs.rho
    }

    /// `(delta + n) / (delta + rho)`, the break-even investment ratio.
    pub fn investment_ratio(&self) -> f64 {
        (self.tech.delta + self.demo.n) / (self.tech.delta + self.prefs.rho)
    }
}

impl From<EconomyParams> for RawParams {
    fn from(p: EconomyParams) -> Self {
        p.to_raw()
    }
}

/// Checks every invariant of the parameter set and returns all violations.
pub fn validate(raw: &RawParams) -> Result<EconomyParams, ValidationErrors> {
    let mut errors = Vec::new();

    let mut finite = true;
    for field in ParamField::ALL {
        let value = raw.get(field);
        if !value.is_finite() {
            errors.push(ValidationError::NonFinite { field, value });
            finite = false;
        }
    }
    if !finite {
        return Err(ValidationErrors(errors));
    }

    use ParamField as F;
    for field in [F::Sigma1, F::Sigma2, F::Sigma, F::N, F::N0, F::Ap, F::Ad, F::Delta] {
        let value = raw.get(field);
        if value <= 0.0 {
            errors.push(ValidationError::NonPositive { field, value });
        }
    }
    let sigma_sum = raw.sigma1 + raw.sigma2;
    if (sigma_sum - 1.0).abs() > SUM_TOLERANCE {
        errors.push(ValidationError::SigmaWeightSum { sum: sigma_sum });
    }
    if raw.sigma == 1.0 {
        errors.push(ValidationError::UnitCurvature);
    }
    if raw.rho <= raw.n {
        errors.push(ValidationError::DiscountNotAboveGrowth { rho: raw.rho, n: raw.n });
    }
    for field in [F::A1, F::A2, F::B1, F::B2, F::B3] {
        let value = raw.get(field);
        if !(value > 0.0 && value < 1.0) {
            errors.push(ValidationError::ElasticityOutOfRange { field, value });
        }
    }
    let a_sum = raw.a1 + raw.a2;
    if (a_sum - 1.0).abs() > SUM_TOLERANCE {
        errors.push(ValidationError::PhysicalReturnsToScale { sum: a_sum });
    }
    let b_sum = raw.b1 + raw.b2 + raw.b3;
    if (b_sum - 1.0).abs() > SUM_TOLERANCE {
        errors.push(ValidationError::GigReturnsToScale { sum: b_sum });
    }

    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }

    Ok(EconomyParams {
        prefs: Preferences { sigma1: raw.sigma1, sigma2: raw.sigma2, sigma: raw.sigma, rho: raw.rho },
        demo: Demographics { n: raw.n, n0: raw.n0 },
        tech: Technology {
            a_p: raw.a_p,
            a1: raw.a1,
            a2: raw.a2,
            a_d: raw.a_d,
            b1: raw.b1,
            b2: raw.b2,
            b3: raw.b3,
            delta: raw.delta,
        },
    })
}

/// Copy of `base` with one field replaced. The result is a candidate and must
/// be re-validated.
pub fn with_shock(base: &EconomyParams, field: ParamField, value: f64) -> RawParams {
    let mut raw = base.to_raw();
    raw.set(field, value);
    raw
}

/// Same as [`with_shock`] but addressing the field by its document key.
pub fn with_shock_named(base: &EconomyParams, key: &str, value: f64) -> Result<RawParams, ParamError> {
    let field: ParamField = key.parse()?;
    Ok(with_shock(base, field, value))
}
