//! Steady state of a two-sector growth model with a physical sector and a
//! gig sector that uses time spent online as an input.
//!
//! The closed-form balanced-growth path is in [`steady_state`]; [`foc`]
//! re-derives it numerically from the first-order conditions, and
//! [`statics`] gives its response to the two TFP levels.

pub mod experiments;
pub mod foc;
pub mod numerics;
pub mod params;
pub mod sampling;
pub mod statics;
pub mod steady_state;
pub mod tables;

pub use experiments::{
    builtin_table1, builtin_table2, run_scenarios, sweep, MonotonicityReport, Scenario, ScenarioRow, ScenarioTable,
    SweepResult, Trend,
};
pub use foc::{
    discrepancy_report, residuals, strict_solve, CandidateState, CoStateWeight, DiscrepancyReport, FocError,
    FocResiduals, StrictOptions, StrictSolution, Termination,
};
pub use params::{
    validate, with_shock, with_shock_named, EconomyParams, ParamError, ParamField, RawParams, ValidationError,
    ValidationErrors,
};
pub use sampling::{draw_batch, draw_feasible, SamplerConfig};
pub use statics::{
    agreement_report, analytic_tfp_derivatives, fd_derivatives, predict_signs, sign_constants, DerivativeSet, Sector,
    Sign, SignConstants, SignReport, StaticsError,
};
pub use steady_state::{
    check_feasibility, compute_constants, solve, AuxiliaryConstants, CapitalWeight, ConsumptionFormula,
    FeasibilityReport, SteadyState, SteadyStateError, VariantPolicy,
};
pub use tables::{reproduce, Reproduction, ReproductionTolerances, TableId};
