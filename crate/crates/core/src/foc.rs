//! Stationarity conditions of the current-value Hamiltonian and a damped
//! Newton solver for them.
//!
//! This is the independent check on the closed form: it knows nothing about
//! the auxiliary constants and works directly with the production functions,
//! the utility flow and the first-order conditions. The co-state is
//! eliminated through the consumption condition, leaving five unknowns
//! `(c, h_p, h_d, u_p, k)` and five residuals.
//!
//! Newton runs in unconstrained coordinates
//! `(ln c, ln k, ln(h_p/d), ln(h_d/d), ln(u_p/u_d))`. Every iterate is then
//! strictly inside the feasible box, and shares such as `u_d ~ 1e-9` are
//! carried with full relative precision instead of as `1 - u_p`.

use std::fmt::Write as _;

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{pow_prod, rel_diff_guarded};
use crate::params::EconomyParams;
use crate::steady_state::{utility_flow_unchecked, SteadyState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FocError {
    #[error("candidate state outside the feasible domain: {0}")]
    Domain(String),
    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
}

/// A point in the domain of the first-order system.
///
/// The complements `d = 1 - h_p - h_d` and `u_d = 1 - u_p` are stored
/// explicitly so they keep full precision when they are tiny.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateState {
    c: f64,
    h_p: f64,
    h_d: f64,
    d: f64,
    u_p: f64,
    u_d: f64,
    k: f64,
}

impl CandidateState {
    pub fn new(c: f64, h_p: f64, h_d: f64, u_p: f64, k: f64) -> Result<Self, FocError> {
        Self::with_complements(c, h_p, h_d, 1.0 - h_p - h_d, u_p, 1.0 - u_p, k)
    }

    /// Builds a state with explicitly supplied complements, which must agree
    /// with `1 - h_p - h_d` and `1 - u_p` to rounding.
    pub fn with_complements(c: f64, h_p: f64, h_d: f64, d: f64, u_p: f64, u_d: f64, k: f64) -> Result<Self, FocError> {
        let all = [c, h_p, h_d, d, u_p, u_d, k];
        if all.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(FocError::Domain(format!(
                "need c, k, h_p, h_d, d, u_p, u_d > 0; got c={c}, h_p={h_p}, h_d={h_d}, d={d}, u_p={u_p}, u_d={u_d}, k={k}"
            )));
        }
        if (h_p + h_d + d - 1.0).abs() > 1e-12 || (u_p + u_d - 1.0).abs() > 1e-12 {
            return Err(FocError::Domain("shares do not sum to one".to_owned()));
        }
        Ok(CandidateState { c, h_p, h_d, d, u_p, u_d, k })
    }

    /// Takes `(c, h_p, h_d, d, u_p, u_d, k)` from a closed-form state.
    pub fn from_steady_state(ss: &SteadyState) -> Result<Self, FocError> {
        Self::with_complements(ss.c, ss.h_p, ss.h_d, ss.d, ss.u_p, ss.u_d, ss.k)
    }

    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn h_p(&self) -> f64 {
        self.h_p
    }
    pub fn h_d(&self) -> f64 {
        self.h_d
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn u_p(&self) -> f64 {
        self.u_p
    }
    pub fn u_d(&self) -> f64 {
        self.u_d
    }
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Per-capita physical and gig output at this state.
    pub fn outputs(&self, params: &EconomyParams) -> (f64, f64) {
        let t = params.tech();
        let y_p = t.a_p * pow_prod(&[(self.u_p * self.k, t.a1), (self.h_p, t.a2)]);
        let y_d = t.a_d * pow_prod(&[(self.u_d * self.k, t.b1), (self.h_d, t.b2), (self.d, t.b3)]);
        (y_p, y_d)
    }

    /// Completes the state into the full steady-state record, with the
    /// co-state taken from the consumption condition.
    pub fn evaluate(&self, params: &EconomyParams) -> SteadyState {
        let prefs = params.prefs();
        let (y_p, y_d) = self.outputs(params);
        let u = utility_flow_unchecked(self.c, self.d, prefs);
        let lambda = (1.0 - prefs.sigma) * prefs.sigma1 * u / self.c;
        SteadyState {
            h_p: self.h_p,
            h_d: self.h_d,
            y_p,
            y_d,
            y: y_p + y_d,
            c: self.c,
            d: self.d,
            u,
            u_p: self.u_p,
            u_d: self.u_d,
            k: self.k,
            lambda,
        }
    }
}

/// Which output elasticity multiplies gig output in the co-state condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoStateWeight {
    /// `b1`: the derivative of gig output with respect to capital.
    #[default]
    B1,
    /// `a2`, reproducing the co-state equation as printed.
    A2,
}

/// The six stationarity residuals in a fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualVector {
    pub r_c: f64,
    pub r_u: f64,
    pub r_hp: f64,
    pub r_hd: f64,
    pub r_lambda: f64,
    pub r_k: f64,
}

impl ResidualVector {
    pub fn as_array(&self) -> [f64; 6] {
        [self.r_c, self.r_u, self.r_hp, self.r_hd, self.r_lambda, self.r_k]
    }

    pub fn sup_norm(&self) -> f64 {
        self.as_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Raw residuals and the same residuals divided by the magnitude of their
/// largest constituent term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocResiduals {
    pub raw: ResidualVector,
    pub relative: ResidualVector,
}

impl FocResiduals {
    pub fn sup_norm(&self) -> f64 {
        self.raw.sup_norm()
    }

    pub fn relative_sup_norm(&self) -> f64 {
        self.relative.sup_norm()
    }
}

fn residual(terms: &[f64]) -> (f64, f64) {
    let sum: f64 = terms.iter().sum();
    let scale = terms.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let rel = if scale > 0.0 { sum / scale } else { sum };
    (sum, rel)
}

/// Evaluates the stationarity conditions at `state`.
///
/// `r_c` is identically zero because the co-state is defined from it.
pub fn residuals(params: &EconomyParams, state: &CandidateState, weight: CoStateWeight) -> FocResiduals {
    let t = params.tech();
    let prefs = params.prefs();
    let (y_p, y_d) = state.outputs(params);
    let u = utility_flow_unchecked(state.c, state.d, prefs);
    let lambda = (1.0 - prefs.sigma) * prefs.sigma1 * u / state.c;
    let leisure_term = (1.0 - prefs.sigma) * prefs.sigma2 * u / state.d;
    let data_term = lambda * t.b3 * y_d / state.d;
    let k_weight = match weight {
        CoStateWeight::B1 => t.b1,
        CoStateWeight::A2 => t.a2,
    };

    let (u_raw, u_rel) = residual(&[t.a1 * y_p / state.u_p, -t.b1 * y_d / state.u_d]);
    let (hp_raw, hp_rel) = residual(&[lambda * t.a2 * y_p / state.h_p, -data_term, -leisure_term]);
    let (hd_raw, hd_rel) = residual(&[lambda * t.b2 * y_d / state.h_d, -data_term, -leisure_term]);
    let (l_raw, l_rel) = residual(&[t.a1 * y_p / state.k, k_weight * y_d / state.k, -params.capital_cost()]);
    let (k_raw, k_rel) = residual(&[y_p, y_d, -state.c, -(t.delta + params.demo().n) * state.k]);

    FocResiduals {
        raw: ResidualVector { r_c: 0.0, r_u: u_raw, r_hp: hp_raw, r_hd: hd_raw, r_lambda: l_raw, r_k: k_raw },
        relative: ResidualVector { r_c: 0.0, r_u: u_rel, r_hp: hp_rel, r_hd: hd_rel, r_lambda: l_rel, r_k: k_rel },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrictOptions {
    /// Convergence threshold on the relative residual sup-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative step of the central-difference Jacobian.
    pub fd_rel_step: f64,
    pub max_halvings: usize,
    /// Smallest share an iterate may take.
    pub box_margin: f64,
    pub co_state_weight: CoStateWeight,
}

impl Default for StrictOptions {
    fn default() -> Self {
        StrictOptions {
            tol: 1e-12,
            max_iter: 200,
            fd_rel_step: 1e-7,
            max_halvings: 30,
            box_margin: 1e-12,
            co_state_weight: CoStateWeight::B1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No step length in the halving sequence reduced the residual.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrictSolution {
    pub state: CandidateState,
    pub residuals: FocResiduals,
    /// Relative residual sup-norm of the guess followed by each accepted iterate.
    pub trace: Vec<f64>,
    pub termination: Termination,
}

impl StrictSolution {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn iterations(&self) -> usize {
        self.trace.len() - 1
    }

    /// One `iteration sup_norm` line per trace entry.
    pub fn trace_lines(&self) -> String {
        let mut out = String::new();
        for (i, r) in self.trace.iter().enumerate() {
            let _ = writeln!(out, "{i} {r:e}");
        }
        out
    }
}

type Vec5 = SVector<f64, 5>;
type Mat5 = SMatrix<f64, 5, 5>;

/// Maps a state to the unconstrained Newton coordinates.
fn encode(s: &CandidateState) -> Vec5 {
    Vec5::new(s.c.ln(), s.k.ln(), (s.h_p / s.d).ln(), (s.h_d / s.d).ln(), (s.u_p / s.u_d).ln())
}

fn decode(z: &Vec5) -> CandidateState {
    let (zp, zd) = (z[2], z[3]);
    let m = 0.0_f64.max(zp).max(zd);
    let (e0, ep, ed) = ((-m).exp(), (zp - m).exp(), (zd - m).exp());
    let sum = e0 + ep + ed;
    CandidateState {
        c: z[0].exp(),
        k: z[1].exp(),
        h_p: ep / sum,
        h_d: ed / sum,
        d: e0 / sum,
        u_p: 1.0 / (1.0 + (-z[4]).exp()),
        u_d: 1.0 / (1.0 + z[4].exp()),
    }
}

fn project(z: &mut Vec5, margin: f64) {
    let bound = ((1.0 - margin) / margin).ln();
    for i in 2..5 {
        z[i] = z[i].clamp(-bound, bound);
    }
    // c and k only need to stay representable
    for i in 0..2 {
        z[i] = z[i].clamp(-700.0, 700.0);
    }
}

fn system(params: &EconomyParams, z: &Vec5, weight: CoStateWeight) -> Vec5 {
    let r = residuals(params, &decode(z), weight).relative;
    Vec5::new(r.r_u, r.r_hp, r.r_hd, r.r_lambda, r.r_k)
}

fn sup(v: &Vec5) -> f64 {
    if v.iter().any(|x| !x.is_finite()) {
        return f64::INFINITY;
    }
    v.amax()
}

/// Damped Newton on the stationarity system starting from `guess`.
///
/// Each accepted step strictly lowers the relative residual sup-norm. Running
/// out of iterations or step halvings is not an error: the best iterate is
/// returned with the corresponding [`Termination`].
pub fn strict_solve(
    params: &EconomyParams,
    guess: &CandidateState,
    opts: &StrictOptions,
) -> Result<StrictSolution, FocError> {
    let weight = opts.co_state_weight;
    let mut z = encode(guess);
    project(&mut z, opts.box_margin);
    let mut f = system(params, &z, weight);
    let mut norm = sup(&f);
    let mut trace = vec![norm];
    let mut termination = Termination::MaxIterations;

    for iteration in 0..=opts.max_iter {
        if norm < opts.tol {
            termination = Termination::Converged;
            break;
        }
        if iteration == opts.max_iter {
            break;
        }

        let mut jac = Mat5::zeros();
        for j in 0..5 {
            let h = opts.fd_rel_step * z[j].abs().max(1.0);
            let (mut zp, mut zm) = (z, z);
            zp[j] += h;
            zm[j] -= h;
            let col = (system(params, &zp, weight) - system(params, &zm, weight)) / (2.0 * h);
            jac.set_column(j, &col);
        }
        let step = jac
            .lu()
            .solve(&(-f))
            .filter(|s| s.iter().all(|x| x.is_finite()))
            .ok_or(FocError::SingularJacobian { iteration })?;

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut trial = z + step * alpha;
            project(&mut trial, opts.box_margin);
            let f_trial = system(params, &trial, weight);
            let n_trial = sup(&f_trial);
            if n_trial < norm {
                accepted = Some((trial, f_trial, n_trial));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((zn, fn_, nn)) => {
                z = zn;
                f = fn_;
                norm = nn;
                trace.push(norm);
            }
            None => {
                termination = Termination::Stalled;
                break;
            }
        }
    }

    let state = decode(&z);
    Ok(StrictSolution { residuals: residuals(params, &state, weight), state, trace, termination })
}

/// Relative difference per field between a closed-form and a strict state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDiscrepancy {
    pub field: String,
    pub closed: f64,
    pub strict: f64,
    pub rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub fields: Vec<FieldDiscrepancy>,
}

impl DiscrepancyReport {
    pub fn max_rel_diff(&self) -> f64 {
        self.fields.iter().fold(0.0, |m, f| m.max(f.rel_diff))
    }

    pub fn get(&self, field: &str) -> Option<&FieldDiscrepancy> {
        self.fields.iter().find(|f| f.field == field)
    }
}

/// Compares all twelve steady-state fields, completing the strict state with
/// its implied outputs, utility and co-state.
pub fn discrepancy_report(closed: &SteadyState, strict: &CandidateState, params: &EconomyParams) -> DiscrepancyReport {
    let strict_full = strict.evaluate(params);
    let fields = SteadyState::FIELD_NAMES
        .iter()
        .zip(closed.values().iter().zip(strict_full.values()))
        .map(|(name, (&a, b))| FieldDiscrepancy {
            field: (*name).to_owned(),
            closed: a,
            strict: b,
            rel_diff: rel_diff_guarded(a, b),
        })
        .collect();
    DiscrepancyReport { fields }
}
