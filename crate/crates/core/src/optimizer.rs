//! Secrecy-rate maximization over the AN split `θ`.
//!
//! For a fixed Alice power and secrecy rate, each SOP constraint carves out
//! an interval of admissible `θ` (every SOP here is unimodal in `θ`). The
//! rate loop raises `R_s` in steps of `Δ` until the two intervals stop
//! overlapping.

use rayon::prelude::*;
use thiserror::Error;

use crate::closedform::{
    derived_ratios, j_analysis_kernel, min_pa, p_so1_imperfect_kernel, p_so1_kernel, p_so1_multi_kernel, p_so2_kernel,
    p_so2_multi_kernel, p_to_for_mode, ClosedFormError, PaMode, PaOutcome,
};
use crate::model::ValidatedParams;

pub const DEFAULT_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("alpha is zero (P_A = P_max or R_s = R_b): the active SOP is 1")]
    AlphaZero,
    #[error("rate step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
}

/// A closed sub-interval of `[0, 1]`, possibly empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaInterval {
    pub lo: f64,
    pub hi: f64,
    pub empty: bool,
}

impl ThetaInterval {
    pub const EMPTY: ThetaInterval = ThetaInterval {
        lo: 0.0,
        hi: 0.0,
        empty: true,
    };
    pub const FULL: ThetaInterval = ThetaInterval {
        lo: 0.0,
        hi: 1.0,
        empty: false,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        if lo <= hi {
            ThetaInterval { lo, hi, empty: false }
        } else {
            Self::EMPTY
        }
    }

    pub fn intersect(&self, other: &ThetaInterval) -> ThetaInterval {
        if self.empty || other.empty {
            return Self::EMPTY;
        }
        Self::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn contains(&self, theta: f64) -> bool {
        !self.empty && self.lo <= theta && theta <= self.hi
    }

    /// The point of the interval nearest to `theta`.
    pub fn closest_to(&self, theta: f64) -> Option<f64> {
        (!self.empty).then(|| theta.clamp(self.lo, self.hi))
    }
}

/// Bisects for the crossing of `f = eps` on `[a, b]`, where `f(a) ≤ eps < f(b)`
/// or the reverse. Returns the endpoint of the final bracket on the feasible
/// side, so the result always satisfies `f ≤ eps`.
fn crossing(f: &dyn Fn(f64) -> f64, eps: f64, mut ok: f64, mut bad: f64) -> f64 {
    loop {
        let mid = 0.5 * (ok + bad);
        if mid == ok || mid == bad {
            return ok;
        }
        if f(mid) <= eps {
            ok = mid;
        } else {
            bad = mid;
        }
    }
}

/// `{θ ∈ [0, 1] : f(θ) ≤ eps}` for `f` nonincreasing on `[0, t]` and
/// nondecreasing on `[t, 1]`.
fn sublevel_set(f: &dyn Fn(f64) -> f64, eps: f64, t: f64) -> ThetaInterval {
    let t = t.clamp(0.0, 1.0);
    if !(f(t) <= eps) {
        return ThetaInterval::EMPTY;
    }
    let lo = if f(0.0) <= eps { 0.0 } else { crossing(f, eps, t, 0.0) };
    let hi = if f(1.0) <= eps { 1.0 } else { crossing(f, eps, t, 1.0) };
    ThetaInterval::new(lo, hi)
}

/// `α⁻¹ (ε^(1/(1−N)) − 1)`: the `θ` at which the perfect-CSI active SOP equals `ε`.
pub fn psi(params: &ValidatedParams, p_a: f64, r_s: f64) -> Result<f64, OptimizerError> {
    let alpha = derived_ratios(params, p_a, r_s).alpha;
    psi_kernel(alpha, params.epsilon, params.n_antennas)
}

fn psi_kernel(alpha: f64, eps: f64, n: usize) -> Result<f64, OptimizerError> {
    if !(alpha > 0.0) {
        return Err(OptimizerError::AlphaZero);
    }
    Ok((eps.ln() / (1.0 - n as f64)).exp_m1() / alpha)
}

/// `[max(0, ψ), 1]`, empty when `ψ > 1` or `α = 0`.
fn psi_interval(alpha: f64, eps: f64, n: usize) -> ThetaInterval {
    match psi_kernel(alpha, eps, n) {
        Ok(psi) => ThetaInterval::new(psi.max(0.0), 1.0),
        Err(_) => ThetaInterval::EMPTY,
    }
}

fn passive_interval(beta: f64, eps: f64, n: usize, k: usize) -> ThetaInterval {
    sublevel_set(&|t| p_so2_kernel(beta, t, n, k), eps, 1.0 / (n as f64 - 1.0))
}

/// `{θ : p_so2(θ) ≤ ε}` for one active eavesdropper.
pub fn phi_interval(params: &ValidatedParams, p_a: f64, r_s: f64) -> ThetaInterval {
    let beta = derived_ratios(params, p_a, r_s).beta;
    passive_interval(beta, params.epsilon, params.n_antennas, params.k_passive)
}

fn imperfect_active_interval(alpha: f64, eps: f64, n: usize, rho: f64) -> ThetaInterval {
    if rho >= 1.0 {
        return psi_interval(alpha, eps, n);
    }
    if !(alpha > 0.0) {
        return ThetaInterval::EMPTY;
    }
    let q = 1.0 - rho * rho;
    let f = |t: f64| p_so1_imperfect_kernel(alpha, t, n, q);
    let j = j_analysis_kernel(alpha, n, rho);
    let valley = if j.cond55 { 1.0 } else { j.theta2 };
    sublevel_set(&f, eps, valley)
}

/// `{θ : p_so1 ≤ ε}` with the estimated-channel active SOP.
pub fn sigma_interval(params: &ValidatedParams, p_a: f64, r_s: f64) -> ThetaInterval {
    let alpha = derived_ratios(params, p_a, r_s).alpha;
    imperfect_active_interval(alpha, params.epsilon, params.n_antennas, params.rho_ea)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Perfect CSI, one active eavesdropper.
    Alg1,
    /// Estimated jammer → active eavesdropper channel.
    Alg2,
    /// Several active eavesdroppers.
    Multi,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Multi => "multi",
        }
    }

    pub fn from_name(s: &str) -> Option<Algorithm> {
        [Algorithm::Alg1, Algorithm::Alg2, Algorithm::Multi]
            .into_iter()
            .find(|a| a.name() == s)
    }

    /// The most specific algorithm for `params`.
    pub fn for_params(params: &ValidatedParams) -> Algorithm {
        if params.m_active > 1 {
            Algorithm::Multi
        } else if params.rho_ea < 1.0 {
            Algorithm::Alg2
        } else {
            Algorithm::Alg1
        }
    }

    /// `θ` that minimizes the passive SOP, used as the tie-break target.
    pub fn reference_theta(self, params: &ValidatedParams) -> f64 {
        let n = params.n_antennas as f64;
        match self {
            Algorithm::Multi => params.m_active as f64 / (n - 1.0),
            _ => 1.0 / (n - 1.0),
        }
    }

    /// `(p_so1, p_so2)` of this algorithm's model at `(p_a, θ, r_s)`.
    pub fn sops(self, params: &ValidatedParams, p_a: f64, theta: f64, r_s: f64) -> (f64, f64) {
        let r = derived_ratios(params, p_a, r_s);
        let (n, k, m) = (params.n_antennas, params.k_passive, params.m_active);
        match self {
            Algorithm::Alg1 => (p_so1_kernel(r.alpha, theta, n), p_so2_kernel(r.beta, theta, n, k)),
            Algorithm::Alg2 => {
                let q = 1.0 - params.rho_ea * params.rho_ea;
                (p_so1_imperfect_kernel(r.alpha, theta, n, q), p_so2_kernel(r.beta, theta, n, k))
            }
            Algorithm::Multi => (
                p_so1_multi_kernel(r.alpha, theta, n, m),
                p_so2_multi_kernel(r.beta, theta, n, m, k),
            ),
        }
    }

    /// `(active, passive)` admissible intervals at `(p_a, r_s)`.
    pub fn intervals(self, params: &ValidatedParams, p_a: f64, r_s: f64) -> (ThetaInterval, ThetaInterval) {
        let r = derived_ratios(params, p_a, r_s);
        let (n, k, m, eps) = (params.n_antennas, params.k_passive, params.m_active, params.epsilon);
        match self {
            Algorithm::Alg1 => (psi_interval(r.alpha, eps, n), passive_interval(r.beta, eps, n, k)),
            Algorithm::Alg2 => (
                imperfect_active_interval(r.alpha, eps, n, params.rho_ea),
                passive_interval(r.beta, eps, n, k),
            ),
            Algorithm::Multi => {
                // Active SOP decreases in θ; passive SOP is smallest at M/(N−1).
                let active = sublevel_set(&|t| p_so1_multi_kernel(r.alpha, t, n, m), eps, 1.0);
                let t = self.reference_theta(params);
                let passive = sublevel_set(&|t| p_so2_multi_kernel(r.beta, t, n, m, k), eps, t);
                (active, passive)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InfeasibilityReason {
    PaExceedsPmax,
    NoThetaAtRs0,
    None,
}

impl InfeasibilityReason {
    pub fn name(self) -> &'static str {
        match self {
            InfeasibilityReason::PaExceedsPmax => "PA_EXCEEDS_PMAX",
            InfeasibilityReason::NoThetaAtRs0 => "NO_THETA_AT_RS0",
            InfeasibilityReason::None => "NONE",
        }
    }
}

/// One iteration of the rate loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub r_s: f64,
    /// Perfect-CSI inverse of the active constraint (diagnostic only).
    pub psi: Option<f64>,
    pub active: ThetaInterval,
    pub passive: ThetaInterval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub feasible: bool,
    pub r_s_star: f64,
    pub theta_star: f64,
    pub p_a_star: f64,
    pub steps: usize,
    pub infeasibility_reason: InfeasibilityReason,
    pub trace: Vec<TraceStep>,
}

impl OptResult {
    fn infeasible(p_a_star: f64, steps: usize, reason: InfeasibilityReason, trace: Vec<TraceStep>) -> Self {
        OptResult {
            feasible: false,
            r_s_star: 0.0,
            theta_star: 0.0,
            p_a_star,
            steps,
            infeasibility_reason: reason,
            trace,
        }
    }
}

/// Runs the rate loop for `algorithm` with `P_A` from `pa_mode`.
pub fn maximize_rs(
    params: &ValidatedParams,
    algorithm: Algorithm,
    step: f64,
    pa_mode: PaMode,
) -> Result<OptResult, OptimizerError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(OptimizerError::BadStep(step));
    }
    let p_a = match min_pa(params, pa_mode)? {
        PaOutcome::Feasible(p) => p,
        PaOutcome::Infeasible(p) => {
            return Ok(OptResult::infeasible(p, 0, InfeasibilityReason::PaExceedsPmax, Vec::new()));
        }
    };
    let theta_ref = algorithm.reference_theta(params);

    let mut trace = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    let mut k: u32 = 0;
    loop {
        let r_s = f64::from(k) * step;
        if r_s >= params.r_b {
            break;
        }
        let (active, passive) = algorithm.intervals(params, p_a, r_s);
        trace.push(TraceStep {
            r_s,
            psi: psi(params, p_a, r_s).ok(),
            active,
            passive,
        });
        match active.intersect(&passive).closest_to(theta_ref) {
            Some(theta) => best = Some((r_s, theta)),
            None => break,
        }
        k += 1;
    }

    let steps = trace.len();
    Ok(match best {
        Some((r_s_star, theta_star)) => OptResult {
            feasible: true,
            r_s_star,
            theta_star,
            p_a_star: p_a,
            steps,
            infeasibility_reason: InfeasibilityReason::None,
            trace,
        },
        None => OptResult::infeasible(p_a, steps, InfeasibilityReason::NoThetaAtRs0, trace),
    })
}

pub fn maximize_rs_alg1(params: &ValidatedParams, step: f64, pa_mode: PaMode) -> Result<OptResult, OptimizerError> {
    maximize_rs(params, Algorithm::Alg1, step, pa_mode)
}

pub fn maximize_rs_alg2(params: &ValidatedParams, step: f64, pa_mode: PaMode) -> Result<OptResult, OptimizerError> {
    maximize_rs(params, Algorithm::Alg2, step, pa_mode)
}

pub fn maximize_rs_multi(params: &ValidatedParams, step: f64, pa_mode: PaMode) -> Result<OptResult, OptimizerError> {
    maximize_rs(params, Algorithm::Multi, step, pa_mode)
}

/// Brute force over `R_s = i R_b / rs_points` and `θ = j / (theta_points − 1)`
/// with `P_A` at its minimum. Returns the largest feasible `R_s` and the
/// smallest feasible `θ` on that row.
pub fn grid_search_oracle(
    params: &ValidatedParams,
    algorithm: Algorithm,
    pa_mode: PaMode,
    rs_grid_points: usize,
    theta_grid_points: usize,
) -> Result<OptResult, OptimizerError> {
    assert!(rs_grid_points >= 2 && theta_grid_points >= 2, "grid too small");
    let p_a = match min_pa(params, pa_mode)? {
        PaOutcome::Feasible(p) => p,
        PaOutcome::Infeasible(p) => {
            return Ok(OptResult::infeasible(p, 0, InfeasibilityReason::PaExceedsPmax, Vec::new()));
        }
    };
    // p_a is feasible by construction but the check is kept so the oracle
    // certifies all three constraints on its own.
    if !(p_to_for_mode(params, p_a, pa_mode)? <= params.delta * (1.0 + 1e-12)) {
        return Ok(OptResult::infeasible(p_a, 0, InfeasibilityReason::PaExceedsPmax, Vec::new()));
    }
    let eps = params.epsilon;
    let rows: Vec<Option<f64>> = (0..rs_grid_points)
        .into_par_iter()
        .map(|i| {
            let r_s = i as f64 * params.r_b / rs_grid_points as f64;
            (0..theta_grid_points)
                .map(|j| j as f64 / (theta_grid_points - 1) as f64)
                .find(|&theta| {
                    let (a, b) = algorithm.sops(params, p_a, theta, r_s);
                    a <= eps && b <= eps
                })
        })
        .collect();
    let best = rows
        .iter()
        .enumerate()
        .rev()
        .find_map(|(i, t)| t.map(|theta| (i as f64 * params.r_b / rs_grid_points as f64, theta)));
    Ok(match best {
        Some((r_s_star, theta_star)) => OptResult {
            feasible: true,
            r_s_star,
            theta_star,
            p_a_star: p_a,
            steps: rs_grid_points,
            infeasibility_reason: InfeasibilityReason::None,
            trace: Vec::new(),
        },
        None => OptResult::infeasible(p_a, rs_grid_points, InfeasibilityReason::NoThetaAtRs0, Vec::new()),
    })
}
