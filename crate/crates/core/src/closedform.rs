//! Closed-form CDFs, outage and secrecy-outage probabilities, minimum Alice
//! power and the θ-derivative helpers.
//!
//! Most quantities come in two flavours. The public functions take
//! `(params, split, r_s)` and are what callers outside the crate should use.
//! The `*_kernel` functions are the same expressions written in terms of the
//! dimensionless ratios `α`, `β` and `θ`, which is what the optimizer needs
//! when `P_A` and `R_s` are fixed and only `θ` moves.
//!
//! Powers are always evaluated as `exp(k · ln(1 + x))` so that large
//! exponents (big `N` or `K`) neither overflow nor lose precision near 1.

use thiserror::Error;

use crate::model::{PowerSplit, ValidatedParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosedFormError {
    /// The interference-limited model has no jamming at the receiver, so the
    /// SNR is unbounded. `limit` is what the formula evaluates to anyway.
    #[error("distribution is degenerate without jamming (formula value {limit})")]
    DegenerateDistribution { limit: f64 },
    #[error("{field} = {value} is out of range ({expected})")]
    RangeError {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("undefined: {0}")]
    Undefined(&'static str),
}

/// `(1 + x)^k`.
pub(crate) fn pow1p(x: f64, k: f64) -> f64 {
    (k * x.ln_1p()).exp()
}

/// `1 − (1 − s)^k` for `s ∈ [0, 1]`.
fn one_minus_pow_complement(s: f64, k: f64) -> f64 {
    -(k * (-s).ln_1p()).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRatios {
    /// `(P_max/P_A − 1) σ²_{J,Ea} x / σ²_{A,Ea}`.
    pub alpha: f64,
    /// `(P_max/P_A − 1) σ²_{J,Ek} x / σ²_{A,Ek}`.
    pub beta: f64,
    /// `(1 − ρ²_{Ea}) α / (N − 1)`.
    pub lambda_cap: f64,
}

/// Ratios at Alice power `p_a` and secrecy rate `r_s`, with `x = 2^(R_b − R_s) − 1`.
pub fn derived_ratios(params: &ValidatedParams, p_a: f64, r_s: f64) -> DerivedRatios {
    let x = params.eavesdropper_threshold(r_s);
    let headroom = params.p_max / p_a - 1.0;
    let alpha = headroom * params.var_jea * x / params.var_aea;
    let beta = headroom * x * params.var_jek / params.var_aek;
    let q = 1.0 - params.rho_ea * params.rho_ea;
    DerivedRatios {
        alpha,
        beta,
        lambda_cap: q * alpha / (params.n_antennas as f64 - 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageMetrics {
    pub p_to: f64,
    pub p_so1: f64,
    pub p_so2: f64,
}

// ---------------------------------------------------------------------------
// SNR CDFs

/// Jamming-to-signal ratio `c_J · x / (P_A σ²_A)` shared by all active/passive CDFs.
fn load(p_j: f64, var_j: f64, x: f64, p_a: f64, var_a: f64) -> f64 {
    p_j * var_j * x / (p_a * var_a)
}

/// CDF of the active eavesdropper's SNR with perfect CSI.
pub fn cdf_gamma_ea(x: f64, params: &ValidatedParams, split: &PowerSplit) -> Result<f64, ClosedFormError> {
    let n = params.n_antennas as f64;
    let u = load(split.p_ja(), params.var_jea, x, split.p_a(), params.var_aea);
    let v = -((1.0 - n) * u.ln_1p()).exp_m1();
    if split.p_ja() == 0.0 {
        return Err(ClosedFormError::DegenerateDistribution { limit: v });
    }
    Ok(v)
}

/// CDF of one passive eavesdropper's SNR.
pub fn cdf_gamma_ek(x: f64, params: &ValidatedParams, split: &PowerSplit) -> Result<f64, ClosedFormError> {
    let v = cdf_gamma_ek_multi(x, params, split);
    if split.p_ja() == 0.0 && split.p_jp() == 0.0 {
        return Err(ClosedFormError::DegenerateDistribution { limit: v });
    }
    Ok(v)
}

/// CDF of Bob's SNR, interference-limited by the active eavesdropper's jamming.
pub fn cdf_gamma_b(x: f64, params: &ValidatedParams, p_a: f64) -> f64 {
    let c = x * params.p_ea * params.var_eab / (p_a * params.var_ab);
    c / (1.0 + c)
}

/// CDF of the active eavesdropper's SNR when the jammer only has a
/// correlated estimate of its channel.
pub fn cdf_gamma_ea_imperfect(x: f64, params: &ValidatedParams, split: &PowerSplit) -> Result<f64, ClosedFormError> {
    let n = params.n_antennas as f64;
    let q = 1.0 - params.rho_ea * params.rho_ea;
    let ua = load(split.p_ja(), params.var_jea, x, split.p_a(), params.var_aea);
    let up = load(split.p_jp(), params.var_jea, x, split.p_a(), params.var_aea);
    let survival = pow1p(q * ua, n - 2.0) * pow1p(ua, 1.0 - n) * pow1p(q * up / (n - 2.0), 2.0 - n);
    let v = 1.0 - survival;
    if split.p_ja() == 0.0 && (q == 0.0 || split.p_jp() == 0.0) {
        return Err(ClosedFormError::DegenerateDistribution { limit: v });
    }
    Ok(v)
}

/// CDF of one of `M` active eavesdroppers' SNR.
pub fn cdf_gamma_eam_multi(x: f64, params: &ValidatedParams, split: &PowerSplit) -> f64 {
    let n = params.n_antennas as f64;
    let m = params.m_active as f64;
    let u = load(split.p_ja() / m, params.var_jea, x, split.p_a(), params.var_aea);
    -((2.0 - m - n) * u.ln_1p()).exp_m1()
}

/// CDF of one passive eavesdropper's SNR with `M` active beams.
pub fn cdf_gamma_ek_multi(x: f64, params: &ValidatedParams, split: &PowerSplit) -> f64 {
    let n = params.n_antennas as f64;
    let m = params.m_active as f64;
    let ua = load(split.p_ja(), params.var_jek, x, split.p_a(), params.var_aek);
    let up = load(split.p_jp(), params.var_jek, x, split.p_a(), params.var_aek);
    1.0 - pow1p(ua / m, -m) * pow1p(up / (n - m - 1.0), 1.0 + m - n)
}

// ---------------------------------------------------------------------------
// Transmission outage and minimum Alice power

/// Outage at Bob under the interference-limited model.
pub fn p_to(params: &ValidatedParams, p_a: f64) -> f64 {
    cdf_gamma_b(params.bob_threshold(), params, p_a)
}

/// Outage of the upper-bound SNR when the jammer → Bob channel is estimated
/// with correlation `ρ_B < 1`.
pub fn p_to_imperfect(params: &ValidatedParams, p_a: f64) -> Result<f64, ClosedFormError> {
    if !(params.rho_b < 1.0) {
        return Err(ClosedFormError::RangeError {
            field: "rho_b",
            value: params.rho_b,
            expected: "[0, 1) for the AN-leakage outage",
        });
    }
    let q = 1.0 - params.rho_b * params.rho_b;
    let e = (params.p_max / p_a - 1.0) * q * params.var_jb * params.bob_threshold() / params.var_ab;
    Ok(-(-e).exp_m1())
}

/// Outage of a noise-limited Bob, `Pr(P_A |h_AB|² < 2^R_b − 1)`.
pub fn p_to_noise_limited(params: &ValidatedParams, p_a: f64) -> f64 {
    -(-params.bob_threshold() / (p_a * params.var_ab)).exp_m1()
}

/// How `P_A` is chosen, and which outage model it is consistent with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PaMode {
    /// `(2^R_b − 1) / (−ln(1 − δ) σ²_AB)`: the smallest `P_A` meeting `δ` for a noise-limited Bob.
    NoiseLimited,
    /// Solves [`p_to`] `= δ`.
    InterferenceLimited,
    /// Solves [`p_to_imperfect`] `= δ`.
    ImperfectCsi,
}

impl PaMode {
    pub const ALL: [PaMode; 3] = [PaMode::NoiseLimited, PaMode::InterferenceLimited, PaMode::ImperfectCsi];

    pub fn name(self) -> &'static str {
        match self {
            PaMode::NoiseLimited => "noise_limited",
            PaMode::InterferenceLimited => "interference_limited",
            PaMode::ImperfectCsi => "imperfect_csi",
        }
    }

    pub fn from_name(s: &str) -> Option<PaMode> {
        PaMode::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl std::fmt::Display for PaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The transmission outage model that matches `mode`.
pub fn p_to_for_mode(params: &ValidatedParams, p_a: f64, mode: PaMode) -> Result<f64, ClosedFormError> {
    match mode {
        PaMode::NoiseLimited => Ok(p_to_noise_limited(params, p_a)),
        PaMode::InterferenceLimited => Ok(p_to(params, p_a)),
        PaMode::ImperfectCsi => p_to_imperfect(params, p_a),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PaOutcome {
    Feasible(f64),
    /// The required power exceeds `P_max`.
    Infeasible(f64),
}

impl PaOutcome {
    pub fn value(self) -> f64 {
        match self {
            PaOutcome::Feasible(v) | PaOutcome::Infeasible(v) => v,
        }
    }

    pub fn is_feasible(self) -> bool {
        matches!(self, PaOutcome::Feasible(_))
    }
}

/// Minimum Alice power meeting the transmission outage target `δ`.
pub fn min_pa(params: &ValidatedParams, mode: PaMode) -> Result<PaOutcome, ClosedFormError> {
    let x = params.bob_threshold();
    let delta = params.delta;
    let p = match mode {
        PaMode::NoiseLimited => x / (-(-delta).ln_1p() * params.var_ab),
        PaMode::InterferenceLimited => x * (1.0 - delta) * params.p_ea * params.var_eab / (delta * params.var_ab),
        PaMode::ImperfectCsi => {
            if !(params.rho_b > 0.0 && params.rho_b < 1.0) {
                return Err(ClosedFormError::RangeError {
                    field: "rho_b",
                    value: params.rho_b,
                    expected: "(0, 1) for pa_mode=imperfect_csi",
                });
            }
            let q = 1.0 - params.rho_b * params.rho_b;
            params.p_max / (1.0 - params.var_ab * (-delta).ln_1p() / (q * params.var_jb * x))
        }
    };
    Ok(if p > params.p_max {
        PaOutcome::Infeasible(p)
    } else {
        PaOutcome::Feasible(p)
    })
}

// ---------------------------------------------------------------------------
// Secrecy outage, ratio form

/// `(1 + θα)^(1−N)`.
pub fn p_so1_kernel(alpha: f64, theta: f64, n: usize) -> f64 {
    pow1p(theta * alpha, 1.0 - n as f64)
}

/// Survival function of one passive eavesdropper at the threshold.
fn passive_survival(beta: f64, theta: f64, n: f64) -> f64 {
    pow1p(beta * theta, -1.0) * pow1p(beta * (1.0 - theta) / (n - 2.0), 2.0 - n)
}

/// `1 − (1 − (1+βθ)^(−1) (1 + β(1−θ)/(N−2))^(2−N))^K`.
pub fn p_so2_kernel(beta: f64, theta: f64, n: usize, k: usize) -> f64 {
    one_minus_pow_complement(passive_survival(beta, theta, n as f64), k as f64)
}

/// Active SOP with estimated jammer → active eavesdropper channel; `q = 1 − ρ²`.
pub fn p_so1_imperfect_kernel(alpha: f64, theta: f64, n: usize, q: f64) -> f64 {
    let n = n as f64;
    pow1p(theta * q * alpha, n - 2.0) * pow1p(theta * alpha, 1.0 - n) * pow1p((1.0 - theta) * q * alpha / (n - 2.0), 2.0 - n)
}

/// `1 − F^M` with `F = 1 − (1 + θα/M)^(−(M+N−2))`.
pub fn p_so1_multi_kernel(alpha: f64, theta: f64, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    let f = -((2.0 - m - n) * (theta * alpha / m).ln_1p()).exp_m1();
    -(m * f.ln()).exp_m1()
}

/// `1 − F^K` with `F` the passive CDF for `M` active beams.
pub fn p_so2_multi_kernel(beta: f64, theta: f64, n: usize, m: usize, k: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    let s = pow1p(theta * beta / m, -m) * pow1p((1.0 - theta) * beta / (n - m - 1.0), 1.0 + m - n);
    one_minus_pow_complement(s, k as f64)
}

// ---------------------------------------------------------------------------
// Secrecy outage, parameter form

fn alpha_beta(params: &ValidatedParams, split: &PowerSplit, r_s: f64) -> DerivedRatios {
    derived_ratios(params, split.p_a(), r_s)
}

/// Active eavesdropper SOP, perfect CSI.
pub fn p_so1(params: &ValidatedParams, split: &PowerSplit, r_s: f64) -> f64 {
    p_so1_kernel(alpha_beta(params, split, r_s).alpha, split.theta(), params.n_antennas)
}

/// Passive eavesdroppers' SOP (the strongest of `K`).
pub fn p_so2(params: &ValidatedParams, split: &PowerSplit, r_s: f64) -> f64 {
    p_so2_kernel(alpha_beta(params, split, r_s).beta, split.theta(), params.n_antennas, params.k_passive)
}

/// Active eavesdropper SOP with correlation `ρ_Ea` between true and estimated channel.
pub fn p_so1_imperfect(params: &ValidatedParams, split: &PowerSplit, r_s: f64) -> f64 {
    let q = 1.0 - params.rho_ea * params.rho_ea;
    p_so1_imperfect_kernel(alpha_beta(params, split, r_s).alpha, split.theta(), params.n_antennas, q)
}

/// Active SOP for an uncorrelated estimate (`ρ_Ea = 0`), where the AN beam
/// gain is plain exponential.
pub fn p_so1_uncorrelated(params: &ValidatedParams, split: &PowerSplit, r_s: f64) -> f64 {
    let alpha = alpha_beta(params, split, r_s).alpha;
    let n = params.n_antennas as f64;
    let theta = split.theta();
    pow1p(theta * alpha, -1.0) * pow1p((1.0 - theta) * alpha / (n - 2.0), 2.0 - n)
}

/// SOP over `M` active eavesdroppers under selection combining.
pub fn p_so1_multi(params: &ValidatedParams, split: &PowerSplit, r_s: f64) -> f64 {
    let f = cdf_gamma_eam_multi(params.eavesdropper_threshold(r_s), params, split);
    -(params.m_active as f64 * f.ln()).exp_m1()
}

/// SOP over `K` passive eavesdroppers with `M` active beams.
pub fn p_so2_multi(params: &ValidatedParams, split: &PowerSplit, r_s: f64) -> f64 {
    let f = cdf_gamma_ek_multi(params.eavesdropper_threshold(r_s), params, split);
    -(params.k_passive as f64 * f.ln()).exp_m1()
}

/// The SOP pair that applies to `params`: multi-eavesdropper forms for
/// `M > 1`, otherwise the estimated-channel active SOP (which is the perfect
/// one at `ρ_Ea = 1`).
pub fn sop_pair(params: &ValidatedParams, split: &PowerSplit, r_s: f64) -> (f64, f64) {
    if params.m_active > 1 {
        (p_so1_multi(params, split, r_s), p_so2_multi(params, split, r_s))
    } else if params.rho_ea < 1.0 {
        (p_so1_imperfect(params, split, r_s), p_so2(params, split, r_s))
    } else {
        (p_so1(params, split, r_s), p_so2(params, split, r_s))
    }
}

pub fn outage_metrics(
    params: &ValidatedParams,
    split: &PowerSplit,
    r_s: f64,
    mode: PaMode,
) -> Result<OutageMetrics, ClosedFormError> {
    let (p_so1, p_so2) = sop_pair(params, split, r_s);
    Ok(OutageMetrics {
        p_to: p_to_for_mode(params, split.p_a(), mode)?,
        p_so1,
        p_so2,
    })
}

// ---------------------------------------------------------------------------
// Derivatives

/// `∂p_so1/∂θ`; the estimated-channel form is used whenever `ρ_Ea < 1`.
pub fn dp_so1_dtheta(params: &ValidatedParams, split: &PowerSplit, r_s: f64) -> f64 {
    let alpha = alpha_beta(params, split, r_s).alpha;
    dp_so1_dtheta_kernel(alpha, split.theta(), params.n_antennas, params.rho_ea)
}

pub fn dp_so1_dtheta_kernel(alpha: f64, theta: f64, n: usize, rho: f64) -> f64 {
    let nf = n as f64;
    if rho >= 1.0 {
        return (1.0 - nf) * alpha * pow1p(theta * alpha, -nf);
    }
    if alpha == 0.0 {
        return 0.0;
    }
    let q = 1.0 - rho * rho;
    let a = q * alpha * alpha * pow1p(theta * q * alpha, nf - 3.0) * pow1p(theta * alpha, -nf)
        * pow1p((1.0 - theta) * q * alpha / (nf - 2.0), 1.0 - nf);
    a * j_kernel(alpha, theta, n, rho)
}

/// `∂p_so2/∂θ`.
pub fn dp_so2_dtheta(params: &ValidatedParams, split: &PowerSplit, r_s: f64) -> f64 {
    let beta = alpha_beta(params, split, r_s).beta;
    dp_so2_dtheta_kernel(beta, split.theta(), params.n_antennas, params.k_passive)
}

pub fn dp_so2_dtheta_kernel(beta: f64, theta: f64, n: usize, k: usize) -> f64 {
    let nf = n as f64;
    let s = passive_survival(beta, theta, nf);
    let outer = k as f64 * pow1p(-s, k as f64 - 1.0);
    let r = beta / (1.0 + beta * theta);
    outer * r * r * pow1p(beta * (1.0 - theta) / (nf - 2.0), 1.0 - nf) * ((nf - 1.0) * theta - 1.0) / (nf - 2.0)
}

/// `∂p_so1_imperfect/∂ρ_Ea`.
pub fn dp_so1_drho(params: &ValidatedParams, split: &PowerSplit, r_s: f64) -> f64 {
    let alpha = alpha_beta(params, split, r_s).alpha;
    dp_so1_drho_kernel(alpha, split.theta(), params.n_antennas, params.rho_ea)
}

pub fn dp_so1_drho_kernel(alpha: f64, theta: f64, n: usize, rho: f64) -> f64 {
    let nf = n as f64;
    let q = 1.0 - rho * rho;
    -2.0 * rho
        * alpha
        * ((nf - 1.0) * theta - 1.0)
        * pow1p(theta * q * alpha, nf - 3.0)
        * pow1p(theta * alpha, 1.0 - nf)
        * pow1p((1.0 - theta) * q * alpha / (nf - 2.0), 1.0 - nf)
}

// ---------------------------------------------------------------------------
// The θ-quadratic governing the sign of ∂p_so1/∂θ for estimated channels

/// Coefficients `(a2, a1, a0)` of `J(θ) = a2 θ² + a1 θ + a0`.
fn j_coefficients(alpha: f64, n: usize, rho: f64) -> (f64, f64, f64) {
    let nf = n as f64;
    let q = 1.0 - rho * rho;
    let a2 = q * alpha * (nf - 1.0) / (nf - 2.0);
    let a1 = (nf - 1.0 - q * alpha) / (nf - 2.0);
    let a0 = -(nf - 1.0) * rho * rho / (q * alpha) - (nf - 1.0) / (nf - 2.0) + q;
    (a2, a1, a0)
}

pub fn j_kernel(alpha: f64, theta: f64, n: usize, rho: f64) -> f64 {
    let (a2, a1, a0) = j_coefficients(alpha, n, rho);
    (a2 * theta + a1) * theta + a0
}

/// `J(θ)` at Alice power `p_a` and rate `r_s`.
pub fn j_poly(params: &ValidatedParams, p_a: f64, r_s: f64, theta: f64) -> f64 {
    let alpha = derived_ratios(params, p_a, r_s).alpha;
    j_kernel(alpha, theta, params.n_antennas, params.rho_ea)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JAnalysis {
    /// Negative root.
    pub theta1: f64,
    /// Positive root; `p_so1` decreases on `[0, θ₂]` and increases after.
    pub theta2: f64,
    /// Minimum of `J` over the real line.
    pub min_j: f64,
    /// `θ₂ > 1`, i.e. `p_so1` is decreasing on all of `[0, 1]`.
    pub cond55: bool,
}

/// Roots and shape of `J` for `q > 0`, `α > 0`. `ρ = 0` is fine here.
pub(crate) fn j_analysis_kernel(alpha: f64, n: usize, rho: f64) -> JAnalysis {
    let (a2, a1, a0) = j_coefficients(alpha, n, rho);
    // a2 > 0 and a0 < 0, so the roots are real with opposite signs.
    let sq = (a1 * a1 - 4.0 * a2 * a0).sqrt();
    let (theta1, theta2) = if a1 >= 0.0 {
        let t = -(a1 + sq) / 2.0;
        (t / a2, a0 / t)
    } else {
        let t = (sq - a1) / 2.0;
        (a0 / t, t / a2)
    };
    let q = 1.0 - rho * rho;
    JAnalysis {
        theta1,
        theta2,
        min_j: a0 - a1 * a1 / (4.0 * a2),
        cond55: q * q * alpha * (alpha + 1.0) < (n as f64 - 1.0) * rho * rho,
    }
}

pub fn j_analysis(params: &ValidatedParams, p_a: f64, r_s: f64) -> Result<JAnalysis, ClosedFormError> {
    let rho = params.rho_ea;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(ClosedFormError::Undefined("J(θ) needs 0 < rho_ea < 1"));
    }
    let alpha = derived_ratios(params, p_a, r_s).alpha;
    if !(alpha > 0.0) {
        return Err(ClosedFormError::Undefined("J(θ) needs alpha > 0"));
    }
    Ok(j_analysis_kernel(alpha, params.n_antennas, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_split, SystemParams};
    use proptest::prelude::*;

    fn cfg(n: usize, k: usize, m: usize) -> ValidatedParams {
        SystemParams {
            n_antennas: n,
            k_passive: k,
            m_active: m,
            ..SystemParams::default()
        }
        .validate()
        .unwrap()
    }

    fn with(f: impl FnOnce(&mut SystemParams)) -> ValidatedParams {
        let mut p = SystemParams::default();
        f(&mut p);
        p.validate().unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn cdf_examples() {
        let p = with(|p| {
            p.n_antennas = 3;
            p.var_aea = 1.0;
            p.var_jea = 1.0;
            p.p_max = 3.0;
        });
        let s = make_split(&p, 1.0, 0.5).unwrap();
        assert_eq!(cdf_gamma_ea(0.0, &p, &s).unwrap(), 0.0);
        // (1 + 1)^(1−3) = 1/4.
        assert!((cdf_gamma_ea(1.0, &p, &s).unwrap() - 0.75).abs() < 1e-15);

        let s0 = make_split(&p, 3.0, 0.5).unwrap();
        assert!(matches!(
            cdf_gamma_ea(1.0, &p, &s0),
            Err(ClosedFormError::DegenerateDistribution { limit }) if limit == 0.0
        ));
        assert!(matches!(
            cdf_gamma_ek(1.0, &p, &s0),
            Err(ClosedFormError::DegenerateDistribution { limit }) if limit == 0.0
        ));
        assert_eq!(cdf_gamma_ek(0.0, &p, &s).unwrap(), 0.0);

        let p = with(|p| {
            p.var_ab = 2.0;
            p.p_ea = 4.0;
            p.var_eab = 1.0;
        });
        assert_eq!(cdf_gamma_b(0.0, &p, 2.0), 0.0);
        assert!((cdf_gamma_b(1.0, &p, 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn transmission_outage_examples() {
        let p = with(|p| p.r_b = 1e-12);
        assert!(p_to(&p, 1.0) < 1e-10);

        let p = with(|p| {
            p.var_ab = 1.0;
            p.p_ea = 5.0;
            p.var_eab = 2.0;
        });
        let half = p.bob_threshold() * p.p_ea * p.var_eab / p.var_ab;
        assert!((p_to(&p, half) - 0.5).abs() < 1e-12);

        let p = with(|p| p.rho_b = 0.5);
        assert_eq!(p_to_imperfect(&p, p.p_max).unwrap(), 0.0);
        let k = (1.0 - 0.25) * p.var_jb * p.bob_threshold() / p.var_ab;
        let p_a = p.p_max / (1.0 + std::f64::consts::LN_2 / k);
        assert!((p_to_imperfect(&p, p_a).unwrap() - 0.5).abs() < 1e-12);

        let p = cfg(6, 1, 1);
        assert!(matches!(p_to_imperfect(&p, 10.0), Err(ClosedFormError::RangeError { .. })));
    }

    #[test]
    fn min_pa_round_trips() {
        let p = with(|p| {
            p.delta = 1.0 - (-1.0f64).exp();
            p.var_ab = 1.0;
            p.p_max = 1e6;
        });
        let v = min_pa(&p, PaMode::NoiseLimited).unwrap().value();
        assert!(rel(v, p.bob_threshold()) < 1e-12);
        assert!((p_to_noise_limited(&p, v) - p.delta).abs() < 1e-12);

        for delta in [0.01, 0.1, 0.5] {
            let p = with(|p| {
                p.delta = delta;
                p.p_max = 1e9;
            });
            let v = min_pa(&p, PaMode::InterferenceLimited).unwrap();
            assert!(v.is_feasible());
            assert!((p_to(&p, v.value()) - delta).abs() < 1e-9);
        }

        for rho_b in [0.3, 0.8, 0.99] {
            let p = with(|p| p.rho_b = rho_b);
            let v = min_pa(&p, PaMode::ImperfectCsi).unwrap().value();
            assert!(v <= p.p_max);
            assert!((p_to_imperfect(&p, v).unwrap() - p.delta).abs() < 1e-9);
        }

        let p = cfg(6, 1, 1);
        assert!(min_pa(&p, PaMode::ImperfectCsi).is_err());
        let p = with(|p| p.delta = 1e-6);
        assert!(!min_pa(&p, PaMode::NoiseLimited).unwrap().is_feasible());
    }

    #[test]
    fn sop_examples() {
        let p = cfg(6, 3, 1);
        let s = make_split(&p, 100.0, 0.0).unwrap();
        assert_eq!(p_so1(&p, &s, 2.0), 1.0);
        let s = make_split(&p, 100.0, 0.4).unwrap();
        assert_eq!(p_so2(&p, &s, p.r_b), 1.0);
        assert_eq!(p_so1(&p, &s, p.r_b), 1.0);

        // (1 + 1)^(1 − N) with N = 3: θα = 1.
        assert!((p_so1_kernel(1.0, 1.0, 3) - 0.25).abs() < 1e-15);
        assert!((p_so1_kernel(2.0, 0.5, 2) - 0.5).abs() < 1e-15);

        let p = with(|p| p.rho_ea = 0.0);
        let s = make_split(&p, 300.0, 0.0).unwrap();
        let alpha = derived_ratios(&p, 300.0, 3.0).alpha;
        let expected = pow1p(alpha / 4.0, -4.0);
        assert!(rel(p_so1_imperfect(&p, &s, 3.0), expected) < 1e-12);
    }

    #[test]
    fn identity_reductions() {
        let p = with(|p| p.k_passive = 1);
        for &(p_a, theta, r_s) in &[(200.0, 0.3, 5.0), (1000.0, 0.9, 1.0), (50.0, 0.05, 7.5)] {
            let s = make_split(&p, p_a, theta).unwrap();
            let x = p.eavesdropper_threshold(r_s);
            let f = cdf_gamma_ea(x, &p, &s).unwrap();
            assert!((p_so1(&p, &s, r_s) - (1.0 - f)).abs() < 1e-12);
            assert!((f - cdf_gamma_eam_multi(x, &p, &s)).abs() < 1e-15);
            assert!((cdf_gamma_ek(x, &p, &s).unwrap() - cdf_gamma_ek_multi(x, &p, &s)).abs() < 1e-15);
            assert!((p_so2(&p, &s, r_s) - (1.0 - cdf_gamma_ek(x, &p, &s).unwrap())).abs() < 1e-12);
            assert_eq!(p_so1_imperfect(&p, &s, r_s), p_so1(&p, &s, r_s));
            assert!((p_so1_multi(&p, &s, r_s) - p_so1(&p, &s, r_s)).abs() < 1e-12);
            assert!((p_so2_multi(&p, &s, r_s) - p_so2(&p, &s, r_s)).abs() < 1e-12);

            let q = with(|p| p.rho_ea = 0.0);
            assert!((p_so1_imperfect(&q, &s, r_s) - p_so1_uncorrelated(&q, &s, r_s)).abs() < 1e-12);
            let qi = with(|p| p.rho_ea = 0.6);
            let fi = cdf_gamma_ea_imperfect(x, &qi, &s).unwrap();
            assert!((p_so1_imperfect(&qi, &s, r_s) - (1.0 - fi)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_examples() {
        let p = cfg(5, 3, 1);
        let theta = 1.0 / 4.0;
        let s = make_split(&p, 300.0, theta).unwrap();
        assert!(dp_so2_dtheta(&p, &s, 3.0).abs() < 1e-15);
        let s0 = make_split(&p, 300.0, 0.0).unwrap();
        assert!(dp_so2_dtheta(&p, &s0, 3.0) < 0.0);
        assert!(dp_so1_dtheta(&p, &s0, 3.0) < 0.0);
    }

    fn fd(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for &(n, alpha, rho, theta) in &[(4usize, 0.7, 0.6, 0.3), (6, 3.0, 0.9, 0.55), (8, 12.0, 0.2, 0.1), (5, 1.2, 1.0, 0.4)] {
            let q = 1.0 - rho * rho;
            let d = dp_so1_dtheta_kernel(alpha, theta, n, rho);
            let num = fd(|t| p_so1_imperfect_kernel(alpha, t, n, q), theta, h);
            assert!(rel(d, num) < 1e-4, "{n} {alpha} {rho}: {d} vs {num}");

            let dr = dp_so1_drho_kernel(alpha, theta, n, rho.min(0.95));
            let num = fd(|r| p_so1_imperfect_kernel(alpha, theta, n, 1.0 - r * r), rho.min(0.95), h);
            assert!(rel(dr, num) < 1e-4, "drho {n} {alpha} {rho}: {dr} vs {num}");

            for k in [1usize, 3] {
                let d = dp_so2_dtheta_kernel(alpha, theta, n, k);
                let num = fd(|t| p_so2_kernel(alpha, t, n, k), theta, h);
                assert!(rel(d, num) < 1e-4);
            }
        }
    }

    #[test]
    fn j_roots_and_case_split() {
        let p = with(|p| {
            p.n_antennas = 5;
            p.rho_ea = 0.6;
        });
        for r_s in [0.5, 3.0, 6.0, 7.9] {
            let p_a = 300.0;
            let j = j_analysis(&p, p_a, r_s).unwrap();
            assert!(j.theta1 < 0.0 && j.theta2 > 0.0);
            assert!(j_poly(&p, p_a, r_s, j.theta2).abs() < 1e-9);
            assert!(j_poly(&p, p_a, r_s, j.theta1).abs() < 1e-9);
            assert!(j.min_j < 0.0);
            assert_eq!(j.cond55, j.theta2 > 1.0);
        }
        assert!(j_analysis(&cfg(5, 1, 1), 300.0, 1.0).is_err());
        assert!(j_analysis(&with(|p| p.rho_ea = 0.0), 300.0, 1.0).is_err());
    }

    #[test]
    fn passive_sop_can_be_nonconvex_far_from_the_operating_region() {
        // Unimodal with minimum at 1/(N−1), but the second difference is
        // clearly negative somewhere for several eavesdroppers at small β.
        let (n, k, beta) = (8usize, 5usize, 1.0);
        let h = 1e-3;
        let worst = (1..1000)
            .map(|i| {
                let t = i as f64 / 1000.0;
                (p_so2_kernel(beta, t + h, n, k) - 2.0 * p_so2_kernel(beta, t, n, k) + p_so2_kernel(beta, t - h, n, k)) / (h * h)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(worst < -1e-3, "{worst}");
    }

    #[test]
    fn sop_direction_depends_on_theta() {
        let (n, alpha) = (5usize, 2.0);
        assert!(dp_so1_drho_kernel(alpha, 0.5, n, 0.6) < 0.0);
        assert!(dp_so1_drho_kernel(alpha, 0.1, n, 0.6) > 0.0);
        assert_eq!(dp_so1_drho_kernel(alpha, 0.25, n, 0.6), 0.0);
    }

    fn geometric_grid() -> Vec<f64> {
        (0..200).map(|i| 1e-6 * 1.12f64.powi(i)).collect()
    }

    #[test]
    fn cdfs_are_proper() {
        let p = with(|p| {
            p.n_antennas = 7;
            p.m_active = 2;
            p.k_passive = 3;
            p.rho_ea = 0.7;
        });
        let s = make_split(&p, 500.0, 0.4).unwrap();
        let cdfs: [&dyn Fn(f64) -> f64; 6] = [
            &|x| cdf_gamma_ea(x, &p, &s).unwrap(),
            &|x| cdf_gamma_ek(x, &p, &s).unwrap(),
            &|x| cdf_gamma_b(x, &p, 500.0),
            &|x| cdf_gamma_ea_imperfect(x, &p, &s).unwrap(),
            &|x| cdf_gamma_eam_multi(x, &p, &s),
            &|x| cdf_gamma_ek_multi(x, &p, &s),
        ];
        for f in cdfs {
            assert_eq!(f(0.0), 0.0);
            let vals: Vec<f64> = geometric_grid().into_iter().map(f).collect();
            assert!(vals.windows(2).all(|w| w[1] >= w[0]));
            assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(f(1e12) > 1.0 - 1e-6);
        }
    }

    #[test]
    fn large_exponents_stay_finite() {
        let v = p_so2_kernel(100.0, 0.5, 64, 64);
        assert!(v.is_finite() && v > 0.0 && v < 1.0);
        let v = p_so1_kernel(1e3, 1.0, 64);
        assert!(v > 0.0 && v < 1e-180);
        let v = p_so1_multi_kernel(1e-4, 0.5, 64, 30);
        assert!(v.is_finite() && v > 0.99);
    }

    proptest! {
        #[test]
        fn sops_monotone_in_pa_and_rs(
            n in 3usize..12, k in 1usize..6, theta in 0.0f64..=1.0, rho in 0.0f64..=1.0,
            frac in 0.001f64..0.5,
        ) {
            let p = with(|p| {
                p.n_antennas = n.max(4);
                p.k_passive = k;
                p.m_active = if n >= 5 { 2 } else { 1 };
                p.rho_ea = rho;
            });
            let eval = |p_a: f64, r_s: f64| {
                let s = make_split(&p, p_a.min(p.p_max), theta).unwrap();
                [p_so1(&p, &s, r_s), p_so2(&p, &s, r_s), p_so1_imperfect(&p, &s, r_s), p_so1_multi(&p, &s, r_s), p_so2_multi(&p, &s, r_s)]
            };
            let base_pa = frac * p.p_max;
            let mut prev = eval(base_pa, 0.0);
            for i in 1..=100 {
                let cur = eval(base_pa, p.r_b * i as f64 / 100.0);
                for (c, q) in cur.iter().zip(&prev) {
                    prop_assert!(*c >= *q - 1e-12);
                }
                prev = cur;
            }
            let mut prev = eval(base_pa, 4.0);
            for i in 1..=100 {
                let cur = eval(base_pa + (p.p_max - base_pa) * i as f64 / 100.0, 4.0);
                for (c, q) in cur.iter().zip(&prev) {
                    prop_assert!(*c >= *q - 1e-12);
                }
                prev = cur;
            }
        }

        #[test]
        fn perfect_active_sop_decreases_in_theta(n in 3usize..40, alpha in 1e-3f64..1e3) {
            let mut prev = p_so1_kernel(alpha, 0.0, n);
            for i in 1..=100 {
                let cur = p_so1_kernel(alpha, i as f64 / 100.0, n);
                prop_assert!(cur < prev);
                prev = cur;
            }
        }

        #[test]
        fn imperfect_sop_nonincreasing_in_rho_above_balance(
            n in 3usize..12, alpha in 1e-2f64..1e2, t in 0.0f64..=1.0,
        ) {
            let theta = 1.0 / (n as f64 - 1.0) + t * (1.0 - 1.0 / (n as f64 - 1.0));
            let mut prev = p_so1_imperfect_kernel(alpha, theta, n, 1.0);
            for i in 1..=100 {
                let rho: f64 = i as f64 / 100.0;
                let cur = p_so1_imperfect_kernel(alpha, theta, n, 1.0 - rho * rho);
                prop_assert!(cur <= prev * (1.0 + 1e-12));
                prev = cur;
            }
        }

        #[test]
        fn sign_pattern_follows_case_split(n in 3usize..12, alpha in 1e-2f64..1e2, rho in 0.01f64..0.99) {
            let j = j_analysis_kernel(alpha, n, rho);
            let mut changes = 0;
            let mut prev = dp_so1_dtheta_kernel(alpha, 0.0, n, rho).signum();
            prop_assert!(prev < 0.0);
            for i in 1..=1000 {
                let t = i as f64 / 1000.0;
                let s = dp_so1_dtheta_kernel(alpha, t, n, rho);
                if (t - j.theta2).abs() < 1e-6 {
                    continue;
                }
                let s = s.signum();
                if s != prev {
                    changes += 1;
                }
                prev = s;
            }
            prop_assert_eq!(changes, if j.cond55 { 0 } else { 1 });
        }
    }
}
