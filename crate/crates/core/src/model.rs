//! Scenario parameters and the power split.
//!
//! Everything in here is in linear, noise-normalized units (`N0 = 1`). Decibel
//! values only exist at the configuration boundary and go through
//! [`db_to_linear`] on the way in.

use std::ops::Deref;

use thiserror::Error;

/// Errors raised while validating a scenario or building a power split.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("jammer needs at least {required} antennas for {m_active} active eavesdropper(s), got {n_antennas}")]
    AntennaCountTooSmall {
        n_antennas: usize,
        m_active: usize,
        required: usize,
    },
    #[error("{field} = {value} is out of range ({expected})")]
    RangeError {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("{field} must be strictly positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
}

/// Converts a decibel value to a linear power ratio.
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// Full scenario description.
///
/// Variances are `σ²` of the corresponding Rayleigh links, already divided by
/// the receiver noise power. `var_jek` and `var_aek` are shared by all passive
/// eavesdroppers and `var_jea`/`var_aea` by all active ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Jammer antenna count `N`.
    pub n_antennas: usize,
    /// Number of passive eavesdroppers `K`.
    pub k_passive: usize,
    /// Number of active eavesdroppers `M`.
    pub m_active: usize,
    /// Alice → Bob.
    pub var_ab: f64,
    /// Alice → active eavesdropper.
    pub var_aea: f64,
    /// Alice → passive eavesdropper.
    pub var_aek: f64,
    /// Active eavesdropper → Bob.
    pub var_eab: f64,
    /// Jammer → Bob.
    pub var_jb: f64,
    /// Jammer → active eavesdropper.
    pub var_jea: f64,
    /// Jammer → passive eavesdropper.
    pub var_jek: f64,
    /// Total power budget shared by Alice and the jammer.
    pub p_max: f64,
    /// Jamming power of the active eavesdropper.
    pub p_ea: f64,
    /// Fixed transmission rate in bit/s/Hz.
    pub r_b: f64,
    /// Transmission outage threshold.
    pub delta: f64,
    /// Secrecy outage threshold.
    pub epsilon: f64,
    /// Correlation between the true and estimated jammer → Bob channel.
    pub rho_b: f64,
    /// Correlation between the true and estimated jammer → active eavesdropper channel.
    pub rho_ea: f64,
}

impl Default for SystemParams {
    /// Caption parameters of the maximum-secrecy-rate-vs-`N` figure with `N = 6`.
    fn default() -> Self {
        SystemParams {
            n_antennas: 6,
            k_passive: 1,
            m_active: 1,
            var_ab: db_to_linear(10.0),
            var_aea: db_to_linear(3.0),
            var_aek: db_to_linear(3.0),
            var_eab: db_to_linear(3.0),
            var_jb: db_to_linear(2.0),
            var_jea: db_to_linear(7.0),
            var_jek: db_to_linear(7.0),
            p_max: db_to_linear(40.0),
            p_ea: db_to_linear(10.0),
            r_b: 8.0,
            delta: 0.1,
            epsilon: 1e-2,
            rho_b: 1.0,
            rho_ea: 1.0,
        }
    }
}

impl SystemParams {
    pub fn validate(self) -> Result<ValidatedParams, ModelError> {
        validate(self)
    }
}

/// A [`SystemParams`] that passed [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedParams(SystemParams);

impl Deref for ValidatedParams {
    type Target = SystemParams;

    fn deref(&self) -> &SystemParams {
        &self.0
    }
}

impl ValidatedParams {
    pub fn into_inner(self) -> SystemParams {
        self.0
    }

    /// Dimension of the passive-eavesdropper AN subspace, `N − M − 1`.
    pub fn passive_dims(&self) -> usize {
        self.n_antennas - self.m_active - 1
    }

    /// SNR an eavesdropper must reach to break secrecy at rate `r_s`, `2^(R_b − R_s) − 1`.
    pub fn eavesdropper_threshold(&self, r_s: f64) -> f64 {
        ((self.r_b - r_s) * std::f64::consts::LN_2).exp_m1()
    }

    /// SNR Bob needs to decode at `R_b`, `2^R_b − 1`.
    pub fn bob_threshold(&self) -> f64 {
        (self.r_b * std::f64::consts::LN_2).exp_m1()
    }
}

pub fn validate(params: SystemParams) -> Result<ValidatedParams, ModelError> {
    if params.m_active == 0 {
        return Err(ModelError::RangeError {
            field: "m_active",
            value: 0.0,
            expected: ">= 1",
        });
    }
    if params.k_passive == 0 {
        return Err(ModelError::RangeError {
            field: "k_passive",
            value: 0.0,
            expected: ">= 1",
        });
    }
    // The passive AN subspace has N − M − 1 columns and must not be empty.
    let required = params.m_active + 2;
    if params.n_antennas < required {
        return Err(ModelError::AntennaCountTooSmall {
            n_antennas: params.n_antennas,
            m_active: params.m_active,
            required,
        });
    }

    let positive = [
        ("var_ab", params.var_ab),
        ("var_aea", params.var_aea),
        ("var_aek", params.var_aek),
        ("var_eab", params.var_eab),
        ("var_jb", params.var_jb),
        ("var_jea", params.var_jea),
        ("var_jek", params.var_jek),
        ("p_max", params.p_max),
        ("p_ea", params.p_ea),
        ("r_b", params.r_b),
    ];
    for (field, value) in positive {
        if !(value > 0.0) || !value.is_finite() {
            return Err(ModelError::NonPositive { field, value });
        }
    }

    let open_unit = [("delta", params.delta), ("epsilon", params.epsilon)];
    for (field, value) in open_unit {
        if !(value > 0.0 && value < 1.0) {
            return Err(ModelError::RangeError {
                field,
                value,
                expected: "(0, 1)",
            });
        }
    }
    let closed_unit = [("rho_b", params.rho_b), ("rho_ea", params.rho_ea)];
    for (field, value) in closed_unit {
        if !(0.0..=1.0).contains(&value) {
            return Err(ModelError::RangeError {
                field,
                value,
                expected: "[0, 1]",
            });
        }
    }
    Ok(ValidatedParams(params))
}

/// Alice's power and the split of the remaining budget between the two AN streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    p_a: f64,
    theta: f64,
    p_ja: f64,
    p_jp: f64,
}

impl PowerSplit {
    /// Alice's transmit power `P_A`.
    pub fn p_a(&self) -> f64 {
        self.p_a
    }

    /// Fraction of `P_max − P_A` given to the active-eavesdropper beam(s).
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `θ (P_max − P_A)`.
    pub fn p_ja(&self) -> f64 {
        self.p_ja
    }

    /// `(1 − θ)(P_max − P_A)`.
    pub fn p_jp(&self) -> f64 {
        self.p_jp
    }
}

pub fn make_split(params: &ValidatedParams, p_a: f64, theta: f64) -> Result<PowerSplit, ModelError> {
    if !(p_a > 0.0) || !p_a.is_finite() {
        return Err(ModelError::NonPositive { field: "p_a", value: p_a });
    }
    if p_a > params.p_max {
        return Err(ModelError::RangeError {
            field: "p_a",
            value: p_a,
            expected: "<= p_max",
        });
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(ModelError::RangeError {
            field: "theta",
            value: theta,
            expected: "[0, 1]",
        });
    }
    let residual = params.p_max - p_a;
    Ok(PowerSplit {
        p_a,
        theta,
        p_ja: theta * residual,
        p_jp: (1.0 - theta) * residual,
    })
}
