//! Sampling oracle for the closed forms.
//!
//! Channels are drawn per trial from a dedicated stream, beamformers are
//! built exactly as the jammer would build them, and SNRs are formed from the
//! instantaneous channel powers. Receiver noise is left out by default, which
//! is the regime the closed forms describe.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::beamform::{BeamformError, BeamformerSet};
use crate::linalg::{dot, norm_sqr, CMatrix, CVector};
use crate::model::{PowerSplit, ValidatedParams};
use crate::rng::TrialRng;

const DENOMINATOR_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("trial {trial}: {source}")]
    Beamform { trial: u64, source: BeamformError },
    #[error("need at least {min} trials, got {got}")]
    TooFewTrials { min: usize, got: usize },
}

/// One realization of every channel in the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub h_ab: Complex64,
    pub f_eab: Complex64,
    /// Alice → each active eavesdropper.
    pub h_aea: CVector,
    /// Alice → each passive eavesdropper.
    pub h_aek: CVector,
    pub g_b: CVector,
    pub g_b_est: CVector,
    pub e_b: CVector,
    /// `N × M`, one column per active eavesdropper.
    pub g_ea: CMatrix,
    pub g_ea_est: CMatrix,
    pub e_ea: CMatrix,
    /// `N × K`.
    pub g_ek: CMatrix,
}

/// `g = ρ ĝ + e` with `ĝ ~ CN(0, σ²)` and `e ~ CN(0, (1 − ρ²) σ²)`.
fn correlated(rng: &mut TrialRng, n: usize, var: f64, rho: f64) -> (CVector, CVector, CVector) {
    let est = rng.complex_vector(n, var);
    let err = rng.complex_vector(n, (1.0 - rho * rho) * var);
    let g = est.iter().zip(&err).map(|(a, b)| a * rho + b).collect();
    (g, est, err)
}

/// Deterministic function of `(seed, trial_index)`. The number of random
/// values consumed does not depend on `ρ`.
pub fn sample_channels(params: &ValidatedParams, seed: u64, trial_index: u64) -> ChannelDraw {
    let mut rng = TrialRng::new(seed, trial_index);
    let (n, m, k) = (params.n_antennas, params.m_active, params.k_passive);
    let h_ab = rng.complex_normal(params.var_ab);
    let f_eab = rng.complex_normal(params.var_eab);
    let h_aea = rng.complex_vector(m, params.var_aea);
    let h_aek = rng.complex_vector(k, params.var_aek);
    let (g_b, g_b_est, e_b) = correlated(&mut rng, n, params.var_jb, params.rho_b);
    let mut cols = (Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m));
    for _ in 0..m {
        let (g, est, err) = correlated(&mut rng, n, params.var_jea, params.rho_ea);
        cols.0.push(g);
        cols.1.push(est);
        cols.2.push(err);
    }
    let g_ek: Vec<CVector> = (0..k).map(|_| rng.complex_vector(n, params.var_jek)).collect();
    ChannelDraw {
        h_ab,
        f_eab,
        h_aea,
        h_aek,
        g_b,
        g_b_est,
        e_b,
        g_ea: CMatrix::from_columns(n, &cols.0),
        g_ea_est: CMatrix::from_columns(n, &cols.1),
        e_ea: CMatrix::from_columns(n, &cols.2),
        g_ek: CMatrix::from_columns(n, &g_ek),
    }
}

/// A draw together with the beamformers the jammer would use.
#[derive(Debug, Clone)]
pub struct Trial {
    pub draw: ChannelDraw,
    /// Built from the true channels.
    pub perfect: BeamformerSet,
    /// Built from `g_B` and the estimated active channels.
    pub estimated_ea: BeamformerSet,
    /// Built from the estimated `g_B` and the true active channels.
    pub estimated_b: BeamformerSet,
}

impl Trial {
    pub fn new(params: &ValidatedParams, draw: ChannelDraw) -> Result<Self, BeamformError> {
        let perfect = BeamformerSet::build(&draw.g_b, &draw.g_ea)?;
        let estimated_ea = if params.rho_ea < 1.0 {
            BeamformerSet::build(&draw.g_b, &draw.g_ea_est)?
        } else {
            perfect.clone()
        };
        let estimated_b = if params.rho_b < 1.0 {
            BeamformerSet::build(&draw.g_b_est, &draw.g_ea)?
        } else {
            perfect.clone()
        };
        Ok(Trial {
            draw,
            perfect,
            estimated_ea,
            estimated_b,
        })
    }

    pub fn sample(params: &ValidatedParams, seed: u64, trial_index: u64) -> Result<Self, McError> {
        Trial::new(params, sample_channels(params, seed, trial_index)).map_err(|source| McError::Beamform {
            trial: trial_index,
            source,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BobRegime {
    /// Alice's signal against the active eavesdropper's jamming.
    InterferenceLimited,
    /// Alice's signal against AN leaking through the `g_B` estimation error.
    AnLeakage,
    /// Both of the above.
    AnLeakageWithJamming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Csi {
    Perfect,
    /// Beams toward active eavesdroppers built from their estimated channels.
    Imperfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    Excluded,
    /// Adds unit receiver noise to every denominator.
    Included,
}

impl Noise {
    fn power(self) -> f64 {
        match self {
            Noise::Excluded => 0.0,
            Noise::Included => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McModel {
    pub bob: BobRegime,
    pub csi: Csi,
    pub noise: Noise,
}

impl McModel {
    /// The model whose closed forms apply to `params`.
    pub fn for_params(params: &ValidatedParams) -> Self {
        McModel {
            bob: if params.rho_b < 1.0 {
                BobRegime::AnLeakage
            } else {
                BobRegime::InterferenceLimited
            },
            csi: if params.rho_ea < 1.0 { Csi::Imperfect } else { Csi::Perfect },
            noise: Noise::Excluded,
        }
    }
}

/// Received AN power `(P_JA/M) Σ_m |g^H w_m|² + (P_Jp/d) ‖W_p^H g‖²`.
fn an_power(set: &BeamformerSet, split: &PowerSplit, g: &[Complex64]) -> f64 {
    let m = set.n_active() as f64;
    let d = set.n_passive_dims() as f64;
    let active: f64 = set.w_active.columns().map(|w| dot(g, w).norm_sqr()).sum();
    let passive = norm_sqr(&set.w_passive.adjoint_mul_vec(g));
    split.p_ja() / m * active + split.p_jp() / d * passive
}

/// Bob's SNR and whether its denominator was zero.
pub fn snr_bob(
    params: &ValidatedParams,
    trial: &Trial,
    split: &PowerSplit,
    regime: BobRegime,
    noise: Noise,
) -> (f64, bool) {
    let d = &trial.draw;
    let signal = split.p_a() * d.h_ab.norm_sqr();
    let jamming = params.p_ea * d.f_eab.norm_sqr();
    let leakage = || an_power(&trial.estimated_b, split, &d.e_b);
    let den = noise.power()
        + match regime {
            BobRegime::InterferenceLimited => jamming,
            BobRegime::AnLeakage => leakage(),
            BobRegime::AnLeakageWithJamming => leakage() + jamming,
        };
    (signal / den.max(DENOMINATOR_FLOOR), den == 0.0)
}

/// SNR at each active eavesdropper.
///
/// The AN aimed at eavesdropper `m` is counted with every active channel
/// that projects onto beam `m`, i.e. the interference term is
/// `(P_JA/M) Σ_m' |g_m'^H w_m|²`. For a single eavesdropper this is just its
/// own beam gain, plus passive-AN leakage when the beam came from an estimate.
pub fn snr_active(trial: &Trial, split: &PowerSplit, csi: Csi, noise: Noise) -> Vec<f64> {
    let set = match csi {
        Csi::Perfect => &trial.perfect,
        Csi::Imperfect => &trial.estimated_ea,
    };
    let d = &trial.draw;
    let m = set.n_active() as f64;
    let dims = set.n_passive_dims() as f64;
    set.w_active
        .columns()
        .enumerate()
        .map(|(i, w)| {
            let g = d.g_ea.col(i);
            let beam: f64 = d.g_ea.columns().map(|gm| dot(gm, w).norm_sqr()).sum();
            let passive = norm_sqr(&set.w_passive.adjoint_mul_vec(g));
            let den = noise.power() + split.p_ja() / m * beam + split.p_jp() / dims * passive;
            split.p_a() * d.h_aea[i].norm_sqr() / den.max(DENOMINATOR_FLOOR)
        })
        .collect()
}

/// SNR at each passive eavesdropper.
pub fn snr_passive(trial: &Trial, split: &PowerSplit, csi: Csi, noise: Noise) -> Vec<f64> {
    let set = match csi {
        Csi::Perfect => &trial.perfect,
        Csi::Imperfect => &trial.estimated_ea,
    };
    let d = &trial.draw;
    d.g_ek
        .columns()
        .zip(&d.h_aek)
        .map(|(g, h)| {
            let den = noise.power() + an_power(set, split, g);
            split.p_a() * h.norm_sqr() / den.max(DENOMINATOR_FLOOR)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub p_hat: f64,
    pub trials: usize,
    /// `√(p̂ (1 − p̂) / n)`.
    pub std_err: f64,
}

impl McEstimate {
    pub fn from_count(hits: usize, trials: usize) -> Self {
        let p_hat = hits as f64 / trials as f64;
        McEstimate {
            p_hat,
            trials,
            std_err: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        }
    }

    /// `(p̂ − p₀) / √(p₀ (1 − p₀) / n)`. At `p₀ ∈ {0, 1}` this is 0 if `p̂ = p₀`
    /// and infinite otherwise.
    pub fn z_score(&self, p0: f64) -> f64 {
        let se = (p0 * (1.0 - p0) / self.trials as f64).sqrt();
        let diff = self.p_hat - p0;
        if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }
}

/// Per-trial SNRs collected over a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnrSamples {
    /// Bob, regime chosen by the model.
    pub bob: Vec<f64>,
    /// Bob, interference-limited regardless of the model.
    pub bob_interference: Vec<f64>,
    /// First active eavesdropper.
    pub active_first: Vec<f64>,
    pub active_max: Vec<f64>,
    /// First passive eavesdropper.
    pub passive_first: Vec<f64>,
    pub passive_max: Vec<f64>,
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub const MIN_TRIALS: usize = 10_000;

/// Samples every SNR for `trials` trials. Trials run in parallel; the result
/// is in trial order and independent of the thread count.
pub fn sample_snrs(
    params: &ValidatedParams,
    split: &PowerSplit,
    trials: usize,
    seed: u64,
    model: McModel,
) -> Result<SnrSamples, McError> {
    let rows: Vec<[f64; 6]> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial = Trial::sample(params, seed, t)?;
            let active = snr_active(&trial, split, model.csi, model.noise);
            let passive = snr_passive(&trial, split, model.csi, model.noise);
            Ok([
                snr_bob(params, &trial, split, model.bob, model.noise).0,
                snr_bob(params, &trial, split, BobRegime::InterferenceLimited, model.noise).0,
                active[0],
                max_of(&active),
                passive[0],
                max_of(&passive),
            ])
        })
        .collect::<Result<_, McError>>()?;
    let mut out = SnrSamples::default();
    for r in rows {
        out.bob.push(r[0]);
        out.bob_interference.push(r[1]);
        out.active_first.push(r[2]);
        out.active_max.push(r[3]);
        out.passive_first.push(r[4]);
        out.passive_max.push(r[5]);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimates {
    pub p_to: McEstimate,
    pub p_so1: McEstimate,
    pub p_so2: McEstimate,
}

impl SnrSamples {
    /// Outage counts at rate `r_s`: Bob below `2^R_b − 1`, strongest
    /// eavesdropper at or above `2^(R_b − R_s) − 1`.
    pub fn outages(&self, params: &ValidatedParams, r_s: f64) -> OutageEstimates {
        let n = self.bob.len();
        let count = |v: &[f64], pred: &dyn Fn(f64) -> bool| v.iter().filter(|&&g| pred(g)).count();
        let tb = params.bob_threshold();
        let te = params.eavesdropper_threshold(r_s);
        OutageEstimates {
            p_to: McEstimate::from_count(count(&self.bob, &|g| g < tb), n),
            p_so1: McEstimate::from_count(count(&self.active_max, &|g| g >= te), n),
            p_so2: McEstimate::from_count(count(&self.passive_max, &|g| g >= te), n),
        }
    }
}

pub fn estimate_outages(
    params: &ValidatedParams,
    split: &PowerSplit,
    r_s: f64,
    trials: usize,
    seed: u64,
    model: McModel,
) -> Result<OutageEstimates, McError> {
    if trials < MIN_TRIALS {
        return Err(McError::TooFewTrials {
            min: MIN_TRIALS,
            got: trials,
        });
    }
    Ok(sample_snrs(params, split, trials, seed, model)?.outages(params, r_s))
}

/// Kolmogorov–Smirnov distance between the sorted `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance between sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Sorts in place (total order) and returns the slice for chaining.
pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}
