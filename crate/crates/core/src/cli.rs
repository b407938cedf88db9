//! Command-line front end: `eval`, `optimize`, `sweep` and `verify`.
//!
//! Every command reads a [`RunConfig`] and writes CSV. Result columns use
//! 12 significant digits; echoed inputs use the shortest form that parses
//! back to the same `f64`, so an `eval` row can be fed back as a config.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::closedform::{
    cdf_gamma_b, cdf_gamma_ea, cdf_gamma_ea_imperfect, cdf_gamma_eam_multi, cdf_gamma_ek, derived_ratios,
    dp_so1_dtheta_kernel, dp_so2_dtheta_kernel, min_pa, p_to, p_to_for_mode, p_to_imperfect, sop_pair,
    ClosedFormError, PaMode, PaOutcome,
};
use crate::config::{set_param, ConfigError, RunConfig};
use crate::model::{make_split, ModelError, SystemParams, ValidatedParams};
use crate::montecarlo::{ks_statistic, sample_snrs, sorted, McError, McEstimate, McModel, MIN_TRIALS};
use crate::optimizer::{maximize_rs, psi, Algorithm, OptResult, OptimizerError, ThetaInterval, DEFAULT_STEP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

pub const DEFAULT_TRIALS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "SECRATE_SEED";

/// Largest KS distance accepted by `verify`.
pub const KS_TOLERANCE: f64 = 0.01;
/// Largest |z| accepted by `verify` for point probabilities.
pub const Z_TOLERANCE: f64 = 3.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid scenario: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    MonteCarlo(#[from] McError),
    #[error("{0}")]
    Usage(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible(_) | CliError::Optimizer(OptimizerError::AlphaZero) => EXIT_INFEASIBLE,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "secrate", version, about = "Secrecy-rate analysis for cooperative jamming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form metrics at one operating point.
    Eval(Flags),
    /// Maximize the secrecy rate.
    Optimize(Flags),
    /// Run the optimizer over a parameter axis.
    Sweep(Flags),
    /// Check closed forms against Monte Carlo.
    Verify(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long = "pa-mode")]
    pa_mode: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<String>,
    /// Scale the closed-form active SOP so verification must fail.
    #[arg(long, hide = true)]
    corrupt: bool,
}

/// Options after merging flags, environment and config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub pa_mode: PaMode,
    pub step: f64,
    /// `None` picks the algorithm that matches each scenario.
    pub algorithm: Option<Algorithm>,
    pub trials: usize,
    pub seed: u64,
    pub corrupt: bool,
}

impl Settings {
    /// Config values with defaults filled in.
    pub fn from_config(cfg: &RunConfig) -> Settings {
        Settings {
            pa_mode: cfg.pa_mode.unwrap_or(PaMode::NoiseLimited),
            step: cfg.step.unwrap_or(DEFAULT_STEP),
            algorithm: cfg.algorithm,
            trials: cfg.trials.unwrap_or(DEFAULT_TRIALS),
            seed: cfg.seed.unwrap_or(DEFAULT_SEED),
            corrupt: false,
        }
    }

    fn resolve(cfg: &RunConfig, flags: &Flags, env_seed: Option<&str>) -> Result<Settings, CliError> {
        let mut s = Settings::from_config(cfg);
        if let Some(m) = &flags.pa_mode {
            s.pa_mode = PaMode::from_name(m).ok_or_else(|| CliError::Usage(format!("unknown --pa-mode {m:?}")))?;
        }
        if let Some(a) = &flags.algorithm {
            s.algorithm =
                Some(Algorithm::from_name(a).ok_or_else(|| CliError::Usage(format!("unknown --algorithm {a:?}")))?);
        }
        if let Some(step) = flags.step {
            s.step = step;
        }
        if let Some(t) = flags.trials {
            s.trials = t;
        }
        if let Some(seed) = flags.seed {
            s.seed = seed;
        }
        if let Some(v) = env_seed {
            s.seed = v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
        }
        s.corrupt = flags.corrupt;
        Ok(s)
    }

    fn algorithm_for(&self, params: &ValidatedParams) -> Algorithm {
        self.algorithm.unwrap_or_else(|| Algorithm::for_params(params))
    }
}

/// A result value with 12 significant digits.
pub fn fmt_value(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.11e}")
    }
}

/// An input value in shortest round-trip form.
pub fn fmt_input(x: f64) -> String {
    format!("{x}")
}

fn fmt_interval(i: &ThetaInterval) -> [String; 2] {
    if i.empty {
        ["empty".to_string(), "empty".to_string()]
    } else {
        [fmt_value(i.lo), fmt_value(i.hi)]
    }
}

/// The scenario columns shared by every `eval` row.
fn scenario_columns(p: &SystemParams) -> Vec<(&'static str, String)> {
    vec![
        ("n_antennas", p.n_antennas.to_string()),
        ("k_passive", p.k_passive.to_string()),
        ("m_active", p.m_active.to_string()),
        ("var_ab", fmt_input(p.var_ab)),
        ("var_aea", fmt_input(p.var_aea)),
        ("var_aek", fmt_input(p.var_aek)),
        ("var_eab", fmt_input(p.var_eab)),
        ("var_jb", fmt_input(p.var_jb)),
        ("var_jea", fmt_input(p.var_jea)),
        ("var_jek", fmt_input(p.var_jek)),
        ("p_max", fmt_input(p.p_max)),
        ("p_ea", fmt_input(p.p_ea)),
        ("r_b", fmt_input(p.r_b)),
        ("delta", fmt_input(p.delta)),
        ("epsilon", fmt_input(p.epsilon)),
        ("rho_b", fmt_input(p.rho_b)),
        ("rho_ea", fmt_input(p.rho_ea)),
    ]
}

fn csv(columns: &[(&str, String)]) -> String {
    let header: Vec<&str> = columns.iter().map(|(k, _)| *k).collect();
    let row: Vec<&str> = columns.iter().map(|(_, v)| v.as_str()).collect();
    format!("{}\n{}\n", header.join(","), row.join(","))
}

fn min_pa_or_infeasible(params: &ValidatedParams, mode: PaMode) -> Result<f64, CliError> {
    match min_pa(params, mode)? {
        PaOutcome::Feasible(p) => Ok(p),
        PaOutcome::Infeasible(p) => Err(CliError::Infeasible(format!(
            "minimum P_A = {p} exceeds P_max = {} ({mode})",
            params.p_max
        ))),
    }
}

/// `eval`: closed-form metrics at the config's `(p_a, theta, r_s)`.
///
/// Missing values default to the minimum `P_A`, the algorithm's reference `θ`
/// and `R_s = 0`.
pub fn eval_csv(cfg: &RunConfig, s: &Settings) -> Result<String, CliError> {
    let params = cfg.params.clone().validate()?;
    let algorithm = s.algorithm_for(&params);
    let p_a = match cfg.p_a {
        Some(p) => p,
        None => min_pa_or_infeasible(&params, s.pa_mode)?,
    };
    let theta = cfg.theta.unwrap_or_else(|| algorithm.reference_theta(&params));
    let r_s = cfg.r_s.unwrap_or(0.0);
    make_split(&params, p_a, theta)?;
    if !(0.0..params.r_b).contains(&r_s) {
        return Err(CliError::Usage(format!("r_s = {r_s} must lie in [0, r_b)")));
    }

    let r = derived_ratios(&params, p_a, r_s);
    let outage = p_to_for_mode(&params, p_a, s.pa_mode)?;
    let (p_so1, p_so2) = algorithm.sops(&params, p_a, theta, r_s);
    let (n, k) = (params.n_antennas, params.k_passive);
    let (d1, d2) = match algorithm {
        Algorithm::Alg1 => (
            dp_so1_dtheta_kernel(r.alpha, theta, n, 1.0),
            dp_so2_dtheta_kernel(r.beta, theta, n, k),
        ),
        Algorithm::Alg2 => (
            dp_so1_dtheta_kernel(r.alpha, theta, n, params.rho_ea),
            dp_so2_dtheta_kernel(r.beta, theta, n, k),
        ),
        Algorithm::Multi => (f64::NAN, f64::NAN),
    };
    let (active, passive) = algorithm.intervals(&params, p_a, r_s);
    let [alo, ahi] = fmt_interval(&active);
    let [plo, phi] = fmt_interval(&passive);

    let mut cols = scenario_columns(&params);
    cols.extend([
        ("pa_mode", s.pa_mode.name().to_string()),
        ("algorithm", algorithm.name().to_string()),
        ("p_a", fmt_input(p_a)),
        ("theta", fmt_input(theta)),
        ("r_s", fmt_input(r_s)),
        ("alpha", fmt_value(r.alpha)),
        ("beta", fmt_value(r.beta)),
        ("lambda_cap", fmt_value(r.lambda_cap)),
        ("psi", fmt_value(psi(&params, p_a, r_s).unwrap_or(f64::NAN))),
        ("p_to", fmt_value(outage)),
        ("p_so1", fmt_value(p_so1)),
        ("p_so2", fmt_value(p_so2)),
        ("dp_so1_dtheta", fmt_value(d1)),
        ("dp_so2_dtheta", fmt_value(d2)),
        ("active_lo", alo),
        ("active_hi", ahi),
        ("passive_lo", plo),
        ("passive_hi", phi),
    ]);
    Ok(csv(&cols))
}

pub const OPTIMIZE_HEADER: &str = "feasible,r_s_star,theta_star,p_a_star,steps,reason";

pub fn optimize_row(r: &OptResult) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.feasible,
        fmt_value(r.r_s_star),
        fmt_value(r.theta_star),
        fmt_value(r.p_a_star),
        r.steps,
        r.infeasibility_reason.name()
    )
}

pub fn optimize(cfg: &RunConfig, s: &Settings) -> Result<OptResult, CliError> {
    let params = cfg.params.clone().validate()?;
    Ok(maximize_rs(&params, s.algorithm_for(&params), s.step, s.pa_mode)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub overlay: String,
    pub result: OptResult,
}

pub const SWEEP_HEADER: &str = "axis,axis_value,overlay,r_s_star,theta_star,p_a_star,feasible,reason";

/// `sweep`: one optimizer run per overlay and axis value, overlay-major.
/// An overlay may also set `pa_mode`, which then beats the command-line mode.
pub fn sweep(cfg: &RunConfig, s: &Settings) -> Result<Vec<SweepRow>, CliError> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Usage("sweep needs `axis` and `values` in the config".into()))?;
    let points: Vec<(usize, f64)> = (0..spec.overlays.len())
        .flat_map(|i| spec.values.iter().map(move |&v| (i, v)))
        .collect();
    points
        .par_iter()
        .map(|&(i, v)| {
            let mut p = cfg.params.clone();
            let mut pa_mode = s.pa_mode;
            for (k, val) in &spec.overlays[i] {
                if k == "pa_mode" {
                    pa_mode = PaMode::from_name(val).ok_or_else(|| CliError::Usage(format!("unknown mode {val:?}")))?;
                } else {
                    set_param(&mut p, k, val).map_err(CliError::Usage)?;
                }
            }
            for key in spec.axis_keys() {
                set_param(&mut p, key, &fmt_input(v)).map_err(CliError::Usage)?;
            }
            let params = p.validate()?;
            let result = maximize_rs(&params, s.algorithm_for(&params), s.step, pa_mode)?;
            Ok(SweepRow {
                axis_value: v,
                overlay: spec.overlay_label(i),
                result,
            })
        })
        .collect()
}

pub fn sweep_csv(cfg: &RunConfig, rows: &[SweepRow]) -> String {
    let axis = cfg.sweep.as_ref().map_or("", |s| s.axis.as_str());
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{axis},{},{},{},{},{},{},{}",
            fmt_input(r.axis_value),
            r.overlay,
            fmt_value(r.result.r_s_star),
            fmt_value(r.result.theta_star),
            fmt_value(r.result.p_a_star),
            r.result.feasible,
            r.result.infeasibility_reason.name()
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// KS distance of sampled SNRs to a closed-form CDF.
    Ks,
    /// Two-sided z-score of a sampled probability.
    Z,
    /// One-sided: the sampled probability must not exceed the closed form.
    UpperBound,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Ks => "ks",
            CheckKind::Z => "z",
            CheckKind::UpperBound => "upper_bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub quantity: &'static str,
    pub kind: CheckKind,
    pub closed_form: Option<f64>,
    pub estimate: Option<McEstimate>,
    pub statistic: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub p_a: f64,
    pub theta: f64,
    pub r_s: f64,
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("quantity,kind,closed_form,mc_estimate,std_err,statistic,pass\n");
        for r in &self.rows {
            let opt = |x: Option<f64>| x.map(fmt_value).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.quantity,
                r.kind.name(),
                opt(r.closed_form),
                opt(r.estimate.map(|e| e.p_hat)),
                opt(r.estimate.map(|e| e.std_err)),
                fmt_value(r.statistic),
                r.pass
            );
        }
        out
    }
}

fn ks_row(quantity: &'static str, samples: &[f64], cdf: impl Fn(f64) -> f64) -> VerifyRow {
    let d = ks_statistic(&sorted(samples.to_vec()), cdf);
    VerifyRow {
        quantity,
        kind: CheckKind::Ks,
        closed_form: None,
        estimate: None,
        statistic: d,
        pass: d <= KS_TOLERANCE,
    }
}

fn z_row(quantity: &'static str, kind: CheckKind, closed: f64, est: McEstimate) -> VerifyRow {
    let z = est.z_score(closed);
    let pass = match kind {
        CheckKind::UpperBound => z <= Z_TOLERANCE,
        _ => z.abs() <= Z_TOLERANCE,
    };
    VerifyRow {
        quantity,
        kind,
        closed_form: Some(closed),
        estimate: Some(est),
        statistic: z,
        pass,
    }
}

/// `verify`: Monte Carlo checks at the config's operating point, or at the
/// optimizer's point for whatever the config leaves out.
pub fn verify(cfg: &RunConfig, s: &Settings) -> Result<VerifyReport, CliError> {
    let params = cfg.params.clone().validate()?;
    if s.trials < MIN_TRIALS {
        return Err(CliError::Usage(format!("--trials must be at least {MIN_TRIALS}")));
    }
    let (p_a, theta, r_s) = match (cfg.p_a, cfg.theta, cfg.r_s) {
        (Some(p), Some(t), Some(r)) => (p, t, r),
        (p, t, r) => {
            let opt = maximize_rs(&params, s.algorithm_for(&params), s.step, s.pa_mode)?;
            if !opt.feasible && (p.is_none() || t.is_none()) {
                return Err(CliError::Infeasible(format!(
                    "no operating point ({})",
                    opt.infeasibility_reason.name()
                )));
            }
            (p.unwrap_or(opt.p_a_star), t.unwrap_or(opt.theta_star), r.unwrap_or(opt.r_s_star))
        }
    };
    let split = make_split(&params, p_a, theta)?;
    let model = McModel::for_params(&params);
    let samples = sample_snrs(&params, &split, s.trials, s.seed, model)?;
    let est = samples.outages(&params, r_s);

    let mut rows = vec![ks_row("gamma_b_cdf", &samples.bob_interference, |x| {
        cdf_gamma_b(x, &params, p_a)
    })];
    // Without jamming at a receiver its SNR has no proper CDF; skip those rows.
    if split.p_ja() > 0.0 {
        let row = if params.m_active > 1 {
            ks_row("gamma_ea_cdf", &samples.active_first, |x| cdf_gamma_eam_multi(x, &params, &split))
        } else if params.rho_ea < 1.0 {
            ks_row("gamma_ea_cdf", &samples.active_first, |x| {
                cdf_gamma_ea_imperfect(x, &params, &split).unwrap_or(f64::NAN)
            })
        } else {
            ks_row("gamma_ea_cdf", &samples.active_first, |x| {
                cdf_gamma_ea(x, &params, &split).unwrap_or(f64::NAN)
            })
        };
        rows.push(row);
    }
    if split.p_ja() > 0.0 || split.p_jp() > 0.0 {
        rows.push(ks_row("gamma_ek_cdf", &samples.passive_first, |x| {
            cdf_gamma_ek(x, &params, &split).unwrap_or(f64::NAN)
        }));
    }

    let bob_interference = samples
        .bob_interference
        .iter()
        .filter(|&&g| g < params.bob_threshold())
        .count();
    rows.push(z_row(
        "p_to",
        CheckKind::Z,
        p_to(&params, p_a),
        McEstimate::from_count(bob_interference, s.trials),
    ));
    if params.rho_b < 1.0 {
        rows.push(z_row("p_to_leakage_bound", CheckKind::UpperBound, p_to_imperfect(&params, p_a)?, est.p_to));
    }
    let (mut so1, so2) = sop_pair(&params, &split, r_s);
    if s.corrupt {
        so1 = (so1 * 1.5).min(1.0);
        if so1 == 0.0 {
            so1 = 0.5;
        }
    }
    rows.push(z_row("p_so1", CheckKind::Z, so1, est.p_so1));
    rows.push(z_row("p_so2", CheckKind::Z, so2, est.p_so2));

    Ok(VerifyReport { p_a, theta, r_s, rows })
}

/// What a finished command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn emit(out: &Option<PathBuf>, text: String) -> Result<String, CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| CliError::Output {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn run_command(command: Command, env_seed: Option<&str>) -> Result<(i32, String, String), CliError> {
    let flags = match &command {
        Command::Eval(f) | Command::Optimize(f) | Command::Sweep(f) | Command::Verify(f) => f,
    };
    let cfg = RunConfig::load(&flags.config)?;
    let s = Settings::resolve(&cfg, flags, env_seed)?;
    match &command {
        Command::Eval(_) => Ok((EXIT_OK, emit(&flags.out, eval_csv(&cfg, &s)?)?, String::new())),
        Command::Optimize(_) => {
            let r = optimize(&cfg, &s)?;
            let text = emit(&flags.out, format!("{OPTIMIZE_HEADER}\n{}\n", optimize_row(&r)))?;
            if r.feasible {
                Ok((EXIT_OK, text, String::new()))
            } else {
                let msg = format!("infeasible: {}\n", r.infeasibility_reason.name());
                Ok((EXIT_INFEASIBLE, text, msg))
            }
        }
        Command::Sweep(_) => {
            let rows = sweep(&cfg, &s)?;
            Ok((EXIT_OK, emit(&flags.out, sweep_csv(&cfg, &rows))?, String::new()))
        }
        Command::Verify(_) => {
            let report = verify(&cfg, &s)?;
            let text = emit(&flags.out, report.csv())?;
            if report.passed() {
                Ok((EXIT_OK, text, String::new()))
            } else {
                let failed: Vec<&str> = report.rows.iter().filter(|r| !r.pass).map(|r| r.quantity).collect();
                Ok((EXIT_VERIFY_FAILED, text, format!("verification failed: {}\n", failed.join(", "))))
            }
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// `env_seed` is the value of `SECRATE_SEED`, which overrides `--seed`.
pub fn run<I, T>(args: I, env_seed: Option<&str>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let (stdout, stderr) = if e.use_stderr() {
                (String::new(), text)
            } else {
                (text, String::new())
            };
            return Outcome { code, stdout, stderr };
        }
    };
    match run_command(cli.command, env_seed) {
        Ok((code, stdout, stderr)) => Outcome { code, stdout, stderr },
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}
