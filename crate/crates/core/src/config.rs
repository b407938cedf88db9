//! Plain-text run configuration.
//!
//! One `key = value` per line, `#` starts a comment. Power and variance keys
//! also accept a `_db` suffix (`var_jea_db = 7`). A file whose first line is
//! a comma-separated header is read as a two-line CSV instead, which is how
//! the output of `eval` is fed back in.

use std::path::Path;

use thiserror::Error;

use crate::closedform::PaMode;
use crate::model::{db_to_linear, SystemParams};
use crate::optimizer::Algorithm;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

/// Keys that take a linear value or a `_db` value.
const POWER_KEYS: [&str; 9] = [
    "var_ab", "var_aea", "var_aek", "var_eab", "var_jb", "var_jea", "var_jek", "p_max", "p_ea",
];

/// Columns that `eval` writes but which are results, not inputs.
pub const EVAL_OUTPUT_COLUMNS: [&str; 13] = [
    "alpha",
    "beta",
    "lambda_cap",
    "psi",
    "p_to",
    "p_so1",
    "p_so2",
    "dp_so1_dtheta",
    "dp_so2_dtheta",
    "active_lo",
    "active_hi",
    "passive_lo",
    "passive_hi",
];

fn parse_f64(key: &str, value: &str) -> Result<f64, String> {
    value
        .parse::<f64>()
        .map_err(|_| format!("{key}: cannot parse {value:?} as a number"))
}

fn parse_count(key: &str, value: &str) -> Result<usize, String> {
    value
        .parse::<usize>()
        .map_err(|_| format!("{key}: cannot parse {value:?} as a non-negative integer"))
}

/// Sets one scenario field. Returns `Ok(false)` if `key` is not a scenario field.
pub fn set_param(params: &mut SystemParams, key: &str, value: &str) -> Result<bool, String> {
    if let Some(base) = key.strip_suffix("_db") {
        if POWER_KEYS.contains(&base) {
            let v = db_to_linear(parse_f64(key, value)?);
            return set_param(params, base, &format!("{v:?}"));
        }
        return Ok(false);
    }
    let slot = match key {
        "n_antennas" => {
            params.n_antennas = parse_count(key, value)?;
            return Ok(true);
        }
        "k_passive" => {
            params.k_passive = parse_count(key, value)?;
            return Ok(true);
        }
        "m_active" => {
            params.m_active = parse_count(key, value)?;
            return Ok(true);
        }
        "var_ab" => &mut params.var_ab,
        "var_aea" => &mut params.var_aea,
        "var_aek" => &mut params.var_aek,
        "var_eab" => &mut params.var_eab,
        "var_jb" => &mut params.var_jb,
        "var_jea" => &mut params.var_jea,
        "var_jek" => &mut params.var_jek,
        "p_max" => &mut params.p_max,
        "p_ea" => &mut params.p_ea,
        "r_b" => &mut params.r_b,
        "delta" => &mut params.delta,
        "epsilon" => &mut params.epsilon,
        "rho_b" => &mut params.rho_b,
        "rho_ea" => &mut params.rho_ea,
        _ => return Ok(false),
    };
    *slot = parse_f64(key, value)?;
    Ok(true)
}

/// A parameter sweep: one optimizer run per `(value, overlay)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// One or more scenario keys joined by `+`, all set to the same value.
    pub axis: String,
    pub values: Vec<f64>,
    /// Each overlay is a list of `key=value` overrides applied on top of the base.
    pub overlays: Vec<Vec<(String, String)>>,
}

impl SweepSpec {
    pub fn axis_keys(&self) -> impl Iterator<Item = &str> {
        self.axis.split('+')
    }

    pub fn overlay_label(&self, i: usize) -> String {
        if self.overlays[i].is_empty() {
            return "base".to_string();
        }
        self.overlays[i]
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub p_a: Option<f64>,
    pub theta: Option<f64>,
    pub r_s: Option<f64>,
    pub pa_mode: Option<PaMode>,
    pub algorithm: Option<Algorithm>,
    pub step: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub sweep: Option<SweepSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: SystemParams::default(),
            p_a: None,
            theta: None,
            r_s: None,
            pa_mode: None,
            algorithm: None,
            step: None,
            trials: None,
            seed: None,
            sweep: None,
        }
    }
}

#[derive(Default)]
struct SweepParts {
    axis: Option<String>,
    values: Option<Vec<f64>>,
    overlays: Option<Vec<Vec<(String, String)>>>,
}

fn parse_values(value: &str) -> Result<Vec<f64>, String> {
    // `a:b:step` is an inclusive range; anything else is a comma list.
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let a = parse_f64("values", parts[0])?;
        let b = parse_f64("values", parts[1])?;
        let s = parse_f64("values", parts[2])?;
        if !(s > 0.0) || !(b >= a) {
            return Err(format!("values: bad range {value:?}"));
        }
        let count = ((b - a) / s + 1e-9).floor() as usize;
        return Ok((0..=count).map(|i| a + i as f64 * s).collect());
    }
    value
        .split(',')
        .map(|v| parse_f64("values", v.trim()))
        .collect()
}

fn parse_overlays(value: &str) -> Result<Vec<Vec<(String, String)>>, String> {
    value
        .split(';')
        .map(|overlay| {
            overlay
                .split_whitespace()
                .map(|kv| {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| format!("overlays: expected key=value, got {kv:?}"))?;
                    if k == "pa_mode" {
                        PaMode::from_name(v).ok_or_else(|| format!("overlays: unknown mode {v:?}"))?;
                        return Ok((k.to_string(), v.to_string()));
                    }
                    let mut probe = SystemParams::default();
                    if !set_param(&mut probe, k, v)? {
                        return Err(format!("overlays: unknown key {k:?}"));
                    }
                    Ok((k.to_string(), v.to_string()))
                })
                .collect()
        })
        .collect()
}

impl RunConfig {
    fn set(&mut self, sweep: &mut SweepParts, key: &str, value: &str) -> Result<(), String> {
        if set_param(&mut self.params, key, value)? {
            return Ok(());
        }
        match key {
            "p_a" => self.p_a = Some(parse_f64(key, value)?),
            "p_a_db" => self.p_a = Some(db_to_linear(parse_f64(key, value)?)),
            "theta" => self.theta = Some(parse_f64(key, value)?),
            "r_s" => self.r_s = Some(parse_f64(key, value)?),
            "step" => self.step = Some(parse_f64(key, value)?),
            "trials" => self.trials = Some(parse_count(key, value)?),
            "seed" => self.seed = Some(value.parse().map_err(|_| format!("seed: cannot parse {value:?}"))?),
            "pa_mode" => {
                self.pa_mode = Some(PaMode::from_name(value).ok_or_else(|| format!("pa_mode: unknown mode {value:?}"))?)
            }
            "algorithm" => {
                self.algorithm =
                    Some(Algorithm::from_name(value).ok_or_else(|| format!("algorithm: unknown algorithm {value:?}"))?)
            }
            "axis" => {
                for key in value.split('+') {
                    let mut probe = SystemParams::default();
                    if !set_param(&mut probe, key, "1")? {
                        return Err(format!("axis: {key:?} is not a scenario parameter"));
                    }
                }
                sweep.axis = Some(value.to_string());
            }
            "values" => sweep.values = Some(parse_values(value)?),
            "overlays" => sweep.overlays = Some(parse_overlays(value)?),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let mut cfg = RunConfig::default();
        let mut sweep = SweepParts::default();

        if let Some(&(first, header)) = lines.first() {
            if !header.contains('=') && header.contains(',') {
                let &(line, row) = lines
                    .get(1)
                    .ok_or_else(|| parse_err(first, "CSV header without a data row"))?;
                if lines.len() > 2 {
                    return Err(parse_err(lines[2].0, "CSV input must have exactly one data row"));
                }
                let keys: Vec<&str> = header.split(',').map(str::trim).collect();
                let vals: Vec<&str> = row.split(',').map(str::trim).collect();
                if keys.len() != vals.len() {
                    return Err(parse_err(line, format!("{} columns in header but {} in row", keys.len(), vals.len())));
                }
                for (k, v) in keys.into_iter().zip(vals) {
                    if EVAL_OUTPUT_COLUMNS.contains(&k) {
                        continue;
                    }
                    cfg.set(&mut sweep, k, v).map_err(|m| parse_err(line, m))?;
                }
                return Ok(cfg);
            }
        }

        for (line, l) in lines {
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| parse_err(line, format!("expected key = value, got {l:?}")))?;
            cfg.set(&mut sweep, k.trim(), v.trim()).map_err(|m| parse_err(line, m))?;
        }

        cfg.sweep = match sweep {
            SweepParts {
                axis: None,
                values: None,
                overlays: None,
            } => None,
            SweepParts {
                axis: Some(axis),
                values: Some(values),
                overlays,
            } => {
                if values.is_empty() || !values.windows(2).all(|w| w[0] < w[1]) {
                    return Err(parse_err(0, "values must be nonempty and strictly increasing"));
                }
                Some(SweepSpec {
                    axis,
                    values,
                    overlays: overlays.unwrap_or_else(|| vec![Vec::new()]),
                })
            }
            _ => return Err(parse_err(0, "a sweep needs both axis and values")),
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        RunConfig::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_with_db_and_comments() {
        let cfg = RunConfig::parse(
            "# header\n n_antennas = 5\nvar_jea_db=10 # ten dB\n\nrho_ea = 0.6\npa_mode = interference_limited\n",
        )
        .unwrap();
        assert_eq!(cfg.params.n_antennas, 5);
        assert!((cfg.params.var_jea - 10.0).abs() < 1e-12);
        assert_eq!(cfg.params.rho_ea, 0.6);
        assert_eq!(cfg.pa_mode, Some(PaMode::InterferenceLimited));
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn errors_carry_line_and_key() {
        let e = RunConfig::parse("n_antennas = 5\nvar_jaa = 3\n").unwrap_err();
        assert_eq!(
            e,
            ConfigError::Parse {
                line: 2,
                message: "unknown key \"var_jaa\"".into()
            }
        );
        let e = RunConfig::parse("\n\nr_b = fast\n").unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("r_b"), "{e}");
        let e = RunConfig::parse("just words\n").unwrap_err().to_string();
        assert!(e.contains("line 1"));
        assert!(RunConfig::parse("rho_b_db = 3\n").is_err());
    }

    #[test]
    fn sweep_spec() {
        let cfg = RunConfig::parse("axis = var_jek_db\nvalues = 0:10:2.5\noverlays = rho_ea=0.6; rho_ea=0.8 k_passive=2\n")
            .unwrap();
        let s = cfg.sweep.unwrap();
        assert_eq!(s.axis, "var_jek_db");
        assert_eq!(s.values, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        assert_eq!(s.overlays.len(), 2);
        assert_eq!(s.overlay_label(1), "rho_ea=0.8 k_passive=2");

        let cfg = RunConfig::parse("axis = var_jek_db+var_jea_db\nvalues = 1\noverlays = pa_mode=imperfect_csi rho_b=0.9\n")
            .unwrap();
        assert_eq!(cfg.sweep.unwrap().axis_keys().collect::<Vec<_>>(), ["var_jek_db", "var_jea_db"]);
        assert!(RunConfig::parse("axis = var_jek_db+speed\nvalues = 1\n").is_err());
        assert!(RunConfig::parse("axis = rho_b\nvalues = 1\noverlays = pa_mode=loud\n").is_err());

        assert!(RunConfig::parse("axis = n_antennas\nvalues = 5,4\n").is_err());
        assert!(RunConfig::parse("axis = speed\nvalues = 1\n").is_err());
        assert!(RunConfig::parse("axis = n_antennas\n").is_err());
        assert!(RunConfig::parse("axis = n_antennas\nvalues = 4\noverlays = bogus=1\n").is_err());
    }

    #[test]
    fn csv_input_skips_result_columns() {
        let cfg = RunConfig::parse("n_antennas,rho_ea,p_so1,theta\n7,0.25,0.5,0.1\n").unwrap();
        assert_eq!(cfg.params.n_antennas, 7);
        assert_eq!(cfg.theta, Some(0.1));
        assert!(RunConfig::parse("n_antennas,rho_ea\n7\n").is_err());
        let e = RunConfig::parse("n_antennas,wat\n7,1\n").unwrap_err().to_string();
        assert!(e.contains("wat"));
    }
}
