//! Flat `key = value` config files with `[sim]`, `[strategy]`, and
//! `[experiment]` sections. One parse/validate path serves every subcommand.

use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use cegt_core::model::{ConfigError, Scenario};
use cegt_core::strategy::StrategyKind;
use cegt_core::SimConfig64;

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: key `{key}` outside any section")]
    KeyOutsideSection { line: usize, key: String },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: bad value for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error(transparent)]
    Range(#[from] ConfigError),
    #[error("experiment: {0}")]
    Experiment(String),
}

/// Trace file encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    JsonLines,
}

impl TraceFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TraceFormat::Csv => "csv",
            TraceFormat::JsonLines => "jsonl",
        }
    }
}

impl FromStr for TraceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "jsonl" => Ok(TraceFormat::JsonLines),
            other => Err(format!("unknown format {other:?} (expected csv or jsonl)")),
        }
    }
}

impl std::fmt::Display for TraceFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.extension())
    }
}

/// What one experiment invocation runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub strategies: Vec<StrategyKind>,
    pub n_runs: usize,
    pub base_seed: u64,
    pub out_dir: PathBuf,
    pub format: TraceFormat,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scenario: Scenario::Case1,
            strategies: StrategyKind::ALL.to_vec(),
            n_runs: 10,
            base_seed: 1,
            out_dir: PathBuf::from("out"),
            format: TraceFormat::Csv,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ConfigFileError> {
        if self.n_runs < 1 {
            return Err(ConfigFileError::Experiment("runs must be >= 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(ConfigFileError::Experiment(
                "at least one strategy required".into(),
            ));
        }
        Ok(())
    }
}

/// The effective configuration: simulation parameters plus experiment layout.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedConfig {
    pub sim: SimConfig64,
    pub experiment: ExperimentSpec,
}

fn parse_num<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigFileError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigFileError::BadValue {
        line,
        key: key.to_string(),
        reason: e.to_string(),
    })
}

/// Parse a config document over the defaults, then run the shared range
/// validation. Unknown sections or keys are rejected with their line number.
pub fn parse_config(text: &str) -> Result<ParsedConfig, ConfigFileError> {
    let mut out = ParsedConfig::default();
    let mut section: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigFileError::Syntax {
                    line,
                    text: raw.to_string(),
                })?
                .trim();
            if !matches!(name, "sim" | "strategy" | "experiment") {
                return Err(ConfigFileError::UnknownSection {
                    line,
                    name: name.to_string(),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigFileError::Syntax {
            line,
            text: raw.to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let section = section
            .as_deref()
            .ok_or_else(|| ConfigFileError::KeyOutsideSection {
                line,
                key: key.to_string(),
            })?;

        let sim = &mut out.sim;
        let exp = &mut out.experiment;
        match (section, key) {
            ("sim", "dt") => sim.dt = parse_num(line, key, value)?,
            ("sim", "duration") => sim.duration = parse_num(line, key, value)?,
            ("sim", "n_lanes") => sim.n_lanes = parse_num(line, key, value)?,
            ("sim", "lane_width") => sim.lane_width = parse_num(line, key, value)?,
            ("sim", "vehicle_length") => sim.vehicle_length = parse_num(line, key, value)?,
            ("sim", "v_min") => sim.v_min = parse_num(line, key, value)?,
            ("sim", "v_max") => sim.v_max = parse_num(line, key, value)?,
            ("sim", "d_min") => sim.d_min = parse_num(line, key, value)?,
            ("sim", "d_safe") => sim.d_safe = parse_num(line, key, value)?,
            ("sim", "epsilon_lane") => sim.epsilon_lane = parse_num(line, key, value)?,
            ("sim", "p_collision") => sim.collision_penalty = parse_num(line, key, value)?,
            ("sim", "p_lane") => sim.lane_change_prob = parse_num(line, key, value)?,
            ("sim", "t_lane_change") => sim.lane_change_duration = parse_num(line, key, value)?,
            ("sim", "init_v_min") => sim.init_v_range.0 = parse_num(line, key, value)?,
            ("sim", "init_v_max") => sim.init_v_range.1 = parse_num(line, key, value)?,
            ("sim", "init_gap_min") => sim.init_gap_range.0 = parse_num(line, key, value)?,
            ("sim", "init_gap_max") => sim.init_gap_range.1 = parse_num(line, key, value)?,
            ("sim", "ttc_threshold") => sim.ttc_threshold = parse_num(line, key, value)?,
            ("sim", "seed") => sim.seed = parse_num(line, key, value)?,
            ("strategy", "cm") => sim.cm = parse_num(line, key, value)?,
            ("strategy", "w_c") => sim.w_c = parse_num(line, key, value)?,
            ("strategy", "alpha") => sim.alpha = parse_num(line, key, value)?,
            ("strategy", "beta") => sim.beta = parse_num(line, key, value)?,
            ("strategy", "gamma") => sim.gamma = parse_num(line, key, value)?,
            ("strategy", "lambda") => sim.lambda = parse_num(line, key, value)?,
            ("strategy", "r_safety_base") => sim.safety_base = parse_num(line, key, value)?,
            ("strategy", "r_efficiency_base") => {
                sim.efficiency_base = parse_num(line, key, value)?
            }
            ("strategy", "sigma_imit") => sim.imitation_sigma = parse_num(line, key, value)?,
            ("strategy", "p_imitation_fixed") => {
                sim.p_imitation_fixed = parse_num(line, key, value)?
            }
            ("strategy", "mutation_span") => sim.mutation_span = parse_num(line, key, value)?,
            ("strategy", "mutation_step") => sim.mutation_step = parse_num(line, key, value)?,
            ("strategy", "causal_window") => sim.causal_window = parse_num(line, key, value)?,
            ("strategy", "action_grid_span") => {
                sim.baseline.action_grid_span = parse_num(line, key, value)?
            }
            ("strategy", "action_grid_step") => {
                sim.baseline.action_grid_step = parse_num(line, key, value)?
            }
            ("strategy", "nash_max_iters") => {
                sim.baseline.nash_max_iters = parse_num(line, key, value)?
            }
            ("strategy", "nash_tol") => sim.baseline.nash_tol = parse_num(line, key, value)?,
            ("experiment", "scenario") => {
                exp.scenario = value.parse().map_err(|e| ConfigFileError::BadValue {
                    line,
                    key: key.to_string(),
                    reason: format!("{e}"),
                })?
            }
            ("experiment", "strategies") => {
                let mut strategies = Vec::new();
                for part in value.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    strategies.push(part.parse().map_err(|e| ConfigFileError::BadValue {
                        line,
                        key: key.to_string(),
                        reason: format!("{e}"),
                    })?);
                }
                exp.strategies = strategies;
            }
            ("experiment", "runs") => exp.n_runs = parse_num(line, key, value)?,
            ("experiment", "base_seed") => exp.base_seed = parse_num(line, key, value)?,
            ("experiment", "out_dir") => exp.out_dir = PathBuf::from(value),
            ("experiment", "format") => {
                exp.format = value.parse().map_err(|reason| ConfigFileError::BadValue {
                    line,
                    key: key.to_string(),
                    reason,
                })?
            }
            (section, key) => {
                return Err(ConfigFileError::UnknownKey {
                    line,
                    section: section.to_string(),
                    key: key.to_string(),
                })
            }
        }
    }

    out.sim.validate()?;
    out.experiment.validate()?;
    Ok(out)
}

/// Canonical text of the effective configuration. Re-parsing it reproduces
/// the same values exactly (floats use shortest round-trip encoding).
pub fn emit_effective(cfg: &ParsedConfig) -> String {
    let sim = &cfg.sim;
    let exp = &cfg.experiment;
    let strategies = exp
        .strategies
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",");
    format!(
        "[sim]\n\
         dt = {}\n\
         duration = {}\n\
         n_lanes = {}\n\
         lane_width = {}\n\
         vehicle_length = {}\n\
         v_min = {}\n\
         v_max = {}\n\
         d_min = {}\n\
         d_safe = {}\n\
         epsilon_lane = {}\n\
         p_collision = {}\n\
         p_lane = {}\n\
         t_lane_change = {}\n\
         init_v_min = {}\n\
         init_v_max = {}\n\
         init_gap_min = {}\n\
         init_gap_max = {}\n\
         ttc_threshold = {}\n\
         seed = {}\n\
         \n\
         [strategy]\n\
         cm = {}\n\
         w_c = {}\n\
         alpha = {}\n\
         beta = {}\n\
         gamma = {}\n\
         lambda = {}\n\
         r_safety_base = {}\n\
         r_efficiency_base = {}\n\
         sigma_imit = {}\n\
         p_imitation_fixed = {}\n\
         mutation_span = {}\n\
         mutation_step = {}\n\
         causal_window = {}\n\
         action_grid_span = {}\n\
         action_grid_step = {}\n\
         nash_max_iters = {}\n\
         nash_tol = {}\n\
         \n\
         [experiment]\n\
         scenario = {}\n\
         strategies = {}\n\
         runs = {}\n\
         base_seed = {}\n\
         out_dir = {}\n\
         format = {}\n",
        sim.dt,
        sim.duration,
        sim.n_lanes,
        sim.lane_width,
        sim.vehicle_length,
        sim.v_min,
        sim.v_max,
        sim.d_min,
        sim.d_safe,
        sim.epsilon_lane,
        sim.collision_penalty,
        sim.lane_change_prob,
        sim.lane_change_duration,
        sim.init_v_range.0,
        sim.init_v_range.1,
        sim.init_gap_range.0,
        sim.init_gap_range.1,
        sim.ttc_threshold,
        sim.seed,
        sim.cm,
        sim.w_c,
        sim.alpha,
        sim.beta,
        sim.gamma,
        sim.lambda,
        sim.safety_base,
        sim.efficiency_base,
        sim.imitation_sigma,
        sim.p_imitation_fixed,
        sim.mutation_span,
        sim.mutation_step,
        sim.causal_window,
        sim.baseline.action_grid_span,
        sim.baseline.action_grid_step,
        sim.baseline.nash_max_iters,
        sim.baseline.nash_tol,
        exp.scenario,
        strategies,
        exp.n_runs,
        exp.base_seed,
        exp.out_dir.display(),
        exp.format,
    )
}
