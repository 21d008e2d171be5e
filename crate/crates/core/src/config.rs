//! Flat `name = value` configuration files and run manifests.
//!
//! Every key is optional; missing keys take the reference defaults. Unknown
//! keys are rejected. Lines starting with `#` are comments, which is also how
//! manifests carry their metadata, so a manifest loads back as a config.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::error::SimError;
use crate::experiment::{SweepPlan, TrialConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation failed: {0}")]
    Validation(#[from] SimError),
}

/// Every recognised key, in emission order.
pub const KEYS: &[&str] = &[
    "n_agents",
    "speed",
    "turn_cap",
    "turn_gain",
    "repulsion_radius",
    "r_orient_max",
    "r_attract_max",
    "alpha",
    "dt",
    "concentration_floor",
    "peak_lengthscale",
    "rms_velocity",
    "mean_flow_x",
    "mean_flow_y",
    "correlation_time",
    "flow_modes",
    "grid_size",
    "source_x",
    "source_y",
    "source_amplitude",
    "decay_rate",
    "source_width",
    "spin_up_time",
    "spin_up_dt",
    "field_substeps",
    "max_time",
    "success_radius",
    "start_distance",
    "n_trials",
    "base_seed",
    "snapshot_interval",
    "n_transects",
];

/// Optional sweep axes, comma-separated lists. Written by `sweep` manifests so
/// a sweep can be rerun from its manifest alone.
pub const SWEEP_KEYS: &[&str] = &["sweep_agents", "sweep_repulsion", "sweep_alpha"];

/// A parsed config file: the trial configuration plus any sweep axes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDocument {
    pub trial: TrialConfig,
    /// Empty axes were not given.
    pub sweep: SweepPlan,
}

pub fn load_config(path: &Path) -> Result<TrialConfig, ConfigError> {
    load_document(path).map(|d| d.trial)
}

pub fn load_document(path: &Path) -> Result<ConfigDocument, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_document(&text)
}

/// Parses and validates a config document, ignoring sweep axes.
pub fn parse_config(text: &str) -> Result<TrialConfig, ConfigError> {
    parse_document(text).map(|d| d.trial)
}

pub fn parse_document(text: &str) -> Result<ConfigDocument, ConfigError> {
    let mut cfg = TrialConfig::default();
    let mut sweep = SweepPlan::default();
    let mut seen = HashSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `name = value`, found `{body}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) && !SWEEP_KEYS.contains(&key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        let set = if SWEEP_KEYS.contains(&key) {
            set_axis(&mut sweep, key, value)
        } else {
            set_key(&mut cfg, key, value)
        };
        set.map_err(|message| ConfigError::Parse { line, message })?;
    }
    if !seen.contains("source_width") {
        cfg.scalar.source_width = 2.0 / cfg.scalar.grid_size as f64;
    }
    cfg.validate()?;
    Ok(ConfigDocument { trial: cfg, sweep })
}

fn set_axis(plan: &mut SweepPlan, key: &str, value: &str) -> Result<(), String> {
    fn list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>, String> {
        value
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<T>()
                    .map_err(|_| format!("`{}` is not a valid list entry", v.trim()))
            })
            .collect()
    }
    match key {
        "sweep_agents" => plan.n_agents = list(value)?,
        "sweep_repulsion" => plan.repulsion_radius = list(value)?,
        "sweep_alpha" => plan.alpha = list(value)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Sweep axes as config lines, skipping empty axes.
pub fn emit_sweep(plan: &SweepPlan) -> String {
    let mut out = String::new();
    let join = |v: Vec<String>| v.join(",");
    if !plan.n_agents.is_empty() {
        let _ = writeln!(
            out,
            "sweep_agents = {}",
            join(plan.n_agents.iter().map(|n| n.to_string()).collect())
        );
    }
    if !plan.repulsion_radius.is_empty() {
        let _ = writeln!(
            out,
            "sweep_repulsion = {}",
            join(plan.repulsion_radius.iter().map(|&r| fmt_f64(r)).collect())
        );
    }
    if !plan.alpha.is_empty() {
        let _ = writeln!(
            out,
            "sweep_alpha = {}",
            join(plan.alpha.iter().map(|&a| fmt_f64(a)).collect())
        );
    }
    out
}

fn set_key(cfg: &mut TrialConfig, key: &str, value: &str) -> Result<(), String> {
    fn num(value: &str) -> Result<f64, String> {
        value
            .parse::<f64>()
            .map_err(|_| format!("`{value}` is not a number"))
    }
    fn count(value: &str) -> Result<usize, String> {
        value
            .parse::<usize>()
            .map_err(|_| format!("`{value}` is not a non-negative integer"))
    }
    match key {
        "n_agents" => cfg.swarm.n_agents = count(value)?,
        "speed" => cfg.swarm.speed = num(value)?,
        "turn_cap" => cfg.swarm.turn_cap = num(value)?,
        "turn_gain" => cfg.swarm.turn_gain = num(value)?,
        "repulsion_radius" => cfg.swarm.repulsion_radius = num(value)?,
        "r_orient_max" => cfg.swarm.r_orient_max = num(value)?,
        "r_attract_max" => cfg.swarm.r_attract_max = num(value)?,
        "alpha" => cfg.swarm.memory_timescale = num(value)?,
        "dt" => cfg.swarm.dt = num(value)?,
        "concentration_floor" => cfg.swarm.concentration_floor = num(value)?,
        "peak_lengthscale" => cfg.flow.peak_lengthscale = num(value)?,
        "rms_velocity" => cfg.flow.rms_velocity = num(value)?,
        "mean_flow_x" => cfg.flow.mean_flow.x = num(value)?,
        "mean_flow_y" => cfg.flow.mean_flow.y = num(value)?,
        "correlation_time" => cfg.flow.correlation_time = num(value)?,
        "flow_modes" => cfg.flow.modes = count(value)?,
        "grid_size" => cfg.scalar.grid_size = count(value)?,
        "source_x" => cfg.scalar.source.x = num(value)?,
        "source_y" => cfg.scalar.source.y = num(value)?,
        "source_amplitude" => cfg.scalar.amplitude = num(value)?,
        "decay_rate" => cfg.scalar.decay_rate = num(value)?,
        "source_width" => cfg.scalar.source_width = num(value)?,
        "spin_up_time" => cfg.spin_up_time = num(value)?,
        "spin_up_dt" => cfg.spin_up_dt = num(value)?,
        "field_substeps" => cfg.field_substeps = count(value)?,
        "max_time" => cfg.max_time = num(value)?,
        "success_radius" => cfg.success_radius = num(value)?,
        "start_distance" => cfg.start_distance = num(value)?,
        "n_trials" => cfg.n_trials = count(value)?,
        "base_seed" => {
            cfg.base_seed = value
                .parse::<u64>()
                .map_err(|_| format!("`{value}` is not a valid seed"))?
        }
        "snapshot_interval" => cfg.snapshot_interval = num(value)?,
        "n_transects" => cfg.n_transects = count(value)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Every key with its resolved value, one per line.
pub fn emit_config(cfg: &TrialConfig) -> String {
    let f = fmt_f64;
    let values: Vec<String> = vec![
        cfg.swarm.n_agents.to_string(),
        f(cfg.swarm.speed),
        f(cfg.swarm.turn_cap),
        f(cfg.swarm.turn_gain),
        f(cfg.swarm.repulsion_radius),
        f(cfg.swarm.r_orient_max),
        f(cfg.swarm.r_attract_max),
        f(cfg.swarm.memory_timescale),
        f(cfg.swarm.dt),
        f(cfg.swarm.concentration_floor),
        f(cfg.flow.peak_lengthscale),
        f(cfg.flow.rms_velocity),
        f(cfg.flow.mean_flow.x),
        f(cfg.flow.mean_flow.y),
        f(cfg.flow.correlation_time),
        cfg.flow.modes.to_string(),
        cfg.scalar.grid_size.to_string(),
        f(cfg.scalar.source.x),
        f(cfg.scalar.source.y),
        f(cfg.scalar.amplitude),
        f(cfg.scalar.decay_rate),
        f(cfg.scalar.source_width),
        f(cfg.spin_up_time),
        f(cfg.spin_up_dt),
        cfg.field_substeps.to_string(),
        f(cfg.max_time),
        f(cfg.success_radius),
        f(cfg.start_distance),
        cfg.n_trials.to_string(),
        cfg.base_seed.to_string(),
        f(cfg.snapshot_interval),
        cfg.n_transects.to_string(),
    ];
    let mut out = String::new();
    for (k, v) in KEYS.iter().zip(values) {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

/// Provenance of one command invocation.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub config: TrialConfig,
    /// Sweep axes, recorded for `sweep` runs.
    pub sweep: Option<SweepPlan>,
    pub code_version: String,
    pub timestamp: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: TrialConfig, outputs: Vec<String>) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            command: command.to_string(),
            config,
            sweep: None,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
            outputs,
        }
    }

    /// Metadata as comments followed by the full resolved configuration.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# plume-swarm run manifest");
        let _ = writeln!(out, "# code_version = {}", self.code_version);
        let _ = writeln!(out, "# command = {}", self.command);
        let _ = writeln!(out, "# timestamp = {}", self.timestamp);
        let _ = writeln!(out, "# outputs = {}", self.outputs.join(", "));
        out.push_str(&emit_config(&self.config));
        if let Some(plan) = &self.sweep {
            out.push_str(&emit_sweep(plan));
        }
        out
    }
}
