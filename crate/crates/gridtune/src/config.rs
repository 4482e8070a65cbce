//! Flat `key=value` configuration files for [`ExperimentConfig`].
//!
//! Blank lines and lines starting with `#` are ignored. Later assignments
//! override earlier ones, so command-line overrides are applied with
//! [`apply`] after the file.

use std::path::{Path, PathBuf};

use gridtune_core::SensitivityMode;

use crate::experiment::{DatasetSource, ExperimentConfig, Method};
use crate::io::parse_rect;
use crate::synth::SynthKind;
use crate::{HarnessError, Result};

pub const KEYS: &[&str] = &[
    "dataset",
    "dataset_name",
    "synth_n",
    "synth_kind",
    "domain",
    "method",
    "epsilon",
    "eps1_frac",
    "delta",
    "sensitivity_mode",
    "grid_candidates",
    "heuristic_c",
    "tune_sizes",
    "tune_positions",
    "eval_sizes",
    "eval_positions",
    "repeats",
    "seed",
];

/// Split `text` into `(key, value)` pairs without interpreting them.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| HarnessError::Parse {
            line: i + 1,
            message: format!("expected key=value, got `{line}`"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn bad(key: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        key: key.into(),
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| bad(key, format!("`{v}`: {e}")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',').map(|s| num(key, s.trim())).collect()
}

/// Set one field of `cfg` from its textual value.
pub fn apply(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "dataset" => {
            cfg.dataset = match value {
                "synth" => match cfg.dataset {
                    DatasetSource::Synth { .. } => cfg.dataset.clone(),
                    DatasetSource::File(_) => ExperimentConfig::default().dataset,
                },
                path => DatasetSource::File(PathBuf::from(path)),
            }
        }
        "dataset_name" => cfg.dataset_name = value.to_string(),
        "synth_n" | "synth_kind" => {
            let (mut n_points, mut kind) = match cfg.dataset {
                DatasetSource::Synth { n_points, kind } => (n_points, kind),
                DatasetSource::File(_) => (10_000, SynthKind::default()),
            };
            if key == "synth_n" {
                n_points = num(key, value)?;
            } else {
                kind = SynthKind::parse(value).ok_or_else(|| bad(key, format!("unknown kind `{value}`")))?;
            }
            cfg.dataset = DatasetSource::Synth { n_points, kind };
        }
        "domain" => cfg.domain = Some(parse_rect(value).map_err(|e| bad(key, e.to_string()))?),
        "method" => {
            cfg.methods = value
                .split(',')
                .map(|m| Method::parse(m.trim()).ok_or_else(|| bad(key, format!("unknown method `{m}`"))))
                .collect::<Result<_>>()?
        }
        "epsilon" => cfg.epsilon = num(key, value)?,
        "eps1_frac" => cfg.eps1_frac = num(key, value)?,
        "delta" => cfg.delta = Some(num(key, value)?),
        "sensitivity_mode" => {
            cfg.sensitivity_mode =
                SensitivityMode::parse(value).ok_or_else(|| bad(key, format!("unknown mode `{value}`")))?
        }
        "grid_candidates" => cfg.grid_candidates = list(key, value)?,
        "heuristic_c" => cfg.heuristic_c = num(key, value)?,
        "tune_sizes" => cfg.tune_workload.size_fractions = list(key, value)?,
        "tune_positions" => cfg.tune_workload.positions_per_size = num(key, value)?,
        "eval_sizes" => cfg.eval_workload.size_fractions = list(key, value)?,
        "eval_positions" => cfg.eval_workload.positions_per_size = num(key, value)?,
        "repeats" => cfg.repeats = num(key, value)?,
        "seed" => cfg.seed = num(key, value)?,
        _ => return Err(bad(key, "unknown key")),
    }
    Ok(())
}

pub fn parse_config(text: &str, base: ExperimentConfig) -> Result<ExperimentConfig> {
    let mut cfg = base;
    for (k, v) in parse_pairs(text)? {
        apply(&mut cfg, &k, &v)?;
    }
    Ok(cfg)
}

pub fn load_config(path: &Path, base: ExperimentConfig) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, base)
}
