//! Run configuration: a flat `key = value` text file mirroring the trainer
//! and network settings plus paths, seed, and output knobs.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored;
//! unknown keys are errors. See the README for the full key table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ptrnet_ea_core::evolution::{NcsConfig, SigmaRule};
use ptrnet_ea_core::ptrnet::{DecodeMode, NetworkConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
}

/// Everything one training run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tag: String,
    pub train_dataset: PathBuf,
    pub test_dataset: Option<PathBuf>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub net: NetworkConfig,
    pub ncs: NcsConfig,
    /// Iterations between checkpoint writes; a checkpoint is always written
    /// at exit as well.
    pub checkpoint_interval: u64,
    /// When false the metrics `wallclock_ms` column is written as zero so
    /// run artifacts are byte-reproducible; timing stays available in logs.
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tag: "run".into(),
            train_dataset: PathBuf::new(),
            test_dataset: None,
            seed: 0,
            out_dir: PathBuf::new(),
            net: NetworkConfig {
                embedding_size: 32,
                hidden_size: 256,
                num_layers: 5,
                decode_mode: DecodeMode::Greedy,
            },
            ncs: NcsConfig {
                population_size: 5,
                max_iterations: 8000,
                epoch_length: 10,
                sigma_init: 0.05,
                batch_size: 256,
                normalize_acceptance: true,
                sigma_rule: SigmaRule::OneFifthStandard,
                time_budget_secs: None,
            },
            checkpoint_interval: 50,
            record_timing: true,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut saw_train = false;
        let mut saw_out = false;
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line, text: raw.to_string() })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |message: String| ConfigError::BadValue { line, key: key.to_string(), message };
            match key {
                "tag" => cfg.tag = value.to_string(),
                "train_dataset" => {
                    cfg.train_dataset = PathBuf::from(value);
                    saw_train = true;
                }
                "test_dataset" => cfg.test_dataset = Some(PathBuf::from(value)),
                "seed" => cfg.seed = value.parse().map_err(|e| bad(format!("{e}")))?,
                "out_dir" => {
                    cfg.out_dir = PathBuf::from(value);
                    saw_out = true;
                }
                "embedding_size" => cfg.net.embedding_size = value.parse().map_err(|e| bad(format!("{e}")))?,
                "hidden_size" => cfg.net.hidden_size = value.parse().map_err(|e| bad(format!("{e}")))?,
                "num_layers" => cfg.net.num_layers = value.parse().map_err(|e| bad(format!("{e}")))?,
                "decode_mode" => {
                    cfg.net.decode_mode = DecodeMode::parse(value)
                        .ok_or_else(|| bad("expected greedy or sample".into()))?
                }
                "population_size" => cfg.ncs.population_size = value.parse().map_err(|e| bad(format!("{e}")))?,
                "max_iterations" => cfg.ncs.max_iterations = value.parse().map_err(|e| bad(format!("{e}")))?,
                "epoch_length" => cfg.ncs.epoch_length = value.parse().map_err(|e| bad(format!("{e}")))?,
                "sigma_init" => cfg.ncs.sigma_init = value.parse().map_err(|e| bad(format!("{e}")))?,
                "batch_size" => cfg.ncs.batch_size = value.parse().map_err(|e| bad(format!("{e}")))?,
                "normalize_acceptance" => {
                    cfg.ncs.normalize_acceptance =
                        value.parse().map_err(|_| bad("expected true or false".into()))?
                }
                "sigma_rule" => {
                    cfg.ncs.sigma_rule = SigmaRule::parse(value)
                        .ok_or_else(|| bad("expected paper_literal or one_fifth_standard".into()))?
                }
                "time_budget_secs" => {
                    cfg.ncs.time_budget_secs =
                        Some(value.parse().map_err(|e| bad(format!("{e}")))?)
                }
                "checkpoint_interval" => {
                    cfg.checkpoint_interval = value.parse().map_err(|e| bad(format!("{e}")))?
                }
                "record_timing" => {
                    cfg.record_timing = value.parse().map_err(|_| bad("expected true or false".into()))?
                }
                other => return Err(ConfigError::UnknownKey { line, key: other.to_string() }),
            }
        }
        if !saw_train {
            return Err(ConfigError::Missing("train_dataset"));
        }
        if !saw_out {
            cfg.out_dir = PathBuf::from("runs").join(&cfg.tag);
        }
        Ok(cfg)
    }

    /// Canonical text form of the trainer-relevant settings; hashed into
    /// checkpoints so a resume can detect config drift.
    pub fn canonical_settings(net: &NetworkConfig, ncs: &NcsConfig, seed: u64) -> String {
        let mut map = BTreeMap::new();
        map.insert("embedding_size", net.embedding_size.to_string());
        map.insert("hidden_size", net.hidden_size.to_string());
        map.insert("num_layers", net.num_layers.to_string());
        map.insert("decode_mode", net.decode_mode.name().to_string());
        map.insert("population_size", ncs.population_size.to_string());
        map.insert("max_iterations", ncs.max_iterations.to_string());
        map.insert("epoch_length", ncs.epoch_length.to_string());
        map.insert("sigma_init", ncs.sigma_init.to_string());
        map.insert("batch_size", ncs.batch_size.to_string());
        map.insert("normalize_acceptance", ncs.normalize_acceptance.to_string());
        map.insert("sigma_rule", ncs.sigma_rule.name().to_string());
        map.insert("seed", seed.to_string());
        let mut out = String::new();
        for (k, v) in map {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}
