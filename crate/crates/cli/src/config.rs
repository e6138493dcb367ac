//! Experiment configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, Result};
use backsample::decode::Strategy;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub instance: InstanceConfig,
    #[serde(default)]
    pub run: RunConfig,
}

/// What to decode against.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    /// "binary", "api", "shared-prefix", or "files".
    #[serde(default = "default_kind")]
    pub kind: String,
    /// API bench size (kind = "api").
    #[serde(default = "default_num_apis")]
    pub num_apis: usize,
    #[serde(default = "default_branching")]
    pub branching: usize,
    #[serde(default = "default_prefix_len")]
    pub prefix_len: usize,
    /// Generator seed, independent of the sampling seed.
    #[serde(default)]
    pub gen_seed: u64,
    /// API version whose constrainer is enforced: "a" or "b".
    #[serde(default = "default_version")]
    pub version: String,
    /// Table-model JSON file (kind = "files").
    pub model: Option<PathBuf>,
    /// API list file defining the trie constraint (kind = "files").
    pub api_list: Option<PathBuf>,
    /// Dot-separated target sequence for EM metrics (kind = "files").
    pub target: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_strategies")]
    pub strategies: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    /// 0 means unbounded.
    #[serde(default)]
    pub max_backtrack: usize,
    #[serde(default)]
    pub share_q: bool,
    #[serde(default)]
    pub greedy: bool,
    /// 0 disables the sliding-window KL series.
    #[serde(default)]
    pub kl_window: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: u64,
    #[serde(default = "default_max_model_calls")]
    pub max_model_calls: u64,
    /// Fault injection for the oracle check's regression guard.
    #[serde(default)]
    pub fault_skip_rejection: bool,
}

fn default_kind() -> String {
    "binary".into()
}
fn default_num_apis() -> usize {
    419
}
fn default_branching() -> usize {
    8
}
fn default_prefix_len() -> usize {
    1
}
fn default_version() -> String {
    "b".into()
}
fn default_strategies() -> Vec<String> {
    vec!["unconstrained".into(), "constrained".into(), "asap".into(), "backtrack".into()]
}
fn default_samples() -> u64 {
    1000
}
fn default_top_p() -> f64 {
    1.0
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_oracle_samples() -> u64 {
    200_000
}
fn default_max_model_calls() -> u64 {
    1_000_000
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty run config has defaults")
    }
}

impl Default for InstanceConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty instance config has defaults")
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config has defaults")
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.samples == 0 {
            return Err(CliError::Config("samples must be at least 1".into()));
        }
        if self.run.strategies.is_empty() {
            return Err(CliError::Config("at least one strategy is required".into()));
        }
        self.strategies()?;
        if !(self.run.top_p > 0.0 && self.run.top_p <= 1.0) {
            return Err(CliError::Config(format!(
                "top_p must be in (0, 1], got {}",
                self.run.top_p
            )));
        }
        match self.instance.kind.as_str() {
            "binary" | "api" | "shared-prefix" => {}
            "files" => {
                if self.instance.model.is_none() || self.instance.api_list.is_none() {
                    return Err(CliError::Config(
                        "kind = \"files\" needs both model and api_list paths".into(),
                    ));
                }
            }
            other => {
                return Err(CliError::Config(format!("unknown instance kind {other:?}")));
            }
        }
        match self.instance.version.as_str() {
            "a" | "b" => Ok(()),
            other => Err(CliError::Config(format!("unknown API version {other:?}"))),
        }
    }

    pub fn strategies(&self) -> Result<Vec<Strategy>> {
        self.run
            .strategies
            .iter()
            .map(|s| s.parse::<Strategy>().map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub strategies: Vec<String>,
    pub top_p: Option<f64>,
    pub max_backtrack: Option<usize>,
    pub share_q: Option<bool>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn apply(&mut self, ov: &Overrides) -> Result<()> {
        if let Some(seed) = ov.seed {
            self.run.seed = seed;
        }
        if let Some(samples) = ov.samples {
            self.run.samples = samples;
        }
        if !ov.strategies.is_empty() {
            self.run.strategies = ov.strategies.clone();
        }
        if let Some(p) = ov.top_p {
            self.run.top_p = p;
        }
        if let Some(d) = ov.max_backtrack {
            self.run.max_backtrack = d;
        }
        if let Some(s) = ov.share_q {
            self.run.share_q = s;
        }
        if let Some(out) = &ov.out {
            self.run.out = out.clone();
        }
        self.validate()
    }
}
