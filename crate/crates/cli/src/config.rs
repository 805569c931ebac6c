//! Layered run configuration: command-line flags override the config
//! file, which overrides the built-in defaults.

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

pub mod defaults {
    pub const SEED: u64 = 42;
    pub const THREADS: usize = 0;
    pub const BOOTSTRAP: usize = 1000;
    pub const PERIOD: &str = "quarter";
    pub const MIN_WEIGHT_POOLED: f64 = 5.0;
    pub const MIN_WEIGHT_GROUP: f64 = 1.0;
    pub const TRAINING_CAP: usize = 2000;
    pub const SENTENCE_CUTOFF: f64 = 2000.0;
    pub const MIN_GROUPS_PER_WORD: usize = 100;
    pub const TOP_WORDS: usize = 20;
    pub const ROUNDS_LABELS: usize = 50;
    pub const ROUNDS_ALPHA: usize = 300;
    pub const RATIO_FLOOR: f64 = 1e-4;
    pub const BIN_WIDTH_ALPHA: f64 = 0.01;
    pub const BIN_WIDTH_SIM: f64 = 0.002;
    pub const REPHRASE_RATE: f64 = 0.15;
    pub const PARALLELISM: usize = 4;
}

/// Optional overrides loaded from a TOML config file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub bootstrap: Option<usize>,
    pub period: Option<String>,
    pub min_weight_pooled: Option<f64>,
    pub min_weight_group: Option<f64>,
    pub training_cap: Option<usize>,
    pub sentence_cutoff: Option<f64>,
    pub min_groups_per_word: Option<usize>,
    pub top_words: Option<usize>,
    pub rounds_labels: Option<usize>,
    pub rounds_alpha: Option<usize>,
    pub ratio_floor: Option<f64>,
    pub bin_width_alpha: Option<f64>,
    pub bin_width_sim: Option<f64>,
    pub rephrase_rate: Option<f64>,
    pub parallelism: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&raw)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

pub fn resolve<T: Copy>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn resolve_with<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
