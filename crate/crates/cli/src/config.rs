//! Optional TOML run file. Keys are the long flag names; a flag given on
//! the command line always wins over the file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub named: Option<String>,
    pub game: Option<PathBuf>,
    pub random: Option<bool>,
    pub players: Option<usize>,
    pub actions: Option<usize>,
    pub algo: Option<String>,
    pub rounds: Option<usize>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub smoothness: Option<f64>,
    pub safeguard: Option<bool>,
    pub unsafe_params: Option<bool>,
    pub out: Option<PathBuf>,
    pub log_every: Option<usize>,
    pub adversary: Option<String>,
    pub suite: Option<String>,
    pub samples: Option<usize>,
    pub d: Option<usize>,
    pub m: Option<usize>,
    pub polytope: Option<String>,
    pub amplitude: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Flag, then file, then default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn switch(flag: bool, file: Option<bool>) -> bool {
    flag || file.unwrap_or(false)
}
