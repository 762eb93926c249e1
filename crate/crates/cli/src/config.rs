//! Optional JSON configuration file. Precedence is CLI flag, then config
//! file, then built-in default; no environment variables.

use serde::Deserialize;
use std::path::Path;

use dissipativity::{Error, Result};

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub eig_tol: Option<f64>,
    pub input_std: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let parsed: ConfigFile = serde_json::from_str(&text)?;
        if let Some(tol) = parsed.eig_tol {
            if tol <= 0.0 {
                return Err(Error::InvalidArgument(
                    "config eig_tol must be positive".into(),
                ));
            }
        }
        Ok(parsed)
    }
}

/// Fully resolved settings shared by all subcommands.
#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub seed: u64,
    pub jobs: Option<usize>,
    pub eig_tol: f64,
    pub input_std: f64,
}

impl Settings {
    pub fn resolve(
        file: &ConfigFile,
        seed: Option<u64>,
        jobs: Option<usize>,
        eig_tol: Option<f64>,
        input_std: Option<f64>,
    ) -> Settings {
        Settings {
            seed: seed.or(file.seed).unwrap_or(0),
            jobs: jobs.or(file.jobs),
            eig_tol: eig_tol
                .or(file.eig_tol)
                .unwrap_or(dissipativity::DEFAULT_EIG_TOL),
            input_std: input_std.or(file.input_std).unwrap_or(10.0),
        }
    }
}
