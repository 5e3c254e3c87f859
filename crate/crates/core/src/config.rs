//! Run configuration: one TOML document with `[arena]`, `[camera]`,
//! `[neat]`, `[coevo]` and `[run]` sections. Every key is optional and
//! falls back to the default profile.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arena::ArenaConfig;
use crate::coevo::CoevoConfig;
use crate::error::{Error, Result};
use crate::neat::NeatConfig;
use crate::sensors::CameraModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSettings {
    /// Master seed; every random draw in a run derives from it.
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            seed: 1,
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub arena: ArenaConfig,
    pub camera: CameraModel,
    pub neat: NeatConfig,
    pub coevo: CoevoConfig,
    pub run: RunSettings,
}

impl RunConfig {
    /// Small profile for CI: 10 generations, population 8, K = 3.
    pub fn smoke() -> Self {
        let mut c = RunConfig::default();
        c.neat.generations = 10;
        c.neat.population_size = 8;
        c.coevo.evaluations = 3;
        c.run.output_dir = PathBuf::from("runs/smoke");
        c
    }

    pub fn profile(name: &str) -> Option<Self> {
        match name {
            "default" => Some(RunConfig::default()),
            "smoke" => Some(RunConfig::smoke()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.arena.validate()?;
        self.camera.validate()?;
        self.neat.validate()?;
        self.coevo.validate()?;
        if self.neat.population_size < 2 {
            return Err(Error::Config("neat.population_size must be >= 2".into()));
        }
        Ok(())
    }

    /// Parses and validates a TOML document. Syntax and schema errors carry
    /// the 1-based line they were found on.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::ConfigParse {
                line,
                message: e.message().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        RunConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form with the output directory blanked,
    /// so a run can be moved without invalidating resume.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.run.output_dir = PathBuf::new();
        hex::encode(Sha256::digest(canonical.to_toml_string().as_bytes()))
    }
}
