//! The run configuration: one TOML file, every field defaulted, so
//! `platform` and `backend` alone make a runnable config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::action::Platform;
use crate::env::{generate_world, GuiWorld, WorldParams};
use crate::guided::GuidedConfig;
use crate::orchestrator::EpisodeConfig;
use crate::reasoner::{Backend, ReasonerConfig};
use crate::walk::WalkConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Receives dataset.jsonl and rejects.jsonl. Relative paths are taken
    /// from the config file's directory.
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Overrides `world.platform`.
    pub platform: Platform,
    pub backend: Backend,
    pub n_episodes: u64,
    pub n_strides: u32,
    /// Episode `i` runs with seed `base_seed + i`.
    pub base_seed: u64,
    pub world_seed: u64,
    /// A saved world to use instead of generating one.
    pub world_file: Option<PathBuf>,
    pub world: WorldParams,
    pub walk: WalkConfig,
    pub guided: GuidedConfig,
    pub reasoner: ReasonerConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            platform: Platform::Mobile,
            backend: Backend::ScriptedOracle,
            n_episodes: 10,
            n_strides: 3,
            base_seed: 0,
            world_seed: 0,
            world_file: None,
            world: WorldParams::default(),
            walk: WalkConfig::default(),
            guided: GuidedConfig::default(),
            reasoner: ReasonerConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

fn invalid(section: &str, (field, message): (&'static str, String)) -> CliError {
    let field = if section.is_empty() { field.to_string() } else { format!("{section}.{field}") };
    CliError::ConfigInvalid { field, message }
}

impl RunConfig {
    /// Parses and validates; relative paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::ConfigInvalid {
            field: "-".into(),
            message: e.message().trim().to_string(),
        })?;
        cfg.world.platform = cfg.platform;
        if cfg.output.dir.is_relative() {
            cfg.output.dir = base_dir.join(&cfg.output.dir);
        }
        if let Some(w) = &cfg.world_file {
            if w.is_relative() {
                cfg.world_file = Some(base_dir.join(w));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_episodes == 0 {
            return Err(invalid("", ("n_episodes", "must be at least 1".into())));
        }
        if self.n_strides == 0 {
            return Err(invalid("", ("n_strides", "must be at least 1".into())));
        }
        if self.world_file.is_none() {
            self.world.validate().map_err(|e| invalid("world", e))?;
        }
        self.walk.validate().map_err(|e| invalid("walk", e))?;
        self.guided.validate().map_err(|e| invalid("guided", e))?;
        self.reasoner.validate().map_err(|e| invalid("reasoner", e))?;
        Ok(())
    }

    pub fn episode_config(&self) -> EpisodeConfig {
        EpisodeConfig {
            n_strides: self.n_strides,
            walk: self.walk.clone(),
            guided: self.guided.clone(),
            rates: self.reasoner.price_per_million_tokens,
        }
    }

    /// The configured world: loaded from `world_file`, or generated.
    pub fn build_world(&self) -> Result<GuiWorld, CliError> {
        match &self.world_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
                let world = GuiWorld::from_json(&text).map_err(|e| CliError::ConfigInvalid {
                    field: "world_file".into(),
                    message: format!("{}: {e}", path.display()),
                })?;
                if world.platform != self.platform {
                    return Err(invalid(
                        "",
                        ("world_file", format!("world is {} but the config says {}", world.platform, self.platform)),
                    ));
                }
                Ok(world)
            }
            None => generate_world(self.world_seed, &self.world)
                .map_err(|e| CliError::ConfigInvalid { field: "world".into(), message: e.to_string() }),
        }
    }
}
