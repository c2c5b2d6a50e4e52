//! TOML service configuration.
//!
//! Relative paths are resolved against the directory holding the config
//! file and checked for existence at load time. Credentials never appear in
//! the file: a live backend names the environment variable holding its key.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use kgqa_core::eval::{gold_echo_backend, load_dataset, EvalSample};
use kgqa_core::llm::{ChatBackend, LiveBackend, LiveConfig, ScriptedBackend};
use kgqa_core::pipeline::{Pipeline, PipelineOptions, ResourcePaths, Resources};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    /// Rule file in the scripted-backend JSON format. Without one every
    /// model call fails.
    Scripted {
        #[serde(default)]
        script: Option<PathBuf>,
    },
    /// Answers dataset questions with their gold queries; needs `eval.dataset`.
    GoldEcho,
    Live {
        endpoint: String,
        model: String,
        api_key_env: String,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
        #[serde(default)]
        retries: u32,
    },
}

fn default_timeout() -> u64 {
    60
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self::Scripted { script: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    /// Upper bound on pipeline runs in flight.
    pub max_concurrent: usize,
    /// `["*"]` allows any origin.
    pub cors_origins: Vec<String>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            max_concurrent: 4,
            cors_origins: vec!["*".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub dataset: Option<PathBuf>,
    pub parallelism: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            parallelism: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub resources: ResourcePaths,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub pipeline: PipelineOptions,
    #[serde(default)]
    pub server: ServerConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn must_exist(p: &Path) -> Result<(), ConfigError> {
    if p.exists() {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!(
            "{}: file not found",
            p.display()
        )))
    }
}

impl Config {
    /// Parses TOML; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path, origin: &str) -> Result<Self, ConfigError> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.message().to_string(),
        })?;
        cfg.resources = cfg.resources.resolve(base);
        if let BackendConfig::Scripted { script: Some(s) } = &mut cfg.backend {
            *s = resolve(base, s);
        }
        if let Some(d) = &mut cfg.eval.dataset {
            *d = resolve(base, d);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, &path.display().to_string())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.resources
            .check_exist()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let BackendConfig::Scripted { script: Some(s) } = &self.backend {
            must_exist(s)?;
        }
        if let Some(d) = &self.eval.dataset {
            must_exist(d)?;
        }
        if self.backend == BackendConfig::GoldEcho && self.eval.dataset.is_none() {
            return Err(ConfigError::Invalid(
                "backend kind gold_echo needs eval.dataset".into(),
            ));
        }
        if self.server.max_concurrent == 0 {
            return Err(ConfigError::Invalid(
                "server.max_concurrent must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn dataset(&self) -> Result<Vec<EvalSample>, ConfigError> {
        let path = self
            .eval
            .dataset
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("no eval.dataset configured".into()))?;
        load_dataset(path).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn load_resources(&self) -> Result<Resources, ConfigError> {
        Resources::load(&self.resources).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn backend(&self, resources: &Resources) -> Result<Arc<dyn ChatBackend>, ConfigError> {
        Ok(match &self.backend {
            BackendConfig::Scripted { script: None } => {
                Arc::new(ScriptedBackend::new(Vec::new()).named("scripted"))
            }
            BackendConfig::Scripted { script: Some(path) } => {
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                Arc::new(
                    ScriptedBackend::from_json(&text)
                        .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?,
                )
            }
            BackendConfig::GoldEcho => Arc::new(gold_echo_backend(
                &self.dataset()?,
                Some(&resources.vocabulary),
            )),
            BackendConfig::Live {
                endpoint,
                model,
                api_key_env,
                timeout_secs,
                retries,
            } => Arc::new(
                LiveBackend::new(LiveConfig {
                    endpoint: endpoint.clone(),
                    model: model.clone(),
                    api_key_env: api_key_env.clone(),
                    timeout_secs: *timeout_secs,
                    retries: *retries,
                })
                .map_err(|e| ConfigError::Invalid(e.to_string()))?,
            ),
        })
    }

    pub fn pipeline(&self) -> Result<Pipeline, ConfigError> {
        let res = self.load_resources()?;
        let backend = self.backend(&res)?;
        Ok(Pipeline::from_resources(&res, backend))
    }
}
