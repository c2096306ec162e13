//! Run configuration: a TOML file overridden by environment variables
//! overridden by command-line flags (flags > env > file).
//!
//! The engine itself takes no random seed: retrieval tie-breaks are
//! deterministic and sampling happens server-side.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::llm::{GenerationParams, ENV_KEY, ENV_MODEL, ENV_URL};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("could not read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("could not parse config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Sampling settings handed to the gateway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: u32,
    pub stop_sequences: Vec<String>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        let params = GenerationParams::default();
        GenerationConfig {
            temperature: params.temperature,
            top_p: params.top_p,
            max_new_tokens: params.max_new_tokens,
            stop_sequences: params.stop_sequences,
        }
    }
}

impl GenerationConfig {
    pub fn to_params(&self) -> GenerationParams {
        GenerationParams {
            temperature: self.temperature,
            top_p: self.top_p,
            max_new_tokens: self.max_new_tokens,
            stop_sequences: self.stop_sequences.clone(),
        }
    }
}

/// Where a chat backend comes from: a live HTTP endpoint or a replay
/// script. HTTP fields left empty fall back to the gateway environment
/// variables at resolution time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendSpec {
    Http {
        #[serde(default)]
        url: Option<String>,
        #[serde(default)]
        model: Option<String>,
        #[serde(default)]
        key: Option<String>,
    },
    Scripted {
        /// One script file (single-question commands such as `ask`).
        #[serde(default)]
        script: Option<PathBuf>,
        /// A directory of `{question_id}.json` scripts (benchmarks).
        #[serde(default)]
        dir: Option<PathBuf>,
    },
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Http {
            url: None,
            model: None,
            key: None,
        }
    }
}

/// Backends per agent role; judge and reflection fall back to the
/// reasoning backend when unset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendsConfig {
    pub reasoning: BackendSpec,
    pub judge: Option<BackendSpec>,
    pub reflection: Option<BackendSpec>,
}

/// The full run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Inner-loop step budget per attempt.
    pub t_max: usize,
    /// Maximum reflections per episode.
    pub n_reflect: usize,
    /// Benchmark worker threads.
    pub workers: usize,
    /// Where result and log files are written.
    pub out_dir: PathBuf,
    /// Root directory holding one prompt-catalog subdirectory per domain.
    pub catalog_dir: Option<PathBuf>,
    /// Feature names indexed for retrieval; empty means every feature in
    /// the graph schema.
    pub retrieval_fields: Vec<String>,
    /// Graph file per domain.
    pub graphs: BTreeMap<String, PathBuf>,
    pub generation: GenerationConfig,
    pub backends: BackendsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            t_max: 10,
            n_reflect: 2,
            workers: 1,
            out_dir: PathBuf::from("out"),
            catalog_dir: None,
            retrieval_fields: Vec::new(),
            graphs: BTreeMap::new(),
            generation: GenerationConfig::default(),
            backends: BackendsConfig::default(),
        }
    }
}

/// Command-line values that override the loaded configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CliOverrides {
    pub t_max: Option<usize>,
    pub n_reflect: Option<usize>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub backend_url: Option<String>,
    pub backend_model: Option<String>,
    pub backend_key: Option<String>,
}

impl RunConfig {
    /// Loads a TOML config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    /// Loads `path` when given, otherwise starts from defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            Some(path) => Self::load(path),
            None => Ok(Self::default()),
        }
    }

    /// Applies the gateway environment variables over file values.
    pub fn apply_env(&mut self) {
        let read = |name: &str| std::env::var(name).ok().filter(|v| !v.is_empty());
        self.apply_backend_values(read(ENV_URL), read(ENV_MODEL), read(ENV_KEY));
    }

    /// Applies command-line flags over everything else.
    pub fn apply_overrides(&mut self, overrides: &CliOverrides) {
        if let Some(t_max) = overrides.t_max {
            self.t_max = t_max;
        }
        if let Some(n_reflect) = overrides.n_reflect {
            self.n_reflect = n_reflect;
        }
        if let Some(workers) = overrides.workers {
            self.workers = workers;
        }
        if let Some(out_dir) = &overrides.out_dir {
            self.out_dir = out_dir.clone();
        }
        self.apply_backend_values(
            overrides.backend_url.clone(),
            overrides.backend_model.clone(),
            overrides.backend_key.clone(),
        );
    }

    /// Overwrites url/model/key on every HTTP backend spec with the given
    /// values, where present.
    fn apply_backend_values(
        &mut self,
        url: Option<String>,
        model: Option<String>,
        key: Option<String>,
    ) {
        let mut specs = vec![&mut self.backends.reasoning];
        specs.extend(self.backends.judge.as_mut());
        specs.extend(self.backends.reflection.as_mut());
        for spec in specs {
            if let BackendSpec::Http {
                url: spec_url,
                model: spec_model,
                key: spec_key,
            } = spec
            {
                if let Some(v) = &url {
                    *spec_url = Some(v.clone());
                }
                if let Some(v) = &model {
                    *spec_model = Some(v.clone());
                }
                if let Some(v) = &key {
                    *spec_key = Some(v.clone());
                }
            }
        }
    }

    /// Checks invariants that the type system cannot.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.t_max < 1 {
            return Err(ConfigError::Invalid("t_max must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        for (role, spec) in [
            ("reasoning", Some(&self.backends.reasoning)),
            ("judge", self.backends.judge.as_ref()),
            ("reflection", self.backends.reflection.as_ref()),
        ] {
            if let Some(BackendSpec::Scripted { script, dir }) = spec {
                match (script, dir) {
                    (Some(_), Some(_)) => {
                        return Err(ConfigError::Invalid(format!(
                            "{role} backend sets both script and dir; pick one"
                        )))
                    }
                    (None, None) => {
                        return Err(ConfigError::Invalid(format!(
                            "{role} backend is scripted but names neither script nor dir"
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// The judge backend spec, falling back to reasoning.
    pub fn judge_spec(&self) -> &BackendSpec {
        self.backends
            .judge
            .as_ref()
            .unwrap_or(&self.backends.reasoning)
    }

    /// The reflection backend spec, falling back to reasoning.
    pub fn reflection_spec(&self) -> &BackendSpec {
        self.backends
            .reflection
            .as_ref()
            .unwrap_or(&self.backends.reasoning)
    }

    /// Renders the resolved configuration as TOML (for `config-show`).
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }
}
