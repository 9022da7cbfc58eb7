//! Runtime configuration: a flat `section.key = value` file that sets the
//! embedding space, the unification threshold, the confidence policy, and the
//! search budgets. Unknown keys are errors, not warnings.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::embed::{HashEmbedding, SynonymError, SynonymTable};
use crate::reason::ReasonerSettings;
use crate::rules::ConfidencePolicy;
use crate::term::{Copula, CopulaKind, CopulaRegistry, Polarity, RegistryError};

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Embedding dimension; at least 2.
    pub dim: usize,
    /// Seed mixed into every embedded symbol.
    pub seed: u64,
    /// Optional synonym table, resolved against the config file's directory
    /// when loaded from disk.
    pub synonyms: Option<PathBuf>,
    pub policy: ConfidencePolicy,
    pub settings: ReasonerSettings,
    /// Copulas registered on top of the built-ins, in declaration order.
    pub copulas: Vec<Copula>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            dim: 64,
            seed: 0,
            synonyms: None,
            policy: ConfidencePolicy::default(),
            settings: ReasonerSettings::default(),
            copulas: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: expected `section.key = value`, got `{text}`")]
    Shape { line: usize, text: String },
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: `{key}` wants {want}, got `{value}`")]
    BadValue { line: usize, key: String, want: &'static str, value: String },
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Synonyms(#[from] SynonymError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

impl Config {
    /// Parse config text. Lines hold `section.key = value`; `#` starts a
    /// comment; blank lines are skipped. Later lines override earlier ones.
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut config = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Shape { line, text: content.to_string() });
            };
            config.set(key.trim(), value.trim(), line)?;
        }
        Ok(config)
    }

    /// Load a config file, resolving a relative synonym path against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut config = Config::parse(&text)?;
        if let Some(syn) = &config.synonyms {
            if syn.is_relative() {
                if let Some(dir) = path.parent() {
                    config.synonyms = Some(dir.join(syn));
                }
            }
        }
        Ok(config)
    }

    /// Apply one `section.key = value` setting. `line` only shapes errors.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(
            key: &str,
            value: &str,
            line: usize,
            want: &'static str,
        ) -> Result<T, ConfigError> {
            value.parse().map_err(|_| ConfigError::BadValue {
                line,
                key: key.to_string(),
                want,
                value: value.to_string(),
            })
        }
        let bad = |want: &'static str| ConfigError::BadValue {
            line,
            key: key.to_string(),
            want,
            value: value.to_string(),
        };
        match key {
            "embedding.dim" => {
                let dim: usize = num(key, value, line, "an integer of at least 2")?;
                if dim < 2 {
                    return Err(bad("an integer of at least 2"));
                }
                self.dim = dim;
            }
            "embedding.seed" => self.seed = num(key, value, line, "an unsigned integer")?,
            "embedding.synonyms" => self.synonyms = Some(PathBuf::from(value)),
            "unify.theta" => {
                let theta: f64 = num(key, value, line, "a number in [0, 1]")?;
                if !(0.0..=1.0).contains(&theta) {
                    return Err(bad("a number in [0, 1]"));
                }
                self.settings.theta = theta;
            }
            "policy.strong" | "policy.weak" | "policy.focus" => {
                let factor: f64 = num(key, value, line, "a non-negative number")?;
                if !factor.is_finite() || factor < 0.0 {
                    return Err(bad("a non-negative number"));
                }
                match key {
                    "policy.strong" => self.policy.strong = factor,
                    "policy.weak" => self.policy.weak = factor,
                    _ => self.policy.focus = factor,
                }
            }
            "policy.copula_order" => {
                let order: Vec<String> =
                    value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                if order.is_empty() {
                    return Err(bad("a comma-separated copula list"));
                }
                self.policy.copula_order = order;
            }
            "reasoner.max_steps" => {
                let n: usize = num(key, value, line, "an integer of at least 1")?;
                if n == 0 {
                    return Err(bad("an integer of at least 1"));
                }
                self.settings.max_steps = n;
            }
            "reasoner.max_depth" => {
                let n: usize = num(key, value, line, "an integer of at least 1")?;
                if n == 0 {
                    return Err(bad("an integer of at least 1"));
                }
                self.settings.max_depth = n;
            }
            "reasoner.beam_width" => {
                let n: usize = num(key, value, line, "an integer of at least 1")?;
                if n == 0 {
                    return Err(bad("an integer of at least 1"));
                }
                self.settings.beam_width = n;
            }
            "reasoner.soft_goal" => {
                self.settings.soft_goal = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(bad("true or false")),
                };
            }
            // Repeatable: each line adds one copula on top of the built-ins.
            "copula.define" => {
                let want = "`surface statement|linkage [negates <base>] [symmetric]`";
                let mut words = value.split_whitespace();
                let (Some(surface), Some(kind)) = (words.next(), words.next()) else {
                    return Err(bad(want));
                };
                let kind = match kind {
                    "statement" => CopulaKind::Statement,
                    "linkage" => CopulaKind::Linkage,
                    _ => return Err(bad(want)),
                };
                let mut negation_of = None;
                let mut symmetric = false;
                while let Some(word) = words.next() {
                    match word {
                        "negates" => match words.next() {
                            Some(base) => negation_of = Some(base.to_string()),
                            None => return Err(bad(want)),
                        },
                        "symmetric" => symmetric = true,
                        _ => return Err(bad(want)),
                    }
                }
                let polarity =
                    if negation_of.is_some() { Polarity::Negative } else { Polarity::Positive };
                self.copulas.push(Copula {
                    id: surface.to_string(),
                    surface: surface.to_string(),
                    kind,
                    polarity,
                    negation_of,
                    symmetric,
                });
            }
            _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
        }
        Ok(())
    }

    /// Build the copula registry: the built-ins plus every `copula.define`.
    pub fn registry(&self) -> Result<CopulaRegistry, ConfigError> {
        let mut registry = CopulaRegistry::default();
        for copula in &self.copulas {
            registry.register(copula.clone())?;
        }
        Ok(registry)
    }

    /// Build the embedding provider this config describes.
    pub fn provider(&self) -> Result<HashEmbedding, ConfigError> {
        let table = match &self.synonyms {
            Some(path) => SynonymTable::load(path)?,
            None => SynonymTable::default(),
        };
        Ok(HashEmbedding::new(self.dim, self.seed, table))
    }
}
