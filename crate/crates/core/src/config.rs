//! Loading the model and solver configuration from a TOML file.

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::despot::SolverConfig;
use crate::error::ConfigError;
use crate::model::ModelParams;

/// The shipped parameter file.
pub const DEFAULT_PARAMS: &str = include_str!("../params/default.toml");

/// Contents of a config file: model parameters at top level, solver settings
/// under `[solver]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub model: ModelParams,
    pub solver: SolverConfig,
}

impl ConfigFile {
    /// The shipped defaults.
    pub fn defaults() -> ConfigFile {
        ConfigFile::from_toml_str(DEFAULT_PARAMS).expect("shipped params are valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ConfigFile, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        ConfigFile::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<ConfigFile, ConfigError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let solver = match table.remove("solver") {
            Some(v) => with_prefix("solver", deserialize_with_path(to_json(&v)?))?,
            None => SolverConfig::default(),
        };
        solver.validate()?;
        let model: ModelParams = deserialize_with_path(to_json(&table)?)?;
        model.validate()?;
        Ok(ConfigFile { model, solver })
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<serde_json::Value, ConfigError> {
    serde_json::to_value(v).map_err(|e| ConfigError::Parse(e.to_string()))
}

pub(crate) fn deserialize_with_path<T: DeserializeOwned>(value: serde_json::Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::invalid(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })
}

fn with_prefix<T>(prefix: &str, r: Result<T, ConfigError>) -> Result<T, ConfigError> {
    r.map_err(|e| match e {
        ConfigError::Invalid { path, message } if path.is_empty() => ConfigError::Invalid { path: prefix.into(), message },
        ConfigError::Invalid { path, message } => ConfigError::Invalid { path: format!("{prefix}.{path}"), message },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_file_loads() {
        let cfg = ConfigFile::defaults();
        assert_eq!(cfg.solver, SolverConfig::default());
    }

    #[test]
    fn errors_carry_field_paths() {
        let broken = DEFAULT_PARAMS.replace("gamma = 0.95", "gamma = \"high\"");
        let err = ConfigFile::from_toml_str(&broken).unwrap_err();
        assert_eq!(err.path(), "gamma");
        let broken = DEFAULT_PARAMS.replace("max_depth = 10", "max_depth = 0");
        let err = ConfigFile::from_toml_str(&broken).unwrap_err();
        assert_eq!(err.path(), "solver.max_depth");
    }

    #[test]
    fn solver_section_is_optional() {
        let start = DEFAULT_PARAMS.find("[solver]").unwrap();
        let cfg = ConfigFile::from_toml_str(&DEFAULT_PARAMS[..start]).unwrap();
        assert_eq!(cfg.solver, SolverConfig::default());
    }
}
