use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("driver config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriverKind {
    Sqlite,
    Duckdb,
    Postgres,
}

impl DriverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DriverKind::Sqlite => "sqlite",
            DriverKind::Duckdb => "duckdb",
            DriverKind::Postgres => "postgres",
        }
    }
}

impl fmt::Display for DriverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DriverKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sqlite" => Ok(DriverKind::Sqlite),
            "duckdb" => Ok(DriverKind::Duckdb),
            "postgres" | "postgresql" => Ok(DriverKind::Postgres),
            other => Err(ConfigError::Invalid(format!("unknown driver `{other}`"))),
        }
    }
}

fn default_pool() -> usize {
    4
}

/// Where and how to connect.
///
/// `db` is a file path (or `file:` URI) for SQLite and DuckDB, and a
/// libpq-style connection string for PostgreSQL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverConfig {
    pub driver: DriverKind,
    pub db: String,
    #[serde(default = "default_pool")]
    pub pool_size: usize,
    /// Per-query timeout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_ms: Option<u64>,
}

pub const ENV_DRIVER: &str = "VIZBENCH_DRIVER";
pub const ENV_DB: &str = "VIZBENCH_DB";
pub const ENV_POOL_SIZE: &str = "VIZBENCH_POOL_SIZE";
pub const ENV_TIMEOUT_MS: &str = "VIZBENCH_TIMEOUT_MS";

impl DriverConfig {
    pub fn new(driver: DriverKind, db: impl Into<String>) -> Self {
        DriverConfig {
            driver,
            db: db.into(),
            pool_size: default_pool(),
            timeout_ms: None,
        }
    }

    pub fn from_json(text: &str) -> Result<DriverConfig, ConfigError> {
        let cfg: DriverConfig = serde_json::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply `VIZBENCH_*` overrides from `lookup` (normally the process
    /// environment).
    pub fn with_env(mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<DriverConfig, ConfigError> {
        if let Some(d) = lookup(ENV_DRIVER) {
            self.driver = d.parse()?;
        }
        if let Some(db) = lookup(ENV_DB) {
            self.db = db;
        }
        if let Some(p) = lookup(ENV_POOL_SIZE) {
            self.pool_size = p
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("{ENV_POOL_SIZE}={p} is not a count")))?;
        }
        if let Some(t) = lookup(ENV_TIMEOUT_MS) {
            self.timeout_ms = Some(
                t.parse()
                    .map_err(|_| ConfigError::Invalid(format!("{ENV_TIMEOUT_MS}={t} is not a number")))?,
            );
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.pool_size == 0 {
            return Err(ConfigError::Invalid("pool_size must be at least 1".into()));
        }
        if self.db.is_empty() {
            return Err(ConfigError::Invalid("db must not be empty".into()));
        }
        if self.timeout_ms == Some(0) {
            return Err(ConfigError::Invalid("timeout_ms must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides_file() {
        let cfg = DriverConfig::from_json(r#"{"driver":"sqlite","db":"a.db"}"#).unwrap();
        assert_eq!(cfg.pool_size, 4);
        let env = |k: &str| match k {
            ENV_DRIVER => Some("duckdb".to_string()),
            ENV_POOL_SIZE => Some("2".to_string()),
            _ => None,
        };
        let cfg = cfg.with_env(env).unwrap();
        assert_eq!(cfg.driver, DriverKind::Duckdb);
        assert_eq!((cfg.db.as_str(), cfg.pool_size), ("a.db", 2));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(DriverConfig::from_json(r#"{"driver":"oracle","db":"x"}"#).is_err());
        assert!(DriverConfig::from_json(r#"{"driver":"sqlite","db":"x","pool_size":0}"#).is_err());
        let cfg = DriverConfig::new(DriverKind::Sqlite, "x");
        assert!(cfg.with_env(|k| (k == ENV_POOL_SIZE).then(|| "many".to_string())).is_err());
    }
}
