use std::time::Instant;

use vizbench_core::value::{QueryRunner, ResultSet};

use crate::config::{DriverConfig, DriverKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DriverError {
    #[error("cannot connect: {0}")]
    Connection(String),
    #[error("query exceeded {0} ms")]
    Timeout(u64),
    #[error("{0}")]
    Query(String),
    #[error("driver `{0}` is not available in this build")]
    Unavailable(&'static str),
}

/// Rows of a SELECT plus the moment the first row (or the empty result)
/// arrived.
#[derive(Debug, Clone)]
pub struct TimedResult {
    pub result: ResultSet,
    pub first_result: Instant,
}

/// One open session. Statements run one at a time.
pub trait Connection: Send {
    /// Run a SELECT and return its rows.
    fn execute_timed(&mut self, sql: &str) -> Result<TimedResult, DriverError>;

    fn execute(&mut self, sql: &str) -> Result<ResultSet, DriverError> {
        self.execute_timed(sql).map(|t| t.result)
    }

    /// Run statements that return no rows (DDL, inserts).
    fn execute_batch(&mut self, sql: &str) -> Result<(), DriverError>;

    fn close(self: Box<Self>) -> Result<(), DriverError>;
}

/// Opens connections to one database.
pub trait Driver: Send + Sync {
    fn name(&self) -> &'static str;

    fn connect(&self) -> Result<Box<dyn Connection>, DriverError>;
}

/// Build the driver named by `cfg`.
pub fn open_driver(cfg: &DriverConfig) -> Result<Box<dyn Driver>, DriverError> {
    match cfg.driver {
        DriverKind::Sqlite => Ok(Box::new(crate::sqlite::SqliteDriver::new(&cfg.db, cfg.timeout_ms))),
        DriverKind::Postgres => Ok(Box::new(crate::postgres_driver::PostgresDriver::new(&cfg.db, cfg.timeout_ms))),
        #[cfg(feature = "duckdb")]
        DriverKind::Duckdb => Ok(Box::new(crate::duckdb_driver::DuckdbDriver::open(&cfg.db, cfg.timeout_ms)?)),
        #[cfg(not(feature = "duckdb"))]
        DriverKind::Duckdb => Err(DriverError::Unavailable("duckdb")),
    }
}

/// Adapter so a connection can back the equivalence checker's second stage.
pub struct ConnectionRunner<'a>(pub &'a mut dyn Connection);

impl QueryRunner for ConnectionRunner<'_> {
    fn fetch(&mut self, sql: &str) -> Result<ResultSet, String> {
        self.0.execute(sql).map_err(|e| e.to_string())
    }
}
