//! Database drivers and the workload executor.
//!
//! A driver knows how to open connections; a connection runs one statement at
//! a time and returns its rows. The executor replays compiled batches on a
//! pool of connections and records one measurement per query.

mod config;
mod driver;
mod load;
mod postgres_driver;
mod run;
mod sqlite;

#[cfg(feature = "duckdb")]
mod duckdb_driver;

pub use config::{ConfigError, DriverConfig, DriverKind};
pub use driver::{open_driver, Connection, ConnectionRunner, Driver, DriverError, TimedResult};
pub use load::{load_dataset, sample_domains, LoadError};
pub use run::{run_workload, ExecError, RunOptions, DEFAULT_TICK_MS};
pub use sqlite::SqliteDriver;
pub use postgres_driver::PostgresDriver;

#[cfg(feature = "duckdb")]
pub use duckdb_driver::DuckdbDriver;
