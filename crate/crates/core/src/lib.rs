//! Core model and pipeline for benchmarking the database load of interactive
//! visualization dashboards.
//!
//! Interfaces, databases and interaction logs are parsed and validated in
//! [`spec`]; [`graph`] materializes the interface and tracks which views an
//! interaction invalidates; [`compiler`] turns those views into SQL batches.
//! [`simulate`] synthesizes interaction logs, [`tableau`] converts Tableau
//! logs, and [`report`] aggregates execution measurements.

pub mod compiler;
pub mod graph;
pub mod report;
pub mod simulate;
pub mod spec;
pub mod tableau;
pub mod value;

pub use compiler::{CompileError, CompileOptions};
pub use graph::{DirtySet, GraphError, InterfaceGraph};
