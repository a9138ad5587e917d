//! Turns dirty graph nodes into SQL, groups the statements of one interaction
//! into a timestamped batch, and checks statements for equivalence.

mod equiv;
mod sql;
mod workload;

pub use equiv::{normalize_sql, sql_equivalent, Equivalence, EquivError, SelectStmt};
pub use sql::{compile_node, compile_node_at_level, sql_literal, translate_predicate};
pub use workload::{
    compile_interaction, generate_workload, parse_workload_jsonl, CompiledQuery, GenerateOutcome, GeneratorMode,
    Provenance, QueryBatch, SpecDigest, Workload, WorkloadError, WorkloadGenerator,
};

use crate::graph::GraphError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("node `{0}` has no fields to select")]
    EmptyFieldList(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Compiler knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    /// Aggregation levels fetched per dirty node for many-query widgets
    /// (level 0 is the node's own aggregation).
    pub detail_levels: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { detail_levels: 2 }
    }
}
