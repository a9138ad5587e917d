use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::graph::{DirtySet, InterfaceGraph, SpecLog};
use crate::spec::{Action, InteractionEvent, LoadGroup};

use super::sql::compile_node_at_level;
use super::{CompileError, CompileOptions};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompiledQuery {
    pub node: String,
    pub sql: String,
    /// Triggering relationship, or the manipulation kind.
    pub relationship: String,
    pub load_group: LoadGroup,
    pub detail_level: usize,
}

/// Queries triggered by one interaction. They share its timestamp and are
/// meant to be issued together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryBatch {
    pub timestamp: i64,
    pub queries: Vec<CompiledQuery>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorMode {
    Replay,
    Simulate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecDigest {
    pub name: String,
    pub sha256: String,
}

impl SpecDigest {
    pub fn of(name: impl Into<String>, bytes: &[u8]) -> SpecDigest {
        SpecDigest {
            name: name.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub specs: Vec<SpecDigest>,
    pub mode: GeneratorMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance {
            specs: Vec::new(),
            mode: GeneratorMode::Replay,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Workload {
    pub batches: Vec<QueryBatch>,
    pub provenance: Provenance,
}

impl Workload {
    pub fn query_count(&self) -> usize {
        self.batches.iter().map(|b| b.queries.len()).sum()
    }

    /// One batch per LF-terminated line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for batch in &self.batches {
            out.push_str(&serde_json::to_string(batch).expect("batch serializes"));
            out.push('\n');
        }
        out
    }

    pub fn provenance_json(&self) -> String {
        serde_json::to_string_pretty(&self.provenance).expect("provenance serializes")
    }
}

/// Read a workload file written by [`Workload::to_jsonl`].
pub fn parse_workload_jsonl(text: &str) -> Result<Vec<QueryBatch>, String> {
    let mut batches = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let batch: QueryBatch =
            serde_json::from_str(line).map_err(|e| format!("line {}: {e}", idx + 1))?;
        batches.push(batch);
    }
    Ok(batches)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorkloadError {
    #[error("event {index} ({label}): {source}")]
    Event {
        index: usize,
        label: String,
        source: CompileError,
    },
    #[error("event {index}: timestamp {timestamp} precedes the previous event")]
    Unsorted { index: usize, timestamp: i64 },
    #[error("writing spec log: {0}")]
    SpecLog(String),
}

impl WorkloadError {
    pub fn index(&self) -> Option<usize> {
        match self {
            WorkloadError::Event { index, .. } | WorkloadError::Unsorted { index, .. } => Some(*index),
            WorkloadError::SpecLog(_) => None,
        }
    }
}

/// Compile the dirty nodes of one interaction into a batch.
pub fn compile_interaction(
    graph: &InterfaceGraph,
    event: &InteractionEvent,
    dirty: &DirtySet,
    options: &CompileOptions,
) -> Result<QueryBatch, CompileError> {
    let (label, group) = match &event.action {
        Action::Data { relationship, .. } => (
            relationship.clone(),
            dirty
                .trigger
                .or_else(|| graph.trigger_group(relationship))
                .unwrap_or(LoadGroup::SingleLow),
        ),
        Action::Interface(m) => (m.kind().to_string(), LoadGroup::SingleLow),
    };
    let levels = group.queries_per_node(options.detail_levels.max(1));
    let mut queries = Vec::with_capacity(dirty.len() * levels);
    for name in &dirty.nodes {
        let node = graph
            .node(name)
            .ok_or_else(|| CompileError::UnknownNode(name.clone()))?;
        for level in 0..levels {
            let sql = compile_node_at_level(node, level).map_err(|e| match e {
                CompileError::EmptyFieldList(_) => CompileError::EmptyFieldList(name.clone()),
                other => other,
            })?;
            queries.push(CompiledQuery {
                node: name.clone(),
                sql,
                relationship: label.clone(),
                load_group: group,
                detail_level: level,
            });
        }
    }
    Ok(QueryBatch {
        timestamp: event.timestamp,
        queries,
    })
}

/// Drives events through a graph and collects the resulting batches.
#[derive(Debug, Clone, Default)]
pub struct WorkloadGenerator {
    pub options: CompileOptions,
    /// Skip failing events (recording the error) instead of stopping.
    pub lenient: bool,
    pub spec_log: Option<SpecLog>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerateOutcome {
    pub workload: Workload,
    /// Errors of skipped events (lenient mode only).
    pub errors: Vec<WorkloadError>,
}

impl WorkloadGenerator {
    pub fn new(options: CompileOptions) -> Self {
        WorkloadGenerator {
            options,
            ..Default::default()
        }
    }

    pub fn run(
        &self,
        graph: &mut InterfaceGraph,
        events: &[InteractionEvent],
    ) -> Result<GenerateOutcome, WorkloadError> {
        let mut workload = Workload {
            batches: Vec::with_capacity(events.len()),
            provenance: self.provenance.clone(),
        };
        let mut errors = Vec::new();
        let mut last = i64::MIN;
        for (index, event) in events.iter().enumerate() {
            if event.timestamp < last {
                return Err(WorkloadError::Unsorted {
                    index,
                    timestamp: event.timestamp,
                });
            }
            last = event.timestamp;
            match self.step(graph, event) {
                Ok(batch) => workload.batches.push(batch),
                Err(source) => {
                    let err = WorkloadError::Event {
                        index,
                        label: event.label().to_string(),
                        source,
                    };
                    if self.lenient {
                        errors.push(err);
                    } else {
                        return Err(err);
                    }
                }
            }
            if let (Action::Interface(_), Some(log)) = (&event.action, &self.spec_log) {
                if errors.last().and_then(WorkloadError::index) != Some(index) {
                    log.record(graph).map_err(|e| WorkloadError::SpecLog(e.to_string()))?;
                }
            }
        }
        Ok(GenerateOutcome { workload, errors })
    }

    fn step(&self, graph: &mut InterfaceGraph, event: &InteractionEvent) -> Result<QueryBatch, CompileError> {
        let dirty = match &event.action {
            Action::Data {
                relationship,
                parameters,
            } => graph.apply_data_manipulation(relationship, parameters)?,
            Action::Interface(m) => graph.apply_interface_manipulation(m)?,
        };
        compile_interaction(graph, event, &dirty, &self.options)
    }
}

/// Strict workload generation with default options.
pub fn generate_workload(
    graph: &mut InterfaceGraph,
    events: &[InteractionEvent],
) -> Result<Workload, WorkloadError> {
    WorkloadGenerator::default().run(graph, events).map(|o| o.workload)
}
