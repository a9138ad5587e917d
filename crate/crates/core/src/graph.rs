//! Interface graph: widgets and visualizations as nodes, relationships as
//! edges. Applying an interaction mutates node state and reports the nodes
//! that need fresh data.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::Serialize;

use crate::spec::{
    AttributeRef, DatabaseSpec, FieldSpec, InterfaceManipulation, InterfaceSpec, LoadGroup,
    Predicate, RelationshipSpec, SpecError, TargetRef, VisualizationSpec, WidgetClass, WidgetSpec,
    WildcardSpec,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown relationship `{0}`")]
    UnknownRelationship(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("wildcard violation on `{element}`: {reason}")]
    WildcardViolation { element: String, reason: String },
    #[error("invalid manipulation: {0}")]
    InvalidManipulation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct Roles {
    pub widget: bool,
    pub visualization: bool,
}

/// Widget-side properties of a node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WidgetRole {
    pub class: WidgetClass,
    pub attributes: Vec<AttributeRef>,
    pub data_backed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub name: String,
    pub roles: Roles,
    /// Encoded fields; empty unless the node has the visualization role.
    pub fields: Vec<FieldSpec>,
    pub levels: Vec<Vec<AttributeRef>>,
    /// Current filter per incoming relationship, ordered by relationship name.
    pub filters: BTreeMap<String, Predicate>,
    pub widget: Option<WidgetRole>,
    pub wildcard: Option<WildcardSpec>,
}

impl Node {
    pub fn widget_class(&self) -> Option<WidgetClass> {
        self.widget.as_ref().map(|w| w.class)
    }

    /// Whether an interaction on this node also refreshes the node itself.
    pub fn data_backed(&self) -> bool {
        match &self.widget {
            Some(w) => w.data_backed,
            None => self.roles.visualization,
        }
    }

    pub fn table(&self) -> Option<&str> {
        self.fields
            .first()
            .map(|f| f.attribute.table.as_str())
            .or_else(|| self.widget.as_ref()?.attributes.first().map(|a| a.table.as_str()))
    }

    fn visualization_spec(&self) -> VisualizationSpec {
        VisualizationSpec {
            name: self.name.clone(),
            fields: self.fields.clone(),
            data_backed: true,
            wildcard: self.wildcard.clone(),
            levels: self.levels.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub relationship: String,
    pub source: String,
    pub target: String,
    pub shared_attributes: Vec<AttributeRef>,
}

/// Nodes needing fresh data after an interaction, in deterministic order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct DirtySet {
    pub nodes: Vec<String>,
    /// Load group of the widget that triggered the interaction.
    pub trigger: Option<LoadGroup>,
}

impl DirtySet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfaceGraph {
    nodes: IndexMap<String, Node>,
    widget_order: Vec<String>,
    relationships: Vec<RelationshipSpec>,
    edges: Vec<Edge>,
    generation: u64,
    database: DatabaseSpec,
}

impl InterfaceGraph {
    pub fn build(iface: &InterfaceSpec) -> InterfaceGraph {
        let mut nodes = IndexMap::new();
        for viz in &iface.visualizations {
            nodes.insert(
                viz.name.clone(),
                Node {
                    name: viz.name.clone(),
                    roles: Roles {
                        widget: false,
                        visualization: true,
                    },
                    fields: viz.fields.clone(),
                    levels: viz.levels.clone(),
                    filters: BTreeMap::new(),
                    widget: None,
                    wildcard: viz.wildcard.clone(),
                },
            );
        }
        for w in &iface.widgets {
            let node = nodes.entry(w.name.clone()).or_insert_with(|| Node {
                name: w.name.clone(),
                roles: Roles::default(),
                fields: Vec::new(),
                levels: Vec::new(),
                filters: BTreeMap::new(),
                widget: None,
                wildcard: None,
            });
            node.roles.widget = true;
            node.widget = Some(WidgetRole {
                class: w.widget_class,
                attributes: w.attribute.clone(),
                data_backed: w.data_backed,
            });
        }
        let mut graph = InterfaceGraph {
            nodes,
            widget_order: iface.widgets.iter().map(|w| w.name.clone()).collect(),
            relationships: iface.relationships.clone(),
            edges: Vec::new(),
            generation: 0,
            database: iface.database.clone(),
        };
        graph.rebuild_edges();
        graph
    }

    fn rebuild_edges(&mut self) {
        self.edges = self
            .relationships
            .iter()
            .flat_map(|r| {
                r.targets.iter().map(move |t| Edge {
                    relationship: r.name.clone(),
                    source: r.source.clone(),
                    target: t.name.clone(),
                    shared_attributes: r.attribute.clone(),
                })
            })
            .collect();
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.nodes.get(name)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn relationships(&self) -> &[RelationshipSpec] {
        &self.relationships
    }

    pub fn relationship(&self, name: &str) -> Option<&RelationshipSpec> {
        self.relationships.iter().find(|r| r.name == name)
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn database(&self) -> &DatabaseSpec {
        &self.database
    }

    /// Load group of the widget behind `relationship`.
    pub fn trigger_group(&self, relationship: &str) -> Option<LoadGroup> {
        let rel = self.relationship(relationship)?;
        self.nodes.get(&rel.source)?.widget_class().map(|c| c.load_group())
    }

    /// Current interface state as a specification document.
    pub fn to_spec(&self) -> InterfaceSpec {
        InterfaceSpec {
            visualizations: self
                .nodes
                .values()
                .filter(|n| n.roles.visualization)
                .map(Node::visualization_spec)
                .collect(),
            widgets: self
                .widget_order
                .iter()
                .filter_map(|name| {
                    let node = self.nodes.get(name)?;
                    let w = node.widget.as_ref()?;
                    Some(WidgetSpec {
                        name: name.clone(),
                        widget_class: w.class,
                        attribute: w.attributes.clone(),
                        data_backed: w.data_backed,
                    })
                })
                .collect(),
            relationships: self.relationships.clone(),
            database: self.database.clone(),
        }
    }

    /// Replace each target's filter for the relationship with `parameters`.
    pub fn apply_data_manipulation(
        &mut self,
        relationship: &str,
        parameters: &Predicate,
    ) -> Result<DirtySet, GraphError> {
        let rel = self
            .relationship(relationship)
            .ok_or_else(|| GraphError::UnknownRelationship(relationship.to_string()))?;
        let source = rel.source.clone();
        let targets: Vec<String> = rel.targets.iter().map(|t| t.name.clone()).collect();
        let mut dirty = Vec::with_capacity(targets.len() + 1);
        for target in targets {
            let node = self
                .nodes
                .get_mut(&target)
                .ok_or_else(|| GraphError::UnknownElement(target.clone()))?;
            node.filters.insert(relationship.to_string(), parameters.clone());
            if !dirty.contains(&target) {
                dirty.push(target);
            }
        }
        let source_node = self
            .nodes
            .get(&source)
            .ok_or_else(|| GraphError::UnknownElement(source.clone()))?;
        if source_node.data_backed() && !dirty.contains(&source) {
            dirty.push(source);
        }
        Ok(DirtySet {
            nodes: dirty,
            trigger: source_node.widget_class().map(|c| c.load_group()),
        })
    }

    /// Apply a structural change if the wildcards allow it. A rejected
    /// manipulation leaves the graph untouched.
    pub fn apply_interface_manipulation(
        &mut self,
        m: &InterfaceManipulation,
    ) -> Result<DirtySet, GraphError> {
        let mut next = self.clone();
        let dirty = next.mutate(m)?;
        next.to_spec().validate().map_err(|e: SpecError| GraphError::InvalidManipulation(e.to_string()))?;
        next.generation += 1;
        *self = next;
        Ok(DirtySet {
            nodes: dirty,
            trigger: None,
        })
    }

    fn mutate(&mut self, m: &InterfaceManipulation) -> Result<Vec<String>, GraphError> {
        match m {
            InterfaceManipulation::EncodeField { element, field } => {
                let node = self.visualization_node(element)?;
                let wildcard = require_wildcard(node)?;
                if !wildcard.allowed_fields.contains(&field.attribute) {
                    return Err(GraphError::WildcardViolation {
                        element: element.clone(),
                        reason: format!("`{}` is not an allowed field", field.attribute),
                    });
                }
                if node.fields.contains(field) {
                    return Err(GraphError::InvalidManipulation(format!(
                        "`{element}` already encodes `{}`",
                        field.attribute
                    )));
                }
                self.nodes[element.as_str()].fields.push(field.clone());
                Ok(vec![element.clone()])
            }
            InterfaceManipulation::RemoveField { element, attribute } => {
                let node = self.visualization_node(element)?;
                let wildcard = require_wildcard(node)?;
                if !wildcard.allowed_fields.contains(attribute) {
                    return Err(GraphError::WildcardViolation {
                        element: element.clone(),
                        reason: format!("`{attribute}` is not an allowed field"),
                    });
                }
                let remaining: Vec<FieldSpec> = node
                    .fields
                    .iter()
                    .filter(|f| &f.attribute != attribute)
                    .cloned()
                    .collect();
                if remaining.len() == node.fields.len() {
                    return Err(GraphError::InvalidManipulation(format!(
                        "`{element}` does not encode `{attribute}`"
                    )));
                }
                if remaining.is_empty() {
                    return Err(GraphError::InvalidManipulation(format!(
                        "cannot remove the last field of `{element}`"
                    )));
                }
                self.nodes[element.as_str()].fields = remaining;
                Ok(vec![element.clone()])
            }
            InterfaceManipulation::AddRelationship { relationship } => {
                if self.relationship(&relationship.name).is_some() {
                    return Err(GraphError::InvalidManipulation(format!(
                        "relationship `{}` already exists",
                        relationship.name
                    )));
                }
                let source = self
                    .nodes
                    .get(&relationship.source)
                    .ok_or_else(|| GraphError::UnknownElement(relationship.source.clone()))?;
                if !source.roles.widget {
                    return Err(GraphError::InvalidManipulation(format!(
                        "source `{}` has no widget role",
                        relationship.source
                    )));
                }
                self.check_relationship_targets(&relationship.targets)?;
                self.relationships.push(relationship.clone());
                self.rebuild_edges();
                Ok(dedup(relationship.targets.iter().map(|t| t.name.clone())))
            }
            InterfaceManipulation::RemoveRelationship { relationship } => {
                let idx = self
                    .relationships
                    .iter()
                    .position(|r| &r.name == relationship)
                    .ok_or_else(|| GraphError::UnknownRelationship(relationship.clone()))?;
                let targets = self.relationships[idx].targets.clone();
                self.check_relationship_targets(&targets)?;
                self.relationships.remove(idx);
                for t in &targets {
                    if let Some(node) = self.nodes.get_mut(&t.name) {
                        node.filters.remove(relationship);
                    }
                }
                self.rebuild_edges();
                Ok(dedup(targets.into_iter().map(|t| t.name)))
            }
        }
    }

    fn visualization_node(&self, element: &str) -> Result<&Node, GraphError> {
        let node = self
            .nodes
            .get(element)
            .ok_or_else(|| GraphError::UnknownElement(element.to_string()))?;
        if !node.roles.visualization {
            return Err(GraphError::WildcardViolation {
                element: element.to_string(),
                reason: "only visualizations carry wildcards".into(),
            });
        }
        Ok(node)
    }

    fn check_relationship_targets(&self, targets: &[TargetRef]) -> Result<(), GraphError> {
        for t in targets {
            let node = self.visualization_node(&t.name)?;
            let wildcard = require_wildcard(node)?;
            if !wildcard.allow_new_relationships {
                return Err(GraphError::WildcardViolation {
                    element: t.name.clone(),
                    reason: "relationships may not change".into(),
                });
            }
        }
        Ok(())
    }
}

fn require_wildcard(node: &Node) -> Result<&WildcardSpec, GraphError> {
    node.wildcard.as_ref().ok_or_else(|| GraphError::WildcardViolation {
        element: node.name.clone(),
        reason: "element has no wildcard".into(),
    })
}

fn dedup(names: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in names {
        if !out.contains(&n) {
            out.push(n);
        }
    }
    out
}

/// Directory receiving `spec-<generation>.json` after each interface manipulation.
#[derive(Debug, Clone)]
pub struct SpecLog {
    dir: PathBuf,
}

impl SpecLog {
    pub fn new(dir: impl Into<PathBuf>) -> io::Result<SpecLog> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(SpecLog { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, generation: u64) -> PathBuf {
        self.dir.join(format!("spec-{generation}.json"))
    }

    pub fn record(&self, graph: &InterfaceGraph) -> io::Result<PathBuf> {
        let path = self.path_for(graph.generation());
        let mut text = graph.to_spec().to_json();
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{parse_database_spec, parse_interface_spec, FieldTest, Literal};

    fn covid() -> InterfaceSpec {
        let db = parse_database_spec(
            r#"{"tables":{"covid":{"date":"categorical","county":"categorical","metric":"categorical","value":"numerical"}}}"#,
        )
        .unwrap();
        parse_interface_spec(
            r#"{
          "visualizations": [
            {"name":"text_box","fields":[{"attribute":"covid.value","aggregation":"SUM"}]},
            {"name":"line_graph","fields":[{"attribute":"covid.date"},{"attribute":"covid.value","aggregation":"SUM"}],
             "wildcard":{"allowed_fields":["covid.county"],"allow_new_relationships":false}},
            {"name":"heat_map","fields":[{"attribute":"covid.county"},{"attribute":"covid.value","aggregation":"SUM"}],
             "wildcard":{"allow_new_relationships":true}}
          ],
          "widgets": [
            {"name":"metric_radio","widget_class":"radio_button","attribute":["covid.metric"]},
            {"name":"date_slider","widget_class":"slider","attribute":["covid.date"]}
          ],
          "relationships": [
            {"name":"metric_select","source":"metric_radio","attribute":["covid.metric"],
             "targets":[{"type":"visualization","name":"line_graph"},{"type":"visualization","name":"heat_map"}]}
          ]
        }"#,
            &db,
        )
        .unwrap()
    }

    fn metric(v: &str) -> Predicate {
        Predicate::field("metric", FieldTest::Equal(Literal::from(v)))
    }

    #[test]
    fn builds_covid_graph() {
        let g = InterfaceGraph::build(&covid());
        assert_eq!(g.nodes().count(), 5);
        assert_eq!(g.edges().len(), 2);
        assert!(g.edges().iter().all(|e| e.target != "text_box" && e.source != "text_box"));
        assert_eq!(g.generation(), 0);
        assert_eq!(g.to_spec(), covid());
    }

    #[test]
    fn radio_dirties_both_targets_and_replaces_filter() {
        let mut g = InterfaceGraph::build(&covid());
        let d = g.apply_data_manipulation("metric_select", &metric("Positive Cases")).unwrap();
        assert_eq!(d.nodes, vec!["line_graph", "heat_map"]);
        assert_eq!(d.trigger, Some(LoadGroup::SingleLow));
        let d2 = g.apply_data_manipulation("metric_select", &metric("Deaths")).unwrap();
        assert_eq!(d, d2);
        for target in ["line_graph", "heat_map"] {
            let filters = &g.node(target).unwrap().filters;
            assert_eq!(filters.len(), 1);
            assert_eq!(filters["metric_select"], metric("Deaths"));
        }
        assert!(g.node("text_box").unwrap().filters.is_empty());
    }

    #[test]
    fn unknown_relationship() {
        let mut g = InterfaceGraph::build(&covid());
        assert_eq!(
            g.apply_data_manipulation("nope", &metric("x")),
            Err(GraphError::UnknownRelationship("nope".into()))
        );
    }

    #[test]
    fn encode_field_increments_generation() {
        let mut g = InterfaceGraph::build(&covid());
        let m = InterfaceManipulation::EncodeField {
            element: "line_graph".into(),
            field: FieldSpec::plain(AttributeRef::new("covid", "county")),
        };
        let d = g.apply_interface_manipulation(&m).unwrap();
        assert_eq!(d.nodes, vec!["line_graph"]);
        assert_eq!(g.generation(), 1);
        assert_eq!(g.node("line_graph").unwrap().fields.len(), 3);
    }

    #[test]
    fn denied_manipulation_is_noop() {
        let mut g = InterfaceGraph::build(&covid());
        g.apply_data_manipulation("metric_select", &metric("Deaths")).unwrap();
        let before = g.clone();
        let m = InterfaceManipulation::RemoveRelationship {
            relationship: "metric_select".into(),
        };
        let err = g.apply_interface_manipulation(&m).unwrap_err();
        assert!(matches!(err, GraphError::WildcardViolation { ref element, .. } if element == "line_graph"));
        assert_eq!(g, before);

        let m = InterfaceManipulation::EncodeField {
            element: "text_box".into(),
            field: FieldSpec::plain(AttributeRef::new("covid", "county")),
        };
        assert!(matches!(
            g.apply_interface_manipulation(&m),
            Err(GraphError::WildcardViolation { .. })
        ));
        assert_eq!(g, before);
    }

    #[test]
    fn add_relationship_routes_later_events() {
        let mut g = InterfaceGraph::build(&covid());
        let rel = RelationshipSpec {
            name: "date_filter".into(),
            source: "date_slider".into(),
            attribute: vec![AttributeRef::new("covid", "date")],
            targets: vec![TargetRef::visualization("heat_map")],
        };
        let d = g
            .apply_interface_manipulation(&InterfaceManipulation::AddRelationship { relationship: rel })
            .unwrap();
        assert_eq!(d.nodes, vec!["heat_map"]);
        assert!(g.edges().iter().any(|e| e.source == "date_slider" && e.target == "heat_map"));
        let p = Predicate::field(
            "date",
            FieldTest::OneOf(vec![Literal::from("2020-05-01")]),
        );
        let d = g.apply_data_manipulation("date_filter", &p).unwrap();
        assert!(d.nodes.contains(&"heat_map".to_string()));
        assert_eq!(d.trigger, Some(LoadGroup::SingleHigh));
    }

    #[test]
    fn removing_relationship_drops_filters() {
        let mut g = InterfaceGraph::build(&covid());
        let rel = RelationshipSpec {
            name: "date_filter".into(),
            source: "date_slider".into(),
            attribute: vec![AttributeRef::new("covid", "date")],
            targets: vec![TargetRef::visualization("heat_map")],
        };
        g.apply_interface_manipulation(&InterfaceManipulation::AddRelationship { relationship: rel })
            .unwrap();
        g.apply_data_manipulation("date_filter", &Predicate::field("date", FieldTest::Valid))
            .unwrap();
        assert!(g.node("heat_map").unwrap().filters.contains_key("date_filter"));
        g.apply_interface_manipulation(&InterfaceManipulation::RemoveRelationship {
            relationship: "date_filter".into(),
        })
        .unwrap();
        assert!(!g.node("heat_map").unwrap().filters.contains_key("date_filter"));
        assert_eq!(g.generation(), 2);
    }

    #[test]
    fn data_backed_source_is_dirty_last() {
        let mut spec = covid();
        spec.widgets[0].data_backed = true;
        let mut g = InterfaceGraph::build(&spec);
        let d = g.apply_data_manipulation("metric_select", &metric("Deaths")).unwrap();
        assert_eq!(d.nodes, vec!["line_graph", "heat_map", "metric_radio"]);
    }

    #[test]
    fn relationship_without_targets() {
        let mut spec = covid();
        spec.relationships[0].targets.clear();
        let mut g = InterfaceGraph::build(&spec);
        assert!(g.edges().is_empty());
        let d = g.apply_data_manipulation("metric_select", &metric("Deaths")).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn spec_log_writes_reparseable_document() {
        let dir = tempfile::tempdir().unwrap();
        let log = SpecLog::new(dir.path()).unwrap();
        let mut g = InterfaceGraph::build(&covid());
        g.apply_interface_manipulation(&InterfaceManipulation::EncodeField {
            element: "line_graph".into(),
            field: FieldSpec::plain(AttributeRef::new("covid", "county")),
        })
        .unwrap();
        let path = log.record(&g).unwrap();
        assert!(path.ends_with("spec-1.json"));
        let text = fs::read_to_string(path).unwrap();
        let reparsed = parse_interface_spec(&text, g.database()).unwrap();
        assert_eq!(reparsed, g.to_spec());
    }
}
