//! Scenario builders shared by the integration tests and the acceptance
//! run.

use rand::seq::{IndexedMutRandom, SliceRandom};
use rand::Rng;

use vizbench_core::graph::Node;
use vizbench_core::spec::{
    Action, Aggregation, AttributeRef, FieldPredicate, FieldSpec, FieldTest, InterfaceManipulation, InterfaceSpec,
    Predicate, RelationshipSpec, TargetRef, VisualizationSpec, WidgetClass, WidgetSpec, WildcardSpec,
};
use vizbench_core::InterfaceGraph;

use crate::fixtures::covid_interface;
use crate::oracle::{node_result, Table};
use crate::random::{random_events, random_table, random_test, random_view_interface};
use crate::rng;

/// Shuffle AND/OR operands and IN lists, recursively.
pub fn shuffle_commutative(p: &mut Predicate, r: &mut impl Rng) {
    match p {
        Predicate::And(ps) | Predicate::Or(ps) => {
            ps.shuffle(r);
            ps.iter_mut().for_each(|c| shuffle_commutative(c, r));
        }
        Predicate::Not(inner) => shuffle_commutative(inner, r),
        Predicate::Field(fp) => {
            if let FieldTest::OneOf(ls) = &mut fp.test {
                ls.shuffle(r);
            }
        }
    }
}

pub fn leaves_mut(p: &mut Predicate) -> Vec<&mut FieldPredicate> {
    match p {
        Predicate::Field(fp) => vec![fp],
        Predicate::Not(inner) => leaves_mut(inner),
        Predicate::And(ps) | Predicate::Or(ps) => ps.iter_mut().flat_map(leaves_mut).collect(),
    }
}

pub fn leaves(p: &Predicate) -> Vec<&FieldPredicate> {
    match p {
        Predicate::Field(fp) => vec![fp],
        Predicate::Not(inner) => leaves(inner),
        Predicate::And(ps) | Predicate::Or(ps) => ps.iter().flat_map(leaves).collect(),
    }
}

fn apply_data(graph: &mut InterfaceGraph, events: &[vizbench_core::spec::InteractionEvent]) {
    for e in events {
        let Action::Data { relationship, parameters } = &e.action else {
            unreachable!("random events are data events")
        };
        graph.apply_data_manipulation(relationship, parameters).unwrap();
    }
}

/// Node `v` of a random single-view interface after `events` interactions,
/// with a row table of `rows` plus four smaller tables for cross-checking.
pub fn random_node_with(seed: u64, rows: usize, events: usize) -> (Node, Vec<Table>) {
    let mut r = rng(seed);
    let (db, table) = random_table(&mut r, rows);
    let iface = random_view_interface(&mut r, &db);
    let mut graph = InterfaceGraph::build(&iface);
    apply_data(&mut graph, &random_events(&mut r, &iface, events));
    let mut tables = vec![table];
    for _ in 0..4 {
        tables.push(random_table(&mut r, 60).1);
    }
    (graph.node("v").unwrap().clone(), tables)
}

pub fn random_node(seed: u64) -> (Node, Vec<Table>) {
    random_node_with(seed, 120, 3)
}

/// A variant of `node`: commutative reshuffle, one leaf test redrawn, or
/// all filters dropped.
pub fn mutate_node(node: &Node, table: &Table, r: &mut impl Rng) -> Node {
    let mut other = node.clone();
    match r.random_range(0..3) {
        0 => other.filters.values_mut().for_each(|p| shuffle_commutative(p, r)),
        1 => {
            if let Some(p) = other.filters.values_mut().next() {
                let mut leaves = leaves_mut(p);
                let leaf = leaves.choose_mut(r).unwrap();
                let kind = table.columns.iter().find(|(c, _)| *c == leaf.field).unwrap().1;
                leaf.test = random_test(r, kind);
            }
        }
        _ => other.filters.clear(),
    }
    other
}

pub fn oracle_equivalent(a: &Node, b: &Node, tables: &[Table]) -> bool {
    tables
        .iter()
        .all(|t| node_result(t, a, 0).same_multiset(&node_result(t, b, 0), 1e-9))
}

/// Queries one interaction on `rel` should produce: one per distinct dirty
/// node (targets, plus a data-backed source), times `levels` for the
/// many-query widget classes.
pub fn expected_batch_size(iface: &InterfaceSpec, rel: &RelationshipSpec, levels: usize) -> usize {
    let widget = iface.widget(&rel.source).unwrap();
    let mut dirty: Vec<&str> = Vec::new();
    for t in &rel.targets {
        if !dirty.contains(&t.name.as_str()) {
            dirty.push(&t.name);
        }
    }
    if widget.data_backed && !dirty.contains(&rel.source.as_str()) {
        dirty.push(&rel.source);
    }
    let per_node = match widget.widget_class {
        WidgetClass::Brush | WidgetClass::ZoomQualitative | WidgetClass::ZoomQuantitative => levels,
        _ => 1,
    };
    dirty.len() * per_node
}

/// 15 charts, 5 widgets (one of them a brushable chart), every widget linked
/// to 3 to 5 charts.
pub fn twenty_node_interface() -> InterfaceSpec {
    let mut r = rng(20);
    let (db, _) = random_table(&mut r, 0);
    let attr = |a: &str| AttributeRef::new("t", a);
    let visualizations: Vec<VisualizationSpec> = (0..16)
        .map(|i| VisualizationSpec {
            name: format!("chart{i}"),
            fields: vec![
                FieldSpec::plain(attr(if i % 2 == 0 { "c0" } else { "c1" })),
                FieldSpec::aggregated(attr("n0"), Aggregation::Sum),
                FieldSpec::aggregated(attr("n1"), Aggregation::Sum),
                FieldSpec::aggregated(attr("n2"), Aggregation::Sum),
            ],
            data_backed: true,
            wildcard: None,
            levels: vec![vec![attr("c0")]],
        })
        .collect();
    let classes = [WidgetClass::RadioButton, WidgetClass::Slider, WidgetClass::Checkbox, WidgetClass::Brush];
    let mut widgets: Vec<WidgetSpec> = (0..4)
        .map(|i| WidgetSpec {
            name: format!("widget{i}"),
            widget_class: classes[i],
            attribute: vec![attr(["c0", "n0", "c1", "n1"][i])],
            data_backed: false,
        })
        .collect();
    widgets.push(WidgetSpec {
        name: "chart15".into(),
        widget_class: WidgetClass::Brush,
        attribute: vec![attr("n1"), attr("n2")],
        data_backed: false,
    });
    let relationships = widgets
        .iter()
        .enumerate()
        .map(|(i, w)| RelationshipSpec {
            name: format!("link{i}"),
            source: w.name.clone(),
            attribute: w.attribute.clone(),
            targets: (0..3 + i % 3).map(|j| TargetRef::visualization(format!("chart{}", (i * 3 + j) % 15))).collect(),
        })
        .collect();
    let iface = InterfaceSpec { visualizations, widgets, relationships, database: db };
    iface.validate().unwrap();
    iface
}

fn covid_attr(a: &str) -> AttributeRef {
    AttributeRef::new("covid", a)
}

/// COVID dashboard where the heat map may gain or lose `date` and `county`
/// and accept new relationships; the line graph stays locked.
pub fn wildcard_interface() -> InterfaceSpec {
    let mut iface = covid_interface();
    let heat = iface.visualizations.iter_mut().find(|v| v.name == "heat_map").unwrap();
    heat.wildcard = Some(WildcardSpec {
        allowed_fields: vec![covid_attr("date"), covid_attr("county")],
        allow_new_relationships: true,
    });
    iface.widgets.push(WidgetSpec {
        name: "county_box".into(),
        widget_class: WidgetClass::Checkbox,
        attribute: vec![covid_attr("county")],
        data_backed: false,
    });
    iface.validate().unwrap();
    iface
}

/// Structural changes against [`wildcard_interface`], permitted and not.
pub fn wildcard_manipulations() -> Vec<InterfaceManipulation> {
    let rel = |name: &str, target: &str| RelationshipSpec {
        name: name.into(),
        source: "county_box".into(),
        attribute: vec![covid_attr("county")],
        targets: vec![TargetRef::visualization(target)],
    };
    vec![
        InterfaceManipulation::EncodeField { element: "heat_map".into(), field: FieldSpec::plain(covid_attr("date")) },
        InterfaceManipulation::EncodeField { element: "line_graph".into(), field: FieldSpec::plain(covid_attr("county")) },
        InterfaceManipulation::EncodeField {
            element: "heat_map".into(),
            field: FieldSpec::aggregated(covid_attr("metric"), Aggregation::Count),
        },
        InterfaceManipulation::RemoveField { element: "heat_map".into(), attribute: covid_attr("date") },
        InterfaceManipulation::RemoveField { element: "heat_map".into(), attribute: covid_attr("county") },
        InterfaceManipulation::RemoveField { element: "line_graph".into(), attribute: covid_attr("date") },
        InterfaceManipulation::AddRelationship { relationship: rel("county_heat", "heat_map") },
        InterfaceManipulation::AddRelationship { relationship: rel("county_line", "line_graph") },
        InterfaceManipulation::RemoveRelationship { relationship: "county_heat".into() },
        InterfaceManipulation::RemoveRelationship { relationship: "metric_select".into() },
        InterfaceManipulation::EncodeField { element: "nowhere".into(), field: FieldSpec::plain(covid_attr("date")) },
    ]
}
