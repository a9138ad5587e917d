//! Seeded generators for tables, interfaces and interaction events.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde_json::Number;

use vizbench_core::spec::{
    Aggregation, AttributeKind, AttributeRef, DatabaseSpec, FieldSpec, FieldTest, InteractionEvent,
    InterfaceSpec, Literal, Predicate, RelationshipSpec, TableSpec, TargetRef, VisualizationSpec,
    WidgetClass, WidgetSpec,
};
use vizbench_core::value::SqlValue;

use crate::oracle::Table;

pub const TABLE: &str = "t";
pub const CATEGORIES: [&str; 4] = ["a", "b", "c", "d"];

/// Quarter steps in [-20, 20]. Sums of these are exact in f64 regardless of
/// order, so engines and the oracle agree bit for bit.
fn quarter(rng: &mut impl Rng) -> f64 {
    rng.random_range(-80i32..=80) as f64 / 4.0
}

fn number(v: f64) -> Literal {
    if v.fract() == 0.0 {
        Literal::Number(Number::from(v as i64))
    } else {
        Literal::Number(Number::from_f64(v).unwrap())
    }
}

/// Table `t` with categorical `c0, c1` and numerical `n0, n1, n2`; about one
/// cell in ten is NULL.
pub fn random_table(rng: &mut impl Rng, n_rows: usize) -> (DatabaseSpec, Table) {
    let mut spec = TableSpec::default();
    for c in ["c0", "c1"] {
        spec.attributes.insert(c.into(), AttributeKind::Categorical);
    }
    for n in ["n0", "n1", "n2"] {
        spec.attributes.insert(n.into(), AttributeKind::Numerical);
    }
    let mut db = DatabaseSpec::default();
    db.tables.insert(TABLE.into(), spec);
    let mut table = Table::empty(&db, TABLE);
    for _ in 0..n_rows {
        let row = table
            .columns
            .iter()
            .map(|(_, kind)| {
                if rng.random_bool(0.1) {
                    SqlValue::Null
                } else if *kind == AttributeKind::Categorical {
                    SqlValue::Text(CATEGORIES.choose(rng).unwrap().to_string())
                } else {
                    SqlValue::Real(quarter(rng))
                }
            })
            .collect();
        table.rows.push(row);
    }
    (db, table)
}

fn attrs_of(db: &DatabaseSpec) -> Vec<(AttributeRef, AttributeKind)> {
    db.tables[TABLE]
        .attributes
        .iter()
        .map(|(a, k)| (AttributeRef::new(TABLE, a.clone()), *k))
        .collect()
}

/// Random field list following the interface rules: each attribute at most
/// once, aggregations on numerical attributes only.
pub fn random_fields(rng: &mut impl Rng, db: &DatabaseSpec) -> Vec<FieldSpec> {
    let mut attrs = attrs_of(db);
    attrs.shuffle(rng);
    let take = rng.random_range(1..=attrs.len());
    let aggregate = rng.random_bool(0.6);
    attrs
        .into_iter()
        .take(take)
        .map(|(a, kind)| {
            if aggregate && kind == AttributeKind::Numerical && rng.random_bool(0.75) {
                FieldSpec::aggregated(a, *Aggregation::ALL.choose(rng).unwrap())
            } else {
                FieldSpec::plain(a)
            }
        })
        .collect()
}

/// A test for one attribute. Numerical attributes draw from all eight
/// operators; categorical ones from those defined on text.
pub fn random_test(rng: &mut impl Rng, kind: AttributeKind) -> FieldTest {
    match kind {
        AttributeKind::Categorical => {
            let cat = |rng: &mut _| Literal::Text(CATEGORIES.choose(rng).unwrap().to_string());
            match rng.random_range(0..3) {
                0 => FieldTest::Equal(cat(rng)),
                1 => {
                    let n = rng.random_range(1..=3);
                    FieldTest::OneOf((0..n).map(|_| cat(rng)).collect())
                }
                _ => FieldTest::Valid,
            }
        }
        AttributeKind::Numerical => match rng.random_range(0..8) {
            0 => FieldTest::Equal(number(quarter(rng))),
            1 => FieldTest::Lt(number(quarter(rng))),
            2 => FieldTest::Lte(number(quarter(rng))),
            3 => FieldTest::Gt(number(quarter(rng))),
            4 => FieldTest::Gte(number(quarter(rng))),
            5 => {
                let (a, b) = (quarter(rng), quarter(rng));
                FieldTest::Range(number(a.min(b)), number(a.max(b)))
            }
            6 => {
                let n = rng.random_range(1..=3);
                FieldTest::OneOf((0..n).map(|_| number(quarter(rng))).collect())
            }
            _ => FieldTest::Valid,
        },
    }
}

/// Parameters covering exactly `attrs`, composed with and/or/not.
pub fn random_predicate(rng: &mut impl Rng, attrs: &[(String, AttributeKind)]) -> Predicate {
    let mut parts: Vec<Predicate> = attrs
        .iter()
        .map(|(name, kind)| {
            let p = Predicate::field(name.clone(), random_test(rng, *kind));
            if rng.random_bool(0.2) {
                Predicate::Not(Box::new(p))
            } else {
                p
            }
        })
        .collect();
    if parts.len() == 1 {
        return parts.pop().unwrap();
    }
    if rng.random_bool(0.5) {
        Predicate::And(parts)
    } else {
        Predicate::Or(parts)
    }
}

/// One visualization `v` over table `t`, filtered by 1 to 3 widgets that
/// each own a relationship `r<i>` on 1 or 2 attributes.
pub fn random_view_interface(rng: &mut impl Rng, db: &DatabaseSpec) -> InterfaceSpec {
    let all = attrs_of(db);
    let n_widgets = rng.random_range(1..=3);
    let mut widgets = Vec::new();
    let mut relationships = Vec::new();
    for i in 0..n_widgets {
        let k = rng.random_range(1..=2);
        let attrs: Vec<AttributeRef> = all.choose_multiple(rng, k).map(|(a, _)| a.clone()).collect();
        widgets.push(WidgetSpec {
            name: format!("w{i}"),
            widget_class: *WidgetClass::ALL.choose(rng).unwrap(),
            attribute: attrs.clone(),
            data_backed: false,
        });
        relationships.push(RelationshipSpec {
            name: format!("r{i}"),
            source: format!("w{i}"),
            attribute: attrs,
            targets: vec![TargetRef::visualization("v")],
        });
    }
    let iface = InterfaceSpec {
        visualizations: vec![VisualizationSpec {
            name: "v".into(),
            fields: random_fields(rng, db),
            data_backed: true,
            wildcard: None,
            levels: Vec::new(),
        }],
        widgets,
        relationships,
        database: db.clone(),
    };
    iface.validate().expect("generated interface is valid");
    iface
}

/// Multi-view interface with widgets of every class, occasional dual-role
/// elements and data-backed widgets, and relationships with 0 to 3 targets.
pub fn random_interface(rng: &mut impl Rng, db: &DatabaseSpec) -> InterfaceSpec {
    let all = attrs_of(db);
    let categorical: Vec<AttributeRef> = all
        .iter()
        .filter(|(_, k)| *k == AttributeKind::Categorical)
        .map(|(a, _)| a.clone())
        .collect();
    let n_viz = rng.random_range(1..=6);
    let visualizations: Vec<VisualizationSpec> = (0..n_viz)
        .map(|i| VisualizationSpec {
            name: format!("v{i}"),
            fields: random_fields(rng, db),
            data_backed: true,
            wildcard: None,
            levels: (0..rng.random_range(0..=2))
                .map(|_| categorical.choose_multiple(rng, 1).cloned().collect())
                .collect(),
        })
        .collect();
    let n_widgets = rng.random_range(1..=5);
    let mut widgets = Vec::new();
    let mut relationships = Vec::new();
    for i in 0..n_widgets {
        // Some widgets are also visualizations, as with a brushable chart.
        let name = if rng.random_bool(0.25) {
            let v = &visualizations[rng.random_range(0..n_viz)].name;
            if widgets.iter().any(|w: &WidgetSpec| &w.name == v) {
                format!("w{i}")
            } else {
                v.clone()
            }
        } else {
            format!("w{i}")
        };
        let k = rng.random_range(1..=2);
        let attrs: Vec<AttributeRef> = all.choose_multiple(rng, k).map(|(a, _)| a.clone()).collect();
        widgets.push(WidgetSpec {
            name: name.clone(),
            widget_class: *WidgetClass::ALL.choose(rng).unwrap(),
            attribute: attrs.clone(),
            data_backed: rng.random_bool(0.3),
        });
        for j in 0..rng.random_range(1..=2) {
            let n_targets = rng.random_range(0..=n_viz.min(3));
            let targets = visualizations
                .choose_multiple(rng, n_targets)
                .map(|v| TargetRef::visualization(v.name.clone()))
                .collect();
            let take = rng.random_range(1..=attrs.len());
            relationships.push(RelationshipSpec {
                name: format!("r{i}_{j}"),
                source: name.clone(),
                attribute: attrs[..take].to_vec(),
                targets,
            });
        }
    }
    let iface = InterfaceSpec {
        visualizations,
        widgets,
        relationships,
        database: db.clone(),
    };
    iface.validate().expect("generated interface is valid");
    iface
}

/// A valid data event on relationship `rel`.
pub fn random_event(rng: &mut impl Rng, iface: &InterfaceSpec, rel: &RelationshipSpec, timestamp: i64) -> InteractionEvent {
    let attrs: Vec<(String, AttributeKind)> = rel
        .attribute
        .iter()
        .map(|a| (a.attribute.clone(), a.kind(&iface.database).unwrap()))
        .collect();
    InteractionEvent::data(rel.name.clone(), timestamp, random_predicate(rng, &attrs))
}

/// `n` valid data events on uniformly chosen relationships, 100 ms apart.
pub fn random_events(rng: &mut impl Rng, iface: &InterfaceSpec, n: usize) -> Vec<InteractionEvent> {
    (0..n)
        .map(|i| {
            let rel = iface.relationships.choose(rng).expect("interface has relationships");
            random_event(rng, iface, rel, 1_000 + 100 * i as i64)
        })
        .collect()
}
