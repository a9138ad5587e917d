use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::database::{AttributeKind, DatabaseSpec};
use super::error::{from_json_str, SpecError};
use super::widget::{LoadGroup, WidgetClass};

/// `table.attribute` reference into the database spec.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttributeRef {
    pub table: String,
    pub attribute: String,
}

impl AttributeRef {
    pub fn new(table: impl Into<String>, attribute: impl Into<String>) -> Self {
        AttributeRef {
            table: table.into(),
            attribute: attribute.into(),
        }
    }

    pub fn kind(&self, db: &DatabaseSpec) -> Option<AttributeKind> {
        db.kind_of(&self.table, &self.attribute)
    }

    fn resolve(&self, db: &DatabaseSpec, path: &str) -> Result<AttributeKind, SpecError> {
        if db.table(&self.table).is_none() {
            return Err(SpecError::dangling(path, format!("unknown table `{}`", self.table)));
        }
        self.kind(db).ok_or_else(|| {
            SpecError::dangling(
                path,
                format!("table `{}` has no attribute `{}`", self.table, self.attribute),
            )
        })
    }
}

impl fmt::Display for AttributeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.attribute)
    }
}

impl FromStr for AttributeRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (table, attribute) = s
            .split_once('.')
            .ok_or_else(|| format!("attribute reference `{s}` must have the form table.attribute"))?;
        for part in [table, attribute] {
            if !super::is_ident(part) {
                return Err(format!("`{part}` is not a valid identifier"));
            }
        }
        Ok(AttributeRef::new(table, attribute))
    }
}

impl Serialize for AttributeRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AttributeRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Aggregation {
    #[serde(alias = "sum")]
    Sum,
    #[serde(alias = "avg")]
    Avg,
    #[serde(alias = "min")]
    Min,
    #[serde(alias = "max")]
    Max,
    #[serde(alias = "count")]
    Count,
}

impl Aggregation {
    pub const ALL: [Aggregation; 5] = [
        Aggregation::Sum,
        Aggregation::Avg,
        Aggregation::Min,
        Aggregation::Max,
        Aggregation::Count,
    ];

    pub fn sql_name(self) -> &'static str {
        match self {
            Aggregation::Sum => "SUM",
            Aggregation::Avg => "AVG",
            Aggregation::Min => "MIN",
            Aggregation::Max => "MAX",
            Aggregation::Count => "COUNT",
        }
    }

    pub fn from_sql_name(name: &str) -> Option<Aggregation> {
        Aggregation::ALL
            .into_iter()
            .find(|a| a.sql_name().eq_ignore_ascii_case(name))
    }
}

/// One encoded field of a visualization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub attribute: AttributeRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<Aggregation>,
}

impl FieldSpec {
    pub fn plain(attribute: AttributeRef) -> Self {
        FieldSpec {
            attribute,
            aggregation: None,
        }
    }

    pub fn aggregated(attribute: AttributeRef, aggregation: Aggregation) -> Self {
        FieldSpec {
            attribute,
            aggregation: Some(aggregation),
        }
    }

    /// Output column name: the attribute itself, or `agg_attribute` when aggregated.
    pub fn output_name(&self) -> String {
        match self.aggregation {
            None => self.attribute.attribute.clone(),
            Some(agg) => format!(
                "{}_{}",
                agg.sql_name().to_ascii_lowercase(),
                self.attribute.attribute
            ),
        }
    }
}

/// How far an element may be restructured at runtime.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WildcardSpec {
    #[serde(default)]
    pub allowed_fields: Vec<AttributeRef>,
    #[serde(default)]
    pub allow_new_relationships: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisualizationSpec {
    pub name: String,
    pub fields: Vec<FieldSpec>,
    #[serde(default = "default_true")]
    pub data_backed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wildcard: Option<WildcardSpec>,
    /// Grouping attributes for coarser detail levels 1, 2, ... (used by
    /// many-query widgets such as brush and zoom).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<Vec<AttributeRef>>,
}

impl VisualizationSpec {
    pub fn table(&self) -> Option<&str> {
        self.fields.first().map(|f| f.attribute.table.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidgetSpec {
    pub name: String,
    pub widget_class: WidgetClass,
    #[serde(default)]
    pub attribute: Vec<AttributeRef>,
    /// The widget's own options are populated from the database.
    #[serde(default)]
    pub data_backed: bool,
}

impl WidgetSpec {
    pub fn load_group(&self) -> LoadGroup {
        self.widget_class.load_group()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementType {
    Visualization,
    Widget,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetRef {
    #[serde(rename = "type")]
    pub element_type: ElementType,
    pub name: String,
}

impl TargetRef {
    pub fn visualization(name: impl Into<String>) -> Self {
        TargetRef {
            element_type: ElementType::Visualization,
            name: name.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationshipSpec {
    pub name: String,
    pub source: String,
    pub attribute: Vec<AttributeRef>,
    #[serde(default)]
    pub targets: Vec<TargetRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceSpec {
    pub visualizations: Vec<VisualizationSpec>,
    #[serde(default)]
    pub widgets: Vec<WidgetSpec>,
    #[serde(default)]
    pub relationships: Vec<RelationshipSpec>,
    /// Database the interface was validated against.
    #[serde(skip)]
    pub database: DatabaseSpec,
}

impl InterfaceSpec {
    pub fn visualization(&self, name: &str) -> Option<&VisualizationSpec> {
        self.visualizations.iter().find(|v| v.name == name)
    }

    pub fn widget(&self, name: &str) -> Option<&WidgetSpec> {
        self.widgets.iter().find(|w| w.name == name)
    }

    pub fn relationship(&self, name: &str) -> Option<&RelationshipSpec> {
        self.relationships.iter().find(|r| r.name == name)
    }

    /// Element present in both lists: source and target of interactions.
    pub fn is_dual_role(&self, name: &str) -> bool {
        self.visualization(name).is_some() && self.widget(name).is_some()
    }

    pub fn dual_role_elements(&self) -> Vec<&str> {
        self.visualizations
            .iter()
            .filter(|v| self.widget(&v.name).is_some())
            .map(|v| v.name.as_str())
            .collect()
    }

    /// Pretty JSON in the interface-spec document format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("interface spec serializes")
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let db = &self.database;
        let mut viz_names = HashSet::new();
        for (i, viz) in self.visualizations.iter().enumerate() {
            let path = format!("$.visualizations[{i}]");
            super::check_ident(&viz.name, &format!("{path}.name"))?;
            if !viz_names.insert(viz.name.as_str()) {
                return Err(SpecError::schema(
                    format!("{path}.name"),
                    format!("duplicate visualization `{}`", viz.name),
                ));
            }
            validate_visualization(viz, db, &path)?;
        }

        let mut widget_names = HashSet::new();
        for (i, w) in self.widgets.iter().enumerate() {
            let path = format!("$.widgets[{i}]");
            super::check_ident(&w.name, &format!("{path}.name"))?;
            if !widget_names.insert(w.name.as_str()) {
                return Err(SpecError::schema(
                    format!("{path}.name"),
                    format!("duplicate widget `{}`", w.name),
                ));
            }
            let mut seen = HashSet::new();
            for (j, attr) in w.attribute.iter().enumerate() {
                attr.resolve(db, &format!("{path}.attribute[{j}]"))?;
                if !seen.insert(attr) {
                    return Err(SpecError::schema(
                        format!("{path}.attribute[{j}]"),
                        format!("duplicate attribute `{attr}`"),
                    ));
                }
            }
        }

        let mut rel_names = HashSet::new();
        for (i, rel) in self.relationships.iter().enumerate() {
            let path = format!("$.relationships[{i}]");
            super::check_ident(&rel.name, &format!("{path}.name"))?;
            if !rel_names.insert(rel.name.as_str()) {
                return Err(SpecError::schema(
                    format!("{path}.name"),
                    format!("duplicate relationship `{}`", rel.name),
                ));
            }
            self.validate_relationship(rel, &path)?;
        }
        Ok(())
    }

    fn validate_relationship(&self, rel: &RelationshipSpec, path: &str) -> Result<(), SpecError> {
        let db = &self.database;
        let source = self.widget(&rel.source).ok_or_else(|| {
            let msg = if self.visualization(&rel.source).is_some() {
                format!("source `{}` is a visualization without a widget role", rel.source)
            } else {
                format!("unknown source element `{}`", rel.source)
            };
            SpecError::dangling(format!("{path}.source"), msg)
        })?;
        if rel.attribute.is_empty() {
            return Err(SpecError::schema(format!("{path}.attribute"), "relationship shares no attributes"));
        }
        let mut names = BTreeSet::new();
        for (j, attr) in rel.attribute.iter().enumerate() {
            let apath = format!("{path}.attribute[{j}]");
            attr.resolve(db, &apath)?;
            if !source.attribute.contains(attr) {
                return Err(SpecError::schema(
                    apath,
                    format!("`{attr}` is not an attribute of source `{}`", source.name),
                ));
            }
            if !names.insert(attr.attribute.as_str()) {
                return Err(SpecError::schema(
                    apath,
                    format!("attribute name `{}` listed twice", attr.attribute),
                ));
            }
        }
        let mut targets = HashSet::new();
        for (j, target) in rel.targets.iter().enumerate() {
            let tpath = format!("{path}.targets[{j}]");
            let viz = self.visualization(&target.name).ok_or_else(|| {
                SpecError::dangling(
                    format!("{tpath}.name"),
                    format!("unknown target visualization `{}`", target.name),
                )
            })?;
            if target.element_type != ElementType::Visualization {
                return Err(SpecError::schema(
                    format!("{tpath}.type"),
                    "relationship targets must have type `visualization`",
                ));
            }
            if !targets.insert(target.name.as_str()) {
                return Err(SpecError::schema(
                    tpath,
                    format!("target `{}` listed twice", target.name),
                ));
            }
            let table = viz.table().unwrap_or_default();
            if let Some(attr) = rel.attribute.iter().find(|a| a.table != table) {
                return Err(SpecError::schema(
                    tpath,
                    format!("`{attr}` cannot filter `{}` over table `{table}` (joins are unsupported)", viz.name),
                ));
            }
        }
        Ok(())
    }
}

fn validate_visualization(viz: &VisualizationSpec, db: &DatabaseSpec, path: &str) -> Result<(), SpecError> {
    if !viz.data_backed {
        return Err(SpecError::schema(format!("{path}.data_backed"), "visualizations are always data-backed"));
    }
    let Some(table) = viz.table() else {
        return Err(SpecError::schema(format!("{path}.fields"), "visualization has no fields"));
    };
    let mut seen = HashSet::new();
    let mut outputs = HashSet::new();
    for (j, field) in viz.fields.iter().enumerate() {
        let fpath = format!("{path}.fields[{j}]");
        let kind = field.attribute.resolve(db, &format!("{fpath}.attribute"))?;
        if field.attribute.table != table {
            return Err(SpecError::schema(
                format!("{fpath}.attribute"),
                format!("all fields must come from table `{table}`"),
            ));
        }
        if kind == AttributeKind::Categorical && field.aggregation.is_some() {
            return Err(SpecError::schema(
                format!("{fpath}.aggregation"),
                "aggregation applies to numerical attributes only",
            ));
        }
        if !seen.insert(field) {
            return Err(SpecError::schema(fpath, "duplicate field"));
        }
        if !outputs.insert(field.output_name()) {
            return Err(SpecError::schema(
                fpath,
                format!("output column `{}` collides with another field", field.output_name()),
            ));
        }
    }
    if let Some(wildcard) = &viz.wildcard {
        for (j, attr) in wildcard.allowed_fields.iter().enumerate() {
            let wpath = format!("{path}.wildcard.allowed_fields[{j}]");
            attr.resolve(db, &wpath)?;
            if attr.table != table {
                return Err(SpecError::schema(wpath, format!("must come from table `{table}`")));
            }
        }
    }
    for (k, level) in viz.levels.iter().enumerate() {
        for (j, attr) in level.iter().enumerate() {
            let lpath = format!("{path}.levels[{k}][{j}]");
            let kind = attr.resolve(db, &lpath)?;
            if attr.table != table {
                return Err(SpecError::schema(lpath, format!("must come from table `{table}`")));
            }
            if kind != AttributeKind::Categorical {
                return Err(SpecError::schema(lpath, "grouping attributes must be categorical"));
            }
        }
    }
    Ok(())
}

/// Parse an interface specification and resolve it against `db`.
pub fn parse_interface_spec(document: &str, db: &DatabaseSpec) -> Result<InterfaceSpec, SpecError> {
    let mut spec: InterfaceSpec = from_json_str(document)?;
    spec.database = db.clone();
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_database_spec;

    fn db() -> DatabaseSpec {
        parse_database_spec(
            r#"{"tables":{"covid":{"date":"categorical","county":"categorical","metric":"categorical",
                "value":"numerical","longitude":"numerical","latitude":"numerical"},
                "other":{"z":"numerical"}}}"#,
        )
        .unwrap()
    }

    const COVID: &str = r#"{
      "visualizations": [
        {"name":"text_box","fields":[{"attribute":"covid.value","aggregation":"SUM"}]},
        {"name":"line_graph","fields":[{"attribute":"covid.date"},{"attribute":"covid.value","aggregation":"SUM"}]},
        {"name":"heat_map","fields":[{"attribute":"covid.county"},{"attribute":"covid.value","aggregation":"SUM"}]}
      ],
      "widgets": [
        {"name":"metric_radio","widget_class":"radio_button","attribute":["covid.metric"]}
      ],
      "relationships": [
        {"name":"metric_select","source":"metric_radio","attribute":["covid.metric"],
         "targets":[{"type":"visualization","name":"line_graph"},{"type":"visualization","name":"heat_map"}]}
      ]
    }"#;

    #[test]
    fn parses_covid_interface() {
        let spec = parse_interface_spec(COVID, &db()).unwrap();
        assert_eq!(spec.visualizations.len(), 3);
        assert_eq!(spec.widgets.len(), 1);
        assert_eq!(spec.relationships[0].targets.len(), 2);
        assert!(spec.dual_role_elements().is_empty());
    }

    #[test]
    fn dual_role_brush_accepted() {
        let doc = r#"{
          "visualizations": [
            {"name":"viz_2","fields":[{"attribute":"covid.longitude"},{"attribute":"covid.latitude"}]},
            {"name":"viz_3","fields":[{"attribute":"covid.county"},{"attribute":"covid.value","aggregation":"AVG"}]}
          ],
          "widgets": [{"name":"viz_2","widget_class":"brush","attribute":["covid.longitude","covid.latitude"]}],
          "relationships": [{"name":"brushfilter1","source":"viz_2","attribute":["covid.longitude","covid.latitude"],
            "targets":[{"type":"visualization","name":"viz_3"}]}]
        }"#;
        let spec = parse_interface_spec(doc, &db()).unwrap();
        assert!(spec.is_dual_role("viz_2"));
        assert_eq!(spec.dual_role_elements(), vec!["viz_2"]);
    }

    #[test]
    fn missing_target_is_dangling() {
        let doc = COVID.replace(r#""name":"heat_map"}]"#, r#""name":"viz_9"}]"#);
        let err = parse_interface_spec(&doc, &db()).unwrap_err();
        match err {
            SpecError::DanglingReference { at, .. } => {
                assert_eq!(at.path, "$.relationships[0].targets[1].name")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_attribute_is_dangling() {
        let doc = COVID.replace("covid.county", "covid.country");
        let err = parse_interface_spec(&doc, &db()).unwrap_err();
        assert!(matches!(err, SpecError::DanglingReference { .. }), "{err}");
    }

    #[test]
    fn aggregation_on_categorical_rejected() {
        let doc = COVID.replace(r#"{"attribute":"covid.date"}"#, r#"{"attribute":"covid.date","aggregation":"COUNT"}"#);
        let err = parse_interface_spec(&doc, &db()).unwrap_err();
        assert_eq!(err.location().path, "$.visualizations[1].fields[0].aggregation");
    }

    #[test]
    fn mixed_tables_rejected() {
        let doc = COVID.replace(
            r#"{"attribute":"covid.date"},"#,
            r#"{"attribute":"covid.date"},{"attribute":"other.z","aggregation":"SUM"},"#,
        );
        assert!(parse_interface_spec(&doc, &db()).is_err());
    }

    #[test]
    fn relationship_attribute_must_belong_to_source() {
        let doc = COVID.replace(r#""attribute":["covid.metric"],"#, r#""attribute":["covid.county"],"#);
        let err = parse_interface_spec(&doc, &db()).unwrap_err();
        assert!(matches!(err, SpecError::Schema { .. }), "{err}");
    }

    #[test]
    fn unknown_widget_class_rejected() {
        let doc = COVID.replace("radio_button", "joystick");
        let err = parse_interface_spec(&doc, &db()).unwrap_err();
        assert_eq!(err.location().path, "$.widgets[0].widget_class");
    }

    #[test]
    fn round_trips() {
        let spec = parse_interface_spec(COVID, &db()).unwrap();
        let again = parse_interface_spec(&spec.to_json(), &db()).unwrap();
        assert_eq!(spec, again);
    }
}
