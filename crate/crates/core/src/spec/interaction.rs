use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::database::AttributeKind;
use super::error::{from_json_value, Location, SpecError};
use super::interface::{AttributeRef, FieldSpec, InterfaceSpec, RelationshipSpec};
use super::predicate::Predicate;

/// A structural change to the interface, gated by wildcards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterfaceManipulation {
    EncodeField { element: String, field: FieldSpec },
    RemoveField { element: String, attribute: AttributeRef },
    AddRelationship { relationship: RelationshipSpec },
    RemoveRelationship { relationship: String },
}

impl InterfaceManipulation {
    pub fn kind(&self) -> &'static str {
        match self {
            InterfaceManipulation::EncodeField { .. } => "encode_field",
            InterfaceManipulation::RemoveField { .. } => "remove_field",
            InterfaceManipulation::AddRelationship { .. } => "add_relationship",
            InterfaceManipulation::RemoveRelationship { .. } => "remove_relationship",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// Filter change on an existing relationship.
    Data {
        relationship: String,
        parameters: Predicate,
    },
    Interface(InterfaceManipulation),
}

/// One logged user action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionEvent {
    pub action: Action,
    /// Milliseconds since the UNIX epoch.
    pub timestamp: i64,
}

impl InteractionEvent {
    pub fn data(relationship: impl Into<String>, timestamp: i64, parameters: Predicate) -> Self {
        InteractionEvent {
            action: Action::Data {
                relationship: relationship.into(),
                parameters,
            },
            timestamp,
        }
    }

    pub fn interface(manipulation: InterfaceManipulation, timestamp: i64) -> Self {
        InteractionEvent {
            action: Action::Interface(manipulation),
            timestamp,
        }
    }

    /// Relationship name, or the manipulation kind for interface events.
    pub fn label(&self) -> &str {
        match &self.action {
            Action::Data { relationship, .. } => relationship,
            Action::Interface(m) => m.kind(),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        match &self.action {
            Action::Data {
                relationship,
                parameters,
            } => {
                obj.insert("relationship".into(), Value::String(relationship.clone()));
                obj.insert("timestamp".into(), self.timestamp.into());
                obj.insert("parameters".into(), parameters.to_json());
            }
            Action::Interface(m) => {
                obj.insert(
                    "relationship".into(),
                    serde_json::to_value(m).expect("manipulation serializes"),
                );
                obj.insert("timestamp".into(), self.timestamp.into());
                obj.insert("parameters".into(), Value::Null);
            }
        }
        Value::Object(obj)
    }

    pub fn to_json_line(&self) -> String {
        self.to_json().to_string()
    }

    /// Structural parse of one log object; semantic checks happen in [`LogValidator`].
    pub fn from_json(value: &Value) -> Result<InteractionEvent, SpecError> {
        let obj = value
            .as_object()
            .ok_or_else(|| SpecError::schema("$", "event must be a JSON object"))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "relationship" | "timestamp" | "parameters") {
                return Err(SpecError::schema(format!("$.{key}"), format!("unexpected key `{key}`")));
            }
        }
        let timestamp = match obj.get("timestamp") {
            Some(Value::Number(n)) => n
                .as_i64()
                .filter(|t| *t >= 0)
                .ok_or_else(|| SpecError::schema("$.timestamp", "timestamp must be a non-negative integer"))?,
            Some(_) => return Err(SpecError::schema("$.timestamp", "timestamp must be an integer")),
            None => return Err(SpecError::schema("$", "missing key `timestamp`")),
        };
        let parameters = obj
            .get("parameters")
            .ok_or_else(|| SpecError::schema("$", "missing key `parameters`"))?;
        let action = match obj.get("relationship") {
            Some(Value::String(name)) => Action::Data {
                relationship: name.clone(),
                parameters: Predicate::from_json(parameters, "$.parameters")?,
            },
            Some(m @ Value::Object(_)) => {
                let manipulation = from_json_value::<InterfaceManipulation>(m.clone()).map_err(|e| {
                    relocate(e, "$.relationship")
                })?;
                if !parameters.is_null() {
                    return Err(SpecError::schema(
                        "$.parameters",
                        "interface manipulations carry `parameters: null`",
                    ));
                }
                Action::Interface(manipulation)
            }
            Some(_) => {
                return Err(SpecError::schema(
                    "$.relationship",
                    "relationship must be a name or an interface manipulation object",
                ))
            }
            None => return Err(SpecError::schema("$", "missing key `relationship`")),
        };
        Ok(InteractionEvent { action, timestamp })
    }
}

fn relocate(err: SpecError, prefix: &str) -> SpecError {
    let fix = |at: Location| Location {
        line: at.line,
        path: format!("{prefix}{}", at.path.trim_start_matches('$')),
    };
    match err {
        SpecError::Schema { at, message } => SpecError::Schema { at: fix(at), message },
        SpecError::Syntax { at, message } => SpecError::Syntax { at: fix(at), message },
        other => other,
    }
}

impl Serialize for InteractionEvent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for InteractionEvent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        InteractionEvent::from_json(&value).map_err(serde::de::Error::custom)
    }
}

/// Incremental validator for a stream of events against an interface.
///
/// Relationship additions and removals logged earlier in the stream are
/// tracked, so later data events may use relationships that were added at
/// runtime.
#[derive(Debug, Clone)]
pub struct LogValidator<'a> {
    iface: &'a InterfaceSpec,
    relationships: HashMap<String, Vec<(String, AttributeKind)>>,
    last_timestamp: Option<i64>,
}

impl<'a> LogValidator<'a> {
    pub fn new(iface: &'a InterfaceSpec) -> Self {
        let relationships = iface
            .relationships
            .iter()
            .map(|r| (r.name.clone(), attribute_kinds(iface, &r.attribute)))
            .collect();
        LogValidator {
            iface,
            relationships,
            last_timestamp: None,
        }
    }

    /// Validate the next event in stream order.
    pub fn check(&mut self, event: &InteractionEvent) -> Result<(), SpecError> {
        if let Some(last) = self.last_timestamp {
            if event.timestamp < last {
                return Err(ill("$.timestamp", format!("timestamp {} precedes {last}", event.timestamp)));
            }
        }
        match &event.action {
            Action::Data {
                relationship,
                parameters,
            } => {
                let attrs = self.relationships.get(relationship).ok_or_else(|| {
                    ill("$.relationship", format!("unknown relationship `{relationship}`"))
                })?;
                check_coverage(relationship, attrs, parameters)?;
                let kind_of = |f: &str| attrs.iter().find(|(n, _)| n == f).map(|(_, k)| *k);
                parameters.check_types(&kind_of, "$.parameters")?;
            }
            Action::Interface(m) => self.check_manipulation(m)?,
        }
        self.last_timestamp = Some(event.timestamp);
        Ok(())
    }

    fn check_manipulation(&mut self, m: &InterfaceManipulation) -> Result<(), SpecError> {
        let iface = self.iface;
        match m {
            InterfaceManipulation::EncodeField { element, .. }
            | InterfaceManipulation::RemoveField { element, .. } => {
                if iface.visualization(element).is_none() {
                    return Err(SpecError::dangling(
                        "$.relationship.element",
                        format!("unknown visualization `{element}`"),
                    ));
                }
            }
            InterfaceManipulation::AddRelationship { relationship } => {
                if self.relationships.contains_key(&relationship.name) {
                    return Err(ill(
                        "$.relationship.relationship.name",
                        format!("relationship `{}` already exists", relationship.name),
                    ));
                }
                if iface.widget(&relationship.source).is_none() {
                    return Err(SpecError::dangling(
                        "$.relationship.relationship.source",
                        format!("unknown source `{}`", relationship.source),
                    ));
                }
                for (j, t) in relationship.targets.iter().enumerate() {
                    if iface.visualization(&t.name).is_none() {
                        return Err(SpecError::dangling(
                            format!("$.relationship.relationship.targets[{j}].name"),
                            format!("unknown target `{}`", t.name),
                        ));
                    }
                }
                self.relationships.insert(
                    relationship.name.clone(),
                    attribute_kinds(iface, &relationship.attribute),
                );
            }
            InterfaceManipulation::RemoveRelationship { relationship } => {
                if self.relationships.remove(relationship).is_none() {
                    return Err(ill(
                        "$.relationship.relationship",
                        format!("unknown relationship `{relationship}`"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn attribute_kinds(iface: &InterfaceSpec, attrs: &[AttributeRef]) -> Vec<(String, AttributeKind)> {
    attrs
        .iter()
        .filter_map(|a| Some((a.attribute.clone(), a.kind(&iface.database)?)))
        .collect()
}

fn ill(path: &str, message: String) -> SpecError {
    SpecError::IllFormedEvent {
        at: Location::path(path),
        message,
    }
}

fn check_coverage(
    relationship: &str,
    attrs: &[(String, AttributeKind)],
    parameters: &Predicate,
) -> Result<(), SpecError> {
    let declared: BTreeSet<&str> = attrs.iter().map(|(n, _)| n.as_str()).collect();
    let used = parameters.fields();
    if let Some(extra) = used.difference(&declared).next() {
        return Err(ill(
            "$.parameters",
            format!("field `{extra}` is not an attribute of relationship `{relationship}`"),
        ));
    }
    let missing: Vec<&str> = declared.difference(&used).copied().collect();
    if !missing.is_empty() {
        return Err(ill(
            "$.parameters",
            format!(
                "relationship `{relationship}` requires parameters for: {}",
                missing.join(", ")
            ),
        ));
    }
    Ok(())
}

/// Parse a JSON Lines interaction log and validate every event against `iface`.
pub fn parse_interaction_log(stream: &str, iface: &InterfaceSpec) -> Result<Vec<InteractionEvent>, SpecError> {
    let mut validator = LogValidator::new(iface);
    let mut events = Vec::new();
    for (idx, raw) in stream.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| SpecError::Syntax {
            at: Location::line(line_no),
            message: e.to_string(),
        })?;
        let event = InteractionEvent::from_json(&value).map_err(|e| e.with_line(line_no))?;
        validator.check(&event).map_err(|e| e.with_line(line_no))?;
        events.push(event);
    }
    Ok(events)
}

/// Serialize events as JSON Lines, one LF-terminated object per event.
pub fn write_interaction_log(events: &[InteractionEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_json_line());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{parse_database_spec, parse_interface_spec};

    fn iface() -> InterfaceSpec {
        let db = parse_database_spec(
            r#"{"tables":{"covid":{"county":"categorical","value":"numerical",
                "longitude":"numerical","latitude":"numerical"}}}"#,
        )
        .unwrap();
        parse_interface_spec(
            r#"{
          "visualizations": [
            {"name":"viz_2","fields":[{"attribute":"covid.longitude"},{"attribute":"covid.latitude"}],
             "wildcard":{"allow_new_relationships":true}},
            {"name":"viz_3","fields":[{"attribute":"covid.county"},{"attribute":"covid.value","aggregation":"SUM"}]}
          ],
          "widgets": [
            {"name":"viz_2","widget_class":"brush","attribute":["covid.longitude","covid.latitude"]},
            {"name":"county_list","widget_class":"dropdown_list","attribute":["covid.county"]}
          ],
          "relationships": [{"name":"brushfilter1","source":"viz_2","attribute":["covid.longitude","covid.latitude"],
            "targets":[{"type":"visualization","name":"viz_3"}]}]
        }"#,
            &db,
        )
        .unwrap()
    }

    const BRUSH: &str = r#"{"relationship":"brushfilter1","timestamp":1610000000000,"parameters":{"and":[{"field":"longitude","range":[-79.5,-75.0]},{"field":"latitude","range":[37.9,39.7]}]}}"#;

    #[test]
    fn parses_brush_event() {
        let events = parse_interaction_log(BRUSH, &iface()).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].label(), "brushfilter1");
        let Action::Data { parameters, .. } = &events[0].action else { panic!() };
        assert!(matches!(parameters, Predicate::And(c) if c.len() == 2));
    }

    #[test]
    fn empty_log_is_empty() {
        assert!(parse_interaction_log("", &iface()).unwrap().is_empty());
        assert!(parse_interaction_log("\n\n", &iface()).unwrap().is_empty());
    }

    #[test]
    fn partial_coverage_is_ill_formed() {
        let line = r#"{"relationship":"brushfilter1","timestamp":1,"parameters":{"field":"longitude","range":[-79.5,-75.0]}}"#;
        let err = parse_interaction_log(line, &iface()).unwrap_err();
        match err {
            SpecError::IllFormedEvent { at, message } => {
                assert_eq!(at.line, Some(1));
                assert!(message.contains("latitude"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn extra_field_is_ill_formed() {
        let line = r#"{"relationship":"brushfilter1","timestamp":1,"parameters":{"and":[{"field":"longitude","range":[1,2]},{"field":"latitude","range":[1,2]},{"field":"county","equal":"x"}]}}"#;
        assert!(matches!(
            parse_interaction_log(line, &iface()).unwrap_err(),
            SpecError::IllFormedEvent { .. }
        ));
    }

    #[test]
    fn unknown_relationship_names_line() {
        let log = format!("{BRUSH}\n{}", BRUSH.replace("brushfilter1", "nope").replace("1610000000000", "1610000000001"));
        let err = parse_interaction_log(&log, &iface()).unwrap_err();
        assert_eq!(err.location().line, Some(2));
        assert!(matches!(err, SpecError::IllFormedEvent { .. }));
    }

    #[test]
    fn decreasing_timestamp_rejected_and_ties_kept() {
        let later = BRUSH.replace("1610000000000", "1610000000005");
        let ok = format!("{later}\n{later}\n");
        assert_eq!(parse_interaction_log(&ok, &iface()).unwrap().len(), 2);
        let bad = format!("{later}\n{BRUSH}\n");
        let err = parse_interaction_log(&bad, &iface()).unwrap_err();
        assert_eq!(err.location().line, Some(2));
    }

    #[test]
    fn unsupported_predicate_keeps_category() {
        let line = r#"{"relationship":"brushfilter1","timestamp":1,"parameters":"datum.longitude > 3"}"#;
        let err = parse_interaction_log(line, &iface()).unwrap_err();
        assert!(matches!(err, SpecError::UnsupportedPredicate { .. }));
        assert_eq!(err.location().line, Some(1));
    }

    #[test]
    fn extra_keys_rejected() {
        let line = BRUSH.replace("\"timestamp\"", "\"user\":1,\"timestamp\"");
        assert!(matches!(
            parse_interaction_log(&line, &iface()).unwrap_err(),
            SpecError::Schema { .. }
        ));
    }

    #[test]
    fn manipulations_track_relationship_namespace() {
        let log = [
            r#"{"relationship":{"kind":"add_relationship","relationship":{"name":"pick","source":"county_list","attribute":["covid.county"],"targets":[{"type":"visualization","name":"viz_3"}]}},"timestamp":5,"parameters":null}"#,
            r#"{"relationship":"pick","timestamp":6,"parameters":{"field":"county","equal":"Howard"}}"#,
            r#"{"relationship":{"kind":"remove_relationship","relationship":"pick"},"timestamp":7,"parameters":null}"#,
            r#"{"relationship":"pick","timestamp":8,"parameters":{"field":"county","equal":"Howard"}}"#,
        ]
        .join("\n");
        let err = parse_interaction_log(&log, &iface()).unwrap_err();
        assert_eq!(err.location().line, Some(4));
    }

    #[test]
    fn events_round_trip() {
        let log = format!(
            "{BRUSH}\n{}\n",
            r#"{"relationship":{"kind":"encode_field","element":"viz_2","field":{"attribute":"covid.county"}},"timestamp":1610000000009,"parameters":null}"#
        );
        let events = parse_interaction_log(&log, &iface()).unwrap();
        assert_eq!(write_interaction_log(&events), log);
    }
}
