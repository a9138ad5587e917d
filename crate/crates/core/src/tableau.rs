//! Conversion of Tableau Desktop JSON-lines interaction logs into benchmark
//! interaction events.
//!
//! Tableau log layouts differ between versions, so the adapter reads the log
//! name, field, value and timestamp from configurable dot paths. The log name
//! narrows the candidate widgets to one class when it is known; the field then
//! selects the first relationship (widget declaration order) whose attributes
//! contain it. Records without concrete values take them from a value map
//! keyed by relationship and field, or become `needs_value` placeholders.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::spec::{
    AttributeKind, InteractionEvent, InterfaceSpec, LogValidator, Predicate, RelationshipSpec,
    SpecError, WidgetClass,
};

/// Log names whose widget class is known.
pub const BUILTIN_CLASS_MAP: &[(&str, WidgetClass)] =
    &[("tabdoc:quantitative-quick-filter-edit", WidgetClass::Slider)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdapterConfig {
    pub name_path: String,
    pub field_path: String,
    pub value_path: Option<String>,
    pub timestamp_path: Option<String>,
    /// Extra log-name mappings; these override the built-in ones.
    pub class_map: IndexMap<String, WidgetClass>,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        AdapterConfig {
            name_path: "name".into(),
            field_path: "field".into(),
            value_path: Some("value".into()),
            timestamp_path: Some("timestamp".into()),
            class_map: IndexMap::new(),
        }
    }
}

impl AdapterConfig {
    pub fn from_json(text: &str) -> Result<AdapterConfig, SpecError> {
        crate::spec::from_json_str(text)
    }

    pub fn class_for(&self, log_name: &str) -> Option<WidgetClass> {
        self.class_map.get(log_name).copied().or_else(|| {
            BUILTIN_CLASS_MAP
                .iter()
                .find(|(n, _)| *n == log_name)
                .map(|(_, c)| *c)
        })
    }
}

/// Parameter values keyed by relationship, then field. Each value uses the
/// same shapes as a raw record value (see [`value_to_test`]).
pub type ValueMap = IndexMap<String, IndexMap<String, Value>>;

pub fn parse_value_map(text: &str) -> Result<ValueMap, SpecError> {
    crate::spec::from_json_str(text)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvertedEvent {
    Resolved(InteractionEvent),
    /// The relationship was identified but some of its attributes have no
    /// value.
    NeedsValue {
        relationship: String,
        timestamp: i64,
        fields: Vec<String>,
    },
}

impl ConvertedEvent {
    pub fn to_json_line(&self) -> String {
        match self {
            ConvertedEvent::Resolved(e) => e.to_json_line(),
            ConvertedEvent::NeedsValue {
                relationship,
                timestamp,
                fields,
            } => serde_json::json!({
                "relationship": relationship,
                "timestamp": timestamp,
                "parameters": null,
                "needs_value": fields,
            })
            .to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TableauConversion {
    pub events: Vec<ConvertedEvent>,
    pub skipped: Vec<SkippedRecord>,
}

impl TableauConversion {
    pub fn resolved(&self) -> impl Iterator<Item = &InteractionEvent> {
        self.events.iter().filter_map(|e| match e {
            ConvertedEvent::Resolved(e) => Some(e),
            ConvertedEvent::NeedsValue { .. } => None,
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_json_line());
            out.push('\n');
        }
        out
    }

    pub fn skipped_json(&self) -> String {
        serde_json::to_string_pretty(&self.skipped).expect("skipped serializes")
    }
}

/// Tableau field captions come as `[ds].[none:county:nk]`, `[county]` or
/// plain `county`; this keeps the bare column name.
pub fn normalize_field(raw: &str) -> String {
    let last = match raw.rfind("].[") {
        Some(i) => &raw[i + 2..],
        None => raw,
    };
    let bare = last.trim().trim_start_matches('[').trim_end_matches(']');
    let parts: Vec<&str> = bare.split(':').collect();
    let name = if parts.len() == 3 { parts[1] } else { bare };
    name.trim().to_string()
}

fn lookup<'v>(record: &'v Value, path: &str) -> Option<&'v Value> {
    path.split('.')
        .try_fold(record, |v, key| match v {
            Value::Object(m) => m.get(key),
            Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get(i)),
            _ => None,
        })
        .filter(|v| !v.is_null())
}

fn parse_timestamp(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => n.as_i64().filter(|t| *t >= 0),
        Value::String(s) => {
            if let Ok(t) = s.parse::<i64>() {
                return (t >= 0).then_some(t);
            }
            if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
                return Some(dt.timestamp_millis());
            }
            ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
                .iter()
                .find_map(|f| chrono::NaiveDateTime::parse_from_str(s, f).ok())
                .map(|dt| dt.and_utc().timestamp_millis())
        }
        _ => None,
    }
}

fn is_continuous(class: WidgetClass) -> bool {
    use WidgetClass::*;
    matches!(class, Slider | Hover | Panning | Brush | ZoomQualitative | ZoomQuantitative)
}

/// Build a field predicate from a raw value:
/// * an object is read as predicate operators (`{"range": [1, 5]}`),
/// * a two-element numeric array on a continuous widget is a range,
/// * any other array is a `oneOf`,
/// * a scalar is an `equal`.
pub fn value_to_test(
    field: &str,
    value: &Value,
    kind: AttributeKind,
    class: WidgetClass,
) -> Result<Predicate, SpecError> {
    let mut obj = Map::new();
    obj.insert("field".into(), Value::String(field.to_string()));
    match value {
        Value::Object(ops) => {
            for (k, v) in ops {
                obj.insert(k.clone(), v.clone());
            }
        }
        Value::Array(items)
            if items.len() == 2
                && kind == AttributeKind::Numerical
                && is_continuous(class)
                && items.iter().all(Value::is_number) =>
        {
            let (a, b) = (items[0].as_f64().unwrap(), items[1].as_f64().unwrap());
            let pair = if a <= b { items.clone() } else { vec![items[1].clone(), items[0].clone()] };
            obj.insert("range".into(), Value::Array(pair));
        }
        Value::Array(items) => {
            obj.insert("oneOf".into(), Value::Array(items.clone()));
        }
        scalar => {
            obj.insert("equal".into(), scalar.clone());
        }
    }
    Predicate::from_json(&Value::Object(obj), "$.value")
}

fn candidate<'a>(
    iface: &'a InterfaceSpec,
    class: Option<WidgetClass>,
    field: &str,
) -> Option<(&'a RelationshipSpec, WidgetClass)> {
    iface
        .widgets
        .iter()
        .filter(|w| class.is_none_or(|c| w.widget_class == c))
        .find_map(|w| {
            iface
                .relationships
                .iter()
                .filter(|r| r.source == w.name)
                .find(|r| r.attribute.iter().any(|a| a.attribute.eq_ignore_ascii_case(field)))
                .map(|r| (r, w.widget_class))
        })
}

/// Convert a Tableau JSONL log. Every non-blank line ends up either in
/// `events` or in `skipped`.
pub fn parse_tableau_log(
    raw: &str,
    iface: &InterfaceSpec,
    config: &AdapterConfig,
    value_map: Option<&ValueMap>,
) -> TableauConversion {
    let mut out = TableauConversion::default();
    let mut validator = LogValidator::new(iface);
    let mut last_ts = 0i64;
    for (idx, line) in raw.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let mut skip = |reason: String| {
            out.skipped.push(SkippedRecord {
                line: line_no,
                reason,
            })
        };
        let record: Value = match serde_json::from_str(line) {
            Ok(v @ Value::Object(_)) => v,
            Ok(_) => {
                skip("record is not a JSON object".into());
                continue;
            }
            Err(e) => {
                skip(format!("unreadable record: {e}"));
                continue;
            }
        };
        let name = lookup(&record, &config.name_path).and_then(Value::as_str).unwrap_or("");
        let Some(field) = lookup(&record, &config.field_path).and_then(Value::as_str) else {
            skip("record has no field".into());
            continue;
        };
        let field = normalize_field(field);
        let class = config.class_for(name);
        let Some((rel, widget_class)) = candidate(iface, class, &field) else {
            skip("no matching relationship".into());
            continue;
        };
        let timestamp = match &config.timestamp_path {
            Some(p) => match lookup(&record, p) {
                Some(v) => match parse_timestamp(v) {
                    Some(t) => t,
                    None => {
                        skip(format!("unreadable timestamp {v}"));
                        continue;
                    }
                },
                None => last_ts,
            },
            None => last_ts,
        };
        let raw_value = config.value_path.as_deref().and_then(|p| lookup(&record, p));
        let mut parts = Vec::new();
        let mut missing = Vec::new();
        let mut failure = None;
        for attr in &rel.attribute {
            let name = &attr.attribute;
            let value = if name.eq_ignore_ascii_case(&field) {
                raw_value.or_else(|| value_map.and_then(|m| m.get(&rel.name)?.get(name.as_str())))
            } else {
                value_map.and_then(|m| m.get(&rel.name)?.get(name.as_str()))
            };
            let Some(value) = value else {
                missing.push(name.clone());
                continue;
            };
            let kind = attr.kind(&iface.database).unwrap_or(AttributeKind::Categorical);
            match value_to_test(name, value, kind, widget_class) {
                Ok(p) => parts.push(p),
                Err(e) => {
                    failure = Some(format!("invalid value for `{name}`: {e}"));
                    break;
                }
            }
        }
        if let Some(reason) = failure {
            skip(reason);
            continue;
        }
        if timestamp < last_ts {
            skip(format!("timestamp {timestamp} precedes {last_ts}"));
            continue;
        }
        if !missing.is_empty() {
            last_ts = timestamp;
            out.events.push(ConvertedEvent::NeedsValue {
                relationship: rel.name.clone(),
                timestamp,
                fields: missing,
            });
            continue;
        }
        let parameters = if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Predicate::And(parts)
        };
        let event = InteractionEvent::data(rel.name.clone(), timestamp, parameters);
        match validator.check(&event) {
            Ok(()) => {
                last_ts = timestamp;
                out.events.push(ConvertedEvent::Resolved(event));
            }
            Err(e) => skip(format!("converted event is invalid: {e}")),
        }
    }
    out
}
