//! Vega-Lite style filter predicates carried by interaction events.
//!
//! Only field predicates and their `and` / `or` / `not` compositions are
//! accepted. Expression strings and selection (`param`) predicates need client
//! state that a query benchmark does not model, so they are rejected.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Number, Value};

use super::database::AttributeKind;
use super::error::{Location, SpecError};

/// A scalar predicate operand.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Number(Number),
    Text(String),
}

impl Literal {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Literal::Number(n) => n.as_f64(),
            Literal::Text(_) => None,
        }
    }

    pub fn from_f64(v: f64) -> Option<Literal> {
        Number::from_f64(v).map(Literal::Number)
    }

    fn to_value(&self) -> Value {
        match self {
            Literal::Number(n) => Value::Number(n.clone()),
            Literal::Text(s) => Value::String(s.clone()),
        }
    }
}

impl From<&str> for Literal {
    fn from(s: &str) -> Self {
        Literal::Text(s.to_string())
    }
}

impl From<i64> for Literal {
    fn from(v: i64) -> Self {
        Literal::Number(v.into())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => write!(f, "{n}"),
            Literal::Text(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldTest {
    Equal(Literal),
    Lt(Literal),
    Lte(Literal),
    Gt(Literal),
    Gte(Literal),
    Range(Literal, Literal),
    OneOf(Vec<Literal>),
    Valid,
}

impl FieldTest {
    pub fn op_name(&self) -> &'static str {
        match self {
            FieldTest::Equal(_) => "equal",
            FieldTest::Lt(_) => "lt",
            FieldTest::Lte(_) => "lte",
            FieldTest::Gt(_) => "gt",
            FieldTest::Gte(_) => "gte",
            FieldTest::Range(..) => "range",
            FieldTest::OneOf(_) => "oneOf",
            FieldTest::Valid => "valid",
        }
    }

    fn is_numeric_comparison(&self) -> bool {
        matches!(
            self,
            FieldTest::Lt(_) | FieldTest::Lte(_) | FieldTest::Gt(_) | FieldTest::Gte(_) | FieldTest::Range(..)
        )
    }

    fn literals(&self) -> Vec<&Literal> {
        match self {
            FieldTest::Equal(l) | FieldTest::Lt(l) | FieldTest::Lte(l) | FieldTest::Gt(l) | FieldTest::Gte(l) => {
                vec![l]
            }
            FieldTest::Range(lo, hi) => vec![lo, hi],
            FieldTest::OneOf(ls) => ls.iter().collect(),
            FieldTest::Valid => vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldPredicate {
    pub field: String,
    pub test: FieldTest,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Predicate {
    Field(FieldPredicate),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
}

const FIELD_OPS: [&str; 8] = ["equal", "lt", "lte", "gt", "gte", "range", "oneOf", "valid"];

impl Predicate {
    pub fn field(field: impl Into<String>, test: FieldTest) -> Predicate {
        Predicate::Field(FieldPredicate {
            field: field.into(),
            test,
        })
    }

    /// Distinct field names referenced anywhere in the predicate.
    pub fn fields(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_fields(&mut out);
        out
    }

    fn collect_fields<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Predicate::Field(fp) => {
                out.insert(fp.field.as_str());
            }
            Predicate::And(children) | Predicate::Or(children) => {
                children.iter().for_each(|c| c.collect_fields(out))
            }
            Predicate::Not(child) => child.collect_fields(out),
        }
    }

    /// Parse a predicate from its JSON form. `path` is used for error locations.
    pub fn from_json(value: &Value, path: &str) -> Result<Predicate, SpecError> {
        match value {
            Value::String(_) => Err(SpecError::UnsupportedPredicate {
                at: Location::path(path),
                message: "expression-string predicates are not supported".into(),
            }),
            Value::Object(obj) => Self::from_object(obj, path),
            other => Err(SpecError::schema(
                path,
                format!("predicate must be an object, found {}", type_name(other)),
            )),
        }
    }

    fn from_object(obj: &Map<String, Value>, path: &str) -> Result<Predicate, SpecError> {
        if obj.contains_key("param") {
            return Err(SpecError::UnsupportedPredicate {
                at: Location::path(path),
                message: "selection (param) predicates are not supported".into(),
            });
        }
        for key in ["and", "or"] {
            if let Some(children) = obj.get(key) {
                if obj.len() != 1 {
                    return Err(SpecError::schema(path, format!("`{key}` must be the only key")));
                }
                let items = children.as_array().ok_or_else(|| {
                    SpecError::schema(format!("{path}.{key}"), "expected an array of predicates")
                })?;
                if items.is_empty() {
                    return Err(SpecError::schema(format!("{path}.{key}"), "composition has no operands"));
                }
                let parsed = items
                    .iter()
                    .enumerate()
                    .map(|(i, v)| Predicate::from_json(v, &format!("{path}.{key}[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                return Ok(if key == "and" {
                    Predicate::And(parsed)
                } else {
                    Predicate::Or(parsed)
                });
            }
        }
        if let Some(child) = obj.get("not") {
            if obj.len() != 1 {
                return Err(SpecError::schema(path, "`not` must be the only key"));
            }
            return Ok(Predicate::Not(Box::new(Predicate::from_json(
                child,
                &format!("{path}.not"),
            )?)));
        }
        let field = match obj.get("field") {
            Some(Value::String(f)) => f.clone(),
            Some(_) => return Err(SpecError::schema(format!("{path}.field"), "field must be a string")),
            None => {
                return Err(SpecError::schema(
                    path,
                    "expected a field predicate or an and/or/not composition",
                ))
            }
        };
        if obj.contains_key("timeUnit") {
            return Err(SpecError::UnsupportedPredicate {
                at: Location::path(format!("{path}.timeUnit")),
                message: "timeUnit predicates are not supported".into(),
            });
        }
        let mut ops = obj.keys().filter(|k| k.as_str() != "field");
        let op = match (ops.next(), ops.next()) {
            (Some(op), None) => op.as_str(),
            (None, _) => return Err(SpecError::schema(path, "field predicate has no operator")),
            (Some(_), Some(_)) => {
                return Err(SpecError::schema(path, "field predicate has more than one operator"))
            }
        };
        if !FIELD_OPS.contains(&op) {
            return Err(SpecError::schema(
                format!("{path}.{op}"),
                format!("unknown predicate operator `{op}`"),
            ));
        }
        let op_path = format!("{path}.{op}");
        let operand = &obj[op];
        let test = match op {
            "equal" => FieldTest::Equal(scalar(operand, &op_path)?),
            "lt" => FieldTest::Lt(number(operand, &op_path)?),
            "lte" => FieldTest::Lte(number(operand, &op_path)?),
            "gt" => FieldTest::Gt(number(operand, &op_path)?),
            "gte" => FieldTest::Gte(number(operand, &op_path)?),
            "range" => {
                let items = operand
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| SpecError::schema(&op_path, "range needs exactly two values"))?;
                let lo = number(&items[0], &format!("{op_path}[0]"))?;
                let hi = number(&items[1], &format!("{op_path}[1]"))?;
                if lo.as_f64() > hi.as_f64() {
                    return Err(SpecError::schema(&op_path, "range low exceeds high"));
                }
                FieldTest::Range(lo, hi)
            }
            "oneOf" => {
                let items = operand
                    .as_array()
                    .filter(|a| !a.is_empty())
                    .ok_or_else(|| SpecError::schema(&op_path, "oneOf needs a non-empty array"))?;
                FieldTest::OneOf(
                    items
                        .iter()
                        .enumerate()
                        .map(|(i, v)| scalar(v, &format!("{op_path}[{i}]")))
                        .collect::<Result<_, _>>()?,
                )
            }
            "valid" => match operand {
                Value::Bool(true) => FieldTest::Valid,
                _ => {
                    return Err(SpecError::schema(
                        &op_path,
                        "valid must be `true`; negate with `not`",
                    ))
                }
            },
            _ => unreachable!(),
        };
        Ok(Predicate::Field(FieldPredicate { field, test }))
    }

    pub fn to_json(&self) -> Value {
        match self {
            Predicate::Field(fp) => {
                let mut obj = Map::new();
                obj.insert("field".into(), Value::String(fp.field.clone()));
                let operand = match &fp.test {
                    FieldTest::Equal(l) | FieldTest::Lt(l) | FieldTest::Lte(l) | FieldTest::Gt(l) | FieldTest::Gte(l) => {
                        l.to_value()
                    }
                    FieldTest::Range(lo, hi) => Value::Array(vec![lo.to_value(), hi.to_value()]),
                    FieldTest::OneOf(ls) => Value::Array(ls.iter().map(Literal::to_value).collect()),
                    FieldTest::Valid => Value::Bool(true),
                };
                obj.insert(fp.test.op_name().into(), operand);
                Value::Object(obj)
            }
            Predicate::And(cs) => single("and", Value::Array(cs.iter().map(Predicate::to_json).collect())),
            Predicate::Or(cs) => single("or", Value::Array(cs.iter().map(Predicate::to_json).collect())),
            Predicate::Not(c) => single("not", c.to_json()),
        }
    }

    /// Check operand types against attribute kinds. `kind_of` resolves a field name.
    pub fn check_types(
        &self,
        kind_of: &dyn Fn(&str) -> Option<AttributeKind>,
        path: &str,
    ) -> Result<(), SpecError> {
        match self {
            Predicate::Field(fp) => {
                let kind = kind_of(&fp.field).ok_or_else(|| {
                    SpecError::schema(format!("{path}.field"), format!("unknown field `{}`", fp.field))
                })?;
                if kind == AttributeKind::Categorical && fp.test.is_numeric_comparison() {
                    return Err(SpecError::schema(
                        path,
                        format!("`{}` requires a numerical field, `{}` is categorical", fp.test.op_name(), fp.field),
                    ));
                }
                for lit in fp.test.literals() {
                    let ok = matches!(
                        (kind, lit),
                        (AttributeKind::Numerical, Literal::Number(_)) | (AttributeKind::Categorical, Literal::Text(_))
                    );
                    if !ok {
                        let want = match kind {
                            AttributeKind::Numerical => "numbers",
                            AttributeKind::Categorical => "strings",
                        };
                        return Err(SpecError::schema(
                            format!("{path}.{}", fp.test.op_name()),
                            format!("`{}` takes {want}", fp.field),
                        ));
                    }
                }
                Ok(())
            }
            Predicate::And(cs) | Predicate::Or(cs) => {
                let key = if matches!(self, Predicate::And(_)) { "and" } else { "or" };
                cs.iter()
                    .enumerate()
                    .try_for_each(|(i, c)| c.check_types(kind_of, &format!("{path}.{key}[{i}]")))
            }
            Predicate::Not(c) => c.check_types(kind_of, &format!("{path}.not")),
        }
    }
}

fn single(key: &str, value: Value) -> Value {
    let mut obj = Map::new();
    obj.insert(key.into(), value);
    Value::Object(obj)
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn scalar(v: &Value, path: &str) -> Result<Literal, SpecError> {
    match v {
        Value::Number(n) => Ok(Literal::Number(n.clone())),
        Value::String(s) => Ok(Literal::Text(s.clone())),
        other => Err(SpecError::schema(
            path,
            format!("expected a string or number, found {}", type_name(other)),
        )),
    }
}

fn number(v: &Value, path: &str) -> Result<Literal, SpecError> {
    match v {
        Value::Number(n) => Ok(Literal::Number(n.clone())),
        other => Err(SpecError::schema(
            path,
            format!("expected a number, found {}", type_name(other)),
        )),
    }
}

impl Serialize for Predicate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Predicate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        Predicate::from_json(&value, "$").map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn parse(v: Value) -> Result<Predicate, SpecError> {
        Predicate::from_json(&v, "$.parameters")
    }

    #[test]
    fn parses_brush_conjunction() {
        let p = parse(json!({"and":[
            {"field":"longitude","range":[-79.5,-75.0]},
            {"field":"latitude","range":[37.9,39.7]}
        ]}))
        .unwrap();
        let Predicate::And(children) = &p else { panic!() };
        assert_eq!(children.len(), 2);
        assert_eq!(p.fields().into_iter().collect::<Vec<_>>(), vec!["latitude", "longitude"]);
    }

    #[test]
    fn all_field_operators_parse() {
        for v in [
            json!({"field":"x","equal":1}),
            json!({"field":"x","lt":1}),
            json!({"field":"x","lte":1}),
            json!({"field":"x","gt":1}),
            json!({"field":"x","gte":1}),
            json!({"field":"x","range":[1,2]}),
            json!({"field":"x","oneOf":["a"]}),
            json!({"field":"x","valid":true}),
        ] {
            let p = parse(v.clone()).unwrap();
            assert_eq!(p.to_json(), v);
        }
    }

    #[test]
    fn expression_strings_are_unsupported() {
        let err = parse(json!("datum.x > 5")).unwrap_err();
        assert!(matches!(err, SpecError::UnsupportedPredicate { .. }));
    }

    #[test]
    fn param_predicates_are_unsupported() {
        let err = parse(json!({"param":"brush"})).unwrap_err();
        assert!(matches!(err, SpecError::UnsupportedPredicate { .. }));
        let err = parse(json!({"and":[{"field":"x","equal":1},{"param":"brush"}]})).unwrap_err();
        match err {
            SpecError::UnsupportedPredicate { at, .. } => assert_eq!(at.path, "$.parameters.and[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn range_shape_checked() {
        assert!(parse(json!({"field":"x","range":[1]})).is_err());
        assert!(parse(json!({"field":"x","range":[3,1]})).is_err());
        assert!(parse(json!({"field":"x","range":["a","b"]})).is_err());
        assert!(parse(json!({"field":"x","range":[1,1]})).is_ok());
    }

    #[test]
    fn one_of_and_valid_shape_checked() {
        assert!(parse(json!({"field":"x","oneOf":[]})).is_err());
        assert!(parse(json!({"field":"x","valid":false})).is_err());
        assert!(parse(json!({"field":"x","equal":true})).is_err());
    }

    #[test]
    fn operator_count_checked() {
        assert!(parse(json!({"field":"x"})).is_err());
        assert!(parse(json!({"field":"x","lt":1,"gt":0})).is_err());
        let err = parse(json!({"field":"x","near":1})).unwrap_err();
        assert_eq!(err.location().path, "$.parameters.near");
    }

    #[test]
    fn categorical_rejects_numeric_comparison() {
        let p = parse(json!({"field":"county","lt":3})).unwrap();
        let kinds = |f: &str| (f == "county").then_some(AttributeKind::Categorical);
        assert!(p.check_types(&kinds, "$").is_err());
        let p = parse(json!({"field":"county","equal":3})).unwrap();
        assert!(p.check_types(&kinds, "$").is_err());
        let p = parse(json!({"field":"county","oneOf":["a","b"]})).unwrap();
        assert!(p.check_types(&kinds, "$").is_ok());
    }

    #[test]
    fn not_wraps_single_child() {
        let p = parse(json!({"not":{"field":"deaths","valid":true}})).unwrap();
        assert!(matches!(p, Predicate::Not(_)));
    }
}
