use std::fmt;

use indexmap::IndexMap;
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::{Deserialize, Serialize};

use super::error::{from_json_str, SpecError};

/// Column classification used when assembling SQL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numerical,
    Categorical,
}

/// Attributes of one table, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(transparent)]
pub struct TableSpec {
    pub attributes: IndexMap<String, AttributeKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatabaseSpec {
    #[serde(deserialize_with = "unique_map")]
    pub tables: IndexMap<String, TableSpec>,
}

impl DatabaseSpec {
    pub fn table(&self, name: &str) -> Option<&TableSpec> {
        self.tables.get(name)
    }

    pub fn kind_of(&self, table: &str, attribute: &str) -> Option<AttributeKind> {
        self.tables.get(table)?.attributes.get(attribute).copied()
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.tables.is_empty() {
            return Err(SpecError::schema("$.tables", "at least one table is required"));
        }
        for (table, spec) in &self.tables {
            let path = format!("$.tables.{table}");
            super::check_ident(table, &path)?;
            if spec.attributes.is_empty() {
                return Err(SpecError::schema(path, "table has no attributes"));
            }
            for attr in spec.attributes.keys() {
                super::check_ident(attr, &format!("{path}.{attr}"))?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("database spec serializes")
    }
}

impl<'de> Deserialize<'de> for TableSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        unique_map(deserializer).map(|attributes| TableSpec { attributes })
    }
}

/// Parse and validate a database specification document.
pub fn parse_database_spec(document: &str) -> Result<DatabaseSpec, SpecError> {
    let spec: DatabaseSpec = from_json_str(document)?;
    spec.validate()?;
    Ok(spec)
}

/// Map deserializer that rejects duplicate keys instead of keeping the last one.
fn unique_map<'de, D, V>(deserializer: D) -> Result<IndexMap<String, V>, D::Error>
where
    D: Deserializer<'de>,
    V: Deserialize<'de>,
{
    struct UniqueVisitor<V>(std::marker::PhantomData<V>);

    impl<'de, V: Deserialize<'de>> Visitor<'de> for UniqueVisitor<V> {
        type Value = IndexMap<String, V>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an object with unique keys")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
            let mut out = IndexMap::new();
            while let Some(key) = access.next_key::<String>()? {
                if out.contains_key(&key) {
                    return Err(de::Error::custom(format!("duplicate key `{key}`")));
                }
                let value = access.next_value()?;
                out.insert(key, value);
            }
            Ok(out)
        }
    }

    deserializer.deserialize_map(UniqueVisitor(std::marker::PhantomData))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_covid_database() {
        let db = parse_database_spec(
            r#"{"tables":{"covid":{"positive_cases":"numerical","county":"categorical"}}}"#,
        )
        .unwrap();
        assert_eq!(db.tables.len(), 1);
        let covid = db.table("covid").unwrap();
        assert_eq!(covid.attributes.len(), 2);
        assert_eq!(db.kind_of("covid", "positive_cases"), Some(AttributeKind::Numerical));
        assert_eq!(db.kind_of("covid", "county"), Some(AttributeKind::Categorical));
    }

    #[test]
    fn rejects_empty_tables() {
        let err = parse_database_spec(r#"{"tables":{}}"#).unwrap_err();
        assert!(matches!(err, SpecError::Schema { .. }), "{err}");
    }

    #[test]
    fn rejects_table_without_attributes() {
        let err = parse_database_spec(r#"{"tables":{"t":{}}}"#).unwrap_err();
        assert_eq!(err.location().path, "$.tables.t");
    }

    #[test]
    fn unknown_kind_names_path() {
        let err = parse_database_spec(r#"{"tables":{"t":{"x":"integer"}}}"#).unwrap_err();
        match err {
            SpecError::Schema { at, .. } => assert_eq!(at.path, "$.tables.t.x"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_attribute_rejected() {
        let err =
            parse_database_spec(r#"{"tables":{"t":{"x":"numerical","x":"categorical"}}}"#)
                .unwrap_err();
        assert!(matches!(err, SpecError::Schema { .. }), "{err}");
    }

    #[test]
    fn malformed_json_is_syntax_error() {
        let err = parse_database_spec(r#"{"tables":{"t":"#).unwrap_err();
        assert!(matches!(err, SpecError::Syntax { .. }), "{err}");
    }

    #[test]
    fn bad_identifier_rejected() {
        let err = parse_database_spec(r#"{"tables":{"my table":{"x":"numerical"}}}"#).unwrap_err();
        assert!(matches!(err, SpecError::Schema { .. }));
    }

    #[test]
    fn round_trips() {
        let db = parse_database_spec(
            r#"{"tables":{"a":{"x":"numerical","y":"categorical"},"b":{"z":"numerical"}}}"#,
        )
        .unwrap();
        assert_eq!(parse_database_spec(&db.to_json()).unwrap(), db);
    }
}
