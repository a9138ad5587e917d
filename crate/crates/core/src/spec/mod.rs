//! The three specification documents (database, interface, interaction log)
//! and the in-memory model shared by the rest of the crate.

mod database;
mod error;
mod interaction;
mod interface;
mod predicate;
mod widget;

pub use database::{parse_database_spec, AttributeKind, DatabaseSpec, TableSpec};
pub use error::{Location, SpecError};
pub(crate) use error::from_json_str;
pub use interaction::{
    parse_interaction_log, write_interaction_log, Action, InteractionEvent, InterfaceManipulation,
    LogValidator,
};
pub use interface::{
    parse_interface_spec, Aggregation, AttributeRef, ElementType, FieldSpec, InterfaceSpec,
    RelationshipSpec, TargetRef, VisualizationSpec, WidgetSpec, WildcardSpec,
};
pub use predicate::{FieldPredicate, FieldTest, Literal, Predicate};
pub use widget::{classify_widget, LoadGroup, WidgetClass};

/// Words that cannot be used bare as table or column names in all of the
/// supported SQL engines.
const RESERVED: &[&str] = &[
    "all", "and", "any", "as", "asc", "between", "by", "case", "cast", "check", "column",
    "create", "default", "delete", "desc", "distinct", "drop", "else", "end", "except", "false",
    "from", "group", "having", "in", "insert", "intersect", "into", "is", "join", "like", "limit",
    "not", "null", "offset", "on", "or", "order", "select", "table", "then", "to", "true",
    "union", "unique", "update", "user", "using", "values", "when", "where", "with",
];

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn check_ident(s: &str, path: &str) -> Result<(), SpecError> {
    if !is_ident(s) {
        return Err(SpecError::schema(
            path,
            format!("`{s}` is not a bare identifier ([A-Za-z_][A-Za-z0-9_]*)"),
        ));
    }
    if RESERVED.contains(&s.to_ascii_lowercase().as_str()) {
        return Err(SpecError::schema(path, format!("`{s}` is a reserved SQL word")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers() {
        assert!(is_ident("positive_cases"));
        assert!(is_ident("_x1"));
        assert!(!is_ident("1x"));
        assert!(!is_ident("a-b"));
        assert!(!is_ident(""));
        assert!(check_ident("Select", "$").is_err());
        assert!(check_ident("date", "$").is_ok());
    }
}
