use std::fmt;

/// Where in a document a problem was found: a JSON path, a line number, or both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub line: Option<usize>,
    pub path: String,
}

impl Location {
    pub fn path(path: impl Into<String>) -> Self {
        Location {
            line: None,
            path: path.into(),
        }
    }

    pub fn line(line: usize) -> Self {
        Location {
            line: Some(line),
            path: String::new(),
        }
    }

    pub fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.path.is_empty()) {
            (Some(line), true) => write!(f, "line {line}"),
            (Some(line), false) => write!(f, "line {line}, {}", self.path),
            (None, false) => f.write_str(&self.path),
            (None, true) => f.write_str("$"),
        }
    }
}

/// Categorised validation failure for any of the three specification documents.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("syntax error at {at}: {message}")]
    Syntax { at: Location, message: String },
    #[error("schema error at {at}: {message}")]
    Schema { at: Location, message: String },
    #[error("dangling reference at {at}: {message}")]
    DanglingReference { at: Location, message: String },
    #[error("ill-formed event at {at}: {message}")]
    IllFormedEvent { at: Location, message: String },
    #[error("unsupported predicate at {at}: {message}")]
    UnsupportedPredicate { at: Location, message: String },
}

impl SpecError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        SpecError::Schema {
            at: Location::path(path),
            message: message.into(),
        }
    }

    pub fn dangling(path: impl Into<String>, message: impl Into<String>) -> Self {
        SpecError::DanglingReference {
            at: Location::path(path),
            message: message.into(),
        }
    }

    pub fn location(&self) -> &Location {
        match self {
            SpecError::Syntax { at, .. }
            | SpecError::Schema { at, .. }
            | SpecError::DanglingReference { at, .. }
            | SpecError::IllFormedEvent { at, .. }
            | SpecError::UnsupportedPredicate { at, .. } => at,
        }
    }

    /// Short category name, stable for reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            SpecError::Syntax { .. } => "syntax",
            SpecError::Schema { .. } => "schema",
            SpecError::DanglingReference { .. } => "dangling_reference",
            SpecError::IllFormedEvent { .. } => "ill_formed_event",
            SpecError::UnsupportedPredicate { .. } => "unsupported_predicate",
        }
    }

    pub(crate) fn with_line(self, line: usize) -> Self {
        match self {
            SpecError::Syntax { at, message } => SpecError::Syntax {
                at: at.at_line(line),
                message,
            },
            SpecError::Schema { at, message } => SpecError::Schema {
                at: at.at_line(line),
                message,
            },
            SpecError::DanglingReference { at, message } => SpecError::DanglingReference {
                at: at.at_line(line),
                message,
            },
            SpecError::IllFormedEvent { at, message } => SpecError::IllFormedEvent {
                at: at.at_line(line),
                message,
            },
            SpecError::UnsupportedPredicate { at, message } => SpecError::UnsupportedPredicate {
                at: at.at_line(line),
                message,
            },
        }
    }
}

/// Deserialize `text` into `T`, mapping serde failures onto `Syntax` or `Schema`
/// errors that carry the JSON path of the offending value.
pub(crate) fn from_json_str<'de, T: serde::Deserialize<'de>>(text: &'de str) -> Result<T, SpecError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(map_path_error)?;
    de.end().map_err(|e| SpecError::Syntax {
        at: Location::path("$"),
        message: e.to_string(),
    })?;
    Ok(value)
}

pub(crate) fn from_json_value<T: serde::de::DeserializeOwned>(
    value: serde_json::Value,
) -> Result<T, SpecError> {
    serde_path_to_error::deserialize(value).map_err(map_path_error)
}

fn map_path_error(err: serde_path_to_error::Error<serde_json::Error>) -> SpecError {
    let path = json_path(&err.path().to_string());
    let inner = err.into_inner();
    match inner.classify() {
        serde_json::error::Category::Syntax | serde_json::error::Category::Eof => {
            SpecError::Syntax {
                at: Location::path(path),
                message: inner.to_string(),
            }
        }
        _ => SpecError::Schema {
            at: Location::path(path),
            message: strip_position(&inner.to_string()),
        },
    }
}

fn json_path(p: &str) -> String {
    if p == "." || p.is_empty() {
        "$".to_string()
    } else {
        format!("$.{p}")
    }
}

fn strip_position(message: &str) -> String {
    match message.find(" at line ") {
        Some(idx) => message[..idx].to_string(),
        None => message.to_string(),
    }
}
