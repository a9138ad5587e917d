use std::io::Read;

use vizbench_core::simulate::{Domain, Domains};
use vizbench_core::spec::{AttributeKind, AttributeRef, DatabaseSpec};

use crate::driver::{Connection, DriverError};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("table `{0}` is not declared in the database spec")]
    UnknownTable(String),
    #[error("CSV header does not match table `{table}`: {message} `{column}`")]
    HeaderMismatch {
        table: String,
        column: String,
        message: &'static str,
    },
    #[error("CSV line {line}, column `{column}`: `{value}` is not a number")]
    BadNumber { line: u64, column: String, value: String },
    #[error("reading CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Driver(#[from] DriverError),
}

const INSERT_CHUNK: usize = 500;

fn quote_text(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

/// Replace `table` with the rows of a headered CSV. Columns may appear in any
/// order but must match the declared attributes exactly. Empty cells load as
/// NULL. Returns the number of rows loaded.
pub fn load_dataset(
    conn: &mut dyn Connection,
    db: &DatabaseSpec,
    table: &str,
    csv_data: impl Read,
) -> Result<usize, LoadError> {
    let spec = db.tables.get(table).ok_or_else(|| LoadError::UnknownTable(table.to_string()))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(csv_data);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mismatch = |column: &str, message| LoadError::HeaderMismatch {
        table: table.to_string(),
        column: column.to_string(),
        message,
    };
    for (i, h) in header.iter().enumerate() {
        if !spec.attributes.contains_key(h) {
            return Err(mismatch(h, "unexpected column"));
        }
        if header[..i].contains(h) {
            return Err(mismatch(h, "duplicate column"));
        }
    }
    if let Some(missing) = spec.attributes.keys().find(|a| !header.contains(a)) {
        return Err(mismatch(missing, "missing column"));
    }
    let order: Vec<(usize, AttributeKind, &String)> = spec
        .attributes
        .iter()
        .map(|(a, k)| (header.iter().position(|h| h == a).unwrap(), *k, a))
        .collect();

    let mut tuples = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut cells = Vec::with_capacity(order.len());
        for &(idx, kind, name) in &order {
            let raw = record.get(idx).unwrap_or("");
            let cell = if raw.is_empty() {
                "NULL".to_string()
            } else if kind == AttributeKind::Numerical {
                let v: f64 = raw.trim().parse().map_err(|_| LoadError::BadNumber {
                    line,
                    column: name.clone(),
                    value: raw.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(LoadError::BadNumber {
                        line,
                        column: name.clone(),
                        value: raw.to_string(),
                    });
                }
                format!("{v:?}")
            } else {
                quote_text(raw)
            };
            cells.push(cell);
        }
        tuples.push(format!("({})", cells.join(", ")));
    }

    let columns: Vec<String> = spec
        .attributes
        .iter()
        .map(|(a, k)| {
            let ty = match k {
                AttributeKind::Categorical => "TEXT",
                AttributeKind::Numerical => "DOUBLE PRECISION",
            };
            format!("{a} {ty}")
        })
        .collect();
    conn.execute_batch(&format!("DROP TABLE IF EXISTS {table}; CREATE TABLE {table} ({});", columns.join(", ")))?;
    let names: Vec<&str> = spec.attributes.keys().map(String::as_str).collect();
    let mut sql = String::from("BEGIN;\n");
    for chunk in tuples.chunks(INSERT_CHUNK) {
        sql.push_str(&format!("INSERT INTO {table} ({}) VALUES {};\n", names.join(", "), chunk.join(", ")));
    }
    sql.push_str("COMMIT;");
    if let Err(e) = conn.execute_batch(&sql) {
        let _ = conn.execute_batch("ROLLBACK;");
        return Err(e.into());
    }
    Ok(tuples.len())
}

/// Observed domains of every declared attribute: distinct non-null values
/// for categorical attributes, MIN and MAX for numerical ones. Attributes
/// with no non-null values are left out.
pub fn sample_domains(conn: &mut dyn Connection, db: &DatabaseSpec) -> Result<Domains, DriverError> {
    let mut out = Domains::new();
    for (table, spec) in &db.tables {
        for (attr, kind) in &spec.attributes {
            let key = AttributeRef::new(table.clone(), attr.clone());
            match kind {
                AttributeKind::Categorical => {
                    let rs = conn.execute(&format!(
                        "SELECT DISTINCT {attr} FROM {table} WHERE {attr} IS NOT NULL ORDER BY {attr}"
                    ))?;
                    let values: Vec<String> = rs.rows.into_iter().filter_map(|r| r.into_iter().next()).map(|v| v.to_string()).collect();
                    if !values.is_empty() {
                        out.insert(key, Domain::Categorical { values });
                    }
                }
                AttributeKind::Numerical => {
                    let rs = conn.execute(&format!("SELECT MIN({attr}), MAX({attr}) FROM {table}"))?;
                    if let Some([lo, hi]) = rs.rows.first().map(Vec::as_slice) {
                        if let (Some(min), Some(max)) = (lo.as_f64(), hi.as_f64()) {
                            out.insert(key, Domain::Numeric { min, max });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
