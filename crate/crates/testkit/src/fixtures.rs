//! The COVID linked-view dashboard and the synthetic Tableau log, shared by
//! tests in every crate. Files live in the workspace `fixtures/` directory.

use std::path::PathBuf;

use vizbench_core::spec::{
    parse_database_spec, parse_interaction_log, parse_interface_spec, DatabaseSpec, InteractionEvent,
    InterfaceSpec,
};
use vizbench_core::value::SqlValue;

use crate::oracle::Table;

pub const COVID_DATABASE: &str = include_str!("../../../fixtures/covid/database.json");
pub const COVID_INTERFACE: &str = include_str!("../../../fixtures/covid/interface.json");
pub const COVID_CSV: &str = include_str!("../../../fixtures/covid/covid.csv");
pub const COVID_CLICKS: &str = include_str!("../../../fixtures/covid/clicks.jsonl");
pub const COVID_DOMAINS: &str = include_str!("../../../fixtures/covid/domains.json");
pub const COVID_MODEL: &str = include_str!("../../../fixtures/covid/model.json");

pub const TABLEAU_DATABASE: &str = include_str!("../../../fixtures/tableau/database.json");
pub const TABLEAU_INTERFACE: &str = include_str!("../../../fixtures/tableau/interface.json");
pub const TABLEAU_ADAPTER: &str = include_str!("../../../fixtures/tableau/adapter.json");
pub const TABLEAU_VALUE_MAP: &str = include_str!("../../../fixtures/tableau/value_map.json");
pub const TABLEAU_LOG: &str = include_str!("../../../fixtures/tableau/log.jsonl");

/// Absolute path of a file under `fixtures/`.
pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn covid_database() -> DatabaseSpec {
    parse_database_spec(COVID_DATABASE).expect("covid database fixture")
}

pub fn covid_interface() -> InterfaceSpec {
    parse_interface_spec(COVID_INTERFACE, &covid_database()).expect("covid interface fixture")
}

pub fn covid_clicks() -> Vec<InteractionEvent> {
    parse_interaction_log(COVID_CLICKS, &covid_interface()).expect("covid clicks fixture")
}

pub fn tableau_interface() -> InterfaceSpec {
    let db = parse_database_spec(TABLEAU_DATABASE).expect("tableau database fixture");
    parse_interface_spec(TABLEAU_INTERFACE, &db).expect("tableau interface fixture")
}

/// Parse CSV text (header row, no quoting) into a table typed by `db`.
/// Empty cells become NULL.
pub fn table_from_csv(db: &DatabaseSpec, table: &str, csv: &str) -> Table {
    let mut t = Table::empty(db, table);
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().expect("csv header").split(',').collect();
    let order: Vec<usize> = t
        .columns
        .iter()
        .map(|(c, _)| header.iter().position(|h| h == c).expect("csv column"))
        .collect();
    for line in lines.filter(|l| !l.is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        let row = t
            .columns
            .iter()
            .zip(&order)
            .map(|((_, kind), &i)| {
                let cell = cells[i];
                if cell.is_empty() {
                    SqlValue::Null
                } else if *kind == vizbench_core::spec::AttributeKind::Numerical {
                    SqlValue::Real(cell.parse().expect("numeric cell"))
                } else {
                    SqlValue::Text(cell.to_string())
                }
            })
            .collect();
        t.rows.push(row);
    }
    t
}

pub fn covid_table() -> Table {
    table_from_csv(&covid_database(), "covid", COVID_CSV)
}
