//! Result values shared by drivers, the equivalence oracle and tests.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SqlValue {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
}

impl SqlValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            SqlValue::Integer(i) => Some(*i as f64),
            SqlValue::Real(r) => Some(*r),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            SqlValue::Null => 0,
            SqlValue::Integer(_) | SqlValue::Real(_) => 1,
            SqlValue::Text(_) => 2,
        }
    }

    /// Total order used to sort rows before multiset comparison.
    pub fn total_cmp(&self, other: &SqlValue) -> Ordering {
        match (self, other) {
            (SqlValue::Text(a), SqlValue::Text(b)) => a.cmp(b),
            _ => match (self.as_f64(), other.as_f64()) {
                (Some(a), Some(b)) => a.total_cmp(&b),
                _ => self.rank().cmp(&other.rank()),
            },
        }
    }

    /// Equality with a relative tolerance for numbers; integers and reals
    /// compare by value.
    pub fn approx_eq(&self, other: &SqlValue, rel_tol: f64) -> bool {
        match (self, other) {
            (SqlValue::Null, SqlValue::Null) => true,
            (SqlValue::Text(a), SqlValue::Text(b)) => a == b,
            _ => match (self.as_f64(), other.as_f64()) {
                (Some(a), Some(b)) => {
                    a == b || (a - b).abs() <= rel_tol * a.abs().max(b.abs())
                }
                _ => false,
            },
        }
    }
}

impl fmt::Display for SqlValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SqlValue::Null => f.write_str("NULL"),
            SqlValue::Integer(i) => write!(f, "{i}"),
            SqlValue::Real(r) => write!(f, "{r}"),
            SqlValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultSet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<SqlValue>>,
}

impl ResultSet {
    /// Reorder columns to `order` (case-insensitive names). `None` when the
    /// column sets differ.
    pub fn aligned_to(&self, order: &[String]) -> Option<ResultSet> {
        if order.len() != self.columns.len() {
            return None;
        }
        let idx: Option<Vec<usize>> = order
            .iter()
            .map(|name| {
                self.columns
                    .iter()
                    .position(|c| c.eq_ignore_ascii_case(name))
            })
            .collect();
        let idx = idx?;
        Some(ResultSet {
            columns: order.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
                .collect(),
        })
    }

    /// Order-insensitive, column-name-aligned comparison.
    pub fn same_multiset(&self, other: &ResultSet, rel_tol: f64) -> bool {
        let Some(other) = other.aligned_to(&self.columns) else {
            return false;
        };
        if self.rows.len() != other.rows.len() {
            return false;
        }
        let sort = |rows: &[Vec<SqlValue>]| {
            let mut rows = rows.to_vec();
            rows.sort_by(|a, b| cmp_rows(a, b));
            rows
        };
        let (a, b) = (sort(&self.rows), sort(&other.rows));
        a.iter()
            .zip(&b)
            .all(|(x, y)| x.iter().zip(y).all(|(u, v)| u.approx_eq(v, rel_tol)))
    }
}

pub fn cmp_rows(a: &[SqlValue], b: &[SqlValue]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Anything that can run a SELECT and hand back its rows.
pub trait QueryRunner {
    fn fetch(&mut self, sql: &str) -> Result<ResultSet, String>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiset_ignores_row_and_column_order() {
        let a = ResultSet {
            columns: vec!["c".into(), "s".into()],
            rows: vec![
                vec![SqlValue::Text("x".into()), SqlValue::Real(1.0)],
                vec![SqlValue::Text("y".into()), SqlValue::Null],
            ],
        };
        let b = ResultSet {
            columns: vec!["S".into(), "c".into()],
            rows: vec![
                vec![SqlValue::Null, SqlValue::Text("y".into())],
                vec![SqlValue::Integer(1), SqlValue::Text("x".into())],
            ],
        };
        assert!(a.same_multiset(&b, 0.0));
        let mut c = b.clone();
        c.rows.pop();
        assert!(!a.same_multiset(&c, 0.0));
    }

    #[test]
    fn tolerance_is_relative() {
        assert!(SqlValue::Real(1e10).approx_eq(&SqlValue::Real(1e10 + 1.0), 1e-9));
        assert!(!SqlValue::Real(1.0).approx_eq(&SqlValue::Real(1.001), 1e-9));
    }
}
