//! Brute-force evaluation of a view's field list and filters over in-memory
//! rows. Written against the predicate and field model directly, never
//! against generated SQL, so it can judge the compiler.

use std::cmp::Ordering;

use vizbench_core::graph::Node;
use vizbench_core::spec::{
    Aggregation, AttributeKind, DatabaseSpec, FieldSpec, FieldTest, Literal, Predicate,
};
use vizbench_core::value::{ResultSet, SqlValue};

/// Rows of one table, columns in database-spec order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<(String, AttributeKind)>,
    pub rows: Vec<Vec<SqlValue>>,
}

impl Table {
    pub fn empty(db: &DatabaseSpec, name: &str) -> Table {
        let spec = &db.tables[name];
        Table {
            name: name.to_string(),
            columns: spec
                .attributes
                .iter()
                .map(|(a, k)| (a.clone(), *k))
                .collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(c, _)| c == name)
    }

    /// CSV with a header row; NULL becomes an empty cell.
    pub fn to_csv(&self) -> String {
        let mut out = self
            .columns
            .iter()
            .map(|(c, _)| c.as_str())
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    SqlValue::Null => String::new(),
                    SqlValue::Text(s) if s.contains([',', '"', '\n']) => {
                        format!("\"{}\"", s.replace('"', "\"\""))
                    }
                    other => other.to_string(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Kleene three-valued truth: `None` is UNKNOWN.
type Truth = Option<bool>;

fn cmp_literal(v: &SqlValue, lit: &Literal) -> Option<Ordering> {
    match (v, lit) {
        (SqlValue::Null, _) => None,
        (SqlValue::Text(a), Literal::Text(b)) => Some(a.as_str().cmp(b.as_str())),
        (_, Literal::Number(n)) => v.as_f64()?.partial_cmp(&n.as_f64()?),
        _ => None,
    }
}

fn test_value(v: &SqlValue, test: &FieldTest) -> Truth {
    if let FieldTest::Valid = test {
        return Some(!matches!(v, SqlValue::Null));
    }
    if matches!(v, SqlValue::Null) {
        return None;
    }
    let c = |lit: &Literal| cmp_literal(v, lit);
    Some(match test {
        FieldTest::Equal(l) => c(l)? == Ordering::Equal,
        FieldTest::Lt(l) => c(l)? == Ordering::Less,
        FieldTest::Lte(l) => c(l)? != Ordering::Greater,
        FieldTest::Gt(l) => c(l)? == Ordering::Greater,
        FieldTest::Gte(l) => c(l)? != Ordering::Less,
        FieldTest::Range(lo, hi) => c(lo)? != Ordering::Less && c(hi)? != Ordering::Greater,
        FieldTest::OneOf(ls) => {
            let mut any_unknown = false;
            for l in ls {
                match c(l) {
                    Some(Ordering::Equal) => return Some(true),
                    Some(_) => {}
                    None => any_unknown = true,
                }
            }
            if any_unknown {
                return None;
            }
            false
        }
        FieldTest::Valid => unreachable!(),
    })
}

pub fn eval(p: &Predicate, table: &Table, row: &[SqlValue]) -> Truth {
    match p {
        Predicate::Field(fp) => {
            let idx = table.column(&fp.field).expect("filter on unknown column");
            test_value(&row[idx], &fp.test)
        }
        Predicate::Not(inner) => eval(inner, table, row).map(|b| !b),
        Predicate::And(ps) => {
            let mut acc = Some(true);
            for p in ps {
                match eval(p, table, row) {
                    Some(false) => return Some(false),
                    None => acc = None,
                    Some(true) => {}
                }
            }
            acc
        }
        Predicate::Or(ps) => {
            let mut acc = Some(false);
            for p in ps {
                match eval(p, table, row) {
                    Some(true) => return Some(true),
                    None => acc = None,
                    Some(false) => {}
                }
            }
            acc
        }
    }
}

fn aggregate(agg: Aggregation, values: &[&SqlValue]) -> SqlValue {
    let nums: Vec<f64> = values.iter().filter_map(|v| v.as_f64()).collect();
    let non_null = values.iter().filter(|v| !matches!(v, SqlValue::Null)).count();
    match agg {
        Aggregation::Count => SqlValue::Integer(non_null as i64),
        _ if nums.is_empty() => SqlValue::Null,
        Aggregation::Sum => SqlValue::Real(nums.iter().sum()),
        Aggregation::Avg => SqlValue::Real(nums.iter().sum::<f64>() / nums.len() as f64),
        Aggregation::Min => SqlValue::Real(nums.iter().copied().fold(f64::INFINITY, f64::min)),
        Aggregation::Max => SqlValue::Real(nums.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    }
}

/// Evaluate `fields` over rows passing every filter.
///
/// * no aggregates: one output row per input row,
/// * aggregates only: exactly one row, even over no input,
/// * both: one row per distinct combination of the plain fields (NULLs form
///   one group).
pub fn evaluate<'a>(
    table: &Table,
    fields: &[FieldSpec],
    filters: impl IntoIterator<Item = &'a Predicate>,
) -> ResultSet {
    let filters: Vec<&Predicate> = filters.into_iter().collect();
    let kept: Vec<&Vec<SqlValue>> = table
        .rows
        .iter()
        .filter(|r| filters.iter().all(|p| eval(p, table, r) == Some(true)))
        .collect();
    let col = |f: &FieldSpec| table.column(&f.attribute.attribute).expect("unknown field");
    let plain: Vec<usize> = fields.iter().filter(|f| f.aggregation.is_none()).map(col).collect();
    let aggs: Vec<(Aggregation, usize)> = fields
        .iter()
        .filter_map(|f| Some((f.aggregation?, col(f))))
        .collect();
    let mut columns: Vec<String> = fields
        .iter()
        .filter(|f| f.aggregation.is_none())
        .map(|f| f.attribute.attribute.clone())
        .collect();
    columns.extend(fields.iter().filter(|f| f.aggregation.is_some()).map(|f| f.output_name()));

    let rows = if aggs.is_empty() {
        kept.iter()
            .map(|r| plain.iter().map(|&i| r[i].clone()).collect())
            .collect()
    } else {
        let mut groups: Vec<(Vec<SqlValue>, Vec<&Vec<SqlValue>>)> = Vec::new();
        if plain.is_empty() {
            groups.push((Vec::new(), kept.clone()));
        } else {
            for r in &kept {
                let key: Vec<SqlValue> = plain.iter().map(|&i| r[i].clone()).collect();
                match groups.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, members)) => members.push(r),
                    None => groups.push((key, vec![r])),
                }
            }
        }
        groups
            .into_iter()
            .map(|(mut key, members)| {
                for &(agg, i) in &aggs {
                    let vals: Vec<&SqlValue> = members.iter().map(|r| &r[i]).collect();
                    key.push(aggregate(agg, &vals));
                }
                key
            })
            .collect()
    };
    ResultSet { columns, rows }
}

/// Fields a node requests at a detail level: its own fields at level 0;
/// at level k the attributes of `levels[k-1]` (if declared) plus the node's
/// aggregates, or a COUNT of its first field when it aggregates nothing.
pub fn fields_at_level(node: &Node, level: usize) -> Vec<FieldSpec> {
    let own: Vec<FieldSpec> = if node.roles.visualization {
        node.fields.clone()
    } else {
        node.widget
            .iter()
            .flat_map(|w| w.attributes.iter().cloned().map(FieldSpec::plain))
            .collect()
    };
    if level == 0 || own.is_empty() {
        return own;
    }
    let mut out: Vec<FieldSpec> = Vec::new();
    if let Some(attrs) = node.levels.get(level - 1) {
        for a in attrs {
            let f = FieldSpec::plain(a.clone());
            if !out.contains(&f) {
                out.push(f);
            }
        }
    }
    let measures: Vec<FieldSpec> = own.iter().filter(|f| f.aggregation.is_some()).cloned().collect();
    if measures.is_empty() {
        out.push(FieldSpec::aggregated(own[0].attribute.clone(), Aggregation::Count));
    } else {
        out.extend(measures);
    }
    out
}

/// What the node's query at `level` should return over `table`.
pub fn node_result(table: &Table, node: &Node, level: usize) -> ResultSet {
    evaluate(table, &fields_at_level(node, level), node.filters.values())
}
