use crate::graph::Node;
use crate::spec::{Aggregation, FieldSpec, FieldTest, Literal, Predicate};

use super::CompileError;

/// Quote a literal for the shared SQLite / DuckDB / PostgreSQL dialect.
pub fn sql_literal(lit: &Literal) -> String {
    match lit {
        Literal::Number(n) => n.to_string(),
        Literal::Text(s) => format!("'{}'", s.replace('\'', "''")),
    }
}

/// Translate a filter predicate into a SQL boolean expression.
pub fn translate_predicate(p: &Predicate) -> String {
    match p {
        Predicate::Field(fp) => {
            let col = &fp.field;
            match &fp.test {
                FieldTest::Equal(v) => format!("{col} = {}", sql_literal(v)),
                FieldTest::Lt(v) => format!("{col} < {}", sql_literal(v)),
                FieldTest::Lte(v) => format!("{col} <= {}", sql_literal(v)),
                FieldTest::Gt(v) => format!("{col} > {}", sql_literal(v)),
                FieldTest::Gte(v) => format!("{col} >= {}", sql_literal(v)),
                FieldTest::Range(lo, hi) => {
                    format!("{col} BETWEEN {} AND {}", sql_literal(lo), sql_literal(hi))
                }
                FieldTest::OneOf(vs) => format!(
                    "{col} IN ({})",
                    vs.iter().map(sql_literal).collect::<Vec<_>>().join(", ")
                ),
                FieldTest::Valid => format!("{col} IS NOT NULL"),
            }
        }
        Predicate::And(cs) => compose(cs, " AND "),
        Predicate::Or(cs) => compose(cs, " OR "),
        Predicate::Not(c) => format!("NOT ({})", translate_predicate(c)),
    }
}

fn compose(children: &[Predicate], op: &str) -> String {
    let parts: Vec<String> = children.iter().map(translate_predicate).collect();
    format!("({})", parts.join(op))
}

/// Fields a node selects at detail level 0.
pub(crate) fn base_fields(node: &Node) -> Result<Vec<FieldSpec>, CompileError> {
    if node.roles.visualization && !node.fields.is_empty() {
        return Ok(node.fields.clone());
    }
    match &node.widget {
        Some(w) if w.data_backed && !w.attributes.is_empty() => {
            Ok(w.attributes.iter().cloned().map(FieldSpec::plain).collect())
        }
        _ => Err(CompileError::EmptyFieldList(node.name.clone())),
    }
}

/// Fields for a coarser detail level: the configured grouping attributes plus
/// the node's aggregates (or a row count when the node aggregates nothing).
pub(crate) fn level_fields(node: &Node, level: usize) -> Result<Vec<FieldSpec>, CompileError> {
    let base = base_fields(node)?;
    if level == 0 {
        return Ok(base);
    }
    let mut out: Vec<FieldSpec> = Vec::new();
    for attr in node.levels.get(level - 1).into_iter().flatten() {
        let f = FieldSpec::plain(attr.clone());
        if !out.contains(&f) {
            out.push(f);
        }
    }
    let measures: Vec<FieldSpec> = base.iter().filter(|f| f.aggregation.is_some()).cloned().collect();
    if measures.is_empty() {
        out.push(FieldSpec::aggregated(base[0].attribute.clone(), Aggregation::Count));
    } else {
        out.extend(measures);
    }
    Ok(out)
}

/// Assemble the single-table SELECT for a field list and filter set.
///
/// Plain fields come first in declaration order, then aggregates as
/// `AGG(col) AS agg_col`. The WHERE clause conjoins filters in iteration
/// order; GROUP BY lists the plain fields and appears only when something is
/// aggregated.
pub(crate) fn assemble<'a>(
    fields: &[FieldSpec],
    filters: impl IntoIterator<Item = &'a Predicate>,
) -> Result<String, CompileError> {
    let first = fields
        .first()
        .ok_or_else(|| CompileError::EmptyFieldList(String::new()))?;
    let plain: Vec<&str> = fields
        .iter()
        .filter(|f| f.aggregation.is_none())
        .map(|f| f.attribute.attribute.as_str())
        .collect();
    let aggregates: Vec<String> = fields
        .iter()
        .filter_map(|f| {
            f.aggregation.map(|agg| {
                format!("{}({}) AS {}", agg.sql_name(), f.attribute.attribute, f.output_name())
            })
        })
        .collect();
    let select: Vec<&str> = plain
        .iter()
        .copied()
        .chain(aggregates.iter().map(String::as_str))
        .collect();
    let mut sql = format!("SELECT {} FROM {}", select.join(", "), first.attribute.table);
    let conjuncts: Vec<String> = filters.into_iter().map(translate_predicate).collect();
    if !conjuncts.is_empty() {
        sql.push_str(" WHERE ");
        sql.push_str(&conjuncts.join(" AND "));
    }
    if !aggregates.is_empty() && !plain.is_empty() {
        sql.push_str(" GROUP BY ");
        sql.push_str(&plain.join(", "));
    }
    Ok(sql)
}

/// SQL for a node's current state at detail level 0.
pub fn compile_node(node: &Node) -> Result<String, CompileError> {
    compile_node_at_level(node, 0)
}

pub fn compile_node_at_level(node: &Node, level: usize) -> Result<String, CompileError> {
    let fields = level_fields(node, level)?;
    assemble(&fields, node.filters.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Roles, WidgetRole};
    use crate::spec::{AttributeRef, WidgetClass};
    use serde_json::json;
    use std::collections::BTreeMap;

    fn attr(a: &str) -> AttributeRef {
        AttributeRef::new("covid", a)
    }

    fn viz(fields: Vec<FieldSpec>) -> Node {
        Node {
            name: "v".into(),
            roles: Roles {
                widget: false,
                visualization: true,
            },
            fields,
            levels: vec![],
            filters: BTreeMap::new(),
            widget: None,
            wildcard: None,
        }
    }

    fn pred(v: serde_json::Value) -> Predicate {
        Predicate::from_json(&v, "$").unwrap()
    }

    #[test]
    fn aggregated_node() {
        let n = viz(vec![
            FieldSpec::plain(attr("county")),
            FieldSpec::aggregated(attr("positive_cases"), Aggregation::Sum),
        ]);
        assert_eq!(
            compile_node(&n).unwrap(),
            "SELECT county, SUM(positive_cases) AS sum_positive_cases FROM covid GROUP BY county"
        );
    }

    #[test]
    fn plain_node() {
        let n = viz(vec![FieldSpec::plain(attr("date"))]);
        assert_eq!(compile_node(&n).unwrap(), "SELECT date FROM covid");
    }

    #[test]
    fn filtered_node() {
        let mut n = viz(vec![
            FieldSpec::plain(attr("county")),
            FieldSpec::aggregated(attr("positive_cases"), Aggregation::Sum),
        ]);
        n.filters.insert("r".into(), pred(json!({"field":"county","equal":"Montgomery"})));
        assert_eq!(
            compile_node(&n).unwrap(),
            "SELECT county, SUM(positive_cases) AS sum_positive_cases FROM covid WHERE county = 'Montgomery' GROUP BY county"
        );
    }

    #[test]
    fn aggregates_follow_plain_fields() {
        let n = viz(vec![
            FieldSpec::aggregated(attr("deaths"), Aggregation::Max),
            FieldSpec::plain(attr("county")),
            FieldSpec::aggregated(attr("deaths"), Aggregation::Avg),
        ]);
        assert_eq!(
            compile_node(&n).unwrap(),
            "SELECT county, MAX(deaths) AS max_deaths, AVG(deaths) AS avg_deaths FROM covid GROUP BY county"
        );
    }

    #[test]
    fn filters_ordered_by_relationship_name() {
        let mut n = viz(vec![FieldSpec::plain(attr("date"))]);
        n.filters.insert("zeta".into(), pred(json!({"field":"a","equal":1})));
        n.filters.insert("alpha".into(), pred(json!({"field":"b","equal":2})));
        assert_eq!(compile_node(&n).unwrap(), "SELECT date FROM covid WHERE b = 2 AND a = 1");
    }

    #[test]
    fn predicate_translation() {
        assert_eq!(
            translate_predicate(&pred(json!({"field":"longitude","range":[-79.5,-75.0]}))),
            "longitude BETWEEN -79.5 AND -75.0"
        );
        assert_eq!(
            translate_predicate(&pred(json!({"field":"county","oneOf":["Baltimore","Montgomery"]}))),
            "county IN ('Baltimore', 'Montgomery')"
        );
        assert_eq!(
            translate_predicate(&pred(json!({"not":{"field":"deaths","valid":true}}))),
            "NOT (deaths IS NOT NULL)"
        );
        assert_eq!(
            translate_predicate(&pred(json!({"or":[{"field":"x","lt":1},{"field":"x","gte":5}]}))),
            "(x < 1 OR x >= 5)"
        );
        assert_eq!(
            translate_predicate(&pred(json!({"field":"x","lte":2.5}))),
            "x <= 2.5"
        );
        assert_eq!(translate_predicate(&pred(json!({"field":"x","gt":-3}))), "x > -3");
    }

    #[test]
    fn quotes_are_doubled() {
        assert_eq!(
            translate_predicate(&pred(json!({"field":"county","equal":"Prince George's"}))),
            "county = 'Prince George''s'"
        );
    }

    #[test]
    fn coarser_levels() {
        let mut n = viz(vec![
            FieldSpec::plain(attr("county")),
            FieldSpec::plain(attr("date")),
            FieldSpec::aggregated(attr("value"), Aggregation::Sum),
        ]);
        assert_eq!(compile_node_at_level(&n, 1).unwrap(), "SELECT SUM(value) AS sum_value FROM covid");
        n.levels = vec![vec![attr("state")]];
        assert_eq!(
            compile_node_at_level(&n, 1).unwrap(),
            "SELECT state, SUM(value) AS sum_value FROM covid GROUP BY state"
        );
        let plain = viz(vec![FieldSpec::plain(attr("longitude")), FieldSpec::plain(attr("latitude"))]);
        assert_eq!(
            compile_node_at_level(&plain, 1).unwrap(),
            "SELECT COUNT(longitude) AS count_longitude FROM covid"
        );
    }

    #[test]
    fn pure_widget_needs_data_backing() {
        let mut n = viz(vec![]);
        n.roles = Roles {
            widget: true,
            visualization: false,
        };
        n.widget = Some(WidgetRole {
            class: WidgetClass::DropdownList,
            attributes: vec![attr("county")],
            data_backed: false,
        });
        assert!(matches!(compile_node(&n), Err(CompileError::EmptyFieldList(_))));
        n.widget.as_mut().unwrap().data_backed = true;
        assert_eq!(compile_node(&n).unwrap(), "SELECT county FROM covid");
    }
}
