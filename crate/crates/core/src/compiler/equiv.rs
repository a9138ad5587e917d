//! SQL equivalence for the compiler's dialect subset.
//!
//! Two stages: statements are first parsed and rewritten into a normal form
//! (keyword case, whitespace, commutative AND/OR operands, GROUP BY columns
//! and IN lists sorted). Equal normal forms are equivalent. Otherwise, when a
//! database is available, both statements run and their result multisets
//! are compared. Without a database the verdict is `Unknown`.

use std::fmt;

use serde::Serialize;

use crate::spec::Aggregation;
use crate::value::QueryRunner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Equivalence {
    Equivalent,
    NotEquivalent,
    Unknown,
}

impl fmt::Display for Equivalence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equivalence::Equivalent => "equivalent",
            Equivalence::NotEquivalent => "not_equivalent",
            Equivalence::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EquivError {
    #[error("statement outside the supported dialect at offset {offset}: {message}")]
    Dialect { offset: usize, message: String },
    #[error("executing statement: {0}")]
    Execution(String),
}

const REL_TOL: f64 = 1e-9;

pub fn sql_equivalent(
    a: &str,
    b: &str,
    db: Option<&mut dyn QueryRunner>,
) -> Result<Equivalence, EquivError> {
    let na = normalize_sql(a)?;
    let nb = normalize_sql(b)?;
    if na == nb {
        return Ok(Equivalence::Equivalent);
    }
    let Some(db) = db else {
        return Ok(Equivalence::Unknown);
    };
    let ra = db.fetch(a).map_err(EquivError::Execution)?;
    let rb = db.fetch(b).map_err(EquivError::Execution)?;
    Ok(if ra.same_multiset(&rb, REL_TOL) {
        Equivalence::Equivalent
    } else {
        Equivalence::NotEquivalent
    })
}

/// Canonical text of a statement in the supported subset.
pub fn normalize_sql(sql: &str) -> Result<String, EquivError> {
    let mut stmt = SelectStmt::parse(sql)?;
    stmt.normalize();
    Ok(stmt.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Word(String),
    Number(String),
    Str(String),
    Sym(&'static str),
}

fn tokenize(sql: &str) -> Result<Vec<(usize, Token)>, EquivError> {
    let bytes = sql.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Token::Word(sql[start..i].to_string())));
        } else if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                i += 1;
                if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                    i += 1;
                }
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            out.push((start, Token::Number(sql[start..i].to_string())));
        } else if c == '\'' {
            let mut value = String::new();
            i += 1;
            loop {
                match sql[i..].find('\'') {
                    None => {
                        return Err(EquivError::Dialect {
                            offset: start,
                            message: "unterminated string literal".into(),
                        })
                    }
                    Some(rel) => {
                        value.push_str(&sql[i..i + rel]);
                        i += rel + 1;
                        if bytes.get(i) == Some(&b'\'') {
                            value.push('\'');
                            i += 1;
                        } else {
                            break;
                        }
                    }
                }
            }
            out.push((start, Token::Str(value)));
        } else {
            let two = sql.get(i..i + 2);
            let sym = match two {
                Some("<=") => Some("<="),
                Some(">=") => Some(">="),
                Some("<>") | Some("!=") => Some("<>"),
                _ => None,
            };
            if let Some(s) = sym {
                out.push((start, Token::Sym(s)));
                i += 2;
                continue;
            }
            let s = match c {
                '(' => "(",
                ')' => ")",
                ',' => ",",
                '*' => "*",
                '=' => "=",
                '<' => "<",
                '>' => ">",
                '-' => "-",
                ';' => ";",
                _ => {
                    return Err(EquivError::Dialect {
                        offset: start,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            };
            out.push((start, Token::Sym(s)));
            i += 1;
        }
    }
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "AND", "OR", "NOT", "BETWEEN", "IN", "IS", "NULL",
    "AS",
];

const UNSUPPORTED: &[&str] = &[
    "JOIN", "HAVING", "ORDER", "LIMIT", "OFFSET", "DISTINCT", "UNION", "WITH", "OVER", "CASE",
    "LIKE", "EXISTS", "INNER", "LEFT", "RIGHT", "FULL", "CROSS", "INTERSECT", "EXCEPT",
];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Lit {
    Number(String),
    Text(String),
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lit::Number(n) => f.write_str(n),
            Lit::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum SelectItem {
    Column(String),
    Aggregate {
        func: Aggregation,
        arg: Option<String>,
        alias: Option<String>,
    },
}

impl fmt::Display for SelectItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectItem::Column(c) => f.write_str(c),
            SelectItem::Aggregate { func, arg, alias } => {
                write!(f, "{}({})", func.sql_name(), arg.as_deref().unwrap_or("*"))?;
                if let Some(a) = alias {
                    write!(f, " AS {a}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Expr {
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
    Compare { column: String, op: &'static str, value: Lit },
    Between { column: String, low: Lit, high: Lit },
    In { column: String, negated: bool, values: Vec<Lit> },
    IsNull { column: String, negated: bool },
}

impl Expr {
    fn normalize(&mut self) {
        match self {
            Expr::And(children) => *self = Expr::commutative(std::mem::take(children), true),
            Expr::Or(children) => *self = Expr::commutative(std::mem::take(children), false),
            Expr::Not(inner) => inner.normalize(),
            Expr::In { values, .. } => values.sort(),
            _ => {}
        }
    }

    /// Flatten nested same-operator operands and sort them by their text.
    fn commutative(children: Vec<Expr>, is_and: bool) -> Expr {
        let mut flat = Vec::with_capacity(children.len());
        for mut c in children {
            c.normalize();
            match c {
                Expr::And(inner) if is_and => flat.extend(inner),
                Expr::Or(inner) if !is_and => flat.extend(inner),
                other => flat.push(other),
            }
        }
        flat.sort_by_cached_key(|e| e.to_string());
        match (flat.len(), is_and) {
            (1, _) => flat.pop().unwrap(),
            (_, true) => Expr::And(flat),
            (_, false) => Expr::Or(flat),
        }
    }

    fn fmt_operand(&self,f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::And(_) | Expr::Or(_) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::And(cs) | Expr::Or(cs) => {
                let op = if matches!(self, Expr::And(_)) { " AND " } else { " OR " };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    c.fmt_operand(f)?;
                }
                Ok(())
            }
            Expr::Not(c) => write!(f, "NOT ({c})"),
            Expr::Compare { column, op, value } => write!(f, "{column} {op} {value}"),
            Expr::Between { column, low, high } => write!(f, "{column} BETWEEN {low} AND {high}"),
            Expr::In { column, negated, values } => {
                let list: Vec<String> = values.iter().map(Lit::to_string).collect();
                let not = if *negated { " NOT" } else { "" };
                write!(f, "{column}{not} IN ({})", list.join(", "))
            }
            Expr::IsNull { column, negated } => {
                write!(f, "{column} IS {}NULL", if *negated { "NOT " } else { "" })
            }
        }
    }
}

/// Parsed single-table SELECT.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectStmt {
    items: Vec<SelectItem>,
    table: String,
    filter: Option<Expr>,
    group_by: Vec<String>,
}

impl SelectStmt {
    pub fn parse(sql: &str) -> Result<SelectStmt, EquivError> {
        let tokens = tokenize(sql)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            len: sql.len(),
        };
        let stmt = p.statement()?;
        Ok(stmt)
    }

    pub fn table(&self) -> &str {
        &self.table
    }

    pub fn normalize(&mut self) {
        if let Some(f) = &mut self.filter {
            f.normalize();
        }
        self.group_by.sort();
    }
}

impl fmt::Display for SelectStmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.items.iter().map(SelectItem::to_string).collect();
        write!(f, "SELECT {} FROM {}", items.join(", "), self.table)?;
        if let Some(filter) = &self.filter {
            write!(f, " WHERE {filter}")?;
        }
        if !self.group_by.is_empty() {
            write!(f, " GROUP BY {}", self.group_by.join(", "))?;
        }
        Ok(())
    }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|(o, _)| *o).unwrap_or(self.len)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, EquivError> {
        Err(EquivError::Dialect {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), EquivError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.error(format!("expected {kw}"))
        }
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Token::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), EquivError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            self.error(format!("expected `{sym}`"))
        }
    }

    fn ident(&mut self) -> Result<String, EquivError> {
        match self.peek() {
            Some(Token::Word(w)) => {
                let upper = w.to_ascii_uppercase();
                if UNSUPPORTED.contains(&upper.as_str()) {
                    return self.error(format!("{upper} is not supported"));
                }
                if KEYWORDS.contains(&upper.as_str()) || Aggregation::from_sql_name(w).is_some() {
                    return self.error(format!("expected an identifier, found {upper}"));
                }
                let w = w.to_ascii_lowercase();
                self.pos += 1;
                Ok(w)
            }
            _ => self.error("expected an identifier"),
        }
    }

    fn statement(&mut self) -> Result<SelectStmt, EquivError> {
        self.expect_keyword("SELECT")?;
        if self.peek_keyword("DISTINCT") {
            return self.error("DISTINCT is not supported");
        }
        let mut items = vec![self.select_item()?];
        while self.eat_sym(",") {
            items.push(self.select_item()?);
        }
        self.expect_keyword("FROM")?;
        let table = self.ident()?;
        if self.eat_sym(",") {
            return self.error("only one table is supported");
        }
        let filter = if self.eat_keyword("WHERE") {
            Some(self.or_expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            group_by.push(self.ident()?);
            while self.eat_sym(",") {
                group_by.push(self.ident()?);
            }
        }
        self.eat_sym(";");
        if self.pos < self.tokens.len() {
            if let Some(Token::Word(w)) = self.peek() {
                let upper = w.to_ascii_uppercase();
                if UNSUPPORTED.contains(&upper.as_str()) {
                    return self.error(format!("{upper} is not supported"));
                }
            }
            return self.error("unexpected trailing input");
        }
        Ok(SelectStmt {
            items,
            table,
            filter,
            group_by,
        })
    }

    fn select_item(&mut self) -> Result<SelectItem, EquivError> {
        if let Some(Token::Word(w)) = self.peek() {
            if let Some(func) = Aggregation::from_sql_name(w) {
                if matches!(self.tokens.get(self.pos + 1), Some((_, Token::Sym("(")))) {
                    self.pos += 2;
                    let arg = if func == Aggregation::Count && self.eat_sym("*") {
                        None
                    } else {
                        if self.peek_keyword("DISTINCT") {
                            return self.error("DISTINCT is not supported");
                        }
                        Some(self.ident()?)
                    };
                    self.expect_sym(")")?;
                    let alias = if self.eat_keyword("AS") {
                        Some(self.ident()?)
                    } else {
                        None
                    };
                    return Ok(SelectItem::Aggregate { func, arg, alias });
                }
            }
        }
        if self.eat_sym("*") {
            return self.error("SELECT * is not supported");
        }
        let col = self.ident()?;
        if self.eat_keyword("AS") {
            return self.error("column aliases are not supported");
        }
        Ok(SelectItem::Column(col))
    }

    fn or_expr(&mut self) -> Result<Expr, EquivError> {
        let mut parts = vec![self.and_expr()?];
        while self.eat_keyword("OR") {
            parts.push(self.and_expr()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Or(parts) })
    }

    fn and_expr(&mut self) -> Result<Expr, EquivError> {
        let mut parts = vec![self.not_expr()?];
        while self.eat_keyword("AND") {
            parts.push(self.not_expr()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::And(parts) })
    }

    fn not_expr(&mut self) -> Result<Expr, EquivError> {
        if self.eat_keyword("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, EquivError> {
        if self.eat_sym("(") {
            if self.peek_keyword("SELECT") {
                return self.error("subqueries are not supported");
            }
            let e = self.or_expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        let column = self.ident()?;
        if self.eat_keyword("BETWEEN") {
            let low = self.literal()?;
            self.expect_keyword("AND")?;
            let high = self.literal()?;
            return Ok(Expr::Between { column, low, high });
        }
        if self.eat_keyword("IS") {
            let negated = self.eat_keyword("NOT");
            self.expect_keyword("NULL")?;
            return Ok(Expr::IsNull { column, negated });
        }
        let negated = self.eat_keyword("NOT");
        if self.eat_keyword("IN") {
            self.expect_sym("(")?;
            if self.peek_keyword("SELECT") {
                return self.error("subqueries are not supported");
            }
            let mut values = vec![self.literal()?];
            while self.eat_sym(",") {
                values.push(self.literal()?);
            }
            self.expect_sym(")")?;
            return Ok(Expr::In { column, negated, values });
        }
        if negated {
            return self.error("expected IN after NOT");
        }
        let op = match self.peek() {
            Some(Token::Sym(s)) if ["=", "<>", "<", "<=", ">", ">="].contains(s) => *s,
            _ => return self.error("expected a comparison operator"),
        };
        self.pos += 1;
        let value = self.literal()?;
        Ok(Expr::Compare { column, op, value })
    }

    fn literal(&mut self) -> Result<Lit, EquivError> {
        let negative = self.eat_sym("-");
        match self.peek().cloned() {
            Some(Token::Number(n)) => {
                self.pos += 1;
                Ok(Lit::Number(if negative { format!("-{n}") } else { n }))
            }
            Some(Token::Str(s)) if !negative => {
                self.pos += 1;
                Ok(Lit::Text(s))
            }
            _ => self.error("expected a literal"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(a: &str, b: &str) -> Equivalence {
        sql_equivalent(a, b, None).unwrap()
    }

    #[test]
    fn conjunct_order_is_irrelevant() {
        assert_eq!(
            verdict(
                "SELECT a FROM t WHERE x = 1 AND y = 2",
                "SELECT a FROM t WHERE y = 2 AND x = 1"
            ),
            Equivalence::Equivalent
        );
    }

    #[test]
    fn differing_literal_is_unknown_without_db() {
        assert_eq!(
            verdict("SELECT a FROM t WHERE x = 1", "SELECT a FROM t WHERE x = 2"),
            Equivalence::Unknown
        );
    }

    #[test]
    fn normal_form() {
        assert_eq!(
            normalize_sql("select  County, sum(v) as sum_v from T where (b = 2 and a in ('z', 'a')) group by c2, County").unwrap(),
            "SELECT county, SUM(v) AS sum_v FROM t WHERE a IN ('a', 'z') AND b = 2 GROUP BY c2, county"
        );
        assert_eq!(
            normalize_sql("SELECT a FROM t WHERE NOT (d IS NOT NULL) OR x BETWEEN -1.5 AND 2").unwrap(),
            "SELECT a FROM t WHERE NOT (d IS NOT NULL) OR x BETWEEN -1.5 AND 2"
        );
    }

    #[test]
    fn nested_conjunctions_flatten() {
        assert_eq!(
            verdict(
                "SELECT a FROM t WHERE (x = 1 AND y = 2) AND z = 3",
                "SELECT a FROM t WHERE z = 3 AND (y = 2 AND x = 1)"
            ),
            Equivalence::Equivalent
        );
        assert_ne!(
            normalize_sql("SELECT a FROM t WHERE (x = 1 OR y = 2) AND z = 3").unwrap(),
            normalize_sql("SELECT a FROM t WHERE x = 1 OR (y = 2 AND z = 3)").unwrap()
        );
    }

    #[test]
    fn string_literals_keep_quotes() {
        assert_eq!(
            normalize_sql("SELECT a FROM t WHERE c = 'it''s'").unwrap(),
            "SELECT a FROM t WHERE c = 'it''s'"
        );
    }

    #[test]
    fn dialect_errors() {
        for sql in [
            "SELECT a FROM t JOIN u",
            "SELECT a FROM t, u",
            "SELECT DISTINCT a FROM t",
            "SELECT * FROM t",
            "SELECT a FROM t ORDER BY a",
            "SELECT a FROM t WHERE a IN (SELECT b FROM u)",
            "SELECT a FROM t HAVING a > 1",
            "UPDATE t SET a = 1",
            "SELECT a FROM t WHERE c = 'open",
        ] {
            assert!(
                matches!(normalize_sql(sql), Err(EquivError::Dialect { .. })),
                "{sql}"
            );
        }
    }
}
