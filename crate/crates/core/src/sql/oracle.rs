use rusqlite::types::Value;
use rusqlite::Connection;

use super::lexer::{tokenize, TokKind};
use super::parser::QueryAst;
use super::star::{star, Catalog};
use crate::crypto::canonical_scalar;
use crate::error::{Error, Result};
use crate::formula::FormulaClass;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Plain-text grid, one line per row.
    pub fn render(&self) -> String {
        let cell = |v: &Value| match v {
            Value::Null => "NULL".to_owned(),
            Value::Integer(i) => i.to_string(),
            Value::Real(r) => r.to_string(),
            Value::Text(s) => s.clone(),
            Value::Blob(b) => format!("x'{}'", hex::encode(b)),
        };
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(cell).collect())
            .collect();
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for row in &body {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            format!("| {} |", parts.join(" | "))
        };
        let mut out = vec![line(&self.columns)];
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push(format!("|-{}-|", rule.join("-|-")));
        out.extend(body.iter().map(|r| line(r)));
        out.join("\n")
    }
}

pub fn query_table(conn: &Connection, sql: &str) -> Result<ResultTable> {
    let mut stmt = conn.prepare(sql)?;
    let columns: Vec<String> = stmt.column_names().iter().map(|s| s.to_string()).collect();
    let n = columns.len();
    let rows = stmt
        .query_map([], |row| (0..n).map(|i| row.get::<_, Value>(i)).collect())?
        .collect::<rusqlite::Result<Vec<Vec<Value>>>>()?;
    Ok(ResultTable { columns, rows })
}

/// Splits a script on top-level semicolons.
pub fn split_statements(sql: &str) -> Result<Vec<String>> {
    let toks = tokenize(sql)?;
    let mut out = Vec::new();
    let mut start = 0;
    let mut push = |piece: &str| {
        if tokenize(piece).map(|t| !t.is_empty()).unwrap_or(true) {
            out.push(piece.trim().to_owned());
        }
    };
    for t in toks.iter().filter(|t| t.kind == TokKind::Semi) {
        push(&sql[start..t.start]);
        start = t.end;
    }
    push(&sql[start..]);
    Ok(out)
}

/// Token carried by a result table: `None` for an empty table.
pub fn token_of(table: &ResultTable) -> Result<Option<u64>> {
    let col = table
        .columns
        .iter()
        .rposition(|c| c.eq_ignore_ascii_case("token"))
        .ok_or_else(|| Error::Formula("the result has no token column".into()))?;
    let mut token = None;
    for row in &table.rows {
        let value = match &row[col] {
            Value::Integer(i) => *i as u64,
            Value::Real(r) => *r as i64 as u64,
            other => {
                return Err(Error::Formula(format!(
                    "token value {other:?} is not an integer"
                )))
            }
        };
        match token {
            None => token = Some(value),
            Some(t) if t != value => {
                return Err(Error::Formula(
                    "non-constant token column (is OVER () missing?)".into(),
                ))
            }
            Some(_) => {}
        }
    }
    Ok(token)
}

pub fn execute_token(conn: &Connection, sql: &str) -> Result<Option<u64>> {
    token_of(&query_table(conn, sql)?)
}

/// Result of a starred query, compared as a multiset of rows whose cells are
/// themselves unordered, with all-null columns dropped.
#[derive(Debug, Clone)]
pub struct StarredTable {
    pub rows: Vec<Vec<String>>,
    pub null_column_mask: Vec<bool>,
}

fn is_null_cell(v: &Value, grouped: bool) -> bool {
    match v {
        Value::Null => true,
        Value::Text(s) if grouped => serde_json::from_str::<Vec<serde_json::Value>>(s)
            .map(|items| items.iter().all(serde_json::Value::is_null))
            .unwrap_or(false),
        _ => false,
    }
}

impl StarredTable {
    pub fn from_result(table: &ResultTable, grouped: bool) -> Result<Self> {
        let width = table.columns.len();
        let null_column_mask = (0..width)
            .map(|c| table.rows.iter().all(|r| is_null_cell(&r[c], grouped)))
            .collect();
        let rows = table
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| match v {
                        Value::Blob(b) => Ok(format!("x'{}'", hex::encode(b))),
                        other => canonical_scalar(other),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(StarredTable {
            rows,
            null_column_mask,
        })
    }

    pub fn canonical(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut cells: Vec<String> = r
                    .iter()
                    .zip(&self.null_column_mask)
                    .filter(|(_, null)| !**null)
                    .map(|(c, _)| c.clone())
                    .collect();
                cells.sort();
                cells
            })
            .collect();
        rows.sort();
        rows
    }
}

impl PartialEq for StarredTable {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

pub fn starred_table(
    conn: &Connection,
    ast: &QueryAst,
    class: &FormulaClass,
    catalog: &Catalog,
) -> Result<StarredTable> {
    let sql = star(ast, class, catalog)?;
    StarredTable::from_result(&query_table(conn, &sql)?, class.kind.is_agg())
}

pub fn starred_match(
    conn: &Connection,
    q1: &QueryAst,
    q2: &QueryAst,
    class: &FormulaClass,
    catalog: &Catalog,
) -> Result<bool> {
    Ok(starred_table(conn, q1, class, catalog)? == starred_table(conn, q2, class, catalog)?)
}
