use std::collections::BTreeMap;
use std::path::Path;

use rusqlite::types::Value;
use rusqlite::Connection;

use super::schema::{ColumnSpec, TableSpec};
use crate::error::{Error, Result};
use crate::sql::quote_ident;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Affinity {
    Integer,
    Text,
    Blob,
    Real,
    Numeric,
}

/// Column affinity from a declared type, by the engine's substring rules.
pub fn affinity(decl_type: &str) -> Affinity {
    let t = decl_type.to_ascii_uppercase();
    if t.contains("INT") {
        Affinity::Integer
    } else if t.contains("CHAR") || t.contains("CLOB") || t.contains("TEXT") {
        Affinity::Text
    } else if t.contains("BLOB") || t.is_empty() {
        Affinity::Blob
    } else if t.contains("REAL") || t.contains("FLOA") || t.contains("DOUB") {
        Affinity::Real
    } else {
        Affinity::Numeric
    }
}

fn integral(r: f64) -> Option<i64> {
    (r.fract() == 0.0 && r.abs() < 9.0e15).then_some(r as i64)
}

/// Parses one TSV field for `column`. Empty fields are NULL.
pub fn parse_field(field: &str, column: &ColumnSpec) -> std::result::Result<Value, String> {
    if field.is_empty() {
        return Ok(Value::Null);
    }
    let number = || -> Option<Value> {
        let t = field.trim();
        if let Ok(i) = t.parse::<i64>() {
            return Some(Value::Integer(i));
        }
        let r = t.parse::<f64>().ok().filter(|r| r.is_finite())?;
        Some(match integral(r) {
            Some(i) => Value::Integer(i),
            None => Value::Real(r),
        })
    };
    match affinity(&column.decl_type) {
        Affinity::Text | Affinity::Blob => Ok(Value::Text(field.to_owned())),
        Affinity::Numeric => Ok(number().unwrap_or_else(|| Value::Text(field.to_owned()))),
        Affinity::Integer => {
            number().ok_or_else(|| format!("column {}: {field:?} is not an integer", column.name))
        }
        Affinity::Real => field
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|r| r.is_finite())
            .map(Value::Real)
            .ok_or_else(|| format!("column {}: {field:?} is not a number", column.name)),
    }
}

/// Reads `<dir>/<table>.tsv` for every table and inserts the rows, letting
/// the triggers compute the hashes.
pub fn load_dataset(
    conn: &Connection,
    dir: &Path,
    tables: &[TableSpec],
) -> Result<BTreeMap<String, usize>> {
    let mut counts = BTreeMap::new();
    for table in tables {
        let path = dir.join(format!("{}.tsv", table.name));
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let n = insert_tsv(conn, table, &text).map_err(|(line, message)| Error::Dataset {
            path: path.clone(),
            line,
            message,
        })?;
        counts.insert(table.name.clone(), n);
    }
    Ok(counts)
}

/// Inserts the rows of one TSV text; errors carry the 1-based line number.
pub fn insert_tsv(
    conn: &Connection,
    table: &TableSpec,
    text: &str,
) -> std::result::Result<usize, (usize, String)> {
    let columns: Vec<&ColumnSpec> = table.data_columns().collect();
    let names: Vec<String> = columns.iter().map(|c| quote_ident(&c.name)).collect();
    let params: Vec<String> = (1..=columns.len()).map(|i| format!("?{i}")).collect();
    let sql = format!(
        "INSERT INTO {} ({}) VALUES ({})",
        quote_ident(&table.name),
        names.join(", "),
        params.join(", ")
    );
    let mut stmt = conn.prepare(&sql).map_err(|e| (0, e.to_string()))?;
    let mut count = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != columns.len() {
            return Err((
                line_no,
                format!("expected {} fields, found {}", columns.len(), fields.len()),
            ));
        }
        let values = fields
            .iter()
            .zip(&columns)
            .enumerate()
            .map(|(j, (f, c))| {
                parse_field(f, c).map_err(|m| (line_no, format!("field {}: {m}", j + 1)))
            })
            .collect::<std::result::Result<Vec<Value>, _>>()?;
        stmt.execute(rusqlite::params_from_iter(values))
            .map_err(|e| (line_no, e.to_string()))?;
        count += 1;
    }
    Ok(count)
}
