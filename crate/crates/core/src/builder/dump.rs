use std::path::Path;

use rusqlite::types::Value;
use rusqlite::Connection;

use super::schema::{is_internal, MANIFEST_TABLE};
use crate::error::{Error, Result};
use crate::manifest::Manifest;
use crate::runtime::{install_runtime, MESSAGE_TABLE};
use crate::sql::quote_ident;

fn literal(v: &Value) -> String {
    match v {
        Value::Null => "NULL".into(),
        Value::Integer(i) => i.to_string(),
        Value::Real(r) if r.is_finite() => format!("{r:?}"),
        Value::Real(r) if *r > 0.0 => "9e999".into(),
        Value::Real(r) if *r < 0.0 => "-9e999".into(),
        Value::Real(_) => "NULL".into(),
        Value::Text(s) => format!("'{}'", s.replace('\'', "''")),
        Value::Blob(b) => format!("X'{}'", hex::encode(b)),
    }
}

fn objects(conn: &Connection, kind: &str) -> Result<Vec<(String, String)>> {
    let mut stmt = conn.prepare(
        "SELECT name, sql FROM sqlite_master WHERE type = ?1 AND sql IS NOT NULL ORDER BY rowid",
    )?;
    let rows = stmt
        .query_map([kind], |r| Ok((r.get(0)?, r.get(1)?)))?
        .collect::<rusqlite::Result<Vec<_>>>()?;
    Ok(rows)
}

fn dump_table(conn: &Connection, name: &str, ddl: &str, out: &mut String) -> Result<()> {
    out.push_str(ddl);
    out.push_str(";\n");
    let mut stmt = conn.prepare(&format!(
        "SELECT * FROM {} ORDER BY rowid",
        quote_ident(name)
    ))?;
    let width = stmt.column_count();
    let mut rows = stmt.query([])?;
    while let Some(row) = rows.next()? {
        let cells = (0..width)
            .map(|i| row.get::<_, Value>(i).map(|v| literal(&v)))
            .collect::<rusqlite::Result<Vec<_>>>()?;
        out.push_str(&format!(
            "INSERT INTO {} VALUES({});\n",
            quote_ident(name),
            cells.join(",")
        ));
    }
    Ok(())
}

/// Plain-SQL image of a built game: the runtime manifest, the game tables
/// with their rows, the message table, then indexes, views and triggers.
pub fn emit_dump(conn: &Connection) -> Result<String> {
    let mut out = String::from("PRAGMA foreign_keys=OFF;\nBEGIN TRANSACTION;\n");
    let tables = objects(conn, "table")?;
    let order = |name: &str| {
        if name.eq_ignore_ascii_case(MANIFEST_TABLE) {
            0
        } else if name.eq_ignore_ascii_case(MESSAGE_TABLE) {
            2
        } else {
            1
        }
    };
    let mut sorted: Vec<&(String, String)> = tables
        .iter()
        .filter(|(n, _)| !is_internal(n) || order(n) != 1)
        .collect();
    sorted.sort_by_key(|(n, _)| order(n));
    for (name, ddl) in sorted {
        dump_table(conn, name, ddl, &mut out)?;
    }
    for kind in ["index", "view", "trigger"] {
        for (_, sql) in objects(conn, kind)? {
            out.push_str(&sql);
            out.push_str(";\n");
        }
    }
    out.push_str("COMMIT;\n");
    Ok(out)
}

pub fn read_manifest(conn: &Connection) -> Result<Manifest> {
    let json: String = conn
        .query_row(&format!("SELECT json FROM {MANIFEST_TABLE}"), [], |r| {
            r.get(0)
        })
        .map_err(|e| Error::Config(format!("no readable {MANIFEST_TABLE} table: {e}")))?;
    Manifest::from_json(&json)
}

/// Loads a dump into a fresh in-memory database with the runtime installed.
pub fn load_dump(text: &str) -> Result<(Connection, Manifest)> {
    let conn = Connection::open_in_memory()?;
    conn.execute_batch(text)?;
    let manifest = read_manifest(&conn)?;
    install_runtime(&conn, &manifest)?;
    Ok((conn, manifest))
}

pub fn open_game(path: impl AsRef<Path>) -> Result<(Connection, Manifest)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_dump(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        assert_eq!(literal(&Value::Real(25000.0)), "25000.0");
        assert_eq!(literal(&Value::Text("O'Hara".into())), "'O''Hara'");
        assert_eq!(literal(&Value::Blob(vec![1, 255])), "X'01ff'");
    }

    #[test]
    fn dump_round_trips_rows() {
        let c = Connection::open_in_memory().unwrap();
        c.execute_batch(&format!(
            "CREATE TABLE {MANIFEST_TABLE} (json TEXT NOT NULL);
             CREATE TABLE t (a REAL, b TEXT, hash BIGINT);
             INSERT INTO t VALUES (0.1, 'x''y', 7), (NULL, '', -1);"
        ))
        .unwrap();
        let m = Manifest::new(Default::default(), 3, "nothing");
        c.execute(
            &format!("INSERT INTO {MANIFEST_TABLE} VALUES (?1)"),
            [m.to_json()],
        )
        .unwrap();
        let text = emit_dump(&c).unwrap();
        assert!(text.find(MANIFEST_TABLE).unwrap() < text.find("CREATE TABLE t").unwrap());
        let (d, back) = load_dump(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(emit_dump(&d).unwrap(), text);
        let a: f64 = d
            .query_row("SELECT a FROM t WHERE rowid = 1", [], |r| r.get(0))
            .unwrap();
        assert_eq!(a, 0.1);
    }
}
