use rusqlite::Connection;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::runtime::{MESSAGE_TABLE, ROW_HASH_FN};
use crate::sql::quote_ident;

pub const HASH_COLUMN: &str = "hash";
pub const MANIFEST_TABLE: &str = "sqlab_manifest";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColumnSpec {
    pub name: String,
    pub decl_type: String,
    pub not_null: bool,
    pub autoincrement: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableSpec {
    pub name: String,
    pub columns: Vec<ColumnSpec>,
    pub has_hash_column: bool,
}

impl TableSpec {
    /// Columns supplied by the dataset files: everything except `hash`.
    pub fn data_columns(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns
            .iter()
            .filter(|c| !c.name.eq_ignore_ascii_case(HASH_COLUMN))
    }

    /// Columns fed to the row hash.
    pub fn hashed_columns(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.data_columns().filter(|c| !c.autoincrement)
    }

    /// `sqlab_row_hash('t', <prefix>.c1, ...)`.
    pub fn hash_expression(&self, prefix: &str) -> String {
        let mut args = vec![format!("'{}'", self.name.replace('\'', "''"))];
        args.extend(
            self.hashed_columns()
                .map(|c| format!("{prefix}{}", quote_ident(&c.name))),
        );
        format!("{ROW_HASH_FN}({})", args.join(", "))
    }

    pub fn hash_triggers(&self) -> Vec<String> {
        let t = quote_ident(&self.name);
        let set = format!(
            "UPDATE {t} SET {HASH_COLUMN} = {} WHERE rowid = NEW.rowid;",
            self.hash_expression("NEW.")
        );
        let cols: Vec<String> = self.data_columns().map(|c| quote_ident(&c.name)).collect();
        vec![
            format!(
                "CREATE TRIGGER {} AFTER INSERT ON {t} BEGIN {set} END",
                quote_ident(&format!("sqlab_hash_insert_{}", self.name))
            ),
            format!(
                "CREATE TRIGGER {} AFTER UPDATE OF {} ON {t} BEGIN {set} END",
                quote_ident(&format!("sqlab_hash_update_{}", self.name)),
                cols.join(", ")
            ),
        ]
    }
}

pub(crate) fn is_internal(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    lower.starts_with("sqlite_") || lower.starts_with("sqlab_")
}

/// User tables in creation order.
pub fn user_tables(conn: &Connection) -> Result<Vec<String>> {
    let mut stmt =
        conn.prepare("SELECT name FROM sqlite_master WHERE type = 'table' ORDER BY rowid")?;
    let names = stmt
        .query_map([], |r| r.get::<_, String>(0))?
        .collect::<rusqlite::Result<Vec<_>>>()?;
    Ok(names.into_iter().filter(|n| !is_internal(n)).collect())
}

pub fn describe_table(conn: &Connection, name: &str) -> Result<TableSpec> {
    let sql: String = conn.query_row(
        "SELECT sql FROM sqlite_master WHERE type = 'table' AND name = ?1",
        [name],
        |r| r.get(0),
    )?;
    let autoincrement = sql.to_ascii_uppercase().contains("AUTOINCREMENT");
    let mut stmt = conn.prepare(&format!("PRAGMA table_info({})", quote_ident(name)))?;
    let columns = stmt
        .query_map([], |r| {
            let decl_type: String = r.get(2)?;
            let pk: i64 = r.get(5)?;
            Ok(ColumnSpec {
                name: r.get(1)?,
                autoincrement: autoincrement
                    && pk == 1
                    && decl_type.eq_ignore_ascii_case("INTEGER"),
                decl_type,
                not_null: r.get::<_, i64>(3)? != 0,
            })
        })?
        .collect::<rusqlite::Result<Vec<_>>>()?;
    let has_hash_column = columns
        .iter()
        .any(|c| c.name.eq_ignore_ascii_case(HASH_COLUMN));
    Ok(TableSpec {
        name: name.to_owned(),
        columns,
        has_hash_column,
    })
}

pub fn table_specs(conn: &Connection) -> Result<Vec<TableSpec>> {
    user_tables(conn)?
        .iter()
        .map(|t| describe_table(conn, t))
        .collect()
}

/// Drops every object of a previous build.
pub fn clear_database(conn: &Connection) -> Result<()> {
    let mut stmt = conn.prepare(
        "SELECT type, name FROM sqlite_master WHERE type IN ('table', 'view', 'trigger') AND name NOT LIKE 'sqlite_%'",
    )?;
    let objects = stmt
        .query_map([], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?)))?
        .collect::<rusqlite::Result<Vec<_>>>()?;
    conn.execute_batch("PRAGMA foreign_keys = OFF")?;
    for (kind, name) in objects.iter().filter(|(k, _)| k != "table") {
        conn.execute_batch(&format!("DROP {kind} IF EXISTS {}", quote_ident(name)))?;
    }
    for (_, name) in objects.iter().filter(|(k, _)| k == "table") {
        conn.execute_batch(&format!("DROP TABLE IF EXISTS {}", quote_ident(name)))?;
    }
    Ok(())
}

/// Recreates the schema from `ddl`, checks every table for a `hash` column
/// and installs the triggers that keep it current. The row-hash function
/// must already be registered for later inserts to succeed.
pub fn load_schema(conn: &Connection, ddl: &str) -> Result<Vec<TableSpec>> {
    clear_database(conn)?;
    conn.execute_batch(ddl)
        .map_err(|e| Error::Schema(format!("DDL failed: {e}")))?;
    let specs = table_specs(conn)?;
    for spec in &specs {
        if !spec.has_hash_column {
            return Err(Error::Schema(format!(
                "table {} has no {HASH_COLUMN} column",
                spec.name
            )));
        }
        if spec.name.eq_ignore_ascii_case(MESSAGE_TABLE) {
            return Err(Error::Schema(format!(
                "table name {} is reserved",
                spec.name
            )));
        }
        for trigger in spec.hash_triggers() {
            conn.execute_batch(&trigger)?;
        }
    }
    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::HashConfig;
    use crate::runtime::install_row_hash;

    const DEPARTMENT: &str = "CREATE TABLE department (
        dpt_name VARCHAR(15) NOT NULL,
        dpt_id INT PRIMARY KEY,
        manager_id CHAR(9) NOT NULL,
        manager_start DATE,
        hash BIGINT
    );";

    fn conn() -> Connection {
        let c = Connection::open_in_memory().unwrap();
        install_row_hash(&c, &HashConfig::default(), "").unwrap();
        c
    }

    #[test]
    fn department_table_spec() {
        let c = conn();
        let specs = load_schema(&c, DEPARTMENT).unwrap();
        assert_eq!(specs.len(), 1);
        assert_eq!(specs[0].data_columns().count(), 4);
        assert!(specs[0].has_hash_column);
        assert_eq!(specs[0].columns[0].decl_type, "VARCHAR(15)");
        assert!(specs[0].columns[0].not_null);
    }

    #[test]
    fn missing_hash_column_names_the_table() {
        let err = load_schema(&conn(), "CREATE TABLE t (a INT);").unwrap_err();
        assert!(
            err.to_string().contains("table t has no hash column"),
            "{err}"
        );
    }

    #[test]
    fn rerun_recreates_cleanly() {
        let c = conn();
        load_schema(&c, DEPARTMENT).unwrap();
        c.execute(
            "INSERT INTO department VALUES ('R', 5, '1', NULL, NULL)",
            [],
        )
        .unwrap();
        load_schema(&c, DEPARTMENT).unwrap();
        let n: i64 = c
            .query_row("SELECT count(*) FROM department", [], |r| r.get(0))
            .unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn autoincrement_columns_are_not_hashed() {
        let c = conn();
        let specs = load_schema(
            &c,
            "CREATE TABLE t (id INTEGER PRIMARY KEY AUTOINCREMENT, v TEXT, hash BIGINT);",
        )
        .unwrap();
        assert_eq!(
            specs[0].hash_expression("NEW."),
            "sqlab_row_hash('t', NEW.v)"
        );
        c.execute("INSERT INTO t (v) VALUES ('a')", []).unwrap();
        c.execute("DELETE FROM t", []).unwrap();
        c.execute("INSERT INTO t (v) VALUES ('a')", []).unwrap();
        let (id, h): (i64, i64) = c
            .query_row("SELECT id, hash FROM t", [], |r| Ok((r.get(0)?, r.get(1)?)))
            .unwrap();
        assert_eq!(id, 2);
        let expected = crate::crypto::row_hash(
            "t",
            &[rusqlite::types::Value::Text("a".into())],
            &HashConfig::default(),
        )
        .unwrap();
        assert_eq!(h as u64, expected);
    }
}
