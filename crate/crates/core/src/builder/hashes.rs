use std::collections::BTreeMap;

use rusqlite::types::Value;
use rusqlite::Connection;
use serde::Serialize;

use super::schema::{TableSpec, HASH_COLUMN};
use crate::crypto::{canonical_row, row_hash_with, HashConfig};
use crate::error::Result;
use crate::runtime::install_row_hash;
use crate::sql::quote_ident;

/// Attempts at a disambiguator before giving up on fixable collisions.
pub const MAX_DISAMBIGUATION: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowRef {
    pub table: String,
    pub rowid: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Duplicate {
    pub hash: u64,
    pub rows: Vec<RowRef>,
    /// All rows serialize identically, so no disambiguator can split them.
    pub identical: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct HashAudit {
    pub rows: usize,
    pub duplicates: Vec<Duplicate>,
    pub missing: Vec<RowRef>,
    /// Zero, out of range, or equal to the null substitute.
    pub reserved: Vec<RowRef>,
    /// Stored hash differs from the hash of the current values.
    pub stale: Vec<RowRef>,
}

impl HashAudit {
    pub fn is_clean(&self) -> bool {
        self.duplicates.is_empty()
            && self.missing.is_empty()
            && self.reserved.is_empty()
            && self.stale.is_empty()
    }

    fn fixable(&self) -> bool {
        !self.reserved.is_empty() || self.duplicates.iter().any(|d| !d.identical)
    }

    pub fn describe(&self) -> Vec<String> {
        let row = |r: &RowRef| format!("{}#{}", r.table, r.rowid);
        let mut out = Vec::new();
        for d in &self.duplicates {
            let rows: Vec<String> = d.rows.iter().map(row).collect();
            let why = if d.identical { " (identical rows)" } else { "" };
            out.push(format!(
                "hash {} shared by {}{why}",
                d.hash,
                rows.join(", ")
            ));
        }
        out.extend(
            self.missing
                .iter()
                .map(|r| format!("{} has no hash", row(r))),
        );
        out.extend(
            self.reserved
                .iter()
                .map(|r| format!("{} has a reserved hash value", row(r))),
        );
        out.extend(
            self.stale
                .iter()
                .map(|r| format!("{} has a stale hash", row(r))),
        );
        out
    }
}

pub fn audit_hashes(
    conn: &Connection,
    tables: &[TableSpec],
    cfg: &HashConfig,
    disambiguator: &str,
) -> Result<HashAudit> {
    let mut audit = HashAudit::default();
    let mut seen: BTreeMap<u64, Vec<(RowRef, String)>> = BTreeMap::new();
    for table in tables {
        let cols: Vec<String> = table
            .hashed_columns()
            .map(|c| quote_ident(&c.name))
            .collect();
        let mut select = vec!["rowid".to_owned(), HASH_COLUMN.to_owned()];
        select.extend(cols.iter().cloned());
        let sql = format!(
            "SELECT {} FROM {} ORDER BY rowid",
            select.join(", "),
            quote_ident(&table.name)
        );
        let mut stmt = conn.prepare(&sql)?;
        let width = select.len();
        let rows = stmt
            .query_map([], |r| (0..width).map(|i| r.get::<_, Value>(i)).collect())?
            .collect::<rusqlite::Result<Vec<Vec<Value>>>>()?;
        for row in rows {
            audit.rows += 1;
            let rowid = match row[0] {
                Value::Integer(i) => i,
                _ => 0,
            };
            let r = RowRef {
                table: table.name.clone(),
                rowid,
            };
            let values = &row[2..];
            let Value::Integer(h) = row[1] else {
                audit.missing.push(r);
                continue;
            };
            let h = h as u64;
            if h == 0 || h > cfg.mask() || h == cfg.coalesce_constant {
                audit.reserved.push(r.clone());
            }
            if row_hash_with(&table.name, values, cfg, disambiguator)? != h {
                audit.stale.push(r.clone());
            }
            seen.entry(h)
                .or_default()
                .push((r, canonical_row(&table.name, values)?));
        }
    }
    for (hash, rows) in seen.into_iter().filter(|(_, v)| v.len() > 1) {
        let identical = rows.windows(2).all(|w| w[0].1 == w[1].1);
        audit.duplicates.push(Duplicate {
            hash,
            rows: rows.into_iter().map(|(r, _)| r).collect(),
            identical,
        });
    }
    Ok(audit)
}

/// Recomputes every stored hash with the registered row-hash function.
pub fn rehash_all(conn: &Connection, tables: &[TableSpec]) -> Result<()> {
    for table in tables {
        conn.execute_batch(&format!(
            "UPDATE {} SET {HASH_COLUMN} = {}",
            quote_ident(&table.name),
            table.hash_expression("")
        ))?;
    }
    Ok(())
}

/// Steps through disambiguators `""`, `"1"`, `"2"`, ... until no fixable
/// collision remains. Returns the chosen disambiguator and the final audit,
/// which may still list rows that serialize identically.
pub fn disambiguate(
    conn: &Connection,
    tables: &[TableSpec],
    cfg: &HashConfig,
) -> Result<(String, HashAudit)> {
    let mut d = String::new();
    let mut audit = audit_hashes(conn, tables, cfg, &d)?;
    let mut attempt = 0;
    while audit.fixable() && attempt < MAX_DISAMBIGUATION {
        attempt += 1;
        d = attempt.to_string();
        install_row_hash(conn, cfg, &d)?;
        rehash_all(conn, tables)?;
        audit = audit_hashes(conn, tables, cfg, &d)?;
    }
    if audit.fixable() {
        log::warn!("hash collisions remain after {MAX_DISAMBIGUATION} disambiguation attempts");
    }
    Ok((d, audit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::schema::load_schema;

    fn setup(bits: u32) -> (Connection, Vec<TableSpec>, HashConfig) {
        let cfg = HashConfig::new(bits, 3).unwrap();
        let c = Connection::open_in_memory().unwrap();
        install_row_hash(&c, &cfg, "").unwrap();
        let specs = load_schema(&c, "CREATE TABLE t (v INT, hash BIGINT);").unwrap();
        (c, specs, cfg)
    }

    #[test]
    fn collisions_are_split_by_a_disambiguator() {
        let (c, specs, cfg) = setup(12);
        let mut i = 0;
        while audit_hashes(&c, &specs, &cfg, "")
            .unwrap()
            .duplicates
            .is_empty()
        {
            c.execute("INSERT INTO t (v) VALUES (?1)", [i]).unwrap();
            i += 1;
            assert!(i < 1000, "12-bit hashes collide well before 1000 rows");
        }
        let (d, after) = disambiguate(&c, &specs, &cfg).unwrap();
        assert!(after.is_clean(), "{:?}", after.describe());
        assert!(!d.is_empty());
    }

    #[test]
    fn identical_rows_cannot_be_split() {
        let (c, specs, cfg) = setup(40);
        c.execute_batch("INSERT INTO t (v) VALUES (1); INSERT INTO t (v) VALUES (1);")
            .unwrap();
        let (_, audit) = disambiguate(&c, &specs, &cfg).unwrap();
        assert_eq!(audit.duplicates.len(), 1);
        assert!(audit.duplicates[0].identical);
    }

    #[test]
    fn manual_tampering_is_stale() {
        let (c, specs, cfg) = setup(40);
        c.execute_batch("INSERT INTO t (v) VALUES (1); UPDATE t SET hash = 12345;")
            .unwrap();
        let audit = audit_hashes(&c, &specs, &cfg, "").unwrap();
        assert_eq!(audit.stale.len(), 1);
    }
}
