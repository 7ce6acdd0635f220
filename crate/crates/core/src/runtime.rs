//! User-defined functions registered on every game connection.

use rusqlite::functions::{Aggregate, Context, FunctionFlags, WindowAggregate};
use rusqlite::types::{Value, ValueRef};
use rusqlite::Connection;

use crate::crypto::{
    canonical_scalar, decrypt_probe, row_hash_with, salt_apply, string_hash, CipherEnvelope,
    HashConfig,
};
use crate::error::Result;
use crate::formula::{avalanche, token_input};
use crate::manifest::Manifest;
use crate::sql::SORTED_LIST_FN;

pub const ROW_HASH_FN: &str = "sqlab_row_hash";
pub const MESSAGE_TABLE: &str = "sqlab_msg";

fn pure() -> FunctionFlags {
    FunctionFlags::SQLITE_UTF8 | FunctionFlags::SQLITE_DETERMINISTIC
}

fn int_bits(v: ValueRef<'_>) -> Option<u64> {
    match v {
        ValueRef::Null => None,
        ValueRef::Integer(i) => Some(i as u64),
        ValueRef::Real(r) => Some(r as i64 as u64),
        ValueRef::Text(t) => Some(
            std::str::from_utf8(t)
                .ok()
                .and_then(|s| s.trim().parse::<i64>().ok())
                .unwrap_or(0) as u64,
        ),
        ValueRef::Blob(_) => Some(0),
    }
}

/// Registers `nn`, `string_hash`, the salt functions, `decrypt`, the
/// aggregates and the row-hash function used by the hash triggers.
pub fn install_runtime(conn: &Connection, manifest: &Manifest) -> Result<()> {
    let cfg = manifest.hash.clone();
    let coalesce = cfg.coalesce_constant as i64;
    conn.create_scalar_function("nn", 1, pure(), move |ctx| {
        Ok(match ctx.get::<Value>(0)? {
            Value::Null => Value::Integer(coalesce),
            other => other,
        })
    })?;

    let c = cfg.clone();
    conn.create_scalar_function("string_hash", 1, pure(), move |ctx| {
        let text = match ctx.get::<Value>(0)? {
            Value::Null => return Ok(None),
            Value::Text(s) => s,
            Value::Integer(i) => i.to_string(),
            Value::Real(r) => r.to_string(),
            Value::Blob(b) => hex::encode(b),
        };
        Ok(Some(string_hash(&text, &c) as i64))
    })?;

    for spec in &manifest.salts {
        let spec = *spec;
        let c = cfg.clone();
        conn.create_scalar_function(&spec.function_name(), 1, pure(), move |ctx| {
            let x = token_input(&ctx.get::<Value>(0)?, &c);
            Ok(salt_apply(&spec, x, &c) as i64)
        })?;
    }

    let c = cfg.clone();
    let fallback = manifest.fallback_text.clone();
    conn.create_scalar_function("decrypt", 1, FunctionFlags::SQLITE_UTF8, move |ctx| {
        let Some(token) = token_input(&ctx.get::<Value>(0)?, &c) else {
            return Ok(fallback.clone());
        };
        // SAFETY: the function only reads from the connection.
        let db = unsafe { ctx.get_connection()? };
        Ok(lookup_message(&db, token).unwrap_or_else(|| fallback.clone()))
    })?;

    conn.create_window_function("bit_xor", 1, pure(), BitXor)?;
    conn.create_window_function("checksum_agg", 1, pure(), Checksum)?;
    conn.create_aggregate_function(SORTED_LIST_FN, 1, pure(), SortedList)?;
    install_row_hash(conn, &cfg, &manifest.disambiguator)?;
    Ok(())
}

pub fn install_row_hash(conn: &Connection, cfg: &HashConfig, disambiguator: &str) -> Result<()> {
    let c = cfg.clone();
    let d = disambiguator.to_owned();
    conn.create_scalar_function(
        ROW_HASH_FN,
        -1,
        pure() | FunctionFlags::SQLITE_INNOCUOUS,
        move |ctx: &Context<'_>| {
            if ctx.is_empty() {
                return Err(rusqlite::Error::UserFunctionError(
                    "row hash needs a table name".into(),
                ));
            }
            let table: String = ctx.get(0)?;
            let values = (1..ctx.len())
                .map(|i| ctx.get::<Value>(i))
                .collect::<rusqlite::Result<Vec<_>>>()?;
            row_hash_with(&table, &values, &c, &d)
                .map(|h| h as i64)
                .map_err(|e| rusqlite::Error::UserFunctionError(e.into()))
        },
    )?;
    Ok(())
}

/// Scans the message table for envelopes that open under `token`; the
/// greatest plaintext wins when several do.
pub fn lookup_message(conn: &Connection, token: u64) -> Option<String> {
    let mut stmt = conn
        .prepare_cached(&format!("SELECT msg FROM {MESSAGE_TABLE}"))
        .ok()?;
    let rows = stmt.query_map([], |r| r.get::<_, String>(0)).ok()?;
    rows.filter_map(|r| r.ok())
        .filter_map(|hex| CipherEnvelope::from_hex(&hex))
        .filter_map(|env| decrypt_probe(token, &env))
        .max()
}

#[derive(Default)]
struct Acc {
    value: u64,
    count: usize,
}

struct BitXor;

impl Aggregate<Acc, Option<i64>> for BitXor {
    fn init(&self, _: &mut Context<'_>) -> rusqlite::Result<Acc> {
        Ok(Acc::default())
    }

    fn step(&self, ctx: &mut Context<'_>, acc: &mut Acc) -> rusqlite::Result<()> {
        if let Some(v) = int_bits(ctx.get_raw(0)) {
            acc.value ^= v;
            acc.count += 1;
        }
        Ok(())
    }

    fn finalize(&self, _: &mut Context<'_>, acc: Option<Acc>) -> rusqlite::Result<Option<i64>> {
        Ok(acc.filter(|a| a.count > 0).map(|a| a.value as i64))
    }
}

impl WindowAggregate<Acc, Option<i64>> for BitXor {
    fn value(&self, acc: Option<&mut Acc>) -> rusqlite::Result<Option<i64>> {
        Ok(acc.filter(|a| a.count > 0).map(|a| a.value as i64))
    }

    fn inverse(&self, ctx: &mut Context<'_>, acc: &mut Acc) -> rusqlite::Result<()> {
        if let Some(v) = int_bits(ctx.get_raw(0)) {
            acc.value ^= v;
            acc.count -= 1;
        }
        Ok(())
    }
}

struct Checksum;

impl Aggregate<Acc, Option<i64>> for Checksum {
    fn init(&self, _: &mut Context<'_>) -> rusqlite::Result<Acc> {
        Ok(Acc::default())
    }

    fn step(&self, ctx: &mut Context<'_>, acc: &mut Acc) -> rusqlite::Result<()> {
        if let Some(v) = int_bits(ctx.get_raw(0)) {
            acc.value = acc.value.wrapping_add(avalanche(v));
            acc.count += 1;
        }
        Ok(())
    }

    fn finalize(&self, _: &mut Context<'_>, acc: Option<Acc>) -> rusqlite::Result<Option<i64>> {
        Ok(acc.filter(|a| a.count > 0).map(|a| a.value as i64))
    }
}

impl WindowAggregate<Acc, Option<i64>> for Checksum {
    fn value(&self, acc: Option<&mut Acc>) -> rusqlite::Result<Option<i64>> {
        Ok(acc.filter(|a| a.count > 0).map(|a| a.value as i64))
    }

    fn inverse(&self, ctx: &mut Context<'_>, acc: &mut Acc) -> rusqlite::Result<()> {
        if let Some(v) = int_bits(ctx.get_raw(0)) {
            acc.value = acc.value.wrapping_sub(avalanche(v));
            acc.count -= 1;
        }
        Ok(())
    }
}

struct SortedList;

impl Aggregate<Vec<String>, Option<String>> for SortedList {
    fn init(&self, _: &mut Context<'_>) -> rusqlite::Result<Vec<String>> {
        Ok(Vec::new())
    }

    fn step(&self, ctx: &mut Context<'_>, acc: &mut Vec<String>) -> rusqlite::Result<()> {
        let cell = match ctx.get::<Value>(0)? {
            Value::Blob(b) => serde_json::to_string(&hex::encode(b)).expect("strings serialize"),
            other => canonical_scalar(&other)
                .map_err(|e| rusqlite::Error::UserFunctionError(e.into()))?,
        };
        acc.push(cell);
        Ok(())
    }

    fn finalize(
        &self,
        _: &mut Context<'_>,
        acc: Option<Vec<String>>,
    ) -> rusqlite::Result<Option<String>> {
        Ok(acc.filter(|a| !a.is_empty()).map(|mut a| {
            a.sort();
            format!("[{}]", a.join(","))
        }))
    }
}
