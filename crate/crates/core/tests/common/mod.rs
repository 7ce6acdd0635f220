//! Shared fixture access for the integration tests.
#![allow(dead_code)]

pub mod corrupt;
pub mod groups;
pub mod table4;

use std::sync::OnceLock;

use rusqlite::types::Value;
use rusqlite::Connection;
use sqlab_core::builder::{build_sources, load_dump, GameBuild, GameSources};
use sqlab_core::formula::{default_aliases, render_formula, FormulaClass};
use sqlab_core::manifest::Manifest;
use sqlab_core::sql::{execute_token, inject_formula, parse_select};

pub const COMPANY: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/company");

pub fn sources() -> GameSources {
    GameSources::read(COMPANY).expect("company fixture is readable")
}

pub fn build(sources: &GameSources) -> GameBuild {
    build_sources(sources).expect("company fixture builds")
}

/// Dump of the untouched company game, built once per test binary.
pub fn dump() -> &'static str {
    static DUMP: OnceLock<String> = OnceLock::new();
    DUMP.get_or_init(|| build(&sources()).dump().expect("dump"))
}

pub fn game() -> (Connection, Manifest) {
    load_dump(dump()).expect("dump loads")
}

/// `query` with the formula of `class` for task `task` appended to its
/// select list, aliases `A`, `B`, ... in order.
pub fn augmented(manifest: &Manifest, task: u16, class: &FormulaClass, query: &str) -> String {
    let salt = manifest.salt(task).expect("task has a salt");
    let formula = render_formula(class, salt, &default_aliases(class.dimension)).expect("formula");
    inject_formula(&parse_select(query).expect("query parses"), &formula)
}

/// Token of the augmented query; `None` when the engine rejects it.
pub fn token(
    conn: &Connection,
    manifest: &Manifest,
    task: u16,
    class: &FormulaClass,
    query: &str,
) -> Option<u64> {
    execute_token(conn, &augmented(manifest, task, class, query))
        .ok()
        .flatten()
}

/// Numeric cell as `f64`.
pub fn number(v: &Value) -> f64 {
    match v {
        Value::Integer(i) => *i as f64,
        Value::Real(r) => *r,
        other => panic!("not a number: {other:?}"),
    }
}
