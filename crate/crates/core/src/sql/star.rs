use std::collections::BTreeMap;

use rusqlite::Connection;

use super::lexer::normalize_ws;
use super::parser::{QueryAst, TableSource};
use crate::error::{Error, Result};
use crate::formula::{default_aliases, FormulaClass, FormulaKind};

/// Aggregate registered by the runtime: canonical sorted list of a column.
pub const SORTED_LIST_FN: &str = "sqlab_sorted";

/// Column names of the game tables, keyed by lower-cased table name.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    tables: BTreeMap<String, Vec<String>>,
}

impl Catalog {
    pub fn from_connection(conn: &Connection) -> Result<Self> {
        let mut stmt = conn.prepare(
            "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY rowid",
        )?;
        let names: Vec<String> = stmt
            .query_map([], |r| r.get(0))?
            .collect::<rusqlite::Result<_>>()?;
        let mut catalog = Catalog::default();
        for name in names {
            let mut info = conn.prepare(&format!("PRAGMA table_info({})", quote_ident(&name)))?;
            let cols: Vec<String> = info
                .query_map([], |r| r.get(1))?
                .collect::<rusqlite::Result<_>>()?;
            catalog.insert(&name, cols);
        }
        Ok(catalog)
    }

    pub fn insert(&mut self, table: &str, columns: Vec<String>) {
        self.tables.insert(table.to_ascii_lowercase(), columns);
    }

    pub fn columns(&self, table: &str) -> Option<&[String]> {
        self.tables
            .get(&table.to_ascii_lowercase())
            .map(Vec::as_slice)
    }
}

pub(crate) fn quote_ident(name: &str) -> String {
    let simple = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if simple {
        name.to_owned()
    } else {
        format!("\"{}\"", name.replace('"', "\"\""))
    }
}

/// Starred query with the default aliases `A, B, ...`.
pub fn star(ast: &QueryAst, class: &FormulaClass, catalog: &Catalog) -> Result<String> {
    star_with_aliases(ast, class, &default_aliases(class.dimension), catalog)
}

pub fn star_with_aliases(
    ast: &QueryAst,
    class: &FormulaClass,
    aliases: &[String],
    catalog: &Catalog,
) -> Result<String> {
    let incompatible = |m: String| Err(Error::Formula(format!("cannot star query: {m}")));
    if class.kind == FormulaKind::ExprOnly {
        return incompatible("expression-only formulas have no tables".into());
    }
    if aliases.len() != class.dimension {
        return incompatible(format!(
            "{} aliases for dimension {}",
            aliases.len(),
            class.dimension
        ));
    }
    if ast.has_derived_table() {
        return incompatible("derived table in the outer FROM clause".into());
    }
    let grouped = class.kind.is_agg();
    if !grouped && ast.is_grouped() {
        return incompatible("grouped query with an ungrouped formula".into());
    }
    let mut select = Vec::new();
    for alias in aliases {
        let item = ast.find_alias(alias).ok_or_else(|| {
            Error::Formula(format!("cannot star query: no table aliased {alias}"))
        })?;
        if grouped {
            let TableSource::Table(table) = &item.source else {
                return incompatible(format!("{alias} is not a base table"));
            };
            let cols = catalog.columns(table).ok_or_else(|| {
                Error::Formula(format!("cannot star query: unknown table {table}"))
            })?;
            for c in cols {
                select.push(format!("{SORTED_LIST_FN}({alias}.{})", quote_ident(c)));
            }
        } else {
            select.push(format!("{alias}.*"));
        }
    }
    let from = ast
        .from_clause()
        .ok_or_else(|| Error::Formula("cannot star query: no FROM clause".into()))?;
    let mut out = format!("SELECT {} FROM {}", select.join(", "), normalize_ws(from)?);
    if let Some(w) = ast.where_clause() {
        out.push_str(" WHERE ");
        out.push_str(&normalize_ws(w)?);
    }
    if grouped {
        if !ast.group_by.is_empty() {
            out.push_str(" GROUP BY ");
            out.push_str(&ast.group_by.join(", "));
        }
        if let Some(h) = ast.having_clause() {
            out.push_str(" HAVING ");
            out.push_str(&normalize_ws(h)?);
        }
    }
    Ok(out)
}

/// Appends `formula_text` as the last select item, leaving every other byte
/// of the query untouched.
pub fn inject_formula(ast: &QueryAst, formula_text: &str) -> String {
    let at = ast
        .select_items
        .last()
        .expect("a parsed query has at least one select item")
        .end;
    format!("{}, {}{}", &ast.sql[..at], formula_text, &ast.sql[at..])
}
