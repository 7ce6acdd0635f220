use rusqlite::types::Value;
use rusqlite::Connection;
use serde::Serialize;
use serde_json::Value as Json;

use super::script::{AssertExpr, Assertion, BlockRole, FormulaSpec, SqlBlock, TaskRecord};
use crate::error::{Error, Result};
use crate::formula::{
    default_aliases, render_formula, select_formula_with, substitute_control, FormulaClass,
    FormulaKind, PLACEHOLDER,
};
use crate::manifest::Manifest;
use crate::sql::{
    inject_formula, parse_statement, query_table, quote_ident, split_statements, token_of,
    QueryAst, ResultTable, Statement,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockOutcome {
    pub role: BlockRole,
    pub line: usize,
    pub token: Option<u64>,
    /// Formula as shown to players, placeholder included. For DML blocks
    /// this is the whole follow-up query.
    pub formula: Option<String>,
    pub executed_sql: String,
    pub salt_numbers: Vec<u16>,
    /// Execution error: the block is invalid.
    pub error: Option<String>,
    pub assertion_failures: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub result: Option<ResultTable>,
}

impl BlockOutcome {
    pub fn is_valid(&self) -> bool {
        self.error.is_none() && self.assertion_failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompiledTask {
    pub record: TaskRecord,
    /// One outcome per block, in block order.
    pub outcomes: Vec<BlockOutcome>,
}

impl CompiledTask {
    pub fn number(&self) -> u16 {
        self.record.number
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&SqlBlock, &BlockOutcome)> {
        self.record.blocks.iter().zip(&self.outcomes)
    }

    pub fn primary(&self) -> Option<(&SqlBlock, &BlockOutcome)> {
        self.blocks().find(|(b, _)| b.role == BlockRole::Primary)
    }

    pub fn hints(&self) -> impl Iterator<Item = (&SqlBlock, &BlockOutcome)> {
        self.blocks().filter(|(b, _)| b.role == BlockRole::Hint)
    }

    pub fn variants(&self) -> impl Iterator<Item = (&SqlBlock, &BlockOutcome)> {
        self.blocks().filter(|(b, _)| b.role == BlockRole::Variant)
    }

    /// Tokens of correct answers: the primary one first, then any distinct
    /// variant token.
    pub fn solution_tokens(&self) -> Vec<u64> {
        let mut out: Vec<u64> = Vec::new();
        for (b, o) in self.blocks() {
            if b.role == BlockRole::Hint {
                continue;
            }
            if let Some(t) = o.token {
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        out
    }

    /// Formula shown with the statement, from the primary solution.
    pub fn display_formula(&self) -> Option<&str> {
        self.primary().and_then(|(_, o)| o.formula.as_deref())
    }
}

/// Resolved formula for one block.
#[derive(Debug, Clone, PartialEq)]
enum Choice {
    Raw,
    Text(String),
}

/// Numbers `ddd` of every `salt_ddd(` call in `text`.
pub fn salt_numbers(text: &str) -> Vec<u16> {
    let lower = text.to_ascii_lowercase();
    let mut out = Vec::new();
    let mut rest = lower.as_str();
    while let Some(at) = rest.find("salt_") {
        let tail = &rest[at + 5..];
        let digits: String = tail.chars().take_while(char::is_ascii_digit).collect();
        let after = tail[digits.len()..].trim_start();
        if !digits.is_empty() && after.starts_with('(') {
            if let Ok(n) = digits.parse() {
                out.push(n);
            }
        }
        rest = &tail[digits.len()..];
    }
    out
}

fn token_item(ast: &QueryAst) -> Option<String> {
    ast.has_token_column()
        .then(|| ast.select_texts().last().map(|s| s.trim().to_owned()))
        .flatten()
}

fn json_matches(v: &Value, j: &Json) -> bool {
    match (v, j) {
        (Value::Null, Json::Null) => true,
        (Value::Integer(i), Json::Number(n)) => match n.as_i64() {
            Some(k) => *i == k,
            None => n.as_f64() == Some(*i as f64),
        },
        (Value::Real(r), Json::Number(n)) => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            (r - x).abs() <= 1e-6 * r.abs().max(1.0)
        }
        (Value::Integer(i), Json::Bool(b)) => *i == i64::from(*b),
        (Value::Text(s), Json::String(t)) => s == t,
        _ => false,
    }
}

fn show(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Integer(i) => i.to_string(),
        Value::Real(r) => r.to_string(),
        Value::Text(s) => format!("{s:?}"),
        Value::Blob(b) => format!("x'{}'", hex::encode(b)),
    }
}

/// Evaluates one assertion against `table`; `Err` carries the reason.
pub fn check_assertion(expr: &AssertExpr, table: &ResultTable) -> std::result::Result<(), String> {
    let column = match expr {
        AssertExpr::Equals { column, .. }
        | AssertExpr::At { column, .. }
        | AssertExpr::Contains { column, .. }
        | AssertExpr::Len { column, .. } => column,
    };
    let values = table
        .column(column)
        .ok_or_else(|| format!("no column named {column:?}"))?;
    let listing = || {
        values
            .iter()
            .map(|v| show(v))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let ok = match expr {
        AssertExpr::Equals { values: want, .. } => {
            want.len() == values.len() && values.iter().zip(want).all(|(v, j)| json_matches(v, j))
        }
        AssertExpr::At { index, value, .. } => {
            let n = values.len() as i64;
            let i = if *index < 0 { n + index } else { *index };
            (0..n).contains(&i) && json_matches(values[i as usize], value)
        }
        AssertExpr::Contains { value, .. } => values.iter().any(|v| json_matches(v, value)),
        AssertExpr::Len { len, .. } => values.len() == *len,
    };
    if ok {
        Ok(())
    } else {
        Err(format!("column {column:?} holds [{}]", listing()))
    }
}

struct Executor<'a> {
    conn: &'a Connection,
    manifest: &'a Manifest,
}

enum Prepared {
    Select(Box<QueryAst>),
    Dml { sql: String, table: String },
}

impl Executor<'_> {
    fn prepare(&self, sql: &str) -> std::result::Result<Prepared, String> {
        let statements = split_statements(sql).map_err(|e| e.to_string())?;
        if statements.len() != 1 {
            return Err(format!(
                "expected one statement, found {}",
                statements.len()
            ));
        }
        match parse_statement(&statements[0]).map_err(|e| e.to_string())? {
            Statement::Select(ast) => Ok(Prepared::Select(ast)),
            Statement::Dml(d) => Ok(Prepared::Dml {
                sql: d.sql,
                table: d.table,
            }),
        }
    }

    fn auto_formula(&self, task: u16, prepared: &Prepared) -> Result<String> {
        let salt = self
            .manifest
            .salt(task)
            .ok_or_else(|| Error::Formula(format!("no salt for task {task:03}")))?;
        let class = match prepared {
            Prepared::Select(ast) => {
                select_formula_with(ast.traits(), &self.manifest.formula_defaults)?
            }
            Prepared::Dml { .. } => {
                FormulaClass::with_defaults(FormulaKind::Basic, 1, &self.manifest.formula_defaults)?
            }
        };
        render_formula(&class, salt, &default_aliases(class.dimension))
    }

    fn choose(
        &self,
        task: u16,
        block: &SqlBlock,
        prepared: &Prepared,
        primary: Option<&Choice>,
    ) -> Result<Choice> {
        Ok(match &block.formula {
            FormulaSpec::None => Choice::Raw,
            FormulaSpec::Explicit(t) => Choice::Text(t.clone()),
            FormulaSpec::Auto => Choice::Text(self.auto_formula(task, prepared)?),
            FormulaSpec::Inherit => match (block.role, primary) {
                (BlockRole::Primary, _) | (_, None) => {
                    Choice::Text(self.auto_formula(task, prepared)?)
                }
                (_, Some(c)) => c.clone(),
            },
        })
    }

    fn substitute(&self, formula: &str, block: &SqlBlock) -> std::result::Result<String, String> {
        if !formula.contains(PLACEHOLDER) {
            return Ok(formula.to_owned());
        }
        let binding = block
            .control
            .as_ref()
            .ok_or("controlled formula without a control value line")?;
        substitute_control(formula, binding, &self.manifest.hash)
            .map(|s| s.text)
            .map_err(|e| e.to_string())
    }

    fn run(&self, sql: &str) -> std::result::Result<ResultTable, String> {
        query_table(self.conn, sql).map_err(|e| e.to_string())
    }

    fn savepoint(&self, sql: &str) {
        if let Err(e) = self.conn.execute_batch(sql) {
            log::error!("savepoint command {sql:?} failed: {e}");
        }
    }

    fn execute_block(
        &self,
        task: u16,
        block: &SqlBlock,
        primary: &mut Option<Choice>,
    ) -> BlockOutcome {
        let mut out = BlockOutcome {
            role: block.role,
            line: block.line,
            token: None,
            formula: None,
            executed_sql: block.sql.clone(),
            salt_numbers: Vec::new(),
            error: None,
            assertion_failures: Vec::new(),
            warnings: Vec::new(),
            result: None,
        };
        let prepared = match self.prepare(&block.sql) {
            Ok(p) => p,
            Err(e) => {
                out.error = Some(e);
                return out;
            }
        };
        let choice = match self.choose(task, block, &prepared, primary.as_ref()) {
            Ok(c) => c,
            Err(e) => {
                out.error = Some(e.to_string());
                return out;
            }
        };
        if block.role == BlockRole::Primary {
            *primary = Some(match (&prepared, &choice) {
                (Prepared::Select(ast), _) if ast.has_token_column() => {
                    token_item(ast).map(Choice::Text).unwrap_or(Choice::Raw)
                }
                _ => choice.clone(),
            });
        }
        let outcome = match &prepared {
            Prepared::Select(ast) => self.run_select(block, ast, &choice, &mut out),
            Prepared::Dml { sql, table } => self.run_dml(block, sql, table, &choice, &mut out),
        };
        match outcome {
            Ok(table) => {
                for Assertion { expr, text, line } in &block.assertions {
                    if let Err(why) = check_assertion(expr, &table) {
                        out.assertion_failures
                            .push(format!("line {line}: `{text}` failed: {why}"));
                    }
                }
                match token_of(&table) {
                    Ok(t) => out.token = t,
                    Err(_)
                        if !table
                            .columns
                            .iter()
                            .any(|c| c.eq_ignore_ascii_case("token")) => {}
                    Err(e) => out.error = Some(e.to_string()),
                }
                out.result = Some(table);
            }
            Err(_) if out.error.is_some() => {}
            Err(e) if block.role == BlockRole::Variant => {
                out.warnings.push(format!("variant yields no token: {e}"));
            }
            Err(e) => out.error = Some(e),
        }
        out
    }

    fn run_select(
        &self,
        block: &SqlBlock,
        ast: &QueryAst,
        choice: &Choice,
        out: &mut BlockOutcome,
    ) -> std::result::Result<ResultTable, String> {
        if let Some(item) = token_item(ast) {
            out.salt_numbers = salt_numbers(&item);
            out.formula = Some(item);
            return self.run(&ast.sql);
        }
        let Choice::Text(formula) = choice else {
            return self.run(&ast.sql);
        };
        out.salt_numbers = salt_numbers(formula);
        out.formula = Some(formula.clone());
        let sql = inject_formula(ast, &self.substitute(formula, block)?);
        out.executed_sql = sql.clone();
        match self.run(&sql) {
            Ok(t) => Ok(t),
            Err(e) if block.role == BlockRole::Variant => {
                // A variant only has to be valid SQL on its own.
                if let Err(raw) = self.run(&ast.sql) {
                    out.error = Some(raw);
                }
                Err(e)
            }
            Err(e) => Err(e),
        }
    }

    fn run_dml(
        &self,
        block: &SqlBlock,
        dml: &str,
        table: &str,
        choice: &Choice,
        out: &mut BlockOutcome,
    ) -> std::result::Result<ResultTable, String> {
        if let Err(e) = self.conn.execute(dml, []) {
            out.error = Some(e.to_string());
            return Err(e.to_string());
        }
        let Choice::Text(formula) = choice else {
            return Ok(ResultTable {
                columns: Vec::new(),
                rows: Vec::new(),
            });
        };
        let post = format!("SELECT {formula} FROM {} A", quote_ident(table));
        out.salt_numbers = salt_numbers(formula);
        out.formula = Some(post.clone());
        let sql = format!(
            "SELECT {} FROM {} A",
            self.substitute(formula, block)?,
            quote_ident(table)
        );
        out.executed_sql = format!("{dml};\n{sql}");
        self.run(&sql)
    }
}

/// Executes every task in script order, the primary solution of each task
/// first, then its other blocks in order. Primary solutions keep their effects for the following tasks; variants and hints are
/// rolled back. The database is left as it was found.
pub fn execute_records(
    conn: &Connection,
    tasks: &[TaskRecord],
    manifest: &Manifest,
) -> Result<Vec<CompiledTask>> {
    let exec = Executor { conn, manifest };
    conn.execute_batch("SAVEPOINT sqlab_script")?;
    let mut compiled = Vec::with_capacity(tasks.len());
    for task in tasks {
        let mut primary = None;
        let mut order: Vec<usize> = (0..task.blocks.len()).collect();
        order.sort_by_key(|&i| task.blocks[i].role != BlockRole::Primary);
        let mut outcomes = vec![None; task.blocks.len()];
        for i in order {
            let block = &task.blocks[i];
            exec.savepoint("SAVEPOINT sqlab_block");
            let outcome = exec.execute_block(task.number, block, &mut primary);
            if block.role == BlockRole::Primary {
                exec.savepoint("RELEASE sqlab_block");
            } else {
                exec.savepoint("ROLLBACK TO sqlab_block; RELEASE sqlab_block");
            }
            outcomes[i] = Some(outcome);
        }
        compiled.push(CompiledTask {
            record: task.clone(),
            outcomes: outcomes.into_iter().flatten().collect(),
        });
    }
    conn.execute_batch("ROLLBACK TO sqlab_script; RELEASE sqlab_script")?;
    Ok(compiled)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_salt_numbers() {
        assert_eq!(
            salt_numbers("salt_050((0.0) + SALT_7 (x)) AS token"),
            vec![50, 7]
        );
        assert!(salt_numbers("salt_x(1) salt_12").is_empty());
    }

    #[test]
    fn assertion_checks() {
        let t = ResultTable {
            columns: vec!["name".into(), "n".into()],
            rows: vec![
                vec![Value::Text("Fred Dix".into()), Value::Integer(1)],
                vec![Value::Text("Ann".into()), Value::Real(2.5)],
            ],
        };
        let ok = |e| check_assertion(&e, &t).is_ok();
        assert!(ok(AssertExpr::Len {
            column: "name".into(),
            len: 2
        }));
        assert!(ok(AssertExpr::At {
            column: "n".into(),
            index: -1,
            value: Json::from(2.5)
        }));
        assert!(ok(AssertExpr::At {
            column: "n".into(),
            index: 0,
            value: Json::from(1.0)
        }));
        assert!(ok(AssertExpr::Contains {
            column: "name".into(),
            value: Json::from("Ann")
        }));
        assert!(!ok(AssertExpr::Equals {
            column: "name".into(),
            values: vec![Json::from("Fred Dix")]
        }));
        let err = check_assertion(
            &AssertExpr::Len {
                column: "gold".into(),
                len: 1,
            },
            &t,
        )
        .unwrap_err();
        assert!(err.contains("no column named \"gold\""));
    }
}
