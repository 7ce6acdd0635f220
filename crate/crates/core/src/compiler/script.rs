//! Adventure script grammar.
//!
//! ````text
//! # Game title
//!
//! ## Episode [292] Title            (or `## Exercise [027] Title`)
//! Context paragraphs.
//! ### Statement
//! Statement paragraphs.
//! x = 1 # the first number of the column employees
//! ```sql
//! -- Formula: auto                  (auto | none | explicit text)
//! SELECT ...
//! --> 050                           (next task number, or `exit`)
//! ```
//! assert col("employees")[0] == x
//! ```sql
//! -- Hint: What about ties?
//! SELECT ...
//! ```
//! ### Epilogue
//! Text appended to the success message of an exit.
//! ````
//!
//! The first non-hint block of a task is its primary solution, the following
//! ones are variants, and hint blocks close the task.

use std::fmt;

use serde::Serialize;
use serde_json::Value as Json;

use crate::error::{Error, Result};
use crate::formula::{ControlBinding, ControlValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Episode,
    Exercise,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Episode => "Episode",
            TaskKind::Exercise => "Exercise",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Task(u16),
    Exit,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Task(n) => write!(f, "{n:03}"),
            Target::Exit => f.write_str("exit"),
        }
    }
}

impl Target {
    pub fn parse(text: &str) -> Option<Target> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("exit") {
            return Some(Target::Exit);
        }
        parse_task_number(t).map(Target::Task)
    }
}

fn parse_task_number(text: &str) -> Option<u16> {
    let t = text.trim();
    if t.is_empty() || t.len() > 3 || !t.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    t.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaSpec {
    /// No directive: primary solutions pick a formula, other blocks reuse
    /// the primary's.
    Inherit,
    Auto,
    None,
    Explicit(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRole {
    Primary,
    Variant,
    Hint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AssertExpr {
    /// `col("c") == [..]`
    Equals { column: String, values: Vec<Json> },
    /// `col("c")[i] == v`, negative indexes count from the end.
    At {
        column: String,
        index: i64,
        value: Json,
    },
    /// `v in col("c")`
    Contains { column: String, value: Json },
    /// `len(col("c")) == n`
    Len { column: String, len: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub expr: AssertExpr,
    pub text: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqlBlock {
    pub role: BlockRole,
    /// Query text with the directive lines removed.
    pub sql: String,
    pub formula: FormulaSpec,
    pub target: Option<Target>,
    pub hint: Option<String>,
    pub control: Option<ControlBinding>,
    pub assertions: Vec<Assertion>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskRecord {
    pub number: u16,
    pub kind: TaskKind,
    pub title: String,
    pub context: String,
    pub statement: String,
    pub epilogue: String,
    pub blocks: Vec<SqlBlock>,
    pub line: usize,
}

impl TaskRecord {
    pub fn primary(&self) -> Option<&SqlBlock> {
        self.blocks.iter().find(|b| b.role == BlockRole::Primary)
    }

    pub fn variants(&self) -> impl Iterator<Item = &SqlBlock> {
        self.blocks.iter().filter(|b| b.role == BlockRole::Variant)
    }

    pub fn hints(&self) -> impl Iterator<Item = &SqlBlock> {
        self.blocks.iter().filter(|b| b.role == BlockRole::Hint)
    }

    /// Control binding in force for the primary solution.
    pub fn control(&self) -> Option<&ControlBinding> {
        self.primary().and_then(|b| b.control.as_ref())
    }

    pub fn heading(&self) -> String {
        let mut h = format!("{} [{:03}]", self.kind, self.number);
        if !self.title.is_empty() {
            h.push_str(". ");
            h.push_str(&self.title);
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Adventure {
    pub title: Option<String>,
    pub tasks: Vec<TaskRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Context,
    Statement,
    Epilogue,
}

struct Builder {
    adventure: Adventure,
    diagnostics: Vec<Diagnostic>,
    section: Option<Section>,
    has_statement: bool,
    control: Option<(String, ControlBinding)>,
}

impl Builder {
    fn diag(&mut self, line: usize, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            line,
            message: message.into(),
        });
    }

    fn current(&mut self) -> Option<&mut TaskRecord> {
        self.adventure.tasks.last_mut()
    }

    fn finish_task(&mut self) {
        let has_statement = self.has_statement;
        let Some(task) = self.adventure.tasks.last_mut() else {
            return;
        };
        for text in [&mut task.context, &mut task.statement, &mut task.epilogue] {
            *text = text.trim().to_owned();
        }
        let (line, number) = (task.line, task.number);
        let missing_primary = task.primary().is_none();
        if !has_statement {
            self.diag(line, format!("task {number:03} has no statement section"));
        }
        if missing_primary {
            self.diag(line, format!("task {number:03} has no primary solution"));
        }
    }

    fn push_text(&mut self, line_no: usize, line: &str) {
        let section = self.section;
        let has_blocks = self.current().is_some_and(|t| !t.blocks.is_empty());
        let Some(task) = self.current() else {
            if !line.trim().is_empty() && self.adventure.title.is_none() {
                self.diag(line_no, "text before the first task header");
            }
            return;
        };
        let target = match section {
            Some(Section::Context) => &mut task.context,
            Some(Section::Statement) if !has_blocks => &mut task.statement,
            Some(Section::Epilogue) => &mut task.epilogue,
            _ => {
                if !line.trim().is_empty() {
                    self.diag(line_no, "free text between query blocks");
                }
                return;
            }
        };
        target.push_str(line);
        target.push('\n');
    }
}

fn parse_header(rest: &str) -> Option<(TaskKind, u16, String)> {
    let (kind, rest) = match rest.strip_prefix("Episode") {
        Some(r) => (TaskKind::Episode, r),
        None => (TaskKind::Exercise, rest.strip_prefix("Exercise")?),
    };
    let rest = rest.trim_start().strip_prefix('[')?;
    let close = rest.find(']')?;
    let number = parse_task_number(&rest[..close])?;
    let title = rest[close + 1..]
        .trim()
        .trim_start_matches(['.', ':'])
        .trim()
        .to_owned();
    Some((kind, number, title))
}

fn parse_control(line: &str) -> Option<(String, ControlBinding)> {
    let (name, rest) = line.split_once('=')?;
    let name = name.trim();
    let valid = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !valid || rest.starts_with('=') {
        return None;
    }
    let (value, instruction) = match rest.split_once('#') {
        Some((v, c)) => (v, c.trim()),
        None => (rest, ""),
    };
    if value.trim().is_empty() {
        return None;
    }
    Some((
        name.to_owned(),
        ControlBinding {
            value: ControlValue::parse(value),
            instruction: instruction.to_owned(),
        },
    ))
}

fn control_json(value: &ControlValue) -> Json {
    match value {
        ControlValue::Null => Json::Null,
        ControlValue::Integer(i) => Json::from(*i),
        ControlValue::Real(r) => Json::from(*r),
        ControlValue::Text(s) => Json::from(s.clone()),
    }
}

fn parse_literal(text: &str, control: Option<&(String, ControlBinding)>) -> Option<Json> {
    let t = text.trim();
    if let Some((name, binding)) = control {
        if t == name {
            return Some(control_json(&binding.value));
        }
    }
    let normalized = match t {
        "None" => "null".to_owned(),
        "True" => "true".to_owned(),
        "False" => "false".to_owned(),
        _ if t.len() >= 2 && t.starts_with('\'') && t.ends_with('\'') => {
            serde_json::to_string(&t[1..t.len() - 1]).ok()?
        }
        _ => t.to_owned(),
    };
    serde_json::from_str(&normalized).ok()
}

fn parse_list(text: &str, control: Option<&(String, ControlBinding)>) -> Option<Vec<Json>> {
    let inner = text.trim().strip_prefix('[')?.strip_suffix(']')?;
    if inner.trim().is_empty() {
        return Some(Vec::new());
    }
    let mut items = Vec::new();
    let mut depth = 0;
    let mut quote = None;
    let mut start = 0;
    let bytes = inner.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        match (quote, b) {
            (Some(q), _) if b == q && (i == 0 || bytes[i - 1] != b'\\') => quote = None,
            (Some(_), _) => {}
            (None, b'"' | b'\'') => quote = Some(b),
            (None, b'[') => depth += 1,
            (None, b']') => depth -= 1,
            (None, b',') if depth == 0 => {
                items.push(parse_literal(&inner[start..i], control)?);
                start = i + 1;
            }
            _ => {}
        }
    }
    items.push(parse_literal(&inner[start..], control)?);
    Some(items)
}

/// `col("name")` at the start of `text`: column name and remaining text.
fn parse_col(text: &str) -> Option<(String, &str)> {
    let rest = text.trim_start().strip_prefix("col(")?.trim_start();
    let q = rest.chars().next().filter(|c| *c == '"' || *c == '\'')?;
    let rest = &rest[1..];
    let end = rest.find(q)?;
    let name = rest[..end].to_owned();
    let rest = rest[end + 1..].trim_start().strip_prefix(')')?;
    Some((name, rest))
}

fn parse_assertion(text: &str, control: Option<&(String, ControlBinding)>) -> Option<AssertExpr> {
    let body = text.trim();
    if let Some(rest) = body.strip_prefix("len(") {
        let (column, rest) = parse_col(rest)?;
        let rest = rest
            .trim_start()
            .strip_prefix(')')?
            .trim_start()
            .strip_prefix("==")?;
        let len = rest.trim().parse().ok()?;
        return Some(AssertExpr::Len { column, len });
    }
    if body.starts_with("col(") {
        let (column, rest) = parse_col(body)?;
        let rest = rest.trim_start();
        if let Some(idx) = rest.strip_prefix('[') {
            let close = idx.find(']')?;
            let index = idx[..close].trim().parse().ok()?;
            let value = idx[close + 1..].trim_start().strip_prefix("==")?;
            return Some(AssertExpr::At {
                column,
                index,
                value: parse_literal(value, control)?,
            });
        }
        let values = parse_list(rest.strip_prefix("==")?, control)?;
        return Some(AssertExpr::Equals { column, values });
    }
    let at = body.find(" in col(")?;
    let value = parse_literal(&body[..at], control)?;
    let (column, rest) = parse_col(&body[at + 4..])?;
    rest.trim()
        .is_empty()
        .then_some(AssertExpr::Contains { column, value })
}

fn parse_block(b: &mut Builder, start: usize, lines: &[String]) {
    let mut sql = Vec::new();
    let mut formula = FormulaSpec::Inherit;
    let mut target = None;
    let mut hint: Option<String> = None;
    for (offset, raw) in lines.iter().enumerate() {
        let line_no = start + 1 + offset;
        let t = raw.trim();
        if let Some(rest) = t.strip_prefix("-->") {
            match Target::parse(rest) {
                Some(tg) => target = Some(tg),
                None => b.diag(line_no, format!("invalid arrow target {:?}", rest.trim())),
            }
        } else if let Some(rest) = t.strip_prefix("-- Hint:") {
            let h = hint.get_or_insert_with(String::new);
            if !h.is_empty() {
                h.push('\n');
            }
            h.push_str(rest.trim());
        } else if let Some(rest) = t.strip_prefix("-- Formula:") {
            let rest = rest.trim();
            formula = if rest.eq_ignore_ascii_case("auto") {
                FormulaSpec::Auto
            } else if rest.eq_ignore_ascii_case("none") {
                FormulaSpec::None
            } else {
                FormulaSpec::Explicit(rest.to_owned())
            };
        } else {
            sql.push(raw.as_str());
        }
    }
    let sql = sql.join("\n").trim().to_owned();
    if sql.is_empty() {
        b.diag(start, "empty query block");
        return;
    }
    if b.current().is_none() {
        b.diag(start, "query block before the first task header");
        return;
    }
    if !b.has_statement {
        b.diag(start, "query block before the statement");
    }
    let control = b.control.as_ref().map(|(_, c)| c.clone());
    let task = b.current().unwrap();
    let has_primary = task.primary().is_some();
    let has_hint = task
        .blocks
        .iter()
        .skip_while(|b| b.role != BlockRole::Primary)
        .any(|b| b.role == BlockRole::Hint);
    let role = match (&hint, has_primary) {
        (Some(_), _) => BlockRole::Hint,
        (None, false) => BlockRole::Primary,
        (None, true) => BlockRole::Variant,
    };
    let number = task.number;
    task.blocks.push(SqlBlock {
        role,
        sql,
        formula,
        target,
        hint,
        control,
        assertions: Vec::new(),
        line: start,
    });
    match role {
        BlockRole::Hint if !has_primary => b.diag(
            start,
            format!("hint before the primary solution of task {number:03}"),
        ),
        BlockRole::Hint if target.is_some() => b.diag(start, "hint blocks take no arrow target"),
        BlockRole::Variant if has_hint => {
            b.diag(start, format!("variant after a hint in task {number:03}"))
        }
        BlockRole::Primary if target.is_none() => b.diag(
            start,
            format!("primary solution of task {number:03} needs a `-->` target"),
        ),
        _ => {}
    }
}

fn parse_lines(text: &str) -> (Adventure, Vec<Diagnostic>) {
    let mut b = Builder {
        adventure: Adventure {
            title: None,
            tasks: Vec::new(),
        },
        diagnostics: Vec::new(),
        section: None,
        has_statement: false,
        control: None,
    };
    let mut fence: Option<(usize, Vec<String>)> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let t = line.trim();
        if let Some((start, body)) = fence.as_mut() {
            if t.starts_with("```") {
                let (start, body) = (*start, std::mem::take(body));
                fence = None;
                parse_block(&mut b, start, &body);
            } else {
                body.push(line.to_owned());
            }
            continue;
        }
        if let Some(lang) = t.strip_prefix("```") {
            if lang.trim().eq_ignore_ascii_case("sql") {
                fence = Some((line_no, Vec::new()));
                continue;
            }
            b.push_text(line_no, line);
            continue;
        }
        if let Some(rest) = t.strip_prefix("## ") {
            match parse_header(rest.trim()) {
                Some((kind, number, title)) => {
                    b.finish_task();
                    if b.adventure.tasks.iter().any(|t| t.number == number) {
                        b.diag(line_no, format!("task {number:03} is defined twice"));
                    }
                    b.adventure.tasks.push(TaskRecord {
                        number,
                        kind,
                        title,
                        context: String::new(),
                        statement: String::new(),
                        epilogue: String::new(),
                        blocks: Vec::new(),
                        line: line_no,
                    });
                    b.section = Some(Section::Context);
                    b.has_statement = false;
                    b.control = None;
                }
                None => b.diag(line_no, format!("unrecognized task header {t:?}")),
            }
            continue;
        }
        if let Some(rest) = t.strip_prefix("### ") {
            let name = rest.trim();
            if b.current().is_none() {
                b.diag(
                    line_no,
                    format!("section {name:?} before the first task header"),
                );
                continue;
            }
            if name.eq_ignore_ascii_case("statement") {
                let has_blocks = b.current().is_some_and(|t| !t.blocks.is_empty());
                if b.has_statement {
                    b.diag(line_no, "second statement section");
                } else if has_blocks {
                    b.diag(line_no, "statement after a query block");
                }
                b.has_statement = true;
                b.section = Some(Section::Statement);
            } else if name.eq_ignore_ascii_case("epilogue") {
                if !b.has_statement {
                    b.diag(line_no, "epilogue before the statement");
                }
                b.section = Some(Section::Epilogue);
            } else {
                b.diag(line_no, format!("unknown section {name:?}"));
            }
            continue;
        }
        if let Some(title) = t.strip_prefix("# ") {
            if b.adventure.tasks.is_empty() && b.adventure.title.is_none() {
                b.adventure.title = Some(title.trim().to_owned());
            } else {
                b.push_text(line_no, line);
            }
            continue;
        }
        if let Some(rest) = t.strip_prefix("assert ") {
            let control = b.control.clone();
            let expr = parse_assertion(rest, control.as_ref());
            let Some(block) = b.current().and_then(|t| t.blocks.last_mut()) else {
                b.diag(line_no, "assertion without a preceding query block");
                continue;
            };
            match expr {
                Some(expr) => block.assertions.push(Assertion {
                    expr,
                    text: t.to_owned(),
                    line: line_no,
                }),
                None => b.diag(line_no, format!("cannot parse assertion {t:?}")),
            }
            continue;
        }
        if b.has_statement && b.section == Some(Section::Statement) {
            if let Some(control) = parse_control(t) {
                b.control = Some(control);
                continue;
            }
        }
        b.push_text(line_no, line);
    }
    if let Some((start, _)) = fence {
        b.diag(start, "unterminated query block");
    }
    b.finish_task();
    let mut adventure = b.adventure;
    // The `{{name}}` interpolation of the control value becomes the placeholder.
    for task in &mut adventure.tasks {
        for block in &mut task.blocks {
            if let FormulaSpec::Explicit(f) = &mut block.formula {
                *f = interpolate_placeholder(f);
            }
        }
    }
    (adventure, b.diagnostics)
}

/// Replaces every `{{name}}` with the `(0.0)` placeholder.
pub fn interpolate_placeholder(text: &str) -> String {
    let mut out = String::new();
    let mut rest = text;
    while let Some(open) = rest.find("{{") {
        let Some(close) = rest[open..].find("}}") else {
            break;
        };
        out.push_str(&rest[..open]);
        out.push_str(crate::formula::PLACEHOLDER);
        rest = &rest[open + close + 2..];
    }
    out.push_str(rest);
    out
}

/// Parses a script, rejecting any structural deviation.
pub fn parse_adventure(text: &str) -> Result<Adventure> {
    let (adventure, diagnostics) = parse_lines(text);
    match diagnostics.into_iter().next() {
        Some(d) => Err(Error::Script {
            line: d.line,
            message: d.message,
        }),
        None => Ok(adventure),
    }
}

/// Parses a script, keeping whatever could be recovered together with the
/// structural diagnostics.
pub fn parse_adventure_lenient(text: &str) -> (Adventure, Vec<Diagnostic>) {
    parse_lines(text)
}
