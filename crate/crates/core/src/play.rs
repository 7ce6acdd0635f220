//! Minimal pass-through shell over a built game, with an optional play log.

use std::io::{BufRead, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use rusqlite::types::Value;
use rusqlite::Connection;
use serde_json::Value as Json;

use crate::compiler::{LogKind, LogLine};
use crate::error::{Error, Result};
use crate::sql::query_table;

/// Splits shell input on semicolons that sit outside quotes and comments.
/// Returns the complete statements and the unfinished tail.
pub fn split_input(text: &str) -> (Vec<String>, String) {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut current = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\'' | '"' | '`' | '[' => {
                let close = if c == '[' { ']' } else { c };
                current.push(c);
                i += 1;
                while i < chars.len() {
                    current.push(chars[i]);
                    i += 1;
                    if chars[i - 1] == close {
                        break;
                    }
                }
                continue;
            }
            '-' if chars.get(i + 1) == Some(&'-') => {
                while i < chars.len() && chars[i] != '\n' {
                    current.push(chars[i]);
                    i += 1;
                }
                continue;
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                current.push_str("/*");
                i += 2;
                while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    current.push(chars[i]);
                    i += 1;
                }
                if i < chars.len() {
                    current.push_str("*/");
                    i += 2;
                }
                continue;
            }
            ';' => {
                let stmt = current.trim();
                if !stmt.is_empty() {
                    out.push(stmt.to_owned());
                }
                current.clear();
            }
            _ => current.push(c),
        }
        i += 1;
    }
    (out, current)
}

/// Token of a `SELECT decrypt(<integer>)` statement.
pub fn decrypt_argument(statement: &str) -> Option<i128> {
    let compact: String = statement
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_ascii_lowercase();
    let inner = compact.strip_prefix("selectdecrypt(")?.strip_suffix(')')?;
    inner.parse().ok()
}

/// Lone multi-line text cell, printed as is (e.g. a decrypted message).
fn multiline_cell(rows: &[Vec<Value>]) -> Option<&str> {
    match rows {
        [row] => match row.as_slice() {
            [Value::Text(s)] if s.contains('\n') => Some(s),
            _ => None,
        },
        _ => None,
    }
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub struct Shell<'a> {
    conn: &'a Connection,
    session: String,
    log: Option<Box<dyn Write + 'a>>,
    clock: Box<dyn FnMut() -> f64 + 'a>,
    pub prompt: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ShellStats {
    pub statements: usize,
    pub errors: usize,
}

impl<'a> Shell<'a> {
    pub fn new(conn: &'a Connection) -> Self {
        Shell {
            conn,
            session: format!("{:x}", (now() * 1e6) as u64),
            log: None,
            clock: Box::new(now),
            prompt: true,
        }
    }

    pub fn with_log(mut self, log: impl Write + 'a, session: impl Into<String>) -> Self {
        self.log = Some(Box::new(log));
        self.session = session.into();
        self
    }

    pub fn with_clock(mut self, clock: impl FnMut() -> f64 + 'a) -> Self {
        self.clock = Box::new(clock);
        self
    }

    fn record(&mut self, statement: &str) -> Result<()> {
        let Some(log) = self.log.as_mut() else {
            return Ok(());
        };
        let (kind, payload) = match decrypt_argument(statement) {
            Some(n) => (LogKind::Decrypt, Json::from(n as i64)),
            None => (LogKind::Query, Json::from(statement)),
        };
        let line = LogLine {
            ts: Json::from((self.clock)()),
            session: self.session.clone(),
            kind,
            payload,
        };
        let text = serde_json::to_string(&line)?;
        writeln!(log, "{text}").map_err(|e| Error::io("play log", e))
    }

    /// Runs one statement and writes its result or error to `out`.
    pub fn execute<W: Write>(&mut self, statement: &str, out: &mut W) -> Result<bool> {
        self.record(statement)?;
        let io = |e| Error::io("output", e);
        let ok = match self.conn.prepare(statement) {
            Ok(stmt) if stmt.column_count() > 0 => {
                drop(stmt);
                match query_table(self.conn, statement) {
                    Ok(t) => {
                        match multiline_cell(&t.rows) {
                            Some(text) => writeln!(out, "{text}").map_err(io)?,
                            None => writeln!(out, "{}", t.render()).map_err(io)?,
                        }
                        true
                    }
                    Err(e) => {
                        writeln!(out, "error: {e}").map_err(io)?;
                        false
                    }
                }
            }
            Ok(mut stmt) => match stmt.execute([]) {
                Ok(n) => {
                    writeln!(out, "{n} row(s) changed").map_err(io)?;
                    true
                }
                Err(e) => {
                    writeln!(out, "error: {e}").map_err(io)?;
                    false
                }
            },
            Err(e) => {
                writeln!(out, "error: {e}").map_err(io)?;
                false
            }
        };
        Ok(ok)
    }

    /// Reads statements until end of input or `.quit`.
    pub fn run<R: BufRead, W: Write>(&mut self, input: R, out: &mut W) -> Result<ShellStats> {
        let io = |e| Error::io("shell", e);
        let mut stats = ShellStats::default();
        let mut pending = String::new();
        if self.prompt {
            write!(out, "sqlab> ").map_err(io)?;
            out.flush().map_err(io)?;
        }
        for line in input.lines() {
            let line = line.map_err(io)?;
            let t = line.trim();
            if pending.trim().is_empty() && (t == ".quit" || t == ".exit") {
                break;
            }
            pending.push_str(&line);
            pending.push('\n');
            let (statements, rest) = split_input(&pending);
            pending = rest;
            for s in statements {
                stats.statements += 1;
                if !self.execute(&s, out)? {
                    stats.errors += 1;
                }
            }
            if self.prompt {
                let p = if pending.trim().is_empty() {
                    "sqlab> "
                } else {
                    "   ...> "
                };
                write!(out, "{p}").map_err(io)?;
                out.flush().map_err(io)?;
            }
        }
        let tail = pending.trim();
        if !tail.is_empty() {
            stats.statements += 1;
            if !self.execute(tail, out)? {
                stats.errors += 1;
            }
        }
        if self.prompt {
            writeln!(out).map_err(io)?;
        }
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitting_respects_quotes_and_comments() {
        let (s, rest) = split_input("SELECT ';'; -- a;b\nSELECT 2; /* ; */ SELECT");
        assert_eq!(s, vec!["SELECT ';'", "-- a;b\nSELECT 2"]);
        assert_eq!(rest.trim(), "/* ; */ SELECT");
    }

    #[test]
    fn decrypt_calls_are_recognised() {
        assert_eq!(decrypt_argument("select  decrypt( 292 )"), Some(292));
        assert_eq!(decrypt_argument("SELECT decrypt(-5)"), Some(-5));
        assert_eq!(decrypt_argument("SELECT decrypt(token) FROM t"), None);
    }

    #[test]
    fn shell_logs_and_survives_errors() {
        let conn = Connection::open_in_memory().unwrap();
        let mut log = Vec::new();
        let mut out = Vec::new();
        let stats = {
            let mut shell = Shell::new(&conn).with_log(&mut log, "s").with_clock(|| 1.0);
            shell.prompt = false;
            shell
                .run(
                    "CREATE TABLE t(x);\nINSERT INTO t VALUES (1);\nSELEC 1;\nSELECT x\nFROM t;\n"
                        .as_bytes(),
                    &mut out,
                )
                .unwrap()
        };
        assert_eq!(
            stats,
            ShellStats {
                statements: 4,
                errors: 1
            }
        );
        let out = String::from_utf8(out).unwrap();
        assert!(out.contains("error:"));
        assert!(out.contains("| x |"));
        let log = String::from_utf8(log).unwrap();
        assert_eq!(log.lines().count(), 4);
        assert!(log.starts_with(
            r#"{"ts":1.0,"session":"s","kind":"query","payload":"CREATE TABLE t(x)"}"#
        ));
    }
}
