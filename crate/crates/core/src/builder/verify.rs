use std::collections::BTreeMap;
use std::fmt::Write as _;

use rusqlite::Connection;
use serde::Serialize;

use super::hashes::audit_hashes;
use super::messages::MessageRecord;
use super::schema::TableSpec;
use crate::compiler::{BlockRole, CompiledTask, Diagnostic};
use crate::crypto::{decrypt_probe, CipherEnvelope};
use crate::error::Result;
use crate::manifest::{Manifest, MessageKind};
use crate::runtime::MESSAGE_TABLE;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub checks: Vec<CheckOutcome>,
    pub warnings: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_ids(&self) -> Vec<u8> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.id)
            .collect()
    }

    pub fn check(&self, id: u8) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.passed { "ok" } else { "FAILED" };
            let _ = writeln!(out, "check {} {:<22} {status}", c.id, c.name);
            for d in &c.diagnostics {
                let _ = writeln!(out, "    {d}");
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

/// Everything the checks look at.
pub struct VerifyInput<'a> {
    pub conn: &'a Connection,
    pub tables: &'a [TableSpec],
    pub manifest: &'a Manifest,
    pub tasks: &'a [CompiledTask],
    pub script_diagnostics: &'a [Diagnostic],
    pub graph_error: Option<&'a str>,
    pub messages: &'a [MessageRecord],
}

fn outcome(id: u8, name: &'static str, diagnostics: Vec<String>) -> CheckOutcome {
    CheckOutcome {
        id,
        name,
        passed: diagnostics.is_empty(),
        diagnostics,
    }
}

fn role_name(role: BlockRole) -> &'static str {
    match role {
        BlockRole::Primary => "primary solution",
        BlockRole::Variant => "variant",
        BlockRole::Hint => "hint",
    }
}

fn where_(task: &CompiledTask, role: BlockRole, line: usize) -> String {
    format!(
        "task {:03}, {} at line {line}",
        task.number(),
        role_name(role)
    )
}

/// Runs the seven build checks.
pub fn verify_build(input: &VerifyInput<'_>) -> Result<CheckReport> {
    let mut report = CheckReport::default();

    let audit = audit_hashes(
        input.conn,
        input.tables,
        &input.manifest.hash,
        &input.manifest.disambiguator,
    )?;
    report
        .checks
        .push(outcome(1, "hash uniqueness", audit.describe()));

    let mut invalid = Vec::new();
    for task in input.tasks {
        for (block, o) in task.blocks() {
            let at = where_(task, block.role, block.line);
            if let Some(e) = &o.error {
                invalid.push(format!("{at}: {e}"));
            }
            invalid.extend(o.assertion_failures.iter().map(|f| format!("{at}: {f}")));
            report
                .warnings
                .extend(o.warnings.iter().map(|w| format!("{at}: {w}")));
        }
    }
    report.checks.push(outcome(2, "query validity", invalid));

    let mut conformity: Vec<String> = input
        .script_diagnostics
        .iter()
        .map(|d| format!("line {}: {}", d.line, d.message))
        .collect();
    conformity.extend(input.graph_error.map(str::to_owned));
    report
        .checks
        .push(outcome(3, "script conformity", conformity));

    let mut salts = Vec::new();
    for task in input.tasks {
        for (block, o) in task.blocks() {
            if o.formula.is_none() {
                continue;
            }
            let at = where_(task, block.role, block.line);
            if o.salt_numbers.is_empty() {
                salts.push(format!("{at}: the formula calls no salt function"));
            }
            for &n in o.salt_numbers.iter().filter(|&&n| n != task.number()) {
                salts.push(format!("{at}: the formula calls salt_{n:03}"));
            }
        }
    }
    report.checks.push(outcome(4, "salt consistency", salts));

    let mut useless = Vec::new();
    for task in input.tasks {
        for (block, o) in task.blocks() {
            if o.token.is_some() || o.error.is_some() {
                continue;
            }
            let at = where_(task, block.role, block.line);
            match block.role {
                BlockRole::Variant => report.warnings.push(format!("{at}: no token")),
                _ => useless.push(format!("{at}: the query yields no token")),
            }
        }
    }
    report.checks.push(outcome(5, "usefulness", useless));

    let mut owners: BTreeMap<u64, Vec<(u16, MessageKind)>> = BTreeMap::new();
    for m in input.messages {
        for &t in &m.unlock_tokens {
            owners.entry(t).or_default().push((m.task_number, m.kind));
        }
    }
    let clashes: Vec<String> = owners
        .iter()
        .filter(|(_, o)| o.len() > 1)
        .map(|(t, o)| {
            let who: Vec<String> = o
                .iter()
                .map(|(n, k)| format!("{k:?} of task {n:03}").to_lowercase())
                .collect();
            format!("token {t} unlocks {}", who.join(" and "))
        })
        .collect();
    report.checks.push(outcome(6, "token uniqueness", clashes));

    report
        .checks
        .push(outcome(7, "message round trip", round_trip(input)?));
    Ok(report)
}

fn round_trip(input: &VerifyInput<'_>) -> Result<Vec<String>> {
    let mut stmt = input
        .conn
        .prepare(&format!("SELECT rowid, msg FROM {MESSAGE_TABLE}"))?;
    let rows = stmt
        .query_map([], |r| Ok((r.get::<_, i64>(0)?, r.get::<_, String>(1)?)))?
        .collect::<rusqlite::Result<Vec<_>>>()?;
    let mut out = Vec::new();
    let mut envelopes = Vec::new();
    for (rowid, hex) in rows {
        match CipherEnvelope::from_hex(&hex) {
            Some(e) => envelopes.push((rowid, e, false)),
            None => out.push(format!("message row {rowid} is not a valid envelope")),
        }
    }
    for m in input.messages {
        for &token in &m.unlock_tokens {
            let mut found = false;
            for (_, env, used) in envelopes.iter_mut() {
                if decrypt_probe(token, env).is_some_and(|p| p == m.body) {
                    *used = true;
                    found = true;
                }
            }
            if !found {
                out.push(format!(
                    "{} message of task {:03} does not open under token {token}",
                    format!("{:?}", m.kind).to_lowercase(),
                    m.task_number
                ));
            }
        }
    }
    out.extend(
        envelopes
            .iter()
            .filter(|(_, _, used)| !used)
            .map(|(rowid, _, _)| format!("message row {rowid} opens under no token")),
    );
    Ok(out)
}

/// Checks that need only a shipped dump: hash uniqueness, and, given the
/// build manifest with its token index, token uniqueness and the message
/// round trip. The script checks (2 to 5) need the sources and are skipped.
pub fn verify_dump(
    conn: &Connection,
    tables: &[TableSpec],
    manifest: &Manifest,
) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    let audit = audit_hashes(conn, tables, &manifest.hash, &manifest.disambiguator)?;
    report
        .checks
        .push(outcome(1, "hash uniqueness", audit.describe()));
    if manifest.tokens.is_empty() {
        report
            .warnings
            .push("no token index: checks 6 and 7 need the build manifest".into());
        return Ok(report);
    }
    let mut stmt = conn.prepare(&format!("SELECT rowid, msg FROM {MESSAGE_TABLE}"))?;
    let rows = stmt
        .query_map([], |r| Ok((r.get::<_, i64>(0)?, r.get::<_, String>(1)?)))?
        .collect::<rusqlite::Result<Vec<_>>>()?;
    let mut broken = Vec::new();
    let mut envelopes = Vec::new();
    for (rowid, hex) in rows {
        match CipherEnvelope::from_hex(&hex) {
            Some(e) => envelopes.push((rowid, e, false)),
            None => broken.push(format!("message row {rowid} is not a valid envelope")),
        }
    }
    let mut clashes = Vec::new();
    for entry in &manifest.tokens {
        let mut opened = 0;
        for (_, env, used) in envelopes.iter_mut() {
            if decrypt_probe(entry.token, env).is_some() {
                *used = true;
                opened += 1;
            }
        }
        let who = format!(
            "{:?} token {} of task {:03}",
            entry.kind, entry.token, entry.task
        )
        .to_lowercase();
        match opened {
            0 => broken.push(format!("{who} opens no message")),
            1 => {}
            n => clashes.push(format!("{who} opens {n} messages")),
        }
    }
    broken.extend(
        envelopes
            .iter()
            .filter(|(_, _, used)| !used)
            .map(|(rowid, _, _)| format!("message row {rowid} opens under no token")),
    );
    let mut seen = BTreeMap::new();
    for entry in &manifest.tokens {
        *seen.entry(entry.token).or_insert(0usize) += 1;
    }
    clashes.extend(
        seen.iter()
            .filter(|(_, n)| **n > 1)
            .map(|(t, n)| format!("token {t} is listed {n} times")),
    );
    report.checks.push(outcome(6, "token uniqueness", clashes));
    report.checks.push(outcome(7, "message round trip", broken));
    Ok(report)
}
