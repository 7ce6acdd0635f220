use rand::seq::SliceRandom;
use rand::{CryptoRng, RngCore};
use rusqlite::Connection;
use serde::Serialize;

use super::config::GameConfig;
use crate::compiler::{BlockRole, CompiledTask, Target, TaskGraph};
use crate::crypto::encrypt_message_with;
use crate::error::Result;
use crate::manifest::{MessageKind, TokenEntry};
use crate::runtime::MESSAGE_TABLE;
use crate::styling::markdown_to_unicode;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageRecord {
    pub task_number: u16,
    pub kind: MessageKind,
    /// Styled text, exactly as `decrypt` returns it.
    pub body: String,
    pub unlock_tokens: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

impl MessageRecord {
    pub fn token_entries(&self) -> impl Iterator<Item = TokenEntry> + '_ {
        self.unlock_tokens.iter().map(|&token| TokenEntry {
            token,
            task: self.task_number,
            kind: self.kind,
            target: self.target.clone(),
        })
    }
}

/// Heading, context, statement and formula of a task, in Markdown.
pub fn task_presentation(task: &CompiledTask, config: &GameConfig) -> String {
    let r = &task.record;
    let mut parts = vec![format!("## {}", r.heading())];
    if !r.context.is_empty() {
        parts.push(r.context.clone());
    }
    parts.push(r.statement.clone());
    if let Some(formula) = task.display_formula() {
        let lead = if formula
            .trim_start()
            .to_ascii_uppercase()
            .starts_with("SELECT ")
        {
            "After your modification, run:"
        } else {
            "Formula:"
        };
        let mut block = format!("{lead}\n```\n{formula}\n```");
        if let Some(control) = r
            .control()
            .filter(|_| formula.contains(crate::formula::PLACEHOLDER))
        {
            block.push('\n');
            block.push_str(
                &config
                    .instruction_template
                    .replace("{}", &control.instruction),
            );
        }
        parts.push(block);
    }
    parts.join("\n\n")
}

fn correction(task: &CompiledTask) -> String {
    let queries: Vec<String> = task
        .blocks()
        .filter(|(b, _)| b.role != BlockRole::Hint)
        .map(|(b, _)| format!("```sql\n{}\n```", b.sql))
        .collect();
    format!(
        "Correction of {}:\n\n{}",
        task.record.heading(),
        queries.join("\n\n")
    )
}

/// Question messages of the entry tasks, one success message per task and
/// one message per hint. Bodies are styled.
pub fn assemble_messages(
    tasks: &[CompiledTask],
    graph: &TaskGraph,
    config: &GameConfig,
) -> Vec<MessageRecord> {
    let mut out = Vec::new();
    let by_number = |n: u16| tasks.iter().find(|t| t.number() == n);
    for entry in graph.entries() {
        if let Some(task) = by_number(entry) {
            out.push(MessageRecord {
                task_number: entry,
                kind: MessageKind::Question,
                body: markdown_to_unicode(&task_presentation(task, config)),
                unlock_tokens: vec![u64::from(entry)],
                target: None,
            });
        }
    }
    for task in tasks {
        let tokens = task.solution_tokens();
        let target = task.primary().and_then(|(b, _)| b.target);
        if let (false, Some(target)) = (tokens.is_empty(), target) {
            let next = match target {
                Target::Task(n) => by_number(n)
                    .map(|t| task_presentation(t, config))
                    .unwrap_or_default(),
                Target::Exit => {
                    let mut s = task.record.epilogue.clone();
                    if !s.is_empty() {
                        s.push_str("\n\n");
                    }
                    s.push_str(&config.exit_text);
                    s
                }
            };
            let body = [config.congratulation.clone(), correction(task), next]
                .into_iter()
                .filter(|s| !s.is_empty())
                .collect::<Vec<_>>()
                .join("\n\n");
            let mut unlock_tokens = tokens;
            unlock_tokens.sort_unstable();
            out.push(MessageRecord {
                task_number: task.number(),
                kind: MessageKind::Success,
                body: markdown_to_unicode(&body),
                unlock_tokens,
                target: Some(target.to_string()),
            });
        }
        for (block, outcome) in task.hints() {
            let Some(token) = outcome.token else { continue };
            let text = block.hint.clone().unwrap_or_default();
            out.push(MessageRecord {
                task_number: task.number(),
                kind: MessageKind::Hint,
                body: markdown_to_unicode(&format!("**Hint ({}).** {text}", task.record.heading())),
                unlock_tokens: vec![token],
                target: None,
            });
        }
    }
    out
}

/// Fills `sqlab_msg` with one envelope per (record, token) pair, in an
/// order shuffled by `rng`. Returns the number of rows.
pub fn build_message_table<R: RngCore + CryptoRng>(
    conn: &Connection,
    records: &[MessageRecord],
    rng: &mut R,
) -> Result<usize> {
    conn.execute_batch(&format!(
        "DROP TABLE IF EXISTS {MESSAGE_TABLE}; CREATE TABLE {MESSAGE_TABLE} (msg TEXT NOT NULL);"
    ))?;
    let mut rows: Vec<String> = Vec::new();
    for record in records {
        for &token in &record.unlock_tokens {
            rows.push(encrypt_message_with(token, &record.body, rng).to_hex());
        }
    }
    rows.shuffle(rng);
    let mut stmt = conn.prepare(&format!("INSERT INTO {MESSAGE_TABLE} (msg) VALUES (?1)"))?;
    for row in &rows {
        stmt.execute([row])?;
    }
    Ok(rows.len())
}
