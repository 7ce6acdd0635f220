use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::manifest::{Manifest, MessageKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogKind {
    Query,
    Decrypt,
}

/// One line of a play log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub ts: Json,
    pub session: String,
    pub kind: LogKind,
    pub payload: Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenCount {
    pub token: u64,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<u16>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<MessageKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskStats {
    pub task: u16,
    pub questions: usize,
    pub successes: usize,
    pub hints: usize,
    /// Hint unlocks over all answer unlocks.
    pub failure_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub lines: usize,
    pub malformed: usize,
    pub sessions: usize,
    pub queries: usize,
    pub decrypts: usize,
    pub tokens: Vec<TokenCount>,
    /// Tokens that open no message: candidates for new hints.
    pub unmatched: Vec<TokenCount>,
    pub tasks: Vec<TaskStats>,
}

fn payload_token(payload: &Json) -> Option<u64> {
    match payload {
        Json::Number(n) => n.as_u64().or_else(|| n.as_i64().map(|i| i as u64)),
        Json::String(s) => {
            let t = s.trim();
            t.parse::<u64>()
                .ok()
                .or_else(|| t.parse::<i64>().ok().map(|i| i as u64))
        }
        _ => None,
    }
}

/// Aggregates a play log. Without a manifest every token is unmatched.
pub fn report(log: &str, manifest: Option<&Manifest>) -> Report {
    let index = manifest.map(Manifest::token_index).unwrap_or_default();
    let mut r = Report::default();
    let mut sessions = BTreeSet::new();
    let mut freq: BTreeMap<u64, usize> = BTreeMap::new();
    for line in log.lines().filter(|l| !l.trim().is_empty()) {
        r.lines += 1;
        let Ok(entry) = serde_json::from_str::<LogLine>(line) else {
            r.malformed += 1;
            continue;
        };
        match entry.kind {
            LogKind::Query => r.queries += 1,
            LogKind::Decrypt => match payload_token(&entry.payload) {
                Some(t) => {
                    r.decrypts += 1;
                    *freq.entry(t).or_default() += 1;
                }
                None => {
                    r.malformed += 1;
                    continue;
                }
            },
        }
        sessions.insert(entry.session);
    }
    r.sessions = sessions.len();
    let mut tasks: BTreeMap<u16, (usize, usize, usize)> = BTreeMap::new();
    for (token, count) in freq {
        let hit = index.get(&token);
        let tc = TokenCount {
            token,
            count,
            task: hit.map(|e| e.task),
            kind: hit.map(|e| e.kind),
        };
        if let Some(e) = hit {
            let s = tasks.entry(e.task).or_default();
            match e.kind {
                MessageKind::Question => s.0 += count,
                MessageKind::Success => s.1 += count,
                MessageKind::Hint => s.2 += count,
            }
        } else {
            r.unmatched.push(tc.clone());
        }
        r.tokens.push(tc);
    }
    r.tokens
        .sort_by(|a, b| b.count.cmp(&a.count).then(a.token.cmp(&b.token)));
    r.unmatched
        .sort_by(|a, b| b.count.cmp(&a.count).then(a.token.cmp(&b.token)));
    r.tasks = tasks
        .into_iter()
        .map(|(task, (questions, successes, hints))| TaskStats {
            task,
            questions,
            successes,
            hints,
            failure_rate: if successes + hints == 0 {
                0.0
            } else {
                hints as f64 / (successes + hints) as f64
            },
        })
        .collect();
    r
}

pub fn render_report(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} lines ({} malformed), {} sessions, {} queries, {} decrypt calls",
        r.lines, r.malformed, r.sessions, r.queries, r.decrypts
    );
    if !r.tasks.is_empty() {
        out.push_str("\ntask  questions  successes  hints  failure rate\n");
        for t in &r.tasks {
            let _ = writeln!(
                out,
                "{:03}   {:>9}  {:>9}  {:>5}  {:>11.1}%",
                t.task,
                t.questions,
                t.successes,
                t.hints,
                100.0 * t.failure_rate
            );
        }
    }
    if !r.tokens.is_empty() {
        out.push_str("\ntoken frequencies\n");
        for t in &r.tokens {
            let what = match (t.task, t.kind) {
                (Some(n), Some(k)) => format!("task {n:03} {k:?}").to_lowercase(),
                _ => "unmatched".to_owned(),
            };
            let _ = writeln!(out, "{:>20}  {:>5}  {what}", t.token, t.count);
        }
    }
    if !r.unmatched.is_empty() {
        out.push_str("\nunmatched tokens\n");
        for t in &r.unmatched {
            let _ = writeln!(out, "{:>20}  {:>5}", t.token, t.count);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::HashConfig;
    use crate::manifest::TokenEntry;

    fn line(kind: &str, payload: &str) -> String {
        format!(r#"{{"ts": 1.5, "session": "s1", "kind": "{kind}", "payload": {payload}}}"#)
    }

    fn manifest() -> Manifest {
        let mut m = Manifest::new(HashConfig::default(), 1, "?");
        m.tokens.push(TokenEntry {
            token: 777,
            task: 50,
            kind: MessageKind::Success,
            target: Some("078".into()),
        });
        m.tokens.push(TokenEntry {
            token: 888,
            task: 50,
            kind: MessageKind::Hint,
            target: None,
        });
        m
    }

    #[test]
    fn counts_known_and_unknown_tokens() {
        let log = [
            line("decrypt", "777"),
            line("decrypt", "\"777\""),
            line("decrypt", "777"),
            line("decrypt", "888"),
            line("decrypt", "5"),
            line("query", "\"SELECT 1\""),
            "not json".to_owned(),
        ]
        .join("\n");
        let m = manifest();
        let r = report(&log, Some(&m));
        assert_eq!((r.lines, r.malformed, r.queries, r.decrypts), (7, 1, 1, 5));
        assert_eq!(
            r.tokens[0],
            TokenCount {
                token: 777,
                count: 3,
                task: Some(50),
                kind: Some(MessageKind::Success)
            }
        );
        assert_eq!(r.unmatched.len(), 1);
        assert_eq!(r.unmatched[0].token, 5);
        assert_eq!(r.tasks.len(), 1);
        assert!((r.tasks[0].failure_rate - 0.25).abs() < 1e-12);
        assert!(render_report(&r).contains("unmatched tokens"));
    }

    #[test]
    fn empty_log() {
        let r = report("", None);
        assert_eq!(r, Report::default());
    }
}
