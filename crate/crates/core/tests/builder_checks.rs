//! The seven build checks, each tripped by its own corruption.

mod common;

use sqlab_core::builder::{load_dump, table_specs, verify_dump, GameBuild};
use sqlab_core::runtime::lookup_message;
use sqlab_core::sql::execute_token;

use common::corrupt::corrupted;
use common::{build, sources};

fn assert_only(build: &GameBuild, id: u8) {
    assert_eq!(
        build.report.failed_ids(),
        vec![id],
        "{}",
        build.report.render()
    );
}

#[test]
fn sample_game_passes_every_check() {
    let b = build(&sources());
    assert_eq!(b.report.checks.len(), 7);
    assert!(b.passed(), "{}", b.report.render());
    assert!(b.hash_audit.is_clean());
}

#[test]
fn duplicate_hash() {
    assert_only(&corrupted(1), 1);
}

#[test]
fn failing_cell() {
    let b = corrupted(2);
    assert_only(&b, 2);
    assert!(b.report.check(2).unwrap().diagnostics[0].starts_with("task 292, primary solution"));
}

#[test]
fn misordered_sections() {
    let b = corrupted(3);
    assert_only(&b, 3);
    assert!(b.report.check(3).unwrap().diagnostics[0].contains("hint before the primary solution"));
}

#[test]
fn mismatched_salt_number() {
    let b = corrupted(4);
    assert_only(&b, 4);
    assert!(b.report.check(4).unwrap().diagnostics[0].contains("salt_040"));
}

#[test]
fn token_less_hint() {
    assert_only(&corrupted(5), 5);
}

#[test]
fn colliding_tokens() {
    let b = corrupted(6);
    assert_only(&b, 6);
    assert!(
        b.report.check(6).unwrap().diagnostics[0].contains("hint of task 292 and hint of task 292")
    );
}

#[test]
fn corrupted_envelope() {
    let b = corrupted(7);
    assert_only(&b, 7);
    assert!(b
        .report
        .check(7)
        .unwrap()
        .diagnostics
        .iter()
        .any(|d| d.contains("message row 1")));
}

#[test]
fn shipped_dump_rechecks_hashes_tokens_and_envelopes() {
    let b = build(&sources());
    let (conn, embedded) = load_dump(&b.dump().unwrap()).unwrap();
    assert!(embedded.tokens.is_empty());
    let tables = table_specs(&conn).unwrap();
    let report = verify_dump(&conn, &tables, &b.manifest).unwrap();
    assert!(report.passed(), "{}", report.render());
    assert_eq!(
        report.checks.iter().map(|c| c.id).collect::<Vec<_>>(),
        [1, 6, 7]
    );
    let bare = verify_dump(&conn, &tables, &embedded).unwrap();
    assert_eq!(bare.checks.len(), 1);
    assert_eq!(bare.warnings.len(), 1);
}

#[test]
fn dump_round_trip_keeps_every_message() {
    let b = build(&sources());
    let dump = b.dump().unwrap();
    let (conn, manifest) = load_dump(&dump).unwrap();
    assert_eq!(sqlab_core::builder::emit_dump(&conn).unwrap(), dump);
    for entry in &b.manifest.tokens {
        let text = lookup_message(&conn, entry.token).expect("every indexed token opens a message");
        let rec = b
            .messages
            .iter()
            .find(|m| m.unlock_tokens.contains(&entry.token))
            .unwrap();
        assert_eq!(text, rec.body);
    }
    assert_eq!(manifest.salts, b.manifest.salts);
}

#[test]
fn hash_triggers_follow_updates() {
    let (conn, _) = load_dump(common::dump()).unwrap();
    let before: i64 = conn
        .query_row("SELECT hash FROM project WHERE prj_id = 30", [], |r| {
            r.get(0)
        })
        .unwrap();
    conn.execute_batch("UPDATE project SET location = 'Bellaire' WHERE prj_id = 30")
        .unwrap();
    let after: i64 = conn
        .query_row("SELECT hash FROM project WHERE prj_id = 30", [], |r| {
            r.get(0)
        })
        .unwrap();
    assert_ne!(before, after);
    let expected: i64 = conn
        .query_row(
            "SELECT sqlab_row_hash('project', prj_name, prj_id, location, dpt_id) FROM project WHERE prj_id = 30",
            [],
            |r| r.get(0),
        )
        .unwrap();
    assert_eq!(after, expected);
    conn.execute_batch("INSERT INTO project VALUES ('Chaff', 99, 'Houston', 1, NULL)")
        .unwrap();
    let fresh: Option<i64> = conn
        .query_row("SELECT hash FROM project WHERE prj_id = 99", [], |r| {
            r.get(0)
        })
        .unwrap();
    assert!(fresh.is_some());
}

#[test]
fn dml_task_tokens_come_from_the_follow_up_query() {
    let b = build(&sources());
    let task = b.tasks.iter().find(|t| t.number() == 78).unwrap();
    let (_, primary) = task.primary().unwrap();
    let follow_up = primary.formula.as_deref().expect("a follow-up query");
    assert!(follow_up.to_ascii_uppercase().starts_with("SELECT"));
    assert!(follow_up.contains("salt_078"));
    let (conn, _) = load_dump(&b.dump().unwrap()).unwrap();
    let before = execute_token(&conn, follow_up).unwrap();
    assert_ne!(
        before, primary.token,
        "the dump holds the state before the script"
    );
    let (block, _) = task.primary().unwrap();
    conn.execute_batch(&block.sql).unwrap();
    let token = execute_token(&conn, follow_up).unwrap().unwrap();
    assert_eq!(Some(token), primary.token);
    let text = lookup_message(&conn, token).unwrap();
    assert!(text.contains("101"));
    let (_, variant) = task.variants().next().unwrap();
    assert_eq!(variant.token, primary.token);
    let (_, hint) = task.hints().next().unwrap();
    assert_ne!(hint.token, primary.token);
    let hint_text = lookup_message(&conn, hint.token.unwrap()).unwrap();
    assert!(hint_text.contains("Keep the address format"));
}
