//! One build per check, each broken in the way that check must catch.

use sqlab_core::builder::{build_sources, GameBuild};
use sqlab_core::runtime::MESSAGE_TABLE;

use super::{build, sources};

pub const HINT_292: &str = "```sql
-- Hint: Several employees may share the lowest salary. Do not keep only one of them.
SELECT emp_id, emp_name, salary
  FROM employee A
 ORDER BY salary
 LIMIT 1
```
";

const PRIMARY_292_START: &str = "```sql
SELECT emp_id, emp_name, salary
  FROM employee A
 WHERE salary = (SELECT min(salary) FROM employee)";

const SELF_JOIN_HINT: &str = "-- Hint: The self-join on employee is useless.\n";

pub const NAMES: [&str; 7] = [
    "duplicate hash",
    "failing cell",
    "misordered sections",
    "mismatched salt number",
    "token-less hint",
    "colliding tokens",
    "corrupted envelope",
];

fn with_script(edit: impl FnOnce(&str) -> String) -> GameBuild {
    let mut src = sources();
    let script = edit(&src.script);
    assert_ne!(script, src.script, "the corruption changed nothing");
    src.script = script;
    build_sources(&src).unwrap()
}

/// The sample game broken so that check `id` (1 to 7) fails.
pub fn corrupted(id: u8) -> GameBuild {
    match id {
        1 => {
            let mut b = build(&sources());
            b.conn
                .execute_batch(
                    "UPDATE employee SET hash = (SELECT hash FROM employee WHERE emp_id = '888665555')
                      WHERE emp_id = '123456789'",
                )
                .unwrap();
            b.reverify().unwrap();
            b
        }
        2 => with_script(|s| {
            s.replacen(
                r#"len(col("emp_name")) == 3"#,
                r#"len(col("emp_name")) == 4"#,
                1,
            )
        }),
        3 => with_script(|s| {
            s.replacen(HINT_292, "", 1).replacen(
                PRIMARY_292_START,
                &format!("{HINT_292}\n{PRIMARY_292_START}"),
                1,
            )
        }),
        4 => with_script(|s| {
            s.replacen(
                SELF_JOIN_HINT,
                &format!(
                    "{SELF_JOIN_HINT}-- Formula: salt_040(sum(nn(A.hash)) OVER ()) AS token\n"
                ),
                1,
            )
        }),
        5 => with_script(|s| {
            s.replacen(
                SELF_JOIN_HINT,
                &format!("{SELF_JOIN_HINT}-- Formula: none\n"),
                1,
            )
        }),
        6 => with_script(|s| {
            s.replacen(
                HINT_292,
                &format!(
                    "{HINT_292}\n{}",
                    HINT_292.replace("Do not keep", "Never keep")
                ),
                1,
            )
        }),
        7 => {
            let mut b = build(&sources());
            let hex: String = b
                .conn
                .query_row(
                    &format!("SELECT msg FROM {MESSAGE_TABLE} WHERE rowid = 1"),
                    [],
                    |r| r.get(0),
                )
                .unwrap();
            let mut bytes = hex.into_bytes();
            let last = bytes.len() - 1;
            bytes[last] = if bytes[last] == b'0' { b'1' } else { b'0' };
            let flipped = String::from_utf8(bytes).unwrap();
            b.conn
                .execute(
                    &format!("UPDATE {MESSAGE_TABLE} SET msg = ?1 WHERE rowid = 1"),
                    [flipped],
                )
                .unwrap();
            b.reverify().unwrap();
            b
        }
        _ => panic!("no check {id}"),
    }
}
