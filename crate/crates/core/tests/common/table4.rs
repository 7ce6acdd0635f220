//! The single-cell queries on the "5 hours on project 30" question.

use std::collections::{BTreeMap, BTreeSet};

use rusqlite::types::Value;
use sqlab_core::formula::{FormulaClass, FormulaKind};
use sqlab_core::sql::query_table;

use super::{game, token};

pub type Classes = BTreeSet<BTreeSet<&'static str>>;

/// Query ids with their text, in table order.
pub const SAME_RESULT: [(&str, &str); 23] = [
    ("G1", "SELECT emp_name FROM employee A WHERE emp_id IN (SELECT emp_id FROM works_on WHERE hours = 5 AND prj_id = '30')"),
    ("G2", "SELECT A.emp_name FROM employee A JOIN works_on B USING (emp_id) WHERE hours = 5 AND prj_id = '30'"),
    ("G3", "SELECT B.emp_name FROM employee B JOIN works_on A USING (emp_id) WHERE hours = 5 AND prj_id = '30'"),
    ("G4", "SELECT A.emp_name FROM employee A, works_on B WHERE A.emp_id = B.emp_id AND hours = 5 AND prj_id = '30'"),
    ("G5", "SELECT B.emp_name FROM employee B, works_on A WHERE A.emp_id = B.emp_id AND hours = 5 AND prj_id = '30'"),
    ("O1", "SELECT A.emp_name FROM employee A RIGHT JOIN works_on B USING (emp_id) WHERE hours = 5 AND prj_id = '30'"),
    ("O2", "SELECT B.emp_name FROM employee B RIGHT JOIN works_on A USING (emp_id) WHERE hours = 5 AND prj_id = '30'"),
    ("O3", "SELECT A.emp_name FROM employee A JOIN employee B USING (emp_id) JOIN works_on O USING (emp_id) WHERE hours = 5 AND prj_id = '30'"),
    ("O4", "SELECT B.emp_name FROM employee B JOIN employee O USING (emp_id) JOIN works_on A USING (emp_id) WHERE hours = 5 AND prj_id = '30'"),
    ("O5", "SELECT O.emp_name FROM employee O JOIN employee A USING (emp_id) JOIN works_on B USING (emp_id) WHERE hours = 5 AND prj_id = '30'"),
    ("O6", "SELECT A.emp_name FROM employee A JOIN works_on B USING (emp_id) JOIN project O USING (prj_id) WHERE hours = 5 AND prj_id = '30'"),
    ("O7", "SELECT B.emp_name FROM employee B JOIN works_on O USING (emp_id) JOIN project A USING (prj_id) WHERE hours = 5 AND prj_id = '30'"),
    ("O8", "SELECT O.emp_name FROM employee O JOIN works_on A USING (emp_id) JOIN project B USING (prj_id) WHERE hours = 5 AND prj_id = '30'"),
    ("I1", "SELECT A.emp_name FROM employee A LEFT JOIN works_on B USING (emp_id) WHERE hours = 5 AND prj_id = '30'"),
    ("I2", "SELECT B.emp_name FROM employee B LEFT JOIN works_on A USING (emp_id) WHERE hours = 5 AND prj_id = '30'"),
    ("I3", "SELECT 'Ahmad V. Jabbar'"),
    ("I4", "SELECT emp_name FROM employee A WHERE emp_name = 'Ahmad V. Jabbar'"),
    ("I5", "SELECT emp_name FROM employee A WHERE emp_id = '987987987'"),
    ("I6", "SELECT DISTINCT 'Ahmad V. Jabbar' FROM employee A"),
    ("I7", "SELECT DISTINCT 'Ahmad V. Jabbar' FROM employee A, works_on B"),
    ("I8", "SELECT emp_name FROM employee A JOIN works_on B USING (emp_id) WHERE hours = 5"),
    ("I9", "SELECT A.emp_name FROM employee A JOIN project B USING (dpt_id) WHERE prj_id = '30' and sex = 'M'"),
    ("I10", "SELECT B.emp_name FROM employee B JOIN project A USING (dpt_id) WHERE prj_id = '30' and sex = 'M'"),
];

/// Equality classes of the tokens, and the ids whose token is an error.
pub fn partition(dimension: usize) -> (Classes, BTreeSet<&'static str>) {
    let (conn, manifest) = game();
    let class = FormulaClass::new(FormulaKind::Basic, dimension).unwrap();
    let mut classes: BTreeMap<u64, BTreeSet<&str>> = BTreeMap::new();
    let mut errors = BTreeSet::new();
    for (id, q) in SAME_RESULT {
        let single = query_table(&conn, q).unwrap();
        assert_eq!(
            single.rows,
            vec![vec![Value::Text("Ahmad V. Jabbar".into())]],
            "{id}"
        );
        match token(&conn, &manifest, 27, &class, q) {
            Some(t) => {
                classes.entry(t).or_default().insert(id);
            }
            None => {
                errors.insert(id);
            }
        }
    }
    (classes.into_values().collect(), errors)
}

pub fn set<const N: usize>(ids: [&'static str; N]) -> BTreeSet<&'static str> {
    BTreeSet::from(ids)
}

/// Expected token classes and error ids with one-table formulas.
pub fn expected_one_dimension() -> (Classes, BTreeSet<&'static str>) {
    (
        BTreeSet::from([
            set([
                "G1", "G2", "G4", "O1", "O3", "O5", "O6", "I1", "I4", "I5", "I8", "I9",
            ]),
            set(["G3", "G5", "O2", "O4", "O8", "I2"]),
            set(["O7", "I10"]),
            set(["I6"]),
            set(["I7"]),
        ]),
        set(["I3"]),
    )
}

/// Expected token classes and error ids with two-table formulas.
pub fn expected_two_dimensions() -> (Classes, BTreeSet<&'static str>) {
    (
        BTreeSet::from([
            set([
                "G2", "G3", "G4", "G5", "O1", "O2", "O4", "O5", "O6", "I1", "I2", "I8",
            ]),
            set(["O7", "I9", "I10"]),
            set(["O3"]),
            set(["O8"]),
            set(["I7"]),
        ]),
        set(["G1", "I3", "I4", "I5", "I6"]),
    )
}
