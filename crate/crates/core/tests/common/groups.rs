//! Grouped formulas on the dependent table.

use std::collections::BTreeSet;

use sqlab_core::formula::{AggFn, FormulaClass, FormulaKind};
use sqlab_core::sql::{query_table, token_of};

use super::{augmented, game, number};

pub const DEPENDENT_GROUPINGS: [(&str, &[i64]); 3] = [
    ("SELECT count(*) FROM dependent A GROUP BY sex", &[4, 3]),
    (
        "SELECT count(*) FROM dependent A GROUP BY relationship",
        &[2, 3, 2],
    ),
    ("SELECT count(*) FROM dependent A", &[7]),
];

/// Distinct tokens of the three groupings under `fw(fa(...))`.
pub fn grouping_tokens(fw: AggFn, fa: AggFn) -> BTreeSet<u64> {
    let (conn, manifest) = game();
    let class = FormulaClass::unchecked(FormulaKind::Agg, 1, Some(fw), Some(fa));
    let mut tokens = BTreeSet::new();
    for (q, counts) in DEPENDENT_GROUPINGS {
        let t = query_table(&conn, &augmented(&manifest, 27, &class, q)).unwrap();
        let mut got: Vec<i64> = t.rows.iter().map(|r| number(&r[0]) as i64).collect();
        let mut want = counts.to_vec();
        got.sort_unstable();
        want.sort_unstable();
        assert_eq!(got, want, "{q}");
        tokens.insert(token_of(&t).unwrap().unwrap());
    }
    tokens
}

/// Dependents per employee, then the tokens with `sum(bit_xor())` and
/// `bit_xor(sum())`.
pub fn dependents_per_employee(extra: &str) -> (Vec<i64>, u64, u64) {
    let (conn, manifest) = game();
    let q = format!(
        "SELECT A.emp_id, count(B.emp_id) AS count FROM employee A \
         LEFT JOIN dependent B ON A.emp_id = B.emp_id{extra} GROUP BY A.emp_id ORDER BY A.emp_id"
    );
    let xor_inside =
        FormulaClass::unchecked(FormulaKind::Agg, 1, Some(AggFn::Sum), Some(AggFn::BitXor));
    let sum_inside = FormulaClass::new(FormulaKind::Agg, 1).unwrap();
    let t1 = query_table(&conn, &augmented(&manifest, 27, &xor_inside, &q)).unwrap();
    let t2 = query_table(&conn, &augmented(&manifest, 27, &sum_inside, &q)).unwrap();
    let counts = t1.rows.iter().map(|r| number(&r[1]) as i64).collect();
    (
        counts,
        token_of(&t1).unwrap().unwrap(),
        token_of(&t2).unwrap().unwrap(),
    )
}
