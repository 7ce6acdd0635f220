//! Worked examples on the bundled company database.

mod common;

use std::collections::BTreeSet;

use rusqlite::types::Value;
use sqlab_core::formula::{
    substitute_control, AggFn, ControlBinding, ControlValue, FormulaClass, FormulaKind,
};
use sqlab_core::sql::{parse_select, query_table, starred_table, token_of, Catalog};

use common::{augmented, game, groups, number, table4, token};

const LOWEST_SALARY: &str = "SELECT emp_id, emp_name, salary
  FROM employee A
 WHERE salary = (SELECT min(salary) FROM employee)";

const HOUSTON: &str = "SELECT dpt_name AS department,
       count(emp_id) AS employees,
       avg(salary) AS average_salary
  FROM department A
  JOIN employee B ON A.dpt_id = B.dpt_id
 WHERE address LIKE '%Houston%'
 GROUP BY dpt_name
HAVING avg(salary) > 30000
 ORDER BY average_salary DESC";

fn class(kind: FormulaKind, dimension: usize) -> FormulaClass {
    FormulaClass::new(kind, dimension).unwrap()
}

fn text(v: &Value) -> &str {
    match v {
        Value::Text(s) => s,
        other => panic!("not a text: {other:?}"),
    }
}

#[test]
fn lowest_salary_rows_share_one_token() {
    let (conn, manifest) = game();
    let sql = augmented(&manifest, 292, &class(FormulaKind::Basic, 1), LOWEST_SALARY);
    let t = query_table(&conn, &sql).unwrap();
    let names: BTreeSet<&str> = t
        .column("emp_name")
        .unwrap()
        .into_iter()
        .map(text)
        .collect();
    assert_eq!(
        names,
        BTreeSet::from(["Joyce A. English", "Ahmad V. Jabbar", "Alicia J. Zelaya"])
    );
    assert_eq!(t.rows.len(), 3);
    for s in t.column("salary").unwrap() {
        assert_eq!(number(s), 25000.0);
    }
    assert!(token_of(&t).unwrap().is_some());
}

#[test]
fn houston_payroll_two_pass() {
    let (conn, manifest) = game();
    let first = augmented(&manifest, 50, &class(FormulaKind::AggCtrl, 2), HOUSTON);
    assert!(first.contains("(0.0) + bit_xor(sum(nn(A.hash) + nn(B.hash))) OVER ()"));
    let t = query_table(&conn, &first).unwrap();
    let departments: Vec<&str> = t
        .column("department")
        .unwrap()
        .into_iter()
        .map(text)
        .collect();
    assert_eq!(departments, ["Headquarters", "Research"]);
    let employees: Vec<f64> = t
        .column("employees")
        .unwrap()
        .into_iter()
        .map(number)
        .collect();
    assert_eq!(employees, [1.0, 3.0]);
    let averages: Vec<f64> = t
        .column("average_salary")
        .unwrap()
        .into_iter()
        .map(number)
        .collect();
    assert!((averages[0] - 55000.0).abs() < 1e-6);
    assert!((averages[1] - 31666.666667).abs() < 1e-6);
    let first_token = token_of(&t).unwrap().unwrap();

    let binding = ControlBinding {
        value: ControlValue::Integer(employees[0] as i64),
        instruction: "the first number of the column employees".into(),
    };
    let second = substitute_control(&first, &binding, &manifest.hash).unwrap();
    assert!(!second.missing_control);
    assert!(second.text.contains("(1) + bit_xor("));
    let t2 = query_table(&conn, &second.text).unwrap();
    let second_token = token_of(&t2).unwrap().unwrap();
    assert_ne!(first_token, second_token);
}

#[test]
fn same_result_queries_one_dimension() {
    assert_eq!(table4::partition(1), table4::expected_one_dimension());
}

#[test]
fn same_result_queries_two_dimensions() {
    assert_eq!(table4::partition(2), table4::expected_two_dimensions());
}

#[test]
fn same_associative_pair_is_blind_to_grouping() {
    assert_eq!(groups::grouping_tokens(AggFn::Sum, AggFn::Sum).len(), 1);
    assert!(FormulaClass::new(FormulaKind::Agg, 1)
        .unwrap()
        .with_aggregates(AggFn::Sum, Some(AggFn::Sum))
        .is_err());
}

#[test]
fn xor_of_sums_sees_the_groupings() {
    assert_eq!(groups::grouping_tokens(AggFn::BitXor, AggFn::Sum).len(), 3);
}

#[test]
fn xor_inside_the_group_collides() {
    let (all, all_1, all_2) = groups::dependents_per_employee("");
    let (male, male_1, male_2) = groups::dependents_per_employee(" AND B.sex = 'M'");
    assert_eq!(all, [3, 3, 0, 0, 0, 1, 0, 0]);
    assert_eq!(male, [1, 1, 0, 0, 0, 1, 0, 0]);
    assert_eq!(all_1, male_1);
    assert_ne!(all_2, male_2);
}

#[test]
fn starring_row_counts() {
    let (conn, _) = game();
    let catalog = Catalog::from_connection(&conn).unwrap();
    let q = parse_select(
        "SELECT DISTINCT emp_id, location\nFROM works_on A JOIN project B ON A.prj_id = B.prj_id\nORDER BY emp_id",
    )
    .unwrap();
    let basic = class(FormulaKind::Basic, 2);
    assert_eq!(query_table(&conn, &q.sql).unwrap().rows.len(), 13);
    assert_eq!(
        starred_table(&conn, &q, &basic, &catalog)
            .unwrap()
            .rows
            .len(),
        16
    );

    let g = parse_select("SELECT location, count(*)\nFROM project A GROUP BY location").unwrap();
    let agg = class(FormulaKind::Agg, 1);
    assert_eq!(query_table(&conn, &g.sql).unwrap().rows.len(), 4);
    assert_eq!(
        starred_table(&conn, &g, &agg, &catalog).unwrap().rows.len(),
        4
    );
}

fn same_table_distinct_tokens(kind: FormulaKind, left: &str, right: &str) {
    let (conn, manifest) = game();
    let catalog = Catalog::from_connection(&conn).unwrap();
    let class = class(kind, 1);
    assert_eq!(
        query_table(&conn, left).unwrap().rows,
        query_table(&conn, right).unwrap().rows
    );
    let (l, r) = (parse_select(left).unwrap(), parse_select(right).unwrap());
    assert_ne!(
        starred_table(&conn, &l, &class, &catalog).unwrap(),
        starred_table(&conn, &r, &class, &catalog).unwrap()
    );
    assert_ne!(
        token(&conn, &manifest, 27, &class, left),
        token(&conn, &manifest, 27, &class, right)
    );
}

#[test]
fn equivalent_results_with_distinct_starred_tables() {
    same_table_distinct_tokens(
        FormulaKind::AggCtrl,
        "SELECT count(*) AS subordinates FROM employee A WHERE supervisor_id IS NOT NULL",
        "SELECT count(supervisor_id) AS subordinates FROM employee A",
    );
    same_table_distinct_tokens(
        FormulaKind::BasicCtrl,
        "SELECT emp_id, salary FROM employee A WHERE salary = (SELECT max(salary) FROM employee)",
        "SELECT emp_id, salary FROM employee A ORDER BY salary DESC LIMIT 1",
    );
}
