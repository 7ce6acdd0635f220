//! Randomized check of "same token iff same starred table" over pairs of
//! generated queries on the company database.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rusqlite::Connection;
use serde::Serialize;

use crate::builder::load_dump;
use crate::crypto::SaltSpec;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::formula::{default_aliases, render_formula, AggFn, FormulaClass, FormulaKind};
use crate::sql::{execute_token, inject_formula, parse_select, starred_match, Catalog, JoinKind};

struct TableInfo {
    name: &'static str,
    columns: &'static [&'static str],
    predicates: &'static [&'static str],
    groupings: &'static [&'static str],
}

const TABLES: &[TableInfo] = &[
    TableInfo {
        name: "employee",
        columns: &[
            "emp_name",
            "emp_id",
            "birth",
            "address",
            "sex",
            "salary",
            "supervisor_id",
            "dpt_id",
        ],
        predicates: &[
            "# .salary > 30000",
            "# .sex = 'M'",
            "# .address LIKE '%Houston%'",
            "# .dpt_id = 5",
            "# .birth < '1960-01-01'",
            "# .supervisor_id IS NULL",
        ],
        groupings: &["sex", "dpt_id", "supervisor_id"],
    },
    TableInfo {
        name: "department",
        columns: &["dpt_name", "dpt_id", "manager_id", "manager_start"],
        predicates: &["# .dpt_id <> 4", "# .dpt_name LIKE 'R%'"],
        groupings: &["dpt_name"],
    },
    TableInfo {
        name: "dpt_locations",
        columns: &["dpt_id", "location"],
        predicates: &["# .location = 'Houston'", "# .dpt_id > 1"],
        groupings: &["location"],
    },
    TableInfo {
        name: "project",
        columns: &["prj_name", "prj_id", "location", "dpt_id"],
        predicates: &["# .location = 'Stafford'", "# .prj_id < 20"],
        groupings: &["location", "dpt_id"],
    },
    TableInfo {
        name: "works_on",
        columns: &["emp_id", "prj_id", "hours"],
        predicates: &["# .hours > 10", "# .hours IS NULL", "# .prj_id IN (10, 30)"],
        groupings: &["prj_id", "emp_id"],
    },
    TableInfo {
        name: "dependent",
        columns: &["emp_id", "dpd_name", "sex", "birth", "relationship"],
        predicates: &["# .sex = 'F'", "# .relationship = 'Spouse'"],
        groupings: &["sex", "relationship", "emp_id"],
    },
];

/// Foreign-key style equalities usable as join conditions.
const EDGES: &[(&str, &str, &str, &str)] = &[
    ("employee", "dpt_id", "department", "dpt_id"),
    ("employee", "emp_id", "works_on", "emp_id"),
    ("employee", "emp_id", "dependent", "emp_id"),
    ("department", "dpt_id", "project", "dpt_id"),
    ("department", "dpt_id", "dpt_locations", "dpt_id"),
    ("project", "prj_id", "works_on", "prj_id"),
    ("employee", "emp_id", "department", "manager_id"),
    ("employee", "dpt_id", "project", "dpt_id"),
];

fn table(name: &str) -> &'static TableInfo {
    TABLES.iter().find(|t| t.name == name).expect("known table")
}

/// Templated text: `{i}` stands for the alias of table slot `i`.
fn slot(i: usize, rest: &str) -> String {
    format!("{{{i}}}{rest}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Join {
    kind: JoinKind,
    condition: String,
    /// Only read for cross joins, whose condition is optional.
    keep_condition: bool,
}

/// A generated query, rendered on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenQuery {
    tables: Vec<&'static str>,
    joins: Vec<Join>,
    predicates: Vec<String>,
    projection: Vec<String>,
    distinct: bool,
    order_by: bool,
    limit: Option<u8>,
    grouped: bool,
    group_by: Option<String>,
    having: bool,
    /// Alias letter index per table slot.
    letters: Vec<usize>,
}

const JOIN_KINDS: [JoinKind; 5] = [
    JoinKind::Comma,
    JoinKind::Inner,
    JoinKind::Left,
    JoinKind::Right,
    JoinKind::Cross,
];

impl GenQuery {
    fn random<R: Rng>(rng: &mut R, grouped: bool) -> GenQuery {
        let n = rng.gen_range(1..=3);
        let mut tables = vec![TABLES.choose(rng).unwrap().name];
        let mut joins = Vec::new();
        while tables.len() < n {
            let options: Vec<(usize, &str, &str, &str)> = EDGES
                .iter()
                .flat_map(|&(a, ca, b, cb)| [(a, ca, b, cb), (b, cb, a, ca)])
                .filter_map(|(old, c_old, new, c_new)| {
                    let j = tables.iter().position(|t| *t == old)?;
                    (!tables.contains(&new)).then_some((j, c_old, new, c_new))
                })
                .collect();
            let Some(&(j, c_old, new, c_new)) = options.choose(rng) else {
                break;
            };
            let i = tables.len();
            tables.push(new);
            joins.push(Join {
                kind: *JOIN_KINDS.choose(rng).unwrap(),
                condition: format!(
                    "{} = {}",
                    slot(j, &format!(".{c_old}")),
                    slot(i, &format!(".{c_new}"))
                ),
                keep_condition: rng.gen_bool(0.7),
            });
        }
        let mut q = GenQuery {
            letters: (0..tables.len()).collect(),
            tables,
            joins,
            predicates: Vec::new(),
            projection: Vec::new(),
            distinct: rng.gen_bool(0.2),
            order_by: rng.gen_bool(0.3),
            limit: rng.gen_bool(0.15).then(|| rng.gen_range(1..=3)),
            grouped,
            group_by: None,
            having: false,
        };
        for _ in 0..rng.gen_range(0..=2) {
            q.add_predicate(rng);
        }
        if grouped {
            q.group_by = q.random_grouping(rng);
            q.having = rng.gen_bool(0.2);
        }
        q.projection = q.random_projection(rng);
        q
    }

    fn random_slot<R: Rng>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.tables.len())
    }

    fn add_predicate<R: Rng>(&mut self, rng: &mut R) {
        let i = self.random_slot(rng);
        let p = table(self.tables[i]).predicates.choose(rng).unwrap();
        self.predicates
            .push(p.replacen("# ", &format!("{{{i}}}"), 1));
    }

    fn random_grouping<R: Rng>(&self, rng: &mut R) -> Option<String> {
        if rng.gen_bool(0.2) {
            return None;
        }
        let i = self.random_slot(rng);
        let c = table(self.tables[i]).groupings.choose(rng).unwrap();
        Some(slot(i, &format!(".{c}")))
    }

    fn random_projection<R: Rng>(&self, rng: &mut R) -> Vec<String> {
        if self.grouped {
            let agg = ["count(*)", "count(*) AS n"]
                .choose(rng)
                .unwrap()
                .to_string();
            return match &self.group_by {
                Some(g) if rng.gen_bool(0.7) => vec![g.clone(), agg],
                _ => vec![agg],
            };
        }
        (0..rng.gen_range(1..=3))
            .map(|_| {
                let i = self.random_slot(rng);
                let c = table(self.tables[i]).columns.choose(rng).unwrap();
                slot(i, &format!(".{c}"))
            })
            .collect()
    }

    pub fn dimension(&self) -> usize {
        self.tables.len()
    }

    fn fill(&self, template: &str) -> String {
        let aliases = default_aliases(self.tables.len());
        let mut out = template.to_owned();
        for (slot, &letter) in self.letters.iter().enumerate() {
            out = out.replace(&format!("{{{slot}}}"), &aliases[letter]);
        }
        out
    }

    pub fn sql(&self) -> String {
        let aliases = default_aliases(self.tables.len());
        let alias = |i: usize| &aliases[self.letters[i]];
        let mut from = format!("{} {}", self.tables[0], alias(0));
        let mut conditions = Vec::new();
        for (k, join) in self.joins.iter().enumerate() {
            let i = k + 1;
            let target = format!("{} {}", self.tables[i], alias(i));
            let cond = self.fill(&join.condition);
            match join.kind {
                JoinKind::Comma => {
                    from.push_str(&format!(", {target}"));
                    conditions.push(cond);
                }
                JoinKind::Cross => {
                    from.push_str(&format!(" CROSS JOIN {target}"));
                    if join.keep_condition {
                        conditions.push(cond);
                    }
                }
                JoinKind::Inner => from.push_str(&format!(" JOIN {target} ON {cond}")),
                JoinKind::Left => from.push_str(&format!(" LEFT JOIN {target} ON {cond}")),
                JoinKind::Right => from.push_str(&format!(" RIGHT JOIN {target} ON {cond}")),
            }
        }
        conditions.extend(self.predicates.iter().map(|p| self.fill(p)));
        let projection: Vec<String> = self.projection.iter().map(|p| self.fill(p)).collect();
        let mut sql = format!(
            "SELECT {}{} FROM {from}",
            if self.distinct { "DISTINCT " } else { "" },
            projection.join(", ")
        );
        if !conditions.is_empty() {
            sql.push_str(&format!(" WHERE {}", conditions.join(" AND ")));
        }
        if self.grouped {
            if let Some(g) = &self.group_by {
                sql.push_str(&format!(" GROUP BY {}", self.fill(g)));
            }
            if self.having {
                sql.push_str(" HAVING count(*) > 1");
            }
        }
        if self.order_by {
            sql.push_str(" ORDER BY 1");
        }
        if let Some(n) = self.limit {
            sql.push_str(&format!(" LIMIT {n}"));
        }
        sql
    }

    /// One random edit; some keep the starred table, most do not.
    fn mutate<R: Rng>(&mut self, rng: &mut R) -> Mutation {
        loop {
            let m = *Mutation::ALL.choose(rng).unwrap();
            let applied = match m {
                Mutation::Distinct => {
                    self.distinct = !self.distinct;
                    true
                }
                Mutation::OrderBy => {
                    self.order_by = !self.order_by;
                    true
                }
                Mutation::Limit => {
                    self.limit = match self.limit {
                        Some(_) => None,
                        None => Some(rng.gen_range(1..=3)),
                    };
                    true
                }
                Mutation::SwapPredicate if !self.predicates.is_empty() => {
                    let k = rng.gen_range(0..self.predicates.len());
                    self.predicates.remove(k);
                    self.add_predicate(rng);
                    true
                }
                Mutation::AddPredicate => {
                    self.add_predicate(rng);
                    true
                }
                Mutation::RemovePredicate if !self.predicates.is_empty() => {
                    let k = rng.gen_range(0..self.predicates.len());
                    self.predicates.remove(k);
                    true
                }
                Mutation::JoinKind if !self.joins.is_empty() => {
                    let k = rng.gen_range(0..self.joins.len());
                    self.joins[k].kind = *JOIN_KINDS.choose(rng).unwrap();
                    true
                }
                Mutation::Tautology => {
                    self.predicates.push("1 = 1".into());
                    true
                }
                Mutation::AliasSwap if self.tables.len() > 1 => {
                    self.letters.shuffle(rng);
                    true
                }
                Mutation::Projection => {
                    self.projection = self.random_projection(rng);
                    true
                }
                Mutation::GroupBy if self.grouped => {
                    self.group_by = self.random_grouping(rng);
                    self.projection = self.random_projection(rng);
                    true
                }
                Mutation::Having if self.grouped => {
                    self.having = !self.having;
                    true
                }
                _ => false,
            };
            if applied {
                return m;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    Distinct,
    OrderBy,
    Limit,
    SwapPredicate,
    AddPredicate,
    RemovePredicate,
    JoinKind,
    Tautology,
    AliasSwap,
    Projection,
    GroupBy,
    Having,
}

impl Mutation {
    const ALL: [Mutation; 12] = [
        Mutation::Distinct,
        Mutation::OrderBy,
        Mutation::Limit,
        Mutation::SwapPredicate,
        Mutation::AddPredicate,
        Mutation::RemovePredicate,
        Mutation::JoinKind,
        Mutation::Tautology,
        Mutation::AliasSwap,
        Mutation::Projection,
        Mutation::GroupBy,
        Mutation::Having,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryPair {
    pub class: FormulaKind,
    pub dimension: usize,
    pub q1: String,
    pub q2: String,
    pub mutations: Vec<Mutation>,
}

/// Deterministic pairs: the second query is the first one after one to
/// three mutations.
pub fn generate_pairs(kind: FormulaKind, count: usize, seed: u64) -> Vec<QueryPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(if kind.is_agg() { 2 } else { 1 });
    (0..count)
        .map(|_| {
            let q1 = GenQuery::random(&mut rng, kind.is_agg());
            let mut q2 = q1.clone();
            let mutations = (0..rng.gen_range(1..=3))
                .map(|_| q2.mutate(&mut rng))
                .collect();
            QueryPair {
                class: kind,
                dimension: q1.dimension(),
                q1: q1.sql(),
                q2: q2.sql(),
                mutations,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairOutcome {
    pub token1: Option<u64>,
    pub token2: Option<u64>,
    pub starred_equal: bool,
}

impl PairOutcome {
    pub fn tokens_equal(&self) -> bool {
        self.token1 == self.token2
    }

    pub fn holds(&self) -> bool {
        self.tokens_equal() == self.starred_equal
    }
}

/// Fingerprints both queries with the pair's class and compares the starred
/// tables. `aggregates` replaces the default `(f_w, f_a)` without the
/// pairing checks.
pub fn evaluate_pair(
    conn: &Connection,
    catalog: &Catalog,
    salt: &SaltSpec,
    pair: &QueryPair,
    aggregates: Option<(AggFn, Option<AggFn>)>,
) -> Result<PairOutcome> {
    let class = match aggregates {
        None => FormulaClass::new(pair.class, pair.dimension)?,
        Some((fw, fa)) => FormulaClass::unchecked(pair.class, pair.dimension, Some(fw), fa),
    };
    let formula = render_formula(&class, salt, &default_aliases(pair.dimension))?;
    let a1 = parse_select(&pair.q1)?;
    let a2 = parse_select(&pair.q2)?;
    Ok(PairOutcome {
        token1: execute_token(conn, &inject_formula(&a1, &formula))?,
        token2: execute_token(conn, &inject_formula(&a2, &formula))?,
        starred_equal: starred_match(conn, &a1, &a2, &class, catalog)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub pair: QueryPair,
    pub outcome: PairOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TheoremReport {
    pub class: FormulaKind,
    pub seed: u64,
    pub pairs: usize,
    pub token_equal: usize,
    pub starred_equal: usize,
    pub errors: Vec<String>,
    pub violations: Vec<Violation>,
}

impl TheoremReport {
    pub fn holds(&self) -> bool {
        self.errors.is_empty() && self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "{:?}: {} pairs, {} equal tokens, {} equal starred tables, {} errors, {} violations (seed {})",
            self.class,
            self.pairs,
            self.token_equal,
            self.starred_equal,
            self.errors.len(),
            self.violations.len(),
            self.seed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteConfig {
    pub kind: FormulaKind,
    pub pairs: usize,
    pub seed: u64,
    pub execution: Execution,
    pub aggregates: Option<(AggFn, Option<AggFn>)>,
}

impl SuiteConfig {
    pub fn new(kind: FormulaKind, pairs: usize, seed: u64) -> Self {
        SuiteConfig {
            kind,
            pairs,
            seed,
            execution: Execution::default(),
            aggregates: None,
        }
    }
}

/// Runs generated pairs against the game in `dump`, one database
/// connection per worker.
pub fn run_theorem_suite(dump: &str, config: &SuiteConfig) -> Result<TheoremReport> {
    let SuiteConfig {
        kind,
        pairs,
        seed,
        execution,
        aggregates,
    } = *config;
    let generated = generate_pairs(kind, pairs, seed);
    let (probe, manifest) = load_dump(dump)?;
    drop(probe);
    let salt = *manifest
        .salts
        .first()
        .ok_or_else(|| Error::Config("the game defines no salt function".into()))?;
    let results = exec::map_init(
        &generated,
        execution,
        || {
            load_dump(dump).and_then(|(conn, _)| {
                let catalog = Catalog::from_connection(&conn)?;
                Ok((conn, catalog))
            })
        },
        |state, pair| match state {
            Ok((conn, catalog)) => evaluate_pair(conn, catalog, &salt, pair, aggregates),
            Err(e) => Err(Error::Build(format!("worker database: {e}"))),
        },
    );
    let mut report = TheoremReport {
        class: kind,
        seed,
        pairs,
        token_equal: 0,
        starred_equal: 0,
        errors: Vec::new(),
        violations: Vec::new(),
    };
    for (pair, result) in generated.into_iter().zip(results) {
        match result {
            Ok(outcome) => {
                report.token_equal += usize::from(outcome.tokens_equal());
                report.starred_equal += usize::from(outcome.starred_equal);
                if !outcome.holds() {
                    report.violations.push(Violation { pair, outcome });
                }
            }
            Err(e) => report
                .errors
                .push(format!("{e} in {} / {}", pair.q1, pair.q2)),
        }
    }
    Ok(report)
}
