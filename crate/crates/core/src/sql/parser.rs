use std::collections::BTreeSet;
use std::ops::Range;

use super::lexer::{normalize_ws, tokenize, TokKind, Token};
use super::{ParseError, ParseErrorKind};
use crate::formula::QueryTraits;

const AGGREGATES: &[&str] = &[
    "avg",
    "count",
    "max",
    "min",
    "sum",
    "total",
    "group_concat",
    "string_agg",
    "json_group_array",
    "json_group_object",
    "bit_xor",
    "bit_or",
    "bit_and",
    "checksum_agg",
];

const JOIN_WORDS: &[&str] = &["join", "inner", "left", "right", "full", "cross", "natural"];
const NOT_ALIAS: &[&str] = &[
    "join",
    "inner",
    "left",
    "right",
    "full",
    "cross",
    "natural",
    "on",
    "using",
    "outer",
    "where",
    "group",
    "having",
    "order",
    "limit",
    "union",
    "except",
    "intersect",
    "window",
];
const OTHER_SUBLANGUAGES: &[&str] = &[
    "create",
    "drop",
    "alter",
    "grant",
    "revoke",
    "begin",
    "commit",
    "rollback",
    "savepoint",
    "release",
    "pragma",
    "attach",
    "detach",
    "vacuum",
    "analyze",
    "reindex",
    "explain",
    "end",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinKind {
    Comma,
    Inner,
    Left,
    Right,
    Cross,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JoinCondition {
    On(String),
    Using(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableSource {
    Table(String),
    Derived(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FromItem {
    pub source: TableSource,
    pub alias: String,
    pub join: JoinKind,
    pub condition: Option<JoinCondition>,
}

impl FromItem {
    pub fn table_name(&self) -> Option<&str> {
        match &self.source {
            TableSource::Table(t) => Some(t),
            TableSource::Derived(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryAst {
    pub sql: String,
    pub distinct: bool,
    pub select_items: Vec<Span>,
    pub from: Vec<FromItem>,
    pub from_span: Option<Span>,
    pub where_span: Option<Span>,
    pub group_by: Vec<String>,
    pub group_span: Option<Span>,
    pub having_span: Option<Span>,
    pub order_span: Option<Span>,
    pub limit_span: Option<Span>,
    pub alias_refs: BTreeSet<String>,
    pub projected_aggregate: bool,
}

impl QueryAst {
    pub fn text(&self, span: Span) -> &str {
        &self.sql[span.start..span.end]
    }

    pub fn select_texts(&self) -> Vec<&str> {
        self.select_items.iter().map(|s| self.text(*s)).collect()
    }

    pub fn from_clause(&self) -> Option<&str> {
        self.from_span.map(|s| self.text(s))
    }

    pub fn where_clause(&self) -> Option<&str> {
        self.where_span.map(|s| self.text(s))
    }

    pub fn having_clause(&self) -> Option<&str> {
        self.having_span.map(|s| self.text(s))
    }

    pub fn order_clause(&self) -> Option<&str> {
        self.order_span.map(|s| self.text(s))
    }

    pub fn limit_clause(&self) -> Option<&str> {
        self.limit_span.map(|s| self.text(s))
    }

    pub fn find_alias(&self, alias: &str) -> Option<&FromItem> {
        self.from
            .iter()
            .find(|f| f.alias.eq_ignore_ascii_case(alias))
    }

    pub fn has_derived_table(&self) -> bool {
        self.from
            .iter()
            .any(|f| matches!(f.source, TableSource::Derived(_)))
    }

    pub fn is_grouped(&self) -> bool {
        !self.group_by.is_empty() || self.having_span.is_some() || self.projected_aggregate
    }

    pub fn traits(&self) -> QueryTraits {
        QueryTraits {
            n_outer_tables: self
                .from
                .iter()
                .filter(|f| f.table_name().is_some())
                .count(),
            has_outer_grouping_or_aggregation: self.is_grouped(),
            post_select_ops: self.distinct
                || self.order_span.is_some()
                || self.limit_span.is_some()
                || self.projected_aggregate,
        }
    }

    /// Whether some select item is already a token column.
    pub fn has_token_column(&self) -> bool {
        self.select_texts().iter().any(|item| {
            let lower = normalize_ws(item)
                .unwrap_or_else(|_| item.to_string())
                .to_ascii_lowercase();
            lower.ends_with(" as token") || lower.ends_with(") token")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmlKind {
    Insert,
    Update,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DmlStatement {
    pub kind: DmlKind,
    pub table: String,
    pub sql: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Select(Box<QueryAst>),
    Dml(DmlStatement),
}

fn syntax(position: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Syntax,
        position,
        message: message.into(),
    }
}

fn unsupported(position: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Unsupported,
        position,
        message: message.into(),
    }
}

/// Parses one SELECT statement of the supported subset.
pub fn parse_select(sql: &str) -> Result<QueryAst, ParseError> {
    match parse_statement(sql)? {
        Statement::Select(ast) => Ok(*ast),
        Statement::Dml(d) => Err(unsupported(
            0,
            format!("{:?} statement is not a query", d.kind),
        )),
    }
}

pub fn parse_statement(sql: &str) -> Result<Statement, ParseError> {
    let mut toks = tokenize(sql)?;
    while toks.last().is_some_and(|t| t.kind == TokKind::Semi) {
        toks.pop();
    }
    if let Some(semi) = toks.iter().find(|t| t.kind == TokKind::Semi) {
        return Err(syntax(semi.start, "expected a single statement"));
    }
    let first = toks.first().ok_or_else(|| syntax(0, "empty statement"))?;
    let depth = paren_depths(sql, &toks)?;
    let word = first.text(sql).to_ascii_lowercase();
    match word.as_str() {
        "select" => parse_query(sql, &toks, &depth).map(|q| Statement::Select(Box::new(q))),
        "with" => Err(unsupported(
            first.start,
            "common table expressions are not supported",
        )),
        "values" => Err(unsupported(
            first.start,
            "VALUES statements are not supported",
        )),
        "insert" | "replace" | "update" | "delete" => parse_dml(sql, &toks).map(Statement::Dml),
        w if OTHER_SUBLANGUAGES.contains(&w) => Err(unsupported(
            first.start,
            format!(
                "{} statements are outside the query sublanguage",
                w.to_ascii_uppercase()
            ),
        )),
        _ => Err(syntax(
            first.start,
            format!("unexpected {:?}", first.text(sql)),
        )),
    }
}

fn paren_depths(sql: &str, toks: &[Token]) -> Result<Vec<usize>, ParseError> {
    let mut depth = 0usize;
    let mut out = Vec::with_capacity(toks.len());
    for t in toks {
        match t.kind {
            TokKind::LParen => {
                out.push(depth);
                depth += 1;
            }
            TokKind::RParen => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| syntax(t.start, "unbalanced ')'"))?;
                out.push(depth);
            }
            _ => out.push(depth),
        }
    }
    if depth != 0 {
        return Err(syntax(sql.len(), "missing ')'"));
    }
    Ok(out)
}

fn parse_dml(sql: &str, toks: &[Token]) -> Result<DmlStatement, ParseError> {
    let word = |i: usize, w: &str| toks.get(i).is_some_and(|t| t.is_word(sql, w));
    let mut i = 1;
    let kind = match toks[0].text(sql).to_ascii_lowercase().as_str() {
        "insert" | "replace" => {
            if word(i, "or") {
                i += 2;
            }
            if !word(i, "into") {
                return Err(syntax(
                    toks.get(i).map_or(sql.len(), |t| t.start),
                    "expected INTO",
                ));
            }
            i += 1;
            DmlKind::Insert
        }
        "update" => {
            if word(i, "or") {
                i += 2;
            }
            DmlKind::Update
        }
        _ => {
            if !word(i, "from") {
                return Err(syntax(
                    toks.get(i).map_or(sql.len(), |t| t.start),
                    "expected FROM",
                ));
            }
            i += 1;
            DmlKind::Delete
        }
    };
    let (table, _) = table_name_at(sql, toks, i)?;
    Ok(DmlStatement {
        kind,
        table,
        sql: sql.to_owned(),
    })
}

/// Reads `name` or `schema.name` starting at `i`; returns the bare name and
/// the next index.
fn table_name_at(sql: &str, toks: &[Token], i: usize) -> Result<(String, usize), ParseError> {
    let is_name = |t: &Token| matches!(t.kind, TokKind::Ident | TokKind::QuotedIdent);
    let t = toks.get(i).filter(|t| is_name(t)).ok_or_else(|| {
        syntax(
            toks.get(i).map_or(sql.len(), |t| t.start),
            "expected a table name",
        )
    })?;
    if toks.get(i + 1).is_some_and(|d| d.kind == TokKind::Dot) {
        if let Some(n) = toks.get(i + 2).filter(|t| is_name(t)) {
            return Ok((n.ident_name(sql), i + 3));
        }
    }
    Ok((t.ident_name(sql), i + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Clause {
    From,
    Where,
    Group,
    Having,
    Order,
    Limit,
}

fn span_of(toks: &[Token], range: std::ops::Range<usize>) -> Option<Span> {
    if range.is_empty() {
        return None;
    }
    Some(Span {
        start: toks[range.start].start,
        end: toks[range.end - 1].end,
    })
}

/// Splits `range` on commas at depth `d`.
fn split_commas(
    toks: &[Token],
    depth: &[usize],
    range: std::ops::Range<usize>,
    d: usize,
) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = range.start;
    for i in range.clone() {
        if toks[i].kind == TokKind::Comma && depth[i] == d {
            out.push(start..i);
            start = i + 1;
        }
    }
    out.push(start..range.end);
    out
}

fn matching_paren(toks: &[Token], depth: &[usize], open: usize) -> usize {
    (open + 1..toks.len())
        .find(|&j| toks[j].kind == TokKind::RParen && depth[j] == depth[open])
        .expect("parentheses were checked for balance")
}

fn is_subquery_open(sql: &str, toks: &[Token], i: usize) -> bool {
    toks[i].kind == TokKind::LParen
        && toks
            .get(i + 1)
            .is_some_and(|t| t.is_word(sql, "select") || t.is_word(sql, "with"))
}

fn parse_query(sql: &str, toks: &[Token], depth: &[usize]) -> Result<QueryAst, ParseError> {
    let mut idx = 1;
    let mut distinct = false;
    if toks.get(idx).is_some_and(|t| t.is_word(sql, "distinct")) {
        distinct = true;
        idx += 1;
    } else if toks.get(idx).is_some_and(|t| t.is_word(sql, "all")) {
        idx += 1;
    }

    let mut clauses: Vec<(usize, Clause)> = Vec::new();
    let mut i = idx;
    while i < toks.len() {
        let t = &toks[i];
        if depth[i] != 0 || t.kind != TokKind::Ident {
            i += 1;
            continue;
        }
        let next_is_by = toks.get(i + 1).is_some_and(|n| n.is_word(sql, "by"));
        let clause = match t.text(sql).to_ascii_lowercase().as_str() {
            "from" => Some(Clause::From),
            "where" => Some(Clause::Where),
            "group" if next_is_by => Some(Clause::Group),
            "having" => Some(Clause::Having),
            "order" if next_is_by => Some(Clause::Order),
            "limit" => Some(Clause::Limit),
            "union" | "intersect" | "except" => {
                return Err(unsupported(t.start, "set operations are not supported"))
            }
            "window" => return Err(unsupported(t.start, "WINDOW clauses are not supported")),
            _ => None,
        };
        if let Some(c) = clause {
            if clauses.last().is_some_and(|(_, prev)| *prev >= c) {
                return Err(syntax(
                    t.start,
                    format!("misplaced {}", t.text(sql).to_ascii_uppercase()),
                ));
            }
            clauses.push((i, c));
        }
        i += 1;
    }

    let select_end = clauses.first().map_or(toks.len(), |(p, _)| *p);
    if select_end <= idx {
        return Err(syntax(
            toks.get(idx).map_or(sql.len(), |t| t.start),
            "empty select list",
        ));
    }
    let mut select_items = Vec::new();
    for r in split_commas(toks, depth, idx..select_end, 0) {
        let pos = toks.get(r.start).map_or(sql.len(), |t| t.start);
        select_items.push(span_of(toks, r).ok_or_else(|| syntax(pos, "empty select item"))?);
    }

    let clause_range = |k: usize| {
        let (p, c) = clauses[k];
        let body_start = if matches!(c, Clause::Group | Clause::Order) {
            p + 2
        } else {
            p + 1
        };
        let end = clauses.get(k + 1).map_or(toks.len(), |(q, _)| *q);
        (c, body_start..end, toks[p].start)
    };

    let mut ast = QueryAst {
        sql: sql.to_owned(),
        distinct,
        select_items,
        from: Vec::new(),
        from_span: None,
        where_span: None,
        group_by: Vec::new(),
        group_span: None,
        having_span: None,
        order_span: None,
        limit_span: None,
        alias_refs: BTreeSet::new(),
        projected_aggregate: false,
    };
    let mut ref_ranges: Vec<Range<usize>> = Vec::new();
    ref_ranges.push(idx..select_end);
    for k in 0..clauses.len() {
        let (c, range, kw_pos) = clause_range(k);
        let span =
            span_of(toks, range.clone()).ok_or_else(|| syntax(kw_pos, "clause has no body"))?;
        match c {
            Clause::From => {
                ast.from_span = Some(span);
                ast.from = parse_from(sql, toks, depth, range.clone(), &mut ref_ranges)?;
            }
            Clause::Where => {
                ast.where_span = Some(span);
                ref_ranges.push(range);
            }
            Clause::Group => {
                ast.group_span = Some(span);
                for r in split_commas(toks, depth, range.clone(), 0) {
                    let s =
                        span_of(toks, r).ok_or_else(|| syntax(kw_pos, "empty GROUP BY item"))?;
                    ast.group_by.push(normalize_ws(&sql[s.start..s.end])?);
                }
                ref_ranges.push(range);
            }
            Clause::Having => {
                ast.having_span = Some(span);
                ref_ranges.push(range);
            }
            Clause::Order => {
                ast.order_span = Some(span);
                ref_ranges.push(range);
            }
            Clause::Limit => ast.limit_span = Some(span),
        }
    }

    let mut seen = BTreeSet::new();
    for f in &ast.from {
        if !seen.insert(f.alias.to_ascii_lowercase()) {
            return Err(ParseError {
                kind: ParseErrorKind::DuplicateAlias,
                position: ast.from_span.map_or(0, |s| s.start),
                message: format!("alias {} is defined twice", f.alias),
            });
        }
    }
    for r in ref_ranges {
        collect_refs(sql, toks, depth, r, &mut ast)?;
    }
    ast.projected_aggregate = ast
        .select_items
        .iter()
        .any(|s| contains_aggregate(sql, toks, depth, *s));
    Ok(ast)
}

fn contains_aggregate(sql: &str, toks: &[Token], depth: &[usize], span: Span) -> bool {
    let idx: Vec<usize> = (0..toks.len())
        .filter(|&i| toks[i].start >= span.start && toks[i].end <= span.end)
        .collect();
    let mut skip_until = 0;
    for &i in &idx {
        if i < skip_until {
            continue;
        }
        if is_subquery_open(sql, toks, i) {
            skip_until = matching_paren(toks, depth, i) + 1;
            continue;
        }
        let t = &toks[i];
        if t.kind == TokKind::Ident
            && AGGREGATES.contains(&t.text(sql).to_ascii_lowercase().as_str())
            && toks.get(i + 1).is_some_and(|n| n.kind == TokKind::LParen)
            && (i == 0 || toks[i - 1].kind != TokKind::Dot)
        {
            return true;
        }
    }
    false
}

fn collect_refs(
    sql: &str,
    toks: &[Token],
    depth: &[usize],
    range: std::ops::Range<usize>,
    ast: &mut QueryAst,
) -> Result<(), ParseError> {
    let mut i = range.start;
    while i < range.end {
        if is_subquery_open(sql, toks, i) {
            i = matching_paren(toks, depth, i) + 1;
            continue;
        }
        let t = &toks[i];
        let is_name = matches!(t.kind, TokKind::Ident | TokKind::QuotedIdent);
        let prev_dot = i > 0 && toks[i - 1].kind == TokKind::Dot;
        if is_name
            && !prev_dot
            && i + 2 < range.end
            && toks.get(i + 1).is_some_and(|d| d.kind == TokKind::Dot)
            && toks.get(i + 2).is_some_and(|n| {
                matches!(
                    n.kind,
                    TokKind::Ident | TokKind::QuotedIdent | TokKind::Star
                )
            })
        {
            let name = t.ident_name(sql);
            if ast.find_alias(&name).is_none() {
                return Err(ParseError {
                    kind: ParseErrorKind::UnknownAlias,
                    position: t.start,
                    message: format!("unknown table alias {name}"),
                });
            }
            ast.alias_refs.insert(name);
            i += 3;
            continue;
        }
        i += 1;
    }
    Ok(())
}

fn parse_from(
    sql: &str,
    toks: &[Token],
    depth: &[usize],
    range: std::ops::Range<usize>,
    ref_ranges: &mut Vec<std::ops::Range<usize>>,
) -> Result<Vec<FromItem>, ParseError> {
    let end = range.end;
    let word = |i: usize, w: &str| i < end && toks[i].is_word(sql, w);
    let pos = |i: usize| toks.get(i).map_or(sql.len(), |t| t.start);
    let mut items = Vec::new();
    let mut i = range.start;
    let mut join = JoinKind::Comma;
    loop {
        // table factor
        let source;
        if i < end && toks[i].kind == TokKind::LParen {
            if !is_subquery_open(sql, toks, i) {
                return Err(unsupported(pos(i), "parenthesized joins are not supported"));
            }
            let close = matching_paren(toks, depth, i);
            source = TableSource::Derived(sql[toks[i].start..toks[close].end].to_owned());
            i = close + 1;
        } else {
            let (name, next) = table_name_at(sql, &toks[..end], i)?;
            source = TableSource::Table(name);
            i = next;
        }
        let mut alias = None;
        if word(i, "as") {
            let t = toks
                .get(i + 1)
                .filter(|t| i + 1 < end && matches!(t.kind, TokKind::Ident | TokKind::QuotedIdent))
                .ok_or_else(|| syntax(pos(i + 1), "expected an alias after AS"))?;
            alias = Some(t.ident_name(sql));
            i += 2;
        } else if i < end
            && (toks[i].kind == TokKind::QuotedIdent
                || (toks[i].kind == TokKind::Ident
                    && !NOT_ALIAS.contains(&toks[i].text(sql).to_ascii_lowercase().as_str())))
        {
            alias = Some(toks[i].ident_name(sql));
            i += 1;
        }
        let alias = match (alias, &source) {
            (Some(a), _) => a,
            (None, TableSource::Table(t)) => t.clone(),
            (None, TableSource::Derived(_)) => {
                return Err(syntax(pos(i), "derived table needs an alias"))
            }
        };
        let mut condition = None;
        if word(i, "on") {
            let start = i + 1;
            let mut j = start;
            while j < end
                && !(depth[j] == 0
                    && (toks[j].kind == TokKind::Comma
                        || (toks[j].kind == TokKind::Ident
                            && JOIN_WORDS
                                .contains(&toks[j].text(sql).to_ascii_lowercase().as_str()))))
            {
                j += 1;
            }
            let span =
                span_of(toks, start..j).ok_or_else(|| syntax(pos(i), "empty ON condition"))?;
            condition = Some(JoinCondition::On(sql[span.start..span.end].to_owned()));
            ref_ranges.push(start..j);
            i = j;
        } else if word(i, "using") {
            if !(i + 1 < end && toks[i + 1].kind == TokKind::LParen) {
                return Err(syntax(pos(i + 1), "expected '(' after USING"));
            }
            let close = matching_paren(toks, depth, i + 1);
            let mut cols = Vec::new();
            for r in split_commas(toks, depth, i + 2..close, depth[i + 1] + 1) {
                match r.len() {
                    1 if matches!(toks[r.start].kind, TokKind::Ident | TokKind::QuotedIdent) => {
                        cols.push(toks[r.start].ident_name(sql))
                    }
                    _ => return Err(syntax(pos(r.start), "expected a column name in USING")),
                }
            }
            condition = Some(JoinCondition::Using(cols));
            i = close + 1;
        }
        if matches!(join, JoinKind::Inner | JoinKind::Left | JoinKind::Right)
            && condition.is_none()
            && !items.is_empty()
        {
            // SQLite accepts a condition-less JOIN as a cross join.
            join = JoinKind::Cross;
        }
        items.push(FromItem {
            source,
            alias,
            join,
            condition,
        });
        if i >= end {
            break;
        }
        if toks[i].kind == TokKind::Comma {
            join = JoinKind::Comma;
            i += 1;
            continue;
        }
        if word(i, "natural") {
            return Err(unsupported(pos(i), "NATURAL joins are not supported"));
        }
        if word(i, "full") {
            return Err(unsupported(pos(i), "FULL joins are not supported"));
        }
        join = if word(i, "inner") {
            i += 1;
            JoinKind::Inner
        } else if word(i, "left") || word(i, "right") {
            let k = if word(i, "left") {
                JoinKind::Left
            } else {
                JoinKind::Right
            };
            i += 1;
            if word(i, "outer") {
                i += 1;
            }
            k
        } else if word(i, "cross") {
            i += 1;
            JoinKind::Cross
        } else {
            JoinKind::Inner
        };
        if !word(i, "join") {
            return Err(syntax(pos(i), "expected JOIN"));
        }
        i += 1;
    }
    Ok(items)
}
