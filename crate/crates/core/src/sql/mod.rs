//! Restricted SQL subset: parsing, starring, formula injection and the
//! execution oracle that compares starred result tables.

mod lexer;
mod oracle;
mod parser;
mod star;

use std::fmt;

pub use lexer::{normalize_ws, tokenize, TokKind, Token};
pub use oracle::{
    execute_token, query_table, split_statements, starred_match, starred_table, token_of,
    ResultTable, StarredTable,
};
pub use parser::{
    parse_select, parse_statement, DmlKind, DmlStatement, FromItem, JoinCondition, JoinKind,
    QueryAst, Span, Statement, TableSource,
};
pub(crate) use star::quote_ident;
pub use star::{inject_formula, star, star_with_aliases, Catalog, SORTED_LIST_FN};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Unsupported,
    UnknownAlias,
    DuplicateAlias,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::Unsupported => "unsupported construct",
            ParseErrorKind::UnknownAlias => "unknown alias",
            ParseErrorKind::DuplicateAlias => "duplicate alias",
        };
        write!(f, "{label} at byte {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}
