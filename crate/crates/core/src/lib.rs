//! Game compiler and fingerprinting toolkit for SQL adventure games.
//!
//! A game is a schema, a tab-separated dataset and a task script. Building it
//! yields a standalone database in which every query carries a salted
//! fingerprint (its token); tokens unlock encrypted feedback messages.

pub mod builder;
pub mod compiler;
pub mod crypto;
pub mod error;
pub mod exec;
pub mod formula;
pub mod lab;
pub mod manifest;
pub mod play;
pub mod runtime;
pub mod sql;
pub mod styling;
pub mod theorem;

pub use error::{Error, Result};
