//! Build manifest: everything the runtime needs to reproduce tokens.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crypto::{HashConfig, SaltSpec};
use crate::error::{Error, Result};
use crate::formula::FormulaDefaults;

pub const MANIFEST_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Question,
    Success,
    Hint,
}

/// One unlock token of the built game and what it leads to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEntry {
    pub token: u64,
    pub task: u16,
    pub kind: MessageKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub hash: HashConfig,
    pub disambiguator: String,
    pub seed: u64,
    pub salts: Vec<SaltSpec>,
    pub formula_defaults: FormulaDefaults,
    pub fallback_text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tokens: Vec<TokenEntry>,
}

impl Manifest {
    pub fn new(hash: HashConfig, seed: u64, fallback_text: impl Into<String>) -> Self {
        Manifest {
            format: MANIFEST_FORMAT,
            hash,
            disambiguator: String::new(),
            seed,
            salts: Vec::new(),
            formula_defaults: FormulaDefaults::default(),
            fallback_text: fallback_text.into(),
            tokens: Vec::new(),
        }
    }

    /// Derives one salt per task number, stepping past equal constants.
    pub fn assign_salts(&mut self, task_numbers: impl IntoIterator<Item = u16>) -> Result<()> {
        let mut numbers: Vec<u16> = task_numbers.into_iter().collect();
        numbers.sort_unstable();
        numbers.dedup();
        let mut used = std::collections::BTreeSet::new();
        self.salts.clear();
        for n in numbers {
            let mut attempt = 0;
            let spec = loop {
                let spec = SaltSpec::derive(n, self.seed, attempt)?;
                if used.insert(spec.y_constant) {
                    break spec;
                }
                attempt += 1;
            };
            self.salts.push(spec);
        }
        Ok(())
    }

    pub fn salt(&self, task_number: u16) -> Option<&SaltSpec> {
        self.salts.iter().find(|s| s.task_number == task_number)
    }

    /// Copy without the token index, safe to ship inside the game.
    pub fn runtime_view(&self) -> Manifest {
        Manifest {
            tokens: Vec::new(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text)?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::Config(format!(
                "unsupported manifest format {}",
                m.format
            )));
        }
        m.hash.validate()?;
        Ok(m)
    }

    pub fn token_index(&self) -> BTreeMap<u64, &TokenEntry> {
        self.tokens.iter().map(|t| (t.token, t)).collect()
    }
}
