use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::crypto::HashConfig;
use crate::error::{Error, Result};
use crate::formula::FormulaDefaults;

pub const SCHEMA_FILE: &str = "schema.sql";
pub const DATASET_DIR: &str = "dataset";
pub const SCRIPT_FILE: &str = "adventure.md";
pub const CONFIG_FILE: &str = "game.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Embedded,
}

fn default_seed() -> u64 {
    1
}
fn default_hash_bits() -> u32 {
    40
}
fn default_coalesce() -> u64 {
    42
}
fn default_fallback() -> String {
    "This token unlocks no message. Check your query and the formula, then try again.".into()
}
fn default_congratulation() -> String {
    "**Correct!**".into()
}
fn default_exit() -> String {
    "You have reached the end of this path.".into()
}
fn default_instruction() -> String {
    "Then replace (0.0) with {}.".into()
}

/// Contents of `game.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_hash_bits")]
    pub hash_bits: u32,
    #[serde(default = "default_coalesce")]
    pub coalesce_constant: u64,
    #[serde(default)]
    pub formula_defaults: FormulaDefaults,
    #[serde(default = "default_fallback")]
    pub fallback_text: String,
    #[serde(default = "default_congratulation")]
    pub congratulation: String,
    #[serde(default = "default_exit")]
    pub exit_text: String,
    /// Sentence shown after a controlled formula; `{}` receives the
    /// instruction of the control line.
    #[serde(default = "default_instruction")]
    pub instruction_template: String,
}

impl Default for GameConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

impl GameConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: GameConfig = serde_json::from_str(text)?;
        c.hash()?;
        if !c.instruction_template.contains("{}") {
            return Err(Error::Config("instruction_template needs a {} slot".into()));
        }
        Ok(c)
    }

    pub fn hash(&self) -> Result<HashConfig> {
        HashConfig::new(self.hash_bits, self.coalesce_constant)
    }
}

/// Paths of the source material of one game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameDir {
    pub root: PathBuf,
}

impl GameDir {
    /// Checks that the four inputs exist.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        for (name, dir) in [
            (SCHEMA_FILE, false),
            (DATASET_DIR, true),
            (SCRIPT_FILE, false),
            (CONFIG_FILE, false),
        ] {
            let p = root.join(name);
            let ok = if dir { p.is_dir() } else { p.is_file() };
            if !ok {
                return Err(Error::Config(format!("{} is missing", p.display())));
            }
        }
        Ok(GameDir { root })
    }

    pub fn schema(&self) -> PathBuf {
        self.root.join(SCHEMA_FILE)
    }
    pub fn dataset(&self) -> PathBuf {
        self.root.join(DATASET_DIR)
    }
    pub fn script(&self) -> PathBuf {
        self.root.join(SCRIPT_FILE)
    }
    pub fn config(&self) -> PathBuf {
        self.root.join(CONFIG_FILE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let c = GameConfig::from_json(r#"{"title": "T", "seed": 7}"#).unwrap();
        assert_eq!((c.seed, c.hash_bits, c.coalesce_constant), (7, 40, 42));
        assert!(GameConfig::from_json(r#"{"hash_bits": 80}"#).is_err());
        assert!(GameConfig::from_json(r#"{"colour": 1}"#).is_err());
        assert!(GameConfig::from_json(r#"{"instruction_template": "x"}"#).is_err());
    }
}
