//! Game builder: turns a schema, a dataset and a task script into a
//! standalone database with salted formulas and encrypted messages.

mod config;
mod dataset;
mod dump;
mod hashes;
mod messages;
mod schema;
mod verify;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rusqlite::Connection;

pub use config::{
    Backend, GameConfig, GameDir, CONFIG_FILE, DATASET_DIR, SCHEMA_FILE, SCRIPT_FILE,
};
pub use dataset::{affinity, insert_tsv, load_dataset, parse_field, Affinity};
pub use dump::{emit_dump, load_dump, open_game, read_manifest};
pub use hashes::{
    audit_hashes, disambiguate, rehash_all, Duplicate, HashAudit, RowRef, MAX_DISAMBIGUATION,
};
pub use messages::{assemble_messages, build_message_table, task_presentation, MessageRecord};
pub use schema::{
    clear_database, describe_table, load_schema, table_specs, user_tables, ColumnSpec, TableSpec,
    HASH_COLUMN, MANIFEST_TABLE,
};
pub use verify::{verify_build, verify_dump, CheckOutcome, CheckReport, VerifyInput};

use crate::compiler::{
    build_graph, execute_records, export_map, parse_adventure_lenient, Adventure, CompiledTask,
    Diagnostic, TaskGraph,
};
use crate::error::{Error, Result};
use crate::manifest::Manifest;
use crate::runtime::{install_row_hash, install_runtime};

pub const DUMP_SUFFIX: &str = ".dump.sql";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MAP_FILE: &str = "activity_map.dot";

/// Mixed into the manifest seed for the message shuffle and nonces.
const MESSAGE_STREAM: u64 = 0x6d73_675f_7368_7566;

/// Source texts of one game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameSources {
    pub schema: String,
    /// TSV text per table name.
    pub dataset: BTreeMap<String, String>,
    pub script: String,
    pub config: GameConfig,
    /// Where the texts came from, for error messages.
    pub origin: PathBuf,
}

impl GameSources {
    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = GameDir::open(dir)?;
        let read = |p: PathBuf| std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e));
        let mut dataset = BTreeMap::new();
        let entries = std::fs::read_dir(dir.dataset()).map_err(|e| Error::io(dir.dataset(), e))?;
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir.dataset(), e))?.path();
            if path.extension().is_some_and(|x| x == "tsv") {
                let table = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_owned();
                dataset.insert(table, read(path)?);
            }
        }
        Ok(GameSources {
            schema: read(dir.schema())?,
            dataset,
            script: read(dir.script())?,
            config: GameConfig::from_json(&read(dir.config())?)?,
            origin: dir.root,
        })
    }
}

/// A finished build and every intermediate product the checks used.
pub struct GameBuild {
    /// Stem of the dump file, taken from the game directory name.
    pub name: String,
    pub conn: Connection,
    pub config: GameConfig,
    /// Full manifest, token index included.
    pub manifest: Manifest,
    pub tables: Vec<TableSpec>,
    pub row_counts: BTreeMap<String, usize>,
    pub hash_audit: HashAudit,
    pub adventure: Adventure,
    pub script_diagnostics: Vec<Diagnostic>,
    pub tasks: Vec<CompiledTask>,
    pub graph: TaskGraph,
    pub graph_error: Option<String>,
    pub messages: Vec<MessageRecord>,
    pub report: CheckReport,
}

/// Files written by [`GameBuild::write_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildOutputs {
    pub dump: PathBuf,
    pub manifest: PathBuf,
    pub map: PathBuf,
}

impl GameBuild {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }

    pub fn dump(&self) -> Result<String> {
        emit_dump(&self.conn)
    }

    pub fn map(&self) -> String {
        export_map(&self.graph)
    }

    /// Reruns the checks, e.g. after the database was modified.
    pub fn reverify(&mut self) -> Result<&CheckReport> {
        self.report = verify_build(&VerifyInput {
            conn: &self.conn,
            tables: &self.tables,
            manifest: &self.manifest,
            tasks: &self.tasks,
            script_diagnostics: &self.script_diagnostics,
            graph_error: self.graph_error.as_deref(),
            messages: &self.messages,
        })?;
        Ok(&self.report)
    }

    pub fn write_outputs(&self, out_dir: impl AsRef<Path>) -> Result<BuildOutputs> {
        let dir = out_dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let outputs = BuildOutputs {
            dump: dir.join(format!("{}{DUMP_SUFFIX}", self.name)),
            manifest: dir.join(MANIFEST_FILE),
            map: dir.join(MAP_FILE),
        };
        let write = |p: &Path, text: &str| std::fs::write(p, text).map_err(|e| Error::io(p, e));
        write(&outputs.dump, &self.dump()?)?;
        write(&outputs.manifest, &self.manifest.to_json())?;
        write(&outputs.map, &self.map())?;
        Ok(outputs)
    }
}

pub fn build_game(dir: impl AsRef<Path>) -> Result<GameBuild> {
    build_sources(&GameSources::read(dir)?)
}

/// Schema and dataset problems abort the build; script problems surface as
/// failed checks in the report.
pub fn build_sources(src: &GameSources) -> Result<GameBuild> {
    let config = src.config.clone();
    let cfg = config.hash()?;
    let conn = Connection::open_in_memory()?;
    install_row_hash(&conn, &cfg, "")?;

    let tables = load_schema(&conn, &src.schema)?;
    let mut row_counts = BTreeMap::new();
    for table in &tables {
        let path = src
            .origin
            .join(DATASET_DIR)
            .join(format!("{}.tsv", table.name));
        let text = src.dataset.get(&table.name).ok_or_else(|| Error::Dataset {
            path: path.clone(),
            line: 0,
            message: format!("no data file for table {}", table.name),
        })?;
        let n = insert_tsv(&conn, table, text).map_err(|(line, message)| Error::Dataset {
            path,
            line,
            message,
        })?;
        row_counts.insert(table.name.clone(), n);
    }
    let (disambiguator, hash_audit) = disambiguate(&conn, &tables, &cfg)?;

    let mut manifest = Manifest::new(cfg, config.seed, config.fallback_text.clone());
    manifest.disambiguator = disambiguator;
    manifest.formula_defaults = config.formula_defaults.clone();
    let (adventure, script_diagnostics) = parse_adventure_lenient(&src.script);
    manifest.assign_salts(adventure.tasks.iter().map(|t| t.number))?;
    install_runtime(&conn, &manifest)?;

    let tasks = execute_records(&conn, &adventure.tasks, &manifest)?;
    let (graph, graph_error) = match build_graph(&tasks) {
        Ok(g) => (g, None),
        Err(e) => (TaskGraph::default(), Some(e.to_string())),
    };
    let messages = assemble_messages(&tasks, &graph, &config);
    manifest.tokens = messages
        .iter()
        .flat_map(MessageRecord::token_entries)
        .collect();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed ^ MESSAGE_STREAM);
    build_message_table(&conn, &messages, &mut rng)?;
    conn.execute_batch(&format!(
        "DROP TABLE IF EXISTS {MANIFEST_TABLE}; CREATE TABLE {MANIFEST_TABLE} (json TEXT NOT NULL);"
    ))?;
    conn.execute(
        &format!("INSERT INTO {MANIFEST_TABLE} (json) VALUES (?1)"),
        [manifest.runtime_view().to_json()],
    )?;

    let name = src
        .origin
        .file_name()
        .and_then(|n| n.to_str())
        .filter(|n| !n.is_empty())
        .unwrap_or("game")
        .to_owned();
    let mut build = GameBuild {
        name,
        conn,
        config,
        manifest,
        tables,
        row_counts,
        hash_audit,
        adventure,
        script_diagnostics,
        tasks,
        graph,
        graph_error,
        messages,
        report: CheckReport::default(),
    };
    build.reverify()?;
    Ok(build)
}
