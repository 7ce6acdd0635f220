//! `sqlab`: build, play, check, map, report and simulate SQL adventure games.

use std::fs;
use std::io::{self, BufWriter, IsTerminal};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use sqlab_core::builder::{
    build_sources, open_game, table_specs, verify_dump, GameSources, MANIFEST_FILE,
};
use sqlab_core::compiler::{export_map, graph_from_manifest, render_report, report};
use sqlab_core::exec::Execution;
use sqlab_core::lab::{
    collision_histogram, plan_functions, run_simulation, strip_plot, PopulationSpec, VariantPlan,
};
use sqlab_core::manifest::Manifest;
use sqlab_core::play::Shell;

const SEED_VAR: &str = "SQLAB_SEED";

#[derive(Parser)]
#[command(name = "sqlab", version, about = "SQL adventure game compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a game directory into a dump, a manifest and an activity map.
    Build {
        dir: PathBuf,
        /// Output directory (default: <dir>/build).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Open a built game in a minimal SQL shell.
    Play {
        db: PathBuf,
        /// Append a JSON-lines play log to this file.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Rerun the checks that a dump supports on its own.
    Check {
        db: PathBuf,
        /// Build manifest with the token index (default: manifest.json next to the dump).
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Write the activity map of a game directory or of a built game.
    Map {
        source: PathBuf,
        #[arg(long)]
        dot: PathBuf,
    },
    /// Summarize play logs.
    Report {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run the aggregation collision simulation.
    Simulate {
        #[arg(long, default_value = "full")]
        plan: VariantPlan,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the strip plot and the collision histogram here.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
}

/// A failure the user can fix in the inputs: exit status 2.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| InputError(e.to_string()).into())
}

fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_VAR) {
        Ok(v) => Ok(Some(input(
            v.trim()
                .parse::<u64>()
                .map_err(|e| format!("{SEED_VAR}: {e}")),
        )?)),
        Err(_) => Ok(None),
    }
}

fn read_sources(dir: &Path) -> Result<GameSources> {
    let mut sources = input(GameSources::read(dir))?;
    if let Some(seed) = seed_override()? {
        sources.config.seed = seed;
    }
    Ok(sources)
}

fn build(dir: &Path, out: Option<PathBuf>) -> Result<bool> {
    let sources = read_sources(dir)?;
    let game = input(build_sources(&sources))?;
    print!("{}", game.report.render());
    if !game.passed() {
        eprintln!("build failed: checks {:?}", game.report.failed_ids());
        return Ok(false);
    }
    let out = out.unwrap_or_else(|| dir.join("build"));
    let written = game.write_outputs(&out)?;
    for p in [&written.dump, &written.manifest, &written.map] {
        println!("wrote {}", p.display());
    }
    Ok(true)
}

fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = input(fs::read_to_string(path).with_context(|| path.display().to_string()))?;
    input(Manifest::from_json(&text))
}

fn sibling_manifest(db: &Path, explicit: Option<PathBuf>) -> Option<PathBuf> {
    explicit.or_else(|| {
        let p = db.parent().unwrap_or(Path::new(".")).join(MANIFEST_FILE);
        p.exists().then_some(p)
    })
}

fn play(db: &Path, log: Option<PathBuf>) -> Result<bool> {
    let (conn, _) = input(open_game(db))?;
    let stdin = io::stdin();
    let mut stdout = io::stdout().lock();
    let mut shell = Shell::new(&conn);
    if let Some(path) = log {
        let file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .with_context(|| path.display().to_string())?;
        let session = format!("{}", std::process::id());
        shell = shell.with_log(BufWriter::new(file), session);
    }
    shell.prompt = stdin.is_terminal();
    shell.run(stdin.lock(), &mut stdout)?;
    Ok(true)
}

fn check(db: &Path, manifest: Option<PathBuf>) -> Result<bool> {
    let (conn, embedded) = input(open_game(db))?;
    let manifest = match sibling_manifest(db, manifest) {
        Some(p) => load_manifest(&p)?,
        None => embedded,
    };
    let tables = table_specs(&conn)?;
    let report = verify_dump(&conn, &tables, &manifest)?;
    print!("{}", report.render());
    Ok(report.passed())
}

fn map(source: &Path, dot: &Path) -> Result<bool> {
    let text = if source.is_dir() {
        let game = input(build_sources(&read_sources(source)?))?;
        if let Some(e) = &game.graph_error {
            bail!(InputError(e.clone()));
        }
        game.map()
    } else {
        let manifest = if source.extension().is_some_and(|e| e == "json") {
            load_manifest(source)?
        } else {
            let path = sibling_manifest(source, None).ok_or_else(|| {
                InputError(format!("no {MANIFEST_FILE} next to {}", source.display()))
            })?;
            load_manifest(&path)?
        };
        export_map(&input(graph_from_manifest(&manifest))?)
    };
    fs::write(dot, text).with_context(|| dot.display().to_string())?;
    println!("wrote {}", dot.display());
    Ok(true)
}

fn report_cmd(logs: &[PathBuf], manifest: Option<PathBuf>, json: bool) -> Result<bool> {
    let mut text = String::new();
    for path in logs {
        text.push_str(&input(
            fs::read_to_string(path).with_context(|| path.display().to_string()),
        )?);
        text.push('\n');
    }
    let manifest = manifest.map(|p| load_manifest(&p)).transpose()?;
    let r = report(&text, manifest.as_ref());
    if json {
        println!("{}", serde_json_pretty(&r)?);
    } else {
        print!("{}", render_report(&r));
    }
    Ok(true)
}

fn serde_json_pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn simulate(
    plan: VariantPlan,
    seed: u64,
    svg: Option<PathBuf>,
    out: Option<PathBuf>,
    sequential: bool,
) -> Result<bool> {
    let seed = seed_override()?.unwrap_or(seed);
    let spec = PopulationSpec::for_plan(plan, seed);
    let execution = if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let r = input(run_simulation(&spec, &plan_functions(plan), execution))?;
    eprint!("{}", r.summary());
    if let Some(dir) = svg {
        fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
        let tag = format!("{plan:?}").to_lowercase();
        for (name, body) in [
            ("strip", strip_plot(&r)),
            ("collisions", collision_histogram(&r)),
        ] {
            let p = dir.join(format!("{tag}_{name}.svg"));
            fs::write(&p, body).with_context(|| p.display().to_string())?;
            eprintln!("wrote {}", p.display());
        }
    }
    match out {
        Some(p) => fs::write(&p, r.to_json()).with_context(|| p.display().to_string())?,
        None => println!("{}", r.to_json()),
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Build { dir, out } => build(&dir, out),
        Command::Play { db, log } => play(&db, log),
        Command::Check { db, manifest } => check(&db, manifest),
        Command::Map { source, dot } => map(&source, &dot),
        Command::Report {
            logs,
            manifest,
            json,
        } => report_cmd(&logs, manifest, json),
        Command::Simulate {
            plan,
            seed,
            svg,
            out,
            sequential,
        } => simulate(plan, seed, svg, out, sequential),
    }
}

fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<io::Error>())
        .any(|io| io.kind() == io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
