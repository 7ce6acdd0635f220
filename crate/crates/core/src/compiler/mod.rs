//! Task compiler: script parsing, execution against the built database,
//! task graph and play-log reporting.

mod execute;
mod graph;
mod report;
mod script;

pub use execute::{check_assertion, execute_records, salt_numbers, BlockOutcome, CompiledTask};
pub use graph::{
    build_graph, build_graph_from, export_map, graph_from_manifest, summarize, task_id, Arc,
    ArcKind, Node, NodeKind, TaskGraph, TaskSummary,
};
pub use report::{render_report, report, LogKind, LogLine, Report, TaskStats, TokenCount};
pub use script::{
    interpolate_placeholder, parse_adventure, parse_adventure_lenient, Adventure, AssertExpr,
    Assertion, BlockRole, Diagnostic, FormulaSpec, SqlBlock, Target, TaskKind, TaskRecord,
};
