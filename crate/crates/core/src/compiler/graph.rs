use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use super::execute::CompiledTask;
use super::script::Target;
use crate::error::{Error, Result};
use crate::manifest::{Manifest, MessageKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Entry,
    Intermediate,
    Hint,
    Exit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub task: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    Solution,
    Hint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Arc {
    pub source: String,
    pub target: String,
    pub token: u64,
    pub kind: ArcKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TaskGraph {
    pub nodes: Vec<Node>,
    pub arcs: Vec<Arc>,
}

/// What the graph needs to know about one task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSummary {
    pub number: u16,
    pub target: Option<Target>,
    pub solution_tokens: Vec<u64>,
    pub hint_tokens: Vec<u64>,
}

pub fn task_id(n: u16) -> String {
    format!("{n:03}")
}

fn exit_id(n: u16) -> String {
    format!("exit_{n:03}")
}

fn hint_id(token: u64) -> String {
    format!("hint_{token}")
}

impl TaskGraph {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn entries(&self) -> Vec<u16> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Entry)
            .map(|n| n.task)
            .collect()
    }

    pub fn exits(&self) -> Vec<&Node> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Exit)
            .collect()
    }

    pub fn out_arcs<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Arc> + 'a {
        self.arcs.iter().filter(move |a| a.source == id)
    }
}

/// Assembles the multigraph: solution arcs towards the successor task or an
/// exit star, hint arcs towards leaves. Rejects dangling targets and cycles.
pub fn build_graph_from(tasks: &[TaskSummary]) -> Result<TaskGraph> {
    let numbers: BTreeSet<u16> = tasks.iter().map(|t| t.number).collect();
    let mut arcs = Vec::new();
    let mut incoming: BTreeSet<u16> = BTreeSet::new();
    let mut exits = Vec::new();
    let mut hints = Vec::new();
    for t in tasks {
        let source = task_id(t.number);
        let target = match t.target {
            Some(Target::Task(n)) => {
                if !numbers.contains(&n) {
                    return Err(Error::Graph(format!(
                        "task {} points to missing task {n:03}",
                        source
                    )));
                }
                if !t.solution_tokens.is_empty() {
                    incoming.insert(n);
                }
                Some(task_id(n))
            }
            Some(Target::Exit) => {
                exits.push(t.number);
                Some(exit_id(t.number))
            }
            None => None,
        };
        if let Some(target) = target {
            for &token in &t.solution_tokens {
                arcs.push(Arc {
                    source: source.clone(),
                    target: target.clone(),
                    token,
                    kind: ArcKind::Solution,
                });
            }
        }
        for &token in &t.hint_tokens {
            hints.push((t.number, token));
            arcs.push(Arc {
                source: source.clone(),
                target: hint_id(token),
                token,
                kind: ArcKind::Hint,
            });
        }
    }
    check_acyclic(tasks)?;
    let mut nodes: Vec<Node> = tasks
        .iter()
        .map(|t| Node {
            id: task_id(t.number),
            kind: if incoming.contains(&t.number) {
                NodeKind::Intermediate
            } else {
                NodeKind::Entry
            },
            task: t.number,
        })
        .collect();
    nodes.extend(exits.into_iter().map(|n| Node {
        id: exit_id(n),
        kind: NodeKind::Exit,
        task: n,
    }));
    let mut seen = BTreeSet::new();
    for (task, token) in hints {
        if seen.insert(token) {
            nodes.push(Node {
                id: hint_id(token),
                kind: NodeKind::Hint,
                task,
            });
        }
    }
    Ok(TaskGraph { nodes, arcs })
}

fn check_acyclic(tasks: &[TaskSummary]) -> Result<()> {
    let mut indegree: BTreeMap<u16, usize> = tasks.iter().map(|t| (t.number, 0)).collect();
    let mut next: BTreeMap<u16, Vec<u16>> = BTreeMap::new();
    for t in tasks {
        if let Some(Target::Task(n)) = t.target {
            *indegree.entry(n).or_default() += 1;
            next.entry(t.number).or_default().push(n);
        }
    }
    let mut queue: VecDeque<u16> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(n, _)| *n)
        .collect();
    let mut done = 0;
    while let Some(n) = queue.pop_front() {
        done += 1;
        for m in next.get(&n).into_iter().flatten() {
            let d = indegree.get_mut(m).expect("targets are known tasks");
            *d -= 1;
            if *d == 0 {
                queue.push_back(*m);
            }
        }
    }
    if done < indegree.len() {
        let stuck: Vec<String> = indegree
            .iter()
            .filter(|(_, d)| **d > 0)
            .map(|(n, _)| task_id(*n))
            .collect();
        return Err(Error::Graph(format!(
            "cycle through tasks {}",
            stuck.join(", ")
        )));
    }
    Ok(())
}

pub fn summarize(task: &CompiledTask) -> TaskSummary {
    TaskSummary {
        number: task.number(),
        target: task.primary().and_then(|(b, _)| b.target),
        solution_tokens: task.solution_tokens(),
        hint_tokens: task.hints().filter_map(|(_, o)| o.token).collect(),
    }
}

pub fn build_graph(tasks: &[CompiledTask]) -> Result<TaskGraph> {
    build_graph_from(&tasks.iter().map(summarize).collect::<Vec<_>>())
}

/// Rebuilds the graph from the token index of a build manifest, tasks in
/// order of first appearance.
pub fn graph_from_manifest(manifest: &Manifest) -> Result<TaskGraph> {
    let mut tasks: Vec<TaskSummary> = Vec::new();
    for entry in &manifest.tokens {
        let at = match tasks.iter().position(|t| t.number == entry.task) {
            Some(i) => i,
            None => {
                tasks.push(TaskSummary {
                    number: entry.task,
                    target: None,
                    solution_tokens: Vec::new(),
                    hint_tokens: Vec::new(),
                });
                tasks.len() - 1
            }
        };
        let s = &mut tasks[at];
        match entry.kind {
            MessageKind::Question => {}
            MessageKind::Hint => s.hint_tokens.push(entry.token),
            MessageKind::Success => {
                s.solution_tokens.push(entry.token);
                s.target = entry.target.as_deref().and_then(Target::parse);
            }
        }
    }
    build_graph_from(&tasks)
}

/// DOT rendering: green entries, red intermediate tasks, small blank hint
/// leaves and yellow exit stars.
pub fn export_map(graph: &TaskGraph) -> String {
    let mut out =
        String::from("digraph activity_map {\n  rankdir=LR;\n  node [fontname=\"Helvetica\"];\n");
    for node in &graph.nodes {
        let attrs = match node.kind {
            NodeKind::Entry => format!(
                "label=\"{}\", shape=circle, style=filled, fillcolor=green",
                node.id
            ),
            NodeKind::Intermediate => format!(
                "label=\"{}\", shape=circle, style=filled, fillcolor=red",
                node.id
            ),
            NodeKind::Hint => "label=\"\", shape=circle, width=0.15, style=solid".to_owned(),
            NodeKind::Exit => "label=\"\", shape=star, style=filled, fillcolor=yellow".to_owned(),
        };
        let _ = writeln!(out, "  \"{}\" [{attrs}];", node.id);
    }
    for arc in &graph.arcs {
        let style = match arc.kind {
            ArcKind::Solution => format!("label=\"{}\"", arc.token),
            ArcKind::Hint => "style=invis".to_owned(),
        };
        let _ = writeln!(out, "  \"{}\" -> \"{}\" [{style}];", arc.source, arc.target);
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(n: u16, target: Option<Target>, sols: &[u64], hints: &[u64]) -> TaskSummary {
        TaskSummary {
            number: n,
            target,
            solution_tokens: sols.to_vec(),
            hint_tokens: hints.to_vec(),
        }
    }

    #[test]
    fn exercise_is_a_star() {
        let g = build_graph_from(&[summary(27, Some(Target::Exit), &[10], &[11, 12])]).unwrap();
        assert_eq!(g.entries(), vec![27]);
        assert_eq!(g.out_arcs("027").count(), 3);
        assert_eq!(g.exits().len(), 1);
        assert_eq!(
            g.nodes.iter().filter(|n| n.kind == NodeKind::Hint).count(),
            2
        );
        let dot = export_map(&g);
        assert!(
            dot.contains("\"027\" [label=\"027\", shape=circle, style=filled, fillcolor=green]")
        );
        assert!(dot.contains("shape=star, style=filled, fillcolor=yellow"));
        assert!(dot.contains("\"hint_11\" [label=\"\""));
    }

    #[test]
    fn two_solutions_make_a_multigraph() {
        let g = build_graph_from(&[summary(27, Some(Target::Exit), &[10, 20], &[])]).unwrap();
        let arcs: Vec<_> = g.out_arcs("027").collect();
        assert_eq!(arcs.len(), 2);
        assert_eq!(arcs[0].target, arcs[1].target);
    }

    #[test]
    fn linear_adventure_is_a_path() {
        let g = build_graph_from(&[
            summary(1, Some(Target::Task(2)), &[5], &[]),
            summary(2, Some(Target::Task(3)), &[6], &[]),
            summary(3, Some(Target::Exit), &[7], &[]),
        ])
        .unwrap();
        assert_eq!(g.entries(), vec![1]);
        assert_eq!(g.node("002").unwrap().kind, NodeKind::Intermediate);
        assert_eq!(g.exits().len(), 1);
        assert!(export_map(&g).contains("fillcolor=red"));
    }

    #[test]
    fn cycles_and_dangling_targets_fail() {
        let cyc = build_graph_from(&[
            summary(1, Some(Target::Task(2)), &[5], &[]),
            summary(2, Some(Target::Task(1)), &[6], &[]),
        ]);
        assert!(cyc.unwrap_err().to_string().contains("cycle"));
        let dangling = build_graph_from(&[summary(1, Some(Target::Task(9)), &[5], &[])]);
        assert!(dangling
            .unwrap_err()
            .to_string()
            .contains("missing task 009"));
    }
}
