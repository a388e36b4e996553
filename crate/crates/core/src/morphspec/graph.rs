use std::fmt::Write;

use super::MorphSpec;

pub const ENTRY_NODE: &str = "__entry";
pub const EXIT_NODE: &str = "__exit";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Entry,
    State,
    Exit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphNode {
    pub id: String,
    pub label: String,
    pub kind: NodeKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Entry,
    Forward,
    Reverse,
    Exit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphEdge {
    pub from: String,
    pub to: String,
    pub label: String,
    pub kind: EdgeKind,
    /// Transition name for forward/reverse edges.
    pub transition: Option<String>,
}

/// The state machine a morph induces: one node per state plus entry and
/// exit pseudo-nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateMachineGraph {
    pub name: String,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl StateMachineGraph {
    pub fn from_morph(m: &MorphSpec) -> Self {
        let mut nodes = vec![GraphNode {
            id: ENTRY_NODE.into(),
            label: "entry".into(),
            kind: NodeKind::Entry,
        }];
        nodes.extend(m.states.iter().map(|s| GraphNode {
            id: s.name.clone(),
            label: s.name.clone(),
            kind: NodeKind::State,
        }));
        nodes.push(GraphNode {
            id: EXIT_NODE.into(),
            label: "exit".into(),
            kind: NodeKind::Exit,
        });

        let mut edges: Vec<GraphEdge> = m
            .states
            .iter()
            .filter(|s| !s.restrict)
            .map(|s| GraphEdge {
                from: ENTRY_NODE.into(),
                to: s.name.clone(),
                label: "matched".into(),
                kind: EdgeKind::Entry,
                transition: None,
            })
            .collect();
        for t in &m.transitions {
            edges.push(GraphEdge {
                from: t.states.0.clone(),
                to: t.states.1.clone(),
                label: t.name.clone(),
                kind: EdgeKind::Forward,
                transition: Some(t.name.clone()),
            });
            if t.bidirectional {
                edges.push(GraphEdge {
                    from: t.states.1.clone(),
                    to: t.states.0.clone(),
                    label: format!("{} (reverse)", t.name),
                    kind: EdgeKind::Reverse,
                    transition: Some(t.name.clone()),
                });
            }
        }
        edges.extend(m.states.iter().map(|s| GraphEdge {
            from: s.name.clone(),
            to: EXIT_NODE.into(),
            label: "spec edited".into(),
            kind: EdgeKind::Exit,
            transition: None,
        }));
        StateMachineGraph {
            name: m.name.clone(),
            nodes,
            edges,
        }
    }

    /// Transition edges only (forward and reverse).
    pub fn transition_edges(&self) -> impl Iterator<Item = &GraphEdge> + '_ {
        self.edges
            .iter()
            .filter(|e| matches!(e.kind, EdgeKind::Forward | EdgeKind::Reverse))
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        writeln!(out, "digraph {} {{", quote(&self.name)).unwrap();
        out.push_str("  rankdir=LR;\n");
        for n in &self.nodes {
            let attrs = match n.kind {
                NodeKind::Entry => format!("label={}, shape=circle", quote(&n.label)),
                NodeKind::Exit => format!("label={}, shape=doublecircle", quote(&n.label)),
                NodeKind::State => "shape=box, style=rounded".to_string(),
            };
            writeln!(out, "  {} [{attrs}];", quote(&n.id)).unwrap();
        }
        for e in &self.edges {
            let style = match e.kind {
                EdgeKind::Reverse => ", style=dashed",
                EdgeKind::Exit => ", style=dotted",
                _ => "",
            };
            writeln!(
                out,
                "  {} -> {} [label={}{style}];",
                quote(&e.from),
                quote(&e.to),
                quote(&e.label)
            )
            .unwrap();
        }
        out.push_str("}\n");
        out
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn export_dot(m: &MorphSpec) -> String {
    StateMachineGraph::from_morph(m).to_dot()
}
