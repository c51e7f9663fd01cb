//! Bipartite species-reaction graph of a stoichiometric matrix, its bad
//! 4-cycles, and Graphviz DOT output.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Consumed,
    Produced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Solid,
    Dotted,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub species: usize,
    pub reaction: usize,
    pub direction: Direction,
    pub style: Style,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SRGraph {
    pub species: Vec<String>,
    pub reactions: Vec<String>,
    /// Sorted by reaction, then species.
    pub edges: Vec<Edge>,
}

/// Species i, reaction k, species j, reaction l, with the single produced
/// edge at (i, k).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BadCycle {
    pub produced: (usize, usize),
    pub species: (usize, usize),
    pub reactions: (usize, usize),
}

/// Solid edges are consumed, dotted ones produced.
pub fn build_graph<T: Scalar>(s: &Matrix<T>, species: &[String]) -> SRGraph {
    let (d, dp) = s.shape();
    let mut edges = Vec::new();
    for k in 0..dp {
        for i in 0..d {
            let v = &s[(i, k)];
            if v.is_zero() {
                continue;
            }
            let (direction, style) = if v.is_negative() {
                (Direction::Consumed, Style::Solid)
            } else {
                (Direction::Produced, Style::Dotted)
            };
            edges.push(Edge {
                species: i,
                reaction: k,
                direction,
                style,
            });
        }
    }
    let names = if species.len() == d {
        species.to_vec()
    } else {
        (1..=d).map(|i| format!("S{i}")).collect()
    };
    SRGraph {
        species: names,
        reactions: (1..=dp).map(|k| format!("R{k}")).collect(),
        edges,
    }
}

impl SRGraph {
    fn direction(&self, i: usize, k: usize) -> Option<Direction> {
        self.edges
            .iter()
            .find(|e| e.species == i && e.reaction == k)
            .map(|e| e.direction)
    }
}

/// 4-cycles with three consumed edges and one produced edge.
pub fn find_bad_cycles(g: &SRGraph) -> Vec<BadCycle> {
    let d = g.species.len();
    let dp = g.reactions.len();
    let mut out = BTreeSet::new();
    for i in 0..d {
        for k in 0..dp {
            if g.direction(i, k) != Some(Direction::Produced) {
                continue;
            }
            for j in (0..d).filter(|&j| j != i) {
                if g.direction(j, k) != Some(Direction::Consumed) {
                    continue;
                }
                for l in (0..dp).filter(|&l| l != k) {
                    if g.direction(i, l) == Some(Direction::Consumed)
                        && g.direction(j, l) == Some(Direction::Consumed)
                    {
                        out.insert(BadCycle {
                            produced: (i, k),
                            species: (i.min(j), i.max(j)),
                            reactions: (k.min(l), k.max(l)),
                        });
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn export_dot(g: &SRGraph) -> String {
    let mut out = String::from("digraph SR {\n");
    for s in &g.species {
        let _ = writeln!(out, "  {} [shape=ellipse];", quote(s));
    }
    for r in &g.reactions {
        let _ = writeln!(out, "  {} [shape=box];", quote(r));
    }
    for e in &g.edges {
        let (sp, rx) = (quote(&g.species[e.species]), quote(&g.reactions[e.reaction]));
        let style = match e.style {
            Style::Solid => "solid",
            Style::Dotted => "dotted",
        };
        match e.direction {
            Direction::Consumed => {
                let _ = writeln!(out, "  {sp} -> {rx} [style={style}];");
            }
            Direction::Produced => {
                let _ = writeln!(out, "  {rx} -> {sp} [style={style}];");
            }
        }
    }
    out.push_str("}\n");
    out
}

fn unquote(s: &str) -> Option<String> {
    let inner = s.trim().strip_prefix('"')?.strip_suffix('"')?;
    Some(inner.replace("\\\"", "\"").replace("\\\\", "\\"))
}

/// Reads back the edge lines written by [`export_dot`]: `(from, to, style)`.
pub fn parse_dot_edges(dot: &str) -> Vec<(String, String, String)> {
    let mut out = Vec::new();
    for line in dot.lines() {
        let line = line.trim().trim_end_matches(';');
        let Some((lhs, attrs)) = line.split_once(" [") else {
            continue;
        };
        let Some((from, to)) = lhs.split_once(" -> ") else {
            continue;
        };
        let style = attrs
            .trim_end_matches(']')
            .split(',')
            .find_map(|a| a.trim().strip_prefix("style="))
            .unwrap_or("solid")
            .to_string();
        if let (Some(f), Some(t)) = (unquote(from), unquote(to)) {
            out.push((f, t, style));
        }
    }
    out
}
