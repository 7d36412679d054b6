//! Forests of repetitions for terminating computations of single-headed
//! programs.
//!
//! Every CHR atom of the initial goal roots a tree. Rewriting a repetition
//! `h#l^i` with a propagation rule gives it one child per body atom followed
//! by `h#l^{i+1}`; a simplification gives one child per body atom, or a
//! single `□` when the body has no CHR atoms. Nodes live in an arena and are
//! referred to by index.

mod compress;
mod reactive;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{Computation, StepKind};
use crate::store::BuiltinStore;
use crate::syntax::{Atom, Constraint, Name, Program, Term};

pub use compress::{compress, compress_candidates, CompressError};
pub use reactive::{eta, max_sequence_length_check, ReactiveSequence};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeLabel {
    /// `atom#id^superscript`. `id` is `None` for atoms that were never
    /// introduced because the computation failed first.
    Repetition {
        atom: Atom,
        id: Option<u64>,
        superscript: usize,
    },
    Box,
}

impl NodeLabel {
    pub fn atom(&self) -> Option<&Atom> {
        match self {
            NodeLabel::Repetition { atom, .. } => Some(atom),
            NodeLabel::Box => None,
        }
    }
}

impl std::fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NodeLabel::Repetition {
                atom,
                id,
                superscript,
            } => match id {
                Some(id) => write!(f, "{atom}#{id}^{superscript}"),
                None => write!(f, "{atom}#?^{superscript}"),
            },
            NodeLabel::Box => f.write_str("□"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForestNode {
    pub label: NodeLabel,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
}

/// One Apply step of the source computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApplyRecord {
    /// Index into the computation's steps.
    pub step: usize,
    /// The repetition the step rewrites.
    pub node: NodeId,
    pub rule: Name,
    pub propagation: bool,
    /// All built-ins of the source and of the target configuration.
    pub pair: (BuiltinStore, BuiltinStore),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Forest {
    pub nodes: Vec<ForestNode>,
    pub roots: Vec<NodeId>,
    /// In computation order.
    pub applies: Vec<ApplyRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForestError {
    #[error("the computation is not terminating (it does not end in a final configuration)")]
    NonTerminatingInput,
    #[error("rule `{0}` has more than one head; forests are defined for single-headed programs")]
    NotSingleHeaded(String),
    #[error("step {0} does not fit the computation")]
    Inconsistent(usize),
}

/// Class key for r-equality: the atom with its variables numbered by first
/// occurrence.
pub fn r_class(atom: &Atom) -> String {
    let mut seen: Vec<&Name> = Vec::new();
    let args: Vec<String> = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Const(c) => c.to_string(),
            Term::Var(v) => {
                let i = seen.iter().position(|w| *w == v).unwrap_or_else(|| {
                    seen.push(v);
                    seen.len() - 1
                });
                format!("_{i}")
            }
        })
        .collect();
    format!("{}/{}({})", atom.predicate, atom.arity(), args.join(","))
}

/// The injective renaming `ρ` with `a = bρ`, if one exists.
pub fn r_equal(a: &Atom, b: &Atom) -> Option<BTreeMap<Name, Term>> {
    if a.predicate != b.predicate || a.arity() != b.arity() {
        return None;
    }
    let mut rho: BTreeMap<Name, Term> = BTreeMap::new();
    let mut image: BTreeMap<Name, Name> = BTreeMap::new();
    for (x, y) in a.args.iter().zip(&b.args) {
        match (x, y) {
            (Term::Const(c), Term::Const(d)) if c == d => {}
            (Term::Var(v), Term::Var(w)) => {
                match (rho.get(w), image.get(v)) {
                    (None, None) => {
                        rho.insert(w.clone(), Term::Var(v.clone()));
                        image.insert(v.clone(), w.clone());
                    }
                    (Some(Term::Var(v2)), Some(w2)) if v2 == v && w2 == w => {}
                    _ => return None,
                }
            }
            _ => return None,
        }
    }
    Some(rho)
}

/// The forest associated to a terminating computation.
pub fn build_forest(p: &Program, delta: &Computation) -> Result<Forest, ForestError> {
    if let Some(r) = p.rules.iter().find(|r| r.head_len() != 1) {
        return Err(ForestError::NotSingleHeaded(r.name.to_string()));
    }
    if !delta.is_final(p) {
        return Err(ForestError::NonTerminatingInput);
    }
    let mut f = Forest {
        nodes: Vec::new(),
        roots: Vec::new(),
        applies: Vec::new(),
    };
    // parallel to the current goal: the node of each pending CHR atom
    let mut pending: Vec<Option<NodeId>> = Vec::new();
    for g in &delta.initial.goal {
        pending.push(match g {
            Constraint::Chr(a) => {
                let n = f.push(repetition(a.clone(), None, 0), None);
                f.roots.push(n);
                Some(n)
            }
            Constraint::Builtin(_) => None,
        });
    }
    let mut live: BTreeMap<u64, NodeId> = BTreeMap::new();
    let mut prev = &delta.initial;
    for (i, step) in delta.steps.iter().enumerate() {
        let label = &step.label;
        match label.kind {
            StepKind::Solve => {
                let gi = label.goal_index.ok_or(ForestError::Inconsistent(i))?;
                if gi >= pending.len() {
                    return Err(ForestError::Inconsistent(i));
                }
                pending.remove(gi);
            }
            StepKind::Introduce => {
                let gi = label.goal_index.ok_or(ForestError::Inconsistent(i))?;
                let node = pending
                    .get(gi)
                    .copied()
                    .flatten()
                    .ok_or(ForestError::Inconsistent(i))?;
                pending.remove(gi);
                if let NodeLabel::Repetition { id, .. } = &mut f.nodes[node].label {
                    *id = Some(prev.next_id);
                }
                live.insert(prev.next_id, node);
            }
            StepKind::Apply => {
                let rule_name = label.rule.clone().ok_or(ForestError::Inconsistent(i))?;
                let rule = p.rule(&rule_name).ok_or(ForestError::Inconsistent(i))?;
                let &[k] = label.matched_ids().as_slice() else {
                    return Err(ForestError::Inconsistent(i));
                };
                let node = *live.get(&k).ok_or(ForestError::Inconsistent(i))?;
                let propagation = rule.is_propagation();
                f.applies.push(ApplyRecord {
                    step: i,
                    node,
                    rule: rule_name,
                    propagation,
                    pair: (prev.all_builtins(), step.config.all_builtins()),
                });
                let mut body_atoms = 0;
                for g in &step.config.goal[prev.goal.len()..] {
                    pending.push(match g {
                        Constraint::Chr(a) => {
                            body_atoms += 1;
                            Some(f.push(repetition(a.clone(), None, 0), Some(node)))
                        }
                        Constraint::Builtin(_) => None,
                    });
                }
                if propagation {
                    let NodeLabel::Repetition {
                        atom, superscript, ..
                    } = f.nodes[node].label.clone()
                    else {
                        unreachable!("live nodes are repetitions")
                    };
                    let next = f.push(repetition(atom, Some(k), superscript + 1), Some(node));
                    live.insert(k, next);
                } else {
                    if body_atoms == 0 {
                        f.push(NodeLabel::Box, Some(node));
                    }
                    live.remove(&k);
                }
            }
        }
        prev = &step.config;
    }
    Ok(f)
}

fn repetition(atom: Atom, id: Option<u64>, superscript: usize) -> NodeLabel {
    NodeLabel::Repetition {
        atom,
        id,
        superscript,
    }
}

impl Forest {
    fn push(&mut self, label: NodeLabel, parent: Option<NodeId>) -> NodeId {
        let n = self.nodes.len();
        self.nodes.push(ForestNode {
            label,
            children: Vec::new(),
            parent,
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(n);
        }
        n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn label(&self, n: NodeId) -> &NodeLabel {
        &self.nodes[n].label
    }

    pub fn box_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.label == NodeLabel::Box)
            .count()
    }

    /// `n` followed by all its descendants, in preorder.
    pub fn subtree(&self, n: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![n];
        while let Some(m) = stack.pop() {
            out.push(m);
            stack.extend(self.nodes[m].children.iter().rev());
        }
        out
    }

    /// True when `d` lies strictly below `a`.
    pub fn is_strict_descendant(&self, a: NodeId, d: NodeId) -> bool {
        let mut cur = self.nodes[d].parent;
        while let Some(p) = cur {
            if p == a {
                return true;
            }
            cur = self.nodes[p].parent;
        }
        false
    }

    /// Root-to-leaf paths, left to right.
    pub fn sc_computations(&self) -> Vec<Vec<NodeId>> {
        let mut out = Vec::new();
        for &r in &self.roots {
            let mut path = Vec::new();
            self.paths_from(r, &mut path, &mut out);
        }
        out
    }

    fn paths_from(&self, n: NodeId, path: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        path.push(n);
        if self.nodes[n].children.is_empty() {
            out.push(path.clone());
        } else {
            for &c in &self.nodes[n].children {
                self.paths_from(c, path, out);
            }
        }
        path.pop();
    }

    /// Multiplicity of each r-equality class on a path.
    pub fn path_classes(&self, path: &[NodeId]) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for &n in path {
            if let Some(a) = self.nodes[n].label.atom() {
                *counts.entry(r_class(a)).or_insert(0) += 1;
            }
        }
        counts
    }

    /// `(l, degree)`: the largest r-equality multiplicity on any path, and
    /// the number of classes reaching it summed over the paths that do.
    pub fn repetitiveness(&self) -> (usize, usize) {
        let per_path: Vec<BTreeMap<String, usize>> = self
            .sc_computations()
            .iter()
            .map(|p| self.path_classes(p))
            .collect();
        let l = per_path
            .iter()
            .flat_map(|m| m.values().copied())
            .max()
            .unwrap_or(0);
        if l == 0 {
            return (0, 0);
        }
        let degree = per_path
            .iter()
            .map(|m| m.values().filter(|&&c| c == l).count())
            .sum();
        (l, degree)
    }

    /// The η-normalized sequence of all Apply steps in the subtree of `n`,
    /// projected onto the variables of `n`'s atom.
    pub fn node_sequence(&self, n: NodeId) -> ReactiveSequence {
        let Some(atom) = self.nodes[n].label.atom() else {
            return ReactiveSequence::default();
        };
        let sub: BTreeSet<NodeId> = self.subtree(n).into_iter().collect();
        let raw: Vec<(BuiltinStore, BuiltinStore)> = self
            .applies
            .iter()
            .filter(|a| sub.contains(&a.node))
            .map(|a| a.pair.clone())
            .collect();
        eta(&raw, &atom.vars().cloned().collect())
    }

    /// Propagation rules fired on `n`'s constraint before `n` was created.
    pub fn fired_before(&self, n: NodeId) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut cur = n;
        while let Some(p) = self.nodes[cur].parent {
            let same = matches!(
                (&self.nodes[p].label, &self.nodes[cur].label),
                (NodeLabel::Repetition { id: a, superscript: i, .. },
                 NodeLabel::Repetition { id: b, superscript: j, .. })
                    if a.is_some() && a == b && i + 1 == *j
            );
            if !same {
                break;
            }
            if let Some(rec) = self.applies.iter().find(|a| a.node == p) {
                out.insert(rec.rule.clone());
            }
            cur = p;
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &r in &self.roots {
            self.text_from(r, 0, &mut out);
        }
        out
    }

    fn text_from(&self, n: NodeId, depth: usize, out: &mut String) {
        let _ = writeln!(out, "{}{}", "  ".repeat(depth), self.nodes[n].label);
        for &c in &self.nodes[n].children {
            self.text_from(c, depth + 1, out);
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let roots: Vec<NodeJson> = self.roots.iter().map(|&r| self.node_json(r)).collect();
        serde_json::json!({ "roots": roots })
    }

    fn node_json(&self, n: NodeId) -> NodeJson {
        let children = self.nodes[n].children.iter().map(|&c| self.node_json(c)).collect();
        match &self.nodes[n].label {
            NodeLabel::Repetition {
                atom,
                id,
                superscript,
            } => NodeJson {
                label: "repetition",
                atom: Some(atom.to_string()),
                id: *id,
                superscript: Some(*superscript),
                sequence: Some(self.node_sequence(n).to_string()),
                children,
            },
            NodeLabel::Box => NodeJson {
                label: "box",
                atom: None,
                id: None,
                superscript: None,
                sequence: None,
                children,
            },
        }
    }
}

#[derive(Serialize)]
struct NodeJson {
    label: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    atom: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    superscript: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sequence: Option<String>,
    children: Vec<NodeJson>,
}
