//! Replacing the work done on a repetition by the work done on an r-equal
//! descendant with the same reactive sequence.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{build_forest, r_equal, Forest, ForestError, NodeId, NodeLabel};
use crate::engine::{apply_successors, normalize_steps, Computation, Configuration, Semantics};
use crate::syntax::{Constraint, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompressError {
    #[error("precondition violated: {}", .0.join("; "))]
    PreconditionViolation(Vec<String>),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error("no remaining rewrite step is enabled after {0} steps")]
    Stuck(usize),
    #[error("the compressed computation does not end in a final configuration")]
    NotFinal,
    #[error("the compressed forest is not less repetitive ({before:?} before, {after:?} after)")]
    NoImprovement {
        before: (usize, usize),
        after: (usize, usize),
    },
}

fn check(p: &Program, sem: Semantics, f: &Forest, n: NodeId, n2: NodeId) -> Vec<String> {
    let mut failed = Vec::new();
    if n >= f.len() || n2 >= f.len() {
        return vec!["node does not belong to the forest".into()];
    }
    if n == n2 {
        failed.push("the nodes must be distinct".into());
    } else if !f.is_strict_descendant(n, n2) {
        failed.push("the second node must lie in the subtree of the first".into());
    }
    if !p.classify().single_headed {
        failed.push("the program must be single-headed".into());
    }
    match (f.label(n).atom(), f.label(n2).atom()) {
        (Some(a), Some(b)) => match r_equal(a, b) {
            None => failed.push(format!("{a} and {b} are not r-equal")),
            Some(rho) => {
                let s = f.node_sequence(n);
                let s2 = f.node_sequence(n2).rename(&rho);
                if s.texts() != s2.texts() {
                    failed.push(format!("sequences differ: {s} versus {s2} after renaming"));
                }
            }
        },
        _ => failed.push("both nodes must be repetitions".into()),
    }
    if sem == Semantics::Theoretical && failed.is_empty() && f.fired_before(n) != f.fired_before(n2) {
        failed.push("the two repetitions fired different propagation rules".into());
    }
    failed
}

/// Node pairs `(n, n2)` satisfying every precondition of [`compress`].
pub fn compress_candidates(p: &Program, delta: &Computation) -> Result<Vec<(NodeId, NodeId)>, ForestError> {
    let f = build_forest(p, delta)?;
    let mut out = Vec::new();
    for n in 0..f.len() {
        for n2 in f.subtree(n).into_iter().skip(1) {
            if f.label(n2) != &NodeLabel::Box && check(p, delta.semantics, &f, n, n2).is_empty() {
                out.push((n, n2));
            }
        }
    }
    Ok(out)
}

/// Rebuilds `delta` with the rewriting of `n` replaced by that of `n2`.
///
/// Apply events of `delta` are replayed as macro-steps, dropping those that
/// rewrite nodes below `n` but not below `n2`; `n2`'s events act on the
/// constraint that carries `n`. Among pending events the earliest enabled one
/// fires next. The result is checked to be final and strictly less
/// repetitive before it is returned.
pub fn compress(p: &Program, delta: &Computation, n: NodeId, n2: NodeId) -> Result<Computation, CompressError> {
    let f = build_forest(p, delta)?;
    let failed = check(p, delta.semantics, &f, n, n2);
    if !failed.is_empty() {
        return Err(CompressError::PreconditionViolation(failed));
    }
    let dropped: BTreeSet<NodeId> = {
        let keep: BTreeSet<NodeId> = f.subtree(n2).into_iter().collect();
        f.subtree(n).into_iter().filter(|m| !keep.contains(m)).collect()
    };
    let mut pending: Vec<usize> = (0..f.applies.len())
        .filter(|&i| !dropped.contains(&f.applies[i].node))
        .collect();

    let sem = delta.semantics;
    let mut out = Computation::new(delta.initial.clone(), sem);
    out.extend_steps(normalize_steps(&delta.initial));
    let mut ids: BTreeMap<NodeId, u64> = BTreeMap::new();
    let assign = |ids: &mut BTreeMap<NodeId, u64>, node: NodeId, id: u64| {
        ids.insert(node, id);
        if node == n {
            ids.insert(n2, id);
        }
    };
    for (k, &r) in f.roots.iter().enumerate() {
        assign(&mut ids, r, k as u64 + 1);
    }

    while !pending.is_empty() && !out.last().is_failed() {
        let cur: Configuration = out.last().clone();
        let fired = pending.iter().enumerate().find_map(|(pi, &ei)| {
            let ev = &f.applies[ei];
            let id = *ids.get(&ev.node)?;
            apply_successors(p, &cur, sem)
                .into_iter()
                .find(|(l, _)| l.rule.as_ref() == Some(&ev.rule) && l.matched_ids() == [id])
                .map(|s| (pi, ei, id, s))
        });
        let Some((pi, ei, id, (label, next))) = fired else {
            return Err(CompressError::Stuck(out.apply_count()));
        };
        pending.remove(pi);
        let ev = &f.applies[ei];
        let first_new = next.next_id;
        let body_atoms = next.goal.iter().filter(|g| matches!(g, Constraint::Chr(_))).count();
        out.push(label, next.clone());
        out.extend_steps(normalize_steps(&next));
        let children = &f.nodes[ev.node].children;
        for (j, &c) in children.iter().take(body_atoms).enumerate() {
            assign(&mut ids, c, first_new + j as u64);
        }
        if ev.propagation {
            if let Some(&c) = children.last() {
                assign(&mut ids, c, id);
            }
        }
    }
    if !out.is_final(p) {
        return Err(CompressError::NotFinal);
    }
    let before = f.repetitiveness();
    let after = build_forest(p, &out)?.repetitiveness();
    if after >= before {
        return Err(CompressError::NoImprovement { before, after });
    }
    Ok(out)
}
