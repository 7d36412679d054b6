//! Finite reachability tree over normalized macro-steps under ω_o.

use serde::Serialize;

use super::DecideError;
use crate::engine::{apply_successors, normalize_steps, Computation, Configuration, Semantics};
use crate::syntax::{Constraint, Program};
use crate::wqo::leq;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DivergenceResult {
    Divergent,
    AllFinite,
}

/// A computation prefix and two of its configurations with `ancestor ≤ descendant`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivergenceWitness {
    pub computation: Computation,
    /// Indices into the computation's configurations, initial one at 0.
    pub ancestor: usize,
    pub descendant: usize,
}

impl DivergenceWitness {
    /// Replays the prefix and re-checks the pair.
    pub fn verify(&self, p: &Program) -> bool {
        self.ancestor < self.descendant
            && self.computation.replay(p).is_ok()
            && match (
                self.computation.config_at(self.ancestor),
                self.computation.config_at(self.descendant),
            ) {
                (Some(a), Some(d)) => leq(a, d),
                _ => false,
            }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivergenceVerdict {
    pub result: DivergenceResult,
    pub witness: Option<DivergenceWitness>,
    pub nodes: usize,
}

struct Tree<'a> {
    p: &'a Program,
    comp: Computation,
    /// Configuration index of every tree node on the current branch.
    branch: Vec<usize>,
    nodes: usize,
    work: usize,
    budget: usize,
    aborted: bool,
}

impl Tree<'_> {
    fn config_index(&self) -> usize {
        self.comp.steps.len()
    }

    fn visit(&mut self) -> Option<(usize, usize)> {
        self.nodes += 1;
        self.work += 1 + self.comp.last().store.len();
        if self.work > self.budget {
            self.aborted = true;
            return None;
        }
        let here = self.config_index();
        let cur: Configuration = self.comp.last().clone();
        for &a in &self.branch {
            if leq(self.comp.config_at(a).expect("branch index"), &cur) {
                return Some((a, here));
            }
        }
        self.branch.push(here);
        for (label, next) in apply_successors(self.p, &cur, Semantics::Abstract) {
            let mark = self.comp.steps.len();
            self.comp.push(label, next.clone());
            self.comp.extend_steps(normalize_steps(&next));
            if let Some(pair) = self.visit() {
                return Some(pair);
            }
            if self.aborted {
                return None;
            }
            self.comp.steps.truncate(mark);
        }
        self.branch.pop();
        None
    }
}

/// Whether some computation from `goal` is infinite.
pub fn decide_divergence(p: &Program, goal: &[Constraint]) -> Result<DivergenceVerdict, DecideError> {
    Ok(decide_divergence_within(p, goal, None)?.expect("no budget"))
}

/// As [`decide_divergence`], giving up with `None` after `max_work` units of
/// work: one per tree node plus one per CHR constraint in its store.
pub fn decide_divergence_within(
    p: &Program,
    goal: &[Constraint],
    max_work: Option<usize>,
) -> Result<Option<DivergenceVerdict>, DecideError> {
    if let Some(r) = p.rules.iter().find(|r| !r.is_range_restricted()) {
        return Err(DecideError::NotRangeRestricted(r.name.to_string()));
    }
    let initial = Configuration::initial(goal, Semantics::Abstract);
    let mut comp = Computation::new(initial.clone(), Semantics::Abstract);
    comp.extend_steps(normalize_steps(&initial));
    let mut tree = Tree {
        p,
        comp,
        branch: Vec::new(),
        nodes: 0,
        work: 0,
        budget: max_work.unwrap_or(usize::MAX),
        aborted: false,
    };
    let found = tree.visit();
    if tree.aborted {
        return Ok(None);
    }
    Ok(Some(match found {
        Some((ancestor, descendant)) => {
            let mut computation = tree.comp;
            computation.steps.truncate(descendant);
            DivergenceVerdict {
                result: DivergenceResult::Divergent,
                witness: Some(DivergenceWitness {
                    computation,
                    ancestor,
                    descendant,
                }),
                nodes: tree.nodes,
            }
        }
        None => DivergenceVerdict {
            result: DivergenceResult::AllFinite,
            witness: None,
            nodes: tree.nodes,
        },
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_goal, parse_program};

    fn decide(p: &str, g: &str) -> (Program, DivergenceVerdict) {
        let p = parse_program(p).unwrap();
        let v = decide_divergence(&p, &parse_goal(g).unwrap()).unwrap();
        (p, v)
    }

    #[test]
    fn self_loop_diverges() {
        let (p, v) = decide("p(X) <=> p(X).", "p(a)");
        assert_eq!(v.result, DivergenceResult::Divergent);
        assert!(v.witness.unwrap().verify(&p));
    }

    #[test]
    fn removal_is_finite() {
        let (_, v) = decide("p(X) <=> true.", "p(a)");
        assert_eq!(v.result, DivergenceResult::AllFinite);
        assert!(v.witness.is_none());
    }

    #[test]
    fn propagation_refires_without_history() {
        let (p, v) = decide("c ==> c.", "c");
        assert_eq!(v.result, DivergenceResult::Divergent);
        let w = v.witness.unwrap();
        assert!(w.verify(&p));
        let (a, d) = (w.computation.config_at(w.ancestor).unwrap(), w.computation.config_at(w.descendant).unwrap());
        assert_eq!((a.store.len(), d.store.len()), (1, 2));
    }

    #[test]
    fn binding_then_removal_is_finite() {
        let (_, v) = decide("p(X) <=> X = a, q(X). q(X) <=> true.", "p(Y)");
        assert_eq!(v.result, DivergenceResult::AllFinite);
    }

    #[test]
    fn failing_branches_are_finite() {
        let (_, v) = decide("p(X) <=> X = a, X = b, p(X).", "p(Y)");
        assert_eq!(v.result, DivergenceResult::AllFinite);
    }

    #[test]
    fn non_range_restricted_is_rejected() {
        let p = parse_program("p <=> q(X).").unwrap();
        assert!(matches!(
            decide_divergence(&p, &parse_goal("p").unwrap()),
            Err(DecideError::NotRangeRestricted(_))
        ));
    }

    #[test]
    fn tampered_witness_fails_verification() {
        let (p, v) = decide("p(X) <=> p(X).", "p(a)");
        let mut w = v.witness.unwrap();
        w.ancestor = w.descendant;
        assert!(!w.verify(&p));
    }
}
