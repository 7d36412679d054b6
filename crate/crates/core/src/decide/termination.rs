//! Existence of a terminating computation for single-headed programs.
//!
//! Iterative deepening on `m`: a derivation is abandoned as soon as some
//! root-to-leaf path of its forest holds more than `m` repetitions of one
//! prune class. The class is the r-equality class of the atom, refined under
//! ω_t by the propagation rules already fired on the constraint. Forest
//! paths only grow as a derivation extends, so pruning a prefix is safe.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_bigint::BigUint;
use rayon::prelude::*;

use super::bound::{effective_cap, saturating_u64, BoundParameters};
use super::DecideError;
use crate::engine::{apply_successors, is_final, normalize_steps, Computation, Configuration, Semantics, Step};
use crate::forest::{build_forest, compress, compress_candidates, r_class};
use crate::syntax::{Atom, Constraint, Name, Program};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum TerminationResult {
    Terminating,
    NoTerminating,
    ExhaustedAtCap,
}

#[derive(Clone, Debug)]
pub struct TerminationOptions {
    /// Largest deepening level; defaults to `min(effective cap, 64)`.
    pub cap: Option<u64>,
    /// Use the full effective cap when no explicit cap is given.
    pub complete: bool,
    pub parallel: bool,
    /// Shrink the witness with repeated compression.
    pub minimize: bool,
    /// Give up (undecided) after this much search work: one unit per node
    /// plus one per CHR constraint in its store.
    pub max_work: Option<u64>,
}

impl Default for TerminationOptions {
    fn default() -> Self {
        TerminationOptions {
            cap: None,
            complete: false,
            parallel: false,
            minimize: true,
            max_work: None,
        }
    }
}

pub const DEFAULT_CAP: u64 = 64;
const MINIMIZE_ROUNDS: usize = 16;

#[derive(Clone, Debug)]
pub struct TerminationVerdict {
    pub result: TerminationResult,
    pub semantics: Semantics,
    pub witness: Option<Computation>,
    /// Deepening level at which the verdict was reached.
    pub cap_used: u64,
    /// True for Terminating and NoTerminating.
    pub complete: bool,
    pub complete_bound: BigUint,
    pub params: BoundParameters,
    pub nodes: u64,
    /// The node budget ran out before the verdict was reached.
    pub budget_exhausted: bool,
}

type Counts = BTreeMap<String, u32>;
type Annotations = BTreeMap<u64, Arc<Counts>>;

fn prune_key(atom: &Atom, fired: &BTreeSet<Name>, sem: Semantics) -> String {
    match sem {
        Semantics::Abstract => r_class(atom),
        Semantics::Theoretical => {
            let f: Vec<&str> = fired.iter().map(|n| &**n).collect();
            format!("{}{{{}}}", r_class(atom), f.join(","))
        }
    }
}

fn bump(parent: &Counts, key: String, m: u32) -> Option<Counts> {
    let mut c = parent.clone();
    let n = c.entry(key).or_insert(0);
    *n += 1;
    (*n <= m).then_some(c)
}

struct Child {
    steps: Vec<Step>,
    config: Configuration,
    counts: Annotations,
}

struct Searcher<'a> {
    p: &'a Program,
    sem: Semantics,
    m: u32,
    pruned: bool,
    nodes: u64,
    work: u64,
    budget: u64,
    aborted: bool,
    /// Fully explored, failed states with their annotations.
    memo: HashMap<String, Vec<Vec<Arc<Counts>>>>,
}

impl<'a> Searcher<'a> {
    fn new(p: &'a Program, sem: Semantics, m: u32, budget: u64) -> Self {
        Searcher {
            p,
            sem,
            m,
            pruned: false,
            nodes: 0,
            work: 0,
            budget,
            aborted: false,
            memo: HashMap::new(),
        }
    }

    fn children(&mut self, cur: &Configuration, counts: &Annotations) -> Vec<Child> {
        let mut out = Vec::new();
        for (label, next) in apply_successors(self.p, cur, self.sem) {
            let k = label.matched_ids()[0];
            let rule = self.p.rule(label.rule.as_deref().unwrap_or_default()).expect("rule of a label");
            let parent = counts.get(&k).cloned().unwrap_or_default();
            let norm = normalize_steps(&next);
            let last = norm.last().map(|s| &s.config).unwrap_or(&next);
            let mut nc = counts.clone();
            nc.remove(&k);
            let mut ok = true;
            let body = next.goal.iter().filter_map(|g| match g {
                Constraint::Chr(a) => Some(a),
                Constraint::Builtin(_) => None,
            });
            for (j, a) in body.enumerate() {
                match bump(&parent, prune_key(a, &BTreeSet::new(), self.sem), self.m) {
                    Some(c) => {
                        let id = next.next_id + j as u64;
                        if last.store.contains_key(&id) {
                            nc.insert(id, Arc::new(c));
                        }
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && rule.is_propagation() {
                let atom = &cur.store[&k];
                match bump(&parent, prune_key(atom, &last.fired_on(k), self.sem), self.m) {
                    Some(c) => {
                        nc.insert(k, Arc::new(c));
                    }
                    None => ok = false,
                }
            }
            if !ok {
                self.pruned = true;
                continue;
            }
            let config = last.clone();
            let mut steps = vec![Step { label, config: next }];
            steps.extend(norm);
            out.push(Child {
                steps,
                config,
                counts: nc,
            });
        }
        out
    }

    fn state_key(&self, cur: &Configuration, counts: &Annotations) -> (String, Vec<Arc<Counts>>) {
        let mut entries: Vec<(String, String, Arc<Counts>)> = cur
            .store
            .iter()
            .map(|(id, a)| {
                let fired: Vec<String> = cur.fired_on(*id).iter().map(ToString::to_string).collect();
                (a.to_string(), fired.join(","), counts.get(id).cloned().unwrap_or_default())
            })
            .collect();
        entries.sort();
        let mut key = cur.builtin.to_string();
        for (a, f, _) in &entries {
            key.push('|');
            key.push_str(a);
            key.push('{');
            key.push_str(f);
            key.push('}');
        }
        (key, entries.into_iter().map(|(_, _, c)| c).collect())
    }

    fn dominated(&self, key: &str, ann: &[Arc<Counts>]) -> bool {
        self.memo.get(key).is_some_and(|seen| {
            seen.iter().any(|s| {
                s.iter()
                    .zip(ann)
                    .all(|(small, big)| small.iter().all(|(k, v)| big.get(k).is_some_and(|w| v <= w)))
            })
        })
    }

    fn dfs(&mut self, cur: &Configuration, counts: &Annotations, comp: &mut Computation) -> bool {
        self.nodes += 1;
        self.work += 1 + cur.store.len() as u64;
        if is_final(self.p, cur, self.sem) {
            return true;
        }
        if self.work > self.budget {
            self.aborted = true;
        }
        if self.aborted {
            return false;
        }
        let (key, ann) = self.state_key(cur, counts);
        if self.dominated(&key, &ann) {
            return false;
        }
        for child in self.children(cur, counts) {
            let mark = comp.steps.len();
            comp.extend_steps(child.steps);
            if self.dfs(&child.config, &child.counts, comp) {
                return true;
            }
            comp.steps.truncate(mark);
        }
        if self.aborted {
            return false;
        }
        self.memo.entry(key).or_default().push(ann);
        false
    }
}

struct Level {
    found: Option<Computation>,
    pruned: bool,
    aborted: bool,
    nodes: u64,
    work: u64,
}

fn search_level(p: &Program, sem: Semantics, root: &Computation, m: u32, parallel: bool, budget: u64) -> Level {
    let cur = root.last().clone();
    let counts: Annotations = cur
        .store
        .iter()
        .map(|(id, a)| {
            let mut c = Counts::new();
            c.insert(prune_key(a, &BTreeSet::new(), sem), 1);
            (*id, Arc::new(c))
        })
        .collect();
    if !parallel {
        let mut s = Searcher::new(p, sem, m, budget);
        let mut comp = root.clone();
        let found = s.dfs(&cur, &counts, &mut comp);
        return Level {
            found: found.then_some(comp),
            pruned: s.pruned,
            aborted: s.aborted,
            nodes: s.nodes,
            work: s.work,
        };
    }
    if is_final(p, &cur, sem) {
        return Level {
            found: Some(root.clone()),
            pruned: false,
            aborted: false,
            nodes: 1,
            work: 1,
        };
    }
    let mut top = Searcher::new(p, sem, m, budget);
    let children = top.children(&cur, &counts);
    let branches: Vec<Level> = children
        .into_par_iter()
        .map(|child| {
            let mut s = Searcher::new(p, sem, m, budget);
            let mut comp = root.clone();
            comp.extend_steps(child.steps);
            let found = s.dfs(&child.config, &child.counts, &mut comp);
            Level {
                found: found.then_some(comp),
                pruned: s.pruned,
                aborted: s.aborted,
                nodes: s.nodes,
                work: s.work,
            }
        })
        .collect();
    let pruned = top.pruned || branches.iter().any(|b| b.pruned);
    let nodes = 1 + branches.iter().map(|b| b.nodes).sum::<u64>();
    let work = 1 + branches.iter().map(|b| b.work).sum::<u64>();
    // a branch that ran out of budget may hide an earlier witness
    let mut found = None;
    let mut aborted = false;
    for b in branches {
        if b.found.is_some() && !aborted {
            found = b.found;
            break;
        }
        aborted |= b.aborted;
    }
    Level {
        found,
        pruned,
        aborted,
        nodes,
        work,
    }
}

/// Repeatedly compresses the witness while a compression applies.
pub fn minimize_witness(p: &Program, mut delta: Computation) -> Computation {
    for _ in 0..MINIMIZE_ROUNDS {
        let Ok(candidates) = compress_candidates(p, &delta) else {
            break;
        };
        let next = candidates
            .into_iter()
            .find_map(|(n, n2)| compress(p, &delta, n, n2).ok())
            .filter(|c| c.replay(p).is_ok() && c.is_final(p));
        match next {
            Some(c) => delta = c,
            None => break,
        }
    }
    delta
}

/// Whether some computation from `goal` reaches a final configuration.
pub fn decide_termination_existence(
    p: &Program,
    goal: &[Constraint],
    sem: Semantics,
    opts: &TerminationOptions,
) -> Result<TerminationVerdict, DecideError> {
    if let Some(r) = p.rules.iter().find(|r| r.head_len() != 1) {
        return Err(DecideError::NotSingleHeaded(r.name.to_string()));
    }
    let params = BoundParameters::of(p, goal);
    let complete_bound = effective_cap(params, sem);
    let full = saturating_u64(&complete_bound);
    let cap = match opts.cap {
        Some(c) => c.max(1),
        None if opts.complete => full,
        None => full.min(DEFAULT_CAP),
    };
    let reaches_bound = BigUint::from(cap) >= complete_bound;

    let initial = Configuration::initial(goal, sem);
    let mut root = Computation::new(initial.clone(), sem);
    root.extend_steps(normalize_steps(&initial));

    let mut nodes = 0;
    let mut work = 0;
    let mut m = 1u64;
    loop {
        let budget = opts.max_work.map_or(u64::MAX, |b| b.saturating_sub(work));
        let level = search_level(p, sem, &root, m.min(u32::MAX as u64) as u32, opts.parallel, budget);
        nodes += level.nodes;
        work += level.work;
        let verdict = |result, witness, complete| TerminationVerdict {
            result,
            semantics: sem,
            witness,
            cap_used: m,
            complete,
            complete_bound: complete_bound.clone(),
            params,
            nodes,
            budget_exhausted: level.aborted,
        };
        if let Some(w) = level.found {
            debug_assert!(build_forest(p, &w).is_ok());
            let w = if opts.minimize { minimize_witness(p, w) } else { w };
            return Ok(verdict(TerminationResult::Terminating, Some(w), true));
        }
        if level.aborted {
            return Ok(verdict(TerminationResult::ExhaustedAtCap, None, false));
        }
        // nothing was cut off, so the whole derivation tree was explored
        if !level.pruned {
            return Ok(verdict(TerminationResult::NoTerminating, None, true));
        }
        if m >= cap {
            return Ok(if reaches_bound {
                verdict(TerminationResult::NoTerminating, None, true)
            } else {
                verdict(TerminationResult::ExhaustedAtCap, None, false)
            });
        }
        m += 1;
    }
}
