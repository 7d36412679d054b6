//! Brute-force cross-checks: breadth-first exploration of macro-step state
//! spaces, and exhaustive enumeration of strictly increasing sequences.

pub mod corpus;

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::engine::{apply_successors, is_final, normalize, Configuration, Semantics};
use crate::store::BuiltinStore;
use crate::syntax::{Atom, Constraint, Equation, Program, Term};
use crate::wqo::leq;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExplorationReport {
    pub states_visited: usize,
    pub terminating_found: bool,
    pub cycle_found: bool,
    pub truncated: bool,
    pub max_depth_reached: usize,
    /// No rule introduces variables, so a revisited state witnesses an
    /// infinite computation.
    pub fixed_universe: bool,
}

/// Identifier-free state key: sorted atoms with the rules already fired on
/// them, plus the canonical built-in store.
fn state_key(c: &Configuration) -> String {
    let mut atoms: Vec<String> = c
        .store
        .iter()
        .map(|(id, a)| {
            let fired: Vec<String> = c
                .history
                .iter()
                .flatten()
                .filter(|t| t.ids.contains(id))
                .map(|t| {
                    let partners: Vec<String> = t
                        .ids
                        .iter()
                        .map(|i| c.store.get(i).map(ToString::to_string).unwrap_or_default())
                        .collect();
                    format!("{}:{}", t.rule, partners.join("+"))
                })
                .collect();
            format!("{a}[{}]", fired.join(";"))
        })
        .collect();
    atoms.sort();
    format!("{}|{}", c.builtin, atoms.join(","))
}

/// Exploration limits. Reaching any of them marks the report truncated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: usize,
    /// States with more CHR constraints than this are not expanded.
    pub max_store: usize,
}

/// Breadth-first exploration of normalized configurations reachable from `goal`.
pub fn explore(p: &Program, goal: &[Constraint], sem: Semantics, max_states: usize, max_depth: usize) -> ExplorationReport {
    explore_with(
        p,
        goal,
        sem,
        Limits {
            max_states,
            max_depth,
            max_store: usize::MAX,
        },
    )
}

pub fn explore_with(p: &Program, goal: &[Constraint], sem: Semantics, limits: Limits) -> ExplorationReport {
    let Limits {
        max_states,
        max_depth,
        max_store,
    } = limits;
    let mut report = ExplorationReport {
        fixed_universe: p.classify().range_restricted,
        ..ExplorationReport::default()
    };
    let root = normalize(&Configuration::initial(goal, sem));
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut queue: VecDeque<(Configuration, usize, usize)> = VecDeque::new();
    index.insert(state_key(&root), 0);
    edges.push(Vec::new());
    queue.push_back((root, 0, 0));
    while let Some((c, me, depth)) = queue.pop_front() {
        report.max_depth_reached = report.max_depth_reached.max(depth);
        if is_final(p, &c, sem) {
            report.terminating_found = true;
            continue;
        }
        if depth >= max_depth || c.store.len() > max_store {
            report.truncated = true;
            continue;
        }
        for (_, next) in apply_successors(p, &c, sem) {
            let next = normalize(&next);
            let key = state_key(&next);
            let target = match index.get(&key) {
                Some(&t) => t,
                None => {
                    if index.len() >= max_states {
                        report.truncated = true;
                        continue;
                    }
                    let t = index.len();
                    index.insert(key, t);
                    edges.push(Vec::new());
                    queue.push_back((next, t, depth + 1));
                    t
                }
            };
            edges[me].push(target);
        }
    }
    report.states_visited = index.len();
    report.cycle_found = has_cycle(&edges);
    report
}

fn has_cycle(edges: &[Vec<usize>]) -> bool {
    // 0 unseen, 1 on stack, 2 done
    let mut color = vec![0u8; edges.len()];
    for start in 0..edges.len() {
        if color[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        color[start] = 1;
        while let Some((v, i)) = stack.pop() {
            if i < edges[v].len() {
                stack.push((v, i + 1));
                let w = edges[v][i];
                match color[w] {
                    0 => {
                        color[w] = 1;
                        stack.push((w, 0));
                    }
                    1 => return true,
                    _ => {}
                }
            } else {
                color[v] = 2;
            }
        }
    }
    false
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CompatibilityReport {
    pub configurations: usize,
    /// Pairs `s1 ≤ t1` together with a macro-step `s1 → s2`.
    pub checked: usize,
    pub counterexamples: Vec<String>,
}

fn macro_successors(p: &Program, c: &Configuration) -> Vec<Configuration> {
    apply_successors(p, c, Semantics::Abstract)
        .into_iter()
        .map(|(_, next)| normalize(&next))
        .collect()
}

fn multisets(universe: &[Atom], max: usize) -> Vec<Vec<Atom>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![(Vec::new(), 0usize)];
    while let Some((m, from)) = frontier.pop() {
        if m.len() == max {
            continue;
        }
        for (i, a) in universe.iter().enumerate().skip(from) {
            let mut next: Vec<Atom> = m.clone();
            next.push(a.clone());
            out.push(next.clone());
            frontier.push((next, i));
        }
    }
    out
}

fn with_store(atoms: &[Atom], builtin: &BuiltinStore) -> Configuration {
    let mut c = Configuration::initial(&[], Semantics::Abstract);
    for a in atoms {
        c.store.insert(c.next_id, a.clone());
        c.next_id += 1;
    }
    c.builtin = builtin.clone();
    c
}

/// Checks strong compatibility of `≤` with macro-steps on every normalized
/// configuration whose store has at most `max_atoms` atoms over the
/// program's predicates, its constants and the variable `X`.
pub fn check_strong_compatibility(p: &Program, max_atoms: usize) -> CompatibilityReport {
    let x = Term::var("X");
    let mut terms: Vec<Term> = p.constants.iter().map(|c| Term::Const(c.clone())).collect();
    terms.push(x.clone());
    let mut universe = Vec::new();
    for (name, &arity) in &p.predicates {
        let mut tuples: Vec<Vec<Term>> = vec![Vec::new()];
        for _ in 0..arity {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    terms.iter().map(move |a| {
                        let mut t = t.clone();
                        t.push(a.clone());
                        t
                    })
                })
                .collect();
        }
        universe.extend(tuples.into_iter().map(|args| Atom::new(name, args)));
    }
    let mut builtins = vec![BuiltinStore::new()];
    builtins.extend(
        p.constants
            .iter()
            .map(|c| BuiltinStore::from_equations(&[Equation::new(x.clone(), Term::Const(c.clone()))])),
    );
    let stores = multisets(&universe, max_atoms);
    let mut report = CompatibilityReport::default();
    for b in &builtins {
        for s_atoms in &stores {
            let s1 = with_store(s_atoms, b);
            report.configurations += 1;
            let s_next = macro_successors(p, &s1);
            if s_next.is_empty() {
                continue;
            }
            for extra in multisets(&universe, max_atoms - s_atoms.len()) {
                let mut t_atoms = s_atoms.clone();
                t_atoms.extend(extra);
                let t1 = with_store(&t_atoms, b);
                debug_assert!(leq(&s1, &t1));
                let t_next = macro_successors(p, &t1);
                for s2 in &s_next {
                    report.checked += 1;
                    if !t_next.iter().any(|t2| leq(s2, t2)) {
                        report.counterexamples.push(format!("{s1} ≤ {t1}, {s1} → {s2}"));
                    }
                }
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("enumeration is limited to at most 2 constants and 1 variable (asked for u={u}, w={w})")]
pub struct ScaleError {
    pub u: usize,
    pub w: usize,
}

/// Every projected store over `w` variables and `u` constants, up to
/// logical equivalence. `false` is included once two constants can clash.
fn candidate_stores(u: usize, w: usize) -> Vec<BuiltinStore> {
    let vars: Vec<Term> = (0..w).map(|i| Term::var(&format!("X{i}"))).collect();
    let consts: Vec<Term> = (0..u).map(|i| Term::constant(&format!("k{i}"))).collect();
    // each variable picks a block; each block is free or bound to a distinct constant
    let mut out: Vec<BuiltinStore> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut assign = vec![0usize; w];
    loop {
        let blocks = assign.iter().copied().max().map_or(0, |m| m + 1);
        // restricted growth strings enumerate each partition once
        let valid = assign.iter().enumerate().all(|(i, &b)| b <= assign[..i].iter().copied().max().map_or(0, |m| m + 1));
        if valid {
            let mut binding = vec![None::<usize>; blocks];
            bind_blocks(&mut binding, 0, u, &mut |binding: &[Option<usize>]| {
                let mut eqs = Vec::new();
                for (i, &b) in assign.iter().enumerate() {
                    if let Some(first) = assign.iter().position(|&x| x == b) {
                        if first != i {
                            eqs.push(Equation::new(vars[i].clone(), vars[first].clone()));
                        }
                    }
                    if let Some(k) = binding[b] {
                        eqs.push(Equation::new(vars[i].clone(), consts[k].clone()));
                    }
                }
                let s = BuiltinStore::from_equations(&eqs);
                if seen.insert(s.to_string()) {
                    out.push(s);
                }
            });
        }
        // next assignment in base-w counting
        let mut i = 0;
        while i < w {
            assign[i] += 1;
            if assign[i] < w {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
        if i == w {
            break;
        }
    }
    if u >= 2 {
        out.push(BuiltinStore::inconsistent());
    }
    out
}

fn bind_blocks(binding: &mut Vec<Option<usize>>, b: usize, u: usize, emit: &mut dyn FnMut(&[Option<usize>])) {
    if b == binding.len() {
        emit(binding);
        return;
    }
    binding[b] = None;
    bind_blocks(binding, b + 1, u, emit);
    for k in 0..u {
        if !binding[..b].contains(&Some(k)) {
            binding[b] = Some(k);
            bind_blocks(binding, b + 1, u, emit);
        }
    }
    binding[b] = None;
}

/// Number of sequences (ε included) that are strictly increasing with
/// respect to `w` variables over `u` constants, allowing a final stuttering
/// pair.
pub fn enumerate_strictly_increasing(u: usize, w: usize) -> Result<usize, ScaleError> {
    if u > 2 || w > 1 {
        return Err(ScaleError { u, w });
    }
    let cands = candidate_stores(u, w);
    let implies = |a: usize, b: usize| cands[a].implies(&cands[b]);
    let strictly = |a: usize, b: usize| implies(a, b) && !implies(b, a);
    // pairs (c, d) with d → c
    let pairs: Vec<(usize, usize)> = (0..cands.len())
        .flat_map(|c| (0..cands.len()).map(move |d| (c, d)))
        .filter(|&(c, d)| implies(d, c))
        .collect();
    fn extend(
        last: (usize, usize),
        pairs: &[(usize, usize)],
        strictly: &dyn Fn(usize, usize) -> bool,
        implies: &dyn Fn(usize, usize) -> bool,
    ) -> usize {
        let (c, d) = last;
        if implies(c, d) {
            // a stuttering pair can only be last
            return 0;
        }
        pairs
            .iter()
            .filter(|&&(c2, _)| strictly(c2, d))
            .map(|&p| 1 + extend(p, pairs, strictly, implies))
            .sum()
    }
    let count = 1 + pairs
        .iter()
        .map(|&p| 1 + extend(p, &pairs, &strictly, &implies))
        .sum::<usize>();
    Ok(count)
}
