//! The transition systems ω_t (with propagation history) and ω_o (without).
//!
//! Configurations are values; every transition produces a new one. Successor
//! enumeration is deterministic: Solve steps in goal order, then Introduce
//! steps in goal order, then Apply steps with rules in program order, store
//! members in id order and matchings lexicographically.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::BuiltinStore;
use crate::syntax::{goal_to_string, parse_term, Atom, Constraint, Equation, Name, Program, Rule, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Semantics {
    /// ω_t: Apply records a token and never fires the same instance twice.
    #[serde(rename = "t")]
    Theoretical,
    /// ω_o: no propagation history.
    #[serde(rename = "o")]
    Abstract,
}

impl Semantics {
    pub fn as_str(self) -> &'static str {
        match self {
            Semantics::Theoretical => "t",
            Semantics::Abstract => "o",
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Theoretical => "ω_t",
            Semantics::Abstract => "ω_o",
        })
    }
}

/// `id(H1) ++ id(H2) ++ [r]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PropagationToken {
    pub ids: Vec<u64>,
    pub rule: Name,
}

/// `⟨G, S, B, T⟩_n`. `history` is `None` under ω_o.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub goal: Vec<Constraint>,
    pub store: BTreeMap<u64, Atom>,
    pub builtin: BuiltinStore,
    pub history: Option<BTreeSet<PropagationToken>>,
    pub next_id: u64,
    /// Serial used to name fresh body variables `_V<serial>_<k>`.
    pub fresh: u64,
}

impl Configuration {
    /// `⟨G, ∅, true, ∅⟩_1`.
    pub fn initial(goal: &[Constraint], sem: Semantics) -> Configuration {
        Configuration {
            goal: goal.to_vec(),
            store: BTreeMap::new(),
            builtin: BuiltinStore::new(),
            history: match sem {
                Semantics::Theoretical => Some(BTreeSet::new()),
                Semantics::Abstract => None,
            },
            next_id: 1,
            fresh: 1,
        }
    }

    pub fn is_failed(&self) -> bool {
        !self.builtin.is_consistent()
    }

    /// Conjunction of the built-in store and the built-ins still in the goal.
    pub fn all_builtins(&self) -> BuiltinStore {
        self.builtin.add_equations(self.goal.iter().filter_map(|c| match c {
            Constraint::Builtin(e) => Some(e),
            Constraint::Chr(_) => None,
        }))
    }

    pub fn vars(&self) -> BTreeSet<Name> {
        let mut out = self.builtin.vars();
        for c in &self.goal {
            out.extend(c.vars().into_iter().cloned());
        }
        for a in self.store.values() {
            out.extend(a.vars().cloned());
        }
        out
    }

    /// Propagation rules already fired on constraint `id` (single-headed tokens).
    pub fn fired_on(&self, id: u64) -> BTreeSet<Name> {
        self.history
            .iter()
            .flatten()
            .filter(|t| t.ids == [id])
            .map(|t| t.rule.clone())
            .collect()
    }

    pub fn store_strings(&self) -> Vec<String> {
        self.store.iter().map(|(id, a)| format!("{a}#{id}")).collect()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<{} | {{{}}} | {}",
            goal_to_string(&self.goal),
            self.store_strings().join(","),
            self.builtin
        )?;
        if let Some(h) = &self.history {
            let toks: Vec<String> = h
                .iter()
                .map(|t| {
                    let ids: Vec<String> = t.ids.iter().map(u64::to_string).collect();
                    format!("[{},{}]", ids.join(","), t.rule)
                })
                .collect();
            write!(f, " | {{{}}}", toks.join(","))?;
        }
        write!(f, ">_{}", self.next_id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepKind {
    Solve,
    Introduce,
    Apply,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TransitionLabel {
    pub kind: StepKind,
    /// Goal position consumed by Solve/Introduce.
    pub goal_index: Option<usize>,
    pub rule: Option<Name>,
    pub kept: Vec<u64>,
    pub removed: Vec<u64>,
    /// Matching substitution on head variables.
    pub theta: Vec<(Name, Term)>,
    /// Fresh names given to body-local variables.
    pub introduced: Vec<(Name, Name)>,
}

impl TransitionLabel {
    fn goal_step(kind: StepKind, index: usize) -> Self {
        TransitionLabel {
            kind,
            goal_index: Some(index),
            rule: None,
            kept: Vec::new(),
            removed: Vec::new(),
            theta: Vec::new(),
            introduced: Vec::new(),
        }
    }

    pub fn is_apply(&self) -> bool {
        self.kind == StepKind::Apply
    }

    /// Ids of all matched head constraints, kept first.
    pub fn matched_ids(&self) -> Vec<u64> {
        self.kept.iter().chain(self.removed.iter()).copied().collect()
    }
}

impl fmt::Display for TransitionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            StepKind::Solve => write!(f, "Solve[{}]", self.goal_index.unwrap_or(0)),
            StepKind::Introduce => write!(f, "Introduce[{}]", self.goal_index.unwrap_or(0)),
            StepKind::Apply => {
                let ids: Vec<String> = self.matched_ids().iter().map(|i| format!("#{i}")).collect();
                write!(
                    f,
                    "Apply {} on {}",
                    self.rule.as_deref().unwrap_or("?"),
                    ids.join(",")
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub label: TransitionLabel,
    pub config: Configuration,
}

/// Syntactic matching modulo the built-in store. A head constant must equal
/// the stored argument under the store, a repeated head variable must meet
/// arguments that are equal under the store, and the substitution maps each
/// head variable to the stored argument it first meets.
fn match_atom(
    head: &Atom,
    stored: &Atom,
    theta: &BTreeMap<Name, Term>,
    builtin: &BuiltinStore,
) -> Option<BTreeMap<Name, Term>> {
    if head.predicate != stored.predicate || head.arity() != stored.arity() {
        return None;
    }
    let mut theta = theta.clone();
    for (h, s) in head.args.iter().zip(&stored.args) {
        match h {
            Term::Const(_) => {
                if !builtin.entails_eq(h, s) {
                    return None;
                }
            }
            Term::Var(v) => match theta.get(v) {
                Some(bound) => {
                    if !builtin.entails_eq(bound, s) {
                        return None;
                    }
                }
                None => {
                    theta.insert(v.clone(), s.clone());
                }
            },
        }
    }
    Some(theta)
}

struct Matching {
    ids: Vec<u64>,
    theta: BTreeMap<Name, Term>,
}

fn head_matchings(rule: &Rule, c: &Configuration) -> Vec<Matching> {
    let heads: Vec<&Atom> = rule.heads().collect();
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(heads.len());
    fn go(
        heads: &[&Atom],
        c: &Configuration,
        chosen: &mut Vec<u64>,
        theta: &BTreeMap<Name, Term>,
        out: &mut Vec<Matching>,
    ) {
        let k = chosen.len();
        if k == heads.len() {
            out.push(Matching {
                ids: chosen.clone(),
                theta: theta.clone(),
            });
            return;
        }
        for (&id, atom) in &c.store {
            if chosen.contains(&id) {
                continue;
            }
            if let Some(t) = match_atom(heads[k], atom, theta, &c.builtin) {
                chosen.push(id);
                go(heads, c, chosen, &t, out);
                chosen.pop();
            }
        }
    }
    go(&heads, c, &mut chosen, &BTreeMap::new(), &mut out);
    out
}

fn guard_holds(rule: &Rule, theta: &BTreeMap<Name, Term>, builtin: &BuiltinStore) -> bool {
    if rule.guard.is_empty() {
        return true;
    }
    let head = rule.head_vars();
    let mut subst = theta.clone();
    let mut existentials = BTreeSet::new();
    for v in rule.guard_vars() {
        if !head.contains(&v) {
            // `?` never occurs in parsed names
            let ex = Name::from(format!("?{v}").as_str());
            existentials.insert(ex.clone());
            subst.insert(v, Term::Var(ex));
        }
    }
    let eqs: Vec<Equation> = rule.guard.iter().map(|e| e.substitute(&subst)).collect();
    builtin.entails(&existentials, &eqs)
}

fn apply_rule(
    rule: &Rule,
    m: Matching,
    c: &Configuration,
    sem: Semantics,
) -> Option<(TransitionLabel, Configuration)> {
    let (kept, removed) = m.ids.split_at(rule.kept.len());
    let mut history = c.history.clone();
    if sem == Semantics::Theoretical {
        let token = PropagationToken {
            ids: m.ids.clone(),
            rule: rule.name.clone(),
        };
        let h = history.get_or_insert_with(BTreeSet::new);
        if h.contains(&token) {
            return None;
        }
        h.insert(token);
    }
    let head = rule.head_vars();
    let mut subst = m.theta.clone();
    let mut introduced = Vec::new();
    let mut seen = BTreeSet::new();
    for item in &rule.body {
        for v in item.vars() {
            if !head.contains(v) && seen.insert(v.clone()) {
                let fresh = Name::from(format!("_V{}_{}", c.fresh, seen.len()).as_str());
                introduced.push((v.clone(), fresh.clone()));
                subst.insert(v.clone(), Term::Var(fresh));
            }
        }
    }
    let mut goal = c.goal.clone();
    goal.extend(rule.body.iter().map(|b| b.substitute(&subst)));
    let mut store = c.store.clone();
    for id in removed {
        store.remove(id);
    }
    let next = Configuration {
        goal,
        store,
        builtin: c.builtin.clone(),
        history,
        next_id: c.next_id,
        fresh: if introduced.is_empty() { c.fresh } else { c.fresh + 1 },
    };
    let label = TransitionLabel {
        kind: StepKind::Apply,
        goal_index: None,
        rule: Some(rule.name.clone()),
        kept: kept.to_vec(),
        removed: removed.to_vec(),
        theta: m.theta.into_iter().collect(),
        introduced,
    };
    Some((label, next))
}

fn solve(c: &Configuration, index: usize) -> Configuration {
    let mut next = c.clone();
    let Constraint::Builtin(e) = next.goal.remove(index) else {
        unreachable!("solve on a CHR constraint")
    };
    next.builtin.add(&e);
    next
}

fn introduce(c: &Configuration, index: usize) -> Configuration {
    let mut next = c.clone();
    let Constraint::Chr(a) = next.goal.remove(index) else {
        unreachable!("introduce on a built-in")
    };
    next.store.insert(next.next_id, a);
    next.next_id += 1;
    next
}

/// All Apply successors of `c`.
pub fn apply_successors(p: &Program, c: &Configuration, sem: Semantics) -> Vec<(TransitionLabel, Configuration)> {
    if c.is_failed() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for rule in &p.rules {
        for m in head_matchings(rule, c) {
            if !guard_holds(rule, &m.theta, &c.builtin) {
                continue;
            }
            if let Some(s) = apply_rule(rule, m, c, sem) {
                out.push(s);
            }
        }
    }
    out
}

/// Exactly the one-step successors of `c`.
pub fn successors(p: &Program, c: &Configuration, sem: Semantics) -> Vec<(TransitionLabel, Configuration)> {
    if c.is_failed() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, item) in c.goal.iter().enumerate() {
        if matches!(item, Constraint::Builtin(_)) {
            out.push((TransitionLabel::goal_step(StepKind::Solve, i), solve(c, i)));
        }
    }
    for (i, item) in c.goal.iter().enumerate() {
        if matches!(item, Constraint::Chr(_)) {
            out.push((TransitionLabel::goal_step(StepKind::Introduce, i), introduce(c, i)));
        }
    }
    out.extend(apply_successors(p, c, sem));
    out
}

/// Solve and Introduce exhaustively, built-ins first, each in goal order.
/// Stops early when the store fails.
pub fn normalize_steps(c: &Configuration) -> Vec<Step> {
    let mut steps = Vec::new();
    let mut cur = c.clone();
    while !cur.is_failed() {
        let pick = cur
            .goal
            .iter()
            .position(|g| matches!(g, Constraint::Builtin(_)))
            .map(|i| (StepKind::Solve, i))
            .or_else(|| (!cur.goal.is_empty()).then_some((StepKind::Introduce, 0)));
        let Some((kind, i)) = pick else { break };
        let next = match kind {
            StepKind::Solve => solve(&cur, i),
            _ => introduce(&cur, i),
        };
        steps.push(Step {
            label: TransitionLabel::goal_step(kind, i),
            config: next.clone(),
        });
        cur = next;
    }
    steps
}

pub fn normalize(c: &Configuration) -> Configuration {
    normalize_steps(c)
        .pop()
        .map(|s| s.config)
        .unwrap_or_else(|| c.clone())
}

pub fn is_final(p: &Program, c: &Configuration, sem: Semantics) -> bool {
    c.is_failed() || (c.goal.is_empty() && apply_successors(p, c, sem).is_empty())
}

/// A finite prefix of a computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Computation {
    pub semantics: Semantics,
    pub initial: Configuration,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("step {index}: transition `{label}` is not enabled")]
    NotEnabled { index: usize, label: String },
    #[error("step {index}: recorded configuration differs from the replayed one")]
    Mismatch { index: usize },
    #[error("trace is malformed: {0}")]
    Malformed(String),
}

impl Computation {
    pub fn new(initial: Configuration, semantics: Semantics) -> Self {
        Computation {
            semantics,
            initial,
            steps: Vec::new(),
        }
    }

    pub fn last(&self) -> &Configuration {
        self.steps.last().map(|s| &s.config).unwrap_or(&self.initial)
    }

    /// Configurations in order, starting with the initial one.
    pub fn configurations(&self) -> impl Iterator<Item = &Configuration> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.config))
    }

    pub fn config_at(&self, index: usize) -> Option<&Configuration> {
        self.configurations().nth(index)
    }

    pub fn apply_count(&self) -> usize {
        self.steps.iter().filter(|s| s.label.is_apply()).count()
    }

    pub fn is_final(&self, p: &Program) -> bool {
        is_final(p, self.last(), self.semantics)
    }

    pub fn push(&mut self, label: TransitionLabel, config: Configuration) {
        self.steps.push(Step { label, config });
    }

    pub fn extend_steps(&mut self, steps: impl IntoIterator<Item = Step>) {
        self.steps.extend(steps);
    }

    /// Re-executes every label from the initial configuration and checks
    /// that the recorded configurations are reproduced.
    pub fn replay(&self, p: &Program) -> Result<(), ReplayError> {
        let labels: Vec<TransitionLabel> = self.steps.iter().map(|s| s.label.clone()).collect();
        let replayed = replay_labels(p, self.semantics, &self.initial, &labels)?;
        for (i, (a, b)) in replayed.steps.iter().zip(&self.steps).enumerate() {
            if a.config != b.config {
                return Err(ReplayError::Mismatch { index: i });
            }
        }
        Ok(())
    }
}

/// Rebuilds a computation from its labels.
pub fn replay_labels(
    p: &Program,
    sem: Semantics,
    initial: &Configuration,
    labels: &[TransitionLabel],
) -> Result<Computation, ReplayError> {
    let mut comp = Computation::new(initial.clone(), sem);
    for (i, label) in labels.iter().enumerate() {
        let cur = comp.last();
        let next = successors(p, cur, sem)
            .into_iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| c)
            .ok_or_else(|| ReplayError::NotEnabled {
                index: i,
                label: label.to_string(),
            })?;
        comp.push(label.clone(), next);
    }
    Ok(comp)
}

/// One scripted Apply choice: a rule name and optionally the matched ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptChoice {
    pub rule: Name,
    pub ids: Option<Vec<u64>>,
}

impl std::str::FromStr for ScriptChoice {
    type Err = String;

    /// `r2` or `r2@3` or `r2@1+4`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (rule, ids) = match s.split_once('@') {
            Some((r, ids)) => {
                let ids = ids
                    .split('+')
                    .map(|i| i.trim().parse::<u64>().map_err(|e| format!("bad id in `{s}`: {e}")))
                    .collect::<Result<Vec<_>, _>>()?;
                (r.trim(), Some(ids))
            }
            None => (s, None),
        };
        if rule.is_empty() {
            return Err(format!("empty rule name in `{s}`"));
        }
        Ok(ScriptChoice {
            rule: Name::from(rule),
            ids,
        })
    }
}

#[derive(Clone, Debug)]
pub enum Strategy {
    /// Always take the first successor in canonical order.
    First,
    /// Uniformly random successor, raw interleavings included.
    Random(u64),
    /// Normalize eagerly and take the scripted Apply choices in order.
    Script(Vec<ScriptChoice>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Final,
    Truncated,
}

#[derive(Clone, Debug)]
pub struct Run {
    pub computation: Computation,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("script step {index}: no enabled Apply matches `{choice}`")]
    ScriptChoice { index: usize, choice: String },
}

/// Runs `goal` following `strategy` for at most `max_steps` Apply transitions.
pub fn run(
    p: &Program,
    goal: &[Constraint],
    sem: Semantics,
    strategy: &Strategy,
    max_steps: usize,
) -> Result<Run, RunError> {
    let mut comp = Computation::new(Configuration::initial(goal, sem), sem);
    let mut applies = 0usize;
    match strategy {
        Strategy::First | Strategy::Random(_) => {
            let mut rng = match strategy {
                Strategy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
                _ => None,
            };
            loop {
                let mut succ = successors(p, comp.last(), sem);
                if succ.is_empty() {
                    break;
                }
                let pick = match rng.as_mut() {
                    Some(r) => r.gen_range(0..succ.len()),
                    None => 0,
                };
                let (label, next) = succ.swap_remove(pick);
                if label.is_apply() {
                    if applies == max_steps {
                        break;
                    }
                    applies += 1;
                }
                comp.push(label, next);
            }
        }
        Strategy::Script(choices) => {
            comp.extend_steps(normalize_steps(&comp.initial));
            for (index, choice) in choices.iter().enumerate() {
                if applies == max_steps {
                    break;
                }
                let (label, next) = apply_successors(p, comp.last(), sem)
                    .into_iter()
                    .find(|(l, _)| {
                        l.rule.as_ref() == Some(&choice.rule)
                            && choice.ids.as_ref().map_or(true, |ids| *ids == l.matched_ids())
                    })
                    .ok_or_else(|| RunError::ScriptChoice {
                        index,
                        choice: match &choice.ids {
                            Some(ids) => format!(
                                "{}@{}",
                                choice.rule,
                                ids.iter().map(u64::to_string).collect::<Vec<_>>().join("+")
                            ),
                            None => choice.rule.to_string(),
                        },
                    })?;
                applies += 1;
                comp.push(label, next.clone());
                comp.extend_steps(normalize_steps(&next));
            }
        }
    }
    let status = if comp.is_final(p) {
        RunStatus::Final
    } else {
        RunStatus::Truncated
    };
    Ok(Run {
        computation: comp,
        status,
    })
}

/// JSON form of one step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub kind: StepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_index: Option<usize>,
    pub rule: Option<String>,
    pub matched_ids: Vec<u64>,
    #[serde(default)]
    pub kept: Vec<u64>,
    #[serde(default)]
    pub removed: Vec<u64>,
    pub theta: BTreeMap<String, String>,
    #[serde(default)]
    pub introduced: BTreeMap<String, String>,
    pub builtin_after: String,
    pub store_after: Vec<String>,
    pub goal_after: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub semantics: Semantics,
    pub goal: String,
    pub steps: Vec<TraceStep>,
}

impl From<&Step> for TraceStep {
    fn from(s: &Step) -> Self {
        TraceStep {
            kind: s.label.kind,
            goal_index: s.label.goal_index,
            rule: s.label.rule.as_ref().map(ToString::to_string),
            matched_ids: s.label.matched_ids(),
            kept: s.label.kept.clone(),
            removed: s.label.removed.clone(),
            theta: s
                .label
                .theta
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            introduced: s
                .label
                .introduced
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            builtin_after: s.config.builtin.to_string(),
            store_after: s.config.store_strings(),
            goal_after: s.config.goal.iter().map(ToString::to_string).collect(),
        }
    }
}

impl TraceStep {
    pub fn to_label(&self) -> Result<TransitionLabel, ReplayError> {
        let term = |s: &str| parse_term(s).map_err(|e| ReplayError::Malformed(e.to_string()));
        let mut theta = Vec::new();
        for (k, v) in &self.theta {
            theta.push((Name::from(k.as_str()), term(v)?));
        }
        // the fresh-name map is kept in first-occurrence order by the engine
        let mut introduced: Vec<(Name, Name)> = self
            .introduced
            .iter()
            .map(|(k, v)| (Name::from(k.as_str()), Name::from(v.as_str())))
            .collect();
        introduced.sort_by_key(|(_, fresh)| {
            fresh
                .rsplit('_')
                .next()
                .and_then(|k| k.parse::<u64>().ok())
                .unwrap_or(0)
        });
        Ok(TransitionLabel {
            kind: self.kind,
            goal_index: self.goal_index,
            rule: self.rule.as_deref().map(Name::from),
            kept: self.kept.clone(),
            removed: self.removed.clone(),
            theta,
            introduced,
        })
    }
}

impl Computation {
    pub fn to_trace(&self) -> Trace {
        Trace {
            semantics: self.semantics,
            goal: goal_to_string(&self.initial.goal),
            steps: self.steps.iter().map(TraceStep::from).collect(),
        }
    }

    /// Rebuilds a computation from a JSON trace by replaying its labels.
    pub fn from_trace(p: &Program, goal: &[Constraint], trace: &Trace) -> Result<Computation, ReplayError> {
        let labels = trace
            .steps
            .iter()
            .map(TraceStep::to_label)
            .collect::<Result<Vec<_>, _>>()?;
        let comp = replay_labels(
            p,
            trace.semantics,
            &Configuration::initial(goal, trace.semantics),
            &labels,
        )?;
        for (i, (ours, theirs)) in comp.steps.iter().zip(&trace.steps).enumerate() {
            if TraceStep::from(ours) != *theirs {
                return Err(ReplayError::Mismatch { index: i });
            }
        }
        Ok(comp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_goal, parse_program};

    fn prog(s: &str) -> Program {
        parse_program(s).unwrap()
    }

    fn with_store(atoms: &[(u64, &str)], sem: Semantics) -> Configuration {
        let mut c = Configuration::initial(&[], sem);
        for (id, a) in atoms {
            let Constraint::Chr(atom) = parse_goal(a).unwrap().remove(0) else {
                panic!()
            };
            c.store.insert(*id, atom);
            c.next_id = c.next_id.max(id + 1);
        }
        c
    }

    #[test]
    fn initial_configuration_shape() {
        let g = parse_goal("c(X,Y)").unwrap();
        let c = Configuration::initial(&g, Semantics::Theoretical);
        assert_eq!(c.goal, g);
        assert!(c.store.is_empty() && c.builtin.is_true());
        assert_eq!(c.history, Some(BTreeSet::new()));
        assert_eq!(c.next_id, 1);
    }

    #[test]
    fn empty_goal_is_immediately_final() {
        let p = Program::default();
        let c = Configuration::initial(&[], Semantics::Abstract);
        assert!(is_final(&p, &c, Semantics::Abstract));
    }

    #[test]
    fn builtin_goal_offers_one_solve() {
        let c = Configuration::initial(&parse_goal("X=0").unwrap(), Semantics::Abstract);
        let s = successors(&Program::default(), &c, Semantics::Abstract);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].0.kind, StepKind::Solve);
    }

    #[test]
    fn duplicating_rule_has_one_apply() {
        let p = prog("r1 @ c(X,Y) <=> c(X,Y),c(X,Y).");
        let c = with_store(&[(1, "c(X,Y)")], Semantics::Abstract);
        let s = successors(&p, &c, Semantics::Abstract);
        assert_eq!(s.len(), 1);
        let (label, next) = &s[0];
        assert_eq!(label.kind, StepKind::Apply);
        assert_eq!(goal_to_string(&next.goal), "c(X,Y),c(X,Y)");
        assert!(next.store.is_empty());
    }

    #[test]
    fn failed_configuration_has_no_successors() {
        let p = prog("a <=> true.");
        let mut c = with_store(&[(1, "a")], Semantics::Abstract);
        c.builtin = BuiltinStore::inconsistent();
        assert!(successors(&p, &c, Semantics::Abstract).is_empty());
        assert!(is_final(&p, &c, Semantics::Abstract));
    }

    #[test]
    fn propagation_refires_only_without_history() {
        let p = prog("r @ a ==> a.");
        let c = with_store(&[(1, "a")], Semantics::Abstract);
        let s = successors(&p, &c, Semantics::Abstract);
        assert_eq!(s.len(), 1);
        assert_eq!(goal_to_string(&s[0].1.goal), "a");
        // the same store after firing once, goal already consumed
        let mut after = s[0].1.clone();
        after.goal.clear();
        assert_eq!(apply_successors(&p, &after, Semantics::Abstract).len(), 1);

        let ct = with_store(&[(1, "a")], Semantics::Theoretical);
        let st = successors(&p, &ct, Semantics::Theoretical);
        assert_eq!(st.len(), 1);
        let mut after_t = st[0].1.clone();
        after_t.goal.clear();
        assert!(successors(&p, &after_t, Semantics::Theoretical).is_empty());
        assert!(is_final(&p, &after_t, Semantics::Theoretical));
    }

    #[test]
    fn normalization_solves_then_introduces() {
        let c = Configuration::initial(&parse_goal("c(X), X=0").unwrap(), Semantics::Abstract);
        let n = normalize(&c);
        assert!(n.goal.is_empty());
        assert_eq!(n.store_strings(), vec!["c(X)#1"]);
        assert_eq!(n.builtin.to_string(), "X=0");
        assert_eq!(normalize(&n), n);
        let f = normalize(&Configuration::initial(&parse_goal("X=0, X=1").unwrap(), Semantics::Abstract));
        assert!(f.is_failed());
    }

    #[test]
    fn finality() {
        let c = with_store(&[(1, "a")], Semantics::Abstract);
        assert!(is_final(&prog("b <=> true."), &c, Semantics::Abstract));
        assert!(!is_final(&prog("a <=> a."), &c, Semantics::Abstract));
    }

    #[test]
    fn matching_modulo_store() {
        let p = prog("r3 @ c(0,Y) ==> Y = 0.");
        let mut c = with_store(&[(1, "c(X,Y)")], Semantics::Abstract);
        assert!(apply_successors(&p, &c, Semantics::Abstract).is_empty());
        c.builtin = BuiltinStore::from_equations(&[Equation::new(Term::var("X"), Term::constant("0"))]);
        let s = apply_successors(&p, &c, Semantics::Abstract);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].0.theta, vec![(Name::from("Y"), Term::var("Y"))]);
    }

    #[test]
    fn repeated_head_variables_need_entailed_equality() {
        let p = prog("p(X,X) <=> true.");
        let mut c = with_store(&[(1, "p(A,B)")], Semantics::Abstract);
        assert!(apply_successors(&p, &c, Semantics::Abstract).is_empty());
        c.builtin = BuiltinStore::from_equations(&[Equation::new(Term::var("A"), Term::var("B"))]);
        assert_eq!(apply_successors(&p, &c, Semantics::Abstract).len(), 1);
    }

    #[test]
    fn guards_with_local_variables() {
        let p = prog("p(X) <=> X = Z, Z = a | true.");
        let c = with_store(&[(1, "p(b)")], Semantics::Abstract);
        assert!(apply_successors(&p, &c, Semantics::Abstract).is_empty());
        let c = with_store(&[(1, "p(a)")], Semantics::Abstract);
        assert_eq!(apply_successors(&p, &c, Semantics::Abstract).len(), 1);
        let p = prog("p(X) <=> X = Z | true.");
        let c = with_store(&[(1, "p(Y)")], Semantics::Abstract);
        assert_eq!(apply_successors(&p, &c, Semantics::Abstract).len(), 1);
    }

    #[test]
    fn fresh_body_variables_get_canonical_unique_names() {
        let p = prog("p <=> q(Y), Y = a.");
        let c = with_store(&[(1, "p"), (2, "p")], Semantics::Abstract);
        let (l1, c1) = apply_successors(&p, &c, Semantics::Abstract).remove(0);
        assert_eq!(l1.introduced, vec![(Name::from("Y"), Name::from("_V1_1"))]);
        let (l2, _) = apply_successors(&p, &c1, Semantics::Abstract).remove(0);
        assert_eq!(l2.introduced, vec![(Name::from("Y"), Name::from("_V2_1"))]);
    }

    #[test]
    fn multi_headed_matchings_are_injective_and_ordered() {
        let p = prog("r @ a \\ a <=> true.");
        let c = with_store(&[(1, "a"), (2, "a"), (3, "b")], Semantics::Abstract);
        let s = apply_successors(&p, &c, Semantics::Abstract);
        let ids: Vec<(Vec<u64>, Vec<u64>)> = s.iter().map(|(l, _)| (l.kept.clone(), l.removed.clone())).collect();
        assert_eq!(ids, vec![(vec![1], vec![2]), (vec![2], vec![1])]);
    }

    #[test]
    fn scripted_four_rule_run_terminates() {
        let p = prog(
            "r1 @ c(X,Y) <=> c(X,Y),c(X,Y).
             r2 @ c(X,Y) <=> X = 0.
             r3 @ c(0,Y) ==> Y = 0.
             r4 @ c(0,0) <=> true.",
        );
        let script = ["r1", "r2", "r3", "r4"].iter().map(|s| s.parse().unwrap()).collect();
        let run = run(&p, &parse_goal("c(X,Y)").unwrap(), Semantics::Abstract, &Strategy::Script(script), 100).unwrap();
        assert_eq!(run.status, RunStatus::Final);
        let c = run.computation.last();
        assert!(c.store.is_empty());
        assert_eq!(c.builtin.to_string(), "X=0,Y=0");
        run.computation.replay(&p).unwrap();
    }

    #[test]
    fn self_loop_is_truncated() {
        let p = prog("c <=> c.");
        let r = run(&p, &parse_goal("c").unwrap(), Semantics::Abstract, &Strategy::First, 10).unwrap();
        assert_eq!(r.status, RunStatus::Truncated);
        assert_eq!(r.computation.apply_count(), 10);
    }

    #[test]
    fn empty_run_is_final_with_no_steps() {
        let r = run(&Program::default(), &[], Semantics::Abstract, &Strategy::First, 10).unwrap();
        assert_eq!(r.status, RunStatus::Final);
        assert!(r.computation.steps.is_empty());
    }

    #[test]
    fn unavailable_script_choice_is_an_error() {
        let p = prog("r @ a <=> true.");
        let script = vec!["s".parse().unwrap()];
        assert!(run(&p, &parse_goal("a").unwrap(), Semantics::Abstract, &Strategy::Script(script), 5).is_err());
    }

    #[test]
    fn trace_round_trip_replays() {
        let p = prog("p(X) <=> q(X, Y), Y = X. q(A, B) <=> true.");
        let g = parse_goal("p(a)").unwrap();
        let r = run(&p, &g, Semantics::Theoretical, &Strategy::First, 10).unwrap();
        let json = serde_json::to_string(&r.computation.to_trace()).unwrap();
        let trace: Trace = serde_json::from_str(&json).unwrap();
        let back = Computation::from_trace(&p, &g, &trace).unwrap();
        assert_eq!(back, r.computation);
    }

    #[test]
    fn script_choice_syntax() {
        let c: ScriptChoice = "r2@1+4".parse().unwrap();
        assert_eq!(&*c.rule, "r2");
        assert_eq!(c.ids, Some(vec![1, 4]));
        assert!("@1".parse::<ScriptChoice>().is_err());
    }
}
