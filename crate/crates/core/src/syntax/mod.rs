//! Abstract syntax for CHR over constants: terms, atoms, equations, rules
//! and programs, together with the pretty-printer and dialect classification.
//!
//! Terms are either variables or constants; there are no compound terms.
//! The only built-in constraint is `=`.

mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

pub use parser::{parse_goal, parse_program, parse_term, ParseError, ParseErrorKind};

/// Interned-ish symbol name. Cheap to clone and `Send`.
pub type Name = Arc<str>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Name),
    Const(Name),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Name::from(name))
    }

    pub fn constant(name: &str) -> Self {
        Term::Const(Name::from(name))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn name(&self) -> &Name {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self {
            Term::Var(n) => Some(n),
            Term::Const(_) => None,
        }
    }

    /// Applies a variable substitution; unmapped variables are left alone.
    pub fn substitute(&self, subst: &BTreeMap<Name, Term>) -> Term {
        match self {
            Term::Var(v) => subst.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Const(_) => self.clone(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A CHR constraint `p(t1, ..., tn)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: Name,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Atom {
            predicate: Name::from(predicate),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Name> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn substitute(&self, subst: &BTreeMap<Name, Term>) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|t| t.substitute(subst)).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// The built-in `lhs = rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        Equation { lhs, rhs }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Name> {
        [&self.lhs, &self.rhs].into_iter().filter_map(Term::as_var)
    }

    pub fn substitute(&self, subst: &BTreeMap<Name, Term>) -> Equation {
        Equation {
            lhs: self.lhs.substitute(subst),
            rhs: self.rhs.substitute(subst),
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.lhs, self.rhs)
    }
}

/// A goal or body item: either a CHR constraint or a built-in.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    Chr(Atom),
    Builtin(Equation),
}

impl Constraint {
    pub fn vars(&self) -> Vec<&Name> {
        match self {
            Constraint::Chr(a) => a.vars().collect(),
            Constraint::Builtin(e) => e.vars().collect(),
        }
    }

    pub fn substitute(&self, subst: &BTreeMap<Name, Term>) -> Constraint {
        match self {
            Constraint::Chr(a) => Constraint::Chr(a.substitute(subst)),
            Constraint::Builtin(e) => Constraint::Builtin(e.substitute(subst)),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Chr(a) => write!(f, "{a}"),
            Constraint::Builtin(e) => write!(f, "{e}"),
        }
    }
}

/// A goal is a multiset of constraints. Textual order is kept for readability.
pub type Goal = Vec<Constraint>;

/// Formats a goal as a comma-separated list, `true` when empty.
pub fn goal_to_string(goal: &[Constraint]) -> String {
    if goal.is_empty() {
        "true".to_string()
    } else {
        goal.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `name @ kept \ removed <=> guard | body`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub name: Name,
    pub kept: Vec<Atom>,
    pub removed: Vec<Atom>,
    pub guard: Vec<Equation>,
    pub body: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Simplification,
    Propagation,
    Simpagation,
}

impl Rule {
    pub fn kind(&self) -> RuleKind {
        match (self.kept.is_empty(), self.removed.is_empty()) {
            (true, _) => RuleKind::Simplification,
            (false, true) => RuleKind::Propagation,
            (false, false) => RuleKind::Simpagation,
        }
    }

    pub fn is_propagation(&self) -> bool {
        self.kind() == RuleKind::Propagation
    }

    pub fn head_len(&self) -> usize {
        self.kept.len() + self.removed.len()
    }

    pub fn heads(&self) -> impl Iterator<Item = &Atom> {
        self.kept.iter().chain(self.removed.iter())
    }

    pub fn head_vars(&self) -> BTreeSet<Name> {
        self.heads().flat_map(|a| a.vars().cloned()).collect()
    }

    pub fn guard_vars(&self) -> BTreeSet<Name> {
        self.guard.iter().flat_map(|e| e.vars().cloned()).collect()
    }

    pub fn body_vars(&self) -> BTreeSet<Name> {
        self.body
            .iter()
            .flat_map(|c| c.vars().into_iter().cloned())
            .collect()
    }

    /// `Var(B) ∪ Var(g) ⊆ Var(heads)`.
    pub fn is_range_restricted(&self) -> bool {
        let head = self.head_vars();
        self.guard_vars()
            .iter()
            .chain(self.body_vars().iter())
            .all(|v| head.contains(v))
    }

    pub fn equations(&self) -> impl Iterator<Item = &Equation> {
        self.guard.iter().chain(self.body.iter().filter_map(|c| match c {
            Constraint::Builtin(e) => Some(e),
            Constraint::Chr(_) => None,
        }))
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.heads().chain(self.body.iter().filter_map(|c| match c {
            Constraint::Chr(a) => Some(a),
            Constraint::Builtin(_) => None,
        }))
    }
}

fn join_atoms(atoms: &[Atom]) -> String {
    atoms
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ ", self.name)?;
        match self.kind() {
            RuleKind::Simplification => write!(f, "{} <=> ", join_atoms(&self.removed))?,
            RuleKind::Propagation => write!(f, "{} ==> ", join_atoms(&self.kept))?,
            RuleKind::Simpagation => write!(
                f,
                "{} \\ {} <=> ",
                join_atoms(&self.kept),
                join_atoms(&self.removed)
            )?,
        }
        if !self.guard.is_empty() {
            let g: Vec<String> = self.guard.iter().map(|e| format!("{} = {}", e.lhs, e.rhs)).collect();
            write!(f, "{} | ", g.join(", "))?;
        }
        if self.body.is_empty() {
            f.write_str("true")?;
        } else {
            let b: Vec<String> = self
                .body
                .iter()
                .map(|c| match c {
                    Constraint::Chr(a) => a.to_string(),
                    Constraint::Builtin(e) => format!("{} = {}", e.lhs, e.rhs),
                })
                .collect();
            f.write_str(&b.join(", "))?;
        }
        f.write_str(".")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    /// Every constant occurring in the program (and in linked goals).
    pub constants: BTreeSet<Name>,
    /// Predicate name to arity.
    pub predicates: BTreeMap<Name, usize>,
}

impl Program {
    /// Builds the symbol tables from the rules. Fails on arity clashes.
    pub fn from_rules(rules: Vec<Rule>) -> Result<Program, ParseError> {
        let mut program = Program {
            rules,
            ..Program::default()
        };
        let atoms: Vec<Atom> = program.rules.iter().flat_map(|r| r.atoms().cloned()).collect();
        let eqs: Vec<Equation> = program
            .rules
            .iter()
            .flat_map(|r| r.equations().cloned())
            .collect();
        program.register(atoms.iter(), eqs.iter())?;
        Ok(program)
    }

    fn register<'a>(
        &mut self,
        atoms: impl Iterator<Item = &'a Atom>,
        eqs: impl Iterator<Item = &'a Equation>,
    ) -> Result<(), ParseError> {
        for atom in atoms {
            match self.predicates.get(&atom.predicate) {
                Some(&n) if n != atom.arity() => {
                    return Err(ParseError::unlocated(ParseErrorKind::ArityMismatch {
                        predicate: atom.predicate.to_string(),
                        expected: n,
                        found: atom.arity(),
                    }))
                }
                Some(_) => {}
                None => {
                    self.predicates.insert(atom.predicate.clone(), atom.arity());
                }
            }
            for t in &atom.args {
                if let Term::Const(c) = t {
                    self.constants.insert(c.clone());
                }
            }
        }
        for eq in eqs {
            for t in [&eq.lhs, &eq.rhs] {
                if let Term::Const(c) = t {
                    self.constants.insert(c.clone());
                }
            }
        }
        Ok(())
    }

    /// Extends the symbol tables with the goal's symbols, checking that every
    /// predicate keeps a single arity.
    pub fn link(&self, goal: &[Constraint]) -> Result<Program, ParseError> {
        let mut linked = self.clone();
        let atoms: Vec<&Atom> = goal
            .iter()
            .filter_map(|c| match c {
                Constraint::Chr(a) => Some(a),
                _ => None,
            })
            .collect();
        let eqs: Vec<&Equation> = goal
            .iter()
            .filter_map(|c| match c {
                Constraint::Builtin(e) => Some(e),
                _ => None,
            })
            .collect();
        linked.register(atoms.into_iter(), eqs.into_iter())?;
        Ok(linked)
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| &*r.name == name)
    }

    pub fn max_arity(&self) -> usize {
        self.predicates.values().copied().max().unwrap_or(0)
    }

    pub fn propagation_rule_count(&self) -> usize {
        self.rules.iter().filter(|r| r.is_propagation()).count()
    }

    pub fn classify(&self) -> DialectFlags {
        classify(self)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DialectFlags {
    pub range_restricted: bool,
    pub single_headed: bool,
    pub propositional: bool,
}

pub fn classify(p: &Program) -> DialectFlags {
    DialectFlags {
        range_restricted: p.rules.iter().all(Rule::is_range_restricted),
        single_headed: p.rules.iter().all(|r| r.head_len() == 1),
        propositional: p.predicates.values().all(|&n| n == 0)
            && p.rules.iter().all(|r| r.equations().next().is_none()),
    }
}
