//! The built-in constraint theory: conjunctions of `=` over variables and
//! constants, interpreted over a Herbrand universe with at least two
//! constants.
//!
//! A store is kept as a fully normalized congruence: every variable that is
//! not the representative of its class maps directly to the representative.
//! Constants are always representatives; otherwise the lexicographically
//! least variable is. Two consistent stores are logically equivalent iff
//! their maps are equal, which is what the derived `PartialEq` compares.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::syntax::{Equation, Name, Term};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BuiltinStore {
    bindings: BTreeMap<Name, Term>,
    consistent: bool,
}

impl Default for BuiltinStore {
    fn default() -> Self {
        BuiltinStore::new()
    }
}

/// Representative preference: constants first, then the least variable.
fn preferred(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::Const(_), Term::Var(_)) => true,
        (Term::Var(_), Term::Const(_)) => false,
        (Term::Var(x), Term::Var(y)) => x < y,
        (Term::Const(x), Term::Const(y)) => x < y,
    }
}

impl BuiltinStore {
    /// The store `true`.
    pub fn new() -> Self {
        BuiltinStore {
            bindings: BTreeMap::new(),
            consistent: true,
        }
    }

    /// The store `false`.
    pub fn inconsistent() -> Self {
        BuiltinStore {
            bindings: BTreeMap::new(),
            consistent: false,
        }
    }

    pub fn from_equations<'a>(eqs: impl IntoIterator<Item = &'a Equation>) -> Self {
        let mut s = BuiltinStore::new();
        for e in eqs {
            s.add(e);
        }
        s
    }

    pub fn is_consistent(&self) -> bool {
        self.consistent
    }

    pub fn is_true(&self) -> bool {
        self.consistent && self.bindings.is_empty()
    }

    /// Class representative of a term.
    pub fn rep(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.bindings.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Const(_) => t.clone(),
        }
    }

    /// Variables mentioned by the store.
    pub fn vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for (k, v) in &self.bindings {
            out.insert(k.clone());
            if let Term::Var(x) = v {
                out.insert(x.clone());
            }
        }
        out
    }

    /// Non-trivial bindings `member -> representative`.
    pub fn bindings(&self) -> impl Iterator<Item = (&Name, &Term)> {
        self.bindings.iter()
    }

    /// In-place conjunction with one equation.
    pub fn add(&mut self, e: &Equation) {
        if !self.consistent {
            return;
        }
        let (ra, rb) = (self.rep(&e.lhs), self.rep(&e.rhs));
        if ra == rb {
            return;
        }
        if let (Term::Const(_), Term::Const(_)) = (&ra, &rb) {
            self.bindings.clear();
            self.consistent = false;
            return;
        }
        let (keep, old) = if preferred(&ra, &rb) { (ra, rb) } else { (rb, ra) };
        let Term::Var(old) = old else {
            unreachable!("a constant always wins the representative choice")
        };
        for v in self.bindings.values_mut() {
            if matches!(v, Term::Var(x) if *x == old) {
                *v = keep.clone();
            }
        }
        self.bindings.insert(old, keep);
    }

    /// Persistent conjunction: returns `self ∧ e`.
    pub fn add_equation(&self, e: &Equation) -> BuiltinStore {
        let mut s = self.clone();
        s.add(e);
        s
    }

    pub fn add_equations<'a>(&self, eqs: impl IntoIterator<Item = &'a Equation>) -> BuiltinStore {
        let mut s = self.clone();
        for e in eqs {
            s.add(e);
        }
        s
    }

    /// `CT ⊨ self → a = b`.
    pub fn entails_eq(&self, a: &Term, b: &Term) -> bool {
        !self.consistent || self.rep(a) == self.rep(b)
    }

    /// `CT ⊨ self → ∃existentials. ∧eqs`.
    ///
    /// The equations are closed into their own congruence. A clash of two
    /// constants there makes them unsatisfiable. Otherwise each class can be
    /// satisfied by choosing its existential members equal to any other
    /// member, so only the non-existential members of a class have to be
    /// equal under `self`.
    pub fn entails(&self, existentials: &BTreeSet<Name>, eqs: &[Equation]) -> bool {
        if !self.consistent {
            return true;
        }
        let local = BuiltinStore::from_equations(eqs);
        if !local.consistent {
            return false;
        }
        let mut classes: BTreeMap<Term, Vec<Term>> = BTreeMap::new();
        for (member, rep) in &local.bindings {
            classes.entry(rep.clone()).or_default().push(Term::Var(member.clone()));
        }
        classes.into_iter().all(|(rep, members)| {
            let free: Vec<Term> = std::iter::once(rep)
                .chain(members)
                .filter(|t| !matches!(t, Term::Var(v) if existentials.contains(v)))
                .collect();
            free.windows(2).all(|w| self.entails_eq(&w[0], &w[1]))
        })
    }

    /// `CT ⊨ self → other`.
    pub fn implies(&self, other: &BuiltinStore) -> bool {
        if !self.consistent {
            return true;
        }
        if !other.consistent {
            return false;
        }
        other
            .bindings
            .iter()
            .all(|(k, v)| self.entails_eq(&Term::Var(k.clone()), v))
    }

    /// Logical equivalence. Inconsistent stores are all equivalent.
    pub fn equivalent(&self, other: &BuiltinStore) -> bool {
        self == other
    }

    /// `∃_{-X} self` in canonical form.
    pub fn project(&self, vars: &BTreeSet<Name>) -> ProjectedStore {
        if !self.consistent {
            return ProjectedStore {
                variables: vars.clone(),
                equations: Vec::new(),
                consistent: false,
            };
        }
        let mut classes: BTreeMap<Term, Vec<&Name>> = BTreeMap::new();
        for v in vars {
            classes.entry(self.rep(&Term::Var(v.clone()))).or_default().push(v);
        }
        let mut equations = Vec::new();
        for (rep, members) in classes {
            // members are sorted, so members[0] is the least variable
            let target = match &rep {
                Term::Const(_) => rep.clone(),
                Term::Var(_) => Term::Var(members[0].clone()),
            };
            for m in members {
                let mt = Term::Var(m.clone());
                if mt != target {
                    equations.push(Equation::new(mt, target.clone()));
                }
            }
        }
        equations.sort_by_key(|e| e.to_string());
        ProjectedStore {
            variables: vars.clone(),
            equations,
            consistent: true,
        }
    }

    /// Projection onto every variable the store mentions.
    pub fn canonical(&self) -> ProjectedStore {
        self.project(&self.vars())
    }

    /// Renames variables (the map must be injective on the store's variables).
    pub fn rename(&self, rho: &BTreeMap<Name, Term>) -> BuiltinStore {
        if !self.consistent {
            return self.clone();
        }
        let eqs: Vec<Equation> = self
            .bindings
            .iter()
            .map(|(k, v)| Equation::new(Term::Var(k.clone()).substitute(rho), v.substitute(rho)))
            .collect();
        BuiltinStore::from_equations(&eqs)
    }
}

impl fmt::Display for BuiltinStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.canonical())
    }
}

/// `∃_{-X} B` in solved form over the variables `X`.
#[derive(Clone, Debug)]
pub struct ProjectedStore {
    pub variables: BTreeSet<Name>,
    pub equations: Vec<Equation>,
    pub consistent: bool,
}

impl ProjectedStore {
    pub fn to_store(&self) -> BuiltinStore {
        if !self.consistent {
            return BuiltinStore::inconsistent();
        }
        BuiltinStore::from_equations(&self.equations)
    }

    /// Comma-joined `lhs=rhs` sorted lexicographically, `true` when empty,
    /// `false` when inconsistent.
    pub fn canonical_text(&self) -> String {
        if !self.consistent {
            return "false".into();
        }
        if self.equations.is_empty() {
            return "true".into();
        }
        self.equations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn equivalent(&self, other: &ProjectedStore) -> bool {
        self.to_store() == other.to_store()
    }

    pub fn implies(&self, other: &ProjectedStore) -> bool {
        self.to_store().implies(&other.to_store())
    }

    /// Applies a variable renaming and re-canonicalizes over the image of X.
    pub fn rename(&self, rho: &BTreeMap<Name, Term>) -> ProjectedStore {
        let vars: BTreeSet<Name> = self
            .variables
            .iter()
            .map(|v| match rho.get(v) {
                Some(Term::Var(w)) => w.clone(),
                _ => v.clone(),
            })
            .collect();
        self.to_store().rename(rho).project(&vars)
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        self.equations
            .iter()
            .flat_map(|e| e.vars().cloned())
            .collect()
    }
}

impl PartialEq for ProjectedStore {
    fn eq(&self, other: &Self) -> bool {
        self.consistent == other.consistent && self.equations == other.equations
    }
}

impl Eq for ProjectedStore {}

impl fmt::Display for ProjectedStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_text())
    }
}
