//! Reactive sequences and their η-normal form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::store::{BuiltinStore, ProjectedStore};
use crate::syntax::{Name, Term};

/// `⟨c_1,d_1⟩…⟨c_n,d_n⟩` over projected stores.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReactiveSequence {
    pub pairs: Vec<(ProjectedStore, ProjectedStore)>,
}

impl ReactiveSequence {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Canonical texts of every component.
    pub fn texts(&self) -> Vec<(String, String)> {
        self.pairs
            .iter()
            .map(|(c, d)| (c.canonical_text(), d.canonical_text()))
            .collect()
    }

    pub fn rename(&self, rho: &BTreeMap<Name, Term>) -> ReactiveSequence {
        ReactiveSequence {
            pairs: self
                .pairs
                .iter()
                .map(|(c, d)| (c.rename(rho), d.rename(rho)))
                .collect(),
        }
    }

    /// `CT ⊨ d_j → c_j` and `CT ⊨ c_{j+1} → d_j`.
    pub fn is_monotone(&self) -> bool {
        self.pairs.iter().all(|(c, d)| d.implies(c))
            && self.pairs.windows(2).all(|w| w[1].0.implies(&w[0].1))
    }

    /// Strictly increasing with respect to `x`, allowing a final stuttering pair.
    pub fn is_strictly_increasing(&self, x: &BTreeSet<Name>) -> bool {
        let n = self.pairs.len();
        let vars_ok = self
            .pairs
            .iter()
            .all(|(c, d)| c.free_vars().is_subset(x) && d.free_vars().is_subset(x));
        let no_stutter = self
            .pairs
            .iter()
            .enumerate()
            .all(|(i, (c, d))| i + 1 == n || !c.implies(d));
        let no_fusable = self.pairs.windows(2).all(|w| !w[0].1.implies(&w[1].0));
        vars_ok && no_stutter && no_fusable
    }
}

impl fmt::Display for ReactiveSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pairs.is_empty() {
            return f.write_str("ε");
        }
        for (c, d) in &self.pairs {
            write!(
                f,
                "⟨{}, {}⟩",
                c.canonical_text().replace(',', "∧"),
                d.canonical_text().replace(',', "∧")
            )?;
        }
        Ok(())
    }
}

/// η: project onto `x`, drop stuttering pairs other than the last, then fuse
/// neighbours `⟨c_l,d_l⟩⟨c_{l+1},d_{l+1}⟩` into `⟨c_l,d_{l+1}⟩` while
/// `d_l → c_{l+1}`.
pub fn eta(raw: &[(BuiltinStore, BuiltinStore)], x: &BTreeSet<Name>) -> ReactiveSequence {
    let projected: Vec<(ProjectedStore, ProjectedStore)> =
        raw.iter().map(|(c, d)| (c.project(x), d.project(x))).collect();
    let n = projected.len();
    let mut pairs: Vec<(ProjectedStore, ProjectedStore)> = projected
        .into_iter()
        .enumerate()
        .filter(|(i, (c, d))| i + 1 == n || !c.equivalent(d))
        .map(|(_, p)| p)
        .collect();
    let mut i = 0;
    while i + 1 < pairs.len() {
        if pairs[i].1.implies(&pairs[i + 1].0) {
            let (_, d) = pairs.remove(i + 1);
            pairs[i].1 = d;
        } else {
            i += 1;
        }
    }
    ReactiveSequence { pairs }
}

/// `|s| ≤ |x| + 2`.
pub fn max_sequence_length_check(s: &ReactiveSequence, x: &BTreeSet<Name>) -> bool {
    s.len() <= x.len() + 2
}
