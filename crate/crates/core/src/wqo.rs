//! The quasi-order on configurations: goal and store multiplicities may only
//! grow, and the built-in stores must be logically equivalent.

use std::collections::BTreeMap;

use crate::engine::Configuration;
use crate::syntax::{Atom, Constraint};

fn goal_counts(c: &Configuration) -> BTreeMap<&Constraint, usize> {
    let mut m = BTreeMap::new();
    for g in &c.goal {
        *m.entry(g).or_insert(0) += 1;
    }
    m
}

fn store_counts(c: &Configuration) -> BTreeMap<&Atom, usize> {
    let mut m = BTreeMap::new();
    for a in c.store.values() {
        *m.entry(a).or_insert(0) += 1;
    }
    m
}

fn dominated<K: Ord>(small: &BTreeMap<K, usize>, large: &BTreeMap<K, usize>) -> bool {
    small
        .iter()
        .all(|(k, n)| large.get(k).is_some_and(|m| n <= m))
}

/// `c1 ≤ c2`. Identifiers and propagation histories are ignored.
pub fn leq(c1: &Configuration, c2: &Configuration) -> bool {
    c1.builtin == c2.builtin
        && dominated(&store_counts(c1), &store_counts(c2))
        && dominated(&goal_counts(c1), &goal_counts(c2))
}
