use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::engine::Semantics;
use crate::syntax::{Constraint, Name, Program, Term};

/// `u`: distinct constants, `w`: maximal CHR arity, `r`: propagation rules,
/// all over program and goal together.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundParameters {
    pub u: usize,
    pub w: usize,
    pub r: usize,
}

impl BoundParameters {
    pub fn of(p: &Program, goal: &[Constraint]) -> Self {
        let mut constants: std::collections::BTreeSet<&Name> = p.constants.iter().collect();
        let mut w = p.max_arity();
        for c in goal {
            let terms: Vec<&Term> = match c {
                Constraint::Chr(a) => {
                    w = w.max(a.arity());
                    a.args.iter().collect()
                }
                Constraint::Builtin(e) => vec![&e.lhs, &e.rhs],
            };
            for t in terms {
                if let Term::Const(k) = t {
                    constants.insert(k);
                }
            }
        }
        BoundParameters {
            u: constants.len(),
            w,
            r: p.propagation_rule_count(),
        }
    }
}

/// `Σ_{k=0}^{w+2} (2^{w(u+w)})^k`, which equals
/// `(2^{w(u+w)(w+3)} − 1) / (2^{w(u+w)} − 1)` for `w > 0` and `3` for `w = 0`.
pub fn bound_l(u: usize, w: usize) -> BigUint {
    let ratio = BigUint::one() << (w * (u + w));
    let mut sum = BigUint::zero();
    let mut term = BigUint::one();
    for _ in 0..w + 3 {
        sum += &term;
        term *= &ratio;
    }
    sum
}

/// `L`, or `2^r · L` under ω_t.
pub fn effective_cap(params: BoundParameters, sem: Semantics) -> BigUint {
    let l = bound_l(params.u, params.w);
    match sem {
        Semantics::Abstract => l,
        Semantics::Theoretical => l << params.r,
    }
}

pub(crate) fn saturating_u64(n: &BigUint) -> u64 {
    n.to_u64().unwrap_or(u64::MAX)
}
