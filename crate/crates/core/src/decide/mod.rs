//! Deciders for divergence (range-restricted programs, ω_o) and for the
//! existence of a terminating computation (single-headed programs, ω_o or
//! ω_t), and the bound on repetitiveness they rely on.

mod bound;
mod divergence;
mod termination;

use serde_json::{json, Value};
use thiserror::Error;

use crate::forest::build_forest;
use crate::syntax::{goal_to_string, Constraint, Program};

pub use bound::{bound_l, effective_cap, BoundParameters};
pub use divergence::{decide_divergence, decide_divergence_within, DivergenceResult, DivergenceVerdict, DivergenceWitness};
pub use termination::{
    decide_termination_existence, minimize_witness, TerminationOptions, TerminationResult, TerminationVerdict,
    DEFAULT_CAP,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error("rule `{0}` is not range-restricted; divergence is decided for range-restricted programs only")]
    NotRangeRestricted(String),
    #[error("rule `{0}` has more than one head; termination is decided for single-headed programs only")]
    NotSingleHeaded(String),
}

impl DivergenceVerdict {
    pub fn to_json(&self, goal: &[Constraint]) -> Value {
        let witness = self.witness.as_ref().map(|w| {
            json!({
                "trace": w.computation.to_trace(),
                "ancestor": w.ancestor,
                "descendant": w.descendant,
                "ancestor_config": w.computation.config_at(w.ancestor).map(ToString::to_string),
                "descendant_config": w.computation.config_at(w.descendant).map(ToString::to_string),
            })
        });
        json!({
            "analysis": "divergence",
            "semantics": "o",
            "goal": goal_to_string(goal),
            "result": self.result,
            "cap_used": Value::Null,
            "complete": true,
            "witness": witness,
        })
    }
}

impl TerminationVerdict {
    pub fn to_json(&self, p: &Program, goal: &[Constraint]) -> Value {
        let witness = match &self.witness {
            Some(w) => {
                let rep = build_forest(p, w).ok().map(|f| f.repetitiveness());
                json!({
                    "trace": w.to_trace(),
                    "final_config": w.last().to_string(),
                    "repetitiveness": rep,
                })
            }
            None => json!({ "cap": self.cap_used }),
        };
        json!({
            "analysis": "termination",
            "semantics": self.semantics.as_str(),
            "goal": goal_to_string(goal),
            "result": self.result,
            "cap_used": self.cap_used,
            "complete": self.complete,
            "complete_bound": self.complete_bound.to_string(),
            "parameters": self.params,
            "witness": witness,
        })
    }
}
