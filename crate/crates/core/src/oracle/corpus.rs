//! Seeded random instances and the differential report comparing the
//! deciders with [`explore`](super::explore).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{explore_with, Limits};
use crate::decide::{
    decide_divergence_within, decide_termination_existence, DivergenceResult, TerminationOptions, TerminationResult,
};
use crate::engine::Semantics;
use crate::syntax::{parse_goal, parse_program, Constraint, Program};

/// Grammar limits for generated programs.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub predicates: &'static [(&'static str, usize)],
    pub constants: &'static [&'static str],
    /// Head variables drawn from `X`, `Y`.
    pub variables: bool,
    /// Body variables absent from the head (breaks range restriction).
    pub body_locals: bool,
    pub guards: bool,
    pub equations: bool,
    pub max_rules: usize,
    pub max_heads: usize,
    pub max_goal: usize,
    pub ground_goal: bool,
}

/// Ground range-restricted programs: no variables anywhere.
pub const GROUND: Shape = Shape {
    predicates: &[("p", 1), ("q", 1), ("r", 0)],
    constants: &["a", "b"],
    variables: false,
    body_locals: false,
    guards: false,
    equations: true,
    max_rules: 3,
    max_heads: 2,
    max_goal: 3,
    ground_goal: true,
};

/// Range-restricted programs with head variables and guards.
pub const RANGE_RESTRICTED: Shape = Shape {
    predicates: &[("p", 1), ("q", 0)],
    constants: &["a", "b"],
    variables: true,
    body_locals: false,
    guards: true,
    equations: true,
    max_rules: 2,
    max_heads: 2,
    max_goal: 3,
    ground_goal: true,
};

/// Single-headed propositional programs.
pub const PROPOSITIONAL: Shape = Shape {
    predicates: &[("a", 0), ("b", 0), ("c", 0)],
    constants: &[],
    variables: false,
    body_locals: false,
    guards: false,
    equations: false,
    max_rules: 3,
    max_heads: 1,
    max_goal: 2,
    ground_goal: true,
};

/// Single-headed unary programs over one constant with ground goals.
pub const UNARY: Shape = Shape {
    predicates: &[("p", 1), ("q", 1)],
    constants: &["a"],
    variables: true,
    body_locals: false,
    guards: false,
    equations: true,
    max_rules: 3,
    max_heads: 1,
    max_goal: 2,
    ground_goal: true,
};

/// Single-headed programs with binary constraints, guards and fresh variables.
pub const RICH: Shape = Shape {
    predicates: &[("c", 2), ("d", 1)],
    constants: &["0", "1"],
    variables: true,
    body_locals: true,
    guards: true,
    equations: true,
    max_rules: 4,
    max_heads: 1,
    max_goal: 2,
    ground_goal: false,
};

#[derive(Clone, Debug)]
pub struct Instance {
    pub source: String,
    pub goal_text: String,
    pub program: Program,
    pub goal: Vec<Constraint>,
}

fn term(rng: &mut ChaCha8Rng, pool: &[&str]) -> String {
    pool.choose(rng).map(|s| s.to_string()).unwrap_or_else(|| "a".into())
}

fn atom(rng: &mut ChaCha8Rng, shape: &Shape, pool: &[&str]) -> String {
    let &(name, arity) = shape.predicates.choose(rng).expect("predicates");
    if arity == 0 {
        return name.to_string();
    }
    let args: Vec<String> = (0..arity).map(|_| term(rng, pool)).collect();
    format!("{name}({})", args.join(","))
}

/// A random program of the given shape.
pub fn program_text(rng: &mut ChaCha8Rng, shape: &Shape) -> String {
    let n = rng.gen_range(1..=shape.max_rules);
    let mut rules = Vec::new();
    for i in 0..n {
        let mut head_pool: Vec<&str> = shape.constants.to_vec();
        if shape.variables {
            head_pool.extend(["X", "Y"]);
        }
        let heads = rng.gen_range(1..=shape.max_heads);
        let head_atoms: Vec<String> = (0..heads).map(|_| atom(rng, shape, &head_pool)).collect();
        let used: Vec<&str> = ["X", "Y"]
            .into_iter()
            .filter(|v| head_atoms.iter().any(|a| a.contains(v)))
            .collect();
        let mut body_pool: Vec<&str> = shape.constants.to_vec();
        body_pool.extend(used.iter().copied());
        if shape.body_locals {
            body_pool.push("W");
        }
        let head = match (heads, rng.gen_range(0..3)) {
            (1, 0) => format!("{} ==>", head_atoms[0]),
            (1, _) => format!("{} <=>", head_atoms[0]),
            (_, 0) => format!("{} ==>", head_atoms.join(", ")),
            (_, 1) => format!("{} \\ {} <=>", head_atoms[0], head_atoms[1..].join(", ")),
            _ => format!("{} <=>", head_atoms.join(", ")),
        };
        let mut guard = String::new();
        if shape.guards && !used.is_empty() && rng.gen_bool(0.3) {
            let mut gpool: Vec<&str> = shape.constants.to_vec();
            gpool.extend(used.iter().copied());
            guard = format!("{} = {} | ", term(rng, &used), term(rng, &gpool));
        }
        let items = rng.gen_range(0..=2);
        let mut body: Vec<String> = Vec::new();
        for _ in 0..items {
            if shape.equations && !body_pool.is_empty() && rng.gen_bool(0.3) {
                body.push(format!("{} = {}", term(rng, &body_pool), term(rng, &body_pool)));
            } else {
                body.push(atom(rng, shape, &body_pool));
            }
        }
        let body = if body.is_empty() { "true".to_string() } else { body.join(", ") };
        rules.push(format!("r{} @ {head} {guard}{body}.", i + 1));
    }
    rules.join("\n")
}

pub fn goal_text(rng: &mut ChaCha8Rng, shape: &Shape) -> String {
    let mut pool: Vec<&str> = shape.constants.to_vec();
    if !shape.ground_goal {
        pool.extend(["A", "B"]);
    }
    let n = rng.gen_range(1..=shape.max_goal);
    (0..n).map(|_| atom(rng, shape, &pool)).collect::<Vec<_>>().join(", ")
}

pub fn instance(rng: &mut ChaCha8Rng, shape: &Shape) -> Instance {
    let source = program_text(rng, shape);
    let goal_text = goal_text(rng, shape);
    let program = parse_program(&source).expect("generated programs parse");
    let goal = parse_goal(&goal_text).expect("generated goals parse");
    Instance {
        source,
        goal_text,
        program,
        goal,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Comparison {
    pub agree: usize,
    pub disagree: usize,
    /// The oracle hit its limits without a definite answer.
    pub inconclusive: usize,
    /// The decider ran out of its work budget.
    pub skipped: usize,
    pub invalid_witnesses: usize,
    pub mismatches: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusReport {
    pub seed: u64,
    pub instances: usize,
    pub divergence: Comparison,
    pub termination: Comparison,
}

pub const ORACLE_LIMITS: Limits = Limits {
    max_states: 2000,
    max_depth: 60,
    max_store: 8,
};
pub const DECIDER_WORK: u64 = 20_000;

/// Decider against oracle on one ground range-restricted instance.
pub fn compare_divergence(inst: &Instance, cmp: &mut Comparison) {
    let Some(v) = decide_divergence_within(&inst.program, &inst.goal, Some(DECIDER_WORK as usize))
        .expect("range-restricted")
    else {
        cmp.skipped += 1;
        return;
    };
    if let Some(w) = &v.witness {
        if !w.verify(&inst.program) {
            cmp.invalid_witnesses += 1;
        }
    }
    let r = explore_with(&inst.program, &inst.goal, Semantics::Abstract, ORACLE_LIMITS);
    if r.truncated && !r.cycle_found {
        cmp.inconclusive += 1;
        return;
    }
    if r.cycle_found == (v.result == DivergenceResult::Divergent) {
        cmp.agree += 1;
    } else {
        cmp.disagree += 1;
        cmp.mismatches.push(format!(
            "divergence: {} ?- {}: decider {:?}, oracle cycle={}",
            inst.source.replace('\n', " "),
            inst.goal_text,
            v.result,
            r.cycle_found
        ));
    }
}

/// Decider (at the complete bound) against oracle on one single-headed instance.
pub fn compare_termination(inst: &Instance, sem: Semantics, cmp: &mut Comparison) {
    let opts = TerminationOptions {
        complete: true,
        max_work: Some(DECIDER_WORK),
        ..TerminationOptions::default()
    };
    let v = decide_termination_existence(&inst.program, &inst.goal, sem, &opts).expect("single-headed");
    if v.budget_exhausted {
        cmp.skipped += 1;
        return;
    }
    if let Some(w) = &v.witness {
        if w.replay(&inst.program).is_err() || !w.is_final(&inst.program) {
            cmp.invalid_witnesses += 1;
        }
    }
    let r = explore_with(&inst.program, &inst.goal, sem, ORACLE_LIMITS);
    if r.truncated && !r.terminating_found {
        cmp.inconclusive += 1;
        return;
    }
    let decided = match v.result {
        TerminationResult::Terminating => Some(true),
        TerminationResult::NoTerminating => Some(false),
        TerminationResult::ExhaustedAtCap => None,
    };
    if decided == Some(r.terminating_found) {
        cmp.agree += 1;
    } else {
        cmp.disagree += 1;
        cmp.mismatches.push(format!(
            "termination ({}): {} ?- {}: decider {:?}, oracle terminating={}",
            sem.as_str(),
            inst.source.replace('\n', " "),
            inst.goal_text,
            v.result,
            r.terminating_found
        ));
    }
}

/// `n` divergence instances and `n` termination instances from `seed`.
pub fn run_corpus(seed: u64, n: usize) -> CorpusReport {
    let mut g = rng(seed);
    let mut divergence = Comparison::default();
    let mut termination = Comparison::default();
    for _ in 0..n {
        let inst = instance(&mut g, &GROUND);
        compare_divergence(&inst, &mut divergence);
    }
    for i in 0..n {
        let (shape, sem) = match i % 4 {
            0 => (&UNARY, Semantics::Abstract),
            1 => (&PROPOSITIONAL, Semantics::Theoretical),
            _ => (&PROPOSITIONAL, Semantics::Abstract),
        };
        let inst = instance(&mut g, shape);
        compare_termination(&inst, sem, &mut termination);
    }
    CorpusReport {
        seed,
        instances: n,
        divergence,
        termination,
    }
}
