use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use chrdec::decide::{
    bound_l, decide_divergence, decide_termination_existence, DivergenceResult, TerminationOptions, TerminationResult,
};
use chrdec::engine::{is_final, run, Computation, Configuration, RunStatus, Semantics, Strategy};
use chrdec::forest::{build_forest, compress, max_sequence_length_check, NodeLabel};
use chrdec::oracle::corpus::{self, run_corpus, CorpusReport};
use chrdec::oracle::{check_strong_compatibility, enumerate_strictly_increasing};
use chrdec::syntax::{parse_goal, parse_program, Program};
use num_bigint::BigUint;

const FOUR_RULES: &str = "r1 @ c(X,Y) <=> c(X,Y),c(X,Y).
r2 @ c(X,Y) <=> X = 0.
r3 @ c(0,Y) ==> Y = 0.
r4 @ c(0,0) <=> true.";

const CORPUS_SEED: u64 = 1;
const CORPUS_SIZE: usize = 300;
const DEFINITIVE: usize = 200;

/// Criteria that cannot hold as stated; each must fail for the recorded reason.
const UNATTAINABLE: &[&str] = &["C7"];

struct Outcome {
    id: &'static str,
    pass: bool,
    /// Everything except an unattainable clause holds.
    sound: bool,
    detail: String,
}

struct Checks {
    failures: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks { failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn outcome(self, id: &'static str, summary: String) -> Outcome {
        let pass = self.failures.is_empty();
        let detail = if pass { summary } else { format!("{summary}; failed: {}", self.failures.join("; ")) };
        Outcome {
            id,
            pass,
            sound: pass,
            detail,
        }
    }
}

fn program(text: &str) -> Program {
    parse_program(text).expect("program parses")
}

fn scripted(p: &Program, goal: &str, script: &[&str], sem: Semantics) -> Computation {
    let choices = script.iter().map(|s| s.parse().expect("script choice")).collect();
    let goal = parse_goal(goal).expect("goal parses");
    run(p, &goal, sem, &Strategy::Script(choices), 100).expect("script applies").computation
}

fn c1_worked_example() -> Outcome {
    let mut c = Checks::new();
    let p = program(FOUR_RULES);
    let delta = scripted(&p, "c(X,Y)", &["r1", "r2", "r3", "r4"], Semantics::Abstract);
    c.check(delta.replay(&p).is_ok() && delta.is_final(&p), "scripted run is not a terminating computation");
    let Ok(f) = build_forest(&p, &delta) else {
        c.check(false, "forest construction failed");
        return c.outcome("C1", String::new());
    };
    let expected = "c(X,Y)#1^0\n  c(X,Y)#2^0\n    □\n  c(X,Y)#3^0\n    c(X,Y)#3^1\n      □\n";
    c.check(f.to_text() == expected, format!("tree {:?}", f.to_text()));
    c.check(f.len() == 6 && f.box_count() == 2, "node or box count");
    let seqs: Vec<String> = (0..f.len())
        .filter(|&n| f.label(n) != &NodeLabel::Box)
        .map(|n| f.node_sequence(n).to_string())
        .collect();
    let want = ["⟨true, X=0∧Y=0⟩", "⟨true, X=0⟩", "⟨X=0, X=0∧Y=0⟩", "⟨X=0∧Y=0, X=0∧Y=0⟩"];
    c.check(seqs == want, format!("sequences {seqs:?}"));
    c.outcome("C1", format!("forest of 6 nodes with 2 boxes, sequences {}", seqs.join(" ")))
}

fn c2_bound_formula() -> Outcome {
    let mut c = Checks::new();
    c.check(bound_l(1, 1) == BigUint::from(85u32), "bound_L(1,1)");
    c.check(bound_l(2, 1) == BigUint::from(585u32), "bound_L(2,1)");
    let mut counts = Vec::new();
    for (u, w) in [(0, 0), (1, 0), (1, 1)] {
        let start = Instant::now();
        let n = enumerate_strictly_increasing(u, w).expect("within enumeration limits");
        let took = start.elapsed();
        c.check(BigUint::from(n) <= bound_l(u, w), format!("count {n} exceeds bound_L({u},{w})"));
        if (u, w) == (1, 1) {
            c.check(took < Duration::from_secs(10), format!("(1,1) enumeration took {took:?}"));
        }
        counts.push(format!("({u},{w}): {n} ≤ {}", bound_l(u, w)));
    }
    c.outcome("C2", format!("bound_L(1,1)=85, bound_L(2,1)=585; {}", counts.join(", ")))
}

fn c3_sequence_lengths() -> Outcome {
    let mut c = Checks::new();
    let (mut computations, mut nodes, mut attempts) = (0usize, 0usize, 0u64);
    let mut g = corpus::rng(3);
    while computations < 1000 && attempts < 20_000 {
        attempts += 1;
        let inst = corpus::instance(&mut g, &corpus::RICH);
        let sem = if attempts % 2 == 0 { Semantics::Theoretical } else { Semantics::Abstract };
        let r = run(&inst.program, &inst.goal, sem, &Strategy::Random(attempts), 30).expect("random run");
        if r.status != RunStatus::Final {
            continue;
        }
        computations += 1;
        let f = build_forest(&inst.program, &r.computation).expect("final single-headed computation");
        for n in 0..f.len() {
            let Some(atom) = f.label(n).atom() else { continue };
            nodes += 1;
            let x: BTreeSet<_> = atom.vars().cloned().collect();
            let s = f.node_sequence(n);
            if !max_sequence_length_check(&s, &x) || !s.is_strictly_increasing(&x) {
                c.check(false, format!("{} ?- {}: node {} has {s}", inst.source, inst.goal_text, f.label(n)));
            }
        }
    }
    c.check(computations >= 1000, format!("only {computations} terminating computations"));
    c.outcome("C3", format!("{computations} terminating computations, {nodes} node sequences, 0 violations"))
}

fn definitive(report: &corpus::Comparison) -> usize {
    report.agree + report.disagree
}

fn c4_divergence(report: &CorpusReport) -> Outcome {
    let mut c = Checks::new();
    let d = &report.divergence;
    c.check(d.disagree == 0, format!("disagreements {:?}", d.mismatches));
    c.check(d.invalid_witnesses == 0, "invalid witnesses");
    c.check(definitive(d) >= DEFINITIVE, format!("only {} definitive comparisons", definitive(d)));
    for (text, goal, want) in [
        ("p(X) <=> p(X).", "p(a)", DivergenceResult::Divergent),
        ("p(X) <=> true.", "p(a)", DivergenceResult::AllFinite),
        ("c ==> c.", "c", DivergenceResult::Divergent),
    ] {
        let p = program(text);
        let v = decide_divergence(&p, &parse_goal(goal).unwrap()).expect("range-restricted");
        c.check(v.result == want, format!("{text} gave {:?}", v.result));
        if let Some(w) = &v.witness {
            c.check(w.verify(&p), format!("{text} witness does not verify"));
        }
    }
    c.outcome(
        "C4",
        format!(
            "{} ground instances: {} agree, {} inconclusive, {} over budget; 3 hand cases",
            report.instances, d.agree, d.inconclusive, d.skipped
        ),
    )
}

fn c5_termination(report: &CorpusReport) -> Outcome {
    let mut c = Checks::new();
    let t = &report.termination;
    c.check(t.disagree == 0, format!("disagreements {:?}", t.mismatches));
    c.check(t.invalid_witnesses == 0, "invalid witnesses");
    c.check(definitive(t) >= DEFINITIVE, format!("only {} definitive comparisons", definitive(t)));
    let p = program(FOUR_RULES);
    let goal = parse_goal("c(X,Y)").unwrap();
    for sem in [Semantics::Abstract, Semantics::Theoretical] {
        let v = decide_termination_existence(&p, &goal, sem, &TerminationOptions::default()).unwrap();
        c.check(v.result == TerminationResult::Terminating, format!("{sem}: {:?}", v.result));
        let w = v.witness.as_ref();
        c.check(w.is_some_and(|w| w.replay(&p).is_ok() && w.is_final(&p)), "witness does not replay to a final configuration");
    }
    let p = program("c <=> c.");
    let v = decide_termination_existence(&p, &parse_goal("c").unwrap(), Semantics::Abstract, &TerminationOptions::default()).unwrap();
    c.check(v.result == TerminationResult::NoTerminating && v.complete, format!("c <=> c gave {:?}", v.result));
    c.outcome(
        "C5",
        format!(
            "{} single-headed instances: {} agree, {} inconclusive, {} over budget; c <=> c NoTerminating at m={}",
            report.instances, t.agree, t.inconclusive, t.skipped, v.cap_used
        ),
    )
}

fn c6_strong_compatibility() -> Outcome {
    let mut c = Checks::new();
    let mut g = corpus::rng(6);
    let (mut programs, mut configurations, mut checked) = (0, 0, 0);
    while programs < 50 {
        let inst = corpus::instance(&mut g, &corpus::RANGE_RESTRICTED);
        programs += 1;
        let r = check_strong_compatibility(&inst.program, 4);
        configurations += r.configurations;
        checked += r.checked;
        for ce in r.counterexamples.iter().take(3) {
            c.check(false, format!("{}: {ce}", inst.source));
        }
    }
    c.outcome(
        "C6",
        format!("{programs} programs, {configurations} configurations, {checked} step pairs, 0 counterexamples"),
    )
}

/// As stated, the criterion expects the ω_t run of `c ==> c` to stop after
/// one step. Each firing adds a fresh `c` with a new identifier, whose own
/// token is not in the history, so the ω_t run never stops.
fn c7_separation() -> Outcome {
    let mut c = Checks::new();
    let p = program("r @ c ==> c.");
    let goal = parse_goal("c").unwrap();
    let v = decide_divergence(&p, &goal).unwrap();
    c.check(v.result == DivergenceResult::Divergent, "ω_o is not divergent");

    // the history blocks refiring on c#1 itself
    let once = run(&p, &goal, Semantics::Theoretical, &Strategy::First, 1).unwrap().computation;
    let after = once.last();
    let refires = chrdec::engine::apply_successors(&p, after, Semantics::Theoretical)
        .iter()
        .any(|(l, _)| l.matched_ids() == vec![1]);
    // ⟨∅, {c#1}, true, {[1, r]}⟩
    let mut blocked = after.clone();
    blocked.goal.clear();
    blocked.store.retain(|&id, _| id == 1);
    let blocked_final = is_final(&p, &blocked, Semantics::Theoretical);
    let mut abstract_blocked: Configuration = blocked.clone();
    abstract_blocked.history = None;
    let abstract_final = is_final(&p, &abstract_blocked, Semantics::Abstract);
    let history_ok = !refires && blocked_final && !abstract_final;

    let stated = once.is_final(&p);
    let t = decide_termination_existence(
        &p,
        &goal,
        Semantics::Theoretical,
        &TerminationOptions {
            complete: true,
            ..TerminationOptions::default()
        },
    )
    .unwrap();
    c.check(stated, format!("ω_t run after one step ends in {after}, which is not final"));
    let summary = format!(
        "ω_o Divergent; ω_t history blocks refiring on c#1: {history_ok}; ω_t has no terminating computation ({:?}, complete={})",
        t.result, t.complete
    );
    let mut out = c.outcome("C7", summary);
    out.sound = v.result == DivergenceResult::Divergent
        && history_ok
        && t.result == TerminationResult::NoTerminating
        && t.complete;
    out
}

fn c8_compression(report: &CorpusReport) -> Outcome {
    let mut c = Checks::new();
    let p = program("r1 @ c(X) <=> c(X). r2 @ c(X) <=> true.");
    let delta = scripted(&p, "c(X)", &["r1", "r2"], Semantics::Abstract);
    let f = build_forest(&p, &delta).unwrap();
    c.check(f.repetitiveness() == (2, 1), format!("input is {:?}", f.repetitiveness()));
    let root = f.roots[0];
    let child = f.nodes[root].children[0];
    match compress(&p, &delta, root, child) {
        Ok(d) => {
            c.check(d.replay(&p).is_ok() && d.is_final(&p), "compressed computation is not terminating");
            let rep = build_forest(&p, &d).map(|f| f.repetitiveness());
            c.check(rep == Ok((1, 1)), format!("compressed repetitiveness {rep:?}"));
        }
        Err(e) => c.check(false, format!("compress: {e}")),
    }
    c.check(report.termination.invalid_witnesses == 0, "minimized corpus witness is invalid");
    c.outcome(
        "C8",
        format!("(2,1) → (1,1) in one step; {} corpus witnesses all valid", report.termination.agree),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let report = run_corpus(CORPUS_SEED, CORPUS_SIZE);
    let outcomes = [
        c1_worked_example(),
        c2_bound_formula(),
        c3_sequence_lengths(),
        c4_divergence(&report),
        c5_termination(&report),
        c6_strong_compatibility(),
        c7_separation(),
        c8_compression(&report),
    ];
    let mut unexpected = 0;
    for o in &outcomes {
        let expected_failure = UNATTAINABLE.contains(&o.id);
        let tag = match (o.pass, expected_failure) {
            (true, _) => "PASS",
            (false, true) => "FAIL (unattainable as stated)",
            (false, false) => "FAIL",
        };
        println!("{} {tag}: {}", o.id, o.detail);
        let as_recorded = if expected_failure { !o.pass && o.sound } else { o.pass };
        if !as_recorded {
            unexpected += 1;
        }
    }
    println!("acceptance finished in {:.1?}", start.elapsed());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria did not behave as recorded");
        ExitCode::FAILURE
    }
}
