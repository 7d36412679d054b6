//! `chrdec`: classify CHR(C) programs, run them, and decide divergence or
//! the existence of a terminating computation.

mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrdec::decide::{
    decide_divergence, decide_termination_existence, effective_cap, BoundParameters, DecideError, TerminationOptions,
    TerminationResult,
};
use chrdec::engine::{run, Computation, RunStatus, ScriptChoice, Semantics, Strategy, Trace};
use chrdec::forest::build_forest;
use chrdec::oracle::corpus::run_corpus;
use chrdec::syntax::{goal_to_string, parse_goal, parse_program, Constraint, Program};
use chrdec::wqo::leq;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

/// Exit status of a completed command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Done = 0,
    Error = 1,
    Undecided = 2,
    Precondition = 3,
}

#[derive(Parser, Debug)]
#[command(name = "chrdec", version, about = "Termination analyses for CHR over constants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the dialect flags of a program.
    Classify(ProgramArgs),
    /// Run a goal and print the computation.
    Run(RunArgs),
    /// Decide divergence or the existence of a terminating computation.
    Analyze(AnalyzeArgs),
    /// Print the bound parameters and the complete search cap.
    Bound(BoundArgs),
    /// Compare the deciders with the brute-force explorer on random instances.
    Corpus(CorpusArgs),
    /// Replay a witness and re-check its claim.
    #[command(hide = true)]
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct ProgramArgs {
    #[arg(long, short)]
    program: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SemanticsArg {
    O,
    T,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::O => Semantics::Abstract,
            SemanticsArg::T => Semantics::Theoretical,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    First,
    Random,
    Script,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Analysis {
    Divergence,
    Termination,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, short)]
    program: PathBuf,
    #[arg(long, short)]
    goal: String,
    #[arg(long, value_enum, default_value = "o")]
    semantics: SemanticsArg,
    #[arg(long, value_enum, default_value = "first")]
    strategy: StrategyArg,
    /// Comma-separated Apply choices such as `r1,r2@3`.
    #[arg(long)]
    script: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of Apply transitions.
    #[arg(long, default_value_t = 1000)]
    max_steps: usize,
    #[arg(long)]
    emit_forest: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long, short)]
    program: PathBuf,
    #[arg(long, short)]
    goal: String,
    #[arg(long, value_enum)]
    analysis: Analysis,
    #[arg(long, value_enum, default_value = "o")]
    semantics: SemanticsArg,
    /// Largest repetitiveness level searched.
    #[arg(long)]
    cap: Option<u64>,
    /// Search up to the complete bound.
    #[arg(long)]
    complete: bool,
    /// Worker threads for branch exploration.
    #[arg(long, value_name = "N")]
    parallel: Option<usize>,
    #[arg(long)]
    emit_forest: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long, short)]
    program: PathBuf,
    #[arg(long, short)]
    goal: Option<String>,
    #[arg(long, value_enum, default_value = "o")]
    semantics: SemanticsArg,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Instances per analysis.
    #[arg(long, default_value_t = 100)]
    size: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, short)]
    program: PathBuf,
    /// JSON output of `analyze` or `run`.
    #[arg(long, short)]
    witness: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Debug)]
struct Failure {
    status: Status,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            status: Status::Error,
            message: message.into(),
        }
    }
}

impl From<DecideError> for Failure {
    fn from(e: DecideError) -> Self {
        Failure {
            status: Status::Precondition,
            message: e.to_string(),
        }
    }
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    parse_program(&text).map_err(|e| Failure::input(format!("{}:{e}", path.display())))
}

fn load_goal(p: &Program, text: &str) -> Result<(Program, Vec<Constraint>), Failure> {
    let goal = parse_goal(text).map_err(|e| Failure::input(format!("goal:{e}")))?;
    let linked = p.link(&goal).map_err(|e| Failure::input(format!("goal:{e}")))?;
    Ok((linked, goal))
}

fn emit(value: &Value, json_out: bool) {
    if json_out {
        println!("{}", serde_json::to_string_pretty(value).expect("JSON values serialize"));
    } else {
        print!("{}", render::human(value));
    }
}

fn forest_value(p: &Program, c: &Computation) -> Value {
    match build_forest(p, c) {
        Ok(f) => json!({ "text": f.to_text(), "tree": f.to_json(), "repetitiveness": f.repetitiveness() }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn classify(args: &ProgramArgs) -> Result<Status, Failure> {
    let p = load_program(&args.program)?;
    let f = p.classify();
    let value = json!({
        "command": "classify",
        "rules": p.rules.len(),
        "range_restricted": f.range_restricted,
        "single_headed": f.single_headed,
        "propositional": f.propositional,
    });
    emit(&value, args.json);
    Ok(Status::Done)
}

fn parse_script(text: &str) -> Result<Vec<ScriptChoice>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e: String| Failure::input(format!("--script: {e}"))))
        .collect()
}

fn run_command(args: &RunArgs) -> Result<Status, Failure> {
    let p = load_program(&args.program)?;
    let (p, goal) = load_goal(&p, &args.goal)?;
    let sem: Semantics = args.semantics.into();
    let strategy = match (args.strategy, &args.script) {
        (StrategyArg::Script, Some(s)) => Strategy::Script(parse_script(s)?),
        (StrategyArg::Script, None) => return Err(Failure::input("--strategy script needs --script")),
        (_, Some(s)) => Strategy::Script(parse_script(s)?),
        (StrategyArg::First, None) => Strategy::First,
        (StrategyArg::Random, None) => Strategy::Random(args.seed),
    };
    let r = run(&p, &goal, sem, &strategy, args.max_steps).map_err(|e| Failure::input(e.to_string()))?;
    let mut value = json!({
        "command": "run",
        "semantics": sem.as_str(),
        "goal": goal_to_string(&goal),
        "status": r.status,
        "apply_steps": r.computation.apply_count(),
        "final_config": r.computation.last().to_string(),
        "trace": r.computation.to_trace(),
    });
    if args.emit_forest {
        value["forest"] = match r.status {
            RunStatus::Final => forest_value(&p, &r.computation),
            RunStatus::Truncated => json!({ "error": "the computation was truncated" }),
        };
    }
    emit(&value, args.json);
    Ok(Status::Done)
}

fn analyze(args: &AnalyzeArgs) -> Result<Status, Failure> {
    let p = load_program(&args.program)?;
    let (p, goal) = load_goal(&p, &args.goal)?;
    let sem: Semantics = args.semantics.into();
    match args.analysis {
        Analysis::Divergence => {
            if sem == Semantics::Theoretical {
                return Err(Failure {
                    status: Status::Precondition,
                    message: "divergence is decided under ω_o only".into(),
                });
            }
            let v = decide_divergence(&p, &goal)?;
            let mut value = v.to_json(&goal);
            value["command"] = json!("analyze");
            emit(&value, args.json);
            Ok(Status::Done)
        }
        Analysis::Termination => {
            let threads = args.parallel.unwrap_or(1).max(1);
            let opts = TerminationOptions {
                cap: args.cap,
                complete: args.complete,
                parallel: threads > 1,
                ..TerminationOptions::default()
            };
            let decide = || decide_termination_existence(&p, &goal, sem, &opts);
            let v = if threads > 1 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Failure::input(e.to_string()))?
                    .install(decide)?
            } else {
                decide()?
            };
            let mut value = v.to_json(&p, &goal);
            value["command"] = json!("analyze");
            if args.emit_forest {
                if let Some(w) = &v.witness {
                    value["forest"] = forest_value(&p, w);
                }
            }
            emit(&value, args.json);
            Ok(match v.result {
                TerminationResult::ExhaustedAtCap => Status::Undecided,
                _ => Status::Done,
            })
        }
    }
}

fn bound(args: &BoundArgs) -> Result<Status, Failure> {
    let p = load_program(&args.program)?;
    let (p, goal) = match &args.goal {
        Some(g) => load_goal(&p, g)?,
        None => (p, Vec::new()),
    };
    let sem: Semantics = args.semantics.into();
    let params = BoundParameters::of(&p, &goal);
    let value = json!({
        "command": "bound",
        "semantics": sem.as_str(),
        "u": params.u,
        "w": params.w,
        "r": params.r,
        "L": chrdec::decide::bound_l(params.u, params.w).to_string(),
        "effective_cap": effective_cap(params, sem).to_string(),
    });
    emit(&value, args.json);
    Ok(Status::Done)
}

fn corpus(args: &CorpusArgs) -> Result<Status, Failure> {
    let r = run_corpus(args.seed, args.size);
    let mut value = serde_json::to_value(&r).expect("reports serialize");
    value["command"] = json!("corpus");
    emit(&value, args.json);
    Ok(if r.divergence.disagree + r.termination.disagree == 0 {
        Status::Done
    } else {
        Status::Error
    })
}

fn verify(args: &VerifyArgs) -> Result<Status, Failure> {
    let p = load_program(&args.program)?;
    let text = fs::read_to_string(&args.witness).map_err(|e| Failure::input(format!("{}: {e}", args.witness.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", args.witness.display())))?;
    let witness = if value.get("command") == Some(&json!("run")) {
        &value
    } else {
        value
            .get("witness")
            .filter(|w| w.get("trace").is_some())
            .ok_or_else(|| Failure::input("the input carries no witness trace"))?
    };
    let trace: Trace = serde_json::from_value(witness["trace"].clone()).map_err(|e| Failure::input(format!("trace: {e}")))?;
    let (p, goal) = load_goal(&p, &trace.goal)?;
    let (claim, verified, detail) = match Computation::from_trace(&p, &goal, &trace) {
        Err(e) => ("replay", false, e.to_string()),
        Ok(c) => match value.get("analysis").and_then(Value::as_str) {
            Some("divergence") => {
                let index = |k: &str| witness.get(k).and_then(Value::as_u64).map(|i| i as usize);
                match (index("ancestor"), index("descendant")) {
                    (Some(a), Some(d)) => {
                        let ok = a < d
                            && matches!((c.config_at(a), c.config_at(d)), (Some(x), Some(y)) if leq(x, y));
                        ("ancestor ≤ descendant", ok, format!("configurations {a} and {d}"))
                    }
                    _ => ("ancestor ≤ descendant", false, "missing indices".to_string()),
                }
            }
            Some("termination") => ("final", c.is_final(&p), c.last().to_string()),
            _ => ("replay", true, format!("{} steps", c.steps.len())),
        },
    };
    let out = json!({
        "command": "verify",
        "claim": claim,
        "verified": verified,
        "detail": detail,
    });
    emit(&out, args.json);
    Ok(if verified { Status::Done } else { Status::Error })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Error as u8 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Classify(a) => classify(a),
        Command::Run(a) => run_command(a),
        Command::Analyze(a) => analyze(a),
        Command::Bound(a) => bound(a),
        Command::Corpus(a) => corpus(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.status as u8)
        }
    }
}
