use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn chrdec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chrdec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn schema() -> jsonschema::Validator {
    let text = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schema/output.schema.json"))
        .expect("schema file");
    jsonschema::validator_for(&serde_json::from_str(&text).expect("schema is JSON")).expect("schema compiles")
}

fn assert_valid(v: &Value) {
    let s = schema();
    let errors: Vec<String> = s.iter_errors(v).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}\n{v:#}");
}

fn temp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("chrdec-{}-{name}", std::process::id()))
}

#[test]
fn four_rule_termination_is_terminating() {
    let o = chrdec(&[
        "analyze", "--program", &fixture("four_rules.chr"), "--goal", "c(X,Y)", "--analysis", "termination",
        "--semantics", "o", "--json",
    ]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["result"], "Terminating");
    assert_eq!(v["complete"], true);
    assert_valid(&v);
}

#[test]
fn divergence_requires_range_restriction() {
    let o = chrdec(&["analyze", "-p", &fixture("unrestricted.chr"), "-g", "p(a)", "--analysis", "divergence"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("range-restricted"));
}

#[test]
fn divergence_is_only_decided_under_abstract_semantics() {
    let o = chrdec(&["analyze", "-p", &fixture("propagate.chr"), "-g", "c", "--analysis", "divergence", "--semantics", "t"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn bound_prints_the_full_integer() {
    let o = chrdec(&["bound", "--program", &fixture("four_rules.chr"), "--goal", "c(X,Y)", "--json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!((v["u"].as_u64(), v["w"].as_u64(), v["r"].as_u64()), (Some(1), Some(2), Some(1)));
    assert_eq!(v["L"], "17043521");
    assert_eq!(v["effective_cap"], "17043521");
    assert_valid(&v);
    let t = json(&chrdec(&["bound", "-p", &fixture("four_rules.chr"), "-g", "c(X,Y)", "--semantics", "t", "--json"]));
    assert_eq!(t["effective_cap"], "34087042");
    let human = stdout(&chrdec(&["bound", "-p", &fixture("four_rules.chr"), "-g", "c(X,Y)"]));
    assert!(human.contains("L: 17043521"), "{human}");
}

#[test]
fn bound_without_goal() {
    let v = json(&chrdec(&["bound", "-p", &fixture("self_loop.chr"), "--json"]));
    assert_eq!(v["L"], "3");
    assert_valid(&v);
}

#[test]
fn small_cap_is_undecided() {
    let o = chrdec(&["analyze", "-p", &fixture("propagate.chr"), "-g", "c", "--analysis", "termination", "--semantics", "t", "--cap", "2", "--json"]);
    assert_eq!(code(&o), 2);
    let v = json(&o);
    assert_eq!(v["result"], "ExhaustedAtCap");
    assert_eq!(v["witness"]["cap"], 2);
    assert_valid(&v);
}

#[test]
fn self_loop_has_no_terminating_computation() {
    let o = chrdec(&["analyze", "-p", &fixture("self_loop.chr"), "-g", "c", "--analysis", "termination", "--json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["result"], "NoTerminating");
    assert_eq!(v["complete"], true);
    assert_eq!(v["cap_used"], 3);
    assert_valid(&v);
}

#[test]
fn input_errors_exit_one_with_location() {
    let o = chrdec(&["classify", "-p", &fixture("compound.chr")]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(err.contains("compound.chr:2:"), "{err}");
    assert_eq!(code(&chrdec(&["classify", "-p", "/nonexistent/x.chr"])), 1);
    assert_eq!(code(&chrdec(&["analyze", "-p", &fixture("self_loop.chr"), "-g", "c"])), 1);
    assert_eq!(code(&chrdec(&["frobnicate"])), 1);
    assert_eq!(code(&chrdec(&["run", "-p", &fixture("self_loop.chr"), "-g", "c(a,"])), 1);
}

#[test]
fn classify_reports_dialects() {
    let v = json(&chrdec(&["classify", "-p", &fixture("four_rules.chr"), "--json"]));
    assert_eq!(v["range_restricted"], true);
    assert_eq!(v["single_headed"], true);
    assert_eq!(v["propositional"], false);
    assert_valid(&v);
    let v = json(&chrdec(&["classify", "-p", &fixture("unrestricted.chr"), "--json"]));
    assert_eq!(v["range_restricted"], false);
}

#[test]
fn scripted_run_with_forest() {
    let o = chrdec(&["run", "-p", &fixture("four_rules.chr"), "-g", "c(X,Y)", "--script", "r1,r2,r3,r4", "--emit-forest", "--json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["status"], "final");
    assert_eq!(v["apply_steps"], 4);
    assert_eq!(v["forest"]["text"], "c(X,Y)#1^0\n  c(X,Y)#2^0\n    □\n  c(X,Y)#3^0\n    c(X,Y)#3^1\n      □\n");
    assert_valid(&v);
}

#[test]
fn truncated_run() {
    let v = json(&chrdec(&["run", "-p", &fixture("self_loop.chr"), "-g", "c", "--max-steps", "10", "--emit-forest", "--json"]));
    assert_eq!(v["status"], "truncated");
    assert_eq!(v["apply_steps"], 10);
    assert!(v["forest"]["error"].is_string());
    assert_valid(&v);
}

#[test]
fn unavailable_script_choice_is_an_input_error() {
    let o = chrdec(&["run", "-p", &fixture("four_rules.chr"), "-g", "c(X,Y)", "--script", "r4"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn outputs_are_deterministic() {
    let cases: [&[&str]; 3] = [
        &["run", "-p", &fixture("four_rules.chr"), "-g", "c(X,Y)", "--strategy", "random", "--seed", "9", "--max-steps", "20", "--json"],
        &["analyze", "-p", &fixture("four_rules.chr"), "-g", "c(X,Y)", "--analysis", "termination", "--semantics", "t", "--emit-forest", "--json"],
        &["corpus", "--seed", "4", "--size", "6", "--json"],
    ];
    for args in cases {
        let a = chrdec(args);
        let b = chrdec(args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_valid(&json(&a));
    }
}

#[test]
fn parallel_search_gives_the_same_verdict() {
    let base = ["analyze", "-p", &fixture("four_rules.chr"), "-g", "c(X,Y)", "--analysis", "termination", "--json"];
    let one = json(&chrdec(&base));
    let mut args = base.to_vec();
    args.extend(["--parallel", "3"]);
    let three = json(&chrdec(&args));
    assert_eq!(one["result"], three["result"]);
    assert_valid(&three);
}

/// Every scalar field of the JSON verdict appears as `key: value` in the text.
#[test]
fn human_output_carries_the_json_fields() {
    let args = ["analyze", "-p", &fixture("self_loop.chr"), "-g", "c", "--analysis", "termination"];
    let text = stdout(&chrdec(&args));
    let mut with_json = args.to_vec();
    with_json.push("--json");
    let v = json(&chrdec(&with_json));
    for (k, value) in v.as_object().expect("object") {
        let shown = match value {
            Value::String(s) => s.clone(),
            Value::Object(_) | Value::Array(_) => continue,
            other => other.to_string(),
        };
        assert!(text.contains(&format!("{k}: {shown}")), "{k} missing from\n{text}");
    }
}

#[test]
fn verify_checks_witnesses() {
    let term = temp("term.json");
    let o = chrdec(&["analyze", "-p", &fixture("four_rules.chr"), "-g", "c(X,Y)", "--analysis", "termination", "--json"]);
    std::fs::write(&term, &o.stdout).unwrap();
    let v = json(&chrdec(&["verify", "-p", &fixture("four_rules.chr"), "-w", term.to_str().unwrap(), "--json"]));
    assert_eq!(v["verified"], true);
    assert_eq!(v["claim"], "final");
    assert_valid(&v);

    let div = temp("div.json");
    let o = chrdec(&["analyze", "-p", &fixture("propagate.chr"), "-g", "c", "--analysis", "divergence", "--json"]);
    let mut w = json(&o);
    assert_eq!(w["result"], "Divergent");
    assert_valid(&w);
    std::fs::write(&div, serde_json::to_vec(&w).unwrap()).unwrap();
    let ok = chrdec(&["verify", "-p", &fixture("propagate.chr"), "-w", div.to_str().unwrap()]);
    assert_eq!(code(&ok), 0);

    w["witness"]["ancestor"] = w["witness"]["descendant"].clone();
    std::fs::write(&div, serde_json::to_vec(&w).unwrap()).unwrap();
    let bad = chrdec(&["verify", "-p", &fixture("propagate.chr"), "-w", div.to_str().unwrap(), "--json"]);
    assert_eq!(code(&bad), 1);
    assert_eq!(json(&bad)["verified"], false);

    w["witness"]["trace"]["steps"][1]["rule"] = Value::from("nope");
    std::fs::write(&div, serde_json::to_vec(&w).unwrap()).unwrap();
    let bad = chrdec(&["verify", "-p", &fixture("propagate.chr"), "-w", div.to_str().unwrap(), "--json"]);
    assert_eq!(code(&bad), 1);
    let _ = std::fs::remove_file(term);
    let _ = std::fs::remove_file(div);
}

#[test]
fn corpus_reports_agreement() {
    let o = chrdec(&["corpus", "--seed", "2", "--size", "10", "--json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["divergence"]["disagree"], 0);
    assert_eq!(v["termination"]["disagree"], 0);
    assert_valid(&v);
}

#[test]
fn schema_rejects_malformed_output() {
    let s = schema();
    assert!(!s.is_valid(&serde_json::json!({ "command": "bound", "u": 1 })));
    let mut v = json(&chrdec(&["classify", "-p", &fixture("self_loop.chr"), "--json"]));
    v["single_headed"] = Value::from("yes");
    assert!(!s.is_valid(&v));
}
