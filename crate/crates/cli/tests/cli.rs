use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn inputs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/inputs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evoverify"))
        .args(args)
        .current_dir(inputs())
        .env_remove("EVOVERIFY_MAX_STATES")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

// Compares JSON output with tests/golden/<name>.json. Set UPDATE_GOLDEN=1 to rewrite.
fn golden(name: &str, args: &[&str], expected_code: i32) {
    let o = run(args);
    assert_eq!(code(&o), expected_code, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    let got: serde_json::Value = serde_json::from_str(&stdout(&o)).expect("json output");
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.json"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(&got).unwrap() + "\n").unwrap();
    }
    let want: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(got, want, "golden {name}");
}

#[test]
fn bounded_adaptation_exit_codes() {
    let o = run(&["check", "ba", "err.ev", "--error", "^e", "--k", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("holds"));
    assert!(stdout(&o).contains("max_states=100000"));
    let o = run(&["check", "ba", "err.ev", "--error", "^e", "--k", "0"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("witness"));
}

#[test]
fn truncation_gives_unknown() {
    for args in [
        vec!["check", "ea", "unbounded.ev", "--error", "^e", "--max-states", "50"],
        vec!["check", "ba", "unbounded.ev", "--error", "^zz", "--k", "1", "--max-states", "50"],
        vec!["mc", "unbounded.ev", "--formula", "not ev ^zz", "--max-states", "50"],
    ] {
        let o = run(&args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(stdout(&o).contains("unknown"));
        assert!(stdout(&o).contains("max_states=50"));
    }
}

#[test]
fn env_var_sets_the_default_bound() {
    let o = Command::new(env!("CARGO_BIN_EXE_evoverify"))
        .args(["check", "ea", "unbounded.ev", "--error", "^e"])
        .current_dir(inputs())
        .env("EVOVERIFY_MAX_STATES", "20")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("max_states=20"));
}

#[test]
fn sequence_counterexample() {
    let o = run(&["choreo", "wf", "seq.ch"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("trace: b:t->u a:r->s √"));
    let o = run(&["choreo", "connected", "seq.ch"]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&run(&["choreo", "wf", "bsb.ch"])), 0);
    assert_eq!(code(&run(&["choreo", "connected", "bsb.ch"])), 0);
}

#[test]
fn true_formula_holds_everywhere() {
    let o = run(&["mc", "recover.ev", "--formula", "tt", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lts = run(&["lts", "recover.ev", "--json"]);
    let g: serde_json::Value = serde_json::from_str(&stdout(&lts)).unwrap();
    assert_eq!(v["sat"].as_array().unwrap().len(), g["states"].as_array().unwrap().len());
}

#[test]
fn formulas_from_files_and_schemas() {
    let from_file = run(&["mc", "recover.ev", "--formula", "cb2.phi", "--format", "json"]);
    let from_schema = run(&["mc", "recover.ev", "--schema", "cb", "--error", "^e", "--k", "2", "--format", "json"]);
    let a: serde_json::Value = serde_json::from_str(&stdout(&from_file)).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stdout(&from_schema)).unwrap();
    assert_eq!(a, b);
    let o = run(&["mc", "recover.ev", "--formula", "not ev ^e", "--classify"]);
    assert!(stdout(&o).contains("class: restricted_negation"));
}

#[test]
fn systems() {
    assert_eq!(code(&run(&["orch", "correct", "bsb.sys"])), 0);
    assert_eq!(code(&run(&["orch", "implements", "bsb.sys", "bsb.ch"])), 0);
    let o = run(&["choreo", "project", "bsb.ch", "--role", "Buyer"]);
    assert_eq!(stdout(&o).trim(), "Request!Seller ; Offer? ; Payment!Bank ; Receipt?");
}

#[test]
fn updates() {
    assert_eq!(code(&run(&["upd", "validate", "absb.ch"])), 0);
    let o = run(&["upd", "validate", "parallel_scopes.ch"]);
    assert_eq!(code(&o), 1);
    let o = run(&["upd", "simulate", "absb.ch", "--script", "visa.script"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("X:{Bank,Buyer}[VISAcode:Buyer->Bank ; VISAok:Bank->Buyer]"));
}

#[test]
fn usage_and_input_errors_exit_3() {
    assert_eq!(code(&run(&["frobnicate"])), 3);
    assert_eq!(code(&run(&["check", "ba", "err.ev", "--k", "1"])), 3);
    assert_eq!(code(&run(&["check", "ba", "missing.ev", "--error", "^e", "--k", "1"])), 3);
    assert_eq!(code(&run(&["parse", "seq.ch", "--kind", "process"])), 3);
    assert_eq!(code(&run(&["mc", "err.ev", "--formula", "ev"])), 3);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn scratch_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("dup.sys");
    std::fs::write(&p, "[a?]@r || [a?]@r").unwrap();
    let o = run(&["parse", p.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("r"));
    let q = dir.path().join("term.txt");
    std::fs::write(&q, "a[b.0] | a{0}.c.0").unwrap();
    let o = run(&["parse", q.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("\"process\""));
}

#[test]
fn threads_do_not_change_results() {
    let one = run(&["--threads", "1", "lts", "unbounded.ev", "--max-states", "200", "--json"]);
    let many = run(&["--threads", "4", "lts", "unbounded.ev", "--max-states", "200", "--json"]);
    assert_eq!(stdout(&one), stdout(&many));
}

#[test]
fn golden_json() {
    golden("check_ba", &["check", "ba", "recover.ev", "--error", "^e", "--k", "2", "--format", "json"], 0);
    golden("check_ea", &["check", "ea", "err.ev", "--error", "^e", "--format", "json"], 1);
    golden("mc", &["mc", "recover.ev", "--formula", "ev ^c", "--classify", "--format", "json"], 0);
    golden("lts", &["lts", "recover.ev", "--json"], 0);
    golden("choreo_wf", &["choreo", "wf", "seq.ch", "--format", "json"], 1);
    golden("choreo_connected", &["choreo", "connected", "seq.ch", "--format", "json"], 1);
    golden("choreo_project", &["choreo", "project", "bsb.ch", "--format", "json"], 0);
    golden("upd_validate", &["upd", "validate", "parallel_scopes.ch", "--format", "json"], 1);
    golden("upd_simulate", &["upd", "simulate", "absb.ch", "--script", "visa.script", "--format", "json"], 0);
}
