use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use credal_audit::replay::{fail_witnesses, replay_plan};
use serde_json::Value;
use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_credal-audit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("golden/expected_matrix.json")
}

fn small_audit(dir: &Path, name: &str, rules: &str) -> (Output, PathBuf) {
    let out = dir.join(name);
    let g = golden();
    let o = run(&[
        "audit",
        "--rules",
        rules,
        "--max-atoms",
        "2",
        "--grid",
        "2",
        "--family-depth",
        "5",
        "--out",
        out.to_str().unwrap(),
        "--expect",
        g.to_str().unwrap(),
    ]);
    (o, out)
}

#[test]
fn subset_update_lists_three_measures() {
    let o = run(&["update", "--rule", "subset", "--space", r#"["a","b","c"]"#, "--measure", "uniform", "--evidence", r#"["a","b"]"#]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut measures: Vec<&str> = text.lines().filter_map(|l| l.strip_prefix("measure ")).collect();
    measures.sort();
    assert_eq!(
        measures,
        vec![
            r#"{"a":"0/1","b":"1/1","c":"0/1"}"#,
            r#"{"a":"1/1","b":"0/1","c":"0/1"}"#,
            r#"{"a":"1/2","b":"1/2","c":"0/1"}"#,
        ]
    );
    assert!(text.contains("result: finite 3"));
}

#[test]
fn supprob_prints_exact_values() {
    let o = run(&["supprob", "--rule", "cond", "--measure", "(1/4,1/4,1/2)", "--a", r#"["a"]"#, "--b", r#"["a","b"]"#]);
    assert_eq!(stdout(&o), "1/1\n");
    let o = run(&["supprob", "--rule", "constrain", "--measure", "(1/4,1/4,1/2)", "--a", r#"["a"]"#, "--b", r#"["a","b"]"#]);
    assert_eq!(stdout(&o), "-inf\n");
}

#[test]
fn pushforward_orders_differ_for_subset() {
    let shift = r#"{"target":["a","b","c"],"map":{"1":"a","2":"a","3":"b","4":"c"}}"#;
    let half = r#"{"a":"1/2","b":"1/2","c":"0/1"}"#;
    let common = ["update", "--space", "4", "--measure", "uniform", "--rule", "subset", "--evidence", r#"["a","b"]"#, "--member", half];
    let first = run(&[&common[..], &["--pushforward-first", shift]].concat());
    let last = run(&[&common[..], &["--pushforward-last", shift]].concat());
    assert!(stdout(&first).contains(&format!("member {half} input=false result=false")), "{}", stdout(&first));
    assert!(stdout(&last).contains(&format!("member {half} input=n/a result=true")), "{}", stdout(&last));
}

#[test]
fn input_errors_exit_with_two() {
    let o = run(&["update", "--space", "3", "--x", "[{\"1\": \"1/2\"", "--rule", "cond", "--evidence", r#"["1"]"#]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: --x:1:"), "{}", stderr(&o));
    let o = run(&["update", "--space", "2", "--measure", "(1/2,1/3)", "--rule", "cond", "--evidence", r#"["1"]"#]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"matrix\": [\n    oops\n  ]\n}\n").unwrap();
    let o = run(&["render", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.json:3:"), "{}", stderr(&o));
}

#[test]
fn small_audit_matches_golden_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (o1, r1) = small_audit(dir.path(), "a.json", "cond,constrain,trivial");
    assert!(o1.status.success(), "{}", stderr(&o1));
    let (_, r2) = small_audit(dir.path(), "b.json", "cond,constrain,trivial");
    let digest = |p: &Path| Sha256::digest(std::fs::read(p).unwrap());
    assert_eq!(digest(&r1), digest(&r2));
}

#[test]
fn golden_mismatch_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut g: Value = serde_json::from_str(&std::fs::read_to_string(golden()).unwrap()).unwrap();
    g["cond"]["P1"] = Value::String("fail".into());
    let altered = dir.path().join("golden.json");
    std::fs::write(&altered, g.to_string()).unwrap();
    let out = dir.path().join("r.json");
    let o = run(&[
        "audit", "--rules", "cond", "--max-atoms", "2", "--grid", "2", "--family-depth", "4",
        "--out", out.to_str().unwrap(), "--expect", altered.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mismatch: cond P1: expected fail, got pass"));
}

#[test]
fn rendered_witnesses_replay() {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = small_audit(dir.path(), "r.json", "constrain,forget,trivial,closure,ml");
    let md = run(&["render", path.to_str().unwrap(), "--format", "markdown"]);
    let text = stdout(&md);
    assert_eq!(text.lines().filter(|l| l.starts_with("| ")).count(), 6);
    assert!(text.contains("## Witnesses"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let fails = fail_witnesses(&report);
    assert!(!fails.is_empty());
    for f in fails {
        for step in replay_plan(f.witness).unwrap() {
            let o = bin().args(&step.args).output().unwrap();
            assert!(o.status.success(), "{}: {}", f.label, stderr(&o));
            let missing = step.missing(&stdout(&o));
            assert!(missing.is_empty(), "{}: missing {missing:?}", f.label);
            assert!(text.contains(&step.command_line()));
        }
    }
}

#[test]
fn render_json_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = small_audit(dir.path(), "r.json", "cond");
    let o = run(&["render", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(stdout(&o), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn belief_commands() {
    let mass = r#"[{"event":["1"],"mass":"1/2"},{"event":["1","2","3"],"mass":"1/2"}]"#;
    let o = run(&["belief", "envelope", "--space", "3", "--mass", mass, "--a", r#"["1","2"]"#, "--given", r#"["2","3"]"#]);
    let text = stdout(&o);
    assert!(text.contains(r#"bel ["1","2"] = 1/2"#), "{text}");
    assert!(text.contains(r#"lower ["1","2"] = 1/2"#));
    assert!(text.contains(r#"lower-given ["2","3"] = 0/1"#));
    assert!(text.contains(r#"closed-form ["2","3"] = 0/1"#));
    let o = run(&["belief", "dominated", "--space", "3", "--mass", mass]);
    assert!(stdout(&o).lines().filter(|l| l.starts_with("vertex")).count() >= 3);
    let x = stdout(&o)
        .lines()
        .filter_map(|l| l.strip_prefix("constraint "))
        .collect::<Vec<_>>()
        .join(",");
    let o = run(&["belief", "ml-check", "--space", "3", "--x", &format!(r#"{{"polytope":[{x}]}}"#), "--b", r#"["1","2"]"#]);
    let text = stdout(&o);
    assert!(text.contains("two-monotone: true"), "{text}");
    assert!(text.contains("ml-dempster: agree"), "{text}");
}
