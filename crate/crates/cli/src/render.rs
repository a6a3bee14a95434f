//! Markdown and JSON renderings of an audit report.

use std::fmt::Write as _;

use credal_core::audit::PostulateId;
use serde_json::Value;

use crate::replay::{fail_witnesses, replay_plan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Markdown,
    Json,
}

fn status<'a>(report: &'a Value, rule: &str, pid: &str) -> Option<&'a str> {
    report
        .get("matrix")?
        .as_array()?
        .iter()
        .find(|e| e.get("rule").and_then(Value::as_str) == Some(rule) && e.get("postulate").and_then(Value::as_str) == Some(pid))?
        .get("verdict")?
        .as_str()
}

fn cell(s: Option<&str>) -> &'static str {
    match s {
        Some("pass") => "✓",
        Some("fail") => "✗",
        _ => "–",
    }
}

/// Rules in order of first appearance in the matrix.
fn rules(report: &Value) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for e in report.get("matrix").and_then(Value::as_array).into_iter().flatten() {
        if let Some(r) = e.get("rule").and_then(Value::as_str) {
            if !out.contains(&r) {
                out.push(r);
            }
        }
    }
    out
}

pub fn markdown(report: &Value) -> String {
    let mut s = String::from("# Audit report\n\n| rule |");
    for p in PostulateId::ALL {
        let _ = write!(s, " {} |", p.name());
    }
    s.push_str("\n|---|");
    s.push_str(&"---|".repeat(PostulateId::ALL.len()));
    s.push('\n');
    for rule in rules(report) {
        let _ = write!(s, "| {rule} |");
        for p in PostulateId::ALL {
            let _ = write!(s, " {} |", cell(status(report, rule, p.name())));
        }
        s.push('\n');
    }
    let fails = fail_witnesses(report);
    if fails.is_empty() {
        return s;
    }
    s.push_str("\n## Witnesses\n");
    for f in fails {
        let _ = write!(s, "\n### {}\n\n", f.label);
        if let Some(d) = f.witness.get("detail").and_then(Value::as_str) {
            let _ = writeln!(s, "{d}.");
        }
        if let Some(n) = f.note {
            let _ = writeln!(s, "\nNote: {n}.");
        }
        if let Some(fx) = f.witness.get("fixture") {
            let pretty = serde_json::to_string_pretty(fx).unwrap_or_default();
            let _ = write!(s, "\nFixture:\n\n```json\n{pretty}\n```\n");
        }
        match replay_plan(f.witness) {
            Ok(steps) => {
                s.push_str("\nReplay:\n\n```sh\n");
                for step in steps {
                    let _ = writeln!(s, "{}", step.command_line());
                    for line in &step.expect {
                        let _ = writeln!(s, "# expect: {line}");
                    }
                }
                s.push_str("```\n");
            }
            Err(e) => {
                let _ = writeln!(s, "\nReplay unavailable: {e}.");
            }
        }
    }
    s
}

pub fn render(report: &Value, format: Format) -> String {
    match format {
        Format::Markdown => markdown(report),
        Format::Json => serde_json::to_string_pretty(report).unwrap_or_default() + "\n",
    }
}
