//! Turning stored witnesses back into CLI invocations with their expected output.

use credal_core::audit::{supprob_eval, Fixture, PostulateId, Proposition};
use credal_core::credal::CredalSet;
use credal_core::measure::{Event, Measure};
use credal_core::rules::{apply_rule, RuleId};
use serde_json::Value;

use crate::update::describe;

pub const BIN: &str = "credal-audit";

/// One command and the lines its output must contain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayStep {
    pub args: Vec<String>,
    pub expect: Vec<String>,
}

impl ReplayStep {
    pub fn command_line(&self) -> String {
        std::iter::once(BIN.to_string()).chain(self.args.iter().map(|a| shell_quote(a))).collect::<Vec<_>>().join(" ")
    }

    /// The expected lines missing from `output`.
    pub fn missing<'a>(&'a self, output: &str) -> Vec<&'a str> {
        self.expect.iter().filter(|e| !output.lines().any(|l| l == e.as_str())).map(String::as_str).collect()
    }
}

pub fn shell_quote(arg: &str) -> String {
    let plain = !arg.is_empty() && arg.chars().all(|c| c.is_ascii_alphanumeric() || "-_./:=,".contains(c));
    if plain {
        arg.to_string()
    } else {
        format!("'{}'", arg.replace('\'', r"'\''"))
    }
}

/// A failed check in a report, with its witness.
#[derive(Clone, Debug)]
pub struct FailEntry<'a> {
    pub label: String,
    pub witness: &'a Value,
    pub note: Option<&'a str>,
}

fn entry<'a>(label: String, v: &'a Value) -> Option<FailEntry<'a>> {
    if v.get("verdict")?.as_str()? != "fail" {
        return None;
    }
    Some(FailEntry { label, witness: v.get("witness")?, note: v.get("note").and_then(Value::as_str) })
}

fn text<'a>(v: &'a Value, key: &str) -> &'a str {
    v.get(key).and_then(Value::as_str).unwrap_or("?")
}

fn list<'a>(report: &'a Value, key: &str) -> impl Iterator<Item = &'a Value> {
    report.get(key).and_then(Value::as_array).into_iter().flatten()
}

/// Every failing verdict in a report, in report order.
pub fn fail_witnesses(report: &Value) -> Vec<FailEntry<'_>> {
    let mut out = Vec::new();
    for e in list(report, "matrix") {
        out.extend(entry(format!("{} {}", text(e, "rule"), text(e, "postulate")), e));
    }
    for e in list(report, "p6_combined") {
        out.extend(entry(format!("{} P6 (P6' or P6'')", text(e, "rule")), e));
    }
    for e in list(report, "p6_family") {
        if let Some(imp) = e.get("implication") {
            out.extend(entry(format!("{} P6'' to P6* (epsilon-delta)", text(e, "rule")), imp));
        }
    }
    for e in list(report, "propositions") {
        out.extend(entry(format!("{} {}", text(e, "rule"), text(e, "proposition")), e));
    }
    out
}

struct Parts {
    rule: RuleId,
    fx: Fixture,
    observed: CredalSet,
    expected: Option<CredalSet>,
    distinguishing: Option<Measure>,
    members: Vec<Measure>,
}

fn field<'a>(w: &'a Value, key: &str) -> Result<&'a Value, String> {
    w.get(key).ok_or_else(|| format!("witness lacks `{key}`"))
}

fn parse(w: &Value) -> Result<Parts, String> {
    let rule = RuleId::parse(field(w, "rule")?.as_str().unwrap_or_default()).map_err(|e| e.to_string())?;
    let fx = Fixture::from_json(field(w, "fixture")?).map_err(|e| e.to_string())?;
    let out_space = fx.shift.as_ref().map_or(&fx.space, |f| f.target()).clone();
    let set = |v: &Value| CredalSet::from_json(&out_space, v).map_err(|e| e.to_string());
    let measure = |v: &Value| Measure::from_json(&out_space, v).map_err(|e| e.to_string());
    let expected = w.get("expected").map(set).transpose()?;
    Ok(Parts {
        rule,
        observed: set(field(w, "observed")?)?,
        expected,
        distinguishing: w.get("distinguishing_measure").map(measure).transpose()?,
        members: w
            .get("members")
            .and_then(Value::as_array)
            .map(|ms| ms.iter().map(measure).collect::<Result<Vec<_>, _>>())
            .transpose()?
            .unwrap_or_default(),
        fx,
    })
}

fn compact(v: &Value) -> String {
    v.to_string()
}

struct Call<'a> {
    rule: RuleId,
    fx: &'a Fixture,
    evidence: Vec<Event>,
    extra: Vec<String>,
    members: Vec<Measure>,
    probs: Vec<Event>,
}

impl Call<'_> {
    fn args(&self) -> Vec<String> {
        let mut args = vec![
            "update".into(),
            "--space".into(),
            compact(&self.fx.space.to_json()),
            "--x".into(),
            compact(&self.fx.x.to_json()),
            "--rule".into(),
            self.rule.name(),
        ];
        for b in &self.evidence {
            args.extend(["--evidence".into(), compact(&b.to_json())]);
        }
        args.extend(self.extra.iter().cloned());
        for m in &self.members {
            args.extend(["--member".into(), compact(&m.to_json())]);
        }
        for e in &self.probs {
            args.extend(["--prob".into(), compact(&e.to_json())]);
        }
        args
    }

    fn step(&self, input: &CredalSet, result: &CredalSet) -> Result<ReplayStep, String> {
        let expect = describe(input, result, &self.members, &self.probs).map_err(|e| e.to_string())?;
        Ok(ReplayStep { args: self.args(), expect })
    }
}

fn need<T>(v: Option<T>, what: &str) -> Result<T, String> {
    v.ok_or_else(|| format!("witness lacks {what}"))
}

fn postulate_plan(pid: PostulateId, p: &Parts) -> Result<Vec<ReplayStep>, String> {
    let fx = &p.fx;
    let b = fx.b.clone();
    let call = |evidence: Vec<Event>, members: Vec<Measure>, probs: Vec<Event>| Call {
        rule: p.rule,
        fx,
        evidence,
        extra: Vec::new(),
        members,
        probs,
    };
    let diff: Vec<Measure> = p.distinguishing.iter().cloned().collect();
    let core = |e: credal_core::error::Error| e.to_string();
    Ok(match pid {
        PostulateId::P1 => vec![call(vec![b.clone()], p.members.clone(), vec![b]).step(&fx.x, &p.observed)?],
        PostulateId::P2 => {
            let f = need(fx.shift.as_ref(), "a shift")?;
            let expected = need(p.expected.as_ref(), "the expected set")?;
            let mut first = call(vec![b.clone()], diff.clone(), Vec::new());
            first.extra = vec!["--pushforward-first".into(), compact(&f.to_json())];
            let mut last = call(vec![b], diff, Vec::new());
            last.extra = vec!["--pushforward-last".into(), compact(&f.to_json())];
            vec![first.step(&fx.x.pushforward(f).map_err(core)?, &p.observed)?, last.step(&fx.x, expected)?]
        }
        PostulateId::P3 => {
            let c = need(fx.c.clone(), "a second event")?;
            let expected = need(p.expected.as_ref(), "the expected set")?;
            let both = b.intersect(&c).map_err(core)?;
            vec![
                call(vec![b, c], diff.clone(), Vec::new()).step(&fx.x, &p.observed)?,
                call(vec![both], diff, Vec::new()).step(&fx.x, expected)?,
            ]
        }
        PostulateId::P4 => vec![call(vec![b.clone()], diff, vec![b]).step(&fx.x, &p.observed)?],
        PostulateId::P5 => {
            let expected = need(p.expected.as_ref(), "the expected set")?;
            let mut pointwise = call(vec![b.clone()], diff.clone(), Vec::new());
            pointwise.extra = vec!["--pointwise".into()];
            vec![call(vec![b], diff, Vec::new()).step(&fx.x, &p.observed)?, pointwise.step(&fx.x, expected)?]
        }
        PostulateId::P6Prime => vec![call(vec![b], p.members.clone(), Vec::new()).step(&fx.x, &p.observed)?],
        PostulateId::P6DoublePrime | PostulateId::P6Star => against_cond(p, vec![need(fx.a.clone(), "a probe event")?])?,
        PostulateId::P7 => vec![call(vec![b.clone()], Vec::new(), vec![b]).step(&fx.x, &p.observed)?],
    })
}

/// The rule's output next to conditioning's, probed on `probs`.
fn against_cond(p: &Parts, probs: Vec<Event>) -> Result<Vec<ReplayStep>, String> {
    let fx = &p.fx;
    let mut members = p.members.clone();
    members.extend(p.distinguishing.iter().cloned());
    let own = Call { rule: p.rule, fx, evidence: vec![fx.b.clone()], extra: Vec::new(), members: members.clone(), probs: probs.clone() };
    let cond = apply_rule(RuleId::Cond, &fx.x, &fx.b).map_err(|e| e.to_string())?.result;
    let reference = Call { rule: RuleId::Cond, fx, evidence: vec![fx.b.clone()], extra: Vec::new(), members, probs };
    Ok(vec![own.step(&fx.x, &p.observed)?, reference.step(&fx.x, &cond)?])
}

fn proposition_plan(which: Proposition, p: &Parts) -> Result<Vec<ReplayStep>, String> {
    let fx = &p.fx;
    match which {
        Proposition::VWellDefined | Proposition::VMonotone => {
            let pr = need(fx.measure(), "a singleton input")?;
            let a = need(fx.a.as_ref(), "a probe event")?;
            let value = supprob_eval(p.rule, pr, a, &fx.b).map_err(|e| e.to_string())?;
            let args = vec![
                "supprob".into(),
                "--rule".into(),
                p.rule.name(),
                "--space".into(),
                compact(&fx.space.to_json()),
                "--measure".into(),
                compact(&pr.to_json()),
                "--a".into(),
                compact(&a.to_json()),
                "--b".into(),
                compact(&fx.b.to_json()),
            ];
            Ok(vec![ReplayStep { args, expect: vec![value.to_string()] }])
        }
        _ => against_cond(p, fx.a.iter().chain(&fx.c).cloned().collect()),
    }
}

/// Commands reproducing a witness, each paired with the output lines that show the discrepancy.
pub fn replay_plan(witness: &Value) -> Result<Vec<ReplayStep>, String> {
    let p = parse(witness)?;
    if let Some(name) = witness.get("proposition").and_then(Value::as_str) {
        let which = Proposition::parse(name).map_err(|e| e.to_string())?;
        return proposition_plan(which, &p);
    }
    let pid = PostulateId::parse(field(witness, "postulate")?.as_str().unwrap_or_default()).map_err(|e| e.to_string())?;
    postulate_plan(pid, &p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use credal_core::audit::{check_fixture, Check, Probing};
    use credal_core::measure::MeasureSpace;

    #[test]
    fn quoting() {
        assert_eq!(shell_quote("update"), "update");
        assert_eq!(shell_quote(r#"["a","b"]"#), r#"'["a","b"]'"#);
        assert_eq!(shell_quote("it's"), r"'it'\''s'");
    }

    #[test]
    fn forget_commutation_plan_has_two_disagreeing_steps() {
        let s = MeasureSpace::numbered(3);
        let fx = Fixture::new(CredalSet::singleton(&Measure::uniform(&s)), s.event(&["1", "2"]).unwrap())
            .with_c(s.event(&["2", "3"]).unwrap());
        let Check::Fail(w) = check_fixture(PostulateId::P3, RuleId::Forget, &fx, &Probing::default()).unwrap() else {
            panic!("forget commutes here")
        };
        let plan = replay_plan(&w.to_json()).unwrap();
        assert_eq!(plan.len(), 2);
        let member = |step: &ReplayStep| step.expect.iter().find(|l| l.starts_with("member")).cloned().unwrap();
        assert!(member(&plan[0]).ends_with("result=true"));
        assert!(member(&plan[1]).ends_with("result=false"));
        assert!(plan[0].command_line().starts_with("credal-audit update --space"));
    }
}
