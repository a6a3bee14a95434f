//! The `update` command: one rule applied to one set, with optional probes.

use credal_core::credal::{constraint_to_json, CredalSet};
use credal_core::error::Result;
use credal_core::measure::{Event, Measure, RepShift};
use credal_core::rational::fmt_rational;
use credal_core::rules::{apply_pointwise, iterate_updates, Note, RuleId, UpdateOutcome};

const SAMPLES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftOrder {
    /// Push the input forward, then update on the coarse space.
    First,
    /// Update by the evidence preimages, then push the result forward.
    Last,
}

#[derive(Clone, Debug)]
pub struct UpdateRequest {
    pub x: CredalSet,
    pub rule: RuleId,
    /// On the coarse space when a shift is given.
    pub evidence: Vec<Event>,
    pub shift: Option<(ShiftOrder, RepShift)>,
    pub pointwise: bool,
    pub members: Vec<Measure>,
    pub probs: Vec<Event>,
}

fn run_rule(rule: RuleId, x: &CredalSet, evidence: &[Event], pointwise: bool) -> Result<UpdateOutcome> {
    if !pointwise {
        return iterate_updates(rule, x, evidence);
    }
    let mut cur = x.clone();
    for b in evidence {
        cur = apply_pointwise(rule, &cur, b)?;
    }
    Ok(UpdateOutcome { result: cur, notes: Vec::new() })
}

/// The set the rule first sees, and the final outcome.
pub fn execute(req: &UpdateRequest) -> Result<(CredalSet, UpdateOutcome)> {
    match &req.shift {
        None => Ok((req.x.clone(), run_rule(req.rule, &req.x, &req.evidence, req.pointwise)?)),
        Some((ShiftOrder::First, f)) => {
            let input = req.x.pushforward(f)?;
            let out = run_rule(req.rule, &input, &req.evidence, req.pointwise)?;
            Ok((input, out))
        }
        Some((ShiftOrder::Last, f)) => {
            let pre = req.evidence.iter().map(|b| f.preimage(b)).collect::<Result<Vec<_>>>()?;
            let mut out = run_rule(req.rule, &req.x, &pre, req.pointwise)?;
            out.result = out.result.pushforward(f)?;
            Ok((req.x.clone(), out))
        }
    }
}

fn range(set: &CredalSet, e: &Event) -> Result<String> {
    if set.space() != e.space() {
        return Ok("n/a".into());
    }
    Ok(match (set.inf_prob(e)?, set.sup_prob(e)?) {
        (Some(lo), Some(hi)) => format!("{}..{}", fmt_rational(&lo), fmt_rational(&hi)),
        _ => "empty".into(),
    })
}

fn membership(set: &CredalSet, m: &Measure) -> Result<String> {
    if set.space() != m.space() {
        return Ok("n/a".into());
    }
    Ok(set.contains(m)?.to_string())
}

/// The comparable part of an update's output; replay expectations are built from it.
pub fn describe(input: &CredalSet, result: &CredalSet, members: &[Measure], probs: &[Event]) -> Result<Vec<String>> {
    let mut lines = vec![format!("set: {}", result.to_json()), format!("empty: {}", result.is_empty()?)];
    for m in members {
        lines.push(format!("member {} input={} result={}", m.to_json(), membership(input, m)?, membership(result, m)?));
    }
    for e in probs {
        lines.push(format!("prob {} input={} result={}", e.to_json(), range(input, e)?, range(result, e)?));
    }
    Ok(lines)
}

fn listing(result: &CredalSet) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    match result {
        CredalSet::Finite(f) => {
            lines.push(format!("result: finite {}", f.len()));
            lines.extend(f.measures().iter().map(|m| format!("measure {}", m.to_json())));
        }
        CredalSet::Polytope(p) => {
            lines.push(format!("result: polytope {} constraints", p.constraints().len()));
            lines.extend(p.constraints().iter().map(|c| format!("constraint {}", constraint_to_json(c))));
        }
        CredalSet::Derived(_) => {
            lines.push(format!("result: derived {}", result.kind()));
            let mut shown = 0;
            for m in result.seeds()? {
                if shown == SAMPLES {
                    break;
                }
                if result.contains(&m)? {
                    lines.push(format!("sample {}", m.to_json()));
                    shown += 1;
                }
            }
        }
    }
    Ok(lines)
}

pub fn render_update(req: &UpdateRequest) -> Result<Vec<String>> {
    let (input, out) = execute(req)?;
    let mut lines = vec![format!("rule: {}", req.rule)];
    lines.extend(listing(&out.result)?);
    lines.extend(out.notes.iter().map(|n: &Note| format!("note: {}", n.as_str())));
    lines.extend(describe(&input, &out.result, &req.members, &req.probs)?);
    Ok(lines)
}
