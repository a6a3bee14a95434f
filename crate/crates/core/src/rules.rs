//! The update rules.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_traits::{One, Signed, Zero};

use crate::credal::{CredalSet, Polytope};
use crate::error::{Error, Result};
use crate::lp::LinearConstraint;
use crate::measure::{Event, Measure};
use crate::rational::Rational;

/// A named choice function picking a subset of a finite input.
#[derive(Clone, Copy)]
pub struct Selector {
    pub name: &'static str,
    pub select: fn(&[Measure], &Event) -> Vec<Measure>,
}

impl Selector {
    pub const KEEP_ALL: Selector = Selector { name: "all", select: |ms, _| ms.to_vec() };
    pub const MAX_EVIDENCE: Selector = Selector { name: "max-evidence", select: max_evidence_members };
    pub const FIRST: Selector = Selector { name: "first", select: |ms, b| {
        ms.iter().find(|m| m.prob(b).is_positive()).cloned().into_iter().collect()
    } };

    pub fn builtin(name: &str) -> Option<Selector> {
        [Self::KEEP_ALL, Self::MAX_EVIDENCE, Self::FIRST].into_iter().find(|s| s.name == name)
    }
}

impl PartialEq for Selector {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Eq for Selector {}

impl Hash for Selector {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state)
    }
}

impl PartialOrd for Selector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Selector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name.cmp(other.name)
    }
}

impl fmt::Debug for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Selector({})", self.name)
    }
}

fn max_evidence_members(ms: &[Measure], b: &Event) -> Vec<Measure> {
    let Some(best) = ms.iter().map(|m| m.prob(b)).max() else { return Vec::new() };
    ms.iter().filter(|m| m.prob(b) == best).cloned().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    Cond,
    Constrain,
    Forget,
    Trivial,
    Closure,
    Subset,
    Ml,
    Classical(Selector),
}

impl RuleId {
    pub const ALL: [RuleId; 7] = [
        RuleId::Cond,
        RuleId::Constrain,
        RuleId::Forget,
        RuleId::Trivial,
        RuleId::Closure,
        RuleId::Subset,
        RuleId::Ml,
    ];

    pub fn name(&self) -> String {
        match self {
            RuleId::Cond => "cond".into(),
            RuleId::Constrain => "constrain".into(),
            RuleId::Forget => "forget".into(),
            RuleId::Trivial => "trivial".into(),
            RuleId::Closure => "closure".into(),
            RuleId::Subset => "subset".into(),
            RuleId::Ml => "ml".into(),
            RuleId::Classical(s) => format!("classical:{}", s.name),
        }
    }

    pub fn parse(text: &str) -> Result<RuleId> {
        if let Some(sel) = text.strip_prefix("classical:") {
            return Selector::builtin(sel)
                .map(RuleId::Classical)
                .ok_or_else(|| Error::Parse(format!("unknown selector `{sel}`")));
        }
        RuleId::ALL
            .into_iter()
            .find(|r| r.name() == text)
            .ok_or_else(|| Error::Parse(format!("unknown rule `{text}`")))
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Note {
    BaseConditionApplied,
    SupNotAttained,
}

impl Note {
    pub fn as_str(self) -> &'static str {
        match self {
            Note::BaseConditionApplied => "base_condition_applied",
            Note::SupNotAttained => "sup_not_attained",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateOutcome {
    pub result: CredalSet,
    pub notes: Vec<Note>,
}

impl UpdateOutcome {
    fn plain(result: CredalSet) -> Self {
        Self { result, notes: Vec::new() }
    }

    fn noted(result: CredalSet, note: Note) -> Self {
        Self { result, notes: vec![note] }
    }
}

fn certain(b: &Event) -> LinearConstraint {
    LinearConstraint::eq(b.indicator(), Rational::one())
}

/// `Upd(x, b)`.
pub fn apply_rule(rule: RuleId, x: &CredalSet, b: &Event) -> Result<UpdateOutcome> {
    if b.space() != x.space() {
        return Err(Error::SpaceMismatch("evidence is not on the input's space".into()));
    }
    let space = x.space();
    match rule {
        RuleId::Subset | RuleId::Classical(_) if x.as_finite().is_none() => {
            return Err(Error::UnsupportedRepresentation(format!("{rule} needs a finite input")));
        }
        RuleId::Closure if matches!(x, CredalSet::Derived(_)) => {
            return Err(Error::UnsupportedRepresentation("closure of a derived set".into()));
        }
        _ => {}
    }
    let evidence = x.sup_prob(b)?;
    if evidence.as_ref().map_or(true, |s| s.is_zero()) {
        return Ok(UpdateOutcome::noted(CredalSet::empty(space), Note::BaseConditionApplied));
    }
    let evidence = evidence.expect("checked above");

    Ok(match rule {
        RuleId::Cond => UpdateOutcome::plain(x.cond_image(b)?),
        RuleId::Constrain => UpdateOutcome::plain(x.restrict(&certain(b))?),
        RuleId::Forget => UpdateOutcome::plain(CredalSet::Polytope(Polytope::concentrated_on(b))),
        RuleId::Trivial => UpdateOutcome::plain(CredalSet::empty(space)),
        RuleId::Closure => UpdateOutcome::plain(x.closure()?.cond_image(b)?),
        RuleId::Subset => {
            let members = x.as_finite().expect("checked above").measures();
            let mut out = Vec::new();
            for pr in members {
                out.extend(subset_of_member(pr, b)?);
            }
            UpdateOutcome::plain(CredalSet::finite(space, out)?)
        }
        RuleId::Ml => {
            let face = x.restrict(&LinearConstraint::eq(b.indicator(), evidence))?;
            if face.is_empty()? {
                UpdateOutcome::noted(CredalSet::empty(space), Note::SupNotAttained)
            } else {
                UpdateOutcome::plain(face.cond_image(b)?)
            }
        }
        RuleId::Classical(sel) => {
            let input = x.as_finite().expect("checked above");
            let chosen = (sel.select)(input.measures(), b);
            if chosen.iter().any(|m| !input.contains(m)) {
                return Err(Error::SelectorViolation(sel.name.into()));
            }
            UpdateOutcome::plain(CredalSet::finite(space, chosen)?.cond_image(b)?)
        }
    })
}

/// The subset rule on one measure.
fn subset_of_member(pr: &Measure, b: &Event) -> Result<Vec<Measure>> {
    let pb = pr.prob(b);
    if pb.is_one() {
        return Ok(vec![pr.clone()]);
    }
    if pb.is_zero() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for d in b.subsets() {
        if pr.prob(&d).is_positive() {
            out.push(pr.conditional(&d)?);
        }
    }
    Ok(out)
}

/// Folds [`apply_rule`] over the evidence, left to right.
pub fn iterate_updates(rule: RuleId, x: &CredalSet, evidence: &[Event]) -> Result<UpdateOutcome> {
    let mut cur = UpdateOutcome::plain(x.clone());
    for b in evidence {
        let next = apply_rule(rule, &cur.result, b)?;
        cur.result = next.result;
        for n in next.notes {
            if !cur.notes.contains(&n) {
                cur.notes.push(n);
            }
        }
    }
    Ok(cur)
}

/// `∪ { Upd({pr}, b) : pr in x }`.
pub fn apply_pointwise(rule: RuleId, x: &CredalSet, b: &Event) -> Result<CredalSet> {
    if b.space() != x.space() {
        return Err(Error::SpaceMismatch("evidence is not on the input's space".into()));
    }
    let space = x.space();
    if let Some(f) = x.as_finite() {
        let parts = f
            .measures()
            .iter()
            .map(|pr| apply_rule(rule, &CredalSet::singleton(pr), b).map(|o| o.result))
            .collect::<Result<Vec<_>>>()?;
        return CredalSet::union(space, parts);
    }
    match rule {
        RuleId::Cond | RuleId::Closure | RuleId::Ml => x.cond_image(b),
        RuleId::Constrain => x.restrict(&certain(b)),
        RuleId::Forget => match x.sup_prob(b)? {
            Some(s) if s.is_positive() => Ok(CredalSet::Polytope(Polytope::concentrated_on(b))),
            _ => Ok(CredalSet::empty(space)),
        },
        RuleId::Trivial => Ok(CredalSet::empty(space)),
        RuleId::Subset | RuleId::Classical(_) => Err(Error::UnsupportedRepresentation(format!(
            "pointwise {rule} over an infinite set"
        ))),
    }
}
