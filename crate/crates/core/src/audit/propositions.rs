use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rayon::prelude::*;

use super::postulates::two_members;
use super::supprob::{supprob_table, SupProb, SupProbTable};
use super::{Fixture, PostulateId, Verdict, Witness};
use crate::credal::CredalSet;
use crate::error::{Error, Result};
use crate::lp::LinearConstraint;
use crate::measure::Event;
use crate::rational::{fmt_rational, Rational};
use crate::rules::{apply_rule, RuleId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Proposition {
    /// A member pushing `A` below `Pr(A|B)` comes with one pushing it above.
    DominanceDichotomy,
    /// `Pr(A|B)` of 0 or 1 is kept by every member.
    ExtremePreservation,
    /// `supprob` depends only on `(Pr(A), Pr(B))`.
    VWellDefined,
    /// `V(x, y)` is non-increasing in `x`, with `V(y, y) = 1`.
    VMonotone,
    Averaging,
    /// A one-member update is the conditional.
    SingletonIsCond,
}

impl Proposition {
    pub const ALL: [Proposition; 6] = [
        Proposition::DominanceDichotomy,
        Proposition::ExtremePreservation,
        Proposition::VWellDefined,
        Proposition::VMonotone,
        Proposition::Averaging,
        Proposition::SingletonIsCond,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Proposition::DominanceDichotomy => "DominanceDichotomy",
            Proposition::ExtremePreservation => "ExtremePreservation",
            Proposition::VWellDefined => "VWellDefined",
            Proposition::VMonotone => "VMonotone",
            Proposition::Averaging => "Averaging",
            Proposition::SingletonIsCond => "SingletonIsCond",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == text)
            .ok_or_else(|| Error::Parse(format!("unknown proposition `{text}`")))
    }

    /// Postulates the rule must satisfy for the property to be guaranteed.
    pub fn hypotheses(self) -> &'static [PostulateId] {
        use PostulateId::*;
        match self {
            Proposition::DominanceDichotomy | Proposition::SingletonIsCond => &[P1, P2],
            Proposition::ExtremePreservation => &[P1, P3, P4],
            Proposition::VWellDefined | Proposition::VMonotone => &[P1, P2, P3, P4, P5, P7],
            Proposition::Averaging => &[P1, P2, P6DoublePrime],
        }
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn witness(rule: RuleId, which: Proposition, fx: Fixture, observed: CredalSet, detail: String) -> Witness {
    Witness {
        rule,
        postulate: which.hypotheses()[0],
        fixture: fx,
        observed,
        expected: None,
        distinguishing_measure: None,
        in_observed: None,
        members: Vec::new(),
        detail,
        proposition: Some(which),
    }
}

type Probe = fn(RuleId, &Fixture) -> Result<Option<Witness>>;

fn bounds(out: &CredalSet, a: &Event) -> Result<Option<(Rational, Rational)>> {
    let lo = out.inf_prob(a)?;
    let hi = out.sup_prob(a)?;
    Ok(lo.zip(hi))
}

fn dominance(rule: RuleId, fx: &Fixture) -> Result<Option<Witness>> {
    let pr = fx.measure().expect("singleton fixture");
    if pr.prob(&fx.b).is_zero() {
        return Ok(None);
    }
    let cond = pr.conditional(&fx.b)?;
    let out = apply_rule(rule, &fx.x, &fx.b)?.result;
    for a in fx.space.events() {
        let p = cond.prob(&a);
        if p.is_zero() || p.is_one() {
            continue;
        }
        let Some((lo, hi)) = bounds(&out, &a)? else { return Ok(None) };
        if lo < p && hi <= p {
            let detail = format!("some member gives A {} < Pr(A|B) = {}, none gives more", fmt_rational(&lo), fmt_rational(&p));
            return Ok(Some(witness(rule, Proposition::DominanceDichotomy, fx.clone().with_a(a), out, detail)));
        }
    }
    Ok(None)
}

fn extremes(rule: RuleId, fx: &Fixture) -> Result<Option<Witness>> {
    let pr = fx.measure().expect("singleton fixture");
    if pr.prob(&fx.b).is_zero() {
        return Ok(None);
    }
    let cond = pr.conditional(&fx.b)?;
    let out = apply_rule(rule, &fx.x, &fx.b)?.result;
    for a in fx.b.subsets() {
        let p = cond.prob(&a);
        if !(p.is_zero() || p.is_one()) {
            continue;
        }
        let Some((lo, hi)) = bounds(&out, &a)? else { return Ok(None) };
        if lo != p || hi != p {
            let detail = format!("Pr(A|B) = {}, yet members range over [{}, {}]", fmt_rational(&p), fmt_rational(&lo), fmt_rational(&hi));
            return Ok(Some(witness(rule, Proposition::ExtremePreservation, fx.clone().with_a(a), out, detail)));
        }
    }
    Ok(None)
}

fn singleton_is_cond(rule: RuleId, fx: &Fixture) -> Result<Option<Witness>> {
    let pr = fx.measure().expect("singleton fixture");
    if pr.prob(&fx.b).is_zero() {
        return Ok(None);
    }
    let out = apply_rule(rule, &fx.x, &fx.b)?.result;
    if two_members(&out)?.is_some() {
        return Ok(None);
    }
    let Some(only) = out.some_member()? else { return Ok(None) };
    let cond = pr.conditional(&fx.b)?;
    if only == cond {
        return Ok(None);
    }
    let mut w = witness(rule, Proposition::SingletonIsCond, fx.clone(), out, "the single output member is not the conditional".into());
    w.members = vec![only];
    w.distinguishing_measure = Some(cond);
    Ok(Some(w))
}

/// For `A`, `B` disjoint inside the evidence `C` with `Pr(B) > 0`: each member `Pr'`
/// has a partner `Pr''` with `Pr''(A) = Pr'(A)` and `Pr''(B) = (1 - Pr'(A)) Pr(B | C - A)`.
fn averaging(rule: RuleId, fx: &Fixture) -> Result<Option<Witness>> {
    let pr = fx.measure().expect("singleton fixture");
    let c = &fx.b;
    if pr.prob(c).is_zero() {
        return Ok(None);
    }
    let out = apply_rule(rule, &fx.x, c)?.result;
    let members = match out.as_finite() {
        Some(f) => f.measures().to_vec(),
        None => out.seeds()?,
    };
    for a in c.subsets() {
        let rest = c.minus(&a)?;
        for b in rest.subsets() {
            if pr.prob(&b).is_zero() {
                continue;
            }
            let b_given_rest = pr.prob(&b) / pr.prob(&rest);
            for m in &members {
                let pa = m.prob(&a);
                let target = (Rational::one() - &pa) * &b_given_rest;
                let partners = out
                    .restrict(&LinearConstraint::eq(a.indicator(), pa.clone()))?
                    .restrict(&LinearConstraint::eq(b.indicator(), target.clone()))?;
                if partners.is_empty()? {
                    let detail = format!(
                        "no member gives A {} and the second event {}",
                        fmt_rational(&pa),
                        fmt_rational(&target)
                    );
                    let mut w = witness(rule, Proposition::Averaging, fx.clone().with_a(a), out.clone(), detail);
                    w.members = vec![m.clone()];
                    w.fixture.c = Some(b);
                    return Ok(Some(w));
                }
            }
        }
    }
    Ok(None)
}

fn sweep(rule: RuleId, fixtures: &[Fixture], probe: Probe) -> Verdict {
    let singles: Vec<&Fixture> = fixtures.iter().filter(|f| f.measure().is_some() && f.shift.is_none()).collect();
    let results: Vec<Result<Option<Witness>>> = singles.par_iter().map(|fx| probe(rule, fx)).collect();
    let mut skipped = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(None) => {}
            Ok(Some(w)) => return Verdict::Fail { fixtures_checked: i + 1, witness: Box::new(w), note: None },
            Err(Error::UnsupportedRepresentation(_)) => skipped += 1,
            Err(e) => return Verdict::Inconclusive { reason: e.to_string() },
        }
    }
    Verdict::Pass { fixtures_checked: singles.len() - skipped, skipped, evidence: None, note: None }
}

fn well_defined(table: &SupProbTable) -> Verdict {
    match table.cells.iter().find(|c| !c.consistent) {
        None => Verdict::Pass {
            fixtures_checked: table.cells.iter().map(|c| c.samples).sum(),
            skipped: 0,
            evidence: None,
            note: Some(format!("{} (x, y) cells", table.cells.len())),
        },
        Some(cell) => {
            let (other, v) = cell.conflict.clone().expect("inconsistent cell records a conflict");
            let detail = format!(
                "V({}, {}) is {} here but {} at {}",
                fmt_rational(&cell.x),
                fmt_rational(&cell.y),
                cell.value,
                v,
                other.to_json()
            );
            Verdict::Fail {
                fixtures_checked: cell.samples,
                witness: Box::new(witness(table.rule, Proposition::VWellDefined, cell.first.clone(), CredalSet::empty(&cell.first.space), detail)),
                note: None,
            }
        }
    }
}

fn monotone(table: &SupProbTable) -> Verdict {
    let mut by_y: BTreeMap<&Rational, Vec<&super::SupProbCell>> = BTreeMap::new();
    for c in &table.cells {
        by_y.entry(&c.y).or_default().push(c);
    }
    let fail = |cell: &super::SupProbCell, detail: String| Verdict::Fail {
        fixtures_checked: table.cells.len(),
        witness: Box::new(witness(table.rule, Proposition::VMonotone, cell.first.clone(), CredalSet::empty(&cell.first.space), detail)),
        note: None,
    };
    for (y, cells) in by_y {
        for pair in cells.windows(2) {
            if pair[1].value > pair[0].value {
                let detail = format!(
                    "V({}, {y}) = {} exceeds V({}, {y}) = {}",
                    fmt_rational(&pair[1].x),
                    pair[1].value,
                    fmt_rational(&pair[0].x),
                    pair[0].value,
                    y = fmt_rational(y)
                );
                return fail(pair[1], detail);
            }
        }
        if let Some(diag) = cells.iter().find(|c| &c.x == y) {
            if diag.value != SupProb::Value(Rational::one()) {
                return fail(diag, format!("V(y, y) = {} at y = {}", diag.value, fmt_rational(y)));
            }
        }
    }
    Verdict::Pass {
        fixtures_checked: table.cells.len(),
        skipped: 0,
        evidence: None,
        note: Some("non-increasing in x on every sampled y".into()),
    }
}

/// Evaluates the property over the singleton fixtures, whether or not the
/// rule meets the hypotheses.
pub fn check_proposition(which: Proposition, rule: RuleId, fixtures: &[Fixture]) -> Verdict {
    match which {
        Proposition::DominanceDichotomy => sweep(rule, fixtures, dominance),
        Proposition::ExtremePreservation => sweep(rule, fixtures, extremes),
        Proposition::SingletonIsCond => sweep(rule, fixtures, singleton_is_cond),
        Proposition::Averaging => sweep(rule, fixtures, averaging),
        Proposition::VWellDefined | Proposition::VMonotone => match supprob_table(rule, fixtures) {
            Ok(t) => check_on_table(which, &t),
            Err(e) => Verdict::Inconclusive { reason: e.to_string() },
        },
    }
}

/// The two supprob properties, read off a precomputed table.
pub fn check_on_table(which: Proposition, table: &SupProbTable) -> Verdict {
    match which {
        Proposition::VWellDefined => well_defined(table),
        Proposition::VMonotone => monotone(table),
        other => Verdict::Inconclusive { reason: format!("{other} is not a supprob property") },
    }
}
