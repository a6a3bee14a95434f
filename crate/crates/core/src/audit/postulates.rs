use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use super::minimize::minimize_witness;
use super::{Fixture, PostulateId, Verdict, Witness};
use crate::credal::{credal_equal_probe, CredalSet, Probe};
use crate::error::{Error, Result};
use crate::lp::{LinearConstraint, Sense};
use crate::measure::{grid_measures, Measure, MeasureSpace};
use crate::rational::Rational;
use crate::rules::{apply_pointwise, apply_rule, iterate_updates, RuleId};

/// Grid denominators used to generate extra probe candidates when a compared
/// set is not finite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Probing {
    pub denominators: Vec<u32>,
}

impl Probing {
    pub fn new(denominators: Vec<u32>) -> Self {
        Self { denominators }
    }

    pub fn candidates(&self, space: &MeasureSpace) -> Vec<Measure> {
        let mut all: Vec<Measure> = self.denominators.iter().flat_map(|&d| grid_measures(space, d)).collect();
        all.sort();
        all.dedup();
        all
    }
}

impl Default for Probing {
    fn default() -> Self {
        Self::new(vec![1, 2, 3, 4])
    }
}

/// Outcome of one postulate on one fixture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Check {
    Pass,
    /// The fixture does not meet the postulate's hypothesis.
    NotApplicable,
    /// The rule does not accept this representation.
    Skip(String),
    Fail(Box<Witness>),
    /// An existential postulate is satisfied by this fixture.
    Exhibits(Box<Witness>),
}

/// Finds a measure in exactly one of the two sets, and reports whether it is in `lhs`.
fn distinguish(lhs: &CredalSet, rhs: &CredalSet, probing: &Probing) -> Result<Option<(Measure, bool)>> {
    if let (Some(l), Some(r)) = (lhs.as_finite(), rhs.as_finite()) {
        if let Some(m) = l.measures().iter().find(|m| !r.contains(m)) {
            return Ok(Some((m.clone(), true)));
        }
        return Ok(r.measures().iter().find(|m| !l.contains(m)).map(|m| (m.clone(), false)));
    }
    match credal_equal_probe(lhs, rhs, &probing.candidates(lhs.space()))? {
        Probe::EqualOnCandidates => Ok(None),
        Probe::Differ(m) => {
            let inside = lhs.contains(&m)?;
            Ok(Some((m, inside)))
        }
    }
}

struct Ctx<'a> {
    rule: RuleId,
    pid: PostulateId,
    fx: &'a Fixture,
}

impl Ctx<'_> {
    fn witness(&self, observed: CredalSet, expected: Option<CredalSet>, detail: impl Into<String>) -> Witness {
        Witness {
            rule: self.rule,
            postulate: self.pid,
            fixture: self.fx.clone(),
            observed,
            expected,
            distinguishing_measure: None,
            in_observed: None,
            members: Vec::new(),
            detail: detail.into(),
            proposition: None,
        }
    }

    fn compare(&self, lhs: CredalSet, rhs: CredalSet, probing: &Probing, detail: &str) -> Result<Check> {
        Ok(match distinguish(&lhs, &rhs, probing)? {
            None => Check::Pass,
            Some((m, inside)) => {
                let mut w = self.witness(lhs, Some(rhs), detail);
                w.distinguishing_measure = Some(m);
                w.in_observed = Some(inside);
                Check::Fail(Box::new(w))
            }
        })
    }
}

/// Evaluates one postulate on one fixture. P7 is existential: `Exhibits` marks a
/// nonempty update despite `Pr(B) != 1` throughout, `Fail` an empty one.
pub fn check_fixture(pid: PostulateId, rule: RuleId, fx: &Fixture, probing: &Probing) -> Result<Check> {
    fx.validate()?;
    match check_inner(pid, rule, fx, probing) {
        Err(Error::UnsupportedRepresentation(m)) => Ok(Check::Skip(m)),
        other => other,
    }
}

fn check_inner(pid: PostulateId, rule: RuleId, fx: &Fixture, probing: &Probing) -> Result<Check> {
    let ctx = Ctx { rule, pid, fx };
    let (x, b) = (&fx.x, &fx.b);
    if fx.shift.is_some() && pid != PostulateId::P2 {
        return Err(Error::MalformedFixture("only P2 fixtures carry a shift".into()));
    }
    match pid {
        PostulateId::P1 => {
            let out = apply_rule(rule, x, b)?.result;
            let bad = match out.as_finite() {
                Some(f) => f.measures().iter().find(|m| !m.prob(b).is_one()).cloned(),
                None => match out.optimize_linear(&b.indicator(), Sense::Min)? {
                    Some((v, m)) if !v.is_one() => Some(m),
                    _ => None,
                },
            };
            Ok(match bad {
                None => Check::Pass,
                Some(m) => {
                    let mut w = ctx.witness(out, None, "an output member gives the evidence probability below 1");
                    w.members = vec![m];
                    Check::Fail(Box::new(w))
                }
            })
        }
        PostulateId::P2 => {
            let f = fx.shift.as_ref().ok_or_else(|| Error::MalformedFixture("P2 needs a shift".into()))?;
            let lhs = apply_rule(rule, &x.pushforward(f)?, b)?.result;
            let rhs = apply_rule(rule, x, &f.preimage(b)?)?.result.pushforward(f)?;
            ctx.compare(lhs, rhs, probing, "updating the coarsened set differs from coarsening the update")
        }
        PostulateId::P3 => {
            let c = fx.c.as_ref().ok_or_else(|| Error::MalformedFixture("P3 needs a second event".into()))?;
            let lhs = iterate_updates(rule, x, &[b.clone(), c.clone()])?.result;
            let rhs = apply_rule(rule, x, &b.intersect(c)?)?.result;
            ctx.compare(lhs, rhs, probing, "updating by B then C differs from updating by their intersection")
        }
        PostulateId::P4 => {
            let certain = matches!(x.inf_prob(b)?, Some(v) if v.is_one());
            if !certain {
                return Ok(Check::NotApplicable);
            }
            let out = apply_rule(rule, x, b)?.result;
            ctx.compare(out, x.clone(), probing, "evidence already certain, yet the update changed the set")
        }
        PostulateId::P5 => {
            let lhs = apply_rule(rule, x, b)?.result;
            let rhs = apply_pointwise(rule, x, b)?;
            ctx.compare(lhs, rhs, probing, "updating the set differs from the union of member updates")
        }
        PostulateId::P6Prime => {
            fx.measure().ok_or_else(|| Error::MalformedFixture("P6' needs a singleton input".into()))?;
            let out = apply_rule(rule, x, b)?.result;
            let pair = two_members(&out)?;
            Ok(match pair {
                None => Check::Pass,
                Some((p, q)) => {
                    let mut w = ctx.witness(out, None, "a single measure updated to more than one measure");
                    w.members = vec![p, q];
                    Check::Fail(Box::new(w))
                }
            })
        }
        PostulateId::P6DoublePrime | PostulateId::P6Star => {
            let pr = fx.measure().ok_or_else(|| Error::MalformedFixture("P6 checks need a singleton input".into()))?;
            if pr.prob(b).is_zero() {
                return Ok(Check::NotApplicable);
            }
            let conditional = pr.conditional(b)?;
            let out = apply_rule(rule, x, b)?.result;
            for w in 0..fx.space.size() {
                if !conditional.weight(w).is_zero() {
                    continue;
                }
                let a = fx.space.singleton(w);
                if let Some((v, m)) = out.optimize_linear(&a.indicator(), Sense::Max)? {
                    if v.is_positive() {
                        let detail = if pid == PostulateId::P6Star {
                            "an event null under conditioning gains probability"
                        } else {
                            "no constant bounds the update: Pr'(A) > 0 while Pr(A|B) = 0"
                        };
                        let mut wit = ctx.witness(out, None, detail);
                        wit.fixture = fx.clone().with_a(a);
                        wit.members = vec![m];
                        return Ok(Check::Fail(Box::new(wit)));
                    }
                }
            }
            Ok(Check::Pass)
        }
        PostulateId::P7 => {
            let certain_part = x.restrict(&LinearConstraint::eq(b.indicator(), Rational::one()))?;
            if x.is_empty()? || !certain_part.is_empty()? {
                return Ok(Check::NotApplicable);
            }
            let out = apply_rule(rule, x, b)?.result;
            if out.is_empty()? {
                Ok(Check::Fail(Box::new(ctx.witness(out, None, "the update is empty although no member makes the evidence certain"))))
            } else {
                let mut w = ctx.witness(out.clone(), None, "a nonempty update although no member makes the evidence certain");
                w.members = out.some_member()?.into_iter().collect();
                Ok(Check::Exhibits(Box::new(w)))
            }
        }
    }
}

/// Two distinct members of `out`, if it has them.
pub(super) fn two_members(out: &CredalSet) -> Result<Option<(Measure, Measure)>> {
    if let Some(f) = out.as_finite() {
        return Ok(match f.measures() {
            [p, q, ..] => Some((p.clone(), q.clone())),
            _ => None,
        });
    }
    for w in 0..out.space().size() {
        let e = out.space().singleton(w).indicator();
        let lo = out.optimize_linear(&e, Sense::Min)?;
        let hi = out.optimize_linear(&e, Sense::Max)?;
        if let (Some((l, p)), Some((h, q))) = (lo, hi) {
            if l != h {
                return Ok(Some((p, q)));
            }
        }
    }
    Ok(None)
}

const CHUNK: usize = 512;

/// Sweeps a postulate over the fixtures in order; the first failure is minimised.
pub fn check_core_postulate(pid: PostulateId, rule: RuleId, fixtures: &[Fixture], probing: &Probing) -> Verdict {
    if pid == PostulateId::P7 {
        return sweep_existential(rule, fixtures, probing);
    }
    let (mut checked, mut skipped) = (0, 0);
    for chunk in fixtures.chunks(CHUNK) {
        let results: Vec<Result<Check>> = chunk.par_iter().map(|fx| check_fixture(pid, rule, fx, probing)).collect();
        for r in results {
            match r {
                Ok(Check::Pass | Check::Exhibits(_)) => checked += 1,
                Ok(Check::NotApplicable) => {}
                Ok(Check::Skip(_)) => skipped += 1,
                Ok(Check::Fail(w)) => {
                    checked += 1;
                    return Verdict::Fail {
                        fixtures_checked: checked,
                        witness: Box::new(minimize_witness(&w, probing)),
                        note: None,
                    };
                }
                Err(e) => return Verdict::Inconclusive { reason: e.to_string() },
            }
        }
    }
    if checked == 0 {
        return Verdict::Inconclusive { reason: format!("no applicable fixtures ({skipped} skipped)") };
    }
    Verdict::Pass { fixtures_checked: checked, skipped, evidence: None, note: None }
}

/// P7: pass on the first fixture with a nonempty update, fail if none exists.
fn sweep_existential(rule: RuleId, fixtures: &[Fixture], probing: &Probing) -> Verdict {
    let (mut checked, mut skipped) = (0, 0);
    let mut first_empty: Option<Box<Witness>> = None;
    for chunk in fixtures.chunks(CHUNK) {
        let results: Vec<Result<Check>> =
            chunk.par_iter().map(|fx| check_fixture(PostulateId::P7, rule, fx, probing)).collect();
        for r in results {
            match r {
                Ok(Check::Exhibits(w)) => {
                    checked += 1;
                    return Verdict::Pass {
                        fixtures_checked: checked,
                        skipped,
                        evidence: Some(w),
                        note: Some("a fixture with Pr(B) != 1 for every member has a nonempty update".into()),
                    };
                }
                Ok(Check::Fail(w)) => {
                    checked += 1;
                    first_empty.get_or_insert(w);
                }
                Ok(Check::Pass | Check::NotApplicable) => {}
                Ok(Check::Skip(_)) => skipped += 1,
                Err(e) => return Verdict::Inconclusive { reason: e.to_string() },
            }
        }
    }
    match first_empty {
        Some(witness) => Verdict::Fail {
            fixtures_checked: checked,
            witness,
            note: Some("every fixture whose members all give Pr(B) != 1 updates to the empty set".into()),
        },
        None => Verdict::Inconclusive { reason: format!("no fixture meets the hypothesis ({skipped} skipped)") },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::polytope_catalog;
    use crate::measure::{Event, MeasureSpace, RepShift};
    use crate::rational::{int, rat};

    fn probing() -> Probing {
        Probing::default()
    }

    fn fail_of(c: Check) -> Witness {
        match c {
            Check::Fail(w) => *w,
            other => panic!("expected a failure, got {other:?}"),
        }
    }

    #[test]
    fn closure_fails_union_form_on_open_polytope() {
        let x = polytope_catalog(2).remove(0);
        let s = x.space().clone();
        let fx = Fixture::new(x, s.full());
        let w = fail_of(check_fixture(PostulateId::P5, RuleId::Closure, &fx, &probing()).unwrap());
        assert_eq!(w.distinguishing_measure, Some(Measure::point_mass(&s, 1)));
        let w4 = fail_of(check_fixture(PostulateId::P4, RuleId::Closure, &fx, &probing()).unwrap());
        assert_eq!(w4.distinguishing_measure, Some(Measure::point_mass(&s, 1)));
    }

    #[test]
    fn trivial_fails_identity_on_certain_evidence() {
        let s = MeasureSpace::numbered(2);
        let fx = Fixture::new(CredalSet::singleton(&Measure::uniform(&s)), s.full());
        assert!(matches!(check_fixture(PostulateId::P4, RuleId::Trivial, &fx, &probing()).unwrap(), Check::Fail(_)));
        assert_eq!(check_fixture(PostulateId::P4, RuleId::Cond, &fx, &probing()).unwrap(), Check::Pass);
    }

    #[test]
    fn forget_commutation_counterexample() {
        let s = MeasureSpace::numbered(3);
        let fx = Fixture::new(CredalSet::singleton(&Measure::uniform(&s)), s.event(&["1", "2"]).unwrap())
            .with_c(s.event(&["2", "3"]).unwrap());
        let w = fail_of(check_fixture(PostulateId::P3, RuleId::Forget, &fx, &probing()).unwrap());
        assert_eq!(w.distinguishing_measure, Some(Measure::point_mass(&s, 2)));
        assert_eq!(w.in_observed, Some(true));
    }

    #[test]
    fn cond_commutes_with_all_shifts() {
        let (s3, s2) = (MeasureSpace::numbered(3), MeasureSpace::numbered(2));
        for f in crate::measure::enumerate_surjections(&s3, &s2) {
            for pr in grid_measures(&s3, 3) {
                for b in s2.events() {
                    let fx = Fixture::new(CredalSet::singleton(&pr), b).with_shift(f.clone());
                    assert_eq!(check_fixture(PostulateId::P2, RuleId::Cond, &fx, &probing()).unwrap(), Check::Pass);
                }
            }
        }
    }

    #[test]
    fn subset_coarsening_counterexample() {
        // {1,2} -> a, 3 -> b, 4 -> c; conditioning uniform on {1,3} pushes to (1/2, 1/2, 0),
        // which the coarse space cannot produce from (1/2, 1/4, 1/4) on sub-events of {a,b}.
        let s4 = MeasureSpace::numbered(4);
        let t = MeasureSpace::new(["a", "b", "c"]).unwrap();
        let f = RepShift::new(&s4, &t, vec![0, 0, 1, 2]).unwrap();
        let fx = Fixture::new(CredalSet::singleton(&Measure::uniform(&s4)), t.event(&["a", "b"]).unwrap()).with_shift(f);
        let w = fail_of(check_fixture(PostulateId::P2, RuleId::Subset, &fx, &probing()).unwrap());
        let half = Measure::new(&t, vec![rat(1, 2), rat(1, 2), int(0)]).unwrap();
        assert_eq!(w.distinguishing_measure, Some(half));
        assert_eq!(w.in_observed, Some(false));
    }

    #[test]
    fn p7_sweeps() {
        let pool = crate::audit::Pool::new(&crate::audit::AuditConfig { max_atoms: 2, ..Default::default() });
        let fixtures = pool.fixtures(PostulateId::P7);
        assert!(check_core_postulate(PostulateId::P7, RuleId::Cond, &fixtures, &probing()).is_pass());
        let v = check_core_postulate(PostulateId::P7, RuleId::Constrain, &fixtures, &probing());
        assert!(v.witness().unwrap().observed.is_empty().unwrap());
        if let Verdict::Pass { evidence, .. } = check_core_postulate(PostulateId::P7, RuleId::Cond, &fixtures, &probing()) {
            assert!(!evidence.unwrap().observed.is_empty().unwrap());
        }
    }

    #[test]
    fn forget_breaks_null_preservation() {
        let s = MeasureSpace::numbered(2);
        let fx = Fixture::new(CredalSet::singleton(&Measure::point_mass(&s, 0)), s.full());
        let w = fail_of(check_fixture(PostulateId::P6Star, RuleId::Forget, &fx, &probing()).unwrap());
        assert_eq!(w.fixture.a, Some(s.singleton(1)));
        assert_eq!(w.members, vec![Measure::point_mass(&s, 1)]);
        let b: Event = s.full();
        let fx = Fixture::new(CredalSet::singleton(&Measure::uniform(&s)), b);
        let w = fail_of(check_fixture(PostulateId::P6Prime, RuleId::Forget, &fx, &probing()).unwrap());
        assert_eq!(w.members.len(), 2);
        assert_ne!(w.members[0], w.members[1]);
    }

    #[test]
    fn subset_on_polytopes_is_skipped() {
        let x = polytope_catalog(2).remove(1);
        let fx = Fixture::new(x.clone(), x.space().full());
        assert!(matches!(check_fixture(PostulateId::P5, RuleId::Subset, &fx, &probing()).unwrap(), Check::Skip(_)));
    }
}
