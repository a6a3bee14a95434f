use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde_json::{Map, Value};

use super::postulates::{check_core_postulate, Probing};
use super::{AuditConfig, Fixture, Pool, PostulateId, Verdict, Witness};
use crate::credal::CredalSet;
use crate::error::Result;
use crate::lp::Sense;
use crate::measure::{Event, Measure, MeasureSpace};
use crate::rational::{fmt_rational, rat, Rational};
use crate::rules::{apply_rule, RuleId};

/// Where a P6 ratio is attained: evidence `b`, probe event `a`, and the output member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct P6Arg {
    pub b: Event,
    pub a: Event,
    pub member: Measure,
}

impl P6Arg {
    fn to_json(&self, obj: &mut Map<String, Value>) {
        obj.insert("b".into(), self.b.to_json());
        obj.insert("a".into(), self.a.to_json());
        obj.insert("member".into(), self.member.to_json());
    }
}

/// The least `c` with `Pr'(A) <= c Pr(A|B)` for every event, evidence and output member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum P6Constant {
    Finite { c: Rational, arg: Option<P6Arg> },
    Unbounded(P6Arg),
}

impl P6Constant {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            P6Constant::Finite { c, .. } => Some(c),
            P6Constant::Unbounded(_) => None,
        }
    }

    fn zero() -> Self {
        P6Constant::Finite { c: Rational::zero(), arg: None }
    }

    /// The larger of two constants; ties keep `self`.
    fn max(self, other: P6Constant) -> P6Constant {
        match (&self, &other) {
            (P6Constant::Unbounded(_), _) => self,
            (_, P6Constant::Unbounded(_)) => other,
            (P6Constant::Finite { c: x, .. }, P6Constant::Finite { c: y, .. }) => {
                if y > x {
                    other
                } else {
                    self
                }
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        match self {
            P6Constant::Finite { c, arg } => {
                obj.insert("c".into(), Value::String(fmt_rational(c)));
                if let Some(a) = arg {
                    a.to_json(&mut obj);
                }
            }
            P6Constant::Unbounded(a) => {
                obj.insert("c".into(), Value::String("unbounded".into()));
                a.to_json(&mut obj);
            }
        }
        Value::Object(obj)
    }
}

/// The P6 ratio for one `(pr, b)`; the supremum over events is attained on atoms.
fn ratio_for(rule: RuleId, pr: &Measure, b: &Event) -> Result<P6Constant> {
    let out = apply_rule(rule, &CredalSet::singleton(pr), b)?.result;
    let conditional = pr.conditional(b)?;
    let mut best = P6Constant::zero();
    for w in 0..pr.space().size() {
        let a = pr.space().singleton(w);
        let Some((sup, member)) = out.optimize_linear(&a.indicator(), Sense::Max)? else {
            return Ok(best);
        };
        let arg = P6Arg { b: b.clone(), a, member };
        let p = conditional.weight(w);
        if p.is_zero() {
            if sup.is_positive() {
                return Ok(P6Constant::Unbounded(arg));
            }
            continue;
        }
        best = best.max(P6Constant::Finite { c: sup / p, arg: Some(arg) });
    }
    Ok(best)
}

/// `c` for `pr`, maximised over all evidence with positive probability.
pub fn p6_constant(rule: RuleId, space: &MeasureSpace, pr: &Measure) -> Result<P6Constant> {
    let mut best = P6Constant::zero();
    for b in space.events() {
        if pr.prob(&b).is_zero() {
            continue;
        }
        best = best.max(ratio_for(rule, pr, &b)?);
        if matches!(best, P6Constant::Unbounded(_)) {
            break;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct P6Report {
    pub prime: Verdict,
    pub double_prime: Verdict,
    pub star: Verdict,
    /// Passes when P6' or P6'' passes.
    pub combined: Verdict,
    /// `(n, c(M_n, uniform))` for `n = 2..=family_depth`.
    pub family: Vec<(usize, P6Constant)>,
    /// The largest constant over the singleton pool.
    pub pool_constant: P6Constant,
    /// The ε–δ continuity form on every fixture with a finite positive constant.
    pub implication: Verdict,
}

const EPSILONS: [(i64, i64); 3] = [(1, 1), (1, 2), (1, 10)];

fn strictly_increasing(cs: &[Rational]) -> bool {
    cs.windows(2).all(|w| w[0] < w[1])
}

/// Strictly increasing with a threshold crossing, or with increments that do
/// not shrink (so a linear extrapolation crosses it). Returns the crossing depth.
fn divergence(family: &[(usize, Rational)], threshold: &Rational) -> Option<usize> {
    let cs: Vec<Rational> = family.iter().map(|(_, c)| c.clone()).collect();
    if cs.len() < 2 || !strictly_increasing(&cs) {
        return None;
    }
    if let Some(&(n, _)) = family.iter().find(|(_, c)| c > threshold) {
        return Some(n);
    }
    let steps: Vec<Rational> = cs.windows(2).map(|w| &w[1] - &w[0]).collect();
    if !steps.windows(2).all(|w| w[0] <= w[1]) {
        return None;
    }
    let (n_last, c_last) = family.last().expect("nonempty family");
    let step = steps.last().expect("two or more points");
    let needed = ((threshold - c_last) / step).floor().to_integer() + 1;
    Some(n_last + usize::try_from(needed).unwrap_or(usize::MAX))
}

fn family_witness(rule: RuleId, n: usize) -> Result<Witness> {
    let space = MeasureSpace::numbered(n);
    let pr = Measure::uniform(&space);
    let b = space.full().minus(&space.singleton(n - 1))?;
    let observed = apply_rule(rule, &CredalSet::singleton(&pr), &b)?.result;
    let member = Measure::point_mass(&space, 0);
    let in_observed = observed.contains(&member)?;
    Ok(Witness {
        rule,
        postulate: PostulateId::P6DoublePrime,
        fixture: Fixture::new(CredalSet::singleton(&pr), b).with_a(space.singleton(0)),
        observed,
        expected: None,
        distinguishing_measure: None,
        in_observed: Some(in_observed),
        members: if in_observed { vec![member] } else { Vec::new() },
        detail: "diverges on the finite family (fails P6'' in the infinite-space limit)".into(),
        proposition: None,
    })
}

fn epsilon_delta(rule: RuleId, fx: &Fixture) -> Result<Option<Witness>> {
    let pr = fx.measure().expect("singleton fixture");
    let pb = pr.prob(&fx.b);
    if pb.is_zero() {
        return Ok(None);
    }
    let P6Constant::Finite { c, .. } = ratio_for(rule, pr, &fx.b)? else {
        return Ok(None);
    };
    if c.is_zero() {
        return Ok(None);
    }
    let out = apply_rule(rule, &fx.x, &fx.b)?.result;
    for (n, d) in EPSILONS {
        let eps = rat(n, d);
        let delta = &eps * &pb / (Rational::from_integer(2.into()) * &c);
        for a in fx.space.events() {
            if pr.prob(&a) >= delta {
                continue;
            }
            if let Some((sup, member)) = out.optimize_linear(&a.indicator(), Sense::Max)? {
                if sup >= eps {
                    return Ok(Some(Witness {
                        rule,
                        postulate: PostulateId::P6Star,
                        fixture: fx.clone().with_a(a),
                        observed: out,
                        expected: None,
                        distinguishing_measure: None,
                        in_observed: None,
                        members: vec![member],
                        detail: format!(
                            "Pr(A) < {} = eps Pr(B)/(2c) with eps = {}, yet Pr'(A) reaches {}",
                            fmt_rational(&delta),
                            fmt_rational(&eps),
                            fmt_rational(&sup)
                        ),
                        proposition: None,
                    }));
                }
            }
        }
    }
    Ok(None)
}

fn implication(rule: RuleId, fixtures: &[Fixture]) -> Verdict {
    let results: Vec<Result<Option<Witness>>> = fixtures.par_iter().map(|fx| epsilon_delta(rule, fx)).collect();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(None) => {}
            Ok(Some(w)) => return Verdict::Fail { fixtures_checked: i + 1, witness: Box::new(w), note: None },
            Err(e) => return Verdict::Inconclusive { reason: e.to_string() },
        }
    }
    Verdict::Pass {
        fixtures_checked: fixtures.len(),
        skipped: 0,
        evidence: None,
        note: Some("delta = eps Pr(B)/(2c) for eps in {1, 1/2, 1/10}".into()),
    }
}

fn combine(prime: &Verdict, double_prime: &Verdict) -> Verdict {
    match (prime, double_prime) {
        (Verdict::Pass { fixtures_checked, .. }, _) => Verdict::Pass {
            fixtures_checked: *fixtures_checked,
            skipped: 0,
            evidence: None,
            note: Some("P6' holds on the pool".into()),
        },
        (_, Verdict::Pass { fixtures_checked, .. }) => Verdict::Pass {
            fixtures_checked: *fixtures_checked,
            skipped: 0,
            evidence: None,
            note: Some("P6'' holds on the pool".into()),
        },
        (Verdict::Inconclusive { reason }, _) | (_, Verdict::Inconclusive { reason }) => {
            Verdict::Inconclusive { reason: reason.clone() }
        }
        (_, Verdict::Fail { fixtures_checked, witness, .. }) => Verdict::Fail {
            fixtures_checked: *fixtures_checked,
            witness: witness.clone(),
            note: Some("neither P6' nor P6'' holds".into()),
        },
    }
}

/// All P6 variants for one rule over the singleton pool and the `M_n` family.
pub fn check_p6(rule: RuleId, cfg: &AuditConfig, pool: &Pool, probing: &Probing) -> Result<P6Report> {
    let singles = pool.singleton_fixtures();
    let prime = check_core_postulate(PostulateId::P6Prime, rule, &singles, probing);
    let star = check_core_postulate(PostulateId::P6Star, rule, &singles, probing);
    let per_fixture = check_core_postulate(PostulateId::P6DoublePrime, rule, &singles, probing);

    let family = (2..=cfg.family_depth)
        .into_par_iter()
        .map(|n| {
            let space = MeasureSpace::numbered(n);
            Ok((n, p6_constant(rule, &space, &Measure::uniform(&space))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let pool_constant = pool
        .spaces()
        .par_iter()
        .flat_map_iter(|s| pool.grid(s).iter().map(move |pr| p6_constant(rule, s, pr)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(P6Constant::zero(), P6Constant::max);

    let double_prime = match per_fixture {
        Verdict::Pass { fixtures_checked, skipped, .. } => {
            let finite: Option<Vec<(usize, Rational)>> =
                family.iter().map(|(n, c)| c.value().map(|v| (*n, v.clone()))).collect();
            let crossing = finite.as_deref().and_then(|f| divergence(f, &cfg.divergence_threshold));
            match crossing {
                Some(at) => {
                    let listed: Vec<String> = finite
                        .expect("finite family")
                        .iter()
                        .map(|(n, c)| format!("c({n}) = {}", fmt_rational(c)))
                        .collect();
                    Verdict::Fail {
                        fixtures_checked,
                        witness: Box::new(family_witness(rule, cfg.family_depth)?),
                        note: Some(format!(
                            "infinite-space-limit: {}; exceeds {} by n = {at}",
                            listed.join(", "),
                            fmt_rational(&cfg.divergence_threshold)
                        )),
                    }
                }
                None => Verdict::Pass {
                    fixtures_checked,
                    skipped,
                    evidence: None,
                    note: pool_constant.value().map(|c| format!("uniform bound c = {}", fmt_rational(c))),
                },
            }
        }
        other => other,
    };
    let combined = combine(&prime, &double_prime);
    let implication = implication(rule, &singles);
    Ok(P6Report { prime, double_prime, star, combined, family, pool_constant, implication })
}
