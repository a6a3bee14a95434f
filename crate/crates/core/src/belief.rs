//! Belief functions, the credal sets they dominate, and two conditioning
//! notions on them: lower envelopes of conditionals and Dempster's rule.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde_json::{Map, Value};

use crate::credal::CredalSet;
use crate::error::{Error, Result};
use crate::lp::{LinearConstraint, VERTEX_DIMENSION_CAP};
use crate::measure::{Event, MeasureSpace};
use crate::rational::{fmt_rational, parse_rational, rat, Rational};
use crate::rules::{apply_rule, RuleId};

/// A Dempster–Shafer mass assignment: nonnegative, summing to one, nothing on `∅`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MassFunction {
    space: MeasureSpace,
    /// Focal sets keyed by mask.
    masses: BTreeMap<u64, Rational>,
}

impl MassFunction {
    pub fn new(space: &MeasureSpace, masses: Vec<(Event, Rational)>) -> Result<Self> {
        let mut merged: BTreeMap<u64, Rational> = BTreeMap::new();
        for (e, m) in masses {
            if e.space() != space {
                return Err(Error::SpaceMismatch("focal set on another space".into()));
            }
            if m.is_negative() {
                return Err(Error::InvalidMeasure("negative mass".into()));
            }
            if m.is_zero() {
                continue;
            }
            if e.is_empty() {
                return Err(Error::InvalidMeasure("mass on the empty set".into()));
            }
            *merged.entry(e.mask()).or_insert_with(Rational::zero) += m;
        }
        let total: Rational = merged.values().sum();
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!("masses sum to {}", fmt_rational(&total))));
        }
        Ok(Self { space: space.clone(), masses: merged })
    }

    pub fn vacuous(space: &MeasureSpace) -> Self {
        Self::new(space, vec![(space.full(), Rational::one())]).expect("unit mass on the full space")
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn focal(&self) -> Vec<(Event, Rational)> {
        self.masses
            .iter()
            .map(|(&mask, m)| (self.space.event_from_mask(mask).expect("stored masks fit"), m.clone()))
            .collect()
    }

    pub fn mass(&self, e: &Event) -> Rational {
        self.masses.get(&e.mask()).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn bel(&self, a: &Event) -> Rational {
        self.masses.iter().filter(|(&m, _)| m & !a.mask() == 0).map(|(_, v)| v).sum()
    }

    pub fn pl(&self, a: &Event) -> Rational {
        self.masses.iter().filter(|(&m, _)| m & a.mask() != 0).map(|(_, v)| v).sum()
    }

    /// `Bel` tabulated on every event.
    pub fn belief(&self) -> SetFunction {
        SetFunction { space: self.space.clone(), values: self.space.events().map(|e| self.bel(&e)).collect() }
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.focal()
                .into_iter()
                .map(|(e, m)| {
                    let mut obj = Map::new();
                    obj.insert("event".into(), e.to_json());
                    obj.insert("mass".into(), Value::String(fmt_rational(&m)));
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn from_json(space: &MeasureSpace, value: &Value) -> Result<Self> {
        let items = value.as_array().ok_or_else(|| Error::Parse("mass function must be an array".into()))?;
        let mut masses = Vec::new();
        for item in items {
            let event = item.get("event").ok_or_else(|| Error::Parse("focal entry needs `event`".into()))?;
            let mass = item
                .get("mass")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Parse("focal entry needs a string `mass`".into()))?;
            masses.push((Event::from_json(space, event)?, parse_rational(mass)?));
        }
        Self::new(space, masses)
    }
}

/// A set function indexed by event mask, such as `Bel` or a lower envelope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetFunction {
    space: MeasureSpace,
    values: Vec<Rational>,
}

impl SetFunction {
    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn at(&self, e: &Event) -> &Rational {
        &self.values[e.mask() as usize]
    }

    /// `1 - f(complement)`.
    pub fn dual(&self, e: &Event) -> Rational {
        Rational::one() - self.at(&e.complement())
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }
}

/// `{Pr : Pr(A) >= Bel(A) for every event A}`.
pub fn dominated_set(bel: &SetFunction) -> CredalSet {
    let space = bel.space();
    let constraints = space.events().map(|a| LinearConstraint::ge(a.indicator(), bel.at(&a).clone())).collect();
    CredalSet::polytope(space, constraints).expect("constraints sized to the space")
}

/// Polytopes and finite sets are accepted; a one-member finite set counts as closed and convex.
fn as_closed(x: &CredalSet) -> Result<()> {
    match x {
        CredalSet::Finite(_) => Ok(()),
        CredalSet::Polytope(p) if p.is_closed() => Ok(()),
        _ => Err(Error::PreconditionViolated("lower envelopes need a closed polytope or a finite set".into())),
    }
}

/// `inf Pr(a)` over `x`, or `inf Pr(a | given)` over members with `Pr(given) > 0`.
pub fn lower_envelope(x: &CredalSet, a: &Event, given: Option<&Event>) -> Result<Rational> {
    as_closed(x)?;
    let target = match given {
        None => x.clone(),
        Some(b) => {
            if !x.sup_prob(b)?.is_some_and(|s| s.is_positive()) {
                return Err(Error::AllEvidenceNull);
            }
            x.cond_image(b)?
        }
    };
    target.inf_prob(a)?.ok_or_else(|| Error::PreconditionViolated("lower envelope of an empty set".into()))
}

/// The conditional lower envelope tabulated on every event.
pub fn conditional_envelope(x: &CredalSet, b: &Event) -> Result<SetFunction> {
    let space = x.space();
    let values = space.events().map(|a| lower_envelope(x, &a, Some(b))).collect::<Result<_>>()?;
    Ok(SetFunction { space: space.clone(), values })
}

/// `Bel(A∩B) / (Bel(A∩B) + Pl(B−A))`, read as 1 when the denominator vanishes.
pub fn fh_closed_form(m: &MassFunction, a: &Event, b: &Event) -> Result<Rational> {
    let inside = m.bel(&a.intersect(b)?);
    let outside = m.pl(&b.minus(a)?);
    let denom = &inside + &outside;
    Ok(if denom.is_zero() { Rational::one() } else { inside / denom })
}

/// Dempster's rule of conditioning: `(Bel(a|b), Pl(a|b))`.
pub fn dempster_conditional(bel: &SetFunction, a: &Event, b: &Event) -> Result<(Rational, Rational)> {
    let pl_b = bel.dual(b);
    if !pl_b.is_positive() {
        return Err(Error::NullPlausibility);
    }
    let not_b = b.complement();
    let lower = (bel.at(&a.union(&not_b)?) - bel.at(&not_b)) / &pl_b;
    let upper = bel.dual(&a.intersect(b)?) / &pl_b;
    Ok((lower, upper))
}

/// Outcome of the Gilboa–Schmeidler conditions on a closed convex set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GsReport {
    /// `f_X(A) = min Pr(A)` over the set, on every event.
    pub lower: Option<SetFunction>,
    pub convex: bool,
    /// The set equals the core `{Pr : Pr >= f_X}`.
    pub is_core: bool,
    pub two_monotone: bool,
    pub diagnostics: Vec<String>,
}

impl GsReport {
    pub fn holds(&self) -> bool {
        self.convex && self.is_core && self.two_monotone
    }
}

pub fn gs_check(x: &CredalSet) -> Result<GsReport> {
    let n = x.space().size();
    if n > VERTEX_DIMENSION_CAP {
        return Err(Error::DimensionTooLarge { dim: n, cap: VERTEX_DIMENSION_CAP });
    }
    let x = match x.as_finite() {
        Some(f) if f.len() == 1 => singleton_polytope(x)?,
        Some(_) => {
            return Ok(GsReport {
                lower: None,
                convex: false,
                is_core: false,
                two_monotone: false,
                diagnostics: vec!["a finite set of several measures is not convex".into()],
            })
        }
        None => x.clone(),
    };
    let CredalSet::Polytope(p) = &x else {
        return Err(Error::UnsupportedRepresentation("conditions are checked on polytopes".into()));
    };
    if !p.is_closed() {
        return Err(Error::PreconditionViolated("the set must be closed".into()));
    }
    let space = x.space().clone();
    let mut values = Vec::new();
    for a in space.events() {
        values.push(x.inf_prob(&a)?.ok_or_else(|| Error::PreconditionViolated("empty set".into()))?);
    }
    let f = SetFunction { space: space.clone(), values };
    let mut diagnostics = Vec::new();

    let core = dominated_set(&f);
    let mut is_core = true;
    for c in p.constraints() {
        let outside = match c.rel {
            crate::lp::Relation::Eq => {
                core.sup_linear(&c.coeffs)?.as_ref() != Some(&c.bound)
                    || core.inf_linear(&c.coeffs)?.as_ref() != Some(&c.bound)
            }
            _ => core.sup_linear(&c.coeffs)?.is_some_and(|v| v > c.bound),
        };
        if outside {
            is_core = false;
            diagnostics.push(format!("the core leaves the set along {}", crate::credal::constraint_to_json(c)));
            break;
        }
    }

    let events: Vec<Event> = space.events().collect();
    let mut two_monotone = true;
    'pairs: for a in &events {
        for b in &events {
            let lhs = f.at(&a.union(b)?) + f.at(&a.intersect(b)?);
            let rhs = f.at(a) + f.at(b);
            if lhs < rhs {
                two_monotone = false;
                diagnostics.push(format!("f({a} ∪ {b}) + f({a} ∩ {b}) < f({a}) + f({b})"));
                break 'pairs;
            }
        }
    }
    Ok(GsReport { lower: Some(f), convex: true, is_core, two_monotone, diagnostics })
}

fn singleton_polytope(x: &CredalSet) -> Result<CredalSet> {
    let pr = &x.as_finite().expect("finite").measures()[0];
    let space = x.space();
    let constraints =
        (0..space.size()).map(|w| LinearConstraint::eq(space.singleton(w).indicator(), pr.weight(w).clone())).collect();
    CredalSet::polytope(space, constraints)
}

/// Result of comparing maximum-likelihood updating with Dempster's rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MlDempster {
    Agree,
    /// The first event, by mask, where the two lower values differ: `(event, ml, dempster)`.
    Differ(Event, Rational, Rational),
}

/// Lower envelope of the maximum-likelihood update against Dempster's rule applied to `f_X`.
pub fn ml_dempster_check(x: &CredalSet, b: &Event) -> Result<MlDempster> {
    let gs = gs_check(x)?;
    if !gs.holds() {
        return Err(Error::HypothesisNotMet(gs.diagnostics.join("; ")));
    }
    let f = gs.lower.expect("convex sets carry f_X");
    let x = match x.as_finite() {
        Some(_) => singleton_polytope(x)?,
        None => x.clone(),
    };
    let updated = apply_rule(RuleId::Ml, &x, b)?.result;
    for a in x.space().events() {
        let (dempster, _) = dempster_conditional(&f, &a, b)?;
        let ml = updated.inf_prob(&a)?.ok_or(Error::NullPlausibility)?;
        if ml != dempster {
            return Ok(MlDempster::Differ(a, ml, dempster));
        }
    }
    Ok(MlDempster::Agree)
}

/// Conditioning a belief function by the lower envelope, kept as the set it dominates.
pub fn envelope_update(x: &CredalSet, b: &Event) -> Result<CredalSet> {
    Ok(dominated_set(&conditional_envelope(x, b)?))
}

/// Evidence pair on which iterated envelope conditioning differs from one-shot conditioning.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvelopeP3Witness {
    pub mass: MassFunction,
    pub b: Event,
    pub c: Event,
    pub a: Event,
    /// Envelope of `a` after conditioning on `b` then `c`.
    pub iterated: Rational,
    /// Envelope of `a` after conditioning on `b ∩ c`.
    pub direct: Rational,
}

impl EnvelopeP3Witness {
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("space".into(), self.mass.space().to_json());
        obj.insert("mass".into(), self.mass.to_json());
        obj.insert("b".into(), self.b.to_json());
        obj.insert("c".into(), self.c.to_json());
        obj.insert("a".into(), self.a.to_json());
        obj.insert("iterated".into(), Value::String(fmt_rational(&self.iterated)));
        obj.insert("direct".into(), Value::String(fmt_rational(&self.direct)));
        Value::Object(obj)
    }
}

/// First `(b, c, a)` with `Pl(b ∩ c) > 0` where the two routes disagree.
pub fn envelope_p3_search(m: &MassFunction) -> Result<Option<EnvelopeP3Witness>> {
    let space = m.space();
    let x = dominated_set(&m.belief());
    for b in space.events() {
        if !m.pl(&b).is_positive() {
            continue;
        }
        let after_b = envelope_update(&x, &b)?;
        for c in space.events() {
            let bc = b.intersect(&c)?;
            if !m.pl(&bc).is_positive() {
                continue;
            }
            let iterated = conditional_envelope(&after_b, &c)?;
            let direct = conditional_envelope(&x, &bc)?;
            for a in space.events() {
                if iterated.at(&a) != direct.at(&a) {
                    return Ok(Some(EnvelopeP3Witness {
                        mass: m.clone(),
                        b,
                        c,
                        iterated: iterated.at(&a).clone(),
                        direct: direct.at(&a).clone(),
                        a,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// A fixed catalog of mass functions on two to four atoms.
pub fn mass_catalog() -> Vec<MassFunction> {
    let mut out = Vec::new();
    for n in 2..=4 {
        let s = MeasureSpace::numbered(n);
        out.push(MassFunction::vacuous(&s));
        let share = rat(1, n as i64);
        out.push(MassFunction::new(&s, (0..n).map(|w| (s.singleton(w), share.clone())).collect()).expect("uniform"));
    }
    let s3 = MeasureSpace::numbered(3);
    let proper: Vec<Event> = s3.events().filter(|e| !e.is_empty() && !e.is_full()).collect();
    for (i, e) in proper.iter().enumerate() {
        for f in &proper[i + 1..] {
            out.push(MassFunction::new(&s3, vec![(e.clone(), rat(1, 2)), (f.clone(), rat(1, 2))]).expect("halves"));
        }
    }
    let s4 = MeasureSpace::numbered(4);
    let ev = |labels: &[&str]| s4.event(labels).expect("catalog labels");
    out.push(
        MassFunction::new(&s4, vec![(ev(&["1", "2"]), rat(1, 3)), (ev(&["2", "3", "4"]), rat(1, 3)), (s4.full(), rat(1, 3))])
            .expect("thirds"),
    );
    out.push(
        MassFunction::new(
            &s4,
            vec![
                (ev(&["1"]), rat(1, 4)),
                (ev(&["2", "3"]), rat(1, 4)),
                (ev(&["3", "4"]), rat(1, 4)),
                (ev(&["1", "4"]), rat(1, 4)),
            ],
        )
        .expect("quarters"),
    );
    out.push(
        MassFunction::new(&s4, vec![(ev(&["1", "2", "3"]), rat(1, 2)), (ev(&["4"]), rat(1, 6)), (ev(&["2", "4"]), rat(1, 3))])
            .expect("mixed"),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure;
    use crate::rational::int;

    fn example() -> (MeasureSpace, MassFunction) {
        let s = MeasureSpace::numbered(3);
        let m = MassFunction::new(&s, vec![(s.event(&["1", "2"]).unwrap(), rat(1, 2)), (s.singleton(2), rat(1, 2))]).unwrap();
        (s, m)
    }

    #[test]
    fn validation() {
        let s = MeasureSpace::numbered(2);
        assert!(MassFunction::new(&s, vec![(s.full(), rat(1, 2))]).is_err());
        assert!(MassFunction::new(&s, vec![(s.empty_event(), rat(1, 2)), (s.full(), rat(1, 2))]).is_err());
        assert!(MassFunction::new(&s, vec![(s.full(), rat(3, 2)), (s.singleton(0), rat(-1, 2))]).is_err());
    }

    #[test]
    fn bel_and_pl() {
        let (s, m) = example();
        for a in s.events() {
            assert!(m.bel(&a) <= m.pl(&a));
            assert_eq!(m.pl(&a), int(1) - m.bel(&a.complement()));
        }
        assert_eq!(m.bel(&s.event(&["1", "2"]).unwrap()), rat(1, 2));
        assert_eq!(m.pl(&s.singleton(0)), rat(1, 2));
    }

    #[test]
    fn dominated_set_vertices() {
        let (s, m) = example();
        let x = dominated_set(&m.belief());
        let CredalSet::Polytope(p) = &x else { panic!() };
        let v = p.vertices().unwrap();
        let expect = vec![
            Measure::new(&s, vec![int(0), rat(1, 2), rat(1, 2)]).unwrap(),
            Measure::new(&s, vec![rat(1, 2), int(0), rat(1, 2)]).unwrap(),
        ];
        assert_eq!(v, expect);
        let vac = dominated_set(&MassFunction::vacuous(&s).belief());
        let CredalSet::Polytope(p) = &vac else { panic!() };
        assert_eq!(p.vertices().unwrap().len(), 3);
    }

    #[test]
    fn envelopes() {
        let (s, m) = example();
        let x = dominated_set(&m.belief());
        let a = s.singleton(0);
        let b = s.event(&["1", "3"]).unwrap();
        assert_eq!(lower_envelope(&x, &a, None).unwrap(), int(0));
        assert_eq!(lower_envelope(&x, &a, Some(&b)).unwrap(), int(0));
        assert_eq!(fh_closed_form(&m, &a, &b).unwrap(), int(0));
        let pr = Measure::new(&s, vec![rat(1, 4), rat(1, 4), rat(1, 2)]).unwrap();
        let single = CredalSet::singleton(&pr);
        assert_eq!(lower_envelope(&single, &a, Some(&b)).unwrap(), rat(1, 3));
        let null = CredalSet::singleton(&Measure::point_mass(&s, 1));
        assert_eq!(lower_envelope(&null, &a, Some(&b)), Err(Error::AllEvidenceNull));
    }

    #[test]
    fn dempster() {
        let (s, m) = example();
        let bel = m.belief();
        let a = s.singleton(0);
        let b = s.event(&["1", "3"]).unwrap();
        assert_eq!(dempster_conditional(&bel, &a, &b).unwrap(), (rat(1, 2), rat(1, 2)));
        assert_eq!(dempster_conditional(&bel, &a, &s.full()).unwrap(), (m.bel(&a), m.pl(&a)));
        assert_eq!(dempster_conditional(&bel, &b, &b).unwrap(), (int(1), int(1)));
        let point = MassFunction::new(&s, vec![(s.singleton(0), int(1))]).unwrap();
        assert_eq!(dempster_conditional(&point.belief(), &a, &s.singleton(1)), Err(Error::NullPlausibility));
    }

    #[test]
    fn gilboa_schmeidler() {
        let (s, m) = example();
        let x = dominated_set(&m.belief());
        assert!(gs_check(&x).unwrap().holds());
        let two = CredalSet::finite(&s, vec![Measure::point_mass(&s, 0), Measure::point_mass(&s, 1)]).unwrap();
        assert!(!gs_check(&two).unwrap().holds());
        let half = CredalSet::polytope(&s, vec![LinearConstraint::ge(s.singleton(0).indicator(), rat(1, 2))]).unwrap();
        let report = gs_check(&half).unwrap();
        assert!(report.holds());
        assert_eq!(report.lower.unwrap().at(&s.singleton(0)), &rat(1, 2));
        assert!(matches!(gs_check(&CredalSet::empty(&MeasureSpace::numbered(7))), Err(Error::DimensionTooLarge { .. })));
    }

    #[test]
    fn max_likelihood_is_dempster() {
        let (s, m) = example();
        let x = dominated_set(&m.belief());
        let b = s.event(&["1", "3"]).unwrap();
        assert_eq!(ml_dempster_check(&x, &b).unwrap(), MlDempster::Agree);
        let face = apply_rule(RuleId::Ml, &x, &b).unwrap().result;
        assert_eq!(face.inf_prob(&s.singleton(0)).unwrap(), Some(rat(1, 2)));
        let pr = CredalSet::singleton(&Measure::uniform(&s));
        assert_eq!(ml_dempster_check(&pr, &b).unwrap(), MlDempster::Agree);
        assert_eq!(ml_dempster_check(&x, &s.full()).unwrap(), MlDempster::Agree);
    }

    #[test]
    fn catalog_is_large_enough() {
        let cat = mass_catalog();
        assert!(cat.len() >= 20);
        assert!(cat.iter().all(|m| m.space().size() <= 4));
    }

    #[test]
    fn json_round_trip() {
        let (s, m) = example();
        assert_eq!(MassFunction::from_json(&s, &m.to_json()).unwrap(), m);
    }
}
