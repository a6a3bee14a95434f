use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use rayon::prelude::*;
use serde_json::{Map, Value};

use super::Fixture;
use crate::credal::CredalSet;
use crate::error::{Error, Result};
use crate::measure::{Event, Measure};
use crate::rational::{fmt_rational, Rational};
use crate::rules::{apply_rule, RuleId};

/// `sup { Pr'(A) : Pr' in Upd(Pr, B) } / Pr(A|B)`, or `-inf` on an empty update.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SupProb {
    NegInfinity,
    Value(Rational),
}

impl fmt::Display for SupProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupProb::NegInfinity => f.write_str("-inf"),
            SupProb::Value(v) => f.write_str(&fmt_rational(v)),
        }
    }
}

pub fn supprob_eval(rule: RuleId, pr: &Measure, a: &Event, b: &Event) -> Result<SupProb> {
    if !a.is_subset(b) {
        return Err(Error::PreconditionViolated("supprob needs A inside B".into()));
    }
    let pa = pr.prob(a);
    if pa.is_zero() {
        return Err(Error::PreconditionViolated("supprob needs Pr(A) > 0".into()));
    }
    let out = apply_rule(rule, &CredalSet::singleton(pr), b)?.result;
    Ok(match out.sup_prob(a)? {
        None => SupProb::NegInfinity,
        Some(s) => SupProb::Value(s * pr.prob(b) / pa),
    })
}

/// All samples sharing `(x, y) = (Pr(A), Pr(B))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupProbCell {
    pub x: Rational,
    pub y: Rational,
    /// The value at the first sample in pool order.
    pub value: SupProb,
    pub samples: usize,
    /// Whether every sample gave `value`.
    pub consistent: bool,
    /// A sample disagreeing with the first, when there is one.
    pub conflict: Option<(Fixture, SupProb)>,
    pub first: Fixture,
}

impl SupProbCell {
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("x".into(), Value::String(fmt_rational(&self.x)));
        obj.insert("y".into(), Value::String(fmt_rational(&self.y)));
        obj.insert("value".into(), Value::String(self.value.to_string()));
        obj.insert("samples".into(), self.samples.into());
        obj.insert("consistent".into(), Value::Bool(self.consistent));
        Value::Object(obj)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupProbTable {
    pub rule: RuleId,
    /// Sorted by `(y, x)`.
    pub cells: Vec<SupProbCell>,
}

impl SupProbTable {
    pub fn cell(&self, x: &Rational, y: &Rational) -> Option<&SupProbCell> {
        self.cells.iter().find(|c| &c.x == x && &c.y == y)
    }

    pub fn is_consistent(&self) -> bool {
        self.cells.iter().all(|c| c.consistent)
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("rule".into(), Value::String(self.rule.name()));
        obj.insert("consistent".into(), Value::Bool(self.is_consistent()));
        obj.insert("cells".into(), Value::Array(self.cells.iter().map(SupProbCell::to_json).collect()));
        Value::Object(obj)
    }
}

/// Every `(pr, A, B)` with `A ⊆ B`, `Pr(A) > 0`, drawn from singleton fixtures.
fn samples(fixtures: &[Fixture]) -> Vec<(Fixture, Event)> {
    let mut out = Vec::new();
    for fx in fixtures {
        let Some(pr) = fx.measure() else { continue };
        for a in fx.b.subsets() {
            if !pr.prob(&a).is_zero() {
                out.push((fx.clone(), a));
            }
        }
    }
    out
}

/// Tabulates `V(x, y)` for one rule over singleton fixtures.
pub fn supprob_table(rule: RuleId, fixtures: &[Fixture]) -> Result<SupProbTable> {
    let samples = samples(fixtures);
    let values: Vec<SupProb> = samples
        .par_iter()
        .map(|(fx, a)| supprob_eval(rule, fx.measure().expect("singleton"), a, &fx.b))
        .collect::<Result<_>>()?;
    let mut cells: BTreeMap<(Rational, Rational), SupProbCell> = BTreeMap::new();
    for ((fx, a), v) in samples.into_iter().zip(values) {
        let pr = fx.measure().expect("singleton");
        let (x, y) = (pr.prob(&a), pr.prob(&fx.b));
        let sample = fx.clone().with_a(a);
        let cell = cells.entry((y.clone(), x.clone())).or_insert_with(|| SupProbCell {
            x,
            y,
            value: v.clone(),
            samples: 0,
            consistent: true,
            conflict: None,
            first: sample.clone(),
        });
        cell.samples += 1;
        if cell.value != v && cell.consistent {
            cell.consistent = false;
            cell.conflict = Some((sample, v));
        }
    }
    Ok(SupProbTable { rule, cells: cells.into_values().collect() })
}

pub fn supprob_tables(rules: &[RuleId], fixtures: &[Fixture]) -> Result<Vec<SupProbTable>> {
    rules.iter().map(|&r| supprob_table(r, fixtures)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{grid_measures, MeasureSpace};
    use crate::rational::{int, rat};

    #[test]
    fn cond_is_one_everywhere() {
        let s = MeasureSpace::numbered(3);
        for pr in grid_measures(&s, 4) {
            for b in s.events() {
                for a in b.subsets().filter(|a| !pr.prob(a).is_zero()) {
                    assert_eq!(supprob_eval(RuleId::Cond, &pr, &a, &b).unwrap(), SupProb::Value(int(1)));
                }
            }
        }
    }

    #[test]
    fn subset_on_uniform() {
        let s = MeasureSpace::numbered(3);
        let u = Measure::uniform(&s);
        let v = supprob_eval(RuleId::Subset, &u, &s.singleton(0), &s.event(&["1", "2"]).unwrap()).unwrap();
        assert_eq!(v, SupProb::Value(int(2)));
        let w = supprob_eval(RuleId::Subset, &u, &s.singleton(0), &s.full()).unwrap();
        assert_eq!(w, SupProb::Value(int(1)));
    }

    #[test]
    fn constrain_is_minus_infinity_off_certainty() {
        let s = MeasureSpace::numbered(2);
        let u = Measure::uniform(&s);
        assert_eq!(supprob_eval(RuleId::Constrain, &u, &s.singleton(0), &s.singleton(0)).unwrap(), SupProb::NegInfinity);
        assert_eq!(SupProb::NegInfinity.to_string(), "-inf");
    }

    #[test]
    fn preconditions() {
        let s = MeasureSpace::numbered(2);
        let pr = Measure::point_mass(&s, 0);
        assert!(supprob_eval(RuleId::Cond, &pr, &s.singleton(1), &s.full()).is_err());
        assert!(supprob_eval(RuleId::Cond, &pr, &s.full(), &s.singleton(0)).is_err());
    }

    #[test]
    fn table_groups_by_probabilities() {
        let s = MeasureSpace::numbered(3);
        let fixtures: Vec<Fixture> = grid_measures(&s, 2)
            .iter()
            .flat_map(|pr| s.events().map(move |b| Fixture::new(CredalSet::singleton(pr), b)))
            .collect();
        let t = supprob_table(RuleId::Subset, &fixtures).unwrap();
        assert!(t.is_consistent());
        let c = t.cell(&rat(1, 2), &int(1)).unwrap();
        assert_eq!(c.value, SupProb::Value(int(1)));
        assert_eq!(t.cell(&rat(1, 2), &rat(1, 2)).unwrap().value, SupProb::Value(int(1)));
    }
}
