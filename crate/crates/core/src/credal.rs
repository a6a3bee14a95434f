//! Sets of probability measures in three representations.
//!
//! Finite sets are explicit lists. Polytopes are cut out of the simplex by
//! linear constraints, strict ones included. Derived sets (conditioned images,
//! pushforward images, unions) are never enumerated: membership, emptiness and
//! linear suprema are decided by exact LPs over a lifted description
//! `{ map . z : z >= 0, constraints(z) }`, with conditioning linearised by the
//! usual homogenising substitution `z = t.p`, `rho = t`, `t = 1/p(B)`.

use std::collections::HashSet;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::lp::{self, dot, LinearConstraint, LpOutcome, LpProblem, Relation, Sense};
use crate::measure::{Event, Measure, MeasureSpace, RepShift};
use crate::rational::{fmt_rational, parse_rational, Rational};

/// A deduplicated, canonically ordered list of measures.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteSet {
    space: MeasureSpace,
    measures: Vec<Measure>,
}

impl FiniteSet {
    pub fn new(space: &MeasureSpace, mut measures: Vec<Measure>) -> Result<Self> {
        if measures.iter().any(|m| m.space() != space) {
            return Err(Error::SpaceMismatch("finite set members live on different spaces".into()));
        }
        measures.sort();
        measures.dedup();
        Ok(Self { space: space.clone(), measures })
    }

    pub fn empty(space: &MeasureSpace) -> Self {
        Self { space: space.clone(), measures: Vec::new() }
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn measures(&self) -> &[Measure] {
        &self.measures
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn contains(&self, pr: &Measure) -> bool {
        self.measures.binary_search(pr).is_ok()
    }
}

/// `{Pr in simplex : every constraint holds}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Polytope {
    space: MeasureSpace,
    constraints: Vec<LinearConstraint>,
}

impl Polytope {
    pub fn new(space: &MeasureSpace, constraints: Vec<LinearConstraint>) -> Result<Self> {
        if constraints.iter().any(|c| c.dimension() != space.size()) {
            return Err(Error::SpaceMismatch("constraint dimension differs from the space size".into()));
        }
        Ok(Self { space: space.clone(), constraints })
    }

    pub fn simplex(space: &MeasureSpace) -> Self {
        Self { space: space.clone(), constraints: Vec::new() }
    }

    /// `{Pr : Pr(b) = 1}`.
    pub fn concentrated_on(b: &Event) -> Self {
        Self { space: b.space().clone(), constraints: vec![LinearConstraint::eq(b.indicator(), Rational::one())] }
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn with(mut self, c: LinearConstraint) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn contains(&self, pr: &Measure) -> bool {
        pr.space() == &self.space && self.constraints.iter().all(|c| c.holds_at(pr.weights()))
    }

    pub fn is_closed(&self) -> bool {
        !self.constraints.iter().any(LinearConstraint::is_strict)
    }

    pub fn closure(&self) -> Polytope {
        Self {
            space: self.space.clone(),
            constraints: self.constraints.iter().map(LinearConstraint::relaxed).collect(),
        }
    }

    /// Extreme points of the closure.
    pub fn vertices(&self) -> Result<Vec<Measure>> {
        let closed = self.closure();
        lp::vertices(self.space.size(), &closed.constraints)?
            .into_iter()
            .map(|w| Measure::new(&self.space, w))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Derived {
    /// `{ p(. | event) : p in base, p(event) > 0 }`.
    CondImage { base: CredalSet, event: Event },
    /// `{ f*(p) : p in base }`.
    Pushforward { base: CredalSet, shift: RepShift },
    Union { space: MeasureSpace, branches: Vec<CredalSet> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CredalSet {
    Finite(FiniteSet),
    Polytope(Polytope),
    Derived(Box<Derived>),
}

/// Outcome of comparing two sets on a candidate pool.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Probe {
    EqualOnCandidates,
    Differ(Measure),
}

struct Lifted {
    dim: usize,
    constraints: Vec<LinearConstraint>,
    /// One row per atom of the represented space.
    map: Vec<Vec<Rational>>,
}

impl Lifted {
    fn image(&self, z: &[Rational]) -> Vec<Rational> {
        self.map.iter().map(|row| dot(row, z)).collect()
    }

    fn feasible_point(&self) -> Option<Vec<Rational>> {
        lp::strict_feasible(self.dim, &self.constraints)
    }

    fn contains(&self, pr: &Measure) -> bool {
        let mut cons = self.constraints.clone();
        for (row, w) in self.map.iter().zip(pr.weights()) {
            cons.push(LinearConstraint::eq(row.clone(), w.clone()));
        }
        lp::strict_feasible(self.dim, &cons).is_some()
    }

    /// Optimum of `coeffs . (map z)` over the closure; the caller ensures nonemptiness.
    fn optimize(&self, coeffs: &[Rational], sense: Sense) -> Option<(Rational, Vec<Rational>)> {
        let objective: Vec<Rational> = (0..self.dim)
            .map(|k| {
                let mut acc = Rational::zero();
                for (c, row) in coeffs.iter().zip(&self.map) {
                    if !c.is_zero() && !row[k].is_zero() {
                        acc += c * &row[k];
                    }
                }
                acc
            })
            .collect();
        let problem = LpProblem {
            dimension: self.dim,
            objective,
            sense,
            constraints: self.constraints.clone(),
        };
        match lp::lp_solve(&problem) {
            LpOutcome::Optimal { value, point } => Some((value, self.image(&point))),
            _ => None,
        }
    }
}

impl CredalSet {
    pub fn empty(space: &MeasureSpace) -> Self {
        CredalSet::Finite(FiniteSet::empty(space))
    }

    pub fn finite(space: &MeasureSpace, measures: Vec<Measure>) -> Result<Self> {
        Ok(CredalSet::Finite(FiniteSet::new(space, measures)?))
    }

    pub fn singleton(pr: &Measure) -> Self {
        CredalSet::Finite(FiniteSet { space: pr.space().clone(), measures: vec![pr.clone()] })
    }

    pub fn polytope(space: &MeasureSpace, constraints: Vec<LinearConstraint>) -> Result<Self> {
        Ok(CredalSet::Polytope(Polytope::new(space, constraints)?))
    }

    pub fn space(&self) -> &MeasureSpace {
        match self {
            CredalSet::Finite(f) => f.space(),
            CredalSet::Polytope(p) => p.space(),
            CredalSet::Derived(d) => match d.as_ref() {
                Derived::CondImage { event, .. } => event.space(),
                Derived::Pushforward { shift, .. } => shift.target(),
                Derived::Union { space, .. } => space,
            },
        }
    }

    pub fn as_finite(&self) -> Option<&FiniteSet> {
        match self {
            CredalSet::Finite(f) => Some(f),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CredalSet::Finite(_) => "finite",
            CredalSet::Polytope(_) => "polytope",
            CredalSet::Derived(d) => match d.as_ref() {
                Derived::CondImage { .. } => "cond_image",
                Derived::Pushforward { .. } => "pushforward",
                Derived::Union { .. } => "union",
            },
        }
    }

    /// Conditions every member with positive evidence.
    pub fn cond_image(&self, b: &Event) -> Result<CredalSet> {
        if b.space() != self.space() {
            return Err(Error::SpaceMismatch("evidence is not on the set's space".into()));
        }
        Ok(match self {
            CredalSet::Finite(f) => {
                let ms = f
                    .measures
                    .iter()
                    .filter(|m| m.prob(b).is_positive())
                    .map(|m| m.conditional(b))
                    .collect::<Result<Vec<_>>>()?;
                CredalSet::finite(f.space(), ms)?
            }
            CredalSet::Derived(d) if matches!(d.as_ref(), Derived::Union { .. }) => {
                let Derived::Union { space, branches } = d.as_ref() else { unreachable!() };
                let branches = branches.iter().map(|x| x.cond_image(b)).collect::<Result<Vec<_>>>()?;
                CredalSet::union(space, branches)?
            }
            _ => CredalSet::Derived(Box::new(Derived::CondImage { base: self.clone(), event: b.clone() })),
        })
    }

    pub fn pushforward(&self, f: &RepShift) -> Result<CredalSet> {
        if f.source() != self.space() {
            return Err(Error::SpaceMismatch("set is not on the shift's source".into()));
        }
        Ok(match self {
            CredalSet::Finite(set) => {
                let ms = set.measures.iter().map(|m| f.pushforward(m)).collect::<Result<Vec<_>>>()?;
                CredalSet::finite(f.target(), ms)?
            }
            CredalSet::Derived(d) if matches!(d.as_ref(), Derived::Union { .. }) => {
                let Derived::Union { branches, .. } = d.as_ref() else { unreachable!() };
                let branches = branches.iter().map(|x| x.pushforward(f)).collect::<Result<Vec<_>>>()?;
                CredalSet::union(f.target(), branches)?
            }
            _ if f.is_identity() => self.clone(),
            _ => CredalSet::Derived(Box::new(Derived::Pushforward { base: self.clone(), shift: f.clone() })),
        })
    }

    /// Union of sets on one space; flattens nested unions and merges finite branches.
    pub fn union(space: &MeasureSpace, branches: Vec<CredalSet>) -> Result<CredalSet> {
        let mut finite = Vec::new();
        let mut other = Vec::new();
        let mut stack: Vec<CredalSet> = branches.into_iter().rev().collect();
        while let Some(x) = stack.pop() {
            if x.space() != space {
                return Err(Error::SpaceMismatch("union branches live on different spaces".into()));
            }
            match x {
                CredalSet::Finite(f) => finite.extend(f.measures),
                CredalSet::Derived(d) if matches!(d.as_ref(), Derived::Union { .. }) => {
                    let Derived::Union { branches, .. } = *d else { unreachable!() };
                    stack.extend(branches.into_iter().rev());
                }
                x => other.push(x),
            }
        }
        if other.is_empty() {
            return CredalSet::finite(space, finite);
        }
        if !finite.is_empty() {
            other.insert(0, CredalSet::finite(space, finite)?);
        }
        if other.len() == 1 {
            return Ok(other.pop().expect("one branch"));
        }
        Ok(CredalSet::Derived(Box::new(Derived::Union { space: space.clone(), branches: other })))
    }

    /// `x` with every strict relation relaxed. Derived sets are rejected.
    pub fn closure(&self) -> Result<CredalSet> {
        match self {
            CredalSet::Finite(_) => Ok(self.clone()),
            CredalSet::Polytope(p) => Ok(CredalSet::Polytope(p.closure())),
            CredalSet::Derived(_) => {
                Err(Error::UnsupportedRepresentation("closure of a derived set".into()))
            }
        }
    }

    /// `x ∩ {Pr : c}`.
    pub fn restrict(&self, c: &LinearConstraint) -> Result<CredalSet> {
        if c.dimension() != self.space().size() {
            return Err(Error::SpaceMismatch("constraint dimension differs from the space size".into()));
        }
        Ok(match self {
            CredalSet::Finite(f) => CredalSet::Finite(FiniteSet {
                space: f.space.clone(),
                measures: f.measures.iter().filter(|m| c.holds_at(m.weights())).cloned().collect(),
            }),
            CredalSet::Polytope(p) => CredalSet::Polytope(p.clone().with(c.clone())),
            CredalSet::Derived(d) => match d.as_ref() {
                Derived::Pushforward { base, shift } => {
                    let pulled = LinearConstraint::new(shift.pull_coefficients(&c.coeffs), c.rel, c.bound.clone());
                    base.restrict(&pulled)?.pushforward(shift)?
                }
                Derived::CondImage { base, event } => {
                    // c.(p|B) rel b  <=>  sum_{i in B} (c_i - b) p_i rel 0, given p(B) > 0.
                    let coeffs = (0..event.space().size())
                        .map(|i| if event.contains(i) { &c.coeffs[i] - &c.bound } else { Rational::zero() })
                        .collect();
                    let pulled = LinearConstraint::new(coeffs, c.rel, Rational::zero());
                    base.restrict(&pulled)?.cond_image(event)?
                }
                Derived::Union { space, branches } => {
                    let branches = branches.iter().map(|x| x.restrict(c)).collect::<Result<Vec<_>>>()?;
                    CredalSet::union(space, branches)?
                }
            },
        })
    }

    fn lift(&self) -> Result<Lifted> {
        match self {
            CredalSet::Polytope(p) => {
                let n = p.space.size();
                let mut constraints = p.constraints.clone();
                constraints.push(lp::simplex_row(n));
                let map = (0..n)
                    .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
                    .collect();
                Ok(Lifted { dim: n, constraints, map })
            }
            CredalSet::Derived(d) => match d.as_ref() {
                Derived::Pushforward { base, shift } => {
                    let inner = base.lift()?;
                    let mut map = vec![vec![Rational::zero(); inner.dim]; shift.target().size()];
                    for (i, row) in inner.map.iter().enumerate() {
                        let target = &mut map[shift.image(i)];
                        for (t, v) in target.iter_mut().zip(row) {
                            *t += v;
                        }
                    }
                    Ok(Lifted { dim: inner.dim, constraints: inner.constraints, map })
                }
                Derived::CondImage { base, event } => {
                    let inner = base.lift()?;
                    let rho = inner.dim;
                    let dim = inner.dim + 1;
                    let mut constraints: Vec<LinearConstraint> = inner
                        .constraints
                        .iter()
                        .map(|c| {
                            let mut w = c.widened(dim);
                            w.coeffs[rho] = -c.bound.clone();
                            w.bound = Rational::zero();
                            w
                        })
                        .collect();
                    let mut positive = vec![Rational::zero(); dim];
                    positive[rho] = -Rational::one();
                    constraints.push(LinearConstraint::lt(positive, Rational::zero()));
                    let mut mass = vec![Rational::zero(); dim];
                    for i in event.members() {
                        for (m, v) in mass.iter_mut().zip(&inner.map[i]) {
                            *m += v;
                        }
                    }
                    constraints.push(LinearConstraint::eq(mass, Rational::one()));
                    let map = inner
                        .map
                        .iter()
                        .enumerate()
                        .map(|(i, row)| {
                            let mut r = if event.contains(i) { row.clone() } else { vec![Rational::zero(); inner.dim] };
                            r.push(Rational::zero());
                            r
                        })
                        .collect();
                    Ok(Lifted { dim, constraints, map })
                }
                Derived::Union { .. } => Err(Error::UnsupportedRepresentation("a union is not convex".into())),
            },
            CredalSet::Finite(_) => {
                Err(Error::UnsupportedRepresentation("finite sets are handled directly".into()))
            }
        }
    }

    pub fn contains(&self, pr: &Measure) -> Result<bool> {
        if pr.space() != self.space() {
            return Err(Error::SpaceMismatch("measure is not on the set's space".into()));
        }
        Ok(match self {
            CredalSet::Finite(f) => f.contains(pr),
            CredalSet::Polytope(p) => p.contains(pr),
            CredalSet::Derived(d) => match d.as_ref() {
                Derived::CondImage { event, .. } if !pr.support().is_subset(event) => false,
                Derived::Union { branches, .. } => {
                    for x in branches {
                        if x.contains(pr)? {
                            return Ok(true);
                        }
                    }
                    false
                }
                _ => self.lift()?.contains(pr),
            },
        })
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.some_member()?.is_none())
    }

    /// Some member, if the set is nonempty.
    pub fn some_member(&self) -> Result<Option<Measure>> {
        match self {
            CredalSet::Finite(f) => Ok(f.measures.first().cloned()),
            CredalSet::Derived(d) if matches!(d.as_ref(), Derived::Union { .. }) => {
                let Derived::Union { branches, .. } = d.as_ref() else { unreachable!() };
                for x in branches {
                    if let Some(m) = x.some_member()? {
                        return Ok(Some(m));
                    }
                }
                Ok(None)
            }
            _ => {
                let lifted = self.lift()?;
                match lifted.feasible_point() {
                    Some(z) => Ok(Some(Measure::new(self.space(), lifted.image(&z))?)),
                    None => Ok(None),
                }
            }
        }
    }

    /// Supremum of `coeffs . Pr` over the set with a measure of the closure attaining it;
    /// `None` for the empty set.
    pub fn optimize_linear(&self, coeffs: &[Rational], sense: Sense) -> Result<Option<(Rational, Measure)>> {
        if coeffs.len() != self.space().size() {
            return Err(Error::SpaceMismatch("functional dimension differs from the space size".into()));
        }
        let better = |a: &Rational, b: &Rational| match sense {
            Sense::Max => a > b,
            Sense::Min => a < b,
        };
        match self {
            CredalSet::Finite(f) => {
                let mut best: Option<(Rational, Measure)> = None;
                for m in &f.measures {
                    let v = dot(coeffs, m.weights());
                    if best.as_ref().map_or(true, |(b, _)| better(&v, b)) {
                        best = Some((v, m.clone()));
                    }
                }
                Ok(best)
            }
            CredalSet::Derived(d) if matches!(d.as_ref(), Derived::Union { .. }) => {
                let Derived::Union { branches, .. } = d.as_ref() else { unreachable!() };
                let mut best: Option<(Rational, Measure)> = None;
                for x in branches {
                    if let Some((v, m)) = x.optimize_linear(coeffs, sense)? {
                        if best.as_ref().map_or(true, |(b, _)| better(&v, b)) {
                            best = Some((v, m));
                        }
                    }
                }
                Ok(best)
            }
            _ => {
                let lifted = self.lift()?;
                if lifted.feasible_point().is_none() {
                    return Ok(None);
                }
                let (v, w) = lifted
                    .optimize(coeffs, sense)
                    .ok_or_else(|| Error::MalformedProblem("bounded set gave an unbounded LP".into()))?;
                Ok(Some((v, Measure::new(self.space(), w)?)))
            }
        }
    }

    pub fn sup_linear(&self, coeffs: &[Rational]) -> Result<Option<Rational>> {
        Ok(self.optimize_linear(coeffs, Sense::Max)?.map(|(v, _)| v))
    }

    pub fn inf_linear(&self, coeffs: &[Rational]) -> Result<Option<Rational>> {
        Ok(self.optimize_linear(coeffs, Sense::Min)?.map(|(v, _)| v))
    }

    pub fn sup_prob(&self, a: &Event) -> Result<Option<Rational>> {
        self.sup_linear(&a.indicator())
    }

    pub fn inf_prob(&self, a: &Event) -> Result<Option<Rational>> {
        self.inf_linear(&a.indicator())
    }

    /// Measures worth probing: members, closure vertices, an interior point, and
    /// their images through derived operations.
    pub fn seeds(&self) -> Result<Vec<Measure>> {
        let mut out = Vec::new();
        match self {
            CredalSet::Finite(f) => out.extend(f.measures.iter().cloned()),
            CredalSet::Polytope(p) => {
                if p.space.size() <= lp::VERTEX_DIMENSION_CAP {
                    let vs = p.vertices()?;
                    let middle = if vs.len() > 1 { Some(centroid(&p.space, &vs)?) } else { None };
                    out.extend(vs);
                    out.extend(middle);
                }
                if let Some(m) = self.some_member()? {
                    out.push(m);
                }
            }
            CredalSet::Derived(d) => match d.as_ref() {
                Derived::CondImage { base, event } => {
                    for m in base.seeds()? {
                        if m.prob(event).is_positive() {
                            out.push(m.conditional(event)?);
                        }
                    }
                    if let Some(m) = self.some_member()? {
                        out.push(m);
                    }
                }
                Derived::Pushforward { base, shift } => {
                    for m in base.seeds()? {
                        out.push(shift.pushforward(&m)?);
                    }
                }
                Derived::Union { branches, .. } => {
                    for x in branches {
                        out.extend(x.seeds()?);
                    }
                }
            },
        }
        Ok(dedup_in_order(out))
    }

    pub fn to_json(&self) -> Value {
        match self {
            CredalSet::Finite(f) => Value::Array(f.measures.iter().map(Measure::to_json).collect()),
            CredalSet::Polytope(p) => json!({ "polytope": p.constraints.iter().map(constraint_to_json).collect::<Vec<_>>() }),
            CredalSet::Derived(d) => match d.as_ref() {
                Derived::CondImage { base, event } => {
                    json!({ "cond_image": { "event": event.to_json(), "base": base.to_json() } })
                }
                Derived::Pushforward { base, shift } => {
                    json!({ "pushforward": { "shift": shift.to_json(), "base": base.to_json() } })
                }
                Derived::Union { branches, .. } => {
                    json!({ "union": branches.iter().map(CredalSet::to_json).collect::<Vec<_>>() })
                }
            },
        }
    }

    pub fn from_json(space: &MeasureSpace, value: &Value) -> Result<CredalSet> {
        if let Some(arr) = value.as_array() {
            let ms = arr.iter().map(|v| Measure::from_json(space, v)).collect::<Result<Vec<_>>>()?;
            return CredalSet::finite(space, ms);
        }
        let obj = value
            .as_object()
            .filter(|o| o.len() == 1)
            .ok_or_else(|| Error::Parse("a credal set is an array of measures or a single-key object".into()))?;
        let (key, body) = obj.iter().next().expect("one key");
        match key.as_str() {
            "polytope" => {
                let arr = body.as_array().ok_or_else(|| Error::Parse("`polytope` holds an array".into()))?;
                let cons = arr.iter().map(|c| constraint_from_json(space, c)).collect::<Result<Vec<_>>>()?;
                CredalSet::polytope(space, cons)
            }
            "cond_image" => {
                let event = Event::from_json(space, field(body, "event")?)?;
                CredalSet::from_json(space, field(body, "base")?)?.cond_image(&event)
            }
            "pushforward" => {
                let shift = RepShift::from_json(field(body, "shift")?)?;
                if shift.target() != space {
                    return Err(Error::SpaceMismatch("pushforward target differs from the space".into()));
                }
                CredalSet::from_json(shift.source(), field(body, "base")?)?.pushforward(&shift)
            }
            "union" => {
                let arr = body.as_array().ok_or_else(|| Error::Parse("`union` holds an array".into()))?;
                let branches = arr.iter().map(|v| CredalSet::from_json(space, v)).collect::<Result<Vec<_>>>()?;
                CredalSet::union(space, branches)
            }
            other => Err(Error::Parse(format!("unknown credal set form `{other}`"))),
        }
    }
}

impl fmt::Display for CredalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

fn field<'a>(v: &'a Value, name: &str) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| Error::Parse(format!("missing field `{name}`")))
}

pub fn constraint_to_json(c: &LinearConstraint) -> Value {
    let mut obj = Map::new();
    obj.insert("coeffs".into(), Value::Array(c.coeffs.iter().map(|r| Value::String(fmt_rational(r))).collect()));
    obj.insert("rel".into(), Value::String(c.rel.as_str().into()));
    obj.insert("bound".into(), Value::String(fmt_rational(&c.bound)));
    Value::Object(obj)
}

pub fn constraint_from_json(space: &MeasureSpace, v: &Value) -> Result<LinearConstraint> {
    let coeffs = field(v, "coeffs")?
        .as_array()
        .ok_or_else(|| Error::Parse("`coeffs` is an array of \"p/q\"".into()))?
        .iter()
        .map(|c| c.as_str().ok_or_else(|| Error::Parse("coefficients are \"p/q\" strings".into())).and_then(parse_rational))
        .collect::<Result<Vec<_>>>()?;
    if coeffs.len() != space.size() {
        return Err(Error::SpaceMismatch("constraint dimension differs from the space size".into()));
    }
    let rel = match field(v, "rel")?.as_str() {
        Some("lt") => Relation::Lt,
        Some("le") => Relation::Le,
        Some("eq") => Relation::Eq,
        _ => return Err(Error::Parse("`rel` is one of \"lt\", \"le\", \"eq\"".into())),
    };
    let bound = parse_rational(field(v, "bound")?.as_str().ok_or_else(|| Error::Parse("`bound` is a \"p/q\" string".into()))?)?;
    Ok(LinearConstraint::new(coeffs, rel, bound))
}

fn centroid(space: &MeasureSpace, ms: &[Measure]) -> Result<Measure> {
    let k = Rational::from_integer(ms.len().into());
    let weights = (0..space.size())
        .map(|i| ms.iter().map(|m| m.weight(i)).sum::<Rational>() / &k)
        .collect();
    Measure::new(space, weights)
}

pub fn midpoint(a: &Measure, b: &Measure) -> Measure {
    let half = Rational::new(1.into(), 2.into());
    let weights = a.weights().iter().zip(b.weights()).map(|(x, y)| (x + y) * &half).collect();
    Measure::new(a.space(), weights).expect("midpoint of measures is a measure")
}

pub fn dedup_in_order(ms: Vec<Measure>) -> Vec<Measure> {
    let mut seen = HashSet::new();
    ms.into_iter().filter(|m| seen.insert(m.clone())).collect()
}

/// Compares `x` and `y` on their own seeds followed by `candidates`.
///
/// `Differ(m)` means `m` belongs to exactly one side. `EqualOnCandidates` is
/// only a semi-decision unless both sides are finite.
pub fn credal_equal_probe(x: &CredalSet, y: &CredalSet, candidates: &[Measure]) -> Result<Probe> {
    if x.space() != y.space() {
        return Err(Error::SpaceMismatch("compared sets live on different spaces".into()));
    }
    let mut pool = x.seeds()?;
    pool.extend(y.seeds()?);
    pool.extend(candidates.iter().filter(|m| m.space() == x.space()).cloned());
    for m in dedup_in_order(pool) {
        if x.contains(&m)? != y.contains(&m)? {
            return Ok(Probe::Differ(m));
        }
    }
    Ok(Probe::EqualOnCandidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn m(space: &MeasureSpace, w: &[(i64, i64)]) -> Measure {
        Measure::new(space, w.iter().map(|&(n, d)| rat(n, d)).collect()).unwrap()
    }

    /// `{Pr on M_2 : Pr({2}) < 1}`.
    fn open_m2() -> CredalSet {
        let s = MeasureSpace::numbered(2);
        CredalSet::polytope(&s, vec![LinearConstraint::lt(s.singleton(1).indicator(), int(1))]).unwrap()
    }

    #[test]
    fn closure_admits_the_missing_vertex() {
        let x = open_m2();
        let s = x.space().clone();
        let d2 = Measure::point_mass(&s, 1);
        assert!(!x.contains(&d2).unwrap());
        let c = x.closure().unwrap();
        assert!(c.contains(&d2).unwrap());
        assert_eq!(
            credal_equal_probe(&c, &CredalSet::Polytope(Polytope::simplex(&s)), &[]).unwrap(),
            Probe::EqualOnCandidates
        );
        assert_eq!(
            credal_equal_probe(&x, &CredalSet::Polytope(Polytope::simplex(&s)), &[d2.clone()]).unwrap(),
            Probe::Differ(d2)
        );
    }

    #[test]
    fn closure_relaxes_every_strict_row() {
        let s = MeasureSpace::numbered(2);
        let e1 = s.singleton(0).indicator();
        let x = CredalSet::polytope(&s, vec![LinearConstraint::ge(e1.clone(), rat(1, 3)), LinearConstraint::lt(e1.clone(), rat(2, 3))])
            .unwrap();
        let want = CredalSet::polytope(&s, vec![LinearConstraint::ge(e1.clone(), rat(1, 3)), LinearConstraint::le(e1, rat(2, 3))])
            .unwrap();
        assert_eq!(x.closure().unwrap(), want);
        let f = CredalSet::finite(&s, vec![Measure::uniform(&s)]).unwrap();
        assert_eq!(f.closure().unwrap(), f);
        assert!(open_m2().cond_image(&s.full()).unwrap().closure().is_err());
    }

    #[test]
    fn finite_membership_and_order() {
        let s = MeasureSpace::numbered(2);
        let a = m(&s, &[(1, 2), (1, 2)]);
        let b = m(&s, &[(1, 1), (0, 1)]);
        let x = CredalSet::finite(&s, vec![a.clone(), b.clone()]).unwrap();
        assert!(x.contains(&a).unwrap());
        let y = CredalSet::finite(&s, vec![b, a.clone(), a]).unwrap();
        assert_eq!(credal_equal_probe(&x, &y, &[]).unwrap(), Probe::EqualOnCandidates);
        assert_eq!(x, y);
    }

    #[test]
    fn cond_image_membership() {
        // X = {Pr on M_3 : Pr(1) >= 1/2}, B = {1,2}.
        let s = MeasureSpace::numbered(3);
        let x = CredalSet::polytope(&s, vec![LinearConstraint::ge(s.singleton(0).indicator(), rat(1, 2))]).unwrap();
        let b = s.event(&["1", "2"]).unwrap();
        let img = x.cond_image(&b).unwrap();
        // Oracle: (t, 1-t, 0) needs p = (a, a(1-t)/t, .) with a >= 1/2, so a/t <= 1, i.e. t >= 1/2.
        assert!(img.contains(&m(&s, &[(1, 2), (1, 2), (0, 1)])).unwrap());
        assert!(img.contains(&m(&s, &[(1, 1), (0, 1), (0, 1)])).unwrap());
        assert!(!img.contains(&m(&s, &[(1, 3), (2, 3), (0, 1)])).unwrap());
        assert!(!img.contains(&m(&s, &[(1, 2), (1, 4), (1, 4)])).unwrap());
        assert_eq!(img.inf_prob(&s.singleton(0)).unwrap(), Some(rat(1, 2)));
    }

    #[test]
    fn strict_base_survives_conditioning() {
        // X = {Pr on M_2 : Pr({2}) < 1}, B = {2}: every member of X conditioned on {2} is δ2,
        // but only members with Pr({2}) > 0 count.
        let x = open_m2();
        let s = x.space().clone();
        let img = x.cond_image(&s.singleton(1)).unwrap();
        assert!(img.contains(&Measure::point_mass(&s, 1)).unwrap());
        assert!(!img.is_empty().unwrap());
        // X ∩ {Pr({2}) = 1} is empty, so restricting the image to mass on {1} is too.
        let c = LinearConstraint::eq(s.singleton(0).indicator(), int(1));
        assert!(x.restrict(&LinearConstraint::eq(s.singleton(1).indicator(), int(1))).unwrap().is_empty().unwrap());
        assert!(img.restrict(&c).unwrap().is_empty().unwrap());
    }

    #[test]
    fn pushforward_image_membership() {
        let (s3, s2) = (MeasureSpace::numbered(3), MeasureSpace::numbered(2));
        let f = RepShift::new(&s3, &s2, vec![0, 0, 1]).unwrap();
        let x = CredalSet::polytope(&s3, vec![LinearConstraint::le(s3.singleton(2).indicator(), rat(1, 4))]).unwrap();
        let y = x.pushforward(&f).unwrap();
        assert!(y.contains(&m(&s2, &[(3, 4), (1, 4)])).unwrap());
        assert!(!y.contains(&m(&s2, &[(1, 2), (1, 2)])).unwrap());
        assert_eq!(y.sup_prob(&s2.singleton(1)).unwrap(), Some(rat(1, 4)));
        let restricted = y.restrict(&LinearConstraint::eq(s2.singleton(0).indicator(), int(1))).unwrap();
        assert_eq!(restricted.some_member().unwrap(), Some(Measure::point_mass(&s2, 0)));
    }

    #[test]
    fn json_round_trip_of_every_form() {
        let x = open_m2();
        let s = x.space().clone();
        let f = RepShift::new(&MeasureSpace::numbered(3), &s, vec![0, 1, 1]).unwrap();
        let cases = vec![
            x.clone(),
            x.cond_image(&s.singleton(0)).unwrap(),
            CredalSet::Polytope(Polytope::simplex(f.source())).pushforward(&f).unwrap(),
            CredalSet::union(&s, vec![x.clone(), CredalSet::singleton(&Measure::point_mass(&s, 1))]).unwrap(),
            CredalSet::finite(&s, vec![Measure::uniform(&s)]).unwrap(),
        ];
        for c in cases {
            assert_eq!(CredalSet::from_json(&s, &c.to_json()).unwrap(), c);
        }
    }

    #[test]
    fn union_membership_is_branchwise() {
        let x = open_m2();
        let s = x.space().clone();
        let d2 = Measure::point_mass(&s, 1);
        let u = CredalSet::union(&s, vec![x, CredalSet::singleton(&d2)]).unwrap();
        assert!(u.contains(&d2).unwrap());
        assert_eq!(u.sup_prob(&s.singleton(1)).unwrap(), Some(int(1)));
    }
}
