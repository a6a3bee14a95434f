//! Finite measure spaces, events, probability measures and representation shifts.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::rational::{fmt_rational, parse_rational, Rational};

/// Spaces are capped so that events fit a `u64` bitset.
pub const MAX_ATOMS: usize = 64;

/// A finite set of labelled atoms with the full power set as its algebra.
#[derive(Clone, Eq, Hash, PartialOrd, Ord)]
pub struct MeasureSpace {
    atoms: Arc<Vec<String>>,
}

impl PartialEq for MeasureSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.atoms, &other.atoms) || self.atoms == other.atoms
    }
}

impl fmt::Debug for MeasureSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MeasureSpace{:?}", self.atoms)
    }
}

impl MeasureSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let atoms: Vec<String> = labels.into_iter().map(Into::into).collect();
        if atoms.is_empty() {
            return Err(Error::InvalidSpace("a space needs at least one atom".into()));
        }
        if atoms.len() > MAX_ATOMS {
            return Err(Error::InvalidSpace(format!("at most {MAX_ATOMS} atoms are supported")));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::InvalidSpace("atom labels must be nonempty".into()));
            }
            if atoms[..i].contains(a) {
                return Err(Error::InvalidSpace(format!("duplicate atom label `{a}`")));
            }
        }
        Ok(Self { atoms: Arc::new(atoms) })
    }

    /// `M_n`: atoms labelled `"1"` to `"n"`.
    pub fn numbered(n: usize) -> Self {
        Self::new((1..=n).map(|i| i.to_string())).expect("numbered spaces are valid")
    }

    pub fn size(&self) -> usize {
        self.atoms.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.atoms
    }

    pub fn label(&self, i: usize) -> &str {
        &self.atoms[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a == label)
    }

    fn full_mask(&self) -> u64 {
        if self.size() == 64 {
            u64::MAX
        } else {
            (1u64 << self.size()) - 1
        }
    }

    pub fn full(&self) -> Event {
        Event { space: self.clone(), mask: self.full_mask() }
    }

    pub fn empty_event(&self) -> Event {
        Event { space: self.clone(), mask: 0 }
    }

    pub fn singleton(&self, i: usize) -> Event {
        assert!(i < self.size(), "atom index out of range");
        Event { space: self.clone(), mask: 1 << i }
    }

    pub fn event_from_mask(&self, mask: u64) -> Result<Event> {
        if mask & !self.full_mask() != 0 {
            return Err(Error::SpaceMismatch("event mentions atoms outside the space".into()));
        }
        Ok(Event { space: self.clone(), mask })
    }

    pub fn event<S: AsRef<str>>(&self, labels: &[S]) -> Result<Event> {
        let mut mask = 0u64;
        for l in labels {
            let i = self
                .index_of(l.as_ref())
                .ok_or_else(|| Error::SpaceMismatch(format!("unknown atom `{}`", l.as_ref())))?;
            mask |= 1 << i;
        }
        Ok(Event { space: self.clone(), mask })
    }

    /// All `2^n` events, ordered by bitmask.
    pub fn events(&self) -> impl Iterator<Item = Event> + '_ {
        assert!(self.size() < 32, "event enumeration is limited to small spaces");
        (0..(1u64 << self.size())).map(move |mask| Event { space: self.clone(), mask })
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.atoms.iter().map(|a| Value::String(a.clone())).collect())
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let arr = value
            .as_array()
            .ok_or_else(|| Error::Parse("a space is an array of labels".into()))?;
        let labels = arr
            .iter()
            .map(|v| v.as_str().map(str::to_owned).ok_or_else(|| Error::Parse("space labels must be strings".into())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels)
    }
}

/// A subset of the atoms of one space.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    space: MeasureSpace,
    mask: u64,
}

impl Event {
    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn contains(&self, i: usize) -> bool {
        i < 64 && self.mask >> i & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn is_full(&self) -> bool {
        self.mask == self.space.full_mask()
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.space.size()).filter(move |&i| self.contains(i))
    }

    fn same_space(&self, other: &Event) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch("events live on different spaces".into()));
        }
        Ok(())
    }

    pub fn union(&self, other: &Event) -> Result<Event> {
        self.same_space(other)?;
        Ok(Event { space: self.space.clone(), mask: self.mask | other.mask })
    }

    pub fn intersect(&self, other: &Event) -> Result<Event> {
        self.same_space(other)?;
        Ok(Event { space: self.space.clone(), mask: self.mask & other.mask })
    }

    pub fn minus(&self, other: &Event) -> Result<Event> {
        self.same_space(other)?;
        Ok(Event { space: self.space.clone(), mask: self.mask & !other.mask })
    }

    pub fn complement(&self) -> Event {
        Event { space: self.space.clone(), mask: self.space.full_mask() & !self.mask }
    }

    pub fn is_subset(&self, other: &Event) -> bool {
        self.space == other.space && self.mask & !other.mask == 0
    }

    /// Indicator vector, usable as LP coefficients.
    pub fn indicator(&self) -> Vec<Rational> {
        (0..self.space.size())
            .map(|i| if self.contains(i) { Rational::one() } else { Rational::zero() })
            .collect()
    }

    /// Sub-events, ordered by bitmask.
    pub fn subsets(&self) -> impl Iterator<Item = Event> + '_ {
        let mask = self.mask;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == mask { None } else { Some((cur.wrapping_sub(mask)) & mask) };
            Some(Event { space: self.space.clone(), mask: cur })
        })
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.members().map(|i| Value::String(self.space.label(i).to_owned())).collect())
    }

    pub fn from_json(space: &MeasureSpace, value: &Value) -> Result<Event> {
        let arr = value
            .as_array()
            .ok_or_else(|| Error::Parse("an event is an array of labels".into()))?;
        let labels = arr
            .iter()
            .map(|v| v.as_str().ok_or_else(|| Error::Parse("event labels must be strings".into())))
            .collect::<Result<Vec<_>>>()?;
        space.event(&labels)
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<&str> = self.members().map(|i| self.space.label(i)).collect();
        write!(f, "{{{}}}", labels.join(","))
    }
}

/// A probability measure: one exact weight per atom, summing to one.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Measure {
    space: MeasureSpace,
    weights: Vec<Rational>,
}

impl Measure {
    pub fn new(space: &MeasureSpace, weights: Vec<Rational>) -> Result<Self> {
        if weights.len() != space.size() {
            return Err(Error::InvalidMeasure(format!(
                "{} weights given for a space of {} atoms",
                weights.len(),
                space.size()
            )));
        }
        if weights.iter().any(Signed::is_negative) {
            return Err(Error::InvalidMeasure("weights must be nonnegative".into()));
        }
        let total: Rational = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!("weights sum to {}, not 1", fmt_rational(&total))));
        }
        Ok(Self { space: space.clone(), weights })
    }

    pub fn point_mass(space: &MeasureSpace, i: usize) -> Self {
        let weights = (0..space.size())
            .map(|j| if i == j { Rational::one() } else { Rational::zero() })
            .collect();
        Self { space: space.clone(), weights }
    }

    pub fn uniform(space: &MeasureSpace) -> Self {
        let w = Rational::new(BigInt::one(), BigInt::from(space.size()));
        Self { space: space.clone(), weights: vec![w; space.size()] }
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &Rational {
        &self.weights[i]
    }

    pub fn prob(&self, event: &Event) -> Rational {
        debug_assert_eq!(event.space(), &self.space);
        event.members().map(|i| &self.weights[i]).sum()
    }

    pub fn support(&self) -> Event {
        let mask = (0..self.space.size())
            .filter(|&i| !self.weights[i].is_zero())
            .fold(0u64, |m, i| m | 1 << i);
        Event { space: self.space.clone(), mask }
    }

    /// `Pr(. | b)`.
    pub fn conditional(&self, b: &Event) -> Result<Measure> {
        if b.space() != &self.space {
            return Err(Error::SpaceMismatch("event and measure live on different spaces".into()));
        }
        let pb = self.prob(b);
        if pb.is_zero() {
            return Err(Error::ZeroEvidence);
        }
        let weights = (0..self.space.size())
            .map(|i| if b.contains(i) { &self.weights[i] / &pb } else { Rational::zero() })
            .collect();
        Ok(Measure { space: self.space.clone(), weights })
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        for (label, w) in self.space.labels().iter().zip(&self.weights) {
            obj.insert(label.clone(), Value::String(fmt_rational(w)));
        }
        Value::Object(obj)
    }

    /// Reads `{label: "p/q"}`; labels left out get weight zero.
    pub fn from_json(space: &MeasureSpace, value: &Value) -> Result<Measure> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("a measure is an object from labels to \"p/q\"".into()))?;
        let mut weights = vec![Rational::zero(); space.size()];
        for (label, w) in obj {
            let i = space
                .index_of(label)
                .ok_or_else(|| Error::SpaceMismatch(format!("unknown atom `{label}`")))?;
            let text = w
                .as_str()
                .ok_or_else(|| Error::Parse(format!("weight of `{label}` must be a \"p/q\" string")))?;
            weights[i] = parse_rational(text)?;
        }
        Measure::new(space, weights)
    }
}

impl fmt::Debug for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// A surjection between atom sets.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RepShift {
    source: MeasureSpace,
    target: MeasureSpace,
    map: Vec<usize>,
}

impl RepShift {
    pub fn new(source: &MeasureSpace, target: &MeasureSpace, map: Vec<usize>) -> Result<Self> {
        if map.len() != source.size() {
            return Err(Error::InvalidSpace("a shift must map every source atom".into()));
        }
        let mut hit = vec![false; target.size()];
        for &j in &map {
            *hit.get_mut(j).ok_or_else(|| Error::InvalidSpace("shift maps outside the target".into()))? = true;
        }
        if hit.contains(&false) {
            return Err(Error::InvalidSpace("a shift must be surjective".into()));
        }
        Ok(Self { source: source.clone(), target: target.clone(), map })
    }

    pub fn identity(space: &MeasureSpace) -> Self {
        Self { source: space.clone(), target: space.clone(), map: (0..space.size()).collect() }
    }

    pub fn source(&self) -> &MeasureSpace {
        &self.source
    }

    pub fn target(&self) -> &MeasureSpace {
        &self.target
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target && self.map.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `f*(pr)`.
    pub fn pushforward(&self, pr: &Measure) -> Result<Measure> {
        if pr.space() != &self.source {
            return Err(Error::SpaceMismatch("measure is not on the shift's source".into()));
        }
        let mut weights = vec![Rational::zero(); self.target.size()];
        for (i, w) in pr.weights().iter().enumerate() {
            weights[self.map[i]] += w;
        }
        Ok(Measure { space: self.target.clone(), weights })
    }

    /// `f^{-1}(b)`.
    pub fn preimage(&self, b: &Event) -> Result<Event> {
        if b.space() != &self.target {
            return Err(Error::SpaceMismatch("event is not on the shift's target".into()));
        }
        let mask = (0..self.source.size())
            .filter(|&i| b.contains(self.map[i]))
            .fold(0u64, |m, i| m | 1 << i);
        Ok(Event { space: self.source.clone(), mask })
    }

    /// Pulls a linear functional on the target back to the source.
    pub fn pull_coefficients(&self, coeffs: &[Rational]) -> Vec<Rational> {
        self.map.iter().map(|&j| coeffs[j].clone()).collect()
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (i, &j) in self.map.iter().enumerate() {
            map.insert(self.source.label(i).to_owned(), Value::String(self.target.label(j).to_owned()));
        }
        let mut obj = Map::new();
        obj.insert("source".into(), self.source.to_json());
        obj.insert("target".into(), self.target.to_json());
        obj.insert("map".into(), Value::Object(map));
        Value::Object(obj)
    }

    /// Reads `{source?, target, map: {src: tgt}}`. Without `source`, the map's keys in
    /// order give the source labels.
    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value.as_object().ok_or_else(|| Error::Parse("a shift is an object".into()))?;
        let target = MeasureSpace::from_json(obj.get("target").ok_or_else(|| Error::Parse("shift needs `target`".into()))?)?;
        let map = obj
            .get("map")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Parse("shift needs a `map` object".into()))?;
        let source = match obj.get("source") {
            Some(v) => MeasureSpace::from_json(v)?,
            None => MeasureSpace::new(map.keys().cloned())?,
        };
        let mut images = Vec::with_capacity(source.size());
        for label in source.labels() {
            let tgt = map
                .get(label)
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Parse(format!("shift does not map `{label}`")))?;
            images.push(
                target
                    .index_of(tgt)
                    .ok_or_else(|| Error::SpaceMismatch(format!("unknown target atom `{tgt}`")))?,
            );
        }
        if map.len() != source.size() {
            return Err(Error::Parse("shift map has labels outside the source".into()));
        }
        Self::new(&source, &target, images)
    }
}

impl fmt::Debug for RepShift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .map
            .iter()
            .enumerate()
            .map(|(i, &j)| format!("{}->{}", self.source.label(i), self.target.label(j)))
            .collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Every surjection `src -> dst`, in lexicographic order of the image vector.
pub fn enumerate_surjections(src: &MeasureSpace, dst: &MeasureSpace) -> Vec<RepShift> {
    let (n, m) = (src.size(), dst.size());
    let mut out = Vec::new();
    if n < m {
        return out;
    }
    let mut map = vec![0usize; n];
    loop {
        let mut hit = vec![false; m];
        map.iter().for_each(|&j| hit[j] = true);
        if !hit.contains(&false) {
            out.push(RepShift { source: src.clone(), target: dst.clone(), map: map.clone() });
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            map[k] += 1;
            if map[k] < m {
                break;
            }
            map[k] = 0;
        }
    }
}

/// All measures whose weights are multiples of `1/d`, in lexicographic order.
pub fn grid_measures(space: &MeasureSpace, d: u32) -> Vec<Measure> {
    assert!(d >= 1, "grid denominator must be positive");
    let n = space.size();
    let denom = BigInt::from(d);
    let mut out = Vec::new();
    let mut parts = Vec::with_capacity(n);
    fn rec(n: usize, left: u32, parts: &mut Vec<u32>, emit: &mut dyn FnMut(&[u32])) {
        if parts.len() + 1 == n {
            parts.push(left);
            emit(parts);
            parts.pop();
            return;
        }
        for k in 0..=left {
            parts.push(k);
            rec(n, left - k, parts, emit);
            parts.pop();
        }
    }
    rec(n, d, &mut parts, &mut |ks| {
        let weights = ks.iter().map(|&k| Rational::new(BigInt::from(k), denom.clone())).collect();
        out.push(Measure { space: space.clone(), weights });
    });
    out
}
