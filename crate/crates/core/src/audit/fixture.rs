use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use super::{AuditConfig, PostulateId};
use crate::credal::CredalSet;
use crate::error::{Error, Result};
use crate::lp::LinearConstraint;
use crate::measure::{enumerate_surjections, grid_measures, Event, Measure, MeasureSpace, RepShift};
use crate::rational::{int, rat, Rational};

/// One audit case: an input set, evidence, and the extras some postulates need.
///
/// With a shift, `space` and `x` live on the shift's source while `b` lives on
/// its target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixture {
    pub space: MeasureSpace,
    pub x: CredalSet,
    pub b: Event,
    pub c: Option<Event>,
    /// A probe event, for checks quantifying over events.
    pub a: Option<Event>,
    pub shift: Option<RepShift>,
}

impl Fixture {
    pub fn new(x: CredalSet, b: Event) -> Self {
        Self { space: x.space().clone(), x, b, c: None, a: None, shift: None }
    }

    pub fn with_c(mut self, c: Event) -> Self {
        self.c = Some(c);
        self
    }

    pub fn with_a(mut self, a: Event) -> Self {
        self.a = Some(a);
        self
    }

    pub fn with_shift(mut self, shift: RepShift) -> Self {
        self.shift = Some(shift);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::MalformedFixture(m.into()));
        if self.x.space() != &self.space {
            return bad("input set is not on the fixture space");
        }
        let evidence_space = match &self.shift {
            Some(f) if f.source() != &self.space => return bad("shift source differs from the fixture space"),
            Some(f) => f.target(),
            None => &self.space,
        };
        if self.b.space() != evidence_space {
            return bad("evidence is on the wrong space");
        }
        if self.c.as_ref().is_some_and(|c| c.space() != evidence_space) {
            return bad("second evidence is on the wrong space");
        }
        if self.a.as_ref().is_some_and(|a| a.space() != evidence_space) {
            return bad("probe event is on the wrong space");
        }
        Ok(())
    }

    /// The single measure of a singleton input.
    pub fn measure(&self) -> Option<&Measure> {
        match self.x.as_finite() {
            Some(f) if f.len() == 1 => f.measures().first(),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("space".into(), self.space.to_json());
        obj.insert("x".into(), self.x.to_json());
        if let Some(f) = &self.shift {
            obj.insert("shift".into(), f.to_json());
        }
        obj.insert("b".into(), self.b.to_json());
        if let Some(c) = &self.c {
            obj.insert("c".into(), c.to_json());
        }
        if let Some(a) = &self.a {
            obj.insert("a".into(), a.to_json());
        }
        Value::Object(obj)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let get = |k: &str| value.get(k).ok_or_else(|| Error::Parse(format!("fixture needs `{k}`")));
        let space = MeasureSpace::from_json(get("space")?)?;
        let x = CredalSet::from_json(&space, get("x")?)?;
        let shift = value.get("shift").map(RepShift::from_json).transpose()?;
        let evidence_space = shift.as_ref().map_or(&space, RepShift::target).clone();
        let event = |k: &str| value.get(k).map(|v| Event::from_json(&evidence_space, v)).transpose();
        let fx = Fixture {
            b: Event::from_json(&evidence_space, get("b")?)?,
            c: event("c")?,
            a: event("a")?,
            shift,
            space,
            x,
        };
        fx.validate()?;
        Ok(fx)
    }
}

/// The fixed polytope catalog, restricted to spaces of at most `max_atoms` atoms.
/// The open set `{Pr on M_2 : Pr({2}) < 1}` comes first.
pub fn polytope_catalog(max_atoms: usize) -> Vec<CredalSet> {
    let unit = |n: usize, i: usize| MeasureSpace::numbered(n).singleton(i).indicator();
    let mass = |n: usize, labels: &[&str]| MeasureSpace::numbered(n).event(labels).expect("catalog labels").indicator();
    let entries: Vec<(usize, Vec<LinearConstraint>)> = vec![
        (2, vec![LinearConstraint::lt(unit(2, 1), int(1))]),
        (2, vec![LinearConstraint::ge(unit(2, 0), rat(1, 2))]),
        (2, vec![LinearConstraint::ge(unit(2, 0), rat(1, 4)), LinearConstraint::le(unit(2, 0), rat(3, 4))]),
        (3, vec![]),
        (3, vec![LinearConstraint::ge(unit(3, 0), rat(1, 3)), LinearConstraint::lt(unit(3, 0), rat(2, 3))]),
        (3, vec![LinearConstraint::ge(unit(3, 0), rat(1, 2))]),
        (3, (0..3).map(|i| LinearConstraint::gt(unit(3, i), int(0))).collect()),
        (3, vec![LinearConstraint::eq(
            unit(3, 0).iter().zip(unit(3, 1)).map(|(a, b)| a - b).collect(),
            int(0),
        )]),
        (4, vec![LinearConstraint::ge(mass(4, &["1", "2"]), rat(1, 2)), LinearConstraint::le(unit(4, 2), rat(1, 4))]),
    ];
    entries
        .into_iter()
        .filter(|(n, _)| *n <= max_atoms)
        .map(|(n, cons)| CredalSet::polytope(&MeasureSpace::numbered(n), cons).expect("catalog entries are well formed"))
        .collect()
}

/// Exhaustive fixture material for one configuration.
pub struct Pool {
    spaces: Vec<MeasureSpace>,
    grids: Vec<Vec<Measure>>,
    inputs: Vec<Vec<CredalSet>>,
}

/// Polytope inputs join P2 and P3 pools only on spaces this small.
const POLYTOPE_SHIFT_ATOMS: usize = 3;

impl Pool {
    pub fn new(cfg: &AuditConfig) -> Self {
        let spaces: Vec<MeasureSpace> = (1..=cfg.max_atoms).map(MeasureSpace::numbered).collect();
        let grid_for = |space: &MeasureSpace, dens: &[u32]| {
            let mut all: Vec<Measure> = dens.iter().flat_map(|&d| grid_measures(space, d)).collect();
            all.sort();
            all.dedup();
            all
        };
        let grids: Vec<Vec<Measure>> = spaces.iter().map(|s| grid_for(s, &cfg.grid_denominators)).collect();
        let catalog = polytope_catalog(cfg.max_atoms);
        let mut inputs: Vec<Vec<CredalSet>> = Vec::new();
        for (space, grid) in spaces.iter().zip(&grids) {
            let n = space.size();
            let mut xs: Vec<CredalSet> = grid.iter().map(CredalSet::singleton).collect();
            let pair_dens: Vec<u32> = match n {
                0..=3 => cfg.grid_denominators.clone(),
                4 => cfg.grid_denominators.iter().copied().filter(|&d| d <= 2).collect(),
                _ => vec![1],
            };
            let pair_grid = grid_for(space, &pair_dens);
            for (i, p) in pair_grid.iter().enumerate() {
                for q in &pair_grid[i + 1..] {
                    xs.push(CredalSet::finite(space, vec![p.clone(), q.clone()]).expect("same space"));
                }
            }
            xs.push(CredalSet::empty(space));
            xs.extend(catalog.iter().filter(|x| x.space() == space).cloned());
            inputs.push(xs);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        for _ in 0..cfg.random_fixtures {
            let n = rng.gen_range(1..=cfg.max_atoms);
            let members = rng.gen_range(1..=3);
            let ms: Vec<Measure> = (0..members).map(|_| random_measure(&mut rng, &spaces[n - 1])).collect();
            inputs[n - 1].push(CredalSet::finite(&spaces[n - 1], ms).expect("same space"));
        }
        Self { spaces, grids, inputs }
    }

    pub fn spaces(&self) -> &[MeasureSpace] {
        &self.spaces
    }

    pub fn grid(&self, space: &MeasureSpace) -> &[Measure] {
        &self.grids[space.size() - 1]
    }

    pub fn inputs(&self, space: &MeasureSpace) -> &[CredalSet] {
        &self.inputs[space.size() - 1]
    }

    /// `({pr}, B)` for every grid measure and event, spaces in increasing size.
    pub fn singleton_fixtures(&self) -> Vec<Fixture> {
        let mut out = Vec::new();
        for space in &self.spaces {
            for pr in self.grid(space) {
                for b in space.events() {
                    out.push(Fixture::new(CredalSet::singleton(pr), b));
                }
            }
        }
        out
    }

    /// Every `(X, B)` pair.
    pub fn input_fixtures(&self) -> Vec<Fixture> {
        let mut out = Vec::new();
        for space in &self.spaces {
            for x in self.inputs(space) {
                for b in space.events() {
                    out.push(Fixture::new(x.clone(), b));
                }
            }
        }
        out
    }

    pub fn fixtures(&self, pid: PostulateId) -> Vec<Fixture> {
        match pid {
            PostulateId::P2 => self.shift_fixtures(),
            PostulateId::P3 => self.commutation_fixtures(),
            PostulateId::P6Prime | PostulateId::P6DoublePrime | PostulateId::P6Star => self.singleton_fixtures(),
            _ => self.input_fixtures(),
        }
    }

    fn small_enough(x: &CredalSet) -> bool {
        x.as_finite().is_some() || x.space().size() <= POLYTOPE_SHIFT_ATOMS
    }

    fn shift_fixtures(&self) -> Vec<Fixture> {
        let mut out = Vec::new();
        for src in &self.spaces {
            for dst in self.spaces.iter().filter(|d| d.size() <= src.size()) {
                for f in enumerate_surjections(src, dst) {
                    for b in dst.events() {
                        for x in self.inputs(src).iter().filter(|x| Self::small_enough(x)) {
                            out.push(Fixture::new(x.clone(), b.clone()).with_shift(f.clone()));
                        }
                    }
                }
            }
        }
        out
    }

    /// Incomparable evidence pairs on every space first, then nested ones.
    fn commutation_fixtures(&self) -> Vec<Fixture> {
        let mut out = Vec::new();
        for nested_pass in [false, true] {
            for space in &self.spaces {
                let events: Vec<Event> = space.events().collect();
                for b in &events {
                    for c in events.iter().rev() {
                        let nested = b.is_subset(c) || c.is_subset(b);
                        if nested != nested_pass {
                            continue;
                        }
                        for x in self.inputs(space).iter().filter(|x| Self::small_enough(x)) {
                            out.push(Fixture::new(x.clone(), b.clone()).with_c(c.clone()));
                        }
                    }
                }
            }
        }
        out
    }
}

fn random_measure(rng: &mut ChaCha8Rng, space: &MeasureSpace) -> Measure {
    loop {
        let raw: Vec<u32> = (0..space.size()).map(|_| rng.gen_range(0..=6)).collect();
        let total: u32 = raw.iter().sum();
        if total == 0 {
            continue;
        }
        let weights = raw.iter().map(|&k| Rational::new(BigInt::from(k), BigInt::from(total))).collect();
        return Measure::new(space, weights).expect("normalised weights");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_starts_with_the_open_example() {
        let cat = polytope_catalog(4);
        let s = MeasureSpace::numbered(2);
        let first = &cat[0];
        assert!(!first.contains(&Measure::point_mass(&s, 1)).unwrap());
        assert!(first.contains(&Measure::uniform(&s)).unwrap());
        assert!(polytope_catalog(2).iter().all(|x| x.space().size() == 2));
    }

    #[test]
    fn pool_sizes() {
        let pool = Pool::new(&AuditConfig::default());
        // Union of grids d = 1..4 on M_2: 0, 1/4, 1/3, 1/2, 2/3, 3/4, 1.
        assert_eq!(pool.grid(&MeasureSpace::numbered(2)).len(), 7);
        // C(6,2) + C(5,2) - 3 point masses shared by d = 3 and d = 4.
        assert_eq!(pool.grid(&MeasureSpace::numbered(3)).len(), 15 + 10 - 3);
        let p3 = pool.fixtures(PostulateId::P3);
        let first_nested = p3.iter().position(|f| {
            let (b, c) = (&f.b, f.c.as_ref().unwrap());
            b.is_subset(c) || c.is_subset(b)
        });
        assert!(p3[..first_nested.unwrap()].iter().all(|f| f.space.size() >= 2));
    }

    #[test]
    fn random_fixtures_are_seeded() {
        let cfg = AuditConfig { random_fixtures: 5, rng_seed: 7, ..AuditConfig::default() };
        let a: Vec<usize> = Pool::new(&cfg).spaces().iter().map(|s| Pool::new(&cfg).inputs(s).len()).collect();
        let b: Vec<usize> = Pool::new(&cfg).spaces().iter().map(|s| Pool::new(&cfg).inputs(s).len()).collect();
        assert_eq!(a, b);
        let base: usize = {
            let p = Pool::new(&AuditConfig::default());
            p.spaces().iter().map(|s| p.inputs(s).len()).sum()
        };
        assert_eq!(a.iter().sum::<usize>(), base + 5);
    }

    #[test]
    fn fixture_json_round_trip() {
        let (s3, s2) = (MeasureSpace::numbered(3), MeasureSpace::numbered(2));
        let f = RepShift::new(&s3, &s2, vec![0, 1, 1]).unwrap();
        let fx = Fixture::new(CredalSet::singleton(&Measure::uniform(&s3)), s2.singleton(0))
            .with_shift(f)
            .with_c(s2.full());
        assert_eq!(Fixture::from_json(&fx.to_json()).unwrap(), fx);
        let bad = Fixture { b: s3.full(), ..fx };
        assert!(matches!(bad.validate(), Err(Error::MalformedFixture(_))));
    }
}
