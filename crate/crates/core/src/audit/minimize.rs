use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use super::postulates::{check_fixture, Check, Probing};
use super::{Fixture, Witness};
use crate::credal::CredalSet;
use crate::measure::{Event, Measure, MeasureSpace, RepShift};
use crate::rational::Rational;

/// Shrinks a failing witness with a finite input: merges atoms that every
/// event treats alike, drops null atoms outside every event, drops redundant
/// members, then coarsens weights. Every step is kept only if the postulate still fails.
pub fn minimize_witness(w: &Witness, probing: &Probing) -> Witness {
    if w.fixture.x.as_finite().is_none() {
        return w.clone();
    }
    let mut best = w.clone();
    loop {
        let next = [merge_atoms, drop_null_atoms, drop_members, coarsen]
            .iter()
            .find_map(|step| step(&best.fixture).into_iter().find_map(|fx| still_fails(&best, &fx, probing)));
        match next {
            Some(n) => best = n,
            None => return best,
        }
    }
}

fn still_fails(w: &Witness, fx: &Fixture, probing: &Probing) -> Option<Witness> {
    match check_fixture(w.postulate, w.rule, fx, probing) {
        Ok(Check::Fail(n)) => Some(*n),
        _ => None,
    }
}

fn members(fx: &Fixture) -> &[Measure] {
    fx.x.as_finite().map_or(&[], |f| f.measures())
}

/// Rebuilds the fixture on `numbered(new_n)` with source atom `i` sent to `map[i]`
/// (`None` deletes it). Deleted atoms must carry no weight.
fn reshape(fx: &Fixture, map: &[Option<usize>], new_n: usize) -> Option<Fixture> {
    let space = MeasureSpace::numbered(new_n);
    let xs: Vec<Measure> = members(fx)
        .iter()
        .map(|m| {
            let mut weights = vec![Rational::zero(); new_n];
            for (i, w) in m.weights().iter().enumerate() {
                match map[i] {
                    Some(k) => weights[k] += w,
                    None if !w.is_zero() => return None,
                    None => {}
                }
            }
            Measure::new(&space, weights).ok()
        })
        .collect::<Option<_>>()?;
    let x = CredalSet::finite(&space, xs).ok()?;
    let out = match &fx.shift {
        Some(f) => {
            let mut image = vec![0; new_n];
            for (i, k) in map.iter().enumerate() {
                if let Some(k) = k {
                    image[*k] = f.image(i);
                }
            }
            let shift = RepShift::new(&space, f.target(), image).ok()?;
            Fixture { space: space.clone(), x, b: fx.b.clone(), c: fx.c.clone(), a: fx.a.clone(), shift: Some(shift) }
        }
        None => {
            let move_event = |e: &Event| {
                let mask = e.members().filter_map(|i| map[i]).fold(0u64, |acc, k| acc | (1 << k));
                space.event_from_mask(mask).expect("mask within space")
            };
            Fixture {
                space: space.clone(),
                x,
                b: move_event(&fx.b),
                c: fx.c.as_ref().map(move_event),
                a: fx.a.as_ref().map(move_event),
                shift: None,
            }
        }
    };
    Some(out)
}

fn events(fx: &Fixture) -> Vec<&Event> {
    std::iter::once(&fx.b).chain(&fx.c).chain(&fx.a).collect()
}

fn merge_atoms(fx: &Fixture) -> Vec<Fixture> {
    let n = fx.space.size();
    let alike = |i: usize, j: usize| match &fx.shift {
        Some(f) => f.image(i) == f.image(j),
        None => events(fx).iter().all(|e| e.contains(i) == e.contains(j)),
    };
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !alike(i, j) {
                continue;
            }
            let map: Vec<Option<usize>> =
                (0..n).map(|k| Some(if k == j { i } else if k > j { k - 1 } else { k })).collect();
            out.extend(reshape(fx, &map, n - 1));
        }
    }
    out
}

fn drop_null_atoms(fx: &Fixture) -> Vec<Fixture> {
    let n = fx.space.size();
    if n == 1 {
        return Vec::new();
    }
    let outside = |i: usize| fx.shift.is_some() || events(fx).iter().all(|e| !e.contains(i));
    (0..n)
        .filter(|&i| outside(i) && members(fx).iter().all(|m| m.weight(i).is_zero()))
        .filter_map(|i| {
            let map: Vec<Option<usize>> =
                (0..n).map(|k| if k == i { None } else { Some(if k > i { k - 1 } else { k }) }).collect();
            reshape(fx, &map, n - 1)
        })
        .collect()
}

fn drop_members(fx: &Fixture) -> Vec<Fixture> {
    let ms = members(fx);
    if ms.len() < 2 {
        return Vec::new();
    }
    (0..ms.len())
        .filter_map(|skip| {
            let kept: Vec<Measure> = ms.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, m)| m.clone()).collect();
            let x = CredalSet::finite(&fx.space, kept).ok()?;
            Some(Fixture { x, ..fx.clone() })
        })
        .collect()
}

fn common_denominator(ms: &[Measure]) -> BigInt {
    ms.iter().flat_map(|m| m.weights()).fold(BigInt::from(1), |acc, w| acc.lcm(w.denom()))
}

/// Largest-remainder rounding of `m` onto the grid of denominator `d`.
pub(crate) fn round_to_grid(m: &Measure, d: u32) -> Measure {
    let scale = Rational::from_integer(BigInt::from(d));
    let scaled: Vec<Rational> = m.weights().iter().map(|w| w * &scale).collect();
    let mut counts: Vec<BigInt> = scaled.iter().map(|s| s.floor().to_integer()).collect();
    let assigned: BigInt = counts.iter().sum();
    let mut remaining = (BigInt::from(d) - assigned).to_usize().unwrap_or(0);
    let mut order: Vec<usize> = (0..scaled.len()).collect();
    order.sort_by(|&a, &b| scaled[b].fract().cmp(&scaled[a].fract()).then(a.cmp(&b)));
    for i in order {
        if remaining == 0 {
            break;
        }
        if !scaled[i].fract().is_zero() {
            counts[i] += 1;
            remaining -= 1;
        }
    }
    let weights = counts.into_iter().map(|k| Rational::new(k, BigInt::from(d))).collect();
    Measure::new(m.space(), weights).expect("rounding preserves total mass")
}

fn coarsen(fx: &Fixture) -> Vec<Fixture> {
    let ms = members(fx);
    let current = common_denominator(ms);
    let mut out = Vec::new();
    let mut d = 1u32;
    while BigInt::from(d) < current {
        let rounded: Vec<Measure> = ms.iter().map(|m| round_to_grid(m, d)).collect();
        if let Ok(x) = CredalSet::finite(&fx.space, rounded) {
            out.push(Fixture { x, ..fx.clone() });
        }
        d += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::PostulateId;
    use crate::rational::{int, rat};
    use crate::rules::RuleId;

    fn failing(pid: PostulateId, rule: RuleId, fx: &Fixture) -> Witness {
        match check_fixture(pid, rule, fx, &Probing::default()).unwrap() {
            Check::Fail(w) => *w,
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn forget_witness_shrinks_to_three_atoms() {
        let s = MeasureSpace::numbered(5);
        let fx = Fixture::new(CredalSet::singleton(&Measure::uniform(&s)), s.event(&["1", "2", "4"]).unwrap())
            .with_c(s.event(&["2", "3", "5"]).unwrap());
        let small = minimize_witness(&failing(PostulateId::P3, RuleId::Forget, &fx), &Probing::default());
        let t = MeasureSpace::numbered(3);
        assert_eq!(small.fixture.space, t);
        assert_eq!(small.fixture.b, t.event(&["1", "2"]).unwrap());
        assert_eq!(small.fixture.c, Some(t.event(&["2", "3"]).unwrap()));
        assert_eq!(common_denominator(members(&small.fixture)), BigInt::from(1));
    }

    #[test]
    fn minimal_witness_is_a_fixed_point() {
        let s = MeasureSpace::numbered(2);
        let fx = Fixture::new(CredalSet::singleton(&Measure::point_mass(&s, 0)), s.full());
        let w = failing(PostulateId::P6Star, RuleId::Forget, &fx);
        assert_eq!(minimize_witness(&w, &Probing::default()), w);
    }

    #[test]
    fn max_evidence_witness_is_coarsened() {
        let s = MeasureSpace::numbered(4);
        let p = Measure::new(&s, vec![rat(3, 10), rat(3, 10), rat(1, 10), rat(3, 10)]).unwrap();
        let q = Measure::new(&s, vec![rat(1, 10), rat(3, 10), rat(5, 10), rat(1, 10)]).unwrap();
        let fx = Fixture::new(CredalSet::finite(&s, vec![p, q]).unwrap(), s.event(&["1", "2"]).unwrap());
        let w = failing(PostulateId::P5, RuleId::Ml, &fx);
        let small = minimize_witness(&w, &Probing::default());
        assert!(common_denominator(members(&small.fixture)) < BigInt::from(10));
        assert!(small.fixture.space.size() < 4);
        assert!(matches!(
            check_fixture(PostulateId::P5, RuleId::Ml, &small.fixture, &Probing::default()).unwrap(),
            Check::Fail(_)
        ));
    }

    #[test]
    fn max_evidence_commutation_witness_is_coarsened() {
        let s = MeasureSpace::numbered(4);
        let p = Measure::new(&s, vec![rat(5, 10), rat(1, 10), rat(1, 10), rat(3, 10)]).unwrap();
        let q = Measure::new(&s, vec![rat(1, 10), rat(3, 10), rat(2, 10), rat(4, 10)]).unwrap();
        let fx = Fixture::new(CredalSet::finite(&s, vec![p, q]).unwrap(), s.event(&["1", "2", "3"]).unwrap())
            .with_c(s.event(&["2", "3", "4"]).unwrap());
        let small = minimize_witness(&failing(PostulateId::P3, RuleId::Ml, &fx), &Probing::default());
        assert!(common_denominator(members(&small.fixture)) < BigInt::from(10));
        assert!(matches!(
            check_fixture(PostulateId::P3, RuleId::Ml, &small.fixture, &Probing::default()).unwrap(),
            Check::Fail(_)
        ));
    }

    #[test]
    fn rounding_keeps_mass_and_support() {
        let s = MeasureSpace::numbered(3);
        let m = Measure::new(&s, vec![rat(2, 5), rat(1, 5), rat(2, 5)]).unwrap();
        assert_eq!(round_to_grid(&m, 1), Measure::point_mass(&s, 0));
        assert_eq!(round_to_grid(&m, 2).weights(), &[rat(1, 2), int(0), rat(1, 2)]);
        let z = Measure::new(&s, vec![rat(1, 3), int(0), rat(2, 3)]).unwrap();
        assert!(round_to_grid(&z, 4).weight(1).is_zero());
    }
}
