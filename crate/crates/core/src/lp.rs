//! Exact rational linear programming.
//!
//! Every variable of every problem here is implicitly nonnegative. Problems are
//! solved with a dense two-phase tableau simplex using Bland's rule (lowest
//! eligible column enters, ties in the ratio test leave by lowest basic index),
//! so pivoting is deterministic and cannot cycle. There are no tolerances.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest dimension accepted by [`vertices`].
pub const VERTEX_DIMENSION_CAP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Lt,
    Le,
    Eq,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Lt => "lt",
            Relation::Le => "le",
            Relation::Eq => "eq",
        }
    }
}

/// `coeffs · x  rel  bound`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearConstraint {
    pub coeffs: Vec<Rational>,
    pub rel: Relation,
    pub bound: Rational,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<Rational>, rel: Relation, bound: Rational) -> Self {
        Self { coeffs, rel, bound }
    }

    pub fn le(coeffs: Vec<Rational>, bound: Rational) -> Self {
        Self::new(coeffs, Relation::Le, bound)
    }

    pub fn lt(coeffs: Vec<Rational>, bound: Rational) -> Self {
        Self::new(coeffs, Relation::Lt, bound)
    }

    pub fn eq(coeffs: Vec<Rational>, bound: Rational) -> Self {
        Self::new(coeffs, Relation::Eq, bound)
    }

    /// `coeffs · x >= bound`, stored as `-coeffs · x <= -bound`.
    pub fn ge(coeffs: Vec<Rational>, bound: Rational) -> Self {
        Self::le(coeffs.into_iter().map(|c| -c).collect(), -bound)
    }

    /// `coeffs · x > bound`, stored as `-coeffs · x < -bound`.
    pub fn gt(coeffs: Vec<Rational>, bound: Rational) -> Self {
        Self::lt(coeffs.into_iter().map(|c| -c).collect(), -bound)
    }

    pub fn dimension(&self) -> usize {
        self.coeffs.len()
    }

    pub fn lhs(&self, point: &[Rational]) -> Rational {
        dot(&self.coeffs, point)
    }

    pub fn holds_at(&self, point: &[Rational]) -> bool {
        let lhs = self.lhs(point);
        match self.rel {
            Relation::Lt => lhs < self.bound,
            Relation::Le => lhs <= self.bound,
            Relation::Eq => lhs == self.bound,
        }
    }

    pub fn is_strict(&self) -> bool {
        self.rel == Relation::Lt
    }

    /// The same constraint with `<` weakened to `<=`.
    pub fn relaxed(&self) -> Self {
        let rel = match self.rel {
            Relation::Lt => Relation::Le,
            r => r,
        };
        Self::new(self.coeffs.clone(), rel, self.bound.clone())
    }

    /// Pads the coefficient vector with zeros up to `dimension`.
    pub fn widened(&self, dimension: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(dimension, Rational::zero());
        Self::new(coeffs, self.rel, self.bound.clone())
    }
}

pub(crate) fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    let mut acc = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProblem {
    pub dimension: usize,
    pub objective: Vec<Rational>,
    pub sense: Sense,
    pub constraints: Vec<LinearConstraint>,
}

impl LpProblem {
    pub fn new(
        dimension: usize,
        objective: Vec<Rational>,
        sense: Sense,
        constraints: Vec<LinearConstraint>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::MalformedProblem("dimension must be positive".into()));
        }
        if objective.len() != dimension {
            return Err(Error::MalformedProblem(format!(
                "objective has {} coefficients, expected {dimension}",
                objective.len()
            )));
        }
        if let Some(c) = constraints.iter().find(|c| c.dimension() != dimension) {
            return Err(Error::MalformedProblem(format!(
                "constraint has {} coefficients, expected {dimension}",
                c.dimension()
            )));
        }
        Ok(Self { dimension, objective, sense, constraints })
    }

    /// Adds `x_1 + ... + x_n = 1`, turning the nonnegative orthant into the simplex.
    pub fn with_simplex(mut self) -> Self {
        self.constraints.push(simplex_row(self.dimension));
        self
    }
}

pub fn simplex_row(dimension: usize) -> LinearConstraint {
    LinearConstraint::eq(vec![Rational::one(); dimension], Rational::one())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { value: Rational, point: Vec<Rational> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

struct Tableau {
    /// Each row holds the column coefficients followed by the right-hand side.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, row: usize) -> &Rational {
        &self.rows[row][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize, objective: &mut [Rational]) {
        let inv = self.rows[r][c].recip();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let support: Vec<usize> =
            (0..=self.ncols).filter(|&k| !self.rows[r][k].is_zero()).collect();
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for &k in &support {
                row[k] -= &factor * &pivot_row[k];
            }
        }
        if !objective[c].is_zero() {
            let factor = objective[c].clone();
            for &k in &support {
                objective[k] -= &factor * &pivot_row[k];
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes the objective row (stored as `z - c.x = 0`). Returns false if unbounded.
    fn optimize(&mut self, objective: &mut [Rational], eligible: impl Fn(usize) -> bool) -> bool {
        loop {
            let entering = (0..self.ncols).find(|&j| eligible(j) && objective[j].is_negative());
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, _)) = best else { return false };
            self.pivot(r, c, objective);
        }
    }
}

/// Optimizes over the closed feasible region; strict relations are read as `<=`.
pub fn lp_solve(problem: &LpProblem) -> LpOutcome {
    let n = problem.dimension;
    let constraints: Vec<LinearConstraint> =
        problem.constraints.iter().map(LinearConstraint::relaxed).collect();

    let n_ineq = constraints.iter().filter(|c| c.rel != Relation::Eq).count();
    let n_art = constraints
        .iter()
        .filter(|c| c.rel == Relation::Eq || c.bound.is_negative())
        .count();
    let ncols = n + n_ineq + n_art;
    let art_start = n + n_ineq;

    let mut rows = Vec::with_capacity(constraints.len());
    let mut basis = Vec::with_capacity(constraints.len());
    let (mut next_slack, mut next_art) = (n, art_start);
    for con in &constraints {
        let mut row = vec![Rational::zero(); ncols + 1];
        let flip = con.bound.is_negative();
        for (j, a) in con.coeffs.iter().enumerate() {
            row[j] = if flip { -a } else { a.clone() };
        }
        row[ncols] = if flip { -&con.bound } else { con.bound.clone() };
        match con.rel {
            Relation::Eq => {
                row[next_art] = Rational::one();
                basis.push(next_art);
                next_art += 1;
            }
            _ if !flip => {
                row[next_slack] = Rational::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            _ => {
                row[next_slack] = -Rational::one();
                next_slack += 1;
                row[next_art] = Rational::one();
                basis.push(next_art);
                next_art += 1;
            }
        }
        rows.push(row);
    }
    let mut tab = Tableau { rows, basis, ncols };
    let is_art = |j: usize| j >= art_start;

    // Phase one: maximize -(sum of artificials).
    if n_art > 0 {
        let mut phase1 = vec![Rational::zero(); ncols + 1];
        for j in art_start..ncols {
            phase1[j] = Rational::one();
        }
        for (i, &b) in tab.basis.iter().enumerate() {
            if is_art(b) {
                for k in 0..=ncols {
                    if !tab.rows[i][k].is_zero() {
                        phase1[k] -= &tab.rows[i][k];
                    }
                }
            }
        }
        tab.optimize(&mut phase1, |_| true);
        if phase1[ncols].is_negative() {
            return LpOutcome::Infeasible;
        }
        // Drive zero-valued artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if is_art(tab.basis[i]) {
                match (0..art_start).find(|&j| !tab.rows[i][j].is_zero()) {
                    Some(j) => {
                        tab.pivot(i, j, &mut phase1);
                        i += 1;
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    let sign = match problem.sense {
        Sense::Max => Rational::one(),
        Sense::Min => -Rational::one(),
    };
    let mut objective = vec![Rational::zero(); ncols + 1];
    for (j, c) in problem.objective.iter().enumerate() {
        objective[j] = -(c * &sign);
    }
    for i in 0..tab.rows.len() {
        let b = tab.basis[i];
        if !objective[b].is_zero() {
            let factor = objective[b].clone();
            for k in 0..=ncols {
                if !tab.rows[i][k].is_zero() {
                    objective[k] -= &factor * &tab.rows[i][k];
                }
            }
        }
    }
    if !tab.optimize(&mut objective, |j| !is_art(j)) {
        return LpOutcome::Unbounded;
    }
    let mut point = vec![Rational::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            point[b] = tab.rhs(i).clone();
        }
    }
    let value = &objective[ncols] * &sign;
    LpOutcome::Optimal { value, point }
}

/// Finds a point satisfying every constraint, with `<` honoured strictly.
///
/// Maximizes a shared slack `s <= 1` added to every strict row; the answer is
/// `Some` exactly when that optimum is positive.
pub fn strict_feasible(dimension: usize, constraints: &[LinearConstraint]) -> Option<Vec<Rational>> {
    let any_strict = constraints.iter().any(LinearConstraint::is_strict);
    if !any_strict {
        let problem = LpProblem {
            dimension,
            objective: vec![Rational::zero(); dimension],
            sense: Sense::Max,
            constraints: constraints.to_vec(),
        };
        return match lp_solve(&problem) {
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        };
    }
    let dim = dimension + 1;
    let mut rows: Vec<LinearConstraint> = constraints
        .iter()
        .map(|c| {
            let mut w = c.widened(dim);
            if c.is_strict() {
                w.coeffs[dimension] = Rational::one();
                w.rel = Relation::Le;
            }
            w
        })
        .collect();
    let mut cap = vec![Rational::zero(); dim];
    cap[dimension] = Rational::one();
    rows.push(LinearConstraint::le(cap.clone(), Rational::one()));
    let problem = LpProblem { dimension: dim, objective: cap, sense: Sense::Max, constraints: rows };
    match lp_solve(&problem) {
        LpOutcome::Optimal { value, mut point } if value.is_positive() => {
            point.truncate(dimension);
            debug_assert!(constraints.iter().all(|c| c.holds_at(&point)));
            Some(point)
        }
        _ => None,
    }
}

/// All extreme points of `{x in simplex : constraints}`, sorted and deduplicated.
///
/// Brute force: every choice of active inequality rows that, together with the
/// equalities, pins down a unique point is solved and kept if feasible.
pub fn vertices(dimension: usize, constraints: &[LinearConstraint]) -> Result<Vec<Vec<Rational>>> {
    if dimension > VERTEX_DIMENSION_CAP {
        return Err(Error::DimensionTooLarge { dim: dimension, cap: VERTEX_DIMENSION_CAP });
    }
    if dimension == 0 {
        return Err(Error::MalformedProblem("dimension must be positive".into()));
    }
    if constraints.iter().any(LinearConstraint::is_strict) {
        return Err(Error::PreconditionViolated("vertices() needs a closed polytope".into()));
    }
    let mut equalities = vec![simplex_row(dimension)];
    let mut inequalities = Vec::new();
    for c in constraints {
        if c.dimension() != dimension {
            return Err(Error::MalformedProblem("constraint dimension mismatch".into()));
        }
        match c.rel {
            Relation::Eq => equalities.push(c.clone()),
            _ => inequalities.push(c.clone()),
        }
    }
    for j in 0..dimension {
        let mut coeffs = vec![Rational::zero(); dimension];
        coeffs[j] = -Rational::one();
        inequalities.push(LinearConstraint::le(coeffs, Rational::zero()));
    }
    let eq_rank = rank(&equalities, dimension);
    let need = dimension.saturating_sub(eq_rank);

    let mut found = BTreeSet::new();
    let mut chosen = Vec::with_capacity(need);
    let mut visit = |subset: &[usize]| {
        let mut system: Vec<&LinearConstraint> = equalities.iter().collect();
        system.extend(subset.iter().map(|&i| &inequalities[i]));
        if let Some(point) = solve_unique(&system, dimension) {
            if point.iter().all(|x| !x.is_negative())
                && constraints.iter().all(|c| c.holds_at(&point))
                && equalities[0].holds_at(&point)
            {
                found.insert(point);
            }
        }
    };
    for_each_combination(inequalities.len(), need, 0, &mut chosen, &mut visit);
    Ok(found.into_iter().collect())
}

fn for_each_combination(
    n: usize,
    k: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let remaining = k - chosen.len();
    for i in start..=n.saturating_sub(remaining) {
        if i >= n {
            break;
        }
        chosen.push(i);
        for_each_combination(n, k, i + 1, chosen, visit);
        chosen.pop();
    }
}

fn rank(rows: &[LinearConstraint], dimension: usize) -> usize {
    let mut m: Vec<Vec<Rational>> = rows.iter().map(|r| r.coeffs.clone()).collect();
    let mut rank = 0;
    for col in 0..dimension {
        let Some(p) = (rank..m.len()).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(rank, p);
        let inv = m[rank][col].recip();
        let pivot: Vec<Rational> = m[rank].iter().map(|v| v * &inv).collect();
        for (i, row) in m.iter_mut().enumerate() {
            if i != rank && !row[col].is_zero() {
                let f = row[col].clone();
                for k in col..dimension {
                    row[k] -= &f * &pivot[k];
                }
            }
        }
        m[rank] = pivot;
        rank += 1;
    }
    rank
}

/// Solves the rows as equalities; `Some` only for a consistent system of full column rank.
fn solve_unique(rows: &[&LinearConstraint], dimension: usize) -> Option<Vec<Rational>> {
    let mut m: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| {
            let mut row = r.coeffs.clone();
            row.push(r.bound.clone());
            row
        })
        .collect();
    let mut rank = 0;
    for col in 0..dimension {
        let p = (rank..m.len()).find(|&i| !m[i][col].is_zero())?;
        m.swap(rank, p);
        let inv = m[rank][col].recip();
        let pivot: Vec<Rational> = m[rank].iter().map(|v| v * &inv).collect();
        for (i, row) in m.iter_mut().enumerate() {
            if i != rank && !row[col].is_zero() {
                let f = row[col].clone();
                for k in col..=dimension {
                    row[k] -= &f * &pivot[k];
                }
            }
        }
        m[rank] = pivot;
        rank += 1;
    }
    if m[rank..].iter().any(|row| !row[dimension].is_zero()) {
        return None;
    }
    Some((0..dimension).map(|j| m[j][dimension].clone()).collect())
}
