//! Parametric model checking: closed-form rational functions for
//! reachability probabilities, reachability rewards, bounded until and next.
//!
//! Unbounded properties reduce to a linear system `(I - P) x = b` over the
//! states whose value is not fixed by graph analysis. The system is solved
//! for the start state by symmetric fraction-free (Bareiss) elimination of
//! every other state: each entry stays an exact polynomial, since every
//! intermediate entry is a minor of the original matrix and the Bareiss
//! update divides exactly by the previous pivot.

use std::collections::{BTreeSet, VecDeque};

use crate::expr::{Polynomial, RationalFunction};
use crate::model::ParametricDtmc;
use crate::props::{sat_mask, Kind, PathFormula, Property, PropsError, Query};

pub const DEFAULT_MAX_BOUNDED_K: u32 = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PmcError {
    #[error("start state index {0} is out of range")]
    InvalidStart(usize),
    #[error("expected reward is infinite: bottom component {{{}}} never reaches the target", .0.join(", "))]
    InfiniteReward(Vec<String>),
    #[error("step bound {k} exceeds max_bounded_k = {max}; raise max_bounded_k in the configuration")]
    BoundTooLarge { k: u32, max: u32 },
    #[error("elimination hit an identically zero pivot at state `{0}`")]
    SingularSystem(String),
    #[error(transparent)]
    Props(#[from] PropsError),
}

/// Order in which non-start states are eliminated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EliminationOrder {
    /// Smallest in-degree × out-degree first, recomputed after each step.
    Greedy,
    /// Highest state index first.
    Reverse,
}

/// The closed-form expression of one property.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyExpression {
    pub id: String,
    pub kind: Kind,
    pub expr: RationalFunction,
    pub start: usize,
}

fn mask(n: usize, set: &BTreeSet<usize>) -> Vec<bool> {
    let mut m = vec![false; n];
    for &s in set {
        m[s] = true;
    }
    m
}

fn check_start(model: &ParametricDtmc, start: usize) -> Result<(), PmcError> {
    if start < model.num_states() {
        Ok(())
    } else {
        Err(PmcError::InvalidStart(start))
    }
}

/// Predecessor lists over edges whose expression is not identically zero.
fn predecessors(model: &ParametricDtmc) -> Vec<Vec<usize>> {
    let mut pred = vec![Vec::new(); model.num_states()];
    for s in 0..model.num_states() {
        for (t, f) in model.transitions(s) {
            if !f.is_zero() {
                pred[*t].push(s);
            }
        }
    }
    pred
}

/// States that reach `phi2` along a path through `phi1`.
fn can_reach(model: &ParametricDtmc, phi1: &[bool], phi2: &[bool]) -> Vec<bool> {
    let pred = predecessors(model);
    let mut seen = phi2.to_vec();
    let mut queue: VecDeque<usize> = (0..model.num_states()).filter(|&s| phi2[s]).collect();
    while let Some(t) = queue.pop_front() {
        for &s in &pred[t] {
            if !seen[s] && phi1[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
    }
    seen
}

/// `P(start ⊨ phi1 U phi2)`.
pub fn reach_prob_expr(
    model: &ParametricDtmc,
    start: usize,
    phi1: &BTreeSet<usize>,
    phi2: &BTreeSet<usize>,
) -> Result<RationalFunction, PmcError> {
    reach_prob_expr_with(model, start, phi1, phi2, EliminationOrder::Greedy)
}

pub fn reach_prob_expr_with(
    model: &ParametricDtmc,
    start: usize,
    phi1: &BTreeSet<usize>,
    phi2: &BTreeSet<usize>,
    order: EliminationOrder,
) -> Result<RationalFunction, PmcError> {
    check_start(model, start)?;
    let n = model.num_states();
    let phi1 = mask(n, phi1);
    let phi2 = mask(n, phi2);
    if phi2[start] {
        return Ok(RationalFunction::one());
    }
    let reach = can_reach(model, &phi1, &phi2);
    if !reach[start] {
        return Ok(RationalFunction::zero());
    }
    let maybe: Vec<usize> = (0..n).filter(|&s| reach[s] && !phi2[s]).collect();
    let rhs = |s: usize| {
        model
            .transitions(s)
            .iter()
            .filter(|(t, _)| phi2[*t])
            .fold(RationalFunction::zero(), |acc, (_, f)| acc.add(f))
    };
    solve_for_start(model, &maybe, start, rhs, order)
}

/// Expected reward accumulated until reaching `target` from `start`.
pub fn reach_reward_expr(
    model: &ParametricDtmc,
    start: usize,
    target: &BTreeSet<usize>,
) -> Result<RationalFunction, PmcError> {
    reach_reward_expr_with(model, start, target, EliminationOrder::Greedy)
}

pub fn reach_reward_expr_with(
    model: &ParametricDtmc,
    start: usize,
    target: &BTreeSet<usize>,
    order: EliminationOrder,
) -> Result<RationalFunction, PmcError> {
    check_start(model, start)?;
    let n = model.num_states();
    let target = mask(n, target);
    if target[start] {
        return Ok(RationalFunction::zero());
    }
    // Targets are absorbing for this analysis.
    let succ = |s: usize| -> Vec<usize> {
        if target[s] {
            return Vec::new();
        }
        model
            .transitions(s)
            .iter()
            .filter(|(_, f)| !f.is_zero())
            .map(|(t, _)| *t)
            .collect()
    };
    let reachable_from = |s: usize| -> Vec<bool> {
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in succ(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    };
    let reachable = reachable_from(start);
    let all = vec![true; n];
    let to_target = can_reach(model, &all, &target);
    if let Some(bad) = (0..n).find(|&s| reachable[s] && !to_target[s]) {
        return Err(PmcError::InfiniteReward(bottom_component(model, bad, &reachable_from)));
    }
    let states: Vec<usize> = (0..n).filter(|&s| reachable[s] && !target[s]).collect();
    let rhs = |s: usize| {
        let mut acc = RationalFunction::constant(model.state_reward(s).clone());
        for (t, f) in model.transitions(s) {
            if let Some(r) = model.transition_reward(s, *t) {
                acc = acc.add(&f.scale(r));
            }
        }
        acc
    };
    solve_for_start(model, &states, start, rhs, order)
}

/// A bottom strongly connected component reachable from `s`, by state name.
fn bottom_component(
    model: &ParametricDtmc,
    s: usize,
    reachable_from: &dyn Fn(usize) -> Vec<bool>,
) -> Vec<String> {
    let mut v = s;
    loop {
        let r = reachable_from(v);
        let escape = (0..r.len()).find(|&w| r[w] && !reachable_from(w)[v]);
        match escape {
            Some(w) => v = w,
            None => {
                return (0..r.len())
                    .filter(|&w| r[w])
                    .map(|w| model.state_name(w).to_string())
                    .collect()
            }
        }
    }
}

/// Solves `(I - P) x = b` restricted to `states` and returns `x[start]`.
fn solve_for_start(
    model: &ParametricDtmc,
    states: &[usize],
    start: usize,
    rhs: impl Fn(usize) -> RationalFunction,
    order: EliminationOrder,
) -> Result<RationalFunction, PmcError> {
    let n = states.len();
    let local = |s: usize| states.iter().position(|&x| x == s);
    let s_local = local(start).expect("start is part of the system");

    // Row i of the system as rational functions, then cleared of
    // denominators by the product of the distinct denominators in the row.
    let mut a: Vec<Vec<Polynomial>> = Vec::with_capacity(n);
    for &s in states {
        let mut row = vec![RationalFunction::zero(); n + 1];
        let i = local(s).unwrap();
        row[i] = RationalFunction::one();
        for (t, f) in model.transitions(s) {
            if let Some(j) = local(*t) {
                row[j] = row[j].sub(f);
            }
        }
        row[n] = rhs(s);
        a.push(clear_denominators(&row));
    }

    let mut alive = vec![true; n];
    let mut prev = Polynomial::one();
    for _ in 0..n.saturating_sub(1) {
        let k = choose_pivot(&a, &alive, s_local, order);
        let pivot = a[k][k].clone();
        if pivot.is_zero() {
            return Err(PmcError::SingularSystem(model.state_name(states[k]).into()));
        }
        for i in 0..n {
            if !alive[i] || i == k {
                continue;
            }
            let aik = std::mem::replace(&mut a[i][k], Polynomial::zero());
            for j in 0..=n {
                if j == k || (j < n && !alive[j]) {
                    continue;
                }
                let aij = &a[i][j];
                let cross = !aik.is_zero() && !a[k][j].is_zero();
                if aij.is_zero() && !cross {
                    continue;
                }
                let mut num = pivot.mul(aij);
                if cross {
                    num = num.sub(&aik.mul(&a[k][j]));
                }
                a[i][j] = if prev.is_one() {
                    num
                } else {
                    num.div_exact(&prev)
                        .expect("Bareiss update divides exactly by the previous pivot")
                };
            }
        }
        alive[k] = false;
        prev = pivot;
    }
    let den = a[s_local][s_local].clone();
    if den.is_zero() {
        return Err(PmcError::SingularSystem(model.state_name(start).into()));
    }
    let num = std::mem::replace(&mut a[s_local][n], Polynomial::zero());
    Ok(RationalFunction::new(num, den).expect("nonzero denominator"))
}

fn clear_denominators(row: &[RationalFunction]) -> Vec<Polynomial> {
    let mut dens: Vec<&Polynomial> = Vec::new();
    for f in row {
        if !f.is_zero() && !f.den().is_one() && !dens.contains(&f.den()) {
            dens.push(f.den());
        }
    }
    if dens.is_empty() {
        return row.iter().map(|f| f.num().clone()).collect();
    }
    let common = dens.iter().fold(Polynomial::one(), |acc, d| acc.mul(d));
    row.iter()
        .map(|f| {
            if f.is_zero() {
                Polynomial::zero()
            } else {
                let cofactor = common.div_exact(f.den()).expect("denominator is a factor");
                f.num().mul(&cofactor)
            }
        })
        .collect()
}

fn choose_pivot(a: &[Vec<Polynomial>], alive: &[bool], keep: usize, order: EliminationOrder) -> usize {
    let n = alive.len();
    let candidates = (0..n).filter(|&k| alive[k] && k != keep);
    match order {
        EliminationOrder::Reverse => candidates.max().unwrap(),
        EliminationOrder::Greedy => candidates
            .min_by_key(|&k| {
                let inn = (0..n).filter(|&i| alive[i] && i != k && !a[i][k].is_zero()).count();
                let out = (0..n).filter(|&j| alive[j] && j != k && !a[k][j].is_zero()).count();
                (inn * out, k)
            })
            .unwrap(),
    }
}

/// `P(start ⊨ phi1 U<=k phi2)` by backward iteration.
pub fn bounded_expr(
    model: &ParametricDtmc,
    start: usize,
    phi1: &BTreeSet<usize>,
    phi2: &BTreeSet<usize>,
    k: u32,
    max_k: u32,
) -> Result<RationalFunction, PmcError> {
    check_start(model, start)?;
    if k > max_k {
        return Err(PmcError::BoundTooLarge { k, max: max_k });
    }
    let n = model.num_states();
    let phi1 = mask(n, phi1);
    let phi2 = mask(n, phi2);
    let indicator = |s: usize| {
        if phi2[s] {
            RationalFunction::one()
        } else {
            RationalFunction::zero()
        }
    };
    let mut x: Vec<RationalFunction> = (0..n).map(indicator).collect();
    for _ in 0..k {
        let next = (0..n)
            .map(|s| {
                if phi2[s] || !phi1[s] {
                    return indicator(s);
                }
                model
                    .transitions(s)
                    .iter()
                    .filter(|(t, _)| !x[*t].is_zero())
                    .fold(RationalFunction::zero(), |acc, (t, f)| acc.add(&f.mul(&x[*t])))
            })
            .collect();
        x = next;
    }
    Ok(x.swap_remove(start))
}

/// `P(start ⊨ X phi)`.
pub fn next_expr(
    model: &ParametricDtmc,
    start: usize,
    phi: &BTreeSet<usize>,
) -> Result<RationalFunction, PmcError> {
    check_start(model, start)?;
    Ok(model
        .transitions(start)
        .iter()
        .filter(|(t, _)| phi.contains(t))
        .fold(RationalFunction::zero(), |acc, (_, f)| acc.add(f)))
}

fn sat(model: &ParametricDtmc, f: &crate::props::StateFormula) -> BTreeSet<usize> {
    sat_mask(model, f)
        .into_iter()
        .enumerate()
        .filter(|(_, b)| *b)
        .map(|(s, _)| s)
        .collect()
}

/// The closed-form expression of a single property.
pub fn property_expression(
    model: &ParametricDtmc,
    prop: &Property,
    max_k: u32,
) -> Result<PropertyExpression, PmcError> {
    let start = prop.start_state(model)?;
    let expr = match &prop.query {
        Query::Probability(PathFormula::Next(phi)) => next_expr(model, start, &sat(model, phi))?,
        Query::Probability(PathFormula::Until(a, b)) => {
            reach_prob_expr(model, start, &sat(model, a), &sat(model, b))?
        }
        Query::Probability(PathFormula::BoundedUntil(a, b, k)) => {
            bounded_expr(model, start, &sat(model, a), &sat(model, b), *k, max_k)?
        }
        Query::Reward(target) => reach_reward_expr(model, start, &sat(model, target))?,
    };
    Ok(PropertyExpression {
        id: prop.id.clone(),
        kind: prop.query.kind(),
        expr,
        start,
    })
}

/// One expression per property, in order.
pub fn build_property_expressions<'a>(
    model: &ParametricDtmc,
    props: impl IntoIterator<Item = &'a Property>,
    max_k: u32,
) -> Result<Vec<PropertyExpression>, PmcError> {
    props
        .into_iter()
        .map(|p| property_expression(model, p, max_k))
        .collect()
}
