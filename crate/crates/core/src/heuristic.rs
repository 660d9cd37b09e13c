//! Adaptive partition of a round's testing budget across components.
//!
//! Requirements still awaiting a decision are weighted by how much their
//! interval straddles the bound, components by how sensitive those
//! requirements are to their parameters, and the round budget is split in
//! proportion to the resulting relevance, discounted by test cost.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::confidence::CompiledExpression;
use crate::expr::{ParamId, Valuation};
use crate::interval::Interval;
use crate::model::{params_of_component, EdgeShape, Model, ObservationFunction};
use crate::props::Rel;

/// Weight given to a requirement whose interval is unbounded.
pub const INFINITE_WIDTH_WEIGHT: f64 = 1e12;
/// Sensitivity contributed by a derivative evaluated at a pole.
pub const SINGULAR_SENSITIVITY: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeuristicConfig {
    pub epsilon1: f64,
    pub epsilon2: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            epsilon1: 0.15,
            epsilon2: 1e-6,
        }
    }
}

/// New observations per component for one round.
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    pub nobs: Vec<u64>,
    pub relevance: Vec<f64>,
    /// Requirements that drove the split, empty when it fell back to a
    /// uniform one.
    pub selected: Vec<String>,
}

impl Allocation {
    pub fn cost(&self, model: &Model) -> f64 {
        self.nobs
            .iter()
            .zip(model.components())
            .map(|(&n, c)| n as f64 * c.cost)
            .sum()
    }
}

/// What the heuristic needs to know about one requirement.
#[derive(Clone, Copy, Debug)]
pub struct RequirementView<'a> {
    pub id: &'a str,
    pub rel: Rel,
    pub bound: f64,
    pub interval: Interval,
    pub expr: &'a CompiledExpression,
}

/// The end of `[lo, hi]` beyond which the requirement is violated.
pub fn wrong_end(rel: Rel, lo: f64, hi: f64) -> f64 {
    if rel.is_upper() {
        lo
    } else {
        hi
    }
}

pub fn right_end(rel: Rel, lo: f64, hi: f64) -> f64 {
    if rel.is_upper() {
        hi
    } else {
        lo
    }
}

/// Parametric states without a single observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroObservations {
    pub states: Vec<usize>,
    pub names: Vec<String>,
}

impl fmt::Display for ZeroObservations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no observations for state(s) {}", self.names.join(", "))
    }
}

impl std::error::Error for ZeroObservations {}

/// Frequency estimates for every bare parameter. Counts are pooled over
/// all states sharing a parameter.
pub fn estimate_params(model: &Model, obs: &ObservationFunction) -> Result<Valuation, ZeroObservations> {
    let dtmc = model.dtmc();
    let mut missing = Vec::new();
    let mut pooled: BTreeMap<ParamId, (u64, u64)> = BTreeMap::new();
    for c in model.components() {
        for &z in &c.states {
            let total = obs.total_from(z);
            if total == 0 {
                missing.push(z);
                continue;
            }
            for (t, shape) in model.edge_shapes(z) {
                if let EdgeShape::Bare(p) = shape {
                    let e = pooled.entry(p.clone()).or_default();
                    e.0 += obs.get(z, *t);
                    e.1 += total;
                }
            }
        }
    }
    if !missing.is_empty() {
        missing.sort_unstable();
        return Err(ZeroObservations {
            names: missing.iter().map(|&z| dtmc.state_name(z).to_string()).collect(),
            states: missing,
        });
    }
    Ok(pooled
        .into_iter()
        .map(|(p, (hits, total))| (p, hits as f64 / total as f64))
        .collect())
}

/// `|bound - wrong| / |bound - right|`; small values flag a requirement
/// that is close to being refuted.
fn violation_ratio(r: &RequirementView) -> f64 {
    let (lo, hi) = (r.interval.lo, r.interval.hi);
    let near = (r.bound - wrong_end(r.rel, lo, hi)).abs();
    let far = (r.bound - right_end(r.rel, lo, hi)).abs();
    if far == 0.0 {
        f64::INFINITY
    } else {
        near / far
    }
}

/// Indices of the requirements that drive the split: the one most likely
/// to be violated if any is close enough to its wrong end, else every
/// undecided requirement whose interval contains its bound.
pub fn select_relevant(reqs: &[RequirementView], decided: &BTreeSet<String>, epsilon1: f64) -> Vec<usize> {
    let undecided: Vec<usize> = (0..reqs.len())
        .filter(|&i| !decided.contains(reqs[i].id) && reqs[i].interval.contains(reqs[i].bound))
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for &i in &undecided {
        let ratio = violation_ratio(&reqs[i]);
        if ratio < epsilon1 && best.is_none_or(|(_, b)| ratio < b) {
            best = Some((i, ratio));
        }
    }
    match best {
        Some((i, _)) => vec![i],
        None => undecided,
    }
}

fn weight(r: &RequirementView, epsilon2: f64) -> f64 {
    let width = r.interval.width();
    if !width.is_finite() {
        return INFINITE_WIDTH_WEIGHT;
    }
    width / (r.bound - r.interval.mid()).abs().max(epsilon2)
}

/// `Σ_{p ∈ params} |∂expr/∂p|` at the estimate.
fn sensitivity(expr: &CompiledExpression, estimate: &Valuation, params: &BTreeSet<ParamId>) -> f64 {
    let touched: Vec<usize> = (0..expr.vars().len())
        .filter(|&k| params.contains(&expr.vars()[k]))
        .collect();
    if touched.is_empty() {
        return 0.0;
    }
    let x: Vec<f64> = expr
        .vars()
        .iter()
        .map(|p| estimate.get(p).unwrap_or(0.5))
        .collect();
    match expr.gradient(&x) {
        Some(g) => touched
            .iter()
            .map(|&k| {
                let d = g[k].abs();
                if d.is_finite() {
                    d.min(SINGULAR_SENSITIVITY)
                } else {
                    SINGULAR_SENSITIVITY
                }
            })
            .sum(),
        None => SINGULAR_SENSITIVITY,
    }
}

/// `⌊rbudget · share_j / cost_j⌋`, corrected so that floating-point
/// rounding can neither overspend nor starve every component.
pub fn partition(rbudget: f64, shares: &[f64], costs: &[f64]) -> Vec<u64> {
    let total: f64 = shares.iter().sum();
    // Negated so that NaN also lands here.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(total > 0.0) || !(rbudget > 0.0) {
        return vec![0; shares.len()];
    }
    let ideal: Vec<f64> = shares
        .iter()
        .zip(costs)
        .map(|(s, c)| rbudget * (s / total) / c)
        .collect();
    let mut nobs: Vec<u64> = ideal.iter().map(|x| x.max(0.0).floor() as u64).collect();
    let spent = |n: &[u64]| -> f64 { n.iter().zip(costs).map(|(&k, c)| k as f64 * c).sum() };
    while spent(&nobs) > rbudget {
        let j = (0..nobs.len())
            .filter(|&j| nobs[j] > 0)
            .max_by(|&a, &b| (nobs[a] as f64 * costs[a]).total_cmp(&(nobs[b] as f64 * costs[b])))
            .expect("overspending implies a positive count");
        nobs[j] -= 1;
    }
    if nobs.iter().all(|&n| n == 0) {
        let j = (0..ideal.len())
            .max_by(|&a, &b| ideal[a].total_cmp(&ideal[b]))
            .expect("non-empty");
        if ideal[j] >= 1.0 - 1e-9 && costs[j] <= rbudget {
            nobs[j] = 1;
        }
    }
    nobs
}

/// Equal split of `rbudget` over the components flagged in `among`.
pub fn uniform_split(rbudget: f64, costs: &[f64], among: &[bool]) -> Vec<u64> {
    let shares: Vec<f64> = among.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    partition(rbudget, &shares, costs)
}

/// Allocation for the next round.
pub fn allocate(
    rbudget: f64,
    model: &Model,
    reqs: &[RequirementView],
    decided: &BTreeSet<String>,
    obs: &ObservationFunction,
    cfg: &HeuristicConfig,
) -> Allocation {
    let comps = model.components();
    let costs: Vec<f64> = comps.iter().map(|c| c.cost).collect();
    let selected_idx = select_relevant(reqs, decided, cfg.epsilon1);
    let selected: Vec<String> = selected_idx.iter().map(|&i| reqs[i].id.to_string()).collect();

    let estimate = match estimate_params(model, obs) {
        Ok(v) => v,
        Err(zero) => {
            let among: Vec<bool> = comps
                .iter()
                .map(|c| c.states.iter().any(|z| zero.states.contains(z)))
                .collect();
            log::debug!("uniform split: {zero}");
            return Allocation {
                nobs: uniform_split(rbudget, &costs, &among),
                relevance: vec![0.0; comps.len()],
                selected: Vec::new(),
            };
        }
    };

    let comp_params: Vec<BTreeSet<ParamId>> = comps
        .iter()
        .map(|c| params_of_component(model.dtmc(), c))
        .collect();
    let mut relevance = vec![0.0; comps.len()];
    for &i in &selected_idx {
        let w = weight(&reqs[i], cfg.epsilon2);
        for (j, params) in comp_params.iter().enumerate() {
            relevance[j] += w * sensitivity(reqs[i].expr, &estimate, params);
        }
    }
    if relevance.iter().sum::<f64>() > 0.0 {
        Allocation {
            nobs: partition(rbudget, &relevance, &costs),
            relevance,
            selected,
        }
    } else {
        Allocation {
            nobs: uniform_split(rbudget, &costs, &vec![true; comps.len()]),
            relevance,
            selected: Vec::new(),
        }
    }
}
