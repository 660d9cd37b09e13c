//! Confidence intervals: per-state simultaneous intervals for the unknown
//! transition distributions, and conservative property intervals over the
//! resulting parameter region.

mod bnb;
mod chi2;
mod goodman;

use std::collections::{BTreeMap, BTreeSet};

use crate::expr::{ParamId, RationalFunction};
use crate::interval::Interval;
use crate::model::{EdgeShape, Model, ObservationFunction};
use crate::pmc::PropertyExpression;
use crate::props::Kind;

pub use bnb::{BnbConfig, CompiledExpression, SimplexConstraint};
pub use chi2::{chi_square_quantile, Chi2Error};
pub use goodman::{state_ci, CiError};

/// Parameter intervals plus the per-state sum constraints contributed by
/// derived edges (`c - Σ params`).
#[derive(Clone, Debug, PartialEq)]
pub struct ParamBox {
    pub vars: Vec<ParamId>,
    pub intervals: Vec<Interval>,
    pub constraints: Vec<SimplexConstraint>,
    /// Joint confidence level used for each state.
    pub alpha_state: f64,
    /// Parameters none of whose states has been observed.
    pub unobserved: BTreeSet<ParamId>,
}

impl ParamBox {
    pub fn index_of(&self, p: &ParamId) -> Option<usize> {
        self.vars.iter().position(|v| v == p)
    }

    pub fn interval(&self, p: &ParamId) -> Option<Interval> {
        self.index_of(p).map(|i| self.intervals[i])
    }
}

/// `[l_i, u_i]` for one requirement.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyInterval {
    pub id: String,
    pub lo: f64,
    pub hi: f64,
    pub alpha: f64,
}

/// Parametric states whose parameters occur in at least one of `exprs`.
pub fn relevant_states(model: &Model, exprs: &[&RationalFunction]) -> Vec<usize> {
    let params: BTreeSet<ParamId> = exprs.iter().flat_map(|f| f.params()).collect();
    model
        .dtmc()
        .parametric_states()
        .into_iter()
        .filter(|&z| model.dtmc().params_of_state(z).iter().any(|p| params.contains(p)))
        .collect()
}

/// Stage 1: simultaneous intervals for every parametric state feeding
/// `exprs`, each at level `alpha^(1/c)` with `c` the number of such states.
pub fn build_param_box(
    model: &Model,
    obs: &ObservationFunction,
    alpha: f64,
    exprs: &[&RationalFunction],
) -> Result<ParamBox, CiError> {
    let states = relevant_states(model, exprs);
    let c = states.len().max(1);
    let alpha_state = alpha.powf(1.0 / c as f64);

    let mut per_param: BTreeMap<ParamId, Vec<Interval>> = BTreeMap::new();
    let mut observed: BTreeSet<ParamId> = BTreeSet::new();
    let mut derived: Vec<(Vec<ParamId>, Interval)> = Vec::new();
    for &z in &states {
        let shapes = model.edge_shapes(z);
        let counts: Vec<u64> = shapes.iter().map(|(t, _)| obs.get(z, *t)).collect();
        let cis = state_ci(&counts, alpha_state)?;
        let seen = counts.iter().any(|&n| n > 0);
        for ((_, shape), ci) in shapes.iter().zip(&cis) {
            match shape {
                EdgeShape::Constant(_) => {}
                EdgeShape::Bare(p) => {
                    per_param.entry(p.clone()).or_default().push(*ci);
                    if seen {
                        observed.insert(p.clone());
                    }
                }
                EdgeShape::Derived { constant, params } => {
                    let sum = Interval::new(constant - ci.hi, constant - ci.lo);
                    derived.push((params.clone(), sum));
                }
            }
        }
    }

    let vars: Vec<ParamId> = per_param.keys().cloned().collect();
    let intervals = per_param
        .values()
        .map(|cis| {
            let meet = cis.iter().try_fold(Interval::new(0.0, 1.0), |acc, i| acc.intersect(i));
            meet.unwrap_or_else(|| cis.iter().fold(cis[0], |acc, i| acc.hull(i)))
        })
        .collect();
    let constraints = derived
        .into_iter()
        .map(|(params, sum)| SimplexConstraint {
            vars: params
                .iter()
                .map(|p| vars.iter().position(|v| v == p).expect("derived params are bare"))
                .collect(),
            sum,
        })
        .collect();
    let unobserved = vars.iter().filter(|p| !observed.contains(*p)).cloned().collect();
    Ok(ParamBox {
        vars,
        intervals,
        constraints,
        alpha_state,
        unobserved,
    })
}

/// Outer enclosure of `f` over an axis-aligned box, one interval per entry
/// of `f.vars()`.
pub fn range_over_box(f: &CompiledExpression, region: &[Interval], cfg: BnbConfig) -> Interval {
    assert_eq!(region.len(), f.vars().len(), "one interval per variable");
    let map: Vec<usize> = (0..region.len()).collect();
    bnb::range(f, region, &map, &[], cfg)
}

fn natural_range(kind: Kind) -> Interval {
    match kind {
        Kind::Probability => Interval::new(0.0, 1.0),
        Kind::Reward => Interval::new(0.0, f64::INFINITY),
    }
}

/// Stage 3: a conservative interval for the property over the parameter
/// region. An expression whose parameters are all unobserved gets the
/// natural range of its kind.
pub fn property_interval(
    pe: &PropertyExpression,
    compiled: &CompiledExpression,
    pbox: &ParamBox,
    alpha: f64,
    cfg: BnbConfig,
) -> PropertyInterval {
    let natural = natural_range(pe.kind);
    let all_unobserved =
        !compiled.vars().is_empty() && compiled.vars().iter().all(|p| pbox.unobserved.contains(p));
    let r = if all_unobserved {
        natural
    } else {
        let mut region = pbox.intervals.clone();
        let mut cons = pbox.constraints.clone();
        let map: Vec<usize> = compiled
            .vars()
            .iter()
            .map(|p| {
                pbox.index_of(p).unwrap_or_else(|| {
                    region.push(Interval::new(0.0, 1.0));
                    region.len() - 1
                })
            })
            .collect();
        cons.retain(|c| c.vars.iter().all(|&v| v < region.len()));
        let r = bnb::range(compiled, &region, &map, &cons, cfg);
        Interval::new(r.lo.max(natural.lo), r.hi.min(natural.hi))
    };
    let (lo, hi) = if r.lo <= r.hi { (r.lo, r.hi) } else { (r.hi, r.hi) };
    PropertyInterval {
        id: pe.id.clone(),
        lo,
        hi,
        alpha,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;
    use crate::pmc::property_expression;
    use crate::props::parse_requirements;

    const COIN: &str = r#"dtmc
param p;
param q;
state a init;
state b;
state good;
state bad;
label good "good";
trans a -> b : p;
trans a -> bad : 1 - p;
trans b -> good : q;
trans b -> bad : 1 - q;
trans good -> good : 1;
trans bad -> bad : 1;
component x cost 1 states { a };
component y cost 1 states { b };
"#;

    fn setup(reqs: &str) -> (Model, Vec<PropertyExpression>) {
        let m = parse_model(COIN).unwrap();
        let rs = parse_requirements(reqs).unwrap();
        let pes = rs
            .iter()
            .map(|r| property_expression(m.dtmc(), &r.prop, 100).unwrap())
            .collect();
        (m, pes)
    }

    #[test]
    fn alpha_state_follows_product_rule() {
        let (m, pes) = setup("R: P>0.1 [ F \"good\" ]");
        let exprs: Vec<&RationalFunction> = pes.iter().map(|p| &p.expr).collect();
        let b = build_param_box(&m, &ObservationFunction::new(), 0.95, &exprs).unwrap();
        assert!((b.alpha_state - 0.95f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.vars.len(), 2);
        assert_eq!(b.constraints.len(), 2);

        let p_only = RationalFunction::var(ParamId::new("p").unwrap());
        let b1 = build_param_box(&m, &ObservationFunction::new(), 0.95, &[&p_only]).unwrap();
        assert_eq!(b1.alpha_state, 0.95);
        assert_eq!(b1.vars.len(), 1);
    }

    #[test]
    fn empty_observations_give_natural_range() {
        let (m, pes) = setup("R: P>0.1 [ F \"good\" ]");
        let exprs: Vec<&RationalFunction> = pes.iter().map(|p| &p.expr).collect();
        let b = build_param_box(&m, &ObservationFunction::new(), 0.95, &exprs).unwrap();
        assert_eq!(b.intervals, vec![Interval::new(0.0, 1.0); 2]);
        let c = CompiledExpression::new(&pes[0].expr);
        let pi = property_interval(&pes[0], &c, &b, 0.95, BnbConfig::default());
        assert_eq!((pi.lo, pi.hi), (0.0, 1.0));
    }

    #[test]
    fn observations_tighten_the_interval() {
        let (m, pes) = setup("R: P>0.1 [ F \"good\" ]");
        let d = m.dtmc();
        let idx = |n: &str| d.state_index(n).unwrap();
        let mut obs = ObservationFunction::new();
        obs.add(idx("a"), idx("b"), 900);
        obs.add(idx("a"), idx("bad"), 100);
        obs.add(idx("b"), idx("good"), 800);
        obs.add(idx("b"), idx("bad"), 200);
        let exprs: Vec<&RationalFunction> = pes.iter().map(|p| &p.expr).collect();
        let b = build_param_box(&m, &obs, 0.95, &exprs).unwrap();
        let c = CompiledExpression::new(&pes[0].expr);
        let pi = property_interval(&pes[0], &c, &b, 0.95, BnbConfig::default());
        assert!(pi.lo < 0.72 && pi.hi > 0.72, "{pi:?}");
        assert!(pi.hi - pi.lo < 0.15, "{pi:?}");
        let p = b.interval(&ParamId::new("p").unwrap()).unwrap();
        assert!((pi.lo - p.lo * b.interval(&ParamId::new("q").unwrap()).unwrap().lo).abs() < 1e-3);
    }
}
