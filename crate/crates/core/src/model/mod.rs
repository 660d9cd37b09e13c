//! Parametric DTMCs with reward structures, component annotations and
//! observation counts, plus the line-oriented model file format.

mod format;
mod observations;
mod shape;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{parse_expr, Coeff, ExprError, ParamId, RationalFunction, Valuation};

pub use format::{parse_model, print_model};
pub use observations::{merge_observations, ObservationFunction};
pub use shape::EdgeShape;

/// Number of random valuations used by the transition-sum check.
const SUM_CHECK_SAMPLES: usize = 200;
const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Expr { line: usize, source: ExprError },
    #[error("duplicate {what} `{name}`")]
    Duplicate { what: &'static str, name: String },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("expected exactly one initial state, found {0}")]
    InitCount(usize),
    #[error("state `{0}` has no outgoing transitions")]
    NoOutgoing(String),
    #[error("transition {from} -> {to}: constant probability {value} is outside [0,1]")]
    ConstantOutOfRange { from: String, to: String, value: String },
    #[error("outgoing probabilities of state `{state}` sum to {sum} at {at}")]
    TransitionSum { state: String, sum: f64, at: String },
    #[error("transition {from} -> {to} has probability {value} at {at}, outside [0,1]")]
    ProbabilityOutOfRange { from: String, to: String, value: f64, at: String },
    #[error("reward on `{0}` is negative")]
    NegativeReward(String),
    #[error("reward value `{0}` must be a constant")]
    NonConstantNumber(String),
    #[error("component `{0}` must have a positive cost")]
    NonPositiveCost(String),
    #[error("component `{0}` has no states")]
    EmptyComponent(String),
    #[error("state `{state}` belongs to both components `{a}` and `{b}`")]
    OverlappingComponents { state: String, a: String, b: String },
    #[error("component `{component}` lists `{state}`, which has no parametric transitions")]
    NotParametric { component: String, state: String },
    #[error("parametric state `{0}` is not assigned to any component")]
    UnassignedState(String),
    #[error("parameter `{param}` occurs in components `{a}` and `{b}`")]
    SharedParam { param: String, a: String, b: String },
    #[error("observation {from} -> {to}: `{from}` is not a parametric state")]
    DanglingObservation { from: String, to: String },
    #[error("observation {from} -> {to}: there is no such transition")]
    UnknownObservedTransition { from: String, to: String },
    #[error(
        "state `{state}`: edge to `{target}` has unsupported shape `{expr}`; parametric \
         states may only use constants, bare parameters and one edge of the form \
         c - (sum of the state's bare parameters)"
    )]
    UnsupportedEdgeShape { state: String, target: String, expr: String },
    #[error("valuation is missing parameter `{0}`")]
    MissingParam(String),
}

/// A parametric discrete-time Markov chain. States are addressed by index;
/// names are kept for I/O.
#[derive(Clone, Debug, PartialEq)]
pub struct ParametricDtmc {
    params: Vec<ParamId>,
    states: Vec<String>,
    init: usize,
    transitions: Vec<Vec<(usize, RationalFunction)>>,
    labels: Vec<BTreeSet<String>>,
    state_rewards: Vec<Coeff>,
    transition_rewards: BTreeMap<(usize, usize), Coeff>,
}

impl ParametricDtmc {
    pub fn params(&self) -> &[ParamId] {
        &self.params
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|n| n == name)
    }

    pub fn init(&self) -> usize {
        self.init
    }

    pub fn transitions(&self, s: usize) -> &[(usize, RationalFunction)] {
        &self.transitions[s]
    }

    pub fn probability(&self, from: usize, to: usize) -> Option<&RationalFunction> {
        self.transitions[from]
            .iter()
            .find(|(t, _)| *t == to)
            .map(|(_, f)| f)
    }

    pub fn labels(&self, s: usize) -> &BTreeSet<String> {
        &self.labels[s]
    }

    pub fn has_label(&self, s: usize, atom: &str) -> bool {
        self.labels[s].contains(atom)
    }

    pub fn states_with_label(&self, atom: &str) -> Vec<usize> {
        (0..self.num_states())
            .filter(|&s| self.has_label(s, atom))
            .collect()
    }

    pub fn state_reward(&self, s: usize) -> &Coeff {
        &self.state_rewards[s]
    }

    pub fn transition_reward(&self, from: usize, to: usize) -> Option<&Coeff> {
        self.transition_rewards.get(&(from, to))
    }

    pub fn transition_rewards(&self) -> impl Iterator<Item = ((usize, usize), &Coeff)> {
        self.transition_rewards.iter().map(|(k, v)| (*k, v))
    }

    /// Whether some outgoing probability of `s` is non-constant.
    pub fn is_parametric(&self, s: usize) -> bool {
        self.transitions[s].iter().any(|(_, f)| !f.is_constant())
    }

    /// The set Z of parametric states, in index order.
    pub fn parametric_states(&self) -> Vec<usize> {
        (0..self.num_states())
            .filter(|&s| self.is_parametric(s))
            .collect()
    }

    /// Parameters occurring in the outgoing transitions of `s`.
    pub fn params_of_state(&self, s: usize) -> BTreeSet<ParamId> {
        self.transitions[s]
            .iter()
            .flat_map(|(_, f)| f.params())
            .collect()
    }

    /// Checks that every state's outgoing probabilities lie in `[0,1]` and
    /// sum to one at `v`.
    pub fn check_distributions_at(&self, v: &Valuation) -> Result<(), ModelError> {
        for p in &self.params {
            if v.get(p).is_none() {
                return Err(ModelError::MissingParam(p.to_string()));
            }
        }
        for s in 0..self.num_states() {
            self.check_state_at(s, v, true)?;
        }
        Ok(())
    }

    fn check_state_at(&self, s: usize, v: &Valuation, ranges: bool) -> Result<(), ModelError> {
        let mut sum = 0.0;
        for (t, f) in &self.transitions[s] {
            let x = match f.eval(v) {
                Ok(x) => x,
                // Poles are not a sum violation; the sample is skipped.
                Err(ExprError::SingularEvaluation) => return Ok(()),
                Err(e) => return Err(ModelError::Expr { line: 0, source: e }),
            };
            if ranges && !(-SUM_TOLERANCE..=1.0 + SUM_TOLERANCE).contains(&x) {
                return Err(ModelError::ProbabilityOutOfRange {
                    from: self.states[s].clone(),
                    to: self.states[*t].clone(),
                    value: x,
                    at: describe(v),
                });
            }
            sum += x;
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ModelError::TransitionSum {
                state: self.states[s].clone(),
                sum,
                at: describe(v),
            });
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ModelError> {
        for s in 0..self.num_states() {
            if self.transitions[s].is_empty() {
                return Err(ModelError::NoOutgoing(self.states[s].clone()));
            }
            for (t, f) in &self.transitions[s] {
                if let Some(c) = f.as_constant() {
                    let zero = Coeff::from_integer(0.into());
                    let one = Coeff::from_integer(1.into());
                    if c < zero || c > one {
                        return Err(ModelError::ConstantOutOfRange {
                            from: self.states[s].clone(),
                            to: self.states[*t].clone(),
                            value: c.to_string(),
                        });
                    }
                }
            }
        }
        let zero = Coeff::from_integer(0.into());
        for (s, r) in self.state_rewards.iter().enumerate() {
            if *r < zero {
                return Err(ModelError::NegativeReward(self.states[s].clone()));
            }
        }
        for ((s, _), r) in &self.transition_rewards {
            if *r < zero {
                return Err(ModelError::NegativeReward(self.states[*s].clone()));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
        let samples = if self.params.is_empty() { 1 } else { SUM_CHECK_SAMPLES };
        for _ in 0..samples {
            let v: Valuation = self
                .params
                .iter()
                .map(|p| (p.clone(), rng.gen_range(f64::EPSILON..1.0)))
                .collect();
            for s in 0..self.num_states() {
                self.check_state_at(s, &v, false)?;
            }
        }
        Ok(())
    }
}

fn describe(v: &Valuation) -> String {
    if v.is_empty() {
        return "every valuation".into();
    }
    let parts: Vec<String> = v.iter().map(|(p, x)| format!("{p}={x}")).collect();
    parts.join(", ")
}

/// Incremental construction of a [`ParametricDtmc`] by state and parameter
/// name. [`build`](DtmcBuilder::build) runs the structural and
/// transition-sum checks.
#[derive(Default)]
pub struct DtmcBuilder {
    params: Vec<ParamId>,
    states: Vec<String>,
    index: HashMap<String, usize>,
    inits: Vec<usize>,
    transitions: Vec<Vec<(usize, RationalFunction)>>,
    labels: Vec<BTreeSet<String>>,
    state_rewards: Vec<Coeff>,
    transition_rewards: BTreeMap<(usize, usize), Coeff>,
}

impl DtmcBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn param(&mut self, name: &str) -> Result<&mut Self, ModelError> {
        let id = ParamId::new(name).map_err(|e| ModelError::Expr { line: 0, source: e })?;
        if self.params.contains(&id) {
            return Err(ModelError::Duplicate {
                what: "parameter",
                name: name.into(),
            });
        }
        self.params.push(id);
        Ok(self)
    }

    pub fn params(&self) -> &[ParamId] {
        &self.params
    }

    pub fn state(&mut self, name: &str) -> Result<&mut Self, ModelError> {
        if !crate::expr::is_identifier(name) {
            return Err(ModelError::Syntax {
                line: 0,
                msg: format!("invalid state name `{name}`"),
            });
        }
        if self.index.contains_key(name) {
            return Err(ModelError::Duplicate {
                what: "state",
                name: name.into(),
            });
        }
        self.index.insert(name.into(), self.states.len());
        self.states.push(name.into());
        self.transitions.push(Vec::new());
        self.labels.push(BTreeSet::new());
        self.state_rewards.push(Coeff::from_integer(0.into()));
        Ok(self)
    }

    pub fn state_index(&self, name: &str) -> Result<usize, ModelError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownState(name.into()))
    }

    pub fn init(&mut self, name: &str) -> Result<&mut Self, ModelError> {
        let s = self.state_index(name)?;
        self.inits.push(s);
        Ok(self)
    }

    pub fn label(&mut self, state: &str, atom: &str) -> Result<&mut Self, ModelError> {
        let s = self.state_index(state)?;
        self.labels[s].insert(atom.into());
        Ok(self)
    }

    pub fn trans_expr(
        &mut self,
        from: &str,
        to: &str,
        f: RationalFunction,
    ) -> Result<&mut Self, ModelError> {
        let s = self.state_index(from)?;
        let t = self.state_index(to)?;
        if self.transitions[s].iter().any(|(x, _)| *x == t) {
            return Err(ModelError::Duplicate {
                what: "transition",
                name: format!("{from} -> {to}"),
            });
        }
        self.transitions[s].push((t, f));
        Ok(self)
    }

    /// Adds a transition whose probability is given in expression syntax.
    pub fn trans(&mut self, from: &str, to: &str, expr: &str) -> Result<&mut Self, ModelError> {
        let f = parse_expr(expr, &self.params).map_err(|e| ModelError::Expr { line: 0, source: e })?;
        self.trans_expr(from, to, f)
    }

    pub fn state_reward(&mut self, state: &str, r: Coeff) -> Result<&mut Self, ModelError> {
        let s = self.state_index(state)?;
        self.state_rewards[s] = r;
        Ok(self)
    }

    pub fn transition_reward(&mut self, from: &str, to: &str, r: Coeff) -> Result<&mut Self, ModelError> {
        let s = self.state_index(from)?;
        let t = self.state_index(to)?;
        self.transition_rewards.insert((s, t), r);
        Ok(self)
    }

    pub fn build(&self) -> Result<ParametricDtmc, ModelError> {
        if self.inits.len() != 1 {
            return Err(ModelError::InitCount(self.inits.len()));
        }
        let dtmc = ParametricDtmc {
            params: self.params.clone(),
            states: self.states.clone(),
            init: self.inits[0],
            transitions: self.transitions.clone(),
            labels: self.labels.clone(),
            state_rewards: self.state_rewards.clone(),
            transition_rewards: self.transition_rewards.clone(),
        };
        dtmc.validate()?;
        Ok(dtmc)
    }
}

/// A unit-testable part of the system: the parametric states it owns and
/// the cost of one test.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub name: String,
    pub cost: f64,
    pub states: Vec<usize>,
}

/// A validated model: DTMC, components partitioning Z, and initial
/// observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    dtmc: ParametricDtmc,
    components: Vec<Component>,
    initial_obs: ObservationFunction,
    shapes: BTreeMap<usize, Vec<(usize, EdgeShape)>>,
}

impl Model {
    pub fn new(
        dtmc: ParametricDtmc,
        components: Vec<Component>,
        initial_obs: ObservationFunction,
    ) -> Result<Self, ModelError> {
        let name = |s: usize| dtmc.state_name(s).to_string();
        let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (j, c) in components.iter().enumerate() {
            if !seen.insert(c.name.as_str()) {
                return Err(ModelError::Duplicate {
                    what: "component",
                    name: c.name.clone(),
                });
            }
            if !(c.cost > 0.0 && c.cost.is_finite()) {
                return Err(ModelError::NonPositiveCost(c.name.clone()));
            }
            if c.states.is_empty() {
                return Err(ModelError::EmptyComponent(c.name.clone()));
            }
            for &s in &c.states {
                if !dtmc.is_parametric(s) {
                    return Err(ModelError::NotParametric {
                        component: c.name.clone(),
                        state: name(s),
                    });
                }
                if let Some(&k) = owner.get(&s) {
                    return Err(ModelError::OverlappingComponents {
                        state: name(s),
                        a: components[k].name.clone(),
                        b: c.name.clone(),
                    });
                }
                owner.insert(s, j);
            }
        }
        for z in dtmc.parametric_states() {
            if !owner.contains_key(&z) {
                return Err(ModelError::UnassignedState(name(z)));
            }
        }
        let mut param_owner: BTreeMap<ParamId, usize> = BTreeMap::new();
        for (&z, &j) in &owner {
            for p in dtmc.params_of_state(z) {
                match param_owner.get(&p) {
                    Some(&k) if k != j => {
                        return Err(ModelError::SharedParam {
                            param: p.to_string(),
                            a: components[k].name.clone(),
                            b: components[j].name.clone(),
                        })
                    }
                    _ => {
                        param_owner.insert(p, j);
                    }
                }
            }
        }
        for ((z, s), _) in initial_obs.iter() {
            if !owner.contains_key(&z) {
                return Err(ModelError::DanglingObservation {
                    from: name(z),
                    to: name(s),
                });
            }
            if dtmc.probability(z, s).is_none() {
                return Err(ModelError::UnknownObservedTransition {
                    from: name(z),
                    to: name(s),
                });
            }
        }
        let mut shapes = BTreeMap::new();
        for &z in owner.keys() {
            shapes.insert(z, shape::classify_state(&dtmc, z)?);
        }
        Ok(Model {
            dtmc,
            components,
            initial_obs,
            shapes,
        })
    }

    pub fn dtmc(&self) -> &ParametricDtmc {
        &self.dtmc
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn initial_obs(&self) -> &ObservationFunction {
        &self.initial_obs
    }

    /// Edge shapes of a parametric state, in transition order.
    pub fn edge_shapes(&self, z: usize) -> &[(usize, EdgeShape)] {
        self.shapes.get(&z).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Index of the component owning parametric state `z`.
    pub fn component_of(&self, z: usize) -> Option<usize> {
        self.components.iter().position(|c| c.states.contains(&z))
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    pub fn total_component_cost(&self) -> f64 {
        self.components.iter().map(|c| c.cost).sum()
    }
}

/// All parameters appearing in outgoing transitions of the component's
/// states.
pub fn params_of_component(model: &ParametricDtmc, component: &Component) -> BTreeSet<ParamId> {
    component
        .states
        .iter()
        .flat_map(|&z| model.params_of_state(z))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin() -> DtmcBuilder {
        let mut b = DtmcBuilder::new();
        b.param("p").unwrap();
        for s in ["s0", "s1", "s2"] {
            b.state(s).unwrap();
        }
        b.init("s0").unwrap();
        b.trans("s1", "s1", "1").unwrap();
        b.trans("s2", "s2", "1").unwrap();
        b
    }

    #[test]
    fn valid_coin() {
        let mut b = coin();
        b.trans("s0", "s1", "p").unwrap();
        b.trans("s0", "s2", "1 - p").unwrap();
        let m = b.build().unwrap();
        assert_eq!(m.parametric_states(), vec![0]);
        assert!(!m.is_parametric(1));
    }

    #[test]
    fn sum_violation() {
        let mut b = coin();
        b.trans("s0", "s1", "p").unwrap();
        b.trans("s0", "s2", "p").unwrap();
        assert!(matches!(b.build(), Err(ModelError::TransitionSum { .. })));
    }

    #[test]
    fn constant_range_and_missing_edges() {
        let mut b = coin();
        b.trans("s0", "s1", "1.5").unwrap();
        b.trans("s0", "s2", "-0.5").unwrap();
        assert!(matches!(b.build(), Err(ModelError::ConstantOutOfRange { .. })));
        let b = coin();
        assert!(matches!(b.build(), Err(ModelError::NoOutgoing(_))));
    }

    #[test]
    fn duplicate_names() {
        let mut b = coin();
        assert!(matches!(b.state("s1"), Err(ModelError::Duplicate { .. })));
        assert!(matches!(b.param("p"), Err(ModelError::Duplicate { .. })));
        b.trans("s0", "s1", "p").unwrap();
        assert!(matches!(b.trans("s0", "s1", "p"), Err(ModelError::Duplicate { .. })));
    }

    #[test]
    fn distribution_check_at_point() {
        let mut b = coin();
        b.trans("s0", "s1", "p").unwrap();
        b.trans("s0", "s2", "1 - p").unwrap();
        let m = b.build().unwrap();
        let p = ParamId::new("p").unwrap();
        assert!(m.check_distributions_at(&Valuation::new().with(&p, 0.3)).is_ok());
        assert!(matches!(
            m.check_distributions_at(&Valuation::new().with(&p, 1.3)),
            Err(ModelError::ProbabilityOutOfRange { .. })
        ));
        assert!(matches!(
            m.check_distributions_at(&Valuation::new()),
            Err(ModelError::MissingParam(_))
        ));
    }

    #[test]
    fn component_params() {
        let mut b = DtmcBuilder::new();
        b.param("p1").unwrap().param("p2").unwrap();
        b.state("z").unwrap().state("a").unwrap().state("b").unwrap().state("c").unwrap();
        b.init("z").unwrap();
        b.trans("z", "a", "p1").unwrap();
        b.trans("z", "b", "p2").unwrap();
        b.trans("z", "c", "1 - p1 - p2").unwrap();
        for s in ["a", "b", "c"] {
            b.trans(s, s, "1").unwrap();
        }
        let dtmc = b.build().unwrap();
        let comp = Component {
            name: "c".into(),
            cost: 1.0,
            states: vec![0],
        };
        let ps: Vec<String> = params_of_component(&dtmc, &comp)
            .iter()
            .map(|p| p.to_string())
            .collect();
        assert_eq!(ps, ["p1", "p2"]);
        assert!(Model::new(dtmc, vec![comp], ObservationFunction::new()).is_ok());
    }
}
