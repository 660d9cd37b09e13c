//! Requirements over the non-nested PCTL fragment: bounded and unbounded
//! until, eventually, next, and reachability rewards.

mod parse;

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::expr::Coeff;
use crate::model::ParametricDtmc;

pub use parse::{parse_queries, parse_requirements};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PropsError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: nested `{op}` operators are not supported")]
    Nested { line: usize, op: String },
    #[error("line {line}: unsupported fragment `{op}`")]
    Unsupported { line: usize, op: String },
    #[error("line {line}: duplicate requirement id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: probability bound {bound} is outside [0,1]")]
    BoundOutOfRange { line: usize, bound: String },
    #[error("line {line}: requirement `{id}` has no bound")]
    MissingBound { line: usize, id: String },
    #[error("start label `{label}` must hold in exactly one state, found {count}")]
    StartLabel { label: String, count: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StateFormula {
    True,
    False,
    Atom(String),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
}

impl StateFormula {
    pub fn atom(a: &str) -> Self {
        StateFormula::Atom(a.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: StateFormula) -> Self {
        StateFormula::Not(Box::new(f))
    }

    pub fn and(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn holds(&self, labels: &BTreeSet<String>) -> bool {
        match self {
            StateFormula::True => true,
            StateFormula::False => false,
            StateFormula::Atom(a) => labels.contains(a),
            StateFormula::Not(f) => !f.holds(labels),
            StateFormula::And(a, b) => a.holds(labels) && b.holds(labels),
            StateFormula::Or(a, b) => a.holds(labels) || b.holds(labels),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            StateFormula::Or(..) => 0,
            StateFormula::And(..) => 1,
            _ => 2,
        }
    }

    fn fmt_child(&self, child: &StateFormula, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if child.precedence() < min {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateFormula::True => f.write_str("true"),
            StateFormula::False => f.write_str("false"),
            StateFormula::Atom(a) => write!(f, "\"{a}\""),
            StateFormula::Not(x) => {
                f.write_str("!")?;
                self.fmt_child(x, 2, f)
            }
            StateFormula::And(a, b) => {
                self.fmt_child(a, 1, f)?;
                f.write_str(" & ")?;
                self.fmt_child(b, 2, f)
            }
            StateFormula::Or(a, b) => {
                self.fmt_child(a, 0, f)?;
                f.write_str(" | ")?;
                self.fmt_child(b, 1, f)
            }
        }
    }
}

/// Path formulas. `F Φ` is stored as `true U Φ` and `F<=k Φ` as
/// `true U<=k Φ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PathFormula {
    Next(StateFormula),
    Until(StateFormula, StateFormula),
    BoundedUntil(StateFormula, StateFormula, u32),
}

impl PathFormula {
    pub fn eventually(f: StateFormula) -> Self {
        PathFormula::Until(StateFormula::True, f)
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathFormula::Next(x) => write!(f, "X {x}"),
            PathFormula::Until(StateFormula::True, b) => write!(f, "F {b}"),
            PathFormula::Until(a, b) => write!(f, "{} U {}", Paren(a), Paren(b)),
            PathFormula::BoundedUntil(StateFormula::True, b, k) => write!(f, "F<={k} {b}"),
            PathFormula::BoundedUntil(a, b, k) => write!(f, "{} U<={k} {}", Paren(a), Paren(b)),
        }
    }
}

/// Parenthesizes binary formulas so `U` binds loosest when read back.
struct Paren<'a>(&'a StateFormula);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            StateFormula::And(..) | StateFormula::Or(..) => write!(f, "({})", self.0),
            other => write!(f, "{other}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rel {
    Lt,
    Le,
    Ge,
    Gt,
}

impl Rel {
    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Rel::Lt => a < b,
            Rel::Le => a <= b,
            Rel::Ge => a >= b,
            Rel::Gt => a > b,
        }
    }

    /// Whether the requirement bounds the property from above.
    pub fn is_upper(self) -> bool {
        matches!(self, Rel::Lt | Rel::Le)
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Probability,
    Reward,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Query {
    Probability(PathFormula),
    /// Expected reward accumulated until the target is reached.
    Reward(StateFormula),
}

impl Query {
    pub fn kind(&self) -> Kind {
        match self {
            Query::Probability(_) => Kind::Probability,
            Query::Reward(_) => Kind::Reward,
        }
    }
}

/// A property without a bound, as used by value queries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Property {
    pub id: String,
    pub query: Query,
    pub start_label: Option<String>,
}

impl Property {
    /// The state the property is evaluated in: the unique state carrying
    /// the start label, or the initial state.
    pub fn start_state(&self, model: &ParametricDtmc) -> Result<usize, PropsError> {
        match &self.start_label {
            None => Ok(model.init()),
            Some(label) => {
                let states = model.states_with_label(label);
                if states.len() == 1 {
                    Ok(states[0])
                } else {
                    Err(PropsError::StartLabel {
                        label: label.clone(),
                        count: states.len(),
                    })
                }
            }
        }
    }

    fn fmt_with(&self, constraint: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.query {
            Query::Probability(path) => write!(f, "{}: P{constraint} [ {path} ]", self.id)?,
            Query::Reward(target) => write!(f, "{}: R{constraint} [ F {target} ]", self.id)?,
        }
        if let Some(label) = &self.start_label {
            write!(f, " from \"{label}\"")?;
        }
        Ok(())
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with("=?", f)
    }
}

/// `prop ⋈ bound`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Requirement {
    pub prop: Property,
    pub rel: Rel,
    pub bound: Coeff,
}

impl Requirement {
    pub fn id(&self) -> &str {
        &self.prop.id
    }

    pub fn kind(&self) -> Kind {
        self.prop.query.kind()
    }

    pub fn bound_f64(&self) -> f64 {
        crate::expr::coeff_to_f64(&self.bound)
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = format!("{}{}", self.rel, decimal_string(&self.bound));
        self.prop.fmt_with(&c, f)
    }
}

/// Decimal rendering of a rational with a terminating expansion; other
/// values fall back to `n/d`.
pub(crate) fn decimal_string(c: &Coeff) -> String {
    let mut den = c.denom().clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return c.to_string();
    }
    let digits = twos.max(fives);
    let scaled = c * Coeff::from_integer(BigInt::from(10).pow(digits));
    let n = scaled.to_integer();
    let neg = n < BigInt::zero();
    let s = n.magnitude().to_string();
    let s = format!("{s:0>width$}", width = digits as usize + 1);
    let (int, frac) = s.split_at(s.len() - digits as usize);
    let sign = if neg { "-" } else { "" };
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// States satisfying `f`.
pub fn sat_states(model: &ParametricDtmc, f: &StateFormula) -> BTreeSet<usize> {
    (0..model.num_states())
        .filter(|&s| f.holds(model.labels(s)))
        .collect()
}

/// Satisfaction as a per-state mask.
pub fn sat_mask(model: &ParametricDtmc, f: &StateFormula) -> Vec<bool> {
    (0..model.num_states())
        .map(|s| f.holds(model.labels(s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DtmcBuilder;
    use proptest::prelude::*;

    fn labelled(labels: &[&[&str]]) -> ParametricDtmc {
        let mut b = DtmcBuilder::new();
        for (i, ls) in labels.iter().enumerate() {
            let s = format!("s{i}");
            b.state(&s).unwrap();
            b.trans(&s, &s, "1").unwrap();
            for l in *ls {
                b.label(&s, l).unwrap();
            }
        }
        b.init("s0").unwrap();
        b.build().unwrap()
    }

    #[test]
    fn satisfaction_sets() {
        let m = labelled(&[&["a"], &["b"], &["a", "b"], &[]]);
        assert_eq!(sat_states(&m, &StateFormula::True).len(), 4);
        let a = StateFormula::atom("a");
        assert_eq!(sat_states(&m, &a), BTreeSet::from([0, 2]));
        let contradiction = StateFormula::and(StateFormula::not(a.clone()), a);
        assert!(sat_states(&m, &contradiction).is_empty());
    }

    #[test]
    fn decimal_rendering() {
        let d = |n: i64, den: i64| decimal_string(&Coeff::new(n.into(), den.into()));
        assert_eq!(d(26, 100), "0.26");
        assert_eq!(d(3, 10000), "0.0003");
        assert_eq!(d(5, 1), "5");
        assert_eq!(d(5, 2), "2.5");
        assert_eq!(d(1, 3), "1/3");
    }

    #[test]
    fn start_label_must_be_unique() {
        let m = labelled(&[&["a"], &["b"], &["a"]]);
        let prop = |l: &str| Property {
            id: "x".into(),
            query: Query::Reward(StateFormula::True),
            start_label: Some(l.into()),
        };
        assert_eq!(prop("b").start_state(&m), Ok(1));
        assert!(prop("a").start_state(&m).is_err());
        assert!(prop("c").start_state(&m).is_err());
    }

    pub(super) fn arb_state_formula() -> impl Strategy<Value = StateFormula> {
        let leaf = prop_oneof![
            Just(StateFormula::True),
            Just(StateFormula::False),
            prop::sample::select(vec!["a", "b", "c"]).prop_map(StateFormula::atom),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(StateFormula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| StateFormula::and(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| StateFormula::or(a, b)),
            ]
        })
    }

    proptest! {
        #[test]
        fn de_morgan(f in arb_state_formula(), g in arb_state_formula(),
                     labels in prop::collection::vec(prop::sample::subsequence(vec!["a", "b", "c"], 0..=3), 1..6)) {
            let rows: Vec<&[&str]> = labels.iter().map(|v| v.as_slice()).collect();
            let m = labelled(&rows);
            let not = StateFormula::not;
            let lhs = sat_states(&m, &not(StateFormula::and(f.clone(), g.clone())));
            let rhs = sat_states(&m, &StateFormula::or(not(f.clone()), not(g.clone())));
            prop_assert_eq!(lhs, rhs);
            let lhs = sat_states(&m, &not(StateFormula::or(f.clone(), g.clone())));
            let rhs = sat_states(&m, &StateFormula::and(not(f), not(g)));
            prop_assert_eq!(lhs, rhs);
        }
    }
}
