//! Exact multivariate polynomials and rational functions over named
//! parameters.
//!
//! Coefficients are arbitrary-precision rationals. Rational functions are
//! kept in a canonical but *unreduced* form: numerator and denominator are
//! scaled so that the grlex-leading coefficient of the denominator is one,
//! and no polynomial GCD is ever taken. Two representations of the same
//! function may therefore differ structurally; evaluation is what counts.

mod compiled;
mod parse;
mod poly;
mod rational;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use compiled::CompiledPoly;
pub use parse::parse_expr;
pub(crate) use parse::parse_decimal;
pub use poly::{Monomial, Polynomial};
pub use rational::{RationalFunction, SINGULAR_TOLERANCE};

pub type Coeff = num_rational::BigRational;

/// Name of a model parameter, e.g. `p_ma`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(Arc<str>);

impl ParamId {
    pub fn new(name: &str) -> Result<Self, ExprError> {
        if is_identifier(name) {
            Ok(ParamId(Arc::from(name)))
        } else {
            Err(ExprError::InvalidParamName(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Assignment of real values to parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Valuation(BTreeMap<ParamId, f64>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, p: ParamId, value: f64) {
        self.0.insert(p, value);
    }

    pub fn with(mut self, p: &ParamId, value: f64) -> Self {
        self.0.insert(p.clone(), value);
        self
    }

    pub fn get(&self, p: &ParamId) -> Option<f64> {
        self.0.get(p).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ParamId, f64)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(ParamId, f64)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (ParamId, f64)>>(iter: I) -> Self {
        Valuation(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("undeclared parameter `{name}` at position {pos}")]
    UndeclaredParam { name: String, pos: usize },
    #[error("division by zero at position {pos}")]
    DivisionByZero { pos: usize },
    #[error("division by an identically zero rational function")]
    ZeroDivisor,
    #[error("invalid parameter name `{0}`")]
    InvalidParamName(String),
    #[error("valuation is missing parameter `{0}`")]
    MissingParam(ParamId),
    #[error("denominator vanishes at the given valuation")]
    SingularEvaluation,
}

/// Exact conversion of a finite float to a rational.
pub(crate) fn coeff_from_f64(x: f64) -> Coeff {
    Coeff::from_float(x).expect("finite valuation value")
}

pub(crate) fn coeff_to_f64(c: &Coeff) -> f64 {
    use num_traits::ToPrimitive;
    c.to_f64().unwrap_or(f64::NAN)
}
