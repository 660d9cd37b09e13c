use std::collections::BTreeSet;
use std::fmt;

use num_traits::One;

use super::{coeff_to_f64, Coeff, ExprError, ParamId, Polynomial, Valuation};

/// Denominators whose magnitude at a valuation is at most this are treated
/// as poles.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// `num / den` with the grlex-leading coefficient of `den` equal to one.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, ExprError> {
        if den.is_zero() {
            return Err(ExprError::ZeroDivisor);
        }
        Ok(Self::canonical(num, den))
    }

    fn canonical(num: Polynomial, den: Polynomial) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        if num == den {
            return Self::one();
        }
        let lc = den.leading().map(|(_, c)| c.clone()).unwrap();
        if lc.is_one() {
            return RationalFunction { num, den };
        }
        let inv = lc.recip();
        RationalFunction {
            num: num.scale(&inv),
            den: den.scale(&inv),
        }
    }

    pub fn zero() -> Self {
        RationalFunction {
            num: Polynomial::zero(),
            den: Polynomial::one(),
        }
    }

    pub fn one() -> Self {
        Self::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        Self::from_poly(Polynomial::constant(c))
    }

    pub fn from_poly(p: Polynomial) -> Self {
        RationalFunction {
            num: p,
            den: Polynomial::one(),
        }
    }

    pub fn var(p: ParamId) -> Self {
        Self::from_poly(Polynomial::var(p))
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<Coeff> {
        let n = self.num.as_constant()?;
        let d = self.den.as_constant()?;
        Some(n / d)
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn params(&self) -> BTreeSet<ParamId> {
        let mut s = self.num.params();
        s.extend(self.den.params());
        s
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return Self::canonical(self.num.add(&other.num), self.den.clone());
        }
        Self::canonical(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        RationalFunction {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        Self::canonical(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn div(&self, other: &Self) -> Result<Self, ExprError> {
        if other.is_zero() {
            return Err(ExprError::ZeroDivisor);
        }
        Ok(Self::canonical(
            self.num.mul(&other.den),
            self.den.mul(&other.num),
        ))
    }

    pub fn pow(&self, e: u32) -> Self {
        Self::canonical(self.num.pow(e), self.den.pow(e))
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        Self::canonical(self.num.scale(c), self.den.clone())
    }

    /// Exact quotient-rule derivative; the result is not reduced.
    pub fn partial_derivative(&self, p: &ParamId) -> Self {
        let dn = self.num.derivative(p);
        if self.den.is_constant() {
            return Self::canonical(dn, self.den.clone());
        }
        let dd = self.den.derivative(p);
        if dd.is_zero() {
            return Self::canonical(dn, self.den.clone());
        }
        let top = dn.mul(&self.den).sub(&self.num.mul(&dd));
        Self::canonical(top, self.den.pow(2))
    }

    /// `num(v)/den(v)`, evaluated exactly and rounded once at the end.
    pub fn eval(&self, v: &Valuation) -> Result<f64, ExprError> {
        let n = self.num.eval_exact(v)?;
        if self.den.is_one() {
            return Ok(coeff_to_f64(&n));
        }
        let d = self.den.eval_exact(v)?;
        if coeff_to_f64(&d).abs() <= SINGULAR_TOLERANCE {
            return Err(ExprError::SingularEvaluation);
        }
        Ok(coeff_to_f64(&(n / d)))
    }

    /// Floating-point evaluation; faster than [`eval`](Self::eval) but
    /// exposed to cancellation in large unreduced expressions.
    pub fn eval_f64(&self, v: &Valuation) -> Result<f64, ExprError> {
        let n = self.num.eval_f64(v)?;
        let d = self.den.eval_f64(v)?;
        if d.abs() <= SINGULAR_TOLERANCE {
            return Err(ExprError::SingularEvaluation);
        }
        Ok(n / d)
    }
}

impl From<Polynomial> for RationalFunction {
    fn from(p: Polynomial) -> Self {
        Self::from_poly(p)
    }
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}
