use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};

use super::{coeff_from_f64, coeff_to_f64, Coeff, ExprError, ParamId, Valuation};

/// Product of parameter powers. Variables are kept sorted by name and
/// exponents are strictly positive, so equal monomials are structurally equal.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(ParamId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(p: ParamId) -> Self {
        Monomial(vec![(p, 1)])
    }

    pub fn from_powers(powers: impl IntoIterator<Item = (ParamId, u32)>) -> Self {
        let mut map: BTreeMap<ParamId, u32> = BTreeMap::new();
        for (p, e) in powers {
            *map.entry(p).or_insert(0) += e;
        }
        Monomial(map.into_iter().filter(|(_, e)| *e > 0).collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, p: &ParamId) -> u32 {
        self.0
            .iter()
            .find(|(q, _)| q == p)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn powers(&self) -> &[(ParamId, u32)] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// `self / other` if `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (p, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 < *p {
                return None;
            }
            if j < other.0.len() && other.0[j].0 == *p {
                let f = other.0[j].1;
                j += 1;
                match e.cmp(&f) {
                    Ordering::Less => return None,
                    Ordering::Equal => {}
                    Ordering::Greater => out.push((p.clone(), e - f)),
                }
            } else {
                out.push((p.clone(), *e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    /// Partial derivative of the monomial: `(exponent, reduced monomial)`.
    fn derive(&self, p: &ParamId) -> Option<(u32, Monomial)> {
        let pos = self.0.iter().position(|(q, _)| q == p)?;
        let e = self.0[pos].1;
        let mut out = self.0.clone();
        if e == 1 {
            out.remove(pos);
        } else {
            out[pos].1 = e - 1;
        }
        Some((e, Monomial(out)))
    }
}

/// Graded lexicographic order; variables earlier in name order are more
/// significant.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((p, e)), Some((q, f))) => match p.cmp(q) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if e != f {
                            return e.cmp(f);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (k, (p, e)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse polynomial with exact rational coefficients. No stored
/// coefficient is zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Coeff>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Polynomial { terms }
    }

    pub fn var(p: ParamId) -> Self {
        Self::term(Coeff::one(), Monomial::var(p))
    }

    pub fn term(c: Coeff, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Polynomial { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .next()
                .is_some_and(|(m, c)| m.is_one() && c.is_one())
    }

    /// `Some(c)` when the polynomial has no variables (zero included).
    pub fn as_constant(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Grlex-leading term.
    pub fn leading(&self) -> Option<(&Monomial, &Coeff)> {
        self.terms.iter().next_back()
    }

    pub fn coefficient(&self, m: &Monomial) -> Coeff {
        self.terms.get(m).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn params(&self) -> BTreeSet<ParamId> {
        self.terms
            .keys()
            .flat_map(|m| m.powers().iter().map(|(p, _)| p.clone()))
            .collect()
    }

    fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &Coeff) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    pub fn derivative(&self, p: &ParamId) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            if let Some((e, reduced)) = m.derive(p) {
                out.add_term(reduced, c * Coeff::from_integer(e.into()));
            }
        }
        out
    }

    /// Exact quotient `self / divisor`, or `None` when the division leaves a
    /// remainder.
    pub fn div_exact(&self, divisor: &Polynomial) -> Option<Polynomial> {
        let (lm, lc) = divisor.leading()?;
        if let Some(c) = divisor.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let mut rem = self.clone();
        let mut quot = Polynomial::zero();
        while let Some((rm, rc)) = rem.leading() {
            let m = rm.div(lm)?;
            let c = rc / lc;
            let t = Polynomial::term(c.clone(), m.clone());
            rem = rem.sub(&divisor.mul(&t));
            quot.add_term(m, c);
        }
        Some(quot)
    }

    /// Exact evaluation at a float valuation; floats are converted exactly.
    pub fn eval_exact(&self, v: &Valuation) -> Result<Coeff, ExprError> {
        let mut cache: BTreeMap<&ParamId, Coeff> = BTreeMap::new();
        let mut acc = Coeff::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (p, e) in m.powers() {
                let x = match cache.get(p) {
                    Some(x) => x.clone(),
                    None => {
                        let x = coeff_from_f64(v.get(p).ok_or_else(|| ExprError::MissingParam(p.clone()))?);
                        cache.insert(p, x.clone());
                        x
                    }
                };
                t *= num_traits::pow(x, *e as usize);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Plain floating-point evaluation.
    pub fn eval_f64(&self, v: &Valuation) -> Result<f64, ExprError> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = coeff_to_f64(c);
            for (p, e) in m.powers() {
                let x = v.get(p).ok_or_else(|| ExprError::MissingParam(p.clone()))?;
                t *= x.powi(*e as i32);
            }
            acc += t;
        }
        Ok(acc)
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Prints in the expression grammar, leading term first.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (k, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if m.is_one() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}*{m}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(name: &str) -> ParamId {
        ParamId::new(name).unwrap()
    }

    fn int(n: i64) -> Coeff {
        Coeff::from_integer(n.into())
    }

    #[test]
    fn grlex_orders_by_degree_then_lex() {
        let a = Monomial::var(p("a"));
        let b = Monomial::var(p("b"));
        let b2 = Monomial::from_powers([(p("b"), 2)]);
        assert!(a > b);
        assert!(b2 > a);
        assert!(Monomial::one() < b);
        let ab = a.mul(&b);
        assert!(b2 < ab);
    }

    #[test]
    fn commutative_sums_are_structurally_equal() {
        let x = Polynomial::var(p("p")).add(&Polynomial::var(p("q")));
        let y = Polynomial::var(p("q")).add(&Polynomial::var(p("p")));
        assert_eq!(x, y);
    }

    #[test]
    fn derivative_of_pq_plus_p_squared() {
        let pp = Polynomial::var(p("p"));
        let qq = Polynomial::var(p("q"));
        let f = pp.mul(&qq).add(&pp.pow(2));
        let d = f.derivative(&p("p"));
        assert_eq!(d, qq.add(&pp.scale(&int(2))));
        assert!(Polynomial::one().sub(&pp).derivative(&p("q")).is_zero());
    }

    #[test]
    fn exact_division() {
        let pp = Polynomial::var(p("p"));
        let qq = Polynomial::var(p("q"));
        let a = pp.add(&qq);
        let b = Polynomial::one().sub(&pp);
        let prod = a.mul(&b);
        assert_eq!(prod.div_exact(&a), Some(b.clone()));
        assert_eq!(prod.div_exact(&b), Some(a));
        assert_eq!(pp.div_exact(&qq), None);
    }

    #[test]
    fn display_uses_grammar() {
        let f = Polynomial::one().sub(&Polynomial::var(p("p")));
        assert_eq!(f.to_string(), "-p + 1");
        let g = Polynomial::term(Coeff::new(3.into(), 4.into()), Monomial::from_powers([(p("x"), 2)]));
        assert_eq!(g.to_string(), "3/4*x^2");
    }
}
