use super::{coeff_to_f64, ParamId, Polynomial};
use crate::interval::Interval;

/// A polynomial lowered to float coefficients and dense exponent rows over a
/// fixed variable order, for repeated point and interval evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    coeffs: Vec<f64>,
    /// `exps[t * nvars + v]`
    exps: Vec<u32>,
    nvars: usize,
}

impl CompiledPoly {
    /// Panics if `p` mentions a parameter outside `vars`.
    pub fn new(p: &Polynomial, vars: &[ParamId]) -> Self {
        let nvars = vars.len();
        let mut coeffs = Vec::with_capacity(p.num_terms());
        let mut exps = Vec::with_capacity(p.num_terms() * nvars);
        for (m, c) in p.terms() {
            coeffs.push(coeff_to_f64(c));
            let base = exps.len();
            exps.resize(base + nvars, 0);
            for (q, e) in m.powers() {
                let v = vars
                    .iter()
                    .position(|x| x == q)
                    .expect("variable list covers the polynomial");
                exps[base + v] = *e;
            }
        }
        CompiledPoly { coeffs, exps, nvars }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut acc = 0.0;
        for (t, c) in self.coeffs.iter().enumerate() {
            let row = &self.exps[t * self.nvars..(t + 1) * self.nvars];
            let mut term = *c;
            for (xv, e) in x.iter().zip(row) {
                if *e > 0 {
                    term *= xv.powi(*e as i32);
                }
            }
            acc += term;
        }
        acc
    }

    /// Natural interval extension, term by term.
    pub fn eval_interval(&self, x: &[Interval]) -> Interval {
        debug_assert_eq!(x.len(), self.nvars);
        let mut acc = Interval::point(0.0);
        for (t, c) in self.coeffs.iter().enumerate() {
            let row = &self.exps[t * self.nvars..(t + 1) * self.nvars];
            let mut term = Interval::point(*c);
            for (xv, e) in x.iter().zip(row) {
                if *e > 0 {
                    term = term * xv.powi(*e);
                }
            }
            acc = acc + term;
        }
        acc
    }
}
