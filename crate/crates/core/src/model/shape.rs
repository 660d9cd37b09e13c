use std::collections::BTreeSet;

use num_traits::One;

use super::{ModelError, ParametricDtmc};
use crate::expr::{Coeff, ParamId, Polynomial};

/// Form of one outgoing edge of a parametric state.
#[derive(Clone, Debug, PartialEq)]
pub enum EdgeShape {
    Constant(f64),
    /// The edge probability is exactly one parameter.
    Bare(ParamId),
    /// `constant - Σ params`, where every parameter is bare on another edge
    /// of the same state.
    Derived { constant: f64, params: Vec<ParamId> },
}

fn as_derived(p: &Polynomial) -> Option<(Coeff, Vec<ParamId>)> {
    let mut constant = Coeff::from_integer(0.into());
    let mut params = Vec::new();
    for (m, c) in p.terms() {
        if m.is_one() {
            constant = c.clone();
        } else if m.degree() == 1 && (-c.clone()).is_one() {
            params.push(m.powers()[0].0.clone());
        } else {
            return None;
        }
    }
    Some((constant, params))
}

pub(super) fn classify_state(
    dtmc: &ParametricDtmc,
    z: usize,
) -> Result<Vec<(usize, EdgeShape)>, ModelError> {
    let unsupported = |t: usize, expr: String| ModelError::UnsupportedEdgeShape {
        state: dtmc.state_name(z).into(),
        target: dtmc.state_name(t).into(),
        expr,
    };
    let mut out = Vec::new();
    let mut bare = BTreeSet::new();
    for (t, f) in dtmc.transitions(z) {
        let shape = if let Some(c) = f.as_constant() {
            EdgeShape::Constant(crate::expr::coeff_to_f64(&c))
        } else if !f.is_polynomial() {
            return Err(unsupported(*t, f.to_string()));
        } else {
            let num = f.num();
            let single = num.num_terms() == 1 && num.degree() == 1;
            match num.leading() {
                Some((m, c)) if single && c.is_one() => {
                    let p = m.powers()[0].0.clone();
                    if !bare.insert(p.clone()) {
                        return Err(unsupported(*t, f.to_string()));
                    }
                    EdgeShape::Bare(p)
                }
                _ => match as_derived(num) {
                    Some((c, params)) => EdgeShape::Derived {
                        constant: crate::expr::coeff_to_f64(&c),
                        params,
                    },
                    None => return Err(unsupported(*t, f.to_string())),
                },
            }
        };
        out.push((*t, shape));
    }
    let mut derived_seen = false;
    for (t, shape) in &out {
        if let EdgeShape::Derived { params, .. } = shape {
            let text = dtmc.probability(z, *t).unwrap().to_string();
            if derived_seen || params.iter().any(|p| !bare.contains(p)) {
                return Err(unsupported(*t, text));
            }
            derived_seen = true;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DtmcBuilder;

    fn state_with(edges: &[&str]) -> Result<Vec<(usize, EdgeShape)>, ModelError> {
        let mut b = DtmcBuilder::new();
        b.param("p").unwrap().param("q").unwrap();
        b.state("z").unwrap();
        b.init("z").unwrap();
        for (i, e) in edges.iter().enumerate() {
            let name = format!("t{i}");
            b.state(&name).unwrap();
            b.trans(&name, &name, "1").unwrap();
            b.trans("z", &name, e).unwrap();
        }
        let dtmc = b.build().unwrap();
        classify_state(&dtmc, 0)
    }

    #[test]
    fn supported_shapes() {
        let s = state_with(&["p", "q", "0.5 - p - q", "0.5"]).unwrap();
        assert!(matches!(&s[0].1, EdgeShape::Bare(p) if p.as_str() == "p"));
        match &s[2].1 {
            EdgeShape::Derived { constant, params } => {
                assert_eq!(*constant, 0.5);
                assert_eq!(params.len(), 2);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(s[3].1, EdgeShape::Constant(0.5));
    }

    #[test]
    fn rejected_shapes() {
        assert!(state_with(&["p*q", "1 - p*q"]).is_err());
        assert!(state_with(&["p/2", "1 - p/2"]).is_err());
        assert!(state_with(&["p", "q", "1 - p - q - 0"]).is_ok());
        assert!(state_with(&["p", "1 - p - q", "q"]).is_ok());
        assert!(state_with(&["1 - q", "q - p", "p"]).is_err());
    }
}
