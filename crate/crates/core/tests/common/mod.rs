//! Oracles independent of the library's symbolic machinery: dense numeric
//! linear solves, Monte-Carlo path simulation and grid evaluation.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use aqv::expr::Valuation;
use aqv::model::{parse_model, Model, ParametricDtmc};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models")
}

pub fn load_shipped(name: &str) -> String {
    std::fs::read_to_string(models_dir().join(name)).unwrap()
}

/// Transition matrix rows instantiated at `v`.
pub fn numeric_rows(d: &ParametricDtmc, v: &Valuation) -> Vec<Vec<(usize, f64)>> {
    (0..d.num_states())
        .map(|s| {
            d.transitions(s)
                .iter()
                .map(|(t, f)| (*t, f.eval_f64(v).unwrap()))
                .collect()
        })
        .collect()
}

/// States from which `target` is reachable through `through` along edges
/// with positive probability.
fn backward_reach(rows: &[Vec<(usize, f64)>], through: &[bool], target: &[bool]) -> Vec<bool> {
    let n = rows.len();
    let mut seen = target.to_vec();
    let mut changed = true;
    while changed {
        changed = false;
        for s in 0..n {
            if !seen[s] && through[s] && rows[s].iter().any(|&(t, p)| p > 0.0 && seen[t]) {
                seen[s] = true;
                changed = true;
            }
        }
    }
    seen
}

/// `P(start ⊨ phi1 U phi2)` by a dense linear solve.
pub fn until_probability(
    d: &ParametricDtmc,
    v: &Valuation,
    start: usize,
    phi1: &BTreeSet<usize>,
    phi2: &BTreeSet<usize>,
) -> f64 {
    let rows = numeric_rows(d, v);
    let n = rows.len();
    let m1: Vec<bool> = (0..n).map(|s| phi1.contains(&s)).collect();
    let m2: Vec<bool> = (0..n).map(|s| phi2.contains(&s)).collect();
    let reach = backward_reach(&rows, &m1, &m2);
    let unknown: Vec<usize> = (0..n).filter(|&s| reach[s] && !m2[s]).collect();
    if m2[start] {
        return 1.0;
    }
    if !reach[start] {
        return 0.0;
    }
    let idx = |s: usize| unknown.iter().position(|&u| u == s);
    let k = unknown.len();
    let mut a = DMatrix::<f64>::identity(k, k);
    let mut b = DVector::<f64>::zeros(k);
    for (i, &s) in unknown.iter().enumerate() {
        for &(t, p) in &rows[s] {
            if m2[t] {
                b[i] += p;
            } else if let Some(j) = idx(t) {
                a[(i, j)] -= p;
            }
        }
    }
    let x = a.lu().solve(&b).expect("non-singular");
    x[idx(start).unwrap()]
}

/// Expected accumulated state and transition reward until `target`, by a
/// dense linear solve. Assumes the target is reached almost surely.
pub fn reachability_reward(d: &ParametricDtmc, v: &Valuation, start: usize, target: &BTreeSet<usize>) -> f64 {
    let rows = numeric_rows(d, v);
    let n = rows.len();
    if target.contains(&start) {
        return 0.0;
    }
    let unknown: Vec<usize> = (0..n).filter(|s| !target.contains(s)).collect();
    let idx = |s: usize| unknown.iter().position(|&u| u == s);
    let k = unknown.len();
    let f = |c: &aqv::expr::Coeff| -> f64 {
        use num_traits::ToPrimitive;
        c.to_f64().unwrap()
    };
    let mut a = DMatrix::<f64>::identity(k, k);
    let mut b = DVector::<f64>::zeros(k);
    for (i, &s) in unknown.iter().enumerate() {
        b[i] += f(d.state_reward(s));
        for &(t, p) in &rows[s] {
            if let Some(r) = d.transition_reward(s, t) {
                b[i] += p * f(r);
            }
            if let Some(j) = idx(t) {
                a[(i, j)] -= p;
            }
        }
    }
    let x = a.lu().solve(&b).expect("non-singular");
    x[idx(start).unwrap()]
}

/// Fraction of `paths` simulated runs from `start` that satisfy
/// `phi1 U phi2`. A run stops once it leaves `phi1` or enters `phi2`, or on
/// an absorbing self-loop.
pub fn simulate_until<R: Rng>(
    d: &ParametricDtmc,
    v: &Valuation,
    start: usize,
    phi1: &BTreeSet<usize>,
    phi2: &BTreeSet<usize>,
    paths: u64,
    rng: &mut R,
) -> f64 {
    let rows = numeric_rows(d, v);
    let n = rows.len();
    let m1: Vec<bool> = (0..n).map(|s| phi1.contains(&s)).collect();
    let m2: Vec<bool> = (0..n).map(|s| phi2.contains(&s)).collect();
    let absorbing: Vec<bool> = rows.iter().enumerate().map(|(s, r)| r.len() == 1 && r[0].0 == s).collect();
    let mut hits = 0u64;
    for _ in 0..paths {
        let mut s = start;
        loop {
            if m2[s] {
                hits += 1;
                break;
            }
            if !m1[s] || absorbing[s] {
                break;
            }
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut next = rows[s].last().unwrap().0;
            for &(t, p) in &rows[s] {
                acc += p;
                if u < acc {
                    next = t;
                    break;
                }
            }
            s = next;
        }
    }
    hits as f64 / paths as f64
}

/// A random parametric chain in the model file format.
///
/// States `s0..s{n-1}`; `s{n-2}` ("trap") and `s{n-1}` ("goal") are
/// absorbing, and every other state has an edge to a higher-numbered state,
/// so one of the two is reached almost surely. Parameters are meant to be
/// valued in `[0.05, 0.45]`, which keeps every shape a valid distribution.
pub fn random_model_text<R: Rng>(rng: &mut R, max_states: usize, max_params: usize) -> String {
    let n = rng.gen_range(4..=max_states);
    let k = rng.gen_range(1..=max_params);
    let params: Vec<String> = (0..k).map(|i| format!("p{i}")).collect();
    let mut out = String::from("dtmc\n");
    let mut parametric = Vec::new();
    for p in &params {
        out += &format!("param {p};\n");
    }
    for s in 0..n {
        out += &format!("state s{s}{};\n", if s == 0 { " init" } else { "" });
    }
    out += &format!("label s{} \"trap\";\nlabel s{} \"goal\";\n", n - 2, n - 1);
    for s in 0..n - 2 {
        if rng.gen_bool(0.3) {
            out += &format!("label s{s} \"mid\";\n");
        }
        let forward = rng.gen_range(s + 1..n);
        let other = loop {
            let t = rng.gen_range(0..n);
            if t != forward {
                break t;
            }
        };
        let third = loop {
            let t = rng.gen_range(0..n);
            if t != forward && t != other {
                break t;
            }
        };
        let p = &params[rng.gen_range(0..k)];
        let q = &params[rng.gen_range(0..k)];
        let shape = rng.gen_range(0..4);
        if shape == 1 || (shape == 2 && p != q) {
            parametric.push(format!("s{s}"));
        }
        match shape {
            0 => out += &format!("trans s{s} -> s{forward} : 1;\n"),
            1 => {
                out += &format!("trans s{s} -> s{forward} : 1 - {p};\n");
                out += &format!("trans s{s} -> s{other} : {p};\n");
            }
            2 if p != q => {
                out += &format!("trans s{s} -> s{forward} : 1 - {p} - {q};\n");
                out += &format!("trans s{s} -> s{other} : {p};\n");
                out += &format!("trans s{s} -> s{third} : {q};\n");
            }
            _ => {
                out += &format!("trans s{s} -> s{forward} : 0.5;\n");
                out += &format!("trans s{s} -> s{other} : 0.25;\n");
                out += &format!("trans s{s} -> s{third} : 0.25;\n");
            }
        }
        if rng.gen_bool(0.5) {
            out += &format!("reward s{s} : {};\n", rng.gen_range(1..=3));
        }
    }
    out += &format!("trans s{0} -> s{0} : 1;\ntrans s{1} -> s{1} : 1;\n", n - 2, n - 1);
    if !parametric.is_empty() {
        out += &format!("component all cost 1 states {{ {} }};\n", parametric.join(", "));
    }
    out
}

pub fn random_model<R: Rng>(rng: &mut R, max_states: usize, max_params: usize) -> Model {
    let text = random_model_text(rng, max_states, max_params);
    parse_model(&text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

/// Minimum and maximum of `f` over a grid with `points` per dimension.
pub fn grid_range(f: impl Fn(&[f64]) -> Option<f64>, region: &[(f64, f64)], points: usize) -> (f64, f64) {
    let d = region.len();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    loop {
        for i in 0..d {
            let (a, b) = region[i];
            x[i] = a + (b - a) * idx[i] as f64 / (points - 1) as f64;
        }
        if let Some(y) = f(&x) {
            lo = lo.min(y);
            hi = hi.max(y);
        }
        let mut i = 0;
        loop {
            if i == d {
                return (lo, hi);
            }
            idx[i] += 1;
            if idx[i] < points {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Prints one acceptance line.
pub fn report(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion:>2} {:<4} {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}
