//! The textual model format.
//!
//! ```text
//! dtmc
//! param <name>;
//! state <name> [init];
//! label <state> "<atom>";
//! trans <state> -> <state> : <expr>;
//! reward <state> : <number>;
//! reward <state> -> <state> : <number>;
//! component <name> cost <number> states { <state>[, <state>]* };
//! observe <state> -> <state> : <count>;
//! ```

use std::fmt::Write as _;

use num_traits::Zero;

use super::{Component, DtmcBuilder, Model, ModelError, ObservationFunction};
use crate::expr::{coeff_to_f64, parse_expr, Coeff};

struct Stmt<'a> {
    line: usize,
    keyword: &'a str,
    rest: &'a str,
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn syntax(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn at(line: usize) -> impl Fn(ModelError) -> ModelError {
    move |e| match e {
        ModelError::Expr { line: 0, source } => ModelError::Expr { line, source },
        ModelError::Syntax { line: 0, msg } => ModelError::Syntax { line, msg },
        ModelError::UnknownState(name) => syntax(line, format!("unknown state `{name}`")),
        other => other,
    }
}

/// Splits `a -> b` into trimmed halves.
fn arrow(line: usize, text: &str) -> Result<(&str, &str), ModelError> {
    let (a, b) = text
        .split_once("->")
        .ok_or_else(|| syntax(line, "expected `->`"))?;
    Ok((a.trim(), b.trim()))
}

fn colon(line: usize, text: &str) -> Result<(&str, &str), ModelError> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| syntax(line, "expected `:`"))?;
    Ok((a.trim(), b.trim()))
}

fn constant(line: usize, text: &str) -> Result<Coeff, ModelError> {
    let f = parse_expr(text, &[]).map_err(|source| ModelError::Expr { line, source })?;
    f.as_constant()
        .ok_or_else(|| ModelError::NonConstantNumber(text.into()))
}

fn ident(line: usize, text: &str, what: &str) -> Result<(), ModelError> {
    if crate::expr::is_identifier(text) {
        Ok(())
    } else {
        Err(syntax(line, format!("invalid {what} name `{text}`")))
    }
}

/// Parses and validates a model file.
pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    let mut stmts = Vec::new();
    let mut header_seen = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        if !header_seen {
            if body != "dtmc" {
                return Err(syntax(line, "model must start with `dtmc`"));
            }
            header_seen = true;
            continue;
        }
        let body = body
            .strip_suffix(';')
            .ok_or_else(|| syntax(line, "statement must end with `;`"))?
            .trim();
        let (keyword, rest) = match body.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (body, ""),
        };
        stmts.push(Stmt {
            line,
            keyword,
            rest,
        });
    }
    if !header_seen {
        return Err(syntax(1, "model must start with `dtmc`"));
    }

    let mut b = DtmcBuilder::new();
    for st in &stmts {
        let line = st.line;
        match st.keyword {
            "param" => {
                ident(line, st.rest, "parameter")?;
                b.param(st.rest).map_err(at(line))?;
            }
            "state" => {
                let mut words = st.rest.split_whitespace();
                let name = words.next().ok_or_else(|| syntax(line, "missing state name"))?;
                ident(line, name, "state")?;
                b.state(name).map_err(at(line))?;
                match (words.next(), words.next()) {
                    (None, _) => {}
                    (Some("init"), None) => {
                        b.init(name).map_err(at(line))?;
                    }
                    _ => return Err(syntax(line, "expected `state <name> [init]`")),
                }
            }
            "label" | "trans" | "reward" | "component" | "observe" => {}
            other => return Err(syntax(line, format!("unknown statement `{other}`"))),
        }
    }

    let mut components = Vec::new();
    let mut observations: Vec<(usize, &str, &str, u64)> = Vec::new();
    for st in &stmts {
        let line = st.line;
        match st.keyword {
            "label" => {
                let (state, atom) = st
                    .rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| syntax(line, "expected `label <state> \"<atom>\"`"))?;
                let atom = atom
                    .trim()
                    .strip_prefix('"')
                    .and_then(|a| a.strip_suffix('"'))
                    .ok_or_else(|| syntax(line, "label atoms must be quoted"))?;
                ident(line, atom, "label")?;
                b.label(state.trim(), atom).map_err(at(line))?;
            }
            "trans" => {
                let (edge, expr) = colon(line, st.rest)?;
                let (from, to) = arrow(line, edge)?;
                let f = parse_expr(expr, b.params())
                    .map_err(|source| ModelError::Expr { line, source })?;
                b.trans_expr(from, to, f).map_err(at(line))?;
            }
            "reward" => {
                let (lhs, value) = colon(line, st.rest)?;
                let r = constant(line, value)?;
                if lhs.contains("->") {
                    let (from, to) = arrow(line, lhs)?;
                    b.transition_reward(from, to, r).map_err(at(line))?;
                } else {
                    b.state_reward(lhs, r).map_err(at(line))?;
                }
            }
            "component" => components.push(parse_component(line, st.rest, &b)?),
            "observe" => {
                let (edge, count) = colon(line, st.rest)?;
                let (from, to) = arrow(line, edge)?;
                let n: u64 = count
                    .parse()
                    .map_err(|_| syntax(line, format!("invalid count `{count}`")))?;
                observations.push((line, from, to, n));
            }
            _ => {}
        }
    }

    let dtmc = b.build()?;
    let mut obs = ObservationFunction::new();
    for (line, from, to, n) in observations {
        let z = dtmc
            .state_index(from)
            .ok_or_else(|| syntax(line, format!("unknown state `{from}`")))?;
        let s = dtmc
            .state_index(to)
            .ok_or_else(|| syntax(line, format!("unknown state `{to}`")))?;
        if n > 0 && !dtmc.is_parametric(z) {
            return Err(ModelError::DanglingObservation {
                from: from.into(),
                to: to.into(),
            });
        }
        obs.add(z, s, n);
    }
    Model::new(dtmc, components, obs)
}

fn parse_component(line: usize, rest: &str, b: &DtmcBuilder) -> Result<Component, ModelError> {
    let usage = || syntax(line, "expected `component <name> cost <number> states { <state>, ... }`");
    let (head, states) = rest.split_once('{').ok_or_else(usage)?;
    let states = states.trim().strip_suffix('}').ok_or_else(usage)?;
    let words: Vec<&str> = head.split_whitespace().collect();
    if words.len() != 4 || words[1] != "cost" || words[3] != "states" {
        return Err(usage());
    }
    ident(line, words[0], "component")?;
    let cost = constant(line, words[2])?;
    let mut ids = Vec::new();
    for s in states.split(',') {
        let s = s.trim();
        if s.is_empty() {
            continue;
        }
        let idx = b.state_index(s).map_err(at(line))?;
        if ids.contains(&idx) {
            return Err(syntax(line, format!("state `{s}` listed twice")));
        }
        ids.push(idx);
    }
    Ok(Component {
        name: words[0].into(),
        cost: coeff_to_f64(&cost),
        states: ids,
    })
}

/// Renders a model in the file format; [`parse_model`] reads it back.
pub fn print_model(model: &Model) -> String {
    let d = model.dtmc();
    let name = |s: usize| d.state_name(s);
    let mut out = String::from("dtmc\n");
    for p in d.params() {
        let _ = writeln!(out, "param {p};");
    }
    for s in 0..d.num_states() {
        let init = if s == d.init() { " init" } else { "" };
        let _ = writeln!(out, "state {}{init};", name(s));
    }
    for s in 0..d.num_states() {
        for atom in d.labels(s) {
            let _ = writeln!(out, "label {} \"{atom}\";", name(s));
        }
    }
    for s in 0..d.num_states() {
        for (t, f) in d.transitions(s) {
            let _ = writeln!(out, "trans {} -> {} : {f};", name(s), name(*t));
        }
    }
    for s in 0..d.num_states() {
        let r = d.state_reward(s);
        if !r.is_zero() {
            let _ = writeln!(out, "reward {} : {r};", name(s));
        }
    }
    for ((s, t), r) in d.transition_rewards() {
        let _ = writeln!(out, "reward {} -> {} : {r};", name(s), name(t));
    }
    for c in model.components() {
        let states: Vec<&str> = c.states.iter().map(|&s| name(s)).collect();
        let _ = writeln!(
            out,
            "component {} cost {} states {{ {} }};",
            c.name,
            c.cost,
            states.join(", ")
        );
    }
    for ((z, s), n) in model.initial_obs().iter() {
        let _ = writeln!(out, "observe {} -> {} : {n};", name(z), name(s));
    }
    out
}
