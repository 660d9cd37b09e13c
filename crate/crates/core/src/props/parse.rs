//! Requirement file parser. One property per line:
//!
//! ```text
//! <id>: P<rel><bound> [ <path> ] [from "<atom>"]
//! <id>: R<rel><bound> [ F <state> ] [from "<atom>"]
//! ```
//!
//! `=?` in place of `<rel><bound>` makes a value query.

use std::collections::HashSet;

use super::{PathFormula, Property, PropsError, Query, Rel, Requirement, StateFormula};
use crate::expr::{is_identifier, parse_decimal, Coeff};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Str(String),
    Word(String),
    Num(String),
    Sym(&'static str),
}

fn tokenize(line: usize, text: &str) -> Result<Vec<Tok>, PropsError> {
    let err = |msg: String| PropsError::Syntax { line, msg };
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '"' {
                j += 1;
            }
            if j == chars.len() {
                return Err(err("unterminated string".into()));
            }
            out.push(Tok::Str(chars[start..j].iter().collect()));
            i = j + 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Word(chars[start..i].iter().collect()));
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            out.push(Tok::Num(chars[start..i].iter().collect()));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (sym, len) = match (c, next) {
            ('<', Some('=')) => ("<=", 2),
            ('>', Some('=')) => (">=", 2),
            ('=', Some('?')) => ("=?", 2),
            ('≤', _) => ("<=", 1),
            ('≥', _) => (">=", 1),
            ('<', _) => ("<", 1),
            ('>', _) => (">", 1),
            ('=', _) => ("=", 1),
            ('!', _) | ('¬', _) => ("!", 1),
            ('&', _) | ('∧', _) => ("&", 1),
            ('|', _) | ('∨', _) => ("|", 1),
            ('(', _) => ("(", 1),
            (')', _) => (")", 1),
            ('[', _) => ("[", 1),
            (']', _) => ("]", 1),
            ('{', _) => ("{", 1),
            ('}', _) => ("}", 1),
            _ => return Err(err(format!("unexpected character `{c}`"))),
        };
        out.push(Tok::Sym(sym));
        i += len;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn err(&self, msg: impl Into<String>) -> PropsError {
        PropsError::Syntax {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), PropsError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn peek_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(x)) if x == w)
    }

    fn or(&mut self) -> Result<StateFormula, PropsError> {
        let mut acc = self.and()?;
        while self.eat_sym("|") {
            acc = StateFormula::or(acc, self.and()?);
        }
        Ok(acc)
    }

    fn and(&mut self) -> Result<StateFormula, PropsError> {
        let mut acc = self.unary()?;
        while self.eat_sym("&") {
            acc = StateFormula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<StateFormula, PropsError> {
        if self.eat_sym("!") {
            return Ok(StateFormula::not(self.unary()?));
        }
        match self.next() {
            Some(Tok::Str(a)) => {
                if !is_identifier(&a) {
                    return Err(self.err(format!("invalid atom \"{a}\"")));
                }
                Ok(StateFormula::Atom(a))
            }
            Some(Tok::Word(w)) if w == "true" => Ok(StateFormula::True),
            Some(Tok::Word(w)) if w == "false" => Ok(StateFormula::False),
            Some(Tok::Word(w)) if w == "P" || w == "R" => Err(PropsError::Nested {
                line: self.line,
                op: w,
            }),
            Some(Tok::Sym("(")) => {
                let f = self.or()?;
                self.expect_sym(")")?;
                Ok(f)
            }
            Some(t) => Err(self.err(format!("unexpected token {t:?} in state formula"))),
            None => Err(self.err("unexpected end of line in state formula")),
        }
    }

    fn step_bound(&mut self) -> Result<Option<u32>, PropsError> {
        if !self.eat_sym("<=") {
            return Ok(None);
        }
        match self.next() {
            Some(Tok::Num(n)) => match n.parse::<u32>() {
                Ok(k) if k >= 1 => Ok(Some(k)),
                _ => Err(self.err(format!("step bound must be a positive integer, got `{n}`"))),
            },
            _ => Err(self.err("expected a step bound after `<=`")),
        }
    }

    fn path(&mut self) -> Result<PathFormula, PropsError> {
        if self.peek_word("X") {
            self.pos += 1;
            return Ok(PathFormula::Next(self.or()?));
        }
        if self.peek_word("F") {
            self.pos += 1;
            let k = self.step_bound()?;
            let target = self.or()?;
            return Ok(match k {
                Some(k) => PathFormula::BoundedUntil(StateFormula::True, target, k),
                None => PathFormula::eventually(target),
            });
        }
        if self.peek_word("G") {
            return Err(PropsError::Unsupported {
                line: self.line,
                op: "G".into(),
            });
        }
        let lhs = self.or()?;
        if !self.peek_word("U") {
            return Err(self.err("expected `U`"));
        }
        self.pos += 1;
        let k = self.step_bound()?;
        let rhs = self.or()?;
        Ok(match k {
            Some(k) => PathFormula::BoundedUntil(lhs, rhs, k),
            None => PathFormula::Until(lhs, rhs),
        })
    }

    fn reward_target(&mut self) -> Result<StateFormula, PropsError> {
        let unsupported = |op: &str, line| PropsError::Unsupported { line, op: op.into() };
        match self.peek() {
            Some(Tok::Word(w)) if w == "F" => {
                self.pos += 1;
                if matches!(self.peek(), Some(Tok::Sym("<="))) {
                    return Err(unsupported("F<=k (bounded reachability reward)", self.line));
                }
                self.or()
            }
            Some(Tok::Word(w)) if w == "I" => Err(unsupported("I=k", self.line)),
            Some(Tok::Word(w)) if w == "C" => Err(unsupported("C<=k", self.line)),
            Some(Tok::Word(w)) if w == "S" => Err(unsupported("S", self.line)),
            Some(t) => Err(unsupported(&format!("{t:?}"), self.line)),
            None => Err(self.err("empty reward formula")),
        }
    }
}

struct Line {
    prop: Property,
    constraint: Option<(Rel, Coeff)>,
    line: usize,
}

fn parse_line(line: usize, text: &str) -> Result<Line, PropsError> {
    let syntax = |msg: &str| PropsError::Syntax {
        line,
        msg: msg.into(),
    };
    let (id, rest) = text
        .split_once(':')
        .ok_or_else(|| syntax("expected `<id>:` at the start of the line"))?;
    let id = id.trim();
    if !is_identifier(id) {
        return Err(syntax("requirement ids must be identifiers"));
    }
    let mut p = Parser {
        toks: tokenize(line, rest)?,
        pos: 0,
        line,
    };
    let is_prob = match p.next() {
        Some(Tok::Word(w)) if w == "P" => true,
        Some(Tok::Word(w)) if w == "R" => false,
        Some(Tok::Word(w)) if w == "S" => {
            return Err(PropsError::Unsupported { line, op: w });
        }
        _ => return Err(syntax("expected `P` or `R`")),
    };
    let constraint = if p.eat_sym("=?") {
        None
    } else {
        let rel = match p.next() {
            Some(Tok::Sym("<")) => Rel::Lt,
            Some(Tok::Sym("<=")) => Rel::Le,
            Some(Tok::Sym(">=")) => Rel::Ge,
            Some(Tok::Sym(">")) => Rel::Gt,
            _ => return Err(syntax("expected one of `<`, `<=`, `>=`, `>` or `=?`")),
        };
        let bound = match p.next() {
            Some(Tok::Num(n)) => parse_decimal(&n).ok_or_else(|| syntax("malformed bound"))?,
            _ => return Err(syntax("expected a numeric bound")),
        };
        if is_prob && bound > Coeff::from_integer(1.into()) {
            return Err(PropsError::BoundOutOfRange {
                line,
                bound: super::decimal_string(&bound),
            });
        }
        Some((rel, bound))
    };
    p.expect_sym("[")?;
    let query = if is_prob {
        Query::Probability(p.path()?)
    } else {
        Query::Reward(p.reward_target()?)
    };
    p.expect_sym("]")?;
    let start_label = if p.peek_word("from") {
        p.pos += 1;
        match p.next() {
            Some(Tok::Str(a)) if is_identifier(&a) => Some(a),
            _ => return Err(syntax("expected a quoted atom after `from`")),
        }
    } else {
        None
    };
    match p.peek() {
        None => {}
        Some(Tok::Sym("{")) => return Err(syntax("use `from \"<atom>\"` to select the start state")),
        Some(_) => return Err(syntax("unexpected trailing input")),
    }
    Ok(Line {
        prop: Property {
            id: id.into(),
            query,
            start_label,
        },
        constraint,
        line,
    })
}

/// Parses a requirement file. Every line must carry a bound.
pub fn parse_requirements(text: &str) -> Result<Vec<Requirement>, PropsError> {
    parse_lines(text)?
        .into_iter()
        .map(|l| match l.constraint {
            Some((rel, bound)) => Ok(Requirement {
                prop: l.prop,
                rel,
                bound,
            }),
            None => Err(PropsError::MissingBound {
                line: l.line,
                id: l.prop.id,
            }),
        })
        .collect()
}

/// Parses a property file for value queries. Both `=?` and bounded lines
/// are accepted; bounds are dropped.
pub fn parse_queries(text: &str) -> Result<Vec<Property>, PropsError> {
    Ok(parse_lines(text)?.into_iter().map(|l| l.prop).collect())
}

fn parse_lines(text: &str) -> Result<Vec<Line>, PropsError> {
    let mut out: Vec<Line> = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let l = parse_line(line, body)?;
        if !seen.insert(l.prop.id.clone()) {
            return Err(PropsError::DuplicateId {
                line,
                id: l.prop.id,
            });
        }
        out.push(l);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::tests::arb_state_formula;
    use super::*;
    use crate::props::Kind;
    use proptest::prelude::*;

    fn one(text: &str) -> Result<Requirement, PropsError> {
        parse_requirements(text).map(|mut v| v.remove(0))
    }

    #[test]
    fn eventually_with_bound() {
        let r = one(r#"R1: P<0.26 [ F "alarmFail" ]"#).unwrap();
        assert_eq!(r.id(), "R1");
        assert_eq!(r.kind(), Kind::Probability);
        assert_eq!(r.rel, Rel::Lt);
        assert_eq!(r.bound, Coeff::new(26.into(), 100.into()));
        assert_eq!(
            r.prop.query,
            Query::Probability(PathFormula::eventually(StateFormula::atom("alarmFail")))
        );
        assert_eq!(r.prop.start_label, None);
    }

    #[test]
    fn until_with_start_label() {
        let r = one(r#"R3: P<0.0003 [ !"done" U "alarmFail" ] from "analysis""#).unwrap();
        assert_eq!(
            r.prop.query,
            Query::Probability(PathFormula::Until(
                StateFormula::not(StateFormula::atom("done")),
                StateFormula::atom("alarmFail")
            ))
        );
        assert_eq!(r.prop.start_label.as_deref(), Some("analysis"));
    }

    #[test]
    fn unsupported_and_nested() {
        assert!(matches!(
            one("Q: R>4 [ S ]"),
            Err(PropsError::Unsupported { op, .. }) if op == "S"
        ));
        assert!(matches!(one("Q: R<4 [ I=3 ]"), Err(PropsError::Unsupported { .. })));
        assert!(matches!(one("Q: R<4 [ C<=3 ]"), Err(PropsError::Unsupported { .. })));
        assert!(matches!(
            one(r#"Q: P<0.5 [ F P>0.2 [ F "a" ] ]"#),
            Err(PropsError::Nested { .. })
        ));
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(one("R1: P<1.5 [ F \"a\" ]"), Err(PropsError::BoundOutOfRange { .. })));
        assert!(one("R1: R>4.5 [ F \"a\" ]").is_ok());
        assert!(matches!(
            parse_requirements("A: P<0.5 [ F \"a\" ]\nA: P<0.5 [ F \"b\" ]"),
            Err(PropsError::DuplicateId { line: 2, .. })
        ));
        assert!(matches!(one("R1: P<0.5 [ F<=0 \"a\" ]"), Err(PropsError::Syntax { .. })));
        assert!(matches!(one("R1: P<0.5 [ \"a\" ]"), Err(PropsError::Syntax { .. })));
        assert!(matches!(one("R1: P<0.5 [ F a ]"), Err(PropsError::Syntax { .. })));
        assert!(matches!(one("R1: P<0.5 [ F \"a\" ] {\"b\"}"), Err(PropsError::Syntax { .. })));
        assert!(matches!(one("R1: P=? [ F \"a\" ]"), Err(PropsError::MissingBound { .. })));
        let qs = parse_queries("# c\nR1: P=? [ F \"a\" ]\n\nR2: R<3 [ F \"b\" ]").unwrap();
        assert_eq!(qs.len(), 2);
    }

    #[test]
    fn bounded_forms() {
        let r = one(r#"B: P>=0.9 [ "a" | "b" U<=7 "c" & !"d" ]"#).unwrap();
        match r.prop.query {
            Query::Probability(PathFormula::BoundedUntil(_, _, 7)) => {}
            other => panic!("{other:?}"),
        }
        let r = one(r#"B: P>0.1 [ X true ]"#).unwrap();
        assert_eq!(r.prop.query, Query::Probability(PathFormula::Next(StateFormula::True)));
    }

    fn arb_requirement() -> impl Strategy<Value = Requirement> {
        let path = prop_oneof![
            arb_state_formula().prop_map(PathFormula::Next),
            arb_state_formula().prop_map(PathFormula::eventually),
            (arb_state_formula(), arb_state_formula()).prop_map(|(a, b)| PathFormula::Until(a, b)),
            (arb_state_formula(), arb_state_formula(), 1u32..50)
                .prop_map(|(a, b, k)| PathFormula::BoundedUntil(a, b, k)),
        ];
        let query = prop_oneof![
            path.prop_map(Query::Probability),
            arb_state_formula().prop_map(Query::Reward),
        ];
        let rel = prop::sample::select(vec![Rel::Lt, Rel::Le, Rel::Ge, Rel::Gt]);
        let label = prop::option::of(prop::sample::select(vec!["a", "init_x"]));
        (query, rel, 0u32..=10000, label).prop_map(|(query, rel, b, label)| Requirement {
            prop: Property {
                id: "Req_1".into(),
                query,
                start_label: label.map(String::from),
            },
            rel,
            bound: Coeff::new(b.into(), 10000.into()),
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(r in arb_requirement()) {
            let text = r.to_string();
            let back = one(&text).unwrap();
            prop_assert_eq!(back, r, "{}", text);
        }
    }
}
