//! `key = value` files: run configuration and parameter valuations.

use std::path::{Path, PathBuf};

use crate::confidence::BnbConfig;
use crate::engine::EngineConfig;
use crate::expr::{ParamId, Valuation};
use crate::heuristic::HeuristicConfig;
use crate::pmc::DEFAULT_MAX_BOUNDED_K;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for `{key}`")]
    BadValue { line: usize, key: String, value: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
}

/// Non-empty, comment-stripped `key = value` lines with their numbers.
pub fn key_values(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        if out.iter().any(|(_, seen, _)| seen == k) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: k.to_string(),
            });
        }
        out.push((line, k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// A parameter valuation, one `param = value` per line.
pub fn parse_valuation(text: &str) -> Result<Valuation, ConfigError> {
    let mut v = Valuation::new();
    for (line, key, value) in key_values(text)? {
        let bad = || ConfigError::BadValue {
            line,
            key: key.clone(),
            value: value.clone(),
        };
        let p = ParamId::new(&key).map_err(|_| ConfigError::UnknownKey {
            line,
            key: key.clone(),
        })?;
        let x: f64 = value.parse().map_err(|_| bad())?;
        if !x.is_finite() {
            return Err(bad());
        }
        v.set(p, x);
    }
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TesterKind {
    Simulated,
    Script,
    Interactive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub alpha: f64,
    pub budget: f64,
    pub round_budget: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub seed: u64,
    pub tester: TesterKind,
    pub script_path: Option<PathBuf>,
    pub truth_file: Option<PathBuf>,
    pub max_bounded_k: u32,
    pub max_boxes: usize,
    pub output_dir: PathBuf,
}

impl Config {
    /// Parses a configuration; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut alpha = 0.95;
        let mut budget = None;
        let mut round_budget = None;
        let mut heuristic = HeuristicConfig::default();
        let mut seed = 0;
        let mut tester = TesterKind::Simulated;
        let mut script_path = None;
        let mut truth_file = None;
        let mut max_bounded_k = DEFAULT_MAX_BOUNDED_K;
        let mut max_boxes = BnbConfig::default().max_boxes;
        let mut output_dir = base.join("out");
        for (line, key, value) in key_values(text)? {
            let bad = || ConfigError::BadValue {
                line,
                key: key.clone(),
                value: value.clone(),
            };
            let real = || value.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad);
            match key.as_str() {
                "alpha" => alpha = real()?,
                "budget" => budget = Some(real()?),
                "round_budget" | "rbudget" => round_budget = Some(real()?),
                "epsilon1" => heuristic.epsilon1 = real()?,
                "epsilon2" => heuristic.epsilon2 = real()?,
                "seed" => seed = value.parse().map_err(|_| bad())?,
                "tester" => {
                    tester = match value.as_str() {
                        "simulated" => TesterKind::Simulated,
                        "script" => TesterKind::Script,
                        "interactive" => TesterKind::Interactive,
                        _ => return Err(bad()),
                    }
                }
                "script_path" => script_path = Some(base.join(&value)),
                "truth_file" => truth_file = Some(base.join(&value)),
                "max_bounded_k" => max_bounded_k = value.parse().map_err(|_| bad())?,
                "max_boxes" => max_boxes = value.parse().ok().filter(|&n| n > 0).ok_or_else(bad)?,
                "output_dir" => output_dir = base.join(&value),
                _ => return Err(ConfigError::UnknownKey { line, key }),
            }
        }
        Ok(Config {
            alpha,
            budget: budget.ok_or(ConfigError::Missing("budget"))?,
            round_budget: round_budget.ok_or(ConfigError::Missing("round_budget"))?,
            epsilon1: heuristic.epsilon1,
            epsilon2: heuristic.epsilon2,
            seed,
            tester,
            script_path,
            truth_file,
            max_bounded_k,
            max_boxes,
            output_dir,
        })
    }

    pub fn engine(&self) -> EngineConfig {
        EngineConfig {
            alpha: self.alpha,
            budget: self.budget,
            round_budget: self.round_budget,
            heuristic: HeuristicConfig {
                epsilon1: self.epsilon1,
                epsilon2: self.epsilon2,
            },
            bnb: BnbConfig {
                max_boxes: self.max_boxes,
                ..BnbConfig::default()
            },
            max_bounded_k: self.max_bounded_k,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_defaults() {
        let c = Config::parse("# TAS\nbudget = 150000\nround_budget = 5000  # per round\nseed = 3\n", Path::new("/x")).unwrap();
        assert_eq!(c.alpha, 0.95);
        assert_eq!((c.budget, c.round_budget, c.seed), (150000.0, 5000.0, 3));
        assert_eq!((c.epsilon1, c.epsilon2), (0.15, 1e-6));
        assert_eq!((c.max_bounded_k, c.max_boxes), (100, 4096));
        assert_eq!(c.output_dir, PathBuf::from("/x/out"));
        assert_eq!(c.tester, TesterKind::Simulated);
    }

    #[test]
    fn rejects_bad_input() {
        let base = Path::new(".");
        assert_eq!(Config::parse("round_budget = 5", base), Err(ConfigError::Missing("budget")));
        assert!(matches!(Config::parse("budget = 5\nbudget = 6", base), Err(ConfigError::DuplicateKey { line: 2, .. })));
        assert!(matches!(Config::parse("budgit = 5", base), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(Config::parse("budget = lots", base), Err(ConfigError::BadValue { .. })));
        assert!(matches!(Config::parse("budget 5", base), Err(ConfigError::Syntax { line: 1 })));
        assert!(matches!(Config::parse("budget = 1\nround_budget = 1\ntester = robot", base), Err(ConfigError::BadValue { .. })));
    }

    #[test]
    fn valuation_file() {
        let v = parse_valuation("p_al = 0.94\np_ma = 0.99 # medical\n").unwrap();
        assert_eq!(v.get(&ParamId::new("p_ma").unwrap()), Some(0.99));
        assert_eq!(v.len(), 2);
        assert!(parse_valuation("1p = 0.3").is_err());
        assert!(parse_valuation("p = nan").is_err());
    }
}
