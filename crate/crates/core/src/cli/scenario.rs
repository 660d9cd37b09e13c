//! Scenario lists for strategy comparisons, random scenario synthesis, and
//! the paired-cost summary.
//!
//! ```text
//! # scenario <name> <model> <props> <truth> [seed]
//! scenario tas-example tas.model tas.props tas.truth 1
//! # synthesize <count> <model> <props> [seed=<n>] [bounds=uniform|margin|narrow]
//! synthesize 20 tas.model tas.props seed=42 bounds=margin
//! ```

use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::expr::{Coeff, Valuation};
use crate::harness::GroundTruth;
use crate::model::Model;
use crate::pmc::{build_property_expressions, PropertyExpression};
use crate::props::{Kind, Requirement};

use super::{load_model, load_requirements, load_valuation, CliError};

/// Attempts at drawing a valuation under which every distribution is valid.
const TRUTH_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundMode {
    /// Probability bounds uniform on [0,1]; reward bounds uniform on
    /// [0, 2·value].
    Uniform,
    /// Bounds at a relative distance from the true value: narrow (5–15%)
    /// or wide (30–60%), above or below with equal odds.
    Margin,
    /// Every requirement satisfied by a narrow margin: bounds 2–10% beyond
    /// the true value on the satisfied side.
    Narrow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Entry {
    Fixed {
        name: String,
        model: PathBuf,
        props: PathBuf,
        truth: PathBuf,
        seed: u64,
    },
    Synthesize {
        line: usize,
        count: usize,
        model: PathBuf,
        props: PathBuf,
        seed: u64,
        bounds: BoundMode,
    },
}

/// A runnable scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub model: Model,
    pub requirements: Vec<Requirement>,
    pub truth: GroundTruth,
    pub seed: u64,
}

pub fn parse_scenario_list(text: &str, base: &Path) -> Result<Vec<Entry>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        let bad = |msg: &str| CliError::Scenario(format!("line {line}: {msg}"));
        match fields.as_slice() {
            [] => {}
            ["scenario", name, model, props, truth, rest @ ..] if rest.len() <= 1 => {
                let seed = match rest {
                    [s] => s.parse().map_err(|_| bad("seed must be a non-negative integer"))?,
                    _ => 0,
                };
                out.push(Entry::Fixed {
                    name: name.to_string(),
                    model: base.join(model),
                    props: base.join(props),
                    truth: base.join(truth),
                    seed,
                });
            }
            ["synthesize", count, model, props, opts @ ..] => {
                let count = count.parse().map_err(|_| bad("count must be a non-negative integer"))?;
                let mut seed = 0;
                let mut bounds = BoundMode::Uniform;
                for opt in opts {
                    match opt.split_once('=') {
                        Some(("seed", v)) => seed = v.parse().map_err(|_| bad("bad seed"))?,
                        Some(("bounds", "uniform")) => bounds = BoundMode::Uniform,
                        Some(("bounds", "margin")) => bounds = BoundMode::Margin,
                        Some(("bounds", "narrow")) => bounds = BoundMode::Narrow,
                        _ => return Err(bad(&format!("unknown option `{opt}`"))),
                    }
                }
                out.push(Entry::Synthesize {
                    line,
                    count,
                    model: base.join(model),
                    props: base.join(props),
                    seed,
                    bounds,
                });
            }
            _ => return Err(bad("expected `scenario <name> <model> <props> <truth> [seed]` or `synthesize <count> <model> <props> [options]`")),
        }
    }
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Loads or synthesizes the scenarios of one entry. A failure to load the
/// entry's files fails every scenario it would have produced.
pub fn expand(entry: &Entry, max_k: u32) -> Vec<(String, Result<Scenario, CliError>)> {
    match entry {
        Entry::Fixed {
            name,
            model,
            props,
            truth,
            seed,
        } => {
            let load = || -> Result<Scenario, CliError> {
                let model = load_model(model)?;
                let requirements = load_requirements(props)?;
                let truth = GroundTruth::new(&model, load_valuation(truth)?)?;
                Ok(Scenario {
                    name: name.clone(),
                    model,
                    requirements,
                    truth,
                    seed: *seed,
                })
            };
            vec![(name.clone(), load())]
        }
        Entry::Synthesize {
            line,
            count,
            model,
            props,
            seed,
            bounds,
        } => {
            let names: Vec<String> = (1..=*count).map(|k| format!("{}-l{line}-{k:02}", stem(props))).collect();
            let loaded = (|| -> Result<_, CliError> {
                let m = load_model(model)?;
                let reqs = load_requirements(props)?;
                let exprs = build_property_expressions(m.dtmc(), reqs.iter().map(|r| &r.prop), max_k)?;
                Ok((m, reqs, exprs))
            })();
            let (m, reqs, exprs) = match loaded {
                Ok(x) => x,
                Err(e) => {
                    let msg = e.to_string();
                    return names.into_iter().map(|n| (n, Err(CliError::Scenario(msg.clone())))).collect();
                }
            };
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            names
                .into_iter()
                .enumerate()
                .map(|(k, name)| {
                    let s = synthesize(&m, &reqs, &exprs, *bounds, &mut rng).map(|(truth, requirements)| Scenario {
                        name: name.clone(),
                        model: m.clone(),
                        requirements,
                        truth,
                        seed: seed.wrapping_add(k as u64 + 1),
                    });
                    (name, s)
                })
                .collect()
        }
    }
}

/// A bound rounded to twelve decimal places, so it prints compactly.
fn bound_coeff(x: f64) -> Coeff {
    let scale: i64 = 1_000_000_000_000;
    Coeff::new(BigInt::from((x * scale as f64).round() as i64), BigInt::from(scale))
}

/// Draws a valid truth valuation and fresh bounds for the requirements.
pub fn synthesize<R: Rng>(
    model: &Model,
    template: &[Requirement],
    exprs: &[PropertyExpression],
    mode: BoundMode,
    rng: &mut R,
) -> Result<(GroundTruth, Vec<Requirement>), CliError> {
    for _ in 0..TRUTH_ATTEMPTS {
        let v: Valuation = model
            .dtmc()
            .params()
            .iter()
            .map(|p| (p.clone(), rng.gen::<f64>()))
            .collect();
        let Ok(truth) = GroundTruth::new(model, v) else {
            continue;
        };
        let Ok(values) = exprs
            .iter()
            .map(|e| e.expr.eval(truth.values()))
            .collect::<Result<Vec<f64>, _>>()
        else {
            continue;
        };
        let reqs = template
            .iter()
            .zip(values)
            .map(|(r, value)| {
                let b = match mode {
                    BoundMode::Uniform => match r.kind() {
                        Kind::Probability => rng.gen::<f64>(),
                        Kind::Reward => rng.gen::<f64>() * 2.0 * value,
                    },
                    BoundMode::Margin | BoundMode::Narrow => {
                        let m = if mode == BoundMode::Narrow {
                            rng.gen_range(0.02..0.10)
                        } else if rng.gen_bool(0.5) {
                            rng.gen_range(0.05..0.15)
                        } else {
                            rng.gen_range(0.3..0.6)
                        };
                        let s = match mode {
                            BoundMode::Narrow if r.rel.is_upper() => 1.0,
                            BoundMode::Narrow => -1.0,
                            _ if rng.gen_bool(0.5) => 1.0,
                            _ => -1.0,
                        };
                        let b = value * (1.0 + s * m);
                        match r.kind() {
                            Kind::Probability => b.clamp(0.0, 1.0),
                            Kind::Reward => b.max(0.0),
                        }
                    }
                };
                Requirement {
                    bound: bound_coeff(b),
                    ..r.clone()
                }
            })
            .collect();
        return Ok((truth, reqs));
    }
    Err(CliError::Scenario(format!(
        "no valid valuation found in {TRUTH_ATTEMPTS} random draws"
    )))
}

/// Median of a non-empty sample.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Share of pairs in which the first cost is lower, ties counting half.
pub fn probability_of_superiority(pairs: &[(f64, f64)]) -> f64 {
    let score: f64 = pairs
        .iter()
        .map(|(a, b)| match a.total_cmp(b) {
            std::cmp::Ordering::Less => 1.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Greater => 0.0,
        })
        .sum();
    score / pairs.len() as f64
}
