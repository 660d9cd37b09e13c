//! The verification loop: compute intervals, decide what can be decided,
//! spend one round of testing budget, merge the new observations, repeat.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::confidence::{build_param_box, property_interval, BnbConfig, CiError, CompiledExpression};
use crate::expr::RationalFunction;
use crate::harness::{TestError, Tester};
use crate::heuristic::{allocate, uniform_split, HeuristicConfig, RequirementView};
use crate::interval::Interval;
use crate::model::Model;
use crate::pmc::{build_property_expressions, PmcError, DEFAULT_MAX_BOUNDED_K};
use crate::props::{Rel, Requirement};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineConfig {
    pub alpha: f64,
    pub budget: f64,
    pub round_budget: f64,
    pub heuristic: HeuristicConfig,
    pub bnb: BnbConfig,
    pub max_bounded_k: u32,
}

impl EngineConfig {
    pub fn new(budget: f64, round_budget: f64) -> Self {
        EngineConfig {
            alpha: 0.95,
            budget,
            round_budget,
            heuristic: HeuristicConfig::default(),
            bnb: BnbConfig::default(),
            max_bounded_k: DEFAULT_MAX_BOUNDED_K,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::Config(msg));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0,1), got {}", self.alpha));
        }
        if !(self.budget >= 0.0 && self.budget.is_finite()) {
            return bad(format!("budget must be a non-negative number, got {}", self.budget));
        }
        if !(self.round_budget > 0.0 && self.round_budget.is_finite()) {
            return bad(format!("round_budget must be positive, got {}", self.round_budget));
        }
        if self.round_budget > self.budget {
            return bad(format!(
                "round_budget {} exceeds budget {}",
                self.round_budget, self.budget
            ));
        }
        for (name, e) in [("epsilon1", self.heuristic.epsilon1), ("epsilon2", self.heuristic.epsilon2)] {
            if !(e > 0.0 && e < 1.0) {
                return bad(format!("{name} must lie in (0,1), got {e}"));
            }
        }
        Ok(())
    }

    /// Upper limit on the number of testing rounds.
    pub fn max_rounds(&self) -> u32 {
        (self.budget / self.round_budget).ceil() as u32
    }
}

/// How each round's budget is split across components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Relevance-weighted split.
    Adaptive,
    /// Equal share of the round budget per component.
    Uniform,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Adaptive => "adaptive",
            Strategy::Uniform => "uniform",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adaptive" | "veracity" => Ok(Strategy::Adaptive),
            "uniform" => Ok(Strategy::Uniform),
            _ => Err(format!("unknown strategy `{s}` (expected adaptive or uniform)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Pmc(#[from] PmcError),
    #[error(transparent)]
    Ci(#[from] CiError),
    #[error("testing component `{component}` failed: {source}")]
    Tester {
        component: String,
        #[source]
        source: TestError,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    AllSatisfied {
        round: u32,
        total_cost: f64,
    },
    Violated {
        requirement: String,
        round: u32,
        total_cost: f64,
    },
    BudgetExhausted {
        round: u32,
        total_cost: f64,
        undecided: Vec<String>,
    },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::AllSatisfied { .. } => "AllSatisfied",
            Verdict::Violated { .. } => "Violated",
            Verdict::BudgetExhausted { .. } => "BudgetExhausted",
        }
    }

    /// Round in which the verdict was reached.
    pub fn round(&self) -> u32 {
        match self {
            Verdict::AllSatisfied { round, .. }
            | Verdict::Violated { round, .. }
            | Verdict::BudgetExhausted { round, .. } => *round,
        }
    }

    pub fn total_cost(&self) -> f64 {
        match self {
            Verdict::AllSatisfied { total_cost, .. }
            | Verdict::Violated { total_cost, .. }
            | Verdict::BudgetExhausted { total_cost, .. } => *total_cost,
        }
    }

    /// Process exit status for the verdict.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::AllSatisfied { .. } => 0,
            Verdict::Violated { .. } => 1,
            Verdict::BudgetExhausted { .. } => 2,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "verdict": self.name(),
            "round": self.round(),
            "total_cost": self.total_cost(),
            "undecided": match self {
                Verdict::BudgetExhausted { undecided, .. } => undecided.clone(),
                _ => Vec::new(),
            },
        });
        if let Verdict::Violated { requirement, .. } = self {
            v["requirement"] = serde_json::Value::from(requirement.as_str());
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Open,
    /// Decided satisfied in the given round; never revisited.
    Satisfied(u32),
    Violated,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Open => Ok(()),
            Decision::Satisfied(r) => write!(f, "satisfied@{r}"),
            Decision::Violated => f.write_str("violated"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RequirementRecord {
    pub id: String,
    /// The interval computed this round; `None` once decided earlier.
    pub interval: Option<Interval>,
    pub decision: Decision,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: u32,
    pub requirements: Vec<RequirementRecord>,
    pub nobs: Vec<u64>,
    pub round_cost: Vec<f64>,
    pub cumulative_cost: Vec<f64>,
    pub total_cost: f64,
    pub duration: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub rounds: Vec<RoundRecord>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    /// Rounds in which tests were run. The round that reaches the verdict
    /// runs none.
    pub fn testing_rounds(&self) -> u32 {
        self.rounds.iter().filter(|r| r.nobs.iter().any(|&n| n > 0)).count() as u32
    }
}

/// Whether `[lo, hi]` shows the requirement holds.
pub fn is_satisfied(rel: Rel, bound: f64, lo: f64, hi: f64) -> bool {
    rel.holds(if rel.is_upper() { hi } else { lo }, bound)
}

/// Whether `[lo, hi]` shows the requirement fails.
pub fn is_violated(rel: Rel, bound: f64, lo: f64, hi: f64) -> bool {
    !rel.holds(if rel.is_upper() { lo } else { hi }, bound)
}

/// Adaptive verification run.
pub fn run(
    model: &Model,
    reqs: &[Requirement],
    tester: &mut dyn Tester,
    cfg: &EngineConfig,
) -> Result<RunOutcome, EngineError> {
    run_with(model, reqs, tester, cfg, Strategy::Adaptive)
}

/// The same loop with an equal split of every round's budget.
pub fn run_baseline(
    model: &Model,
    reqs: &[Requirement],
    tester: &mut dyn Tester,
    cfg: &EngineConfig,
) -> Result<RunOutcome, EngineError> {
    run_with(model, reqs, tester, cfg, Strategy::Uniform)
}

pub fn run_with(
    model: &Model,
    reqs: &[Requirement],
    tester: &mut dyn Tester,
    cfg: &EngineConfig,
    strategy: Strategy,
) -> Result<RunOutcome, EngineError> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let min_round = model.total_component_cost();
    if cfg.round_budget < min_round {
        let w = format!(
            "round_budget {} is below the total component cost {min_round}; some rounds may test nothing",
            cfg.round_budget
        );
        log::warn!("{w}");
        warnings.push(w);
    }

    let exprs = build_property_expressions(model.dtmc(), reqs.iter().map(|r| &r.prop), cfg.max_bounded_k)?;
    let compiled: Vec<CompiledExpression> = exprs.iter().map(|e| CompiledExpression::new(&e.expr)).collect();
    let bounds: Vec<f64> = reqs.iter().map(Requirement::bound_f64).collect();
    let comps = model.components();
    let costs: Vec<f64> = comps.iter().map(|c| c.cost).collect();

    let mut obs = model.initial_obs().clone();
    let mut satisfied: Vec<Option<u32>> = vec![None; reqs.len()];
    let mut cumulative = vec![0.0; comps.len()];
    let mut total = 0.0;
    let mut rounds = Vec::new();

    for round in 1.. {
        let start = Instant::now();
        let open: Vec<usize> = (0..reqs.len()).filter(|&i| satisfied[i].is_none()).collect();
        let open_exprs: Vec<&RationalFunction> = open.iter().map(|&i| &exprs[i].expr).collect();
        let pbox = build_param_box(model, &obs, cfg.alpha, &open_exprs)?;
        let mut intervals = vec![None; reqs.len()];
        for &i in &open {
            let pi = property_interval(&exprs[i], &compiled[i], &pbox, cfg.alpha, cfg.bnb);
            intervals[i] = Some(Interval::new(pi.lo, pi.hi));
        }

        let mut violated = None;
        for &i in &open {
            let iv = intervals[i].expect("computed above");
            if is_violated(reqs[i].rel, bounds[i], iv.lo, iv.hi) {
                violated.get_or_insert(i);
            } else if is_satisfied(reqs[i].rel, bounds[i], iv.lo, iv.hi) {
                satisfied[i] = Some(round);
            }
        }
        let record = |nobs: Vec<u64>, round_cost: Vec<f64>, cumulative: &[f64], total: f64| RoundRecord {
            round,
            requirements: (0..reqs.len())
                .map(|i| RequirementRecord {
                    id: reqs[i].id().to_string(),
                    interval: intervals[i],
                    decision: match satisfied[i] {
                        Some(r) => Decision::Satisfied(r),
                        None if violated == Some(i) => Decision::Violated,
                        None => Decision::Open,
                    },
                })
                .collect(),
            nobs,
            round_cost,
            cumulative_cost: cumulative.to_vec(),
            total_cost: total,
            duration: start.elapsed(),
        };
        let idle = |rounds: &mut Vec<RoundRecord>| {
            rounds.push(record(vec![0; comps.len()], vec![0.0; comps.len()], &cumulative, total));
        };

        if let Some(i) = violated {
            idle(&mut rounds);
            return Ok(RunOutcome {
                verdict: Verdict::Violated {
                    requirement: reqs[i].id().to_string(),
                    round,
                    total_cost: total,
                },
                rounds,
                warnings,
            });
        }
        if satisfied.iter().all(Option::is_some) {
            idle(&mut rounds);
            return Ok(RunOutcome {
                verdict: Verdict::AllSatisfied {
                    round,
                    total_cost: total,
                },
                rounds,
                warnings,
            });
        }

        let remaining = cfg.budget - total;
        let nobs = if round > cfg.max_rounds() || remaining <= 0.0 {
            vec![0; comps.len()]
        } else {
            let rb = cfg.round_budget.min(remaining);
            match strategy {
                Strategy::Uniform => uniform_split(rb, &costs, &vec![true; comps.len()]),
                Strategy::Adaptive => {
                    let views: Vec<RequirementView> = open
                        .iter()
                        .map(|&i| RequirementView {
                            id: reqs[i].id(),
                            rel: reqs[i].rel,
                            bound: bounds[i],
                            interval: intervals[i].expect("computed above"),
                            expr: &compiled[i],
                        })
                        .collect();
                    let decided: BTreeSet<String> = open
                        .iter()
                        .filter(|&&i| satisfied[i].is_some())
                        .map(|&i| reqs[i].id().to_string())
                        .collect();
                    allocate(rb, model, &views, &decided, &obs, &cfg.heuristic).nobs
                }
            }
        };
        if nobs.iter().all(|&n| n == 0) {
            idle(&mut rounds);
            return Ok(RunOutcome {
                verdict: Verdict::BudgetExhausted {
                    round,
                    total_cost: total,
                    undecided: (0..reqs.len())
                        .filter(|&i| satisfied[i].is_none())
                        .map(|i| reqs[i].id().to_string())
                        .collect(),
                },
                rounds,
                warnings,
            });
        }

        let mut round_cost = vec![0.0; comps.len()];
        for (j, &n) in nobs.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let delta = tester
                .test(model, j, n, round)
                .map_err(|source| EngineError::Tester {
                    component: comps[j].name.clone(),
                    source,
                })?;
            obs.merge_from(&delta);
            round_cost[j] = n as f64 * costs[j];
            cumulative[j] += round_cost[j];
            total += round_cost[j];
        }
        log::info!("round {round}: nobs {nobs:?}, total cost {total}");
        rounds.push(record(nobs, round_cost, &cumulative, total));
    }
    unreachable!("the round loop only exits by returning")
}

/// `round,req_id,lo,hi,decided`
pub fn write_requirements_csv<W: Write>(rounds: &[RoundRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "req_id", "lo", "hi", "decided"])?;
    for r in rounds {
        for q in &r.requirements {
            let (lo, hi) = match q.interval {
                Some(iv) => (iv.lo.to_string(), iv.hi.to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record([r.round.to_string(), q.id.clone(), lo, hi, q.decision.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `round,component,nobs,round_cost,cumulative_cost`
pub fn write_components_csv<W: Write>(model: &Model, rounds: &[RoundRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "component", "nobs", "round_cost", "cumulative_cost"])?;
    for r in rounds {
        for (j, c) in model.components().iter().enumerate() {
            w.write_record([
                r.round.to_string(),
                c.name.clone(),
                r.nobs[j].to_string(),
                r.round_cost[j].to_string(),
                r.cumulative_cost[j].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
