//! Property tests spanning several modules, run on random chains.

mod common;

use std::collections::BTreeSet;

use aqv::confidence::{build_param_box, property_interval, BnbConfig, CompiledExpression};
use aqv::engine::{run_with, Decision, EngineConfig, RunOutcome, Strategy, Verdict};
use aqv::expr::Valuation;
use aqv::harness::{simulated_test, GroundTruth, SimulatedTester};
use aqv::model::{Model, ObservationFunction};
use aqv::pmc::{build_property_expressions, reach_prob_expr_with, EliminationOrder};
use aqv::props::{parse_requirements, sat_states, StateFormula};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn valuation(model: &Model, rng: &mut ChaCha8Rng) -> Valuation {
    model.dtmc().params().iter().map(|p| (p.clone(), rng.gen_range(0.05..0.45))).collect()
}

fn without_timing(mut out: RunOutcome) -> RunOutcome {
    for r in &mut out.rounds {
        r.duration = Default::default();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn elimination_order_does_not_change_values(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 12, 3);
        let d = model.dtmc();
        let all: BTreeSet<usize> = (0..d.num_states()).collect();
        let goal = sat_states(d, &StateFormula::atom("goal"));
        let a = reach_prob_expr_with(d, d.init(), &all, &goal, EliminationOrder::Greedy).unwrap();
        let b = reach_prob_expr_with(d, d.init(), &all, &goal, EliminationOrder::Reverse).unwrap();
        for _ in 0..5 {
            let v = valuation(&model, &mut rng);
            let (x, y) = (a.eval_f64(&v).unwrap(), b.eval_f64(&v).unwrap());
            prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y);
            prop_assert!((-1e-9..=1.0 + 1e-9).contains(&x));
        }
    }

    #[test]
    fn engine_invariants(seed in any::<u64>(), b1 in 0.0f64..1.0, b2 in 0.0f64..1.0, b3 in 0.5f64..20.0, rb in 50.0f64..2000.0, rounds in 1u32..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 10, 2);
        let reqs = parse_requirements(&format!(
            "A: P<{b1:.4} [ F \"goal\" ]\nB: P>={b2:.4} [ !\"mid\" U \"goal\" ]\nC: R<{b3:.4} [ F \"goal\" | \"trap\" ]\n"
        ))
        .unwrap();
        let truth = GroundTruth::new(&model, valuation(&model, &mut rng)).unwrap();
        let cfg = EngineConfig::new(rb * f64::from(rounds), rb);
        for strategy in [Strategy::Adaptive, Strategy::Uniform] {
            let run = || run_with(&model, &reqs, &mut SimulatedTester::new(truth.clone(), seed), &cfg, strategy).unwrap();
            let out = run();
            prop_assert!(out.verdict.total_cost() <= cfg.budget + 1e-9);
            prop_assert!(out.testing_rounds() <= cfg.max_rounds());
            for w in out.rounds.windows(2) {
                for (a, b) in w[0].cumulative_cost.iter().zip(&w[1].cumulative_cost) {
                    prop_assert!(a <= b);
                }
                for (a, b) in w[0].requirements.iter().zip(&w[1].requirements) {
                    if let Decision::Satisfied(r) = a.decision {
                        prop_assert_eq!(b.decision, Decision::Satisfied(r));
                        prop_assert!(b.interval.is_none());
                    }
                }
            }
            if let Verdict::Violated { round, .. } = out.verdict {
                prop_assert_eq!(round, out.rounds.last().unwrap().round);
            }
            prop_assert_eq!(without_timing(run()), without_timing(out));
        }
    }
}

#[test]
fn more_observations_tighten_the_median_width() {
    let model = aqv::model::parse_model(&load_shipped("tas.model")).unwrap();
    let reqs = parse_requirements(&load_shipped("tas.props")).unwrap();
    let truth = GroundTruth::new(&model, aqv::cli::parse_valuation(&load_shipped("tas.truth")).unwrap()).unwrap();
    let exprs = build_property_expressions(model.dtmc(), reqs.iter().map(|r| &r.prop), 100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for pe in &exprs {
        let compiled = CompiledExpression::new(&pe.expr);
        let mut median_width = |n: u64| {
            let mut widths: Vec<f64> = (0..31)
                .map(|_| {
                    let mut obs = ObservationFunction::new();
                    for j in 0..model.components().len() {
                        obs.merge_from(&simulated_test(&truth, &model, j, n, &mut rng));
                    }
                    let pbox = build_param_box(&model, &obs, 0.95, &[&pe.expr]).unwrap();
                    let pi = property_interval(pe, &compiled, &pbox, 0.95, BnbConfig::default());
                    pi.hi - pi.lo
                })
                .collect();
            widths.sort_by(f64::total_cmp);
            widths[15]
        };
        let (small, large) = (median_width(500), median_width(5000));
        assert!(large < small, "{}: {} then {}", pe.id, small, large);
    }
}
