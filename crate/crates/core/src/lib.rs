//! Quantitative verification of nonfunctional requirements over parametric
//! discrete-time Markov chains, with confidence intervals derived from
//! component-test observations and an adaptive split of each round's testing
//! budget across components.

pub mod cli;
pub mod confidence;
pub mod engine;
pub mod expr;
pub mod harness;
pub mod heuristic;
pub mod interval;
pub mod model;
pub mod pmc;
pub mod props;
