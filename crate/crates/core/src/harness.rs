//! Sources of component-test observations: seeded simulation against a
//! known valuation, an external testing script, and an interactive prompt.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::Command;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::Valuation;
use crate::model::{Model, ObservationFunction};

/// Attempts allowed per state before the interactive tester gives up.
pub const INTERACTIVE_ATTEMPTS: usize = 3;

const PROB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum TestError {
    #[error("cannot run testing script {path}: {source}")]
    Spawn {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("testing script exited with {status}{}", if .stderr.is_empty() { String::new() } else { format!(": {}", .stderr) })]
    ExitStatus { status: String, stderr: String },
    #[error("testing script output line {line}: expected `<state> <state> <count>`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("testing script reported state `{state}`, which is not in component `{component}`")]
    NotInComponent { state: String, component: String },
    #[error("testing script reported transition {from} -> {to}, which is not in the model")]
    UnknownTransition { from: String, to: String },
    #[error("observations for state `{state}` sum to {got}, expected {expected}")]
    SumMismatch { state: String, expected: u64, got: u64 },
    #[error("interactive testing aborted: {0}")]
    Aborted(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Something that can run `n` tests of a component and report the
/// transitions they exercised.
pub trait Tester {
    /// Whether calls for distinct components may run concurrently.
    fn parallel_safe(&self) -> bool {
        false
    }

    /// Runs `n` tests of component `component` (0-based) in round `round`
    /// (1-based). Each test yields one transition out of every state of the
    /// component.
    fn test(
        &mut self,
        model: &Model,
        component: usize,
        n: u64,
        round: u32,
    ) -> Result<ObservationFunction, TestError>;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TruthError {
    #[error("no value given for parameter `{0}`")]
    Missing(String),
    #[error("value given for unknown parameter `{0}`")]
    Unknown(String),
    #[error("state `{state}`: {detail}")]
    Invalid { state: String, detail: String },
}

/// A full parameter valuation under which every parametric state has a
/// valid distribution, with those distributions precomputed.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    values: Valuation,
    dists: BTreeMap<usize, Vec<(usize, f64)>>,
}

impl GroundTruth {
    pub fn new(model: &Model, values: Valuation) -> Result<Self, TruthError> {
        let dtmc = model.dtmc();
        for p in dtmc.params() {
            if values.get(p).is_none() {
                return Err(TruthError::Missing(p.to_string()));
            }
        }
        for (p, _) in values.iter() {
            if !dtmc.params().contains(p) {
                return Err(TruthError::Unknown(p.to_string()));
            }
        }
        let mut dists = BTreeMap::new();
        for z in dtmc.parametric_states() {
            let invalid = |detail: String| TruthError::Invalid {
                state: dtmc.state_name(z).to_string(),
                detail,
            };
            let mut dist = Vec::new();
            for (t, f) in dtmc.transitions(z) {
                let v = f.eval(&values).map_err(|e| invalid(e.to_string()))?;
                if !(-PROB_TOLERANCE..=1.0 + PROB_TOLERANCE).contains(&v) {
                    return Err(invalid(format!(
                        "probability to `{}` is {v}",
                        dtmc.state_name(*t)
                    )));
                }
                dist.push((*t, v.clamp(0.0, 1.0)));
            }
            let sum: f64 = dist.iter().map(|(_, v)| v).sum();
            if (sum - 1.0).abs() > PROB_TOLERANCE {
                return Err(invalid(format!("outgoing probabilities sum to {sum}")));
            }
            dists.insert(z, dist);
        }
        Ok(GroundTruth { values, dists })
    }

    pub fn values(&self) -> &Valuation {
        &self.values
    }

    /// The outgoing distribution of a parametric state.
    pub fn distribution(&self, z: usize) -> &[(usize, f64)] {
        self.dists.get(&z).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// The SplitMix64 output function: a bijective 64-bit mixer.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of the sub-stream for one (seed, component, round) triple. Each
/// coordinate passes through the mixer before the next is folded in, so
/// neighbouring triples give unrelated seeds.
pub fn stream_seed(seed: u64, component: usize, round: u32) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ component as u64) ^ u64::from(round))
}

/// Draws `n` tests of a component: `n` categorical samples from the true
/// distribution of each of its states.
pub fn simulated_test<R: Rng>(
    truth: &GroundTruth,
    model: &Model,
    component: usize,
    n: u64,
    rng: &mut R,
) -> ObservationFunction {
    let mut delta = ObservationFunction::new();
    if n == 0 {
        return delta;
    }
    for &z in &model.components()[component].states {
        let dist = truth.distribution(z);
        let sampler = WeightedIndex::new(dist.iter().map(|(_, p)| *p))
            .expect("validated distributions have positive mass");
        let mut counts = vec![0u64; dist.len()];
        for _ in 0..n {
            counts[sampler.sample(rng)] += 1;
        }
        for ((t, _), c) in dist.iter().zip(counts) {
            delta.add(z, *t, c);
        }
    }
    delta
}

/// Simulated tester with one independent stream per (component, round).
#[derive(Clone, Debug)]
pub struct SimulatedTester {
    truth: GroundTruth,
    seed: u64,
}

impl SimulatedTester {
    pub fn new(truth: GroundTruth, seed: u64) -> Self {
        SimulatedTester { truth, seed }
    }
}

impl Tester for SimulatedTester {
    fn parallel_safe(&self) -> bool {
        true
    }

    fn test(
        &mut self,
        model: &Model,
        component: usize,
        n: u64,
        round: u32,
    ) -> Result<ObservationFunction, TestError> {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(self.seed, component, round));
        Ok(simulated_test(&self.truth, model, component, n, &mut rng))
    }
}

/// Runs `<script> <j> <n>` with a 1-based component index and parses
/// `<state> <state> <count>` lines from its standard output.
#[derive(Clone, Debug)]
pub struct ScriptTester {
    path: PathBuf,
}

impl ScriptTester {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        ScriptTester { path: path.into() }
    }
}

impl Tester for ScriptTester {
    fn test(
        &mut self,
        model: &Model,
        component: usize,
        n: u64,
        _round: u32,
    ) -> Result<ObservationFunction, TestError> {
        let out = Command::new(&self.path)
            .arg((component + 1).to_string())
            .arg(n.to_string())
            .output()
            .map_err(|source| TestError::Spawn {
                path: self.path.clone(),
                source,
            })?;
        if !out.status.success() {
            return Err(TestError::ExitStatus {
                status: out.status.to_string(),
                stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
            });
        }
        let text = String::from_utf8(out.stdout).map_err(|_| TestError::Malformed {
            line: 0,
            text: "output is not UTF-8".into(),
        })?;
        parse_script_output(model, component, n, &text)
    }
}

/// Parses and checks the output of one testing-script invocation.
pub fn parse_script_output(
    model: &Model,
    component: usize,
    n: u64,
    text: &str,
) -> Result<ObservationFunction, TestError> {
    let dtmc = model.dtmc();
    let comp = &model.components()[component];
    let mut delta = ObservationFunction::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let malformed = || TestError::Malformed {
            line: i + 1,
            text: line.to_string(),
        };
        let [from, to, count] = fields[..] else {
            return Err(malformed());
        };
        let count: u64 = count.parse().map_err(|_| malformed())?;
        let z = dtmc
            .state_index(from)
            .filter(|z| comp.states.contains(z))
            .ok_or_else(|| TestError::NotInComponent {
                state: from.to_string(),
                component: comp.name.clone(),
            })?;
        let unknown = || TestError::UnknownTransition {
            from: from.to_string(),
            to: to.to_string(),
        };
        let s = dtmc.state_index(to).ok_or_else(unknown)?;
        if dtmc.probability(z, s).is_none() {
            return Err(unknown());
        }
        delta.add(z, s, count);
    }
    for &z in &comp.states {
        let got = delta.total_from(z);
        if got != n {
            return Err(TestError::SumMismatch {
                state: dtmc.state_name(z).to_string(),
                expected: n,
                got,
            });
        }
    }
    Ok(delta)
}

/// Asks a person for the outcome counts of each state of the component.
pub struct InteractiveTester<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> InteractiveTester<R, W> {
    pub fn new(input: R, output: W) -> Self {
        InteractiveTester { input, output }
    }

    fn read_count(&mut self, prompt: &str) -> Result<Option<u64>, TestError> {
        write!(self.output, "{prompt}")?;
        self.output.flush()?;
        let mut line = String::new();
        if self.input.read_line(&mut line)? == 0 {
            return Err(TestError::Aborted("end of input".into()));
        }
        Ok(line.trim().parse().ok())
    }
}

impl<R: BufRead, W: Write> Tester for InteractiveTester<R, W> {
    fn test(
        &mut self,
        model: &Model,
        component: usize,
        n: u64,
        round: u32,
    ) -> Result<ObservationFunction, TestError> {
        let dtmc = model.dtmc();
        let comp = &model.components()[component];
        let mut delta = ObservationFunction::new();
        if n == 0 {
            return Ok(delta);
        }
        for &z in &comp.states {
            let name = dtmc.state_name(z);
            let targets: Vec<usize> = dtmc.transitions(z).iter().map(|(t, _)| *t).collect();
            let mut accepted = None;
            for attempt in 1..=INTERACTIVE_ATTEMPTS {
                writeln!(
                    self.output,
                    "round {round}, component {} ({}), state {name}: enter the outcomes of {n} tests",
                    comp.name,
                    component + 1
                )?;
                let mut counts = Vec::with_capacity(targets.len());
                for &t in &targets {
                    match self.read_count(&format!("  {name} -> {}: ", dtmc.state_name(t)))? {
                        Some(c) => counts.push(c),
                        None => break,
                    }
                }
                let sum: u64 = counts.iter().sum();
                if counts.len() == targets.len() && sum == n {
                    accepted = Some(counts);
                    break;
                }
                if counts.len() < targets.len() {
                    writeln!(self.output, "not a non-negative integer")?;
                } else {
                    writeln!(self.output, "counts sum to {sum}, expected {n}")?;
                }
                if attempt < INTERACTIVE_ATTEMPTS {
                    writeln!(self.output, "please try again")?;
                }
            }
            let counts = accepted.ok_or_else(|| {
                TestError::Aborted(format!(
                    "no valid counts for state {name} after {INTERACTIVE_ATTEMPTS} attempts"
                ))
            })?;
            for (t, c) in targets.into_iter().zip(counts) {
                delta.add(z, t, c);
            }
        }
        Ok(delta)
    }
}
