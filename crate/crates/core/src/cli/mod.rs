//! Command-line front end: `verify`, `evaluate`, `compare` and
//! `sweep-rbudget`.
//!
//! Exit status: 0 all requirements satisfied, 1 a requirement violated,
//! 2 budget exhausted, 3 any error. `compare`, `sweep-rbudget` and
//! `evaluate` exit 0 on success.

mod config;
mod scenario;

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use config::{key_values, parse_valuation, Config, ConfigError, TesterKind};
pub use scenario::{
    expand, median, parse_scenario_list, probability_of_superiority, synthesize, BoundMode, Entry, Scenario,
};

use crate::engine::{run_with, write_components_csv, write_requirements_csv, EngineError, RunOutcome, Strategy};
use crate::expr::Valuation;
use crate::harness::{GroundTruth, InteractiveTester, ScriptTester, SimulatedTester, Tester, TruthError};
use crate::model::{parse_model, Model, ModelError};
use crate::pmc::{property_expression, PmcError};
use crate::props::{parse_queries, parse_requirements, PropsError, Requirement};

pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", .path.display())]
    Model {
        path: PathBuf,
        #[source]
        source: ModelError,
    },
    #[error("{}: {source}", .path.display())]
    Props {
        path: PathBuf,
        #[source]
        source: PropsError,
    },
    #[error("{}: {source}", .path.display())]
    Config {
        path: PathBuf,
        #[source]
        source: ConfigError,
    },
    #[error("ground truth: {0}")]
    Truth(#[from] TruthError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Pmc(#[from] PmcError),
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Scenario(String),
    #[error("{0}")]
    Usage(String),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<Model, CliError> {
    parse_model(&read(path)?).map_err(|source| CliError::Model {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_requirements(path: &Path) -> Result<Vec<Requirement>, CliError> {
    parse_requirements(&read(path)?).map_err(|source| CliError::Props {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_valuation(path: &Path) -> Result<Valuation, CliError> {
    parse_valuation(&read(path)?).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_config(path: &Path) -> Result<Config, CliError> {
    let base = path.parent().unwrap_or(Path::new("."));
    Config::parse(&read(path)?, base).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Parser, Debug)]
#[command(
    name = "aqv",
    version,
    about = "Verify requirements of parametric Markov chain models with confidence intervals and adaptive component testing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the verification loop and write round logs and the verdict.
    Verify(VerifyArgs),
    /// Evaluate each property at a parameter valuation.
    Evaluate(EvaluateArgs),
    /// Run every scenario with the adaptive and the uniform strategy.
    Compare(CompareArgs),
    /// Run one scenario at several round budgets.
    SweepRbudget(SweepArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    props: PathBuf,
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parameter valuation for the simulated tester (overrides `truth_file`).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Seed of the simulated tester (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// `adaptive` (alias `veracity`) or `uniform`.
    #[arg(long, default_value = "adaptive")]
    strategy: Strategy,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    props: PathBuf,
    /// Parameter valuation, one `name = value` per line.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated round budgets.
    #[arg(long, value_delimiter = ',', default_value = "1250,2500,5000,10000,20000,40000,80000")]
    values: Vec<f64>,
}

/// Configuration with command-line overrides applied.
fn effective_config(run: &RunArgs) -> Result<Config, CliError> {
    let mut cfg = load_config(&run.config)?;
    if let Some(out) = &run.out {
        cfg.output_dir = out.clone();
    }
    if let Some(t) = &run.truth {
        cfg.truth_file = Some(t.clone());
        cfg.tester = TesterKind::Simulated;
    }
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn make_tester(cfg: &Config, model: &Model) -> Result<Box<dyn Tester>, CliError> {
    Ok(match cfg.tester {
        TesterKind::Simulated => {
            let path = cfg
                .truth_file
                .as_ref()
                .ok_or_else(|| CliError::Usage("the simulated tester needs --truth or `truth_file`".into()))?;
            let truth = GroundTruth::new(model, load_valuation(path)?)?;
            Box::new(SimulatedTester::new(truth, cfg.seed))
        }
        TesterKind::Script => {
            let path = cfg
                .script_path
                .as_ref()
                .ok_or_else(|| CliError::Usage("the script tester needs `script_path`".into()))?;
            Box::new(ScriptTester::new(path))
        }
        TesterKind::Interactive => Box::new(InteractiveTester::new(
            std::io::BufReader::new(std::io::stdin()),
            std::io::stderr(),
        )),
    })
}

fn csv_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_run(model: &Model, out: &RunOutcome, dir: &Path) -> Result<(), CliError> {
    create_dir(dir)?;
    let mut buf = Vec::new();
    write_requirements_csv(&out.rounds, &mut buf)?;
    write_file(&dir.join("requirements.csv"), &buf)?;
    buf.clear();
    write_components_csv(model, &out.rounds, &mut buf)?;
    write_file(&dir.join("components.csv"), &buf)?;
    let json = serde_json::to_string_pretty(&out.verdict.to_json()).expect("JSON values serialize");
    write_file(&dir.join("verdict.json"), format!("{json}\n").as_bytes())
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32, CliError> {
    let cfg = effective_config(&args.run)?;
    let model = load_model(&args.run.model)?;
    let reqs = load_requirements(&args.run.props)?;
    let mut tester = make_tester(&cfg, &model)?;
    let out = run_with(&model, &reqs, tester.as_mut(), &cfg.engine(), args.run.strategy)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    write_run(&model, &out, &cfg.output_dir)?;
    println!(
        "{} after {} testing round(s), total cost {}",
        out.verdict.name(),
        out.testing_rounds(),
        out.verdict.total_cost()
    );
    Ok(out.verdict.exit_code())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<i32, CliError> {
    let model = load_model(&args.model)?;
    let props = parse_queries(&read(&args.props)?).map_err(|source| CliError::Props {
        path: args.props.clone(),
        source,
    })?;
    let v = load_valuation(&args.truth)?;
    for p in model.dtmc().params() {
        if v.get(p).is_none() {
            return Err(CliError::Usage(format!("{}: no value for parameter `{p}`", args.truth.display())));
        }
    }
    let mut lines = String::new();
    for p in &props {
        let pe = property_expression(model.dtmc(), p, crate::pmc::DEFAULT_MAX_BOUNDED_K)?;
        let value = pe
            .expr
            .eval(&v)
            .map_err(|e| CliError::Usage(format!("{}: {e}", p.id)))?;
        lines.push_str(&format!("{} = {value}\n", p.id));
    }
    print!("{lines}");
    Ok(0)
}

/// Verdict, cost and testing rounds of one scenario under one strategy.
struct Row {
    scenario: String,
    strategy: Strategy,
    result: Result<(String, f64, u32), String>,
}

fn run_scenario(s: &Scenario, cfg: &Config, strategy: Strategy) -> Result<RunOutcome, EngineError> {
    let mut tester = SimulatedTester::new(s.truth.clone(), s.seed);
    run_with(&s.model, &s.requirements, &mut tester, &cfg.engine(), strategy)
}

fn cmd_compare(args: &CompareArgs) -> Result<i32, CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    let base = args.scenarios.parent().unwrap_or(Path::new("."));
    let entries = parse_scenario_list(&read(&args.scenarios)?, base)?;
    let scenarios: Vec<(String, Result<Scenario, CliError>)> =
        entries.iter().flat_map(|e| expand(e, cfg.max_bounded_k)).collect();
    if scenarios.is_empty() {
        return Err(CliError::Scenario(format!("{}: no scenarios", args.scenarios.display())));
    }

    let jobs: Vec<(usize, Strategy)> = (0..scenarios.len())
        .flat_map(|i| [(i, Strategy::Adaptive), (i, Strategy::Uniform)])
        .collect();
    let results: Mutex<Vec<Option<Row>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, strategy)) = jobs.get(k) else {
                    break;
                };
                let (name, s) = &scenarios[i];
                let result = match s {
                    Err(e) => Err(e.to_string()),
                    Ok(s) => run_scenario(s, &cfg, strategy)
                        .map(|o| (o.verdict.name().to_string(), o.verdict.total_cost(), o.testing_rounds()))
                        .map_err(|e| e.to_string()),
                };
                results.lock().expect("no worker panics while holding the lock")[k] = Some(Row {
                    scenario: name.clone(),
                    strategy,
                    result,
                });
            });
        }
    });
    let rows: Vec<Row> = results
        .into_inner()
        .expect("workers have finished")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect();

    create_dir(&cfg.output_dir)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "strategy", "verdict", "total_cost", "rounds"])?;
    for r in &rows {
        match &r.result {
            Ok((verdict, cost, rounds)) => {
                w.write_record([r.scenario.clone(), r.strategy.to_string(), verdict.clone(), cost.to_string(), rounds.to_string()])?
            }
            Err(e) => {
                eprintln!("scenario {} ({}): {e}", r.scenario, r.strategy);
                w.write_record([r.scenario.as_str(), &r.strategy.to_string(), "error", "", ""])?
            }
        }
    }
    write_file(&cfg.output_dir.join("compare.csv"), &csv_bytes(w)?)?;

    let mut pairs = Vec::new();
    let mut p = csv::Writer::from_writer(Vec::new());
    p.write_record(["scenario", "cost_adaptive", "cost_uniform", "difference"])?;
    for pair in rows.chunks(2) {
        if let (Ok(a), Ok(u)) = (&pair[0].result, &pair[1].result) {
            pairs.push((a.1, u.1));
            p.write_record([pair[0].scenario.clone(), a.1.to_string(), u.1.to_string(), (a.1 - u.1).to_string()])?;
        }
    }
    write_file(&cfg.output_dir.join("pairs.csv"), &csv_bytes(p)?)?;
    if pairs.is_empty() {
        return Err(CliError::Scenario("every scenario failed".into()));
    }
    let diffs: Vec<f64> = pairs.iter().map(|(a, u)| a - u).collect();
    let med = median(&diffs);
    let sup = probability_of_superiority(&pairs);
    let summary = format!(
        "scenarios,median_difference,probability_of_superiority\n{},{med},{sup}\n",
        pairs.len()
    );
    write_file(&cfg.output_dir.join("summary.csv"), summary.as_bytes())?;
    print!("{summary}");
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32, CliError> {
    let cfg = effective_config(&args.run)?;
    let model = load_model(&args.run.model)?;
    let reqs = load_requirements(&args.run.props)?;
    if args.values.is_empty() {
        return Err(CliError::Usage("no round budgets given".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rbudget", "rounds", "total_cost", "wall_ms"])?;
    for &rb in &args.values {
        let mut tester = make_tester(&cfg, &model)?;
        let mut ec = cfg.engine();
        ec.round_budget = rb;
        let start = Instant::now();
        let out = run_with(&model, &reqs, tester.as_mut(), &ec, args.run.strategy)?;
        let ms = start.elapsed().as_millis();
        for warning in &out.warnings {
            eprintln!("warning (rbudget {rb}): {warning}");
        }
        w.write_record([rb.to_string(), out.testing_rounds().to_string(), out.verdict.total_cost().to_string(), ms.to_string()])?;
    }
    let bytes = csv_bytes(w)?;
    create_dir(&cfg.output_dir)?;
    write_file(&cfg.output_dir.join("sweep.csv"), &bytes)?;
    std::io::stdout().write_all(&bytes).ok();
    Ok(0)
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            e.print().ok();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::SweepRbudget(a) => cmd_sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
