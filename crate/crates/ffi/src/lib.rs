//! C interface to the verification library.
//!
//! Models, requirement lists and run outcomes are opaque handles created by
//! `*_parse`/`aqv_verify_*` and released with the matching `*_free`. Every
//! fallible call returns an [`AqvStatus`]; after a failure,
//! [`aqv_last_error`] describes it on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use aqv::cli::parse_valuation;
use aqv::engine::{run_with, EngineConfig, RunOutcome, Strategy, Verdict};
use aqv::harness::{GroundTruth, SimulatedTester, TestError, Tester};
use aqv::model::{parse_model, Model, ObservationFunction};
use aqv::pmc::build_property_expressions;
use aqv::props::{parse_requirements, Requirement};

/// Result of a fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AqvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Engine = 5,
    Tester = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AqvVerdict {
    AllSatisfied = 0,
    Violated = 1,
    BudgetExhausted = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AqvStrategy {
    Adaptive = 0,
    Uniform = 1,
}

/// Run settings. Start from [`aqv_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AqvConfig {
    pub alpha: f64,
    pub budget: f64,
    pub round_budget: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub max_boxes: usize,
    pub max_bounded_k: u32,
    pub strategy: AqvStrategy,
}

/// A parsed and validated model.
pub struct AqvModel {
    model: Model,
    names: Vec<CString>,
    component_names: Vec<CString>,
    /// Per component, the (from, to) state pairs in callback order.
    edges: Vec<Vec<(usize, usize)>>,
}

/// A parsed requirement list.
pub struct AqvRequirements {
    reqs: Vec<Requirement>,
}

/// The result of one verification run.
pub struct AqvOutcome {
    outcome: RunOutcome,
    json: CString,
}

/// Runs `n` tests of component `component` (0-based) in round `round` and
/// writes one count per edge of the component, in the order reported by
/// [`aqv_model_edge`], into `counts` (`len` entries, zeroed on entry).
/// Returns 0 on success; any other value aborts the run.
pub type AqvTestCallback =
    Option<unsafe extern "C" fn(ctx: *mut c_void, component: usize, n: u64, round: u32, counts: *mut u64, len: usize) -> i32>;

struct Failure(AqvStatus, String);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AqvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AqvStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AqvStatus::Panic
        }
    }
}

fn fail<T>(status: AqvStatus, msg: impl ToString) -> Result<T, Failure> {
    Err(Failure(status, msg.to_string()))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(AqvStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(AqvStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn reference<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .map_or_else(|| fail(AqvStatus::NullPointer, format!("{what} is null")), Ok)
}

fn cstring(s: &str) -> CString {
    CString::new(s).expect("identifiers contain no NUL")
}

/// Message describing the last failure on this thread; empty if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn aqv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Defaults for the given budgets: alpha 0.95, epsilon1 0.15, epsilon2 1e-6,
/// 4096 boxes, bounded horizon 100, adaptive strategy.
#[no_mangle]
pub extern "C" fn aqv_config_default(budget: f64, round_budget: f64) -> AqvConfig {
    let e = EngineConfig::new(budget, round_budget);
    AqvConfig {
        alpha: e.alpha,
        budget,
        round_budget,
        epsilon1: e.heuristic.epsilon1,
        epsilon2: e.heuristic.epsilon2,
        max_boxes: e.bnb.max_boxes,
        max_bounded_k: e.max_bounded_k,
        strategy: AqvStrategy::Adaptive,
    }
}

fn engine_config(c: &AqvConfig) -> (EngineConfig, Strategy) {
    let mut e = EngineConfig::new(c.budget, c.round_budget);
    e.alpha = c.alpha;
    e.heuristic.epsilon1 = c.epsilon1;
    e.heuristic.epsilon2 = c.epsilon2;
    e.bnb.max_boxes = c.max_boxes;
    e.max_bounded_k = c.max_bounded_k;
    let s = match c.strategy {
        AqvStrategy::Adaptive => Strategy::Adaptive,
        AqvStrategy::Uniform => Strategy::Uniform,
    };
    (e, s)
}

/// Parses a model file's text.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn aqv_model_parse(src: *const c_char, out: *mut *mut AqvModel) -> AqvStatus {
    guard(|| {
        if out.is_null() {
            return fail(AqvStatus::NullPointer, "out is null");
        }
        let model = parse_model(text(src, "src")?).or_else(|e| fail(AqvStatus::Parse, e))?;
        let d = model.dtmc();
        let names = d.state_names().iter().map(|n| cstring(n)).collect();
        let component_names = model.components().iter().map(|c| cstring(&c.name)).collect();
        let edges = model
            .components()
            .iter()
            .map(|c| {
                c.states
                    .iter()
                    .flat_map(|&z| d.transitions(z).iter().map(move |(t, _)| (z, *t)))
                    .collect()
            })
            .collect();
        *out = Box::into_raw(Box::new(AqvModel {
            model,
            names,
            component_names,
            edges,
        }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`aqv_model_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn aqv_model_free(model: *mut AqvModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of components; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aqv_model_component_count(model: *const AqvModel) -> usize {
    model.as_ref().map_or(0, |m| m.edges.len())
}

/// Name of component `component`, or null when out of range. Owned by the
/// model.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aqv_model_component_name(model: *const AqvModel, component: usize) -> *const c_char {
    model
        .as_ref()
        .and_then(|m| m.component_names.get(component))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Number of edges leaving the states of component `component`.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aqv_model_edge_count(model: *const AqvModel, component: usize) -> usize {
    model
        .as_ref()
        .and_then(|m| m.edges.get(component))
        .map_or(0, |e| e.len())
}

/// Source and target state names of edge `edge` of component `component`.
/// The strings are owned by the model.
///
/// # Safety
/// `model` must be a live handle; `from` and `to` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn aqv_model_edge(
    model: *const AqvModel,
    component: usize,
    edge: usize,
    from: *mut *const c_char,
    to: *mut *const c_char,
) -> AqvStatus {
    guard(|| {
        let m = reference(model, "model")?;
        if from.is_null() || to.is_null() {
            return fail(AqvStatus::NullPointer, "output pointer is null");
        }
        let Some(&(z, t)) = m.edges.get(component).and_then(|e| e.get(edge)) else {
            return fail(AqvStatus::InvalidArgument, format!("no edge {edge} in component {component}"));
        };
        *from = m.names[z].as_ptr();
        *to = m.names[t].as_ptr();
        Ok(())
    })
}

/// Parses a requirement list.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn aqv_requirements_parse(src: *const c_char, out: *mut *mut AqvRequirements) -> AqvStatus {
    guard(|| {
        if out.is_null() {
            return fail(AqvStatus::NullPointer, "out is null");
        }
        let reqs = parse_requirements(text(src, "src")?).or_else(|e| fail(AqvStatus::Parse, e))?;
        *out = Box::into_raw(Box::new(AqvRequirements { reqs }));
        Ok(())
    })
}

/// # Safety
/// `reqs` must come from [`aqv_requirements_parse`] and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn aqv_requirements_free(reqs: *mut AqvRequirements) {
    if !reqs.is_null() {
        drop(Box::from_raw(reqs));
    }
}

/// Number of requirements; 0 for a null handle.
///
/// # Safety
/// `reqs` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aqv_requirements_count(reqs: *const AqvRequirements) -> usize {
    reqs.as_ref().map_or(0, |r| r.reqs.len())
}

/// Exact value of every requirement's property at a valuation given as
/// `name = value` lines. `values` must hold `len` entries, one per
/// requirement.
///
/// # Safety
/// Handles must be live, `valuation` NUL-terminated and `values` writable
/// for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn aqv_evaluate(
    model: *const AqvModel,
    reqs: *const AqvRequirements,
    valuation: *const c_char,
    values: *mut f64,
    len: usize,
) -> AqvStatus {
    guard(|| {
        let m = reference(model, "model")?;
        let r = reference(reqs, "reqs")?;
        let v = parse_valuation(text(valuation, "valuation")?).or_else(|e| fail(AqvStatus::Parse, e))?;
        if values.is_null() {
            return fail(AqvStatus::NullPointer, "values is null");
        }
        if len != r.reqs.len() {
            return fail(AqvStatus::InvalidArgument, format!("expected {} values, got room for {len}", r.reqs.len()));
        }
        let exprs = build_property_expressions(m.model.dtmc(), r.reqs.iter().map(|q| &q.prop), aqv::pmc::DEFAULT_MAX_BOUNDED_K)
            .or_else(|e| fail(AqvStatus::Engine, e))?;
        let out = std::slice::from_raw_parts_mut(values, len);
        for (slot, e) in out.iter_mut().zip(&exprs) {
            *slot = e.expr.eval(&v).or_else(|err| fail(AqvStatus::InvalidArgument, format!("{}: {err}", e.id)))?;
        }
        Ok(())
    })
}

unsafe fn finish(
    m: &AqvModel,
    r: &AqvRequirements,
    config: *const AqvConfig,
    tester: &mut dyn Tester,
    out: *mut *mut AqvOutcome,
) -> Result<(), Failure> {
    let c = reference(config, "config")?;
    if out.is_null() {
        return fail(AqvStatus::NullPointer, "out is null");
    }
    let (cfg, strategy) = engine_config(c);
    let outcome = run_with(&m.model, &r.reqs, tester, &cfg, strategy).or_else(|e| {
        let status = match e {
            aqv::engine::EngineError::Tester { .. } => AqvStatus::Tester,
            aqv::engine::EngineError::Config(_) => AqvStatus::InvalidArgument,
            _ => AqvStatus::Engine,
        };
        fail(status, e)
    })?;
    let json = CString::new(outcome.verdict.to_json().to_string()).expect("JSON has no NUL");
    *out = Box::into_raw(Box::new(AqvOutcome { outcome, json }));
    Ok(())
}

/// Verifies with simulated tests drawn from `truth` (`name = value` lines).
///
/// # Safety
/// Handles must be live, `config` readable, `truth` NUL-terminated and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn aqv_verify_simulated(
    model: *const AqvModel,
    reqs: *const AqvRequirements,
    config: *const AqvConfig,
    truth: *const c_char,
    seed: u64,
    out: *mut *mut AqvOutcome,
) -> AqvStatus {
    guard(|| {
        let m = reference(model, "model")?;
        let r = reference(reqs, "reqs")?;
        let v = parse_valuation(text(truth, "truth")?).or_else(|e| fail(AqvStatus::Parse, e))?;
        let gt = GroundTruth::new(&m.model, v).or_else(|e| fail(AqvStatus::InvalidArgument, e))?;
        finish(m, r, config, &mut SimulatedTester::new(gt, seed), out)
    })
}

struct CallbackTester<'a> {
    model: &'a AqvModel,
    f: unsafe extern "C" fn(*mut c_void, usize, u64, u32, *mut u64, usize) -> i32,
    ctx: *mut c_void,
}

impl Tester for CallbackTester<'_> {
    fn test(&mut self, model: &Model, component: usize, n: u64, round: u32) -> Result<ObservationFunction, TestError> {
        let edges = &self.model.edges[component];
        let mut counts = vec![0u64; edges.len()];
        let code = unsafe { (self.f)(self.ctx, component, n, round, counts.as_mut_ptr(), counts.len()) };
        if code != 0 {
            return Err(TestError::Aborted(format!("callback returned {code}")));
        }
        let mut obs = ObservationFunction::new();
        for (&(z, t), &c) in edges.iter().zip(&counts) {
            obs.add(z, t, c);
        }
        for &z in &model.components()[component].states {
            let got = obs.total_from(z);
            if got != n {
                return Err(TestError::SumMismatch {
                    state: model.dtmc().state_name(z).to_string(),
                    expected: n,
                    got,
                });
            }
        }
        Ok(obs)
    }
}

/// Verifies with tests run by `callback`; `ctx` is passed through.
///
/// # Safety
/// Handles must be live, `config` readable and `out` writable; `callback`
/// must honour the [`AqvTestCallback`] contract.
#[no_mangle]
pub unsafe extern "C" fn aqv_verify_with_callback(
    model: *const AqvModel,
    reqs: *const AqvRequirements,
    config: *const AqvConfig,
    callback: AqvTestCallback,
    ctx: *mut c_void,
    out: *mut *mut AqvOutcome,
) -> AqvStatus {
    guard(|| {
        let m = reference(model, "model")?;
        let r = reference(reqs, "reqs")?;
        let Some(f) = callback else {
            return fail(AqvStatus::NullPointer, "callback is null");
        };
        finish(m, r, config, &mut CallbackTester { model: m, f, ctx }, out)
    })
}

/// # Safety
/// `outcome` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn aqv_outcome_verdict(outcome: *const AqvOutcome) -> AqvVerdict {
    match (*outcome).outcome.verdict {
        Verdict::AllSatisfied { .. } => AqvVerdict::AllSatisfied,
        Verdict::Violated { .. } => AqvVerdict::Violated,
        Verdict::BudgetExhausted { .. } => AqvVerdict::BudgetExhausted,
    }
}

/// # Safety
/// `outcome` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn aqv_outcome_total_cost(outcome: *const AqvOutcome) -> f64 {
    (*outcome).outcome.verdict.total_cost()
}

/// Rounds in which tests were run.
///
/// # Safety
/// `outcome` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn aqv_outcome_testing_rounds(outcome: *const AqvOutcome) -> u32 {
    (*outcome).outcome.testing_rounds()
}

/// The verdict as JSON, owned by the outcome.
///
/// # Safety
/// `outcome` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn aqv_outcome_json(outcome: *const AqvOutcome) -> *const c_char {
    (*outcome).json.as_ptr()
}

/// # Safety
/// `outcome` must come from an `aqv_verify_*` call and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn aqv_outcome_free(outcome: *mut AqvOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}
