use std::ffi::{c_void, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use aqv_ffi::*;

fn shipped(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/models").join(name);
    CString::new(std::fs::read_to_string(p).unwrap()).unwrap()
}

struct Handles {
    model: *mut AqvModel,
    reqs: *mut AqvRequirements,
}

impl Handles {
    fn tas() -> Self {
        let mut model = ptr::null_mut();
        let mut reqs = ptr::null_mut();
        unsafe {
            assert_eq!(aqv_model_parse(shipped("tas.model").as_ptr(), &mut model), AqvStatus::Ok);
            assert_eq!(aqv_requirements_parse(shipped("tas.props").as_ptr(), &mut reqs), AqvStatus::Ok);
        }
        Handles { model, reqs }
    }
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            aqv_model_free(self.model);
            aqv_requirements_free(self.reqs);
        }
    }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(aqv_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn model_structure_is_exposed() {
    let h = Handles::tas();
    unsafe {
        assert_eq!(aqv_model_component_count(h.model), 3);
        assert_eq!(aqv_requirements_count(h.reqs), 3);
        let name = CStr::from_ptr(aqv_model_component_name(h.model, 2));
        assert_eq!(name.to_str().unwrap(), "alarm");
        assert!(aqv_model_component_name(h.model, 3).is_null());
        assert_eq!(aqv_model_edge_count(h.model, 0), 2);
        let (mut from, mut to) = (ptr::null(), ptr::null());
        assert_eq!(aqv_model_edge(h.model, 0, 0, &mut from, &mut to), AqvStatus::Ok);
        assert_eq!(CStr::from_ptr(from).to_str().unwrap(), "s2");
        assert_eq!(CStr::from_ptr(to).to_str().unwrap(), "s4");
        assert_eq!(aqv_model_edge(h.model, 0, 2, &mut from, &mut to), AqvStatus::InvalidArgument);
        assert!(last_error().contains("no edge 2"));
    }
}

#[test]
fn parse_errors_are_reported() {
    let mut model = ptr::null_mut();
    let bad = CString::new("dtmc\nstate s0 init;\ntrans s0 -> s1 : 1;\n").unwrap();
    unsafe {
        assert_eq!(aqv_model_parse(bad.as_ptr(), &mut model), AqvStatus::Parse);
        assert!(model.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(aqv_model_parse(ptr::null(), &mut model), AqvStatus::NullPointer);
        assert_eq!(aqv_model_parse(bad.as_ptr(), ptr::null_mut()), AqvStatus::NullPointer);
    }
}

#[test]
fn evaluate_matches_core() {
    let h = Handles::tas();
    let truth = shipped("tas.truth");
    let mut values = [0.0; 3];
    unsafe {
        assert_eq!(aqv_evaluate(h.model, h.reqs, truth.as_ptr(), values.as_mut_ptr(), 3), AqvStatus::Ok);
        assert_eq!(aqv_evaluate(h.model, h.reqs, truth.as_ptr(), values.as_mut_ptr(), 2), AqvStatus::InvalidArgument);
    }
    let model = aqv::model::parse_model(shipped("tas.model").to_str().unwrap()).unwrap();
    let reqs = aqv::props::parse_requirements(shipped("tas.props").to_str().unwrap()).unwrap();
    let v = aqv::cli::parse_valuation(truth.to_str().unwrap()).unwrap();
    let exprs = aqv::pmc::build_property_expressions(model.dtmc(), reqs.iter().map(|r| &r.prop), 100).unwrap();
    for (got, e) in values.iter().zip(&exprs) {
        assert_eq!(*got, e.expr.eval(&v).unwrap());
    }
}

#[test]
fn simulated_run_matches_core() {
    let h = Handles::tas();
    let cfg = aqv_config_default(150000.0, 5000.0);
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(aqv_verify_simulated(h.model, h.reqs, &cfg, shipped("tas.truth").as_ptr(), 1, &mut out), AqvStatus::Ok);
        assert_eq!(aqv_outcome_verdict(out), AqvVerdict::AllSatisfied);
        let cost = aqv_outcome_total_cost(out);
        assert!(cost > 0.0 && cost <= 150000.0);
        assert!(aqv_outcome_testing_rounds(out) >= 1);
        let json = CStr::from_ptr(aqv_outcome_json(out)).to_str().unwrap();
        assert!(json.contains("\"AllSatisfied\""), "{json}");
        aqv_outcome_free(out);
    }
}

unsafe extern "C" fn all_succeed(ctx: *mut c_void, _component: usize, n: u64, _round: u32, counts: *mut u64, len: usize) -> i32 {
    *(ctx as *mut u64) += n;
    std::slice::from_raw_parts_mut(counts, len)[0] = n;
    0
}

unsafe extern "C" fn refuse(_: *mut c_void, _: usize, _: u64, _: u32, _: *mut u64, _: usize) -> i32 {
    7
}

unsafe extern "C" fn short_count(_: *mut c_void, _: usize, n: u64, _: u32, counts: *mut u64, _: usize) -> i32 {
    *counts = n - 1;
    0
}

#[test]
fn callback_tester_drives_the_loop() {
    let h = Handles::tas();
    let cfg = aqv_config_default(150000.0, 5000.0);
    let mut tests = 0u64;
    let mut out = ptr::null_mut();
    unsafe {
        let status = aqv_verify_with_callback(h.model, h.reqs, &cfg, Some(all_succeed), &mut tests as *mut u64 as *mut c_void, &mut out);
        assert_eq!(status, AqvStatus::Ok, "{}", last_error());
        assert_eq!(aqv_outcome_verdict(out), AqvVerdict::AllSatisfied);
        assert!(tests > 0);
        aqv_outcome_free(out);

        let mut out = ptr::null_mut();
        assert_eq!(aqv_verify_with_callback(h.model, h.reqs, &cfg, Some(refuse), ptr::null_mut(), &mut out), AqvStatus::Tester);
        assert!(last_error().contains("7"));
        assert_eq!(aqv_verify_with_callback(h.model, h.reqs, &cfg, Some(short_count), ptr::null_mut(), &mut out), AqvStatus::Tester);
        assert!(last_error().contains("s2"));
        assert_eq!(aqv_verify_with_callback(h.model, h.reqs, &cfg, None, ptr::null_mut(), &mut out), AqvStatus::NullPointer);
        assert!(out.is_null());
    }
}

#[test]
fn invalid_config_is_rejected() {
    let h = Handles::tas();
    let cfg = aqv_config_default(100.0, 5000.0);
    let mut out = ptr::null_mut();
    unsafe {
        let status = aqv_verify_simulated(h.model, h.reqs, &cfg, shipped("tas.truth").as_ptr(), 1, &mut out);
        assert_eq!(status, AqvStatus::InvalidArgument, "{}", last_error());
    }
}
