use std::ffi::{c_char, CStr, CString};
use std::ptr;

use metroball_ffi::*;

fn last_error() -> String {
    let p = mb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_matches_core() {
    let v = unsafe { CStr::from_ptr(mb_version()) }.to_str().unwrap();
    assert_eq!(v, metroball::cli::VERSION);
}

#[test]
fn scalar_functions() {
    let mut v = 0.0;
    assert_eq!(unsafe { mb_vol_unit_ball(2, &mut v) }, MbStatus::Ok);
    assert!((v - std::f64::consts::PI).abs() < 1e-14);
    assert_eq!(unsafe { mb_vol_unit_ball(0, &mut v) }, MbStatus::InvalidDimension);
    assert!(last_error().contains("dimension"));

    assert_eq!(unsafe { mb_delta_star(3, 4.0, &mut v) }, MbStatus::Ok);
    assert_eq!(v, 0.25);
    assert_eq!(unsafe { mb_delta_star(3, -1.0, &mut v) }, MbStatus::Domain);
    assert_eq!(unsafe { mb_delta_star(3, 1.0, ptr::null_mut()) }, MbStatus::NullPointer);
}

#[test]
fn bounds_by_name() {
    let name = CString::new("upper-simple").unwrap();
    let keys = [CString::new("n").unwrap(), CString::new("C").unwrap()];
    let key_ptrs: Vec<*const c_char> = keys.iter().map(|k| k.as_ptr()).collect();
    let values = [512.0, 8.0];
    let mut v = 0.0;
    let status = unsafe { mb_bound_evaluate(name.as_ptr(), key_ptrs.as_ptr(), values.as_ptr(), 2, &mut v) };
    assert_eq!(status, MbStatus::Ok);
    assert!((v - metroball::bounds::upper_bound_simple(512, 8.0)).abs() == 0.0);

    let bogus = CString::new("no-such-bound").unwrap();
    let status = unsafe { mb_bound_evaluate(bogus.as_ptr(), key_ptrs.as_ptr(), values.as_ptr(), 2, &mut v) };
    assert_eq!(status, MbStatus::NotFound);
}

#[test]
fn instance_lifecycle_and_estimates() {
    let mut inst: *mut MbInstance = ptr::null_mut();
    assert_eq!(unsafe { mb_instance_tilted(2.0, &mut inst) }, MbStatus::Ok);
    assert!(!inst.is_null());

    let (mut dim, mut truth) = (0usize, 0.0);
    unsafe {
        assert_eq!(mb_instance_dim(inst, &mut dim), MbStatus::Ok);
        assert_eq!(mb_instance_truth(inst, &mut truth), MbStatus::Ok);
    }
    assert_eq!(dim, 1);
    assert!((truth - (0.5 - 1.0 / 2.0f64.tanh())).abs() < 1e-12);

    let core = metroball::instances::make_tilted_interval_instance(2.0).unwrap();
    let mut budget = metroball::budget::ChainBudget::new();
    let expect = metroball::estimators::estimate_mh(&core, 1000, 0.5, &mut metroball::rng::RngStream::new(7, 3), &mut budget)
        .unwrap();
    let mut got = 0.0;
    let status = unsafe { mb_estimate(inst, MbEstimator::Metropolis, 1000, 0.5, 7, 3, &mut got) };
    assert_eq!(status, MbStatus::Ok);
    assert_eq!(got.to_bits(), expect.to_bits());

    let mut rmse = 0.0;
    let status = unsafe { mb_measure_rmse(inst, MbEstimator::Simple, 4096, 0.0, 16, 1, &mut rmse) };
    assert_eq!(status, MbStatus::Ok);
    assert!(rmse > 0.0 && rmse < 0.1);

    let mut json: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { mb_instance_to_json(inst, &mut json) }, MbStatus::Ok);
    let mut copy: *mut MbInstance = ptr::null_mut();
    assert_eq!(unsafe { mb_instance_from_json(json, &mut copy) }, MbStatus::Ok);
    let mut truth2 = 0.0;
    assert_eq!(unsafe { mb_instance_truth(copy, &mut truth2) }, MbStatus::Ok);
    assert_eq!(truth.to_bits(), truth2.to_bits());

    unsafe {
        mb_string_free(json);
        mb_instance_free(copy);
        mb_instance_free(inst);
        mb_instance_free(ptr::null_mut());
        mb_string_free(ptr::null_mut());
    }
}

#[test]
fn instance_constructors_report_errors() {
    let mut inst: *mut MbInstance = ptr::null_mut();
    let name = CString::new("nope").unwrap();
    assert_eq!(unsafe { mb_instance_smooth(name.as_ptr(), &mut inst) }, MbStatus::NotFound);
    assert!(inst.is_null());
    assert_eq!(unsafe { mb_instance_fad(6.0, 2, 2, 0, 1, &mut inst) }, MbStatus::PackingFailure);
    assert_eq!(unsafe { mb_instance_fc_sample(16, 0.5, 0, 0, &mut inst) }, MbStatus::InvalidClass);
    assert_eq!(unsafe { mb_instance_tilted(1.0, ptr::null_mut()) }, MbStatus::NullPointer);
    let bad = [0xffu8, 0];
    assert_eq!(unsafe { mb_instance_smooth(bad.as_ptr().cast(), &mut inst) }, MbStatus::InvalidUtf8);

    let mut truth = 0.0;
    assert_eq!(unsafe { mb_instance_truth(ptr::null(), &mut truth) }, MbStatus::NullPointer);
}

#[test]
fn fc_instances_match_core() {
    let cells = [1usize, 5, 9];
    let eps = [1i8, -1, 1];
    let mut inst: *mut MbInstance = ptr::null_mut();
    let status = unsafe { mb_instance_fc(8, 8.0, cells.as_ptr(), eps.as_ptr(), 3, &mut inst) };
    assert_eq!(status, MbStatus::Ok, "{}", last_error());
    let core = metroball::instances::make_fc_instance(8, 8.0, cells.to_vec(), eps.to_vec()).unwrap();
    let mut truth = 0.0;
    unsafe { mb_instance_truth(inst, &mut truth) };
    assert_eq!(truth, core.instance.truth.unwrap());
    unsafe { mb_instance_free(inst) };

    let mut sampled: *mut MbInstance = ptr::null_mut();
    assert_eq!(unsafe { mb_instance_fc_sample(32, 4.0, 5, 9, &mut sampled) }, MbStatus::Ok);
    let core = metroball::instances::sample_fc_prior(32, 4.0, &mut metroball::rng::RngStream::new(5, 9)).unwrap();
    unsafe { mb_instance_truth(sampled, &mut truth) };
    assert_eq!(truth, core.instance.truth.unwrap());
    unsafe { mb_instance_free(sampled) };
}

#[test]
fn chains_and_spectra() {
    let p = 0.3;
    let kernel = [1.0 - p, p, p, 1.0 - p];
    let pi = [0.5, 0.5];
    let mut chain: *mut MbChain = ptr::null_mut();
    assert_eq!(unsafe { mb_chain_new(kernel.as_ptr(), pi.as_ptr(), 2, &mut chain) }, MbStatus::Ok);
    let (mut beta, mut phi, mut states) = (0.0, 0.0, 0usize);
    unsafe {
        assert_eq!(mb_chain_states(chain, &mut states), MbStatus::Ok);
        assert_eq!(mb_chain_second_eigenvalue(chain, &mut beta), MbStatus::Ok);
        assert_eq!(mb_chain_conductance(chain, MbConductanceMode::Exhaustive, &mut phi), MbStatus::Ok);
    }
    assert_eq!(states, 2);
    assert!((beta - (1.0 - 2.0 * p)).abs() < 1e-12);
    assert!((phi - p).abs() < 1e-12);
    let mut report = MbSpectralReport::default();
    assert_eq!(unsafe { mb_chain_spectral_report(chain, MbConductanceMode::Exhaustive, &mut report) }, MbStatus::Ok);
    assert!(report.cheeger_ok);
    assert!((report.lambda - 2.0 * p).abs() < 1e-12);
    unsafe { mb_chain_free(chain) };

    let bad = [0.5, 0.6, 0.5, 0.5];
    let mut rejected: *mut MbChain = ptr::null_mut();
    assert_ne!(unsafe { mb_chain_new(bad.as_ptr(), pi.as_ptr(), 2, &mut rejected) }, MbStatus::Ok);
    assert!(rejected.is_null());

    let mut big: *mut MbChain = ptr::null_mut();
    assert_eq!(unsafe { mb_chain_discretize_tilt(1.0, 0.5, 24, &mut big) }, MbStatus::Ok);
    assert_eq!(unsafe { mb_chain_conductance(big, MbConductanceMode::Exhaustive, &mut phi) }, MbStatus::SizeLimit);
    assert_eq!(unsafe { mb_chain_conductance(big, MbConductanceMode::Contiguous, &mut phi) }, MbStatus::Ok);
    assert!(phi > 0.0);
    unsafe { mb_chain_free(big) };
}
