use std::ffi::CStr;
use std::ptr;

use finite_key_lab::jq::{self, CountVector};
use finite_key_lab::qkd::{self, QkdParams};
use finite_key_lab::qrng::{self, QrngParams};
use finite_key_lab::sampling::{self, SampleWord, SamplingSpec, Strategy};
use finite_key_lab_ffi::*;

fn last_error() -> String {
    let p = fkl_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn counts(fractions: &[f64]) -> *mut FklCountVector {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { fkl_count_vector_new(fractions.as_ptr(), fractions.len(), &mut h) }, FklStatus::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(fkl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn sampling_matches_core() {
    let mut eps = 0.0;
    let s = unsafe { fkl_epsilon_cl(FklStrategy::Psi1, 1000, 500, 4, 0.05, &mut eps) };
    assert_eq!(s, FklStatus::Ok);
    let spec = SamplingSpec::new(Strategy::Psi1, 1000, 500, 4, 0.05).unwrap();
    assert_eq!(eps, sampling::epsilon_cl(&spec).unwrap());

    let mut delta = 0.0;
    let s = unsafe { fkl_delta_for_epsilon(FklStrategy::Psi2Plus0, 1_000_000, 70_000, 2, 1e-10, &mut delta) };
    assert_eq!(s, FklStatus::Ok);
    assert_eq!(delta, sampling::delta_for_epsilon(Strategy::Psi2Plus0, 1_000_000, 70_000, 2, 1e-10).unwrap());
}

#[test]
fn exact_failure_single_and_pair() {
    let a = [0u32, 1, 1, 0, 2, 1, 0, 0];
    let b = [0u32, 1, 0, 0, 2, 1, 1, 0];
    let mut p = f64::NAN;
    let s = unsafe {
        fkl_exact_failure_probability(FklStrategy::Psi1, 4, 4, 3, 0.2, a.as_ptr(), ptr::null(), a.len(), &mut p)
    };
    assert_eq!(s, FklStatus::Ok);
    let spec = SamplingSpec::new(Strategy::Psi1, 4, 4, 3, 0.2).unwrap();
    assert_eq!(p, sampling::exact_failure_probability(&SampleWord::Single(a.to_vec()), &spec).unwrap());

    let s = unsafe {
        fkl_exact_failure_probability(FklStrategy::Psi2, 4, 4, 3, 0.2, a.as_ptr(), b.as_ptr(), a.len(), &mut p)
    };
    assert_eq!(s, FklStatus::Ok);
    let spec = SamplingSpec::new(Strategy::Psi2, 4, 4, 3, 0.2).unwrap();
    let pair = SampleWord::Pair(a.to_vec(), b.to_vec());
    assert_eq!(p, sampling::exact_failure_probability(&pair, &spec).unwrap());

    let s = unsafe {
        fkl_exact_failure_probability(FklStrategy::Psi2, 4, 4, 3, 0.2, a.as_ptr(), ptr::null(), a.len(), &mut p)
    };
    assert_eq!(s, FklStatus::NullPointer);
    assert!(last_error().contains("word_b"));
}

#[test]
fn jq_matches_core() {
    let fr = [0.5, 0.25, 0.25];
    let h = counts(&fr);
    let mut b = FklJqBound::default();
    assert_eq!(unsafe { fkl_log_jq_bound(h, 40, 0.1, &mut b) }, FklStatus::Ok);
    let c = CountVector::new(fr.to_vec(), None).unwrap();
    let r = jq::log_jq_bound(&c, 40, 0.1).unwrap();
    assert_eq!(b.log_g, r.log_g);
    assert_eq!(b.log_min, r.log_min);
    assert_eq!(b.has_f == 1, r.log_f.is_some());

    let mut exact = 0.0;
    assert_eq!(unsafe { fkl_log_jq_exact(h, 40, 0.1, &mut exact) }, FklStatus::Ok);
    assert_eq!(exact, jq::log_jq_exact(&c, 40, 0.1).unwrap());
    assert!(exact <= b.log_min + 1e-9);
    unsafe { fkl_count_vector_free(h) };
}

#[test]
fn count_vector_from_counts() {
    let raw = [7u64, 2, 1];
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { fkl_count_vector_from_counts(raw.as_ptr(), raw.len(), &mut h) }, FklStatus::Ok);
    let mut exact = 0.0;
    assert_eq!(unsafe { fkl_log_jq_exact(h, 10, 0.1, &mut exact) }, FklStatus::Ok);
    let c = CountVector::from_counts(&raw).unwrap();
    assert_eq!(exact, jq::log_jq_exact(&c, 10, 0.1).unwrap());
    unsafe { fkl_count_vector_free(h) };
}

#[test]
fn qrng_rates_match_core() {
    let fr = [0.8, 0.19, 0.005, 0.005];
    let h = counts(&fr);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { fkl_qrng_params_new(10_000_000_000, 4, &mut p) }, FklStatus::Ok);
    let mut rate = FklRate::default();
    assert_eq!(unsafe { fkl_qrng_ell_ours(h, p, &mut rate) }, FklStatus::Ok);
    let c = CountVector::new(fr.to_vec(), None).unwrap();
    let params = QrngParams::new(10_000_000_000, 4).unwrap();
    let r = qrng::ell_ours(&c, &params).unwrap();
    assert_eq!(rate.ell, r.ell);
    assert_eq!(rate.rate, r.rate);
    assert_eq!(rate.delta, r.delta);

    assert_eq!(unsafe { fkl_qrng_params_configure(p, 1_000_000_000, 1e-20, 0.25, 1e-10) }, FklStatus::Ok);
    assert_eq!(unsafe { fkl_qrng_ell_ours(h, p, &mut rate) }, FklStatus::Ok);
    let params = QrngParams { test_size: 1_000_000_000, epsilon: 1e-20, beta: 0.25, epsilon_l2: 1e-10, ..params };
    assert_eq!(rate.ell, qrng::ell_ours(&c, &params).unwrap().ell);

    // A rejected update leaves the handle untouched.
    assert_eq!(unsafe { fkl_qrng_params_configure(p, 1_000_000_000, 1e-20, 0.7, 1e-10) }, FklStatus::Domain);
    assert!(last_error().contains("beta"));
    assert_eq!(unsafe { fkl_qrng_ell_ours(h, p, &mut rate) }, FklStatus::Ok);
    assert_eq!(rate.ell, qrng::ell_ours(&c, &params).unwrap().ell);

    let raw = [800u64, 190, 5, 5];
    let mut v = 0.0;
    assert_eq!(unsafe { fkl_qrng_ell_vallone(raw.as_ptr(), 4, 9000, 1000, &mut v) }, FklStatus::Ok);
    assert_eq!(v, qrng::ell_vallone(&raw, 9000, 1000).unwrap());
    assert_eq!(unsafe { fkl_qrng_ell_vallone(raw.as_ptr(), 4, 9000, 999, &mut v) }, FklStatus::CountMismatch);

    let mut x = 0.0;
    assert_eq!(unsafe { fkl_qrng_ell_xu(0.25, 100_000, 93_000, 7000, 4, 1e-12, &mut x) }, FklStatus::Ok);
    assert_eq!(x, qrng::ell_xu(0.25, 100_000, 93_000, 7000, 4, 1e-12).unwrap());

    unsafe {
        fkl_qrng_params_free(p);
        fkl_count_vector_free(h);
    }
}

#[test]
fn qkd_rates_match_core() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { fkl_qkd_params_new(100_000_000, 4, 0.0, &mut p) }, FklStatus::Ok);
    let params = QkdParams::new(100_000_000, 4).unwrap();
    let mut rate = FklRate::default();
    assert_eq!(unsafe { fkl_qkd_ell_ours(0.05, p, &mut rate) }, FklStatus::Ok);
    assert_eq!(rate.ell, qkd::ell_hdbb84_ours(0.05, 0.0, &params).unwrap().ell);
    assert_eq!(unsafe { fkl_qkd_ell_prior(0.05, p, &mut rate) }, FklStatus::Ok);
    assert_eq!(rate.ell, qkd::ell_hdbb84_prior(0.05, &params).unwrap().ell);
    unsafe { fkl_qkd_params_free(p) };

    let mut lossy = ptr::null_mut();
    assert_eq!(unsafe { fkl_qkd_params_new(100_000_000, 4, 0.1, &mut lossy) }, FklStatus::Ok);
    let params = QkdParams::new(100_000_000, 4).unwrap().with_vacuum(0.1).unwrap();
    assert_eq!(unsafe { fkl_qkd_ell_ours(0.05, lossy, &mut rate) }, FklStatus::Ok);
    assert_eq!(rate.ell, qkd::ell_hdbb84_ours(0.05, 0.1, &params).unwrap().ell);
    unsafe { fkl_qkd_params_free(lossy) };

    let mut r = 0.0;
    assert_eq!(unsafe { fkl_qkd_r_asym(4, 0.05, &mut r) }, FklStatus::Ok);
    assert_eq!(r, qkd::r_asym(4, 0.05).unwrap());
}

#[test]
fn errors_map_to_status_codes() {
    let mut v = 0.0;
    assert_eq!(unsafe { fkl_epsilon_cl(FklStrategy::Psi0, 10, 10, 1, 0.1, &mut v) }, FklStatus::Domain);
    assert!(!last_error().is_empty());

    let mut h = ptr::null_mut();
    let bad = [0.5, 0.6];
    assert_eq!(unsafe { fkl_count_vector_new(bad.as_ptr(), 2, &mut h) }, FklStatus::InvalidDistribution);
    assert!(h.is_null());

    let mut p = ptr::null_mut();
    assert_eq!(unsafe { fkl_qkd_params_new(100, 4, 1.5, &mut p) }, FklStatus::Domain);
    assert!(last_error().contains("p_vac"));
}

#[test]
fn null_pointers_are_rejected() {
    assert_eq!(unsafe { fkl_epsilon_cl(FklStrategy::Psi0, 10, 10, 2, 0.1, ptr::null_mut()) }, FklStatus::NullPointer);
    assert!(last_error().contains("out_value"));

    let mut v = 0.0;
    assert_eq!(unsafe { fkl_log_jq_exact(ptr::null(), 10, 0.1, &mut v) }, FklStatus::NullPointer);
    assert!(last_error().contains("counts"));

    let mut h = ptr::null_mut();
    assert_eq!(unsafe { fkl_count_vector_new(ptr::null(), 3, &mut h) }, FklStatus::NullPointer);

    let mut rate = FklRate::default();
    assert_eq!(unsafe { fkl_qkd_ell_ours(0.1, ptr::null(), &mut rate) }, FklStatus::NullPointer);

    unsafe {
        fkl_count_vector_free(ptr::null_mut());
        fkl_qrng_params_free(ptr::null_mut());
        fkl_qkd_params_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_per_thread() {
    let mut v = 0.0;
    assert_eq!(unsafe { fkl_epsilon_cl(FklStrategy::Psi0, 10, 10, 1, 0.1, &mut v) }, FklStatus::Domain);
    let other = std::thread::spawn(|| fkl_last_error_message().is_null()).join().unwrap();
    assert!(other);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/finite_key_lab.h")).unwrap();
    assert!(header.starts_with("#ifndef FINITE_KEY_LAB_H"));
    for name in [
        "fkl_last_error_message",
        "fkl_version",
        "fkl_count_vector_new",
        "fkl_count_vector_from_counts",
        "fkl_count_vector_free",
        "fkl_epsilon_cl",
        "fkl_delta_for_epsilon",
        "fkl_exact_failure_probability",
        "fkl_log_jq_bound",
        "fkl_log_jq_exact",
        "fkl_qrng_params_new",
        "fkl_qrng_params_configure",
        "fkl_qrng_params_free",
        "fkl_qrng_ell_ours",
        "fkl_qrng_ell_vallone",
        "fkl_qrng_ell_xu",
        "fkl_qkd_params_new",
        "fkl_qkd_params_free",
        "fkl_qkd_ell_ours",
        "fkl_qkd_ell_prior",
        "fkl_qkd_r_asym",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct FklCountVector FklCountVector;"));
    assert!(header.contains("FKL_STATUS_NULL_POINTER = 1"));
}
