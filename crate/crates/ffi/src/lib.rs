//! C ABI for the finite-key-lab bounds and rates.
//!
//! Every fallible function returns an [`FklStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`fkl_last_error_message`] on the same thread. Handles are created by
//! `*_new` functions and released by the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use finite_key_lab::jq::{self, CountVector};
use finite_key_lab::qkd::{self, QkdParams};
use finite_key_lab::qrng::{self, QrngParams, TestSize};
use finite_key_lab::sampling::{self, SampleWord, SamplingSpec, Strategy};
use finite_key_lab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FklStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    InvalidDistribution = 3,
    CountMismatch = 4,
    LengthMismatch = 5,
    Invariant = 6,
    SizeGuard = 7,
    ChannelKind = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FklStrategy {
    Psi0 = 0,
    Psi1 = 1,
    Psi2 = 2,
    Psi2Plus0 = 3,
}

impl From<FklStrategy> for Strategy {
    fn from(s: FklStrategy) -> Self {
        match s {
            FklStrategy::Psi0 => Strategy::Psi0,
            FklStrategy::Psi1 => Strategy::Psi1,
            FklStrategy::Psi2 => Strategy::Psi2,
            FklStrategy::Psi2Plus0 => Strategy::Psi2Plus0,
        }
    }
}

/// A rate evaluation. `ell` keeps its sign; `rate` is clamped at zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FklRate {
    pub ell: f64,
    pub rate: f64,
    pub delta: f64,
    pub eps_pa: f64,
    pub failure_prob: f64,
}

impl From<qrng::RateResult> for FklRate {
    fn from(r: qrng::RateResult) -> Self {
        Self {
            ell: r.ell,
            rate: r.rate,
            delta: r.delta,
            eps_pa: r.eps_pa,
            failure_prob: r.failure_prob,
        }
    }
}

/// Bounds on `log2 |J_q|`. `log_f` is meaningful only when `has_f` is non-zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FklJqBound {
    pub log_f: f64,
    pub has_f: u8,
    pub log_g: f64,
    pub log_min: f64,
}

/// Opaque relative count vector.
pub struct FklCountVector(CountVector);

/// Opaque QRNG parameter set.
pub struct FklQrngParams(QrngParams);

/// Opaque HD-BB84 parameter set.
pub struct FklQkdParams(QkdParams);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FklStatus {
    match e {
        Error::Domain { .. } => FklStatus::Domain,
        Error::InvalidDistribution(_) => FklStatus::InvalidDistribution,
        Error::CountMismatch { .. } => FklStatus::CountMismatch,
        Error::LengthMismatch(_) => FklStatus::LengthMismatch,
        Error::Invariant(_) => FklStatus::Invariant,
        Error::SizeGuard { .. } => FklStatus::SizeGuard,
        Error::ChannelKind(_) => FklStatus::ChannelKind,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FklStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FklStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("{name} is null"));
            FklStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            FklStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn handle<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fkl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fkl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// count vectors

/// # Safety
/// `fractions` must point to `d` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkl_count_vector_new(
    fractions: *const f64,
    d: usize,
    out_handle: *mut *mut FklCountVector,
) -> FklStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        let c = CountVector::new(slice(fractions, d, "fractions")?.to_vec(), None)?;
        *slot = Box::into_raw(Box::new(FklCountVector(c)));
        Ok(())
    })
}

/// Count vector from absolute counts; the sample size is their sum.
///
/// # Safety
/// `counts` must point to `d` readable integers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkl_count_vector_from_counts(
    counts: *const u64,
    d: usize,
    out_handle: *mut *mut FklCountVector,
) -> FklStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        let c = CountVector::from_counts(slice(counts, d, "counts")?)?;
        *slot = Box::into_raw(Box::new(FklCountVector(c)));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from a `fkl_count_vector_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fkl_count_vector_free(handle: *mut FklCountVector) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

// sampling

/// Analytic failure bound, unclamped.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkl_epsilon_cl(
    strategy: FklStrategy,
    n: u64,
    m: u64,
    d: u32,
    delta: f64,
    out_value: *mut f64,
) -> FklStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = sampling::epsilon_cl(&SamplingSpec::new(strategy.into(), n, m, d, delta)?)?;
        Ok(())
    })
}

/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkl_delta_for_epsilon(
    strategy: FklStrategy,
    n: u64,
    m: u64,
    d: u32,
    epsilon: f64,
    out_value: *mut f64,
) -> FklStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = sampling::delta_for_epsilon(strategy.into(), n, m, d, epsilon)?;
        Ok(())
    })
}

/// Exact failure probability of a word (or word pair for the two-party
/// strategies, where `word_b` must be non-null) of length `n + m`.
///
/// # Safety
/// `word_a` (and `word_b` when used) must point to `len` readable symbols.
#[no_mangle]
pub unsafe extern "C" fn fkl_exact_failure_probability(
    strategy: FklStrategy,
    n: u64,
    m: u64,
    d: u32,
    delta: f64,
    word_a: *const u32,
    word_b: *const u32,
    len: usize,
    out_value: *mut f64,
) -> FklStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let spec = SamplingSpec::new(strategy.into(), n, m, d, delta)?;
        let a = slice(word_a, len, "word_a")?.to_vec();
        let word = if spec.strategy.is_two_party() {
            SampleWord::Pair(a, slice(word_b, len, "word_b")?.to_vec())
        } else {
            SampleWord::Single(a)
        };
        *slot = sampling::exact_failure_probability(&word, &spec)?;
        Ok(())
    })
}

// J_q

/// # Safety
/// `counts` must be a live handle; `out_bound` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkl_log_jq_bound(
    counts: *const FklCountVector,
    n: u64,
    delta: f64,
    out_bound: *mut FklJqBound,
) -> FklStatus {
    guard(|| {
        let slot = out(out_bound, "out_bound")?;
        let r = jq::log_jq_bound(&handle(counts, "counts")?.0, n, delta)?;
        *slot = FklJqBound {
            log_f: r.log_f.unwrap_or(f64::NAN),
            has_f: u8::from(r.log_f.is_some()),
            log_g: r.log_g,
            log_min: r.log_min,
        };
        Ok(())
    })
}

/// Exact `log2 |J_q|`, `-inf` when the set is empty.
///
/// # Safety
/// `counts` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkl_log_jq_exact(
    counts: *const FklCountVector,
    n: u64,
    delta: f64,
    out_value: *mut f64,
) -> FklStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = jq::log_jq_exact(&handle(counts, "counts")?.0, n, delta)?;
        Ok(())
    })
}

// QRNG

/// Defaults: `m = ceil(0.07 N)`, `eps = 1e-36`, `beta = 1/3`, `eps_l2 = 1e-12`.
///
/// # Safety
/// `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkl_qrng_params_new(total: u64, d: u32, out_handle: *mut *mut FklQrngParams) -> FklStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        *slot = Box::into_raw(Box::new(FklQrngParams(QrngParams::new(total, d)?)));
        Ok(())
    })
}

/// Sets the test size as an absolute count (`test_size >= 1`) and the
/// failure parameters. The handle is unchanged on error.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fkl_qrng_params_configure(
    params: *mut FklQrngParams,
    test_size: u64,
    epsilon: f64,
    beta: f64,
    epsilon_l2: f64,
) -> FklStatus {
    guard(|| {
        let p = out(params, "params")?;
        let next = QrngParams {
            test_size: TestSize::Absolute(test_size).resolve(p.0.total)?,
            epsilon,
            beta,
            epsilon_l2,
            ..p.0
        };
        next.validate()?;
        p.0 = next;
        Ok(())
    })
}

/// # Safety
/// `params` must come from [`fkl_qrng_params_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fkl_qrng_params_free(params: *mut FklQrngParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// # Safety
/// Handles must be live; `out_rate` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkl_qrng_ell_ours(
    counts: *const FklCountVector,
    params: *const FklQrngParams,
    out_rate: *mut FklRate,
) -> FklStatus {
    guard(|| {
        let slot = out(out_rate, "out_rate")?;
        *slot = qrng::ell_ours(&handle(counts, "counts")?.0, &handle(params, "params")?.0)?.into();
        Ok(())
    })
}

/// # Safety
/// `counts` must point to `d` readable integers summing to `m`.
#[no_mangle]
pub unsafe extern "C" fn fkl_qrng_ell_vallone(
    counts: *const u64,
    d: usize,
    n: u64,
    m: u64,
    out_value: *mut f64,
) -> FklStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = qrng::ell_vallone(slice(counts, d, "counts")?, n, m)?;
        Ok(())
    })
}

/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkl_qrng_ell_xu(
    d0: f64,
    total: u64,
    n: u64,
    m: u64,
    d: u32,
    epsilon: f64,
    out_value: *mut f64,
) -> FklStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = qrng::ell_xu(d0, total, n, m, d, epsilon)?;
        Ok(())
    })
}

// HD-BB84

/// Lossless defaults; `p_vac > 0` switches on the vacuum-aware bound.
///
/// # Safety
/// `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkl_qkd_params_new(
    total: u64,
    d: u32,
    p_vac: f64,
    out_handle: *mut *mut FklQkdParams,
) -> FklStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        let mut params = QkdParams::new(total, d)?;
        if p_vac != 0.0 {
            params = params.with_vacuum(p_vac)?;
        }
        *slot = Box::into_raw(Box::new(FklQkdParams(params)));
        Ok(())
    })
}

/// # Safety
/// `params` must come from [`fkl_qkd_params_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fkl_qkd_params_free(params: *mut FklQkdParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Key length from the three-party bound at observed distance `q`.
///
/// # Safety
/// `params` must be live; `out_rate` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkl_qkd_ell_ours(q: f64, params: *const FklQkdParams, out_rate: *mut FklRate) -> FklStatus {
    guard(|| {
        let slot = out(out_rate, "out_rate")?;
        let p = &handle(params, "params")?.0;
        *slot = qkd::ell_hdbb84_ours(q, p.p_vac, p)?.into();
        Ok(())
    })
}

/// # Safety
/// `params` must be live; `out_rate` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkl_qkd_ell_prior(q: f64, params: *const FklQkdParams, out_rate: *mut FklRate) -> FklStatus {
    guard(|| {
        let slot = out(out_rate, "out_rate")?;
        *slot = qkd::ell_hdbb84_prior(q, &handle(params, "params")?.0)?.into();
        Ok(())
    })
}

/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkl_qkd_r_asym(d: u32, q: f64, out_value: *mut f64) -> FklStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = qkd::r_asym(d, q)?;
        Ok(())
    })
}
