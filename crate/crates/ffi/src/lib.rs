//! C ABI over `metroball`.
//!
//! Every fallible function returns an [`MbStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can be
//! read with [`mb_last_error`]. Handles are opaque and must be released with
//! the matching `*_free` function. Strings returned by the library are owned
//! by the caller and released with [`mb_string_free`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::OnceLock;

use metroball::bounds;
use metroball::budget::ChainBudget;
use metroball::estimators::{self, EstimatorSpec};
use metroball::geometry::{self, packing_on_ball};
use metroball::instances::{self, ProblemInstance, WeightOracle};
use metroball::rng::RngStream;
use metroball::spectral::{self, ConductanceMode, DiscreteChain};
use metroball::Error;

/// Result codes. `MB_STATUS_OK` is zero; library errors map one to one onto the
/// core error kinds.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Panic = 3,
    InvalidDimension = 10,
    Domain = 11,
    InvalidArgument = 12,
    PackingFailure = 13,
    InvalidPrior = 14,
    InvalidClass = 15,
    InvalidPacking = 16,
    NotFound = 17,
    InvalidState = 18,
    InvalidDensity = 19,
    NeedsReference = 20,
    Discretization = 21,
    NumericFailure = 22,
    SizeLimit = 23,
    PropertyViolation = 24,
}

impl From<&Error> for MbStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidDimension(_) => Self::InvalidDimension,
            Error::Domain(_) => Self::Domain,
            Error::InvalidArgument(_) => Self::InvalidArgument,
            Error::PackingFailure { .. } => Self::PackingFailure,
            Error::InvalidPrior(_) => Self::InvalidPrior,
            Error::InvalidClass(_) => Self::InvalidClass,
            Error::InvalidPacking(_) => Self::InvalidPacking,
            Error::NotFound(_) => Self::NotFound,
            Error::InvalidState(_) => Self::InvalidState,
            Error::InvalidDensity(_) => Self::InvalidDensity,
            Error::NeedsReference => Self::NeedsReference,
            Error::Discretization(_) => Self::Discretization,
            Error::NumericFailure(_) => Self::NumericFailure,
            Error::SizeLimit { .. } => Self::SizeLimit,
            Error::PropertyViolation(_) => Self::PropertyViolation,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MbEstimator {
    Simple = 0,
    Metropolis = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MbConductanceMode {
    Exhaustive = 0,
    Contiguous = 1,
}

impl From<MbConductanceMode> for ConductanceMode {
    fn from(m: MbConductanceMode) -> Self {
        match m {
            MbConductanceMode::Exhaustive => ConductanceMode::Exhaustive,
            MbConductanceMode::Contiguous => ConductanceMode::Contiguous,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MbSpectralReport {
    pub states: usize,
    pub beta: f64,
    pub lambda: f64,
    pub conductance: f64,
    pub cheeger_ok: bool,
}

/// Opaque problem instance.
pub struct MbInstance(ProblemInstance);

/// Opaque finite reversible Markov chain.
pub struct MbChain(DiscreteChain);

struct Failure(MbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(MbStatus::from(&e), e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MbStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {msg}"));
            MbStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MbStatus::NullPointer, format!("null pointer: {what}"))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MbStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn instance<'a>(p: *const MbInstance) -> Result<&'a ProblemInstance, Failure> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null("instance"))
}

unsafe fn chain<'a>(p: *const MbChain) -> Result<&'a DiscreteChain, Failure> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null("chain"))
}

unsafe fn emit_instance(dst: *mut *mut MbInstance, inst: ProblemInstance) -> Result<(), Failure> {
    *out(dst, "out")? = Box::into_raw(Box::new(MbInstance(inst)));
    Ok(())
}

unsafe fn emit_chain(dst: *mut *mut MbChain, c: DiscreteChain) -> Result<(), Failure> {
    *out(dst, "out")? = Box::into_raw(Box::new(MbChain(c)));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mb_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(metroball::cli::VERSION).unwrap_or_default())
        .as_ptr()
}

/// Message for the most recent failure on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mb_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_vol_unit_ball(d: usize, out_value: *mut f64) -> MbStatus {
    guard(|| {
        *out(out_value, "out_value")? = geometry::vol_unit_ball(d)?;
        Ok(())
    })
}

/// `min(1/sqrt(d+1), 1/alpha)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_delta_star(d: usize, alpha: f64, out_value: *mut f64) -> MbStatus {
    guard(|| {
        if d < 1 || !(alpha >= 0.0) {
            return Err(Error::Domain("need d >= 1 and alpha >= 0".into()).into());
        }
        *out(out_value, "out_value")? = estimators::delta_star(d, alpha);
        Ok(())
    })
}

/// Evaluates a named bound. `keys[i]` names the parameter `values[i]`.
///
/// # Safety
/// `name` and each `keys[i]` must be NUL-terminated; `keys` and `values`
/// must hold `count` elements.
#[no_mangle]
pub unsafe extern "C" fn mb_bound_evaluate(
    name: *const c_char,
    keys: *const *const c_char,
    values: *const f64,
    count: usize,
    out_value: *mut f64,
) -> MbStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let keys = slice_arg(keys, count, "keys")?;
        let values = slice_arg(values, count, "values")?;
        let mut params = BTreeMap::new();
        for (k, v) in keys.iter().zip(values) {
            params.insert(str_arg(*k, "key")?.to_string(), *v);
        }
        *out(out_value, "out_value")? = bounds::evaluate(name, &params)?.value;
        Ok(())
    })
}

/// Ratio-bounded hard instance drawn from the prior with `RngStream(seed, stream)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_instance_fc_sample(
    n: usize,
    c: f64,
    seed: u64,
    stream: u64,
    out_handle: *mut *mut MbInstance,
) -> MbStatus {
    guard(|| {
        let fc = instances::sample_fc_prior(n, c, &mut RngStream::new(seed, stream))?;
        emit_instance(out_handle, fc.instance)
    })
}

/// Ratio-bounded hard instance with explicit cells and signs (`+1`/`-1`).
///
/// # Safety
/// `cells` and `eps` must hold `len` elements; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_instance_fc(
    n: usize,
    c: f64,
    cells: *const usize,
    eps: *const i8,
    len: usize,
    out_handle: *mut *mut MbInstance,
) -> MbStatus {
    guard(|| {
        let cells = slice_arg(cells, len, "cells")?.to_vec();
        let eps = slice_arg(eps, len, "eps")?.to_vec();
        let fc = instances::make_fc_instance(n, c, cells, eps)?;
        emit_instance(out_handle, fc.instance)
    })
}

/// Bump instance `index` with sign `sign` on a packing of `m` balls in `B^d`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_instance_fad(
    alpha: f64,
    m: usize,
    d: usize,
    index: usize,
    sign: i8,
    out_handle: *mut *mut MbInstance,
) -> MbStatus {
    guard(|| {
        let packing = packing_on_ball(m, d)?;
        emit_instance(out_handle, instances::make_fad_instance(alpha, &packing, index, sign)?)
    })
}

/// One of `constant-density`, `linear-f`, `gaussian-like`.
///
/// # Safety
/// `name` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_instance_smooth(name: *const c_char, out_handle: *mut *mut MbInstance) -> MbStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        emit_instance(out_handle, instances::make_smooth_instance(name)?)
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_instance_tilted(alpha: f64, out_handle: *mut *mut MbInstance) -> MbStatus {
    guard(|| emit_instance(out_handle, instances::make_tilted_interval_instance(alpha)?))
}

/// # Safety
/// `json` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_instance_from_json(json: *const c_char, out_handle: *mut *mut MbInstance) -> MbStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        emit_instance(out_handle, ProblemInstance::from_json(json)?)
    })
}

/// Serialized instance; release with [`mb_string_free`].
///
/// # Safety
/// `inst` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_instance_to_json(inst: *const MbInstance, out_json: *mut *mut c_char) -> MbStatus {
    guard(|| {
        let json = instance(inst)?.to_json();
        let s = CString::new(json).map_err(|e| Failure(MbStatus::InvalidUtf8, e.to_string()))?;
        *out(out_json, "out_json")? = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `inst` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_instance_dim(inst: *const MbInstance, out_dim: *mut usize) -> MbStatus {
    guard(|| {
        *out(out_dim, "out_dim")? = instance(inst)?.dim();
        Ok(())
    })
}

/// Reference value; `MB_STATUS_NEEDS_REFERENCE` when the instance has none.
///
/// # Safety
/// `inst` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_instance_truth(inst: *const MbInstance, out_value: *mut f64) -> MbStatus {
    guard(|| {
        *out(out_value, "out_value")? = instance(inst)?.truth.ok_or(Error::NeedsReference)?;
        Ok(())
    })
}

/// # Safety
/// `inst` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mb_instance_free(inst: *mut MbInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

fn spec(kind: MbEstimator, delta: f64) -> EstimatorSpec {
    match kind {
        MbEstimator::Simple => EstimatorSpec::Simple,
        MbEstimator::Metropolis => EstimatorSpec::Metropolis { delta },
    }
}

/// One estimate with `RngStream(seed, stream)`. `delta` is ignored by the
/// simple estimator.
///
/// # Safety
/// `inst` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_estimate(
    inst: *const MbInstance,
    kind: MbEstimator,
    n: usize,
    delta: f64,
    seed: u64,
    stream: u64,
    out_value: *mut f64,
) -> MbStatus {
    guard(|| {
        let inst = instance(inst)?;
        let mut rng = RngStream::new(seed, stream);
        let mut budget = ChainBudget::new();
        let v = match spec(kind, delta) {
            EstimatorSpec::Simple => estimators::estimate_simple(inst, n, &mut rng, &mut budget)?,
            EstimatorSpec::Metropolis { delta } => estimators::estimate_mh(inst, n, delta, &mut rng, &mut budget)?,
        };
        *out(out_value, "out_value")? = v;
        Ok(())
    })
}

/// Root mean squared error over `replications` runs on streams `0..replications`.
///
/// # Safety
/// `inst` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_measure_rmse(
    inst: *const MbInstance,
    kind: MbEstimator,
    n: usize,
    delta: f64,
    replications: usize,
    seed: u64,
    out_rmse: *mut f64,
) -> MbStatus {
    guard(|| {
        let report = estimators::measure_rmse(instance(inst)?, &spec(kind, delta), n, replications, seed)?;
        *out(out_rmse, "out_rmse")? = report.rmse;
        Ok(())
    })
}

/// Chain from a row-major `states × states` kernel and stationary vector.
///
/// # Safety
/// `kernel` must hold `states * states` values and `pi` `states` values;
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_chain_new(
    kernel: *const f64,
    pi: *const f64,
    states: usize,
    out_handle: *mut *mut MbChain,
) -> MbStatus {
    guard(|| {
        let size = states
            .checked_mul(states)
            .ok_or_else(|| Failure(MbStatus::InvalidArgument, "state count overflows".into()))?;
        let k = slice_arg(kernel, size, "kernel")?;
        let pi = slice_arg(pi, states, "pi")?.to_vec();
        let rows = if states == 0 { Vec::new() } else { k.chunks(states).map(<[f64]>::to_vec).collect() };
        emit_chain(out_handle, DiscreteChain::new(rows, pi)?)
    })
}

/// Discretized ball walk on `[-1, 1]` targeting `exp(-alpha x)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_chain_discretize_tilt(
    alpha: f64,
    delta: f64,
    states: usize,
    out_handle: *mut *mut MbChain,
) -> MbStatus {
    guard(|| {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidClass(format!("need alpha >= 0, got {alpha}")).into());
        }
        emit_chain(out_handle, DiscreteChain::discretize_1d(&WeightOracle::exp_tilt(alpha), delta, states)?)
    })
}

/// # Safety
/// `chain` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mb_chain_free(chain: *mut MbChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// # Safety
/// `c` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_chain_states(c: *const MbChain, out_states: *mut usize) -> MbStatus {
    guard(|| {
        *out(out_states, "out_states")? = chain(c)?.states();
        Ok(())
    })
}

/// # Safety
/// `c` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_chain_second_eigenvalue(c: *const MbChain, out_value: *mut f64) -> MbStatus {
    guard(|| {
        *out(out_value, "out_value")? = spectral::second_eigenvalue(chain(c)?)?;
        Ok(())
    })
}

/// # Safety
/// `c` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_chain_conductance(
    c: *const MbChain,
    mode: MbConductanceMode,
    out_value: *mut f64,
) -> MbStatus {
    guard(|| {
        *out(out_value, "out_value")? = spectral::conductance(chain(c)?, mode.into())?;
        Ok(())
    })
}

/// Second eigenvalue, gap, conductance and the Cheeger check in one call.
///
/// # Safety
/// `c` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mb_chain_spectral_report(
    c: *const MbChain,
    mode: MbConductanceMode,
    out_report: *mut MbSpectralReport,
) -> MbStatus {
    guard(|| {
        let r = spectral::spectral_report(chain(c)?, mode.into())?;
        *out(out_report, "out_report")? = MbSpectralReport {
            states: r.states,
            beta: r.beta,
            lambda: r.lambda,
            conductance: r.conductance,
            cheeger_ok: r.cheeger_ok,
        };
        Ok(())
    })
}
