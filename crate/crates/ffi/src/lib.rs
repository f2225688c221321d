//! C ABI over the `mccs` library.
//!
//! Instances and placements are opaque heap handles created by `*_new` /
//! `mccs_optimal_placement` and released with the matching `*_free`.
//! Every fallible call returns an [`MccsStatus`]; on failure a description
//! is available from [`mccs_last_error`] on the same thread. Exact values
//! come back as [`MccsFraction`] when they fit in 64 bits, or as `"p/q"`
//! strings that must be released with [`mccs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mccs::delivery::{choose_file_size, partition_and_cache, simulate_demand, PayloadSource};
use mccs::lp::verify_theorem;
use mccs::rational::{parse_rational, to_fraction, Rational};
use mccs::{DemandVector, Error, PlacementVector, ProblemInstance};
use num_traits::ToPrimitive;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MccsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    /// The exact value does not fit in a 64-bit fraction; use the string form.
    Overflow = 4,
    DecodeFailure = 5,
    Panic = 6,
}

/// Exact fraction `num / den` with `den > 0`, in lowest terms.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MccsFraction {
    pub num: i64,
    pub den: i64,
}

/// Opaque problem instance `(N, K, M)`.
pub struct MccsInstance(ProblemInstance);

/// Opaque placement vector `a_0..a_K`.
pub struct MccsPlacement(PlacementVector);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(error: &Error) -> MccsStatus {
    match error {
        Error::Infeasible(_) => MccsStatus::Infeasible,
        Error::Undecodable { .. } => MccsStatus::DecodeFailure,
        _ => MccsStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), MccsStatus>) -> MccsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MccsStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            MccsStatus::Panic
        }
    }
}

fn fail(error: Error) -> MccsStatus {
    set_error(error.to_string());
    status_of(&error)
}

fn null(what: &str) -> MccsStatus {
    set_error(format!("{what} is null"));
    MccsStatus::NullPointer
}

fn fraction(value: &Rational) -> Result<MccsFraction, MccsStatus> {
    match (value.numer().to_i64(), value.denom().to_i64()) {
        (Some(num), Some(den)) => Ok(MccsFraction { num, den }),
        _ => {
            set_error(format!("{} does not fit in a 64-bit fraction", to_fraction(value)));
            Err(MccsStatus::Overflow)
        }
    }
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), MccsStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: caller passes a valid, writable pointer.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn instance_ref<'a>(inst: *const MccsInstance) -> Result<&'a ProblemInstance, MccsStatus> {
    // SAFETY: non-null handles come from mccs_instance_new and are live.
    unsafe { inst.as_ref() }.map(|i| &i.0).ok_or_else(|| null("instance"))
}

unsafe fn placement_ref<'a>(p: *const MccsPlacement) -> Result<&'a PlacementVector, MccsStatus> {
    // SAFETY: non-null handles come from mccs_optimal_placement or
    // mccs_placement_new and are live.
    unsafe { p.as_ref() }.map(|p| &p.0).ok_or_else(|| null("placement"))
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mccs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mccs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an instance with cache size `m_num / m_den` files.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn mccs_instance_new(
    files: usize,
    users: usize,
    m_num: i64,
    m_den: i64,
    out: *mut *mut MccsInstance,
) -> MccsStatus {
    guard(|| {
        if m_den == 0 {
            set_error("cache size denominator is zero");
            return Err(MccsStatus::InvalidArgument);
        }
        let m = Rational::new(m_num.into(), m_den.into());
        let inst = ProblemInstance::new(files, users, m).map_err(fail)?;
        unsafe { write_out(out, Box::into_raw(Box::new(MccsInstance(inst)))) }
    })
}

/// Like [`mccs_instance_new`] with the cache size as text (`"3/2"`, `"0.25"`).
///
/// # Safety
/// `m` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mccs_instance_parse(
    files: usize,
    users: usize,
    m: *const c_char,
    out: *mut *mut MccsInstance,
) -> MccsStatus {
    guard(|| {
        if m.is_null() {
            return Err(null("cache size string"));
        }
        // SAFETY: caller guarantees a NUL-terminated string.
        let text = unsafe { CStr::from_ptr(m) }.to_str().map_err(|_| {
            set_error("cache size is not UTF-8");
            MccsStatus::InvalidArgument
        })?;
        let m = parse_rational(text).map_err(fail)?;
        let inst = ProblemInstance::new(files, users, m).map_err(fail)?;
        unsafe { write_out(out, Box::into_raw(Box::new(MccsInstance(inst)))) }
    })
}

/// # Safety
/// `inst` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mccs_instance_free(inst: *mut MccsInstance) {
    if !inst.is_null() {
        // SAFETY: handle was produced by Box::into_raw.
        drop(unsafe { Box::from_raw(inst) });
    }
}

/// Closed-form optimal placement for `inst`.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mccs_optimal_placement(inst: *const MccsInstance, out: *mut *mut MccsPlacement) -> MccsStatus {
    guard(|| {
        let inst = unsafe { instance_ref(inst) }?;
        let a = mccs::optimal_placement(inst);
        unsafe { write_out(out, Box::into_raw(Box::new(MccsPlacement(a)))) }
    })
}

/// Builds a placement from `len` fractions.
///
/// # Safety
/// `entries` must point to `len` readable fractions; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mccs_placement_new(
    entries: *const MccsFraction,
    len: usize,
    out: *mut *mut MccsPlacement,
) -> MccsStatus {
    guard(|| {
        if entries.is_null() {
            return Err(null("entries"));
        }
        // SAFETY: caller guarantees `len` readable entries.
        let slice = unsafe { std::slice::from_raw_parts(entries, len) };
        if slice.iter().any(|f| f.den == 0) {
            set_error("placement entry has a zero denominator");
            return Err(MccsStatus::InvalidArgument);
        }
        let a = slice.iter().map(|f| Rational::new(f.num.into(), f.den.into())).collect();
        unsafe { write_out(out, Box::into_raw(Box::new(MccsPlacement(a)))) }
    })
}

/// # Safety
/// `p` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mccs_placement_free(p: *mut MccsPlacement) {
    if !p.is_null() {
        // SAFETY: handle was produced by Box::into_raw.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Number of entries (`K + 1`), or 0 for NULL.
///
/// # Safety
/// `p` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mccs_placement_len(p: *const MccsPlacement) -> usize {
    unsafe { p.as_ref() }.map_or(0, |p| p.0.len())
}

/// Entry `a_level`.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mccs_placement_entry(p: *const MccsPlacement, level: usize, out: *mut MccsFraction) -> MccsStatus {
    guard(|| {
        let a = unsafe { placement_ref(p) }?;
        if level >= a.len() {
            set_error(format!("level {level} is out of range for {} entries", a.len()));
            return Err(MccsStatus::InvalidArgument);
        }
        let f = fraction(&a.entries()[level])?;
        unsafe { write_out(out, f) }
    })
}

/// Exact expected rate of `p` under uniformly random demands.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mccs_expected_rate(
    inst: *const MccsInstance,
    p: *const MccsPlacement,
    out: *mut MccsFraction,
) -> MccsStatus {
    guard(|| {
        let (inst, a) = unsafe { (instance_ref(inst)?, placement_ref(p)?) };
        let r = mccs::expected_rate(inst, a).map_err(fail)?;
        unsafe { write_out(out, fraction(&r)?) }
    })
}

/// Rate for any demand with `distinct` different files.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mccs_per_demand_rate(
    inst: *const MccsInstance,
    p: *const MccsPlacement,
    distinct: usize,
    out: *mut MccsFraction,
) -> MccsStatus {
    guard(|| {
        let (inst, a) = unsafe { (instance_ref(inst)?, placement_ref(p)?) };
        let r = mccs::per_demand_rate(inst, a, distinct).map_err(fail)?;
        unsafe { write_out(out, fraction(&r)?) }
    })
}

/// Worst-case rate with `min(N, K)` distinct requests.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mccs_peak_rate(
    inst: *const MccsInstance,
    p: *const MccsPlacement,
    out: *mut MccsFraction,
) -> MccsStatus {
    guard(|| {
        let (inst, a) = unsafe { (instance_ref(inst)?, placement_ref(p)?) };
        let r = mccs::peak_rate_mccs(inst, a).map_err(fail)?;
        unsafe { write_out(out, fraction(&r)?) }
    })
}

/// Minimum expected rate over all placements.
///
/// # Safety
/// `inst` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mccs_minimum_expected_rate(inst: *const MccsInstance, out: *mut MccsFraction) -> MccsStatus {
    guard(|| {
        let inst = unsafe { instance_ref(inst) }?;
        unsafe { write_out(out, fraction(&mccs::minimum_expected_rate(inst))?) }
    })
}

/// Minimum expected rate as a `"p/q"` string; free with
/// [`mccs_string_free`]. Returns NULL on error.
///
/// # Safety
/// `inst` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn mccs_minimum_expected_rate_string(inst: *const MccsInstance) -> *mut c_char {
    let Ok(inst) = (unsafe { instance_ref(inst) }) else {
        return ptr::null_mut();
    };
    CString::new(to_fraction(&mccs::minimum_expected_rate(inst))).map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mccs_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: `s` came from CString::into_raw.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Solves the placement linear program exactly and reports whether its
/// optimum equals the closed-form value.
///
/// # Safety
/// `inst` must be live; `out_equal` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mccs_verify_theorem(inst: *const MccsInstance, out_equal: *mut bool) -> MccsStatus {
    guard(|| {
        let inst = unsafe { instance_ref(inst) }?;
        unsafe { write_out(out_equal, verify_theorem(inst).values_equal) }
    })
}

/// Simulates coded delivery of `demand` (1-based file indices, `users`
/// entries) under the optimal placement with random contents from `seed`.
/// Writes the delivered load and whether every user decoded its file.
///
/// # Safety
/// `inst` must be live; `demand` must point to `users` readable values;
/// outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mccs_simulate(
    inst: *const MccsInstance,
    demand: *const usize,
    users: usize,
    seed: u64,
    out_load: *mut MccsFraction,
    out_all_decoded: *mut bool,
) -> MccsStatus {
    guard(|| {
        let inst = unsafe { instance_ref(inst) }?;
        if demand.is_null() {
            return Err(null("demand"));
        }
        // SAFETY: caller guarantees `users` readable entries.
        let entries = unsafe { std::slice::from_raw_parts(demand, users) }.to_vec();
        let d = DemandVector::new(inst.files(), entries).map_err(fail)?;
        if d.users() != inst.users() {
            set_error(format!("demand has {} entries but K = {}", d.users(), inst.users()));
            return Err(MccsStatus::InvalidArgument);
        }
        let a = mccs::optimal_placement(inst);
        let f = choose_file_size(&a).map_err(fail)?;
        let (store, caches) = partition_and_cache(inst, &a, f, PayloadSource::Random(seed)).map_err(fail)?;
        let sim = simulate_demand(inst, &a, &d, &store, &caches).map_err(fail)?;
        let all = sim.all_decoded(&store);
        unsafe {
            write_out(out_load, fraction(&sim.load)?)?;
            write_out(out_all_decoded, all)
        }
    })
}
