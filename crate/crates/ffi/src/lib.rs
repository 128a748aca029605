//! C interface to `hhtx`.
//!
//! Every fallible function returns an [`HhtxStatus`]; on failure a message
//! is available from [`hhtx_last_error`] on the calling thread. Outbreaks
//! are opaque handles created by [`hhtx_outbreak_new`] and released with
//! [`hhtx_outbreak_free`]. Strings returned through out-pointers belong to
//! the caller and must be released with [`hhtx_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use hhtx::arrangements::{count_arrangements, ArrangementSpec};
use hhtx::asymptotic::{asymptotic_p_value, asymptotic_test};
use hhtx::likelihood::{lrt_statistic, Alternative};
use hhtx::model::{cpi, sar, Outbreak, PeriodDistribution, Population, StudyConfig};
use hhtx::power::eval_power_formula;
use hhtx::resampling::{
    permutation_test, Admissibility, PermutationOptions, ResampleMethod, TestMethod, TestResult,
};
use hhtx::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HhtxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The test could not be carried out on these data.
    TestFailure = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HhtxMethod {
    Simple = 0,
    Refined = 1,
    Asymptotic = 2,
    Degenerate = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HhtxAlternative {
    /// Free `b`, `p1` and `p2`.
    Full = 0,
    /// `p2` fixed at zero.
    HouseholdOnly = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HhtxAdmissibility {
    NullOnly = 0,
    FullOnly = 1,
    Both = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HhtxTestResult {
    /// NaN when the null model cannot be fitted.
    pub lambda: f64,
    pub p_value: f64,
    pub method: HhtxMethod,
    pub admissibility: HhtxAdmissibility,
    pub replicates: usize,
    pub exceedances: usize,
    pub failed_replicates: usize,
    /// Unrestricted estimates; NaN when unavailable.
    pub b: f64,
    pub p1: f64,
    pub p2: f64,
}

/// Opaque outbreak handle.
pub struct HhtxOutbreak {
    inner: Outbreak,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: HhtxStatus, message: impl Into<String>) -> HhtxStatus {
    set_error(message);
    status
}

fn from_error(e: Error) -> HhtxStatus {
    let status = match e {
        Error::NullInadmissible
        | Error::FitFailed(_)
        | Error::ReplicateFailures { .. }
        | Error::InfeasibleArrangement { .. }
        | Error::NoInfections(_) => HhtxStatus::TestFailure,
        _ => HhtxStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), HhtxStatus>) -> HhtxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HhtxStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(HhtxStatus::Panic, "internal panic"),
    }
}

unsafe fn slice_arg<'a, T>(data: *const T, len: usize, name: &str) -> Result<&'a [T], HhtxStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(fail(HhtxStatus::NullPointer, format!("`{name}` is null")));
    }
    // SAFETY: caller guarantees `data` points to `len` readable elements.
    Ok(unsafe { slice::from_raw_parts(data, len) })
}

unsafe fn distribution(min_days: u32, pmf: *const f64, len: usize, name: &str) -> Result<PeriodDistribution, HhtxStatus> {
    let pmf = unsafe { slice_arg(pmf, len, name)? };
    if pmf.is_empty() {
        return Err(fail(HhtxStatus::InvalidArgument, format!("`{name}` is empty")));
    }
    PeriodDistribution::new(min_days, min_days + len as u32 - 1, pmf.to_vec()).map_err(from_error)
}

unsafe fn outbreak_ref<'a>(outbreak: *const HhtxOutbreak) -> Result<&'a Outbreak, HhtxStatus> {
    if outbreak.is_null() {
        return Err(fail(HhtxStatus::NullPointer, "outbreak handle is null"));
    }
    // SAFETY: non-null handles come from `hhtx_outbreak_new`.
    Ok(unsafe { &(*outbreak).inner })
}

fn write_out<T>(out: *mut T, value: T) -> Result<(), HhtxStatus> {
    if out.is_null() {
        return Err(fail(HhtxStatus::NullPointer, "output pointer is null"));
    }
    // SAFETY: checked non-null; caller provides writable storage.
    unsafe { out.write(value) };
    Ok(())
}

fn alternative(a: HhtxAlternative) -> Alternative {
    match a {
        HhtxAlternative::Full => Alternative::Full,
        HhtxAlternative::HouseholdOnly => Alternative::HouseholdOnly,
    }
}

fn convert(r: &TestResult) -> HhtxTestResult {
    let (b, p1, p2) = r.full_fit.map_or((f64::NAN, f64::NAN, f64::NAN), |f| (f.params.b, f.params.p1, f.params.p2));
    HhtxTestResult {
        lambda: r.lambda_obs.unwrap_or(f64::NAN),
        p_value: r.p_value,
        method: match r.method {
            TestMethod::Simple => HhtxMethod::Simple,
            TestMethod::Refined => HhtxMethod::Refined,
            TestMethod::Asymptotic => HhtxMethod::Asymptotic,
            TestMethod::Degenerate => HhtxMethod::Degenerate,
        },
        admissibility: match r.admissibility {
            Admissibility::NullOnly => HhtxAdmissibility::NullOnly,
            Admissibility::FullOnly => HhtxAdmissibility::FullOnly,
            Admissibility::Both => HhtxAdmissibility::Both,
        },
        replicates: r.replicates,
        exceedances: r.exceedances,
        failed_replicates: r.failed_replicates,
        b,
        p1,
        p2,
    }
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hhtx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hhtx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build an outbreak.
///
/// `household_of[i]` is person `i`'s household label; labels must cover
/// `0..H` without gaps. `onsets[i]` is the onset day, or 0 for never
/// symptomatic. The latent and infectious distributions start at `*_min`
/// days with one probability per day.
///
/// # Safety
/// Array arguments must point to the stated number of elements; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn hhtx_outbreak_new(
    household_of: *const usize,
    onsets: *const u32,
    n_persons: usize,
    exposure_days: u32,
    horizon: u32,
    latent_min: u32,
    latent_pmf: *const f64,
    latent_len: usize,
    infectious_min: u32,
    infectious_pmf: *const f64,
    infectious_len: usize,
    censor_uninfected: c_int,
    out: *mut *mut HhtxOutbreak,
) -> HhtxStatus {
    guard(|| {
        let labels = unsafe { slice_arg(household_of, n_persons, "household_of")? };
        let days = unsafe { slice_arg(onsets, n_persons, "onsets")? };
        let latent = unsafe { distribution(latent_min, latent_pmf, latent_len, "latent_pmf")? };
        let infectious = unsafe { distribution(infectious_min, infectious_pmf, infectious_len, "infectious_pmf")? };
        let n_households = labels.iter().max().map_or(0, |m| m + 1);
        let mut households = vec![Vec::new(); n_households];
        for (person, &h) in labels.iter().enumerate() {
            households[h].push(person);
        }
        let population = Population::from_households(households).map_err(from_error)?;
        let config = StudyConfig::new(exposure_days, horizon, latent, infectious)
            .map_err(from_error)?
            .with_censoring(censor_uninfected != 0);
        let onsets = days.iter().map(|&d| (d > 0).then_some(d)).collect();
        let inner = Outbreak::new(Arc::new(population), Arc::new(config), onsets).map_err(from_error)?;
        write_out(out, Box::into_raw(Box::new(HhtxOutbreak { inner })))
    })
}

/// Release an outbreak. NULL is ignored.
///
/// # Safety
/// `outbreak` must come from [`hhtx_outbreak_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn hhtx_outbreak_free(outbreak: *mut HhtxOutbreak) {
    if !outbreak.is_null() {
        drop(unsafe { Box::from_raw(outbreak) });
    }
}

/// # Safety
/// `outbreak` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hhtx_outbreak_num_cases(outbreak: *const HhtxOutbreak, out: *mut usize) -> HhtxStatus {
    guard(|| write_out(out, unsafe { outbreak_ref(outbreak)? }.num_cases()))
}

/// Likelihood ratio statistic for no person-to-person transmission.
///
/// # Safety
/// `outbreak` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hhtx_lrt(
    outbreak: *const HhtxOutbreak,
    alt: HhtxAlternative,
    out: *mut f64,
) -> HhtxStatus {
    guard(|| {
        let ob = unsafe { outbreak_ref(outbreak)? };
        let lrt = lrt_statistic(ob, alternative(alt)).map_err(from_error)?;
        write_out(out, lrt.lambda)
    })
}

/// Simple or refined permutation test. `method` must be `Simple` or
/// `Refined`; `add_one` selects the (1 + k) / (1 + M) p-value.
///
/// # Safety
/// `outbreak` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hhtx_permutation_test(
    outbreak: *const HhtxOutbreak,
    method: HhtxMethod,
    replicates: usize,
    seed: u64,
    alt: HhtxAlternative,
    add_one: c_int,
    out: *mut HhtxTestResult,
) -> HhtxStatus {
    guard(|| {
        let ob = unsafe { outbreak_ref(outbreak)? };
        let method = match method {
            HhtxMethod::Simple => ResampleMethod::Simple,
            HhtxMethod::Refined => ResampleMethod::Refined,
            _ => return Err(fail(HhtxStatus::InvalidArgument, "method must be simple or refined")),
        };
        let mut options = PermutationOptions::new(method, replicates, seed).with_alternative(alternative(alt));
        options.add_one = add_one != 0;
        let result = permutation_test(ob, &options).map_err(from_error)?;
        write_out(out, convert(&result))
    })
}

/// Two-parameter test on data truncated at day S, referred to the
/// `½χ²₀ + ½χ²₁` mixture.
///
/// # Safety
/// `outbreak` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hhtx_asymptotic_test(outbreak: *const HhtxOutbreak, out: *mut HhtxTestResult) -> HhtxStatus {
    guard(|| {
        let ob = unsafe { outbreak_ref(outbreak)? };
        let result = asymptotic_test(ob).map_err(from_error)?;
        write_out(out, convert(&result))
    })
}

/// Upper tail of `½χ²₀ + ½χ²₁`; 1 at `lambda <= 0`.
#[no_mangle]
pub extern "C" fn hhtx_asymptotic_p_value(lambda: f64) -> f64 {
    asymptotic_p_value(lambda)
}

/// Community probability of infection `1 - (1 - b)^S`.
#[no_mangle]
pub extern "C" fn hhtx_cpi(b: f64, exposure_days: u32) -> f64 {
    cpi(b, exposure_days)
}

/// Secondary attack rate for daily probability `p`.
///
/// # Safety
/// `pmf` must point to `len` probabilities and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn hhtx_sar(
    p: f64,
    infectious_min: u32,
    pmf: *const f64,
    len: usize,
    out: *mut f64,
) -> HhtxStatus {
    guard(|| {
        let dist = unsafe { distribution(infectious_min, pmf, len, "pmf")? };
        write_out(out, sar(p, &dist))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hhtx_power_formula(n_index: f64, n_total: f64, out: *mut f64) -> HhtxStatus {
    guard(|| write_out(out, eval_power_formula(n_index, n_total).map_err(from_error)?))
}

/// Exact `W(n, m, v)` as a decimal string.
///
/// # Safety
/// `out` must be writable; release the string with [`hhtx_string_free`].
#[no_mangle]
pub unsafe extern "C" fn hhtx_count_arrangements(n: u64, m: usize, v: u64, out: *mut *mut c_char) -> HhtxStatus {
    guard(|| {
        let count = count_arrangements(ArrangementSpec::new(n, m, v)).to_string();
        let s = CString::new(count).expect("digits contain no NUL");
        write_out(out, s.into_raw())
    })
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn hhtx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Copy of the last error, for Rust callers and tests.
pub fn last_error_message() -> Option<String> {
    let p = hhtx_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}
