//! C ABI for the `povmc` core crate.
//!
//! Objects cross the boundary as opaque handles built from `povmc/1` JSON
//! documents. Every fallible function returns a [`PovmcStatus`]; on failure
//! [`povmc_last_error_message`] describes the error on the calling thread.
//! Strings returned through `char **` out-parameters are owned by the
//! caller and must be released with [`povmc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use povmc::compat::{self, CompatOptions, Depolarizing};
use povmc::compress::kraus_to_choi_sn_witness;
use povmc::cv::{incompressibility_scan, ScanConfig};
use povmc::objects::{self, Assemblage, DensityState, KrausChannel, MeasurementSet, Validate};
use povmc::{json, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PovmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Json = 3,
    Validation = 4,
    Dimension = 5,
    CapExceeded = 6,
    Solver = 7,
    Domain = 8,
    Io = 9,
    Panic = 10,
}

impl From<&Error> for PovmcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Dimension(_) => PovmcStatus::Dimension,
            Error::Validation(_) | Error::Report(_) => PovmcStatus::Validation,
            Error::Domain(_) => PovmcStatus::Domain,
            Error::CapExceeded { .. } => PovmcStatus::CapExceeded,
            Error::Solver(_) => PovmcStatus::Solver,
            Error::Json(_) => PovmcStatus::Json,
            Error::Io(_) => PovmcStatus::Io,
        }
    }
}

/// Opaque measurement set.
pub struct PovmcMeasurementSet(MeasurementSet);
/// Opaque assemblage.
pub struct PovmcAssemblage(Assemblage);
/// Opaque Kraus channel.
pub struct PovmcKrausChannel(KrausChannel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(PovmcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(PovmcStatus::from(&e), e.to_string())
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PovmcStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PovmcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PovmcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PovmcStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(PovmcStatus::InvalidUtf8, format!("{what} is not UTF-8: {e}")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON output has no NUL bytes").into_raw()
}

fn parse<T: serde::de::DeserializeOwned + Validate>(text: &str, kind: &str) -> Result<T, Failure> {
    let v: T = json::from_document(text, kind)?;
    v.validate().into_result()?;
    Ok(v)
}

fn document<T: serde::Serialize>(kind: &str, data: &T) -> Result<String, Failure> {
    Ok(json::to_pretty(&json::to_document(kind, data)?)?)
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn povmc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn povmc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn povmc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a `measurement_set` document.
///
/// # Safety
/// `json_text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn povmc_measurement_set_from_json(json_text: *const c_char, out: *mut *mut PovmcMeasurementSet) -> PovmcStatus {
    guard(|| {
        let ms: MeasurementSet = parse(read_str(json_text, "json_text")?, "measurement_set")?;
        write(out, Box::into_raw(Box::new(PovmcMeasurementSet(ms))), "out")
    })
}

/// # Safety
/// `ms` must come from this library and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn povmc_measurement_set_free(ms: *mut PovmcMeasurementSet) {
    if !ms.is_null() {
        drop(Box::from_raw(ms));
    }
}

/// # Safety
/// `ms` must be a live handle; `out_dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn povmc_measurement_set_dim(ms: *const PovmcMeasurementSet, out_dim: *mut usize) -> PovmcStatus {
    guard(|| write(out_dim, deref(ms, "ms")?.0.dim(), "out_dim"))
}

/// Exact joint-measurability test. Writes 1 for compatible, 0 otherwise.
///
/// # Safety
/// `ms` must be a live handle; `out_compatible` must be writable.
#[no_mangle]
pub unsafe extern "C" fn povmc_jm_test(ms: *const PovmcMeasurementSet, cap: usize, out_compatible: *mut c_int) -> PovmcStatus {
    guard(|| {
        let opts = CompatOptions { cap, ..CompatOptions::default() };
        let r = compat::jm_test_with(&deref(ms, "ms")?.0, opts)?;
        write(out_compatible, c_int::from(r.is_compatible()), "out_compatible")
    })
}

/// Depolarizing joint-measurability robustness `η*`.
///
/// # Safety
/// `ms` must be a live handle; `out_eta` must be writable.
#[no_mangle]
pub unsafe extern "C" fn povmc_jm_robustness(ms: *const PovmcMeasurementSet, cap: usize, out_eta: *mut f64) -> PovmcStatus {
    guard(|| {
        let opts = CompatOptions { cap, ..CompatOptions::default() };
        let r = compat::jm_robustness(&deref(ms, "ms")?.0, &Depolarizing, opts)?;
        write(out_eta, r.eta_star, "out_eta")
    })
}

/// Parses an `assemblage` document.
///
/// # Safety
/// `json_text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn povmc_assemblage_from_json(json_text: *const c_char, out: *mut *mut PovmcAssemblage) -> PovmcStatus {
    guard(|| {
        let asm: Assemblage = parse(read_str(json_text, "json_text")?, "assemblage")?;
        write(out, Box::into_raw(Box::new(PovmcAssemblage(asm))), "out")
    })
}

/// # Safety
/// `assemblage` must come from this library and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn povmc_assemblage_free(assemblage: *mut PovmcAssemblage) {
    if !assemblage.is_null() {
        drop(Box::from_raw(assemblage));
    }
}

/// `σ_{a|x} = σ^{1/2} M_{a|x}^T σ^{1/2}`. `sigma_json` is a `density_state`
/// document, or NULL for the maximally mixed state.
///
/// # Safety
/// `ms` must be a live handle, `sigma_json` NULL or NUL-terminated, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn povmc_sandwich(
    ms: *const PovmcMeasurementSet,
    sigma_json: *const c_char,
    out: *mut *mut PovmcAssemblage,
) -> PovmcStatus {
    guard(|| {
        let ms = &deref(ms, "ms")?.0;
        let sigma = if sigma_json.is_null() {
            DensityState::maximally_mixed(ms.dim())
        } else {
            parse(read_str(sigma_json, "sigma_json")?, "density_state")?
        };
        let asm = objects::sandwich(&sigma, ms)?;
        write(out, Box::into_raw(Box::new(PovmcAssemblage(asm))), "out")
    })
}

/// Exact LHS test. Writes 1 for unsteerable, 0 for steerable.
///
/// # Safety
/// `assemblage` must be a live handle; `out_unsteerable` must be writable.
#[no_mangle]
pub unsafe extern "C" fn povmc_lhs_test(assemblage: *const PovmcAssemblage, cap: usize, out_unsteerable: *mut c_int) -> PovmcStatus {
    guard(|| {
        let opts = CompatOptions { cap, ..CompatOptions::default() };
        let r = compat::lhs_test_with(&deref(assemblage, "assemblage")?.0, opts)?;
        let unsteerable = matches!(r, compat::LhsOutcome::Unsteerable { .. });
        write(out_unsteerable, c_int::from(unsteerable), "out_unsteerable")
    })
}

/// Steering robustness under mixing with `tr(σ_{a|x}) σ`.
///
/// # Safety
/// `assemblage` must be a live handle; `out_eta` must be writable.
#[no_mangle]
pub unsafe extern "C" fn povmc_lhs_robustness(assemblage: *const PovmcAssemblage, cap: usize, out_eta: *mut f64) -> PovmcStatus {
    guard(|| {
        let opts = CompatOptions { cap, ..CompatOptions::default() };
        let r = compat::lhs_robustness(&deref(assemblage, "assemblage")?.0, opts)?;
        write(out_eta, r.eta_star, "out_eta")
    })
}

/// Parses a `kraus_channel` document.
///
/// # Safety
/// `json_text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn povmc_kraus_channel_from_json(json_text: *const c_char, out: *mut *mut PovmcKrausChannel) -> PovmcStatus {
    guard(|| {
        let c: KrausChannel = parse(read_str(json_text, "json_text")?, "kraus_channel")?;
        write(out, Box::into_raw(Box::new(PovmcKrausChannel(c))), "out")
    })
}

/// # Safety
/// `c` must come from this library and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn povmc_kraus_channel_free(c: *mut PovmcKrausChannel) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Pure decomposition of the channel's normalized Choi state as a
/// `pure_decomposition` document, plus the Schmidt-number bound it
/// certifies.
///
/// # Safety
/// `c` must be a live handle; `out_json` and `out_sn_upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn povmc_choi_sn_witness_json(
    c: *const PovmcKrausChannel,
    out_json: *mut *mut c_char,
    out_sn_upper: *mut usize,
) -> PovmcStatus {
    guard(|| {
        let c = &deref(c, "c")?.0;
        let dec = kraus_to_choi_sn_witness(c)?;
        let bound = objects::sn_upper_from_decomposition(&objects::choi_of_channel(c).matrix, &dec)?;
        let text = document("pure_decomposition", &dec)?;
        write(out_sn_upper, bound, "out_sn_upper")?;
        write(out_json, to_c_string(text), "out_json")
    })
}

/// Runs the position/momentum scan. `config_json` is a `scan_config`
/// document or NULL for the default configuration; the result is a
/// `scan_table` document.
///
/// # Safety
/// `config_json` must be NULL or NUL-terminated; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn povmc_cvscan_json(config_json: *const c_char, out_json: *mut *mut c_char) -> PovmcStatus {
    guard(|| {
        let cfg: ScanConfig = if config_json.is_null() {
            ScanConfig::default()
        } else {
            json::from_document(read_str(config_json, "config_json")?, "scan_config")?
        };
        let table = incompressibility_scan(&cfg)?;
        let text = document("scan_table", &table)?;
        write(out_json, to_c_string(text), "out_json")
    })
}
