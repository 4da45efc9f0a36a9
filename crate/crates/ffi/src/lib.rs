//! C interface to trotterlab.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `tl_*_free`. Every fallible call returns a [`TlStatus`]; on
//! failure [`tl_last_error`] describes what went wrong on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use trotterlab::charges::{assemble, ChargeDocument, ChargeSpec, PauliPolynomial, Variant};
use trotterlab::circuit::{build_step, InitialStateSpec};
use trotterlab::cli::{run_decay, DecayTable, ExperimentConfig, RunError};
use trotterlab::sim::{exact_expectation, QuantumState, StateVector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Compute = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlVariant {
    Plus = 0,
    Minus = 1,
    Dif = 2,
}

impl From<TlVariant> for Variant {
    fn from(v: TlVariant) -> Self {
        match v {
            TlVariant::Plus => Variant::Plus,
            TlVariant::Minus => Variant::Minus,
            TlVariant::Dif => Variant::Dif,
        }
    }
}

/// Resolved experiment configuration.
pub struct TlConfig(ExperimentConfig);

/// An assembled conserved charge on a periodic chain.
pub struct TlCharge {
    spec: ChargeSpec,
    poly: PauliPolynomial,
}

/// Result table of a decay run.
pub struct TlDecay(DecayTable);

/// One row of a decay table. Absent values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TlDecayRow {
    pub d: usize,
    /// Index into the configured charge list.
    pub charge_index: usize,
    pub estimate: f64,
    pub s_q: f64,
    pub exact: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &RunError) -> TlStatus {
    match e {
        RunError::Config(_) | RunError::Json(_) | RunError::Parse { .. } | RunError::Charge(_) => {
            TlStatus::InvalidConfig
        }
        RunError::Io { .. } => TlStatus::Io,
        _ => TlStatus::Compute,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (TlStatus, String)>) -> TlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TlStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TlStatus::Panic
        }
    }
}

fn run_err(e: RunError) -> (TlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (TlStatus, String) {
    (TlStatus::NullPointer, "null pointer argument".into())
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, (TlStatus, String)> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|_| (TlStatus::InvalidArgument, "string is not valid UTF-8".into()))
}

fn into_c_string(s: String) -> Result<*mut c_char, (TlStatus, String)> {
    CString::new(s).map(CString::into_raw).map_err(|_| (TlStatus::Compute, "output contains NUL".into()))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `tl_*` call on the same thread.
#[no_mangle]
pub extern "C" fn tl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by a `tl_*` function, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a JSON configuration. `json` may be null for the defaults.
///
/// # Safety
/// `json` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_config_from_json(json: *const c_char, out: *mut *mut TlConfig) -> TlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let cfg = if json.is_null() {
            ExperimentConfig::default()
        } else {
            ExperimentConfig::from_json(read_str(json)?).map_err(run_err)?
        };
        *out = Box::into_raw(Box::new(TlConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle from [`tl_config_from_json`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_config_free(cfg: *mut TlConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Hex SHA-256 of the resolved configuration; free with [`tl_string_free`].
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_config_hash(cfg: *const TlConfig, out: *mut *mut c_char) -> TlStatus {
    guard(|| {
        let (Some(cfg), false) = (cfg.as_ref(), out.is_null()) else { return Err(null()) };
        *out = into_c_string(cfg.0.hash())?;
        Ok(())
    })
}

/// Overrides the seed of a configuration.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_config_set_seed(cfg: *mut TlConfig, seed: u64) -> TlStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(null)?;
        cfg.0.seed = seed;
        Ok(())
    })
}

/// Assembles the order-`order` charge of the given variant on `n_sites` sites.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_charge_new(
    order: usize,
    variant: TlVariant,
    n_sites: usize,
    out: *mut *mut TlCharge,
) -> TlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let spec =
            ChargeSpec::new(order, variant.into(), n_sites).map_err(|e| (TlStatus::InvalidArgument, e.to_string()))?;
        let poly = assemble(&spec).map_err(|e| (TlStatus::Compute, e.to_string()))?;
        *out = Box::into_raw(Box::new(TlCharge { spec, poly }));
        Ok(())
    })
}

/// # Safety
/// `q` must be null or a handle from [`tl_charge_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_charge_free(q: *mut TlCharge) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Number of Pauli terms in the charge.
///
/// # Safety
/// `q` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_charge_num_terms(q: *const TlCharge, out: *mut usize) -> TlStatus {
    guard(|| {
        let (Some(q), false) = (q.as_ref(), out.is_null()) else { return Err(null()) };
        *out = q.poly.len();
        Ok(())
    })
}

/// The charge as a JSON document; free with [`tl_string_free`].
///
/// # Safety
/// `q` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_charge_to_json(q: *const TlCharge, out: *mut *mut c_char) -> TlStatus {
    guard(|| {
        let (Some(q), false) = (q.as_ref(), out.is_null()) else { return Err(null()) };
        let doc = ChargeDocument::from_poly(&q.poly, q.spec.order, q.spec.variant);
        *out = into_c_string(doc.to_json().map_err(|e| (TlStatus::Compute, e.to_string()))?)?;
        Ok(())
    })
}

/// Noiseless `⟨Q⟩` after `depth` Trotter steps from a product state.
/// `bits` is a 0/1 string; `letters` (X/Y/Z per site) may be null for all `Z`.
///
/// # Safety
/// `q` must be a live handle, the strings NUL-terminated or null as stated,
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_charge_expectation(
    q: *const TlCharge,
    bits: *const c_char,
    letters: *const c_char,
    alpha: f64,
    depth: usize,
    out: *mut f64,
) -> TlStatus {
    guard(|| {
        let (Some(q), false) = (q.as_ref(), out.is_null()) else { return Err(null()) };
        let bits = read_str(bits)?;
        let letters = if letters.is_null() { "Z".repeat(bits.len()) } else { read_str(letters)?.to_string() };
        let bad = |e: String| (TlStatus::InvalidArgument, e);
        let init = InitialStateSpec::parse(bits, &letters).map_err(|e| bad(e.to_string()))?;
        if init.n_sites() != q.spec.n_sites {
            return Err(bad(format!("state has {} sites, charge has {}", init.n_sites(), q.spec.n_sites)));
        }
        let compute = |e: String| (TlStatus::Compute, e);
        let mut psi = StateVector::prepared(&init).map_err(|e| compute(e.to_string()))?;
        let step = build_step(q.spec.n_sites, alpha).map_err(|e| bad(e.to_string()))?;
        for _ in 0..depth {
            psi.apply_gates(&step);
        }
        *out = exact_expectation(&psi, &q.poly, alpha.tan()).map_err(|e| compute(e.to_string()))?;
        Ok(())
    })
}

/// Runs the decay experiment described by `cfg`.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_run_decay(cfg: *const TlConfig, out: *mut *mut TlDecay) -> TlStatus {
    guard(|| {
        let (Some(cfg), false) = (cfg.as_ref(), out.is_null()) else { return Err(null()) };
        let table = run_decay(&cfg.0).map_err(run_err)?;
        *out = Box::into_raw(Box::new(TlDecay(table)));
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a handle from [`tl_run_decay`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_decay_free(t: *mut TlDecay) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of rows (depths times charges).
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_decay_len(t: *const TlDecay, out: *mut usize) -> TlStatus {
    guard(|| {
        let (Some(t), false) = (t.as_ref(), out.is_null()) else { return Err(null()) };
        *out = t.0.rows.len();
        Ok(())
    })
}

/// Copies row `index` into `out`.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_decay_row(t: *const TlDecay, index: usize, out: *mut TlDecayRow) -> TlStatus {
    guard(|| {
        let (Some(t), false) = (t.as_ref(), out.is_null()) else { return Err(null()) };
        let rows = &t.0.rows;
        let r = rows
            .get(index)
            .ok_or_else(|| (TlStatus::InvalidArgument, format!("row {index} out of range ({} rows)", rows.len())))?;
        let charges = t.0.charges();
        *out = TlDecayRow {
            d: r.d,
            charge_index: charges.iter().position(|(c, _)| *c == r.charge).unwrap_or(0),
            estimate: r.estimate.unwrap_or(f64::NAN),
            s_q: r.s_q.unwrap_or(f64::NAN),
            exact: r.exact.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// The table as CSV; free with [`tl_string_free`].
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_decay_to_csv(t: *const TlDecay, out: *mut *mut c_char) -> TlStatus {
    guard(|| {
        let (Some(t), false) = (t.as_ref(), out.is_null()) else { return Err(null()) };
        *out = into_c_string(t.0.to_csv())?;
        Ok(())
    })
}
