//! C interface. Objects cross the boundary as opaque handles owned by the
//! caller and released with the matching `*_free`. Every fallible call
//! returns an [`NcxStatus`]; the message for the most recent failure on the
//! calling thread is available from [`ncx_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use ncx_core::harness::{gen_instance, split_instance, Instance, InstanceSpec, Kind};
use ncx_core::matrix::{MatrixC, C64};
use ncx_core::seqnorm::{column_norm, row_norm, triple_norm_solve, OpSequence, SolveOptions};
use ncx_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// A coefficient or lacunarity hypothesis fails.
    Hypothesis = 3,
    Numerical = 4,
    Serialization = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcxKind {
    Khintchine = 0,
    Paley1 = 1,
    Paley2 = 2,
    Steinhaus = 3,
}

impl From<NcxKind> for Kind {
    fn from(k: NcxKind) -> Kind {
        match k {
            NcxKind::Khintchine => Kind::Khintchine,
            NcxKind::Paley1 => Kind::Paley1,
            NcxKind::Paley2 => Kind::Paley2,
            NcxKind::Steinhaus => Kind::Steinhaus,
        }
    }
}

/// Finite sequence of square complex matrices.
pub struct NcxSequence(OpSequence);

/// Generated test function with its instance description.
pub struct NcxInstance(Instance);

/// Explicit splitting of a coefficient sequence.
pub struct NcxSplitting(ncx_core::construct::Splitting);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NcxSplitSummary {
    pub l1_norm: f64,
    pub column_norm_a: f64,
    pub row_norm_b: f64,
    pub splitting_value: f64,
    pub reconstruction_residual: f64,
    /// Number of failed invariant checks, structural ones included.
    pub violations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NcxStatus {
    match e {
        Error::Hypothesis { .. } | Error::Lacunarity(_) => NcxStatus::Hypothesis,
        Error::Numerical(_) => NcxStatus::Numerical,
        Error::Json(_) | Error::Io(_) => NcxStatus::Serialization,
        _ => NcxStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), NcxStatus> + UnwindSafe>(f: F) -> NcxStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(f) {
        Ok(Ok(())) => NcxStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            NcxStatus::Panic
        }
    }
}

fn fail(e: Error) -> NcxStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> NcxStatus {
    set_error(format!("{what} is null"));
    NcxStatus::NullPointer
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, NcxStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut T, value: T, what: &str) -> Result<(), NcxStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ncx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn ncx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a sequence of `len` matrices of size `dim × dim` from interleaved
/// (re, im) pairs, row-major within each matrix: `2·len·dim²` doubles.
///
/// # Safety
/// `entries` must point to that many doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncx_sequence_new(
    dim: usize,
    len: usize,
    entries: *const f64,
    out: *mut *mut NcxSequence,
) -> NcxStatus {
    guard(|| {
        if entries.is_null() && len > 0 {
            return Err(null("entries"));
        }
        let per = dim.checked_mul(dim).ok_or(NcxStatus::InvalidArgument)?;
        let total = per.checked_mul(len).and_then(|n| n.checked_mul(2)).ok_or(NcxStatus::InvalidArgument)?;
        let raw = if total == 0 { &[][..] } else { std::slice::from_raw_parts(entries, total) };
        let items = raw
            .chunks(2 * per.max(1))
            .map(|m| {
                let zs: Vec<C64> = m.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
                MatrixC::from_row_major(dim, &zs)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(fail)?;
        let seq = OpSequence::new(dim, items).map_err(fail)?;
        store(out, Box::into_raw(Box::new(NcxSequence(seq))), "out")
    })
}

/// # Safety
/// `seq` must be null or a handle from `ncx_sequence_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ncx_sequence_free(seq: *mut NcxSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// `‖(Σ c_j* c_j)^{1/2}‖₁`.
///
/// # Safety
/// `seq` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ncx_column_norm(seq: *const NcxSequence, out: *mut f64) -> NcxStatus {
    guard(|| {
        let v = column_norm(&deref(seq, "seq")?.0).map_err(fail)?;
        store(out, v, "out")
    })
}

/// `‖(Σ c_j c_j*)^{1/2}‖₁`.
///
/// # Safety
/// `seq` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ncx_row_norm(seq: *const NcxSequence, out: *mut f64) -> NcxStatus {
    guard(|| {
        let v = row_norm(&deref(seq, "seq")?.0).map_err(fail)?;
        store(out, v, "out")
    })
}

/// Optimized splitting norm. `value` is attained by an explicit splitting and
/// `dual_lower` is a certified lower bound. A nonpositive `tolerance` or a
/// zero `max_iter` selects the default.
///
/// # Safety
/// `seq` must be a live handle; `value` and `dual_lower` writable.
#[no_mangle]
pub unsafe extern "C" fn ncx_splitting_norm(
    seq: *const NcxSequence,
    tolerance: f64,
    max_iter: usize,
    value: *mut f64,
    dual_lower: *mut f64,
) -> NcxStatus {
    guard(|| {
        let c = &deref(seq, "seq")?.0;
        let mut opts = SolveOptions::default();
        if tolerance > 0.0 {
            opts.tolerance = tolerance;
        }
        if max_iter > 0 {
            opts.max_iter = max_iter;
        }
        let cert = triple_norm_solve(c, &opts).map_err(fail)?;
        store(value, cert.value, "value")?;
        store(dual_lower, cert.dual_lower, "dual_lower")
    })
}

/// Generates a random instance with default resolution and grid size.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncx_instance_generate(
    kind: NcxKind,
    dim: usize,
    terms: usize,
    seed: u64,
    out: *mut *mut NcxInstance,
) -> NcxStatus {
    guard(|| {
        let inst = gen_instance(&InstanceSpec::new(kind.into(), dim, terms, seed)).map_err(fail)?;
        store(out, Box::into_raw(Box::new(NcxInstance(inst))), "out")
    })
}

/// Parses an instance from the JSON written by `ncx gen`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ncx_instance_from_json(json: *const c_char, out: *mut *mut NcxInstance) -> NcxStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| {
            set_error(e.to_string());
            NcxStatus::InvalidArgument
        })?;
        let inst: Instance = serde_json::from_str(text).map_err(|e| fail(e.into()))?;
        store(out, Box::into_raw(Box::new(NcxInstance(inst))), "out")
    })
}

/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ncx_instance_free(inst: *mut NcxInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Splits the instance with the construction matching its kind.
///
/// # Safety
/// `inst` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ncx_instance_split(inst: *const NcxInstance, out: *mut *mut NcxSplitting) -> NcxStatus {
    guard(|| {
        let s = split_instance(&deref(inst, "inst")?.0).map_err(fail)?;
        store(out, Box::into_raw(Box::new(NcxSplitting(s))), "out")
    })
}

/// # Safety
/// `split` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ncx_splitting_free(split: *mut NcxSplitting) {
    if !split.is_null() {
        drop(Box::from_raw(split));
    }
}

/// # Safety
/// `split` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ncx_splitting_summary(split: *const NcxSplitting, out: *mut NcxSplitSummary) -> NcxStatus {
    guard(|| {
        let s = &deref(split, "split")?.0;
        let d = &s.diagnostics;
        let summary = NcxSplitSummary {
            l1_norm: d.l1_norm,
            column_norm_a: d.column_norm_a,
            row_norm_b: d.row_norm_b,
            splitting_value: d.splitting_value,
            reconstruction_residual: d.reconstruction_residual,
            violations: s.violations().len() + s.structural_violations().len(),
        };
        store(out, summary, "out")
    })
}

/// Serializes the splitting as JSON. Release the string with `ncx_string_free`.
///
/// # Safety
/// `split` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ncx_splitting_to_json(split: *const NcxSplitting, out: *mut *mut c_char) -> NcxStatus {
    guard(|| {
        let text = serde_json::to_string(&deref(split, "split")?.0).map_err(|e| fail(e.into()))?;
        let c = CString::new(text).map_err(|e| {
            set_error(e.to_string());
            NcxStatus::Serialization
        })?;
        store(out, c.into_raw(), "out")
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ncx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
