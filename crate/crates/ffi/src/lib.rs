//! C ABI over `symchain`.
//!
//! Models and reports are opaque heap handles released with their `_free`
//! function. Every entry point returns a [`SymchainStatus`]; on failure a
//! message is available from [`symchain_last_error`] on the same thread.
//! Strings handed out by the library are NUL-terminated UTF-8 and must be
//! released with [`symchain_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use symchain::chain::{run_chain, ChainOptions, ChainReport, Termination, TruncateMode};
use symchain::expr::Rational;
use symchain::lattice::{build_schwinger, LatticeSpec, Scheme};
use symchain::model::{load_model, parse_model, save_model, FirstOrderModel, ModelError};
use symchain::oracle::{compare_spans, consistency_algorithm};
use symchain::report::{text_report, tree_report_string, Comparison, ReportInput};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymchainStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidModel = 4,
    IoError = 5,
    InvalidArgument = 6,
    ChainError = 7,
    OracleError = 8,
    OutOfRange = 9,
    NotAvailable = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymchainTermination {
    Nonsingular = 0,
    Exhausted = 1,
    MaxLevelReached = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymchainScheme {
    Central = 0,
    Forward = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymchainTruncate {
    FirstBlock = 0,
    Iterative = 1,
}

/// Chain options; obtain defaults from [`symchain_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SymchainOptions {
    pub max_level: u32,
    pub allow_truncation: bool,
    pub truncate: SymchainTruncate,
    pub seed: u64,
}

/// Opaque model handle.
pub struct SymchainModel {
    inner: FirstOrderModel,
}

/// Opaque chain report handle.
pub struct SymchainReport {
    inner: ChainReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(SymchainStatus, String);

impl Failure {
    fn new(status: SymchainStatus, msg: impl ToString) -> Self {
        Failure(status, msg.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let status = match e {
            ModelError::Parse { .. } | ModelError::Expression { .. } => SymchainStatus::ParseError,
            ModelError::Io(_) => SymchainStatus::IoError,
            _ => SymchainStatus::InvalidModel,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SymchainStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SymchainStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SymchainStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(SymchainStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(SymchainStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(SymchainStatus::NullPointer, format!("{what} is null")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(SymchainStatus::NullPointer, format!("{what} is null")))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior NUL").into_raw()
}

fn chain_options(o: Option<&SymchainOptions>) -> Result<ChainOptions, Failure> {
    let Some(o) = o else {
        return Ok(ChainOptions::default());
    };
    if o.max_level == 0 {
        return Err(Failure::new(SymchainStatus::InvalidArgument, "max_level must be at least 1"));
    }
    Ok(ChainOptions {
        max_level: o.max_level as usize,
        allow_truncation: o.allow_truncation,
        truncate: match o.truncate {
            SymchainTruncate::FirstBlock => TruncateMode::FirstBlock,
            SymchainTruncate::Iterative => TruncateMode::Iterative,
        },
        seed: o.seed,
    })
}

/// Default options: `max_level` 12, truncation on, first-block truncation.
#[no_mangle]
pub extern "C" fn symchain_options_default() -> SymchainOptions {
    let d = ChainOptions::default();
    SymchainOptions {
        max_level: d.max_level as u32,
        allow_truncation: d.allow_truncation,
        truncate: SymchainTruncate::FirstBlock,
        seed: d.seed,
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn symchain_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn symchain_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a model from text; `name` is used when the text has no `model`
/// line and may be null.
///
/// # Safety
/// `text` and `name` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn symchain_model_parse(
    text: *const c_char,
    name: *const c_char,
    out: *mut *mut SymchainModel,
) -> SymchainStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(text, "text")?;
        let name = if name.is_null() { "model" } else { str_arg(name, "name")? };
        let inner = parse_model(text, name)?;
        *out = Box::into_raw(Box::new(SymchainModel { inner }));
        Ok(())
    })
}

/// Loads a model file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn symchain_model_load(
    path: *const c_char,
    out: *mut *mut SymchainModel,
) -> SymchainStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let inner = load_model(path).map_err(|e| {
            let Failure(s, m) = Failure::from(e);
            Failure(s, format!("{path}: {m}"))
        })?;
        *out = Box::into_raw(Box::new(SymchainModel { inner }));
        Ok(())
    })
}

/// Builds the lattice Schwinger model on `sites` points with spacing
/// `spacing_num / spacing_den`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn symchain_lattice_schwinger(
    sites: usize,
    spacing_num: i64,
    spacing_den: i64,
    scheme: SymchainScheme,
    out: *mut *mut SymchainModel,
) -> SymchainStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if spacing_den == 0 {
            return Err(Failure::new(SymchainStatus::InvalidArgument, "zero spacing denominator"));
        }
        let scheme = match scheme {
            SymchainScheme::Central => Scheme::Central,
            SymchainScheme::Forward => Scheme::Forward,
        };
        let spacing = Rational::new(spacing_num.into(), spacing_den.into());
        let spec = LatticeSpec::new(sites, spacing, scheme)
            .map_err(|e| Failure::new(SymchainStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(SymchainModel {
            inner: build_schwinger(&spec),
        }));
        Ok(())
    })
}

/// Number of phase-space coordinates.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn symchain_model_dimension(
    model: *const SymchainModel,
    out: *mut usize,
) -> SymchainStatus {
    guard(|| {
        let m = handle(model, "model")?;
        *out_arg(out, "out")? = m.inner.dim();
        Ok(())
    })
}

/// Serializes a model in the model-file format.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn symchain_model_to_string(
    model: *const SymchainModel,
    out: *mut *mut c_char,
) -> SymchainStatus {
    guard(|| {
        let m = handle(model, "model")?;
        *out_arg(out, "out")? = c_string(save_model(&m.inner));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn symchain_model_free(model: *mut SymchainModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs the chain. `options` may be null for defaults.
///
/// # Safety
/// `model` must be a live handle, `options` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn symchain_analyze(
    model: *const SymchainModel,
    options: *const SymchainOptions,
    out: *mut *mut SymchainReport,
) -> SymchainStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let m = handle(model, "model")?;
        let opts = chain_options(options.as_ref())?;
        let inner = run_chain(&m.inner, &opts)
            .map_err(|e| Failure::new(SymchainStatus::ChainError, e))?;
        *out = Box::into_raw(Box::new(SymchainReport { inner }));
        Ok(())
    })
}

/// How the chain ended and at which level.
///
/// # Safety
/// `report` must be a live handle; `kind` and `level` writable.
#[no_mangle]
pub unsafe extern "C" fn symchain_report_termination(
    report: *const SymchainReport,
    kind: *mut SymchainTermination,
    level: *mut usize,
) -> SymchainStatus {
    guard(|| {
        let r = handle(report, "report")?;
        let kind = out_arg(kind, "kind")?;
        let level = out_arg(level, "level")?;
        (*kind, *level) = match r.inner.termination {
            Termination::Nonsingular { level, .. } => (SymchainTermination::Nonsingular, level),
            Termination::Exhausted { level } => (SymchainTermination::Exhausted, level),
            Termination::MaxLevelReached { level } => (SymchainTermination::MaxLevelReached, level),
        };
        Ok(())
    })
}

/// Number of constraints found, primaries included.
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn symchain_report_constraint_count(
    report: *const SymchainReport,
    out: *mut usize,
) -> SymchainStatus {
    guard(|| {
        let r = handle(report, "report")?;
        *out_arg(out, "out")? = r.inner.constraints.len();
        Ok(())
    })
}

/// Level and normalized form of constraint `index`.
///
/// # Safety
/// `report` must be a live handle; `level` and `expr` writable.
#[no_mangle]
pub unsafe extern "C" fn symchain_report_constraint(
    report: *const SymchainReport,
    index: usize,
    level: *mut usize,
    expr: *mut *mut c_char,
) -> SymchainStatus {
    guard(|| {
        let r = handle(report, "report")?;
        let level = out_arg(level, "level")?;
        let expr = out_arg(expr, "expr")?;
        let c = r.inner.constraints.get(index).ok_or_else(|| {
            Failure::new(
                SymchainStatus::OutOfRange,
                format!("constraint {index} of {}", r.inner.constraints.len()),
            )
        })?;
        *level = c.level;
        *expr = c_string(c.expr.to_string());
        Ok(())
    })
}

/// Determinant of the final matrix, as a reduced fraction string. Fails
/// with `NotAvailable` unless the chain ended non-singular.
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn symchain_report_determinant(
    report: *const SymchainReport,
    out: *mut *mut c_char,
) -> SymchainStatus {
    guard(|| {
        let r = handle(report, "report")?;
        let out = out_arg(out, "out")?;
        let d = r.inner.determinant().ok_or_else(|| {
            Failure::new(SymchainStatus::NotAvailable, "chain did not end non-singular")
        })?;
        *out = c_string(d.to_string());
        Ok(())
    })
}

/// The report as a JSON tree.
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn symchain_report_to_json(
    report: *const SymchainReport,
    out: *mut *mut c_char,
) -> SymchainStatus {
    guard(|| {
        let r = handle(report, "report")?;
        *out_arg(out, "out")? = c_string(tree_report_string(ReportInput::chain(&r.inner)));
        Ok(())
    })
}

/// The report as a text table.
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn symchain_report_to_text(
    report: *const SymchainReport,
    out: *mut *mut c_char,
) -> SymchainStatus {
    guard(|| {
        let r = handle(report, "report")?;
        *out_arg(out, "out")? = c_string(text_report(ReportInput::chain(&r.inner)));
        Ok(())
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn symchain_report_free(report: *mut SymchainReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Runs the chain and the Dirac–Bergmann algorithm and compares their
/// constraint spans. `json` may be null; otherwise it receives the full
/// comparison report.
///
/// # Safety
/// `model` must be a live handle, `options` null or valid, `equal`
/// writable, `json` null or writable.
#[no_mangle]
pub unsafe extern "C" fn symchain_compare(
    model: *const SymchainModel,
    options: *const SymchainOptions,
    equal: *mut bool,
    json: *mut *mut c_char,
) -> SymchainStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let equal = out_arg(equal, "equal")?;
        let opts = chain_options(options.as_ref())?;
        let r = run_chain(&m.inner, &opts)
            .map_err(|e| Failure::new(SymchainStatus::ChainError, e))?;
        let oracle = consistency_algorithm(&m.inner)
            .map_err(|e| Failure::new(SymchainStatus::OracleError, e))?;
        let found: Vec<_> = oracle.constraints.iter().map(|c| c.raw.clone()).collect();
        let verdict = compare_spans(m.inner.table(), &r.exprs(), &found)
            .map_err(|e| Failure::new(SymchainStatus::OracleError, e))?;
        *equal = verdict.equal;
        if let Some(json) = json.as_mut() {
            let cmp = Comparison { oracle, verdict };
            *json = c_string(tree_report_string(ReportInput {
                chain: &r,
                comparison: Some(&cmp),
                sites: None,
            }));
        }
        Ok(())
    })
}
