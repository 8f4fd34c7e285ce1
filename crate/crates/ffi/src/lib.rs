//! C interface: opaque dataset and model handles, integer status codes and
//! a thread-local last-error message. No panic crosses the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use weldnet::baselines::{HdpModel, TimeInputModel};
use weldnet::eval::Predictor;
use weldnet::neural::Matrix;
use weldnet::pde::{gen_dataset, Family, GenConfig, TrajectoryDataset};
use weldnet::weldnet::{model_kind, WeldModel};
use weldnet::WeldError;

/// Status returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeldStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Numerical = 5,
    Panic = 6,
}

/// Trajectory dataset handle.
pub struct WeldDataset {
    inner: TrajectoryDataset,
}

enum AnyModel {
    Weld(WeldModel),
    Hdp(HdpModel),
    TimeInput(TimeInputModel),
}

/// Trained model handle (WeldNet or a baseline).
pub struct WeldModelHandle {
    inner: AnyModel,
}

impl WeldModelHandle {
    fn predictor(&self) -> &dyn Predictor {
        match &self.inner {
            AnyModel::Weld(m) => m,
            AnyModel::Hdp(m) => m,
            AnyModel::TimeInput(m) => m,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &WeldError) -> WeldStatus {
    match e {
        WeldError::InvalidArgument(_) | WeldError::Shape { .. } => WeldStatus::InvalidArgument,
        WeldError::Io(_) => WeldStatus::Io,
        WeldError::BadMagic { .. } | WeldError::VersionMismatch { .. } | WeldError::Truncated { .. } | WeldError::Header(_) => {
            WeldStatus::Format
        }
        WeldError::Numerical { .. } | WeldError::BlowUp { .. } => WeldStatus::Numerical,
    }
}

enum Fail {
    Null(&'static str),
    Weld(WeldError),
}

impl From<WeldError> for Fail {
    fn from(e: WeldError) -> Self {
        Fail::Weld(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> WeldStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WeldStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            WeldStatus::NullPointer
        }
        Ok(Err(Fail::Weld(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            WeldStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Weld(WeldError::invalid(format!("{what} is not valid UTF-8"))))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

fn out_arg<T>(p: *mut T, what: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail::Null(what))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn weld_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn weld_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates a dataset with the family defaults for time span and domain.
///
/// # Safety
/// `family` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn weld_dataset_generate(
    family: *const c_char,
    n_samples: usize,
    n_steps: usize,
    n_points: usize,
    seed: u64,
    out: *mut *mut WeldDataset,
) -> WeldStatus {
    guard(|| {
        out_arg(out, "out")?;
        let family: Family = str_arg(family, "family")?.parse()?;
        let ds = gen_dataset(&GenConfig {
            n_samples,
            n_steps,
            n_points,
            seed,
            ..GenConfig::new(family)
        })?;
        *out = Box::into_raw(Box::new(WeldDataset { inner: ds }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn weld_dataset_read(path: *const c_char, out: *mut *mut WeldDataset) -> WeldStatus {
    guard(|| {
        out_arg(out, "out")?;
        let ds = TrajectoryDataset::read(&PathBuf::from(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(WeldDataset { inner: ds }));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn weld_dataset_write(ds: *const WeldDataset, path: *const c_char) -> WeldStatus {
    guard(|| {
        let ds = ref_arg(ds, "dataset")?;
        ds.inner.write(&PathBuf::from(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Writes `(n_samples, n_steps, n_points)`; any output pointer may be NULL.
///
/// # Safety
/// `ds` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn weld_dataset_shape(
    ds: *const WeldDataset,
    n_samples: *mut usize,
    n_steps: *mut usize,
    n_points: *mut usize,
) -> WeldStatus {
    guard(|| {
        let ds = &ref_arg(ds, "dataset")?.inner;
        for (p, v) in [(n_samples, ds.n_samples()), (n_steps, ds.n_steps()), (n_points, ds.dim())] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Copies snapshot `x_n(t_k)` into `buf`, which must hold `len >= n_points`
/// doubles.
///
/// # Safety
/// `ds` must come from this library and `buf` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn weld_dataset_snapshot(ds: *const WeldDataset, n: usize, k: usize, buf: *mut f64, len: usize) -> WeldStatus {
    guard(|| {
        let ds = &ref_arg(ds, "dataset")?.inner;
        out_arg(buf, "buf")?;
        if n >= ds.n_samples() || k >= ds.n_steps() {
            return Err(WeldError::invalid(format!("snapshot ({n}, {k}) out of range")).into());
        }
        if len < ds.dim() {
            return Err(WeldError::shape("snapshot buffer", ds.dim(), len).into());
        }
        let dst = std::slice::from_raw_parts_mut(buf, ds.dim());
        for (d, &s) in dst.iter_mut().zip(ds.snapshot(n, k)) {
            *d = s as f64;
        }
        Ok(())
    })
}

/// Releases a dataset. NULL is ignored.
///
/// # Safety
/// `ds` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn weld_dataset_free(ds: *mut WeldDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Loads a model directory written by `weldnet train`.
///
/// # Safety
/// `dir` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn weld_model_load(dir: *const c_char, out: *mut *mut WeldModelHandle) -> WeldStatus {
    guard(|| {
        out_arg(out, "out")?;
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        let inner = match model_kind(&dir)?.as_str() {
            "weldnet" => AnyModel::Weld(WeldModel::load(&dir)?),
            "hdp" => AnyModel::Hdp(HdpModel::load(&dir)?),
            "time-input" => AnyModel::TimeInput(TimeInputModel::load(&dir)?),
            k => return Err(WeldError::invalid(format!("unknown model kind {k:?}")).into()),
        };
        *out = Box::into_raw(Box::new(WeldModelHandle { inner }));
        Ok(())
    })
}

/// Writes `(ambient_dim, n_steps)`; either pointer may be NULL.
///
/// # Safety
/// `model` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn weld_model_dims(model: *const WeldModelHandle, ambient_dim: *mut usize, n_steps: *mut usize) -> WeldStatus {
    guard(|| {
        let p = ref_arg(model, "model")?.predictor();
        if !ambient_dim.is_null() {
            *ambient_dim = p.ambient_dim();
        }
        if !n_steps.is_null() {
            *n_steps = p.n_steps();
        }
        Ok(())
    })
}

/// Predicts the state at time index `k` from `rows` initial states stored
/// row-major in `x0` (`rows * dim` doubles); writes `rows * dim` doubles to
/// `out`.
///
/// # Safety
/// `model` must come from this library; `x0` and `out` must each point to
/// `rows * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn weld_model_predict(
    model: *const WeldModelHandle,
    x0: *const f64,
    rows: usize,
    dim: usize,
    k: usize,
    out: *mut f64,
) -> WeldStatus {
    guard(|| {
        let p = ref_arg(model, "model")?.predictor();
        if x0.is_null() {
            return Err(Fail::Null("x0"));
        }
        out_arg(out, "out")?;
        if dim != p.ambient_dim() {
            return Err(WeldError::shape("initial state width", p.ambient_dim(), dim).into());
        }
        if k >= p.n_steps() {
            return Err(WeldError::invalid(format!("time index {k} beyond last index {}", p.n_steps() - 1)).into());
        }
        let x = Matrix::new(rows, dim, std::slice::from_raw_parts(x0, rows * dim).to_vec())?;
        let y = p.predict_trajectory(&x, k)?.pop().expect("trajectory includes index k");
        std::slice::from_raw_parts_mut(out, rows * dim).copy_from_slice(y.data());
        Ok(())
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn weld_model_free(model: *mut WeldModelHandle) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
