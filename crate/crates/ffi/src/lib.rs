//! C ABI for `diffeoflow`.
//!
//! Every function returns a [`DfStatus`]. On failure a message is kept per
//! thread and can be read with [`df_last_error_message`]. Matrices cross the
//! boundary as row-major `d×d` arrays of `double`. Models are opaque handles
//! created by [`df_model_load`] or [`df_model_train`] and released with
//! [`df_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use diffeoflow::data::read_dataset;
use diffeoflow::flow::{load_model, save_model, train, ConditionalGaussianSource, TrainConfig, VectorFieldModel};
use diffeoflow::geometry::{frechet_mean, phi, phi_inv_values, project_to_spd};
use diffeoflow::sampler::{sample_manifold, IntegratorSpec, Scheme};
use diffeoflow::{Error, Manifold, ManifoldMatrix, SymMatrix};

pub const DF_MANIFOLD_SPD: u32 = 0;
pub const DF_MANIFOLD_CORR: u32 = 1;

pub const DF_SCHEME_EULER: u32 = 0;
pub const DF_SCHEME_MIDPOINT: u32 = 1;
pub const DF_SCHEME_RK4: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NotPositiveDefinite = 3,
    NotCorrelation = 4,
    Numerical = 5,
    MissingClass = 6,
    Diverged = 7,
    Format = 8,
    InvalidData = 9,
    Io = 10,
    Panic = 11,
}

/// Trained model and its source distribution.
pub struct DfModel {
    model: VectorFieldModel,
    source: ConditionalGaussianSource,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DfStatus {
    match e {
        Error::InvalidInput(_) => DfStatus::InvalidInput,
        Error::NotPositiveDefinite => DfStatus::NotPositiveDefinite,
        Error::NotCorrelation(_) => DfStatus::NotCorrelation,
        Error::StepFailure | Error::NonFiniteGradient | Error::NonFiniteLoss => DfStatus::Numerical,
        Error::MissingClass(_) => DfStatus::MissingClass,
        Error::DivergedTrajectory { .. } => DfStatus::Diverged,
        Error::FormatError(_) => DfStatus::Format,
        Error::Io { .. } => DfStatus::Io,
        _ => DfStatus::InvalidData,
    }
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard<F>(f: F) -> DfStatus
where
    F: FnOnce() -> Result<(), (DfStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DfStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DfStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (DfStatus, String)>;
}

impl<T> IntoFfi<T> for diffeoflow::Result<T> {
    fn ffi(self) -> Result<T, (DfStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null() -> (DfStatus, String) {
    (DfStatus::NullPointer, "null pointer argument".into())
}

fn invalid(msg: &str) -> (DfStatus, String) {
    (DfStatus::InvalidInput, msg.into())
}

fn manifold_of(code: u32) -> Result<Manifold, (DfStatus, String)> {
    match code {
        DF_MANIFOLD_SPD => Ok(Manifold::Spd),
        DF_MANIFOLD_CORR => Ok(Manifold::Corr),
        _ => Err(invalid("unknown manifold code")),
    }
}

fn manifold_code(m: Manifold) -> u32 {
    match m {
        Manifold::Spd => DF_MANIFOLD_SPD,
        Manifold::Corr => DF_MANIFOLD_CORR,
    }
}

fn scheme_of(code: u32) -> Result<Scheme, (DfStatus, String)> {
    match code {
        DF_SCHEME_EULER => Ok(Scheme::Euler),
        DF_SCHEME_MIDPOINT => Ok(Scheme::Midpoint),
        DF_SCHEME_RK4 => Ok(Scheme::Rk4),
        _ => Err(invalid("unknown scheme code")),
    }
}

unsafe fn input<'a>(p: *const f64, len: usize) -> Result<&'a [f64], (DfStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize) -> Result<&'a mut [f64], (DfStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, (DfStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn matrix(manifold: Manifold, d: usize, entries: &[f64]) -> Result<ManifoldMatrix, (DfStatus, String)> {
    ManifoldMatrix::new(manifold, SymMatrix::new(d, entries.to_vec()).ffi()?).ffi()
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn df_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Dimension `m` of the flat coordinates for `d×d` matrices.
///
/// # Safety
/// `out_m` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn df_embed_dim(manifold: u32, d: usize, out_m: *mut usize) -> DfStatus {
    guard(|| {
        let m = manifold_of(manifold)?;
        if out_m.is_null() {
            return Err(null());
        }
        *out_m = m.embed_dim(d);
        Ok(())
    })
}

/// Flat coordinates of a matrix: `out` receives `m` values.
///
/// # Safety
/// `matrix_in` must hold `d·d` values and `out` room for `m` values.
#[no_mangle]
pub unsafe extern "C" fn df_phi(manifold: u32, d: usize, matrix_in: *const f64, out: *mut f64) -> DfStatus {
    guard(|| {
        let m = manifold_of(manifold)?;
        let x = matrix(m, d, input(matrix_in, d * d)?)?;
        let z = phi(&x).ffi()?;
        output(out, z.len())?.copy_from_slice(z.values());
        Ok(())
    })
}

/// Matrix for flat coordinates: `z` holds `m` values, `out` receives `d·d`.
///
/// # Safety
/// `z` must hold `m` values and `out` room for `d·d` values.
#[no_mangle]
pub unsafe extern "C" fn df_phi_inv(manifold: u32, d: usize, z: *const f64, out: *mut f64) -> DfStatus {
    guard(|| {
        let m = manifold_of(manifold)?;
        let x = phi_inv_values(m, d, input(z, m.embed_dim(d))?).ffi()?;
        output(out, d * d)?.copy_from_slice(x.as_sym().as_slice());
        Ok(())
    })
}

/// Fréchet mean of `n` matrices stored back to back.
///
/// # Safety
/// `matrices` must hold `n·d·d` values and `out` room for `d·d` values.
#[no_mangle]
pub unsafe extern "C" fn df_frechet_mean(
    manifold: u32,
    d: usize,
    n: usize,
    matrices: *const f64,
    out: *mut f64,
) -> DfStatus {
    guard(|| {
        let m = manifold_of(manifold)?;
        if d == 0 || n == 0 {
            return Err(invalid("need at least one matrix of positive size"));
        }
        let all = input(matrices, n * d * d)?;
        let points = all
            .chunks(d * d)
            .map(|c| matrix(m, d, c))
            .collect::<Result<Vec<_>, _>>()?;
        let mean = frechet_mean(&points, m).ffi()?;
        output(out, d * d)?.copy_from_slice(mean.as_sym().as_slice());
        Ok(())
    })
}

/// Shrinks a symmetric matrix toward the identity until its smallest
/// eigenvalue is at least `eps`. A nonzero `preserve_unit_diag` keeps an
/// exact unit diagonal.
///
/// # Safety
/// `matrix_in` must hold `d·d` values and `out` room for `d·d` values.
#[no_mangle]
pub unsafe extern "C" fn df_project_to_spd(
    d: usize,
    matrix_in: *const f64,
    eps: f64,
    preserve_unit_diag: i32,
    out: *mut f64,
) -> DfStatus {
    guard(|| {
        let a = SymMatrix::new(d, input(matrix_in, d * d)?.to_vec()).ffi()?;
        let p = project_to_spd(&a, eps, preserve_unit_diag != 0).ffi()?;
        output(out, d * d)?.copy_from_slice(p.as_sym().as_slice());
        Ok(())
    })
}

fn boxed(
    model: VectorFieldModel,
    source: ConditionalGaussianSource,
    out: *mut *mut DfModel,
) -> Result<(), (DfStatus, String)> {
    unsafe { *out = Box::into_raw(Box::new(DfModel { model, source })) };
    Ok(())
}

/// Loads a model directory written by the training command.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_model_load(path: *const c_char, out: *mut *mut DfModel) -> DfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let (model, source) = load_model(&path_arg(path)?).ffi()?;
        boxed(model, source, out)
    })
}

/// Trains a model on a dataset directory. `config_json` may be null for
/// default hyperparameters.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_model_train(
    data_dir: *const c_char,
    config_json: *const c_char,
    out: *mut *mut DfModel,
) -> DfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let cfg = if config_json.is_null() {
            TrainConfig::default()
        } else {
            let text = CStr::from_ptr(config_json)
                .to_str()
                .map_err(|_| invalid("config is not valid UTF-8"))?;
            TrainConfig::from_json(text).ffi()?
        };
        let data = read_dataset(&path_arg(data_dir)?).ffi()?;
        let trained = train(&data, &cfg).ffi()?;
        boxed(trained.model, trained.source, out)
    })
}

/// Writes the model to a directory.
///
/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn df_model_save(model: *const DfModel, path: *const c_char) -> DfStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(null)?;
        save_model(&path_arg(path)?, &m.model, &m.source).ffi()
    })
}

/// Manifold code, matrix size and number of classes of a model.
///
/// # Safety
/// `model` must come from this library; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_model_info(
    model: *const DfModel,
    out_manifold: *mut u32,
    out_dim: *mut usize,
    out_num_classes: *mut usize,
) -> DfStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(null)?;
        if out_manifold.is_null() || out_dim.is_null() || out_num_classes.is_null() {
            return Err(null());
        }
        *out_manifold = manifold_code(m.model.manifold);
        *out_dim = m.model.dim_matrix;
        *out_num_classes = m.model.classes.len();
        Ok(())
    })
}

/// Copies the sorted class labels into `out` (room for `capacity` labels).
///
/// # Safety
/// `model` must come from this library; `out` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn df_model_classes(model: *const DfModel, out: *mut i64, capacity: usize) -> DfStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(null)?;
        if capacity < m.model.classes.len() {
            return Err(invalid("class buffer too small"));
        }
        if out.is_null() {
            return Err(null());
        }
        slice::from_raw_parts_mut(out, m.model.classes.len()).copy_from_slice(&m.model.classes);
        Ok(())
    })
}

/// Draws `n` samples of class `label`; `out` receives `n·d·d` values.
///
/// # Safety
/// `model` must come from this library; `out` must have room for `n·d·d` values.
#[no_mangle]
pub unsafe extern "C" fn df_model_sample(
    model: *const DfModel,
    label: i64,
    n: usize,
    steps: usize,
    scheme: u32,
    seed: u64,
    out: *mut f64,
) -> DfStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(null)?;
        let spec = IntegratorSpec::new(scheme_of(scheme)?, steps).ffi()?;
        let d = m.model.dim_matrix;
        let buf = output(out, n * d * d)?;
        let samples = sample_manifold(&m.model, &m.source, label, n, spec, seed).ffi()?;
        for (chunk, x) in buf.chunks_mut(d * d).zip(&samples) {
            chunk.copy_from_slice(x.as_sym().as_slice());
        }
        Ok(())
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn df_model_free(model: *mut DfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
