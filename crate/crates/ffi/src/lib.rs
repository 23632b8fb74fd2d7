//! C ABI over the snoregan core: an opaque model handle for loading, sampling
//! and judging trained scGANs, plus the threshold schedule, UAR and BoAW.
//!
//! Every function returns a [`SnoreganStatus`]; on failure the message is
//! available from [`snoregan_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use snoregan::audio::{boaw, Codebook, CodebookMethod};
use snoregan::data::{DataKind, Sample};
use snoregan::experiments::uar;
use snoregan::gan::{threshold_value, ScganModel, ThresholdParams};
use snoregan::nn::DenseMatrix;
use snoregan::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnoreganStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Io = 4,
    Format = 5,
    Runtime = 6,
    Panic = 7,
}

/// Trained scGAN. Create with [`snoregan_model_load`], release with
/// [`snoregan_model_free`].
pub struct SnoreganModel {
    model: ScganModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> SnoreganStatus {
    match e {
        Error::DimensionMismatch { .. } => SnoreganStatus::DimensionMismatch,
        Error::Io(_) => SnoreganStatus::Io,
        Error::Json(_) | Error::Malformed { .. } | Error::Csv(_) | Error::Wav(_) => SnoreganStatus::Format,
        Error::InvalidConfig(_) | Error::IndexOutOfRange { .. } | Error::WrongDataKind { .. } | Error::EmptyInput(_) => SnoreganStatus::InvalidArgument,
        _ => SnoreganStatus::Runtime,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SnoreganStatus, String)>) -> SnoreganStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SnoreganStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SnoreganStatus::Panic
        }
    }
}

type FfiResult<T> = Result<T, (SnoreganStatus, String)>;

fn lib<T>(r: snoregan::Result<T>) -> FfiResult<T> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> FfiResult<()> {
    if p.is_null() {
        Err((SnoreganStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be valid for `len` reads unless `len` is zero.
unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be valid for `len` writes unless `len` is zero.
unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> FfiResult<&'a mut [T]> {
    if len == 0 {
        return Ok(&mut []);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn snoregan_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn snoregan_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model saved by `train-gan`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn snoregan_model_load(path: *const c_char, out: *mut *mut SnoreganModel) -> SnoreganStatus {
    guard(|| {
        non_null(path, "path")?;
        non_null(out, "out")?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (SnoreganStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let model = lib(ScganModel::load_json(path))?;
        *out = Box::into_raw(Box::new(SnoreganModel { model }));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from [`snoregan_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn snoregan_model_free(model: *mut SnoreganModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Class count, feature width and sequence length (0 for static vectors).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn snoregan_model_shape(
    model: *const SnoreganModel,
    num_classes: *mut usize,
    feature_dim: *mut usize,
    sequence_length: *mut usize,
) -> SnoreganStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(num_classes, "num_classes")?;
        non_null(feature_dim, "feature_dim")?;
        non_null(sequence_length, "sequence_length")?;
        let m = &(*model).model;
        *num_classes = m.num_classes();
        *feature_dim = m.feature_dim;
        *sequence_length = match m.config.data_kind {
            DataKind::StaticVector => 0,
            DataKind::Sequence => m.config.sequence_length.unwrap_or(1),
        };
        Ok(())
    })
}

fn sample_len(m: &ScganModel) -> usize {
    match m.config.data_kind {
        DataKind::StaticVector => m.feature_dim,
        DataKind::Sequence => m.feature_dim * m.config.sequence_length.unwrap_or(1),
    }
}

/// Draws one sample conditioned on `class` into `out` (`feature_dim` values,
/// or `sequence_length × feature_dim` row-major for sequences).
///
/// # Safety
/// `out` must be valid for `out_len` writes.
#[no_mangle]
pub unsafe extern "C" fn snoregan_model_generate(
    model: *const SnoreganModel,
    class: usize,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> SnoreganStatus {
    guard(|| {
        non_null(model, "model")?;
        let m = &(*model).model;
        if out_len != sample_len(m) {
            return Err((
                SnoreganStatus::DimensionMismatch,
                format!("output buffer holds {out_len} values, sample has {}", sample_len(m)),
            ));
        }
        let out = slice_mut(out, out_len, "out")?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = lib(m.sample(class, &mut rng))?;
        out.copy_from_slice(sample.values());
        Ok(())
    })
}

/// Discriminator argmax for `x` under condition `class`; the fake output has
/// index `num_classes` (index 1 of a binary cgan discriminator).
///
/// # Safety
/// `x` must be valid for `len` reads and `predicted` for one write.
#[no_mangle]
pub unsafe extern "C" fn snoregan_model_discriminate(
    model: *const SnoreganModel,
    x: *const f64,
    len: usize,
    class: usize,
    predicted: *mut usize,
) -> SnoreganStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(predicted, "predicted")?;
        let m = &(*model).model;
        if len != sample_len(m) {
            return Err((
                SnoreganStatus::DimensionMismatch,
                format!("input holds {len} values, model expects {}", sample_len(m)),
            ));
        }
        let x = slice(x, len, "x")?;
        let sample = match m.config.data_kind {
            DataKind::StaticVector => Sample::Static(x.to_vec()),
            DataKind::Sequence => Sample::Sequence(lib(DenseMatrix::from_vec(len / m.feature_dim, m.feature_dim, x.to_vec()))?),
        };
        *predicted = lib(m.discriminate(&sample, class))?;
        Ok(())
    })
}

/// Alternation threshold `max(decay^i + offset, floor)`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn snoregan_threshold(decay: f64, offset: f64, floor: f64, i: usize, out: *mut f64) -> SnoreganStatus {
    guard(|| {
        non_null(out, "out")?;
        if !(decay > 0.0 && decay < 1.0) || !offset.is_finite() || !floor.is_finite() {
            return Err((SnoreganStatus::InvalidArgument, "decay must lie in (0, 1); offset and floor finite".into()));
        }
        *out = threshold_value(ThresholdParams { decay, offset, floor }, i);
        Ok(())
    })
}

/// Unweighted average recall of `n` predictions over `k` classes.
///
/// # Safety
/// `predictions` and `labels` must be valid for `n` reads, `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn snoregan_uar(
    predictions: *const usize,
    labels: *const usize,
    n: usize,
    k: usize,
    out: *mut f64,
) -> SnoreganStatus {
    guard(|| {
        non_null(out, "out")?;
        let p = slice(predictions, n, "predictions")?;
        let l = slice(labels, n, "labels")?;
        *out = lib(uar(p, l, k))?;
        Ok(())
    })
}

/// Bag-of-audio-words histogram of `rows × cols` frames (row-major) over a
/// `size × cols` codebook with `n` assignments per frame; writes `size` values.
///
/// # Safety
/// Buffers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn snoregan_boaw(
    frames: *const f64,
    rows: usize,
    cols: usize,
    codebook: *const f64,
    size: usize,
    n: usize,
    out: *mut f64,
) -> SnoreganStatus {
    guard(|| {
        let f = slice(frames, rows * cols, "frames")?;
        let c = slice(codebook, size * cols, "codebook")?;
        let out = slice_mut(out, size, "out")?;
        let seq = lib(DenseMatrix::from_vec(rows, cols, f.to_vec()))?;
        let cb = Codebook {
            codewords: lib(DenseMatrix::from_vec(size, cols, c.to_vec()))?,
            method: CodebookMethod::KMeans,
        };
        out.copy_from_slice(&lib(boaw(&seq, &cb, n))?);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let p = snoregan_last_error();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }

    #[test]
    fn threshold_matches_schedule() {
        let mut v = 0.0;
        assert_eq!(unsafe { snoregan_threshold(0.95, 1.0, 1.0, 10, &mut v) }, SnoreganStatus::Ok);
        assert!((v - 1.5987).abs() < 1e-4);
        assert!(snoregan_last_error().is_null());
        assert_eq!(unsafe { snoregan_threshold(1.5, 0.0, 0.7, 0, &mut v) }, SnoreganStatus::InvalidArgument);
        assert!(last_error().contains("decay"));
        assert_eq!(unsafe { snoregan_threshold(0.95, 0.0, 0.7, 0, ptr::null_mut()) }, SnoreganStatus::NullPointer);
    }

    #[test]
    fn uar_and_errors() {
        let p = [0usize, 0, 0, 0];
        let l = [0usize, 1, 2, 3];
        let mut v = 0.0;
        assert_eq!(unsafe { snoregan_uar(p.as_ptr(), l.as_ptr(), 4, 4, &mut v) }, SnoreganStatus::Ok);
        assert_eq!(v, 0.25);
        assert_ne!(unsafe { snoregan_uar(p.as_ptr(), l.as_ptr(), 0, 4, &mut v) }, SnoreganStatus::Ok);
    }

    #[test]
    fn boaw_worked_example() {
        let frames = [0.0, 0.0, 1.0, 1.0];
        let mut out = [0.0; 2];
        let st = unsafe { snoregan_boaw(frames.as_ptr(), 2, 2, frames.as_ptr(), 2, 1, out.as_mut_ptr()) };
        assert_eq!(st, SnoreganStatus::Ok);
        assert_eq!(out, [0.5, 0.5]);
    }

    #[test]
    fn model_handle_round_trip() {
        use snoregan::data::{FeatureRecord, Partition};
        use snoregan::gan::{train, ScganConfig};
        let records: Vec<FeatureRecord> = (0..16)
            .map(|i| FeatureRecord::real(Sample::Static(vec![i as f64 * 0.1, 1.0, -1.0]), i % 2, Partition::Train))
            .collect();
        let cfg = ScganConfig {
            num_classes: 2,
            max_iterations: 2,
            turn_step_cap: 3,
            ..ScganConfig::default()
        };
        let (model, _) = train(&cfg, &records).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        model.save_json(&path).unwrap();
        let cpath = CString::new(path.to_str().unwrap()).unwrap();

        let mut handle = ptr::null_mut();
        assert_eq!(unsafe { snoregan_model_load(cpath.as_ptr(), &mut handle) }, SnoreganStatus::Ok);
        let (mut k, mut d, mut t) = (0, 0, 9);
        assert_eq!(unsafe { snoregan_model_shape(handle, &mut k, &mut d, &mut t) }, SnoreganStatus::Ok);
        assert_eq!((k, d, t), (2, 3, 0));

        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        unsafe {
            assert_eq!(snoregan_model_generate(handle, 1, 5, a.as_mut_ptr(), 3), SnoreganStatus::Ok);
            assert_eq!(snoregan_model_generate(handle, 1, 5, b.as_mut_ptr(), 3), SnoreganStatus::Ok);
        }
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(model.sample(1, &mut rng).unwrap().values(), &a);

        let mut pred = 99;
        assert_eq!(unsafe { snoregan_model_discriminate(handle, a.as_ptr(), 3, 1, &mut pred) }, SnoreganStatus::Ok);
        assert_eq!(pred, model.discriminate(&Sample::Static(a.to_vec()), 1).unwrap());
        assert_eq!(
            unsafe { snoregan_model_generate(handle, 1, 5, a.as_mut_ptr(), 2) },
            SnoreganStatus::DimensionMismatch
        );
        assert_eq!(
            unsafe { snoregan_model_generate(handle, 7, 5, a.as_mut_ptr(), 3) },
            SnoreganStatus::InvalidArgument
        );
        unsafe { snoregan_model_free(handle) };

        let missing = CString::new(dir.path().join("nope.json").to_str().unwrap()).unwrap();
        let mut h2 = ptr::null_mut();
        assert_eq!(unsafe { snoregan_model_load(missing.as_ptr(), &mut h2) }, SnoreganStatus::Io);
        assert!(h2.is_null());
        assert!(!last_error().is_empty());
    }
}
