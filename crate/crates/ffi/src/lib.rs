//! C ABI over the scoring engine.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every fallible call returns an [`SeStatus`];
//! on failure [`se_last_error_message`] describes the cause for the calling
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use supeuclid::embedding_file::EmbeddingFile;
use supeuclid::metrics;
use supeuclid::numerics::Matrix;
use supeuclid::scl::{scl_loss_and_grad, SclBatch, SclConfig};
use supeuclid::scoring::{self, PrototypeSet, ScoreSpace};
use supeuclid::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Numeric = 4,
    Format = 5,
    Io = 6,
    EmptyClass = 7,
    BufferTooSmall = 8,
    Internal = 9,
    Panic = 10,
}

/// Metrics for one ID/OoD pairing; OoD is the positive class.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SeEvalReport {
    pub auroc: f64,
    pub fpr95: f64,
    pub threshold: f64,
    pub n_id: usize,
    pub n_ood: usize,
}

/// Embedding matrix with optional labels.
pub struct SeEmbeddings {
    file: EmbeddingFile,
}

/// Class means plus the normalization applied when they were fitted.
pub struct SePrototypes {
    set: PrototypeSet,
    normalized: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SeStatus {
    match err.root() {
        Error::Dimension { .. } => SeStatus::Dimension,
        Error::Numeric(_)
        | Error::DegenerateVector { .. }
        | Error::EmptyPositives
        | Error::Invariant(_) => SeStatus::Numeric,
        Error::Format(_) => SeStatus::Format,
        Error::Io { .. } => SeStatus::Io,
        Error::EmptyClass { .. } => SeStatus::EmptyClass,
        Error::Config(_) | Error::Input(_) | Error::InsufficientData(_) | Error::Mode(_) => {
            SeStatus::InvalidArgument
        }
        _ => SeStatus::Internal,
    }
}

struct Fail(SeStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SeStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SeStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside supeuclid".into());
            SeStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn path_in<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SeStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(Path::new(s))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn class_count(labels: &[i32]) -> usize {
    labels
        .iter()
        .copied()
        .max()
        .map_or(0, |m| (m + 1).max(0) as usize)
}

fn features(e: &SeEmbeddings, normalize: bool) -> Result<Matrix, Fail> {
    let m = e.file.to_matrix();
    Ok(if normalize { m.normalize_rows()? } else { m })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn se_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn se_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Reads a `SEMB` file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn se_embeddings_load(
    path: *const c_char,
    out: *mut *mut SeEmbeddings,
) -> SeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let file = EmbeddingFile::read(path_in(path)?)?;
        *out = Box::into_raw(Box::new(SeEmbeddings { file }));
        Ok(())
    })
}

/// Copies an `n × d` row-major matrix (and optional labels, −1 for
/// unlabeled/OoD) into a new handle.
///
/// # Safety
/// `data` must hold `n*d` floats; `labels` is NULL or holds `n` ints.
#[no_mangle]
pub unsafe extern "C" fn se_embeddings_from_f32(
    data: *const f32,
    n: usize,
    d: usize,
    labels: *const i32,
    out: *mut *mut SeEmbeddings,
) -> SeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n
            .checked_mul(d)
            .ok_or_else(|| Fail(SeStatus::InvalidArgument, "n*d overflows".into()))?;
        let rows = slice_in(data, len, "data")?.to_vec();
        let labels = if labels.is_null() {
            None
        } else {
            Some(slice_in(labels, n, "labels")?.to_vec())
        };
        let file = EmbeddingFile::new(n, d, rows, labels)?;
        *out = Box::into_raw(Box::new(SeEmbeddings { file }));
        Ok(())
    })
}

/// Writes the handle as a `SEMB` file.
///
/// # Safety
/// `emb` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn se_embeddings_save(
    emb: *const SeEmbeddings,
    path: *const c_char,
) -> SeStatus {
    guard(|| {
        let e = handle(emb, "embeddings")?;
        e.file.write(path_in(path)?)?;
        Ok(())
    })
}

/// Row count, or 0 for NULL.
///
/// # Safety
/// `emb` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn se_embeddings_len(emb: *const SeEmbeddings) -> usize {
    emb.as_ref().map_or(0, |e| e.file.n())
}

/// Row dimension, or 0 for NULL.
///
/// # Safety
/// `emb` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn se_embeddings_dim(emb: *const SeEmbeddings) -> usize {
    emb.as_ref().map_or(0, |e| e.file.d())
}

/// # Safety
/// `emb` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn se_embeddings_free(emb: *mut SeEmbeddings) {
    if !emb.is_null() {
        drop(Box::from_raw(emb));
    }
}

/// Fits one mean per class from a labeled handle; `k` is one past the
/// largest label and every class below it must occur. With `normalize`, rows
/// are L2-normalized first, and [`se_score`] repeats that automatically.
///
/// # Safety
/// `train` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn se_prototypes_fit(
    train: *const SeEmbeddings,
    normalize: bool,
    out: *mut *mut SePrototypes,
) -> SeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let t = handle(train, "train")?;
        let labels = t.file.labels().ok_or_else(|| {
            Fail(
                SeStatus::InvalidArgument,
                "training embeddings have no labels".into(),
            )
        })?;
        let k = class_count(labels);
        if k < 2 {
            return Err(Fail(
                SeStatus::InvalidArgument,
                "need at least 2 classes".into(),
            ));
        }
        let set =
            scoring::fit_prototypes(&features(t, normalize)?, labels, k, ScoreSpace::Feature)?;
        *out = Box::into_raw(Box::new(SePrototypes {
            set,
            normalized: normalize,
        }));
        Ok(())
    })
}

/// Number of classes, or 0 for NULL.
///
/// # Safety
/// `protos` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn se_prototypes_k(protos: *const SePrototypes) -> usize {
    protos.as_ref().map_or(0, |p| p.set.k())
}

/// Copies the `k × d` class means, row-major, into `out`.
///
/// # Safety
/// `protos` must be a live handle; `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn se_prototypes_means(
    protos: *const SePrototypes,
    out: *mut f64,
    capacity: usize,
) -> SeStatus {
    guard(|| {
        let p = handle(protos, "prototypes")?;
        let src = p.set.means().as_slice();
        if capacity < src.len() {
            return Err(Fail(
                SeStatus::BufferTooSmall,
                format!("need {} doubles, got {capacity}", src.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
        Ok(())
    })
}

/// # Safety
/// `protos` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn se_prototypes_free(protos: *mut SePrototypes) {
    if !protos.is_null() {
        drop(Box::from_raw(protos));
    }
}

/// Distance from every row of `feats` to its nearest class mean, written to
/// `out_scores`. Larger means more out-of-distribution.
///
/// # Safety
/// Handles must be live; `out_scores` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn se_score(
    protos: *const SePrototypes,
    feats: *const SeEmbeddings,
    out_scores: *mut f64,
    capacity: usize,
) -> SeStatus {
    guard(|| {
        let p = handle(protos, "prototypes")?;
        let f = handle(feats, "features")?;
        if capacity < f.file.n() {
            return Err(Fail(
                SeStatus::BufferTooSmall,
                format!("need {} scores, got {capacity}", f.file.n()),
            ));
        }
        let s = scoring::score(&features(f, p.normalized)?, &p.set)?;
        if !s.scores.is_empty() {
            if out_scores.is_null() {
                return Err(null("out_scores"));
            }
            ptr::copy_nonoverlapping(s.scores.as_ptr(), out_scores, s.scores.len());
        }
        Ok(())
    })
}

/// AUROC and FPR at 95% TPR with OoD as the positive class.
///
/// # Safety
/// `id_scores`/`ood_scores` must hold `n_id`/`n_ood` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn se_evaluate(
    id_scores: *const f64,
    n_id: usize,
    ood_scores: *const f64,
    n_ood: usize,
    out: *mut SeEvalReport,
) -> SeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let id = slice_in(id_scores, n_id, "id_scores")?;
        let ood = slice_in(ood_scores, n_ood, "ood_scores")?;
        let r = metrics::evaluate(id, ood)?;
        *out = SeEvalReport {
            auroc: r.auroc,
            fpr95: r.fpr95,
            threshold: r.threshold,
            n_id: r.n_id,
            n_ood: r.n_ood,
        };
        Ok(())
    })
}

/// Fit on `train`, score `id` and `ood`, evaluate.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn se_ingest(
    train: *const SeEmbeddings,
    id: *const SeEmbeddings,
    ood: *const SeEmbeddings,
    normalize: bool,
    out: *mut SeEvalReport,
) -> SeStatus {
    let mut protos: *mut SePrototypes = ptr::null_mut();
    let status = se_prototypes_fit(train, normalize, &mut protos);
    if status != SeStatus::Ok {
        return status;
    }
    let status = guard(|| {
        let p = &*protos;
        let id = handle(id, "id")?;
        let ood = handle(ood, "ood")?;
        let si = scoring::score(&features(id, p.normalized)?, &p.set)?;
        let so = scoring::score(&features(ood, p.normalized)?, &p.set)?;
        let r = metrics::evaluate(&si.scores, &so.scores)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = SeEvalReport {
            auroc: r.auroc,
            fpr95: r.fpr95,
            threshold: r.threshold,
            n_id: r.n_id,
            n_ood: r.n_ood,
        };
        Ok(())
    });
    se_prototypes_free(protos);
    status
}

/// Supervised contrastive loss of `rows` unit embeddings, and optionally its
/// gradient (`rows × d`, row-major) when `out_grad` is non-NULL.
///
/// # Safety
/// `z` must hold `rows*d` doubles, `labels` `rows` ints, `out_grad` NULL or
/// `rows*d` doubles; `out_loss` must be writable.
#[no_mangle]
pub unsafe extern "C" fn se_scl_loss(
    z: *const f64,
    rows: usize,
    d: usize,
    labels: *const i32,
    tau: f64,
    out_loss: *mut f64,
    out_grad: *mut f64,
) -> SeStatus {
    guard(|| {
        if out_loss.is_null() {
            return Err(null("out_loss"));
        }
        let len = rows
            .checked_mul(d)
            .ok_or_else(|| Fail(SeStatus::InvalidArgument, "rows*d overflows".into()))?;
        let z = Matrix::new(rows, d, slice_in(z, len, "z")?.to_vec())?;
        let labels = slice_in(labels, rows, "labels")?.to_vec();
        let batch = SclBatch::new(z, labels)?;
        let (loss, grad) = scl_loss_and_grad(&batch, &SclConfig { tau })?;
        *out_loss = loss;
        if !out_grad.is_null() {
            ptr::copy_nonoverlapping(grad.as_slice().as_ptr(), out_grad, len);
        }
        Ok(())
    })
}
