//! C ABI for the typiclust selection library.
//!
//! The interface follows the usual FFI conventions: opaque handles with
//! explicit free functions, status codes instead of panics, and a
//! thread-local last-error message. The header is generated by cbindgen
//! into `include/typiclust.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use typiclust::model::{EmbeddingSet, PoolState, StrategyConfig, StrategyKind};
use typiclust::strategies::{self, ScoreMatrix};
use typiclust::typicality::knn_typicality;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullArgument = 1,
    Utf8Error = 2,
    IoError = 3,
    ValidationError = 4,
    NumericalError = 5,
    BufferTooSmall = 6,
}

/// Opaque embedding-set handle.
pub struct TcEmbeddings {
    inner: EmbeddingSet,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl std::fmt::Display) {
    let text = CString::new(message.to_string()).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn fail(status: TcStatus, message: impl std::fmt::Display) -> TcStatus {
    set_error(message);
    status
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds an embedding set from a row-major `rows x dims` f32 array.
#[no_mangle]
pub extern "C" fn tc_embeddings_create(
    data: *const f32,
    rows: u64,
    dims: u64,
    out: *mut *mut TcEmbeddings,
) -> TcStatus {
    if data.is_null() || out.is_null() {
        return fail(TcStatus::NullArgument, "data and out must be non-null");
    }
    let len = (rows * dims) as usize;
    let slice = unsafe { std::slice::from_raw_parts(data, len) };
    let values: Vec<f64> = slice.iter().map(|&v| v as f64).collect();
    match EmbeddingSet::validate(values, dims as usize, None, None, None) {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(TcEmbeddings { inner })) };
            TcStatus::Ok
        }
        Err(e) => fail(TcStatus::ValidationError, e),
    }
}

/// Loads an EMB1 binary file (or CSV when the path ends in `.csv`).
#[no_mangle]
pub extern "C" fn tc_embeddings_load(
    path: *const c_char,
    out: *mut *mut TcEmbeddings,
) -> TcStatus {
    if path.is_null() || out.is_null() {
        return fail(TcStatus::NullArgument, "path and out must be non-null");
    }
    let path = match unsafe { CStr::from_ptr(path) }.to_str() {
        Ok(p) => p,
        Err(e) => return fail(TcStatus::Utf8Error, e),
    };
    match typiclust::io::load_embeddings(Path::new(path)) {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(TcEmbeddings { inner })) };
            TcStatus::Ok
        }
        Err(typiclust::io::FormatError::Io(e)) => fail(TcStatus::IoError, e),
        Err(e) => fail(TcStatus::ValidationError, e),
    }
}

/// Frees a handle returned by the create/load functions. Null is ignored.
#[no_mangle]
pub extern "C" fn tc_embeddings_free(handle: *mut TcEmbeddings) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

#[no_mangle]
pub extern "C" fn tc_embeddings_rows(handle: *const TcEmbeddings) -> u64 {
    if handle.is_null() {
        return 0;
    }
    unsafe { &*handle }.inner.len() as u64
}

#[no_mangle]
pub extern "C" fn tc_embeddings_dims(handle: *const TcEmbeddings) -> u64 {
    if handle.is_null() {
        return 0;
    }
    unsafe { &*handle }.inner.dim() as u64
}

/// Scales every row to unit Euclidean norm in place.
#[no_mangle]
pub extern "C" fn tc_embeddings_normalize(handle: *mut TcEmbeddings) -> TcStatus {
    if handle.is_null() {
        return fail(TcStatus::NullArgument, "handle must be non-null");
    }
    let wrapper = unsafe { &mut *handle };
    match wrapper.inner.l2_normalize() {
        Ok(normalized) => {
            wrapper.inner = normalized;
            TcStatus::Ok
        }
        Err(e) => fail(TcStatus::ValidationError, e),
    }
}

fn build_pool(
    n: usize,
    labeled: *const u64,
    labeled_len: u64,
) -> Result<PoolState, (TcStatus, String)> {
    let labeled: Vec<usize> = if labeled.is_null() || labeled_len == 0 {
        Vec::new()
    } else {
        unsafe { std::slice::from_raw_parts(labeled, labeled_len as usize) }
            .iter()
            .map(|&i| i as usize)
            .collect()
    };
    PoolState::with_labeled(n, &labeled).map_err(|e| (TcStatus::ValidationError, e.to_string()))
}

fn strategy_status(error: &strategies::StrategyError) -> TcStatus {
    use strategies::StrategyError::*;
    match error {
        EmptyPool | MissingScores(_) | RowNotStochastic(_) | ScoreOutOfRange(_)
        | NotNormalized | ScoresRequired(_) => TcStatus::ValidationError,
        Cluster(_) | Typicality(_) => TcStatus::NumericalError,
    }
}

fn write_batch_indices(
    batch: &typiclust::model::QueryBatch,
    out_indices: *mut u64,
    capacity: u64,
    out_len: *mut u64,
) -> TcStatus {
    if batch.indices.len() as u64 > capacity {
        return fail(
            TcStatus::BufferTooSmall,
            format!("need {} slots, got {capacity}", batch.indices.len()),
        );
    }
    let slots = unsafe { std::slice::from_raw_parts_mut(out_indices, batch.indices.len()) };
    for (slot, &index) in slots.iter_mut().zip(&batch.indices) {
        *slot = index as u64;
    }
    unsafe { *out_len = batch.indices.len() as u64 };
    TcStatus::Ok
}

/// Runs an embeddings-only selection strategy (typiclust_rp, tpc_rand,
/// tpc_inv, tpc_noclust, random, coreset).
///
/// `labeled` may be null when no indices are labeled yet. `out_indices`
/// must hold at least `budget` slots; the selected count (possibly fewer
/// than `budget` on a small pool) lands in `out_len`.
#[no_mangle]
pub extern "C" fn tc_select(
    handle: *const TcEmbeddings,
    strategy: *const c_char,
    budget: u64,
    seed: u64,
    k_neighbors: u64,
    max_clusters: u64,
    min_cluster_size: u64,
    labeled: *const u64,
    labeled_len: u64,
    out_indices: *mut u64,
    out_len: *mut u64,
) -> TcStatus {
    if handle.is_null() || strategy.is_null() || out_indices.is_null() || out_len.is_null() {
        return fail(TcStatus::NullArgument, "handle, strategy, and outputs must be non-null");
    }
    let set = &unsafe { &*handle }.inner;
    let kind: StrategyKind = match unsafe { CStr::from_ptr(strategy) }.to_str() {
        Ok(name) => match name.parse() {
            Ok(kind) => kind,
            Err(e) => return fail(TcStatus::ValidationError, e),
        },
        Err(e) => return fail(TcStatus::Utf8Error, e),
    };
    let pool = match build_pool(set.len(), labeled, labeled_len) {
        Ok(pool) => pool,
        Err((status, message)) => return fail(status, message),
    };
    let mut config = StrategyConfig::new(kind, seed);
    if k_neighbors > 0 {
        config.k_neighbors = k_neighbors as usize;
    }
    if max_clusters > 0 {
        config.max_clusters = max_clusters as usize;
    }
    if min_cluster_size > 0 {
        config.min_cluster_size = min_cluster_size as usize;
    }
    match strategies::select(set, &pool, budget as usize, &config) {
        Ok(batch) => write_batch_indices(&batch, out_indices, budget, out_len),
        Err(e) => {
            let status = strategy_status(&e);
            fail(status, e)
        }
    }
}

/// Uncertainty-family selection (uncertainty, margin, entropy) from a
/// row-stochastic `rows x classes` probability matrix.
#[no_mangle]
pub extern "C" fn tc_select_with_scores(
    probs: *const f32,
    rows: u64,
    classes: u64,
    strategy: *const c_char,
    budget: u64,
    labeled: *const u64,
    labeled_len: u64,
    out_indices: *mut u64,
    out_len: *mut u64,
) -> TcStatus {
    if probs.is_null() || strategy.is_null() || out_indices.is_null() || out_len.is_null() {
        return fail(TcStatus::NullArgument, "probs, strategy, and outputs must be non-null");
    }
    if classes == 0 {
        return fail(TcStatus::ValidationError, "classes must be positive");
    }
    let kind: StrategyKind = match unsafe { CStr::from_ptr(strategy) }.to_str() {
        Ok(name) => match name.parse() {
            Ok(kind) => kind,
            Err(e) => return fail(TcStatus::ValidationError, e),
        },
        Err(e) => return fail(TcStatus::Utf8Error, e),
    };
    if !kind.needs_scores() {
        return fail(
            TcStatus::ValidationError,
            format!("{kind} is not an uncertainty-family strategy"),
        );
    }
    let len = (rows * classes) as usize;
    let values: Vec<f64> = unsafe { std::slice::from_raw_parts(probs, len) }
        .iter()
        .map(|&v| v as f64)
        .collect();
    let scores = match ScoreMatrix::validate(values, classes as usize) {
        Ok(scores) => scores,
        Err(e) => return fail(TcStatus::ValidationError, e),
    };
    let pool = match build_pool(rows as usize, labeled, labeled_len) {
        Ok(pool) => pool,
        Err((status, message)) => return fail(status, message),
    };
    match strategies::uncertainty_family_select(&scores, &pool, budget as usize, kind) {
        Ok(batch) => write_batch_indices(&batch, out_indices, budget, out_len),
        Err(e) => {
            let status = strategy_status(&e);
            fail(status, e)
        }
    }
}

/// Typicality (inverse mean distance to the k nearest neighbors) of every
/// point. `out_scores` must hold one f64 per row.
#[no_mangle]
pub extern "C" fn tc_typicality(
    handle: *const TcEmbeddings,
    k_neighbors: u64,
    out_scores: *mut f64,
) -> TcStatus {
    if handle.is_null() || out_scores.is_null() {
        return fail(TcStatus::NullArgument, "handle and out_scores must be non-null");
    }
    let set = &unsafe { &*handle }.inner;
    let all: Vec<usize> = (0..set.len()).collect();
    match knn_typicality(set, &all, k_neighbors as usize) {
        Ok(scores) => {
            let slots = unsafe { std::slice::from_raw_parts_mut(out_scores, set.len()) };
            slots.copy_from_slice(scores.scores());
            TcStatus::Ok
        }
        Err(e) => fail(TcStatus::NumericalError, e),
    }
}

/// Total-variation distance between two categorical distributions of
/// equal length.
#[no_mangle]
pub extern "C" fn tc_tv_distance(
    first: *const f64,
    second: *const f64,
    classes: u64,
    out: *mut f64,
) -> TcStatus {
    if first.is_null() || second.is_null() || out.is_null() {
        return fail(TcStatus::NullArgument, "distributions and out must be non-null");
    }
    let a = unsafe { std::slice::from_raw_parts(first, classes as usize) };
    let b = unsafe { std::slice::from_raw_parts(second, classes as usize) };
    match typiclust::metrics::tv_distance(a, b) {
        Ok(value) => {
            unsafe { *out = value };
            TcStatus::Ok
        }
        Err(e) => fail(TcStatus::ValidationError, e),
    }
}
