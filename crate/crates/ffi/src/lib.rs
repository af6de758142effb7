//! C ABI over the `evwave` core.
//!
//! Every fallible entry point returns an [`EvwStatus`]; on failure the
//! message is available from [`evw_last_error_message`] on the same thread.
//! Objects are opaque handles created by `*_new`/`*_load` and released by the
//! matching `*_free`. Buffers are caller-owned and row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use evwave::event_io::{parse_events, polarity_matrix, ParseOptions};
use evwave::nn::{
    manifest::Manifest, repconv_forward_deploy, repconv_forward_train, repconv_fuse, RepConvParams, Tensor,
};
use evwave::pipeline::psnr;
use evwave::query_select::{select_queries, QueryScore};
use evwave::representation::{decay_factor, Representer};
use evwave::wavelet::{dwt2d, idwt2d, wavelet_pool};
use evwave::{
    DecayParams, Error, Event, EventFormat, EventWindow, GrayFrame, Grid, Matrix, Polarity, SensorDims,
    WaveletCoeffs2D, WaveletFilters,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    ParseError = 4,
    IoError = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvwFormat {
    Csv = 0,
    Binary = 1,
}

/// One event. `p` is +1 or -1.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvwEvent {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub p: i8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvwDecayParams {
    pub k: f64,
    pub b: f64,
    pub c_thresh: f64,
    pub s_min: f64,
    pub s_max: f64,
}

impl From<EvwDecayParams> for DecayParams {
    fn from(p: EvwDecayParams) -> Self {
        DecayParams { k: p.k, b: p.b, c_thresh: p.c_thresh, s_min: p.s_min, s_max: p.s_max }
    }
}

/// A parsed event file.
pub struct EvwEventStream {
    events: Vec<Event>,
    dims: SensorDims,
}

/// Running time-decay surface.
pub struct EvwRepresenter {
    inner: Representer,
}

/// RepConv weights; the fused kernel is computed on load.
pub struct EvwRepConv {
    params: RepConvParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> EvwStatus {
    match e {
        Error::Parse { .. } | Error::Validation { .. } | Error::Unsorted { .. } => EvwStatus::ParseError,
        Error::Dimension(_) => EvwStatus::DimensionMismatch,
        Error::Io { .. } => EvwStatus::IoError,
        _ => EvwStatus::InvalidArgument,
    }
}

struct Fail(EvwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: EvwStatus, msg: impl Into<String>) -> Result<T, Fail> {
    Err(Fail(status, msg.into()))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EvwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EvwStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            EvwStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        fail(EvwStatus::NullPointer, format!("{what} is null"))
    } else {
        Ok(())
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn checked_len(dims: &[usize]) -> Result<usize, Fail> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .map_or_else(|| fail(EvwStatus::InvalidArgument, "buffer size overflows"), Ok)
}

unsafe fn matrix_in(p: *const f64, width: usize, height: usize, what: &str) -> Result<Matrix, Fail> {
    let len = checked_len(&[width, height])?;
    Ok(Grid::from_vec(width, height, slice(p, len, what)?.to_vec())?)
}

/// Message for the most recent failure on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn evw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn evw_decay_params_default() -> EvwDecayParams {
    let d = DecayParams::default();
    EvwDecayParams { k: d.k, b: d.b, c_thresh: d.c_thresh, s_min: d.s_min, s_max: d.s_max }
}

/// Decay multiplier applied over `dt_us` microseconds.
///
/// # Safety
/// `params` must point to a valid `EvwDecayParams`.
#[no_mangle]
pub unsafe extern "C" fn evw_decay_factor(params: *const EvwDecayParams, dt_us: u64, out: *mut f64) -> EvwStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(out, "out")?;
        let p: DecayParams = (*params).into();
        p.validate()?;
        *out = decay_factor(&p, dt_us);
        Ok(())
    })
}

/// Parses an event file. `width`/`height` are required for CSV and ignored
/// (taken from the header) for binary input when zero.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evw_events_load(
    path: *const c_char,
    format: EvwFormat,
    width: u32,
    height: u32,
    polarity01: bool,
    out: *mut *mut EvwEventStream,
) -> EvwStatus {
    guard(|| {
        non_null(path, "path")?;
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let path = CStr::from_ptr(path).to_str().or_else(|_| fail(EvwStatus::InvalidArgument, "path is not UTF-8"))?;
        let file = File::open(path).map_err(|e| Error::Io { context: format!("opening {path}"), source: e })?;
        let format = match format {
            EvwFormat::Csv => EventFormat::Csv,
            EvwFormat::Binary => EventFormat::Binary,
        };
        let dims = (width > 0 && height > 0).then(|| SensorDims::new(width as usize, height as usize));
        let opts = ParseOptions { dims, polarity01, strict: false };
        let parsed = parse_events(file, format, &opts)?;
        let dims = match parsed.dims {
            Some(d) => d,
            None => return fail(EvwStatus::InvalidArgument, "sensor dims are required for CSV input"),
        };
        *out = Box::into_raw(Box::new(EvwEventStream { events: parsed.events, dims }));
        Ok(())
    })
}

/// Number of events in the stream, 0 for a null handle.
///
/// # Safety
/// `stream` must be null or a live handle from `evw_events_load`.
#[no_mangle]
pub unsafe extern "C" fn evw_events_len(stream: *const EvwEventStream) -> usize {
    stream.as_ref().map_or(0, |s| s.events.len())
}

/// Sensor size of the stream.
///
/// # Safety
/// `stream` must be a live handle; `width` and `height` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn evw_events_dims(
    stream: *const EvwEventStream,
    width: *mut u32,
    height: *mut u32,
) -> EvwStatus {
    guard(|| {
        non_null(stream, "stream")?;
        non_null(width, "width")?;
        non_null(height, "height")?;
        let s = &*stream;
        *width = s.dims.width as u32;
        *height = s.dims.height as u32;
        Ok(())
    })
}

/// Copies up to `cap` events starting at `offset` into `out`.
///
/// # Safety
/// `stream` must be a live handle and `out` must hold `cap` events.
#[no_mangle]
pub unsafe extern "C" fn evw_events_copy(
    stream: *const EvwEventStream,
    offset: usize,
    out: *mut EvwEvent,
    cap: usize,
    written: *mut usize,
) -> EvwStatus {
    guard(|| {
        non_null(stream, "stream")?;
        non_null(written, "written")?;
        let s = &*stream;
        let src = s.events.get(offset..).unwrap_or(&[]);
        let n = src.len().min(cap);
        let dst = slice_mut(out, n, "out")?;
        for (d, e) in dst.iter_mut().zip(src) {
            *d = EvwEvent { t: e.t, x: e.x, y: e.y, p: e.p.sign() as i8 };
        }
        *written = n;
        Ok(())
    })
}

/// # Safety
/// `stream` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evw_events_free(stream: *mut EvwEventStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// Creates a surface at the initial level. `params` may be null for defaults.
///
/// # Safety
/// `params` must be null or valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn evw_representer_new(
    width: u32,
    height: u32,
    params: *const EvwDecayParams,
    out: *mut *mut EvwRepresenter,
) -> EvwStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        if width == 0 || height == 0 {
            return fail(EvwStatus::InvalidArgument, "width and height must be non-zero");
        }
        let params = params.as_ref().map_or_else(DecayParams::default, |p| (*p).into());
        let inner = Representer::new(SensorDims::new(width as usize, height as usize), params)?;
        *out = Box::into_raw(Box::new(EvwRepresenter { inner }));
        Ok(())
    })
}

/// Folds one window of `n` events spanning `dt_us` into the surface and
/// writes the gray frame (`width * height` bytes) to `frame_out`.
///
/// # Safety
/// `rep` must be live, `events` must hold `n` events and `frame_out`
/// `frame_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn evw_representer_push(
    rep: *mut EvwRepresenter,
    events: *const EvwEvent,
    n: usize,
    dt_us: u64,
    frame_out: *mut u8,
    frame_len: usize,
) -> EvwStatus {
    guard(|| {
        non_null(rep, "representer")?;
        let rep = &mut *rep;
        let dims = rep.inner.surface().dims();
        if !frame_out.is_null() && frame_len != dims.pixels() {
            return fail(
                EvwStatus::DimensionMismatch,
                format!("frame buffer holds {frame_len} bytes, need {}", dims.pixels()),
            );
        }
        let raw = slice(events, n, "events")?;
        let mut evs = Vec::with_capacity(n);
        for (i, e) in raw.iter().enumerate() {
            let p = match e.p {
                1 => Polarity::On,
                -1 => Polarity::Off,
                other => return fail(EvwStatus::InvalidArgument, format!("event {i}: polarity {other}")),
            };
            evs.push(Event::new(e.t, e.x, e.y, p));
        }
        let window = EventWindow { events: evs, t_start: 0, t_end: dt_us, dims };
        let pmat = polarity_matrix(&window)?;
        rep.inner.step(&pmat, dt_us)?;
        if !frame_out.is_null() {
            let frame = rep.inner.frame();
            slice_mut(frame_out, frame_len, "frame_out")?.copy_from_slice(frame.pixels.as_slice());
        }
        Ok(())
    })
}

/// # Safety
/// `rep` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evw_representer_free(rep: *mut EvwRepresenter) {
    if !rep.is_null() {
        drop(Box::from_raw(rep));
    }
}

/// One-level Haar decomposition of a `height x width` matrix into four
/// `height/2 x width/2` subbands.
///
/// # Safety
/// `x` must hold `width * height` values and each band `width * height / 4`.
#[no_mangle]
pub unsafe extern "C" fn evw_dwt2d(
    x: *const f64,
    width: usize,
    height: usize,
    ll: *mut f64,
    lh: *mut f64,
    hl: *mut f64,
    hh: *mut f64,
) -> EvwStatus {
    guard(|| {
        let m = matrix_in(x, width, height, "x")?;
        let c = dwt2d(&m, &WaveletFilters::haar())?;
        for ((name, band), dst) in c.bands().into_iter().zip([ll, lh, hl, hh]) {
            slice_mut(dst, band.as_slice().len(), name)?.copy_from_slice(band.as_slice());
        }
        Ok(())
    })
}

/// Inverse of [`evw_dwt2d`]; `half_width`/`half_height` are the band sizes.
///
/// # Safety
/// Each band must hold `half_width * half_height` values and `out` four
/// times as many.
#[no_mangle]
pub unsafe extern "C" fn evw_idwt2d(
    ll: *const f64,
    lh: *const f64,
    hl: *const f64,
    hh: *const f64,
    half_width: usize,
    half_height: usize,
    out: *mut f64,
) -> EvwStatus {
    guard(|| {
        let c = WaveletCoeffs2D {
            ll: matrix_in(ll, half_width, half_height, "ll")?,
            lh: matrix_in(lh, half_width, half_height, "lh")?,
            hl: matrix_in(hl, half_width, half_height, "hl")?,
            hh: matrix_in(hh, half_width, half_height, "hh")?,
        };
        let x = idwt2d(&c, &WaveletFilters::haar())?;
        slice_mut(out, x.as_slice().len(), "out")?.copy_from_slice(x.as_slice());
        Ok(())
    })
}

/// Haar wavelet pooling: the low-low band of one decomposition level.
///
/// # Safety
/// `x` must hold `width * height` values and `out` a quarter of that.
#[no_mangle]
pub unsafe extern "C" fn evw_wavelet_pool(x: *const f64, width: usize, height: usize, out: *mut f64) -> EvwStatus {
    guard(|| {
        let m = matrix_in(x, width, height, "x")?;
        let p = wavelet_pool(&m, &WaveletFilters::haar())?;
        slice_mut(out, p.as_slice().len(), "out")?.copy_from_slice(p.as_slice());
        Ok(())
    })
}

/// PSNR in dB between two 8-bit frames; identical frames give +infinity.
///
/// # Safety
/// `a` and `b` must each hold `width * height` bytes.
#[no_mangle]
pub unsafe extern "C" fn evw_psnr(a: *const u8, b: *const u8, width: usize, height: usize, out: *mut f64) -> EvwStatus {
    guard(|| {
        non_null(out, "out")?;
        let len = checked_len(&[width, height])?;
        let fa = GrayFrame::new(Grid::from_vec(width, height, slice(a, len, "a")?.to_vec())?);
        let fb = GrayFrame::new(Grid::from_vec(width, height, slice(b, len, "b")?.to_vec())?);
        *out = psnr(&fa, &fb)?;
        Ok(())
    })
}

/// Writes the indices of the `k` least uncertain of `n` queries to `out`.
///
/// # Safety
/// `p_loc` and `c_cls` must hold `n` values and `out` `k` indices.
#[no_mangle]
pub unsafe extern "C" fn evw_select_queries(
    p_loc: *const f64,
    c_cls: *const f64,
    n: usize,
    k: usize,
    out: *mut usize,
) -> EvwStatus {
    guard(|| {
        let p = slice(p_loc, n, "p_loc")?;
        let c = slice(c_cls, n, "c_cls")?;
        let scores = p.iter().zip(c).map(|(&p, &c)| QueryScore::new(p, c)).collect::<evwave::Result<Vec<_>>>()?;
        let picked = select_queries(&scores, k)?;
        slice_mut(out, k, "out")?.copy_from_slice(&picked);
        Ok(())
    })
}

/// Loads RepConv weights stored under `prefix` in a manifest file.
///
/// # Safety
/// `path` and `prefix` must be NUL-terminated strings; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn evw_repconv_load(
    path: *const c_char,
    prefix: *const c_char,
    out: *mut *mut EvwRepConv,
) -> EvwStatus {
    guard(|| {
        non_null(path, "path")?;
        non_null(prefix, "prefix")?;
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let path = CStr::from_ptr(path).to_string_lossy().into_owned();
        let prefix = CStr::from_ptr(prefix).to_string_lossy().into_owned();
        let text =
            std::fs::read_to_string(&path).map_err(|e| Error::Io { context: format!("reading {path}"), source: e })?;
        let params = repconv_fuse(&Manifest::parse(&text)?.repconv(&prefix)?)?;
        *out = Box::into_raw(Box::new(EvwRepConv { params }));
        Ok(())
    })
}

/// Channel counts of a loaded RepConv.
///
/// # Safety
/// `rc` must be live; the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn evw_repconv_channels(
    rc: *const EvwRepConv,
    in_channels: *mut usize,
    out_channels: *mut usize,
) -> EvwStatus {
    guard(|| {
        non_null(rc, "repconv")?;
        non_null(in_channels, "in_channels")?;
        non_null(out_channels, "out_channels")?;
        *in_channels = (*rc).params.in_channels();
        *out_channels = (*rc).params.out_channels();
        Ok(())
    })
}

/// Runs the block on an `[n, c, h, w]` input, either through the separate
/// branches (`deploy == false`) or the fused kernel. Output is
/// `[n, out_channels, h, w]`.
///
/// # Safety
/// `rc` must be live, `x` must hold `n*c*h*w` values and `out` `out_len`.
#[no_mangle]
pub unsafe extern "C" fn evw_repconv_forward(
    rc: *const EvwRepConv,
    deploy: bool,
    x: *const f64,
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    out: *mut f64,
    out_len: usize,
) -> EvwStatus {
    guard(|| {
        non_null(rc, "repconv")?;
        let params = &(*rc).params;
        let len = checked_len(&[n, c, h, w])?;
        let input = Tensor::from_vec([n, c, h, w], slice(x, len, "x")?.to_vec())?;
        let y = if deploy { repconv_forward_deploy(&input, params)? } else { repconv_forward_train(&input, params)? };
        if y.data().len() != out_len {
            return fail(
                EvwStatus::DimensionMismatch,
                format!("output buffer holds {out_len} values, need {}", y.data().len()),
            );
        }
        slice_mut(out, out_len, "out")?.copy_from_slice(y.data());
        Ok(())
    })
}

/// # Safety
/// `rc` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evw_repconv_free(rc: *mut EvwRepConv) {
    if !rc.is_null() {
        drop(Box::from_raw(rc));
    }
}
