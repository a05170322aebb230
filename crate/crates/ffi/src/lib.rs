//! C ABI over `mhdnn`. Handles are opaque heap objects released with their `_free`
//! function; every fallible call returns an [`MhdnnStatus`] and records a message
//! retrievable with [`mhdnn_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mhdnn::cipher::{Cipher, CipherKey, KEY_LEN};
use mhdnn::dynamics;
use mhdnn::neuron::{self, MhdnnParams, MhdnnState};
use mhdnn::pnm::{read_pnm, write_pnm, ImageBuffer};
use mhdnn::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MhdnnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Divergent = 3,
    KeyRejected = 4,
    Image = 5,
    Pnm = 6,
    Io = 7,
    Protocol = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Map parameters in the order `a, b, c, h, m, k`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MhdnnParamsC {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub h: f64,
    pub m: f64,
    pub k: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MhdnnStateC {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Opaque secret key.
pub struct MhdnnKey(CipherKey);

/// Opaque cipher keyed for one image size.
pub struct MhdnnCipher {
    inner: Cipher,
    rows: usize,
    cols: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MhdnnStatus {
    match e {
        Error::Divergent { .. } => MhdnnStatus::Divergent,
        Error::KeyRejected { .. } => MhdnnStatus::KeyRejected,
        Error::Image(_) => MhdnnStatus::Image,
        Error::Pnm(_) => MhdnnStatus::Pnm,
        Error::Io(_) => MhdnnStatus::Io,
        Error::Protocol(_) => MhdnnStatus::Protocol,
        Error::InvalidArgument(_) | Error::TooShort { .. } | Error::UndefinedCorrelation(_) | Error::NonFinite => {
            MhdnnStatus::InvalidArgument
        }
    }
}

struct Fail(MhdnnStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MhdnnStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MhdnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MhdnnStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MhdnnStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn to_params(p: &MhdnnParamsC) -> MhdnnParams {
    MhdnnParams::new(p.a, p.b, p.c, p.h, p.m).with_k(p.k)
}

/// NUL-terminated message of the last failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mhdnn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mhdnn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a key from `(x0, y0, z0, a, b, c, h, m)`.
///
/// # Safety
/// `values` must point to 8 doubles and `out_key` to writable storage for a pointer.
#[no_mangle]
pub unsafe extern "C" fn mhdnn_key_new(values: *const f64, out_key: *mut *mut MhdnnKey) -> MhdnnStatus {
    guard(|| {
        let v = slice(values, 8, "values")?;
        let slot = out(out_key, "out_key")?;
        let key = CipherKey::from_array(v.try_into().expect("8 values"))?;
        *slot = Box::into_raw(Box::new(MhdnnKey(key)));
        Ok(())
    })
}

/// Parses a 64-byte binary key or its 8-line text form.
///
/// # Safety
/// `bytes` must point to `len` readable bytes and `out_key` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn mhdnn_key_parse(bytes: *const u8, len: usize, out_key: *mut *mut MhdnnKey) -> MhdnnStatus {
    guard(|| {
        let b = slice(bytes, len, "bytes")?;
        let slot = out(out_key, "out_key")?;
        *slot = Box::into_raw(Box::new(MhdnnKey(CipherKey::from_file_bytes(b)?)));
        Ok(())
    })
}

/// Writes the 64-byte little-endian serialization.
///
/// # Safety
/// `key` must come from this library and `out_bytes` must have room for 64 bytes.
#[no_mangle]
pub unsafe extern "C" fn mhdnn_key_to_bytes(key: *const MhdnnKey, out_bytes: *mut u8) -> MhdnnStatus {
    guard(|| {
        let k = key.as_ref().ok_or_else(|| null("key"))?;
        slice_mut(out_bytes, KEY_LEN, "out_bytes")?.copy_from_slice(&k.0.to_bytes());
        Ok(())
    })
}

/// # Safety
/// `key` must be NULL or a pointer from this library that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mhdnn_key_free(key: *mut MhdnnKey) {
    if !key.is_null() {
        drop(Box::from_raw(key));
    }
}

/// Derives keystreams and S-box for `rows x cols` images.
///
/// # Safety
/// `key` must come from this library and `out_cipher` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhdnn_cipher_new(
    key: *const MhdnnKey,
    rows: usize,
    cols: usize,
    out_cipher: *mut *mut MhdnnCipher,
) -> MhdnnStatus {
    guard(|| {
        let k = key.as_ref().ok_or_else(|| null("key"))?;
        let slot = out(out_cipher, "out_cipher")?;
        let inner = Cipher::new(&k.0, rows, cols)?;
        *slot = Box::into_raw(Box::new(MhdnnCipher { inner, rows, cols }));
        Ok(())
    })
}

/// Copies the 256-entry substitution table into `out_table` (row-major 16x16).
///
/// # Safety
/// `cipher` must come from this library and `out_table` must have room for 256 bytes.
#[no_mangle]
pub unsafe extern "C" fn mhdnn_cipher_sbox(cipher: *const MhdnnCipher, out_table: *mut u8) -> MhdnnStatus {
    guard(|| {
        let c = cipher.as_ref().ok_or_else(|| null("cipher"))?;
        let dst = slice_mut(out_table, 256, "out_table")?;
        for (r, row) in c.inner.sbox().table.iter().enumerate() {
            dst[r * 16..r * 16 + 16].copy_from_slice(row);
        }
        Ok(())
    })
}

unsafe fn transform(
    cipher: *const MhdnnCipher,
    pixels: *mut u8,
    len: usize,
    channels: usize,
    decrypt: bool,
) -> MhdnnStatus {
    guard(|| {
        let c = cipher.as_ref().ok_or_else(|| null("cipher"))?;
        let px = slice_mut(pixels, len, "pixels")?;
        let img = ImageBuffer::new(c.cols, c.rows, channels, px.to_vec())?;
        let res = if decrypt { c.inner.decrypt(&img)? } else { c.inner.encrypt(&img)? };
        px.copy_from_slice(res.pixels());
        Ok(())
    })
}

/// Encrypts row-major, channel-interleaved pixels in place; `channels` is 1 or 3 and
/// `len` must equal `rows * cols * channels`.
///
/// # Safety
/// `cipher` must come from this library and `pixels` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mhdnn_cipher_encrypt(
    cipher: *const MhdnnCipher,
    pixels: *mut u8,
    len: usize,
    channels: usize,
) -> MhdnnStatus {
    transform(cipher, pixels, len, channels, false)
}

/// Inverse of [`mhdnn_cipher_encrypt`].
///
/// # Safety
/// Same as [`mhdnn_cipher_encrypt`].
#[no_mangle]
pub unsafe extern "C" fn mhdnn_cipher_decrypt(
    cipher: *const MhdnnCipher,
    pixels: *mut u8,
    len: usize,
    channels: usize,
) -> MhdnnStatus {
    transform(cipher, pixels, len, channels, true)
}

/// # Safety
/// `cipher` must be NULL or a pointer from this library that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mhdnn_cipher_free(cipher: *mut MhdnnCipher) {
    if !cipher.is_null() {
        drop(Box::from_raw(cipher));
    }
}

unsafe fn pnm_transform(
    key: *const MhdnnKey,
    input: *const u8,
    len: usize,
    out_data: *mut *mut u8,
    out_len: *mut usize,
    decrypt: bool,
) -> MhdnnStatus {
    guard(|| {
        let k = key.as_ref().ok_or_else(|| null("key"))?;
        let img = read_pnm(slice(input, len, "input")?)?;
        let (data_slot, len_slot) = (out(out_data, "out_data")?, out(out_len, "out_len")?);
        let res = if decrypt { mhdnn::cipher::decrypt(&img, &k.0)? } else { mhdnn::cipher::encrypt(&img, &k.0)? };
        let bytes = write_pnm(&res).into_boxed_slice();
        *len_slot = bytes.len();
        *data_slot = Box::into_raw(bytes).cast();
        Ok(())
    })
}

/// Encrypts a binary PNM file image. The result is allocated by the library and must
/// be released with [`mhdnn_bytes_free`].
///
/// # Safety
/// `input` must point to `len` readable bytes; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mhdnn_encrypt_pnm(
    key: *const MhdnnKey,
    input: *const u8,
    len: usize,
    out_data: *mut *mut u8,
    out_len: *mut usize,
) -> MhdnnStatus {
    pnm_transform(key, input, len, out_data, out_len, false)
}

/// # Safety
/// Same as [`mhdnn_encrypt_pnm`].
#[no_mangle]
pub unsafe extern "C" fn mhdnn_decrypt_pnm(
    key: *const MhdnnKey,
    input: *const u8,
    len: usize,
    out_data: *mut *mut u8,
    out_len: *mut usize,
) -> MhdnnStatus {
    pnm_transform(key, input, len, out_data, out_len, true)
}

/// # Safety
/// `data`/`len` must be exactly a pair returned by this library, or `data` NULL.
#[no_mangle]
pub unsafe extern "C" fn mhdnn_bytes_free(data: *mut u8, len: usize) {
    if !data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(data, len)));
    }
}

/// One step of the coupled map.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mhdnn_step(
    params: *const MhdnnParamsC,
    state: *const MhdnnStateC,
    out_state: *mut MhdnnStateC,
) -> MhdnnStatus {
    guard(|| {
        let p = to_params(params.as_ref().ok_or_else(|| null("params"))?);
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        let n = neuron::mhdnn_step(MhdnnState::new(s.x, s.y, s.z), &p);
        *out(out_state, "out_state")? = MhdnnStateC { x: n.x, y: n.y, z: n.z };
        Ok(())
    })
}

/// Writes `n` states (after `transient` discarded steps) as `x, y, z` triples into
/// `out_xyz`, which must hold `3 * n` doubles.
///
/// # Safety
/// All pointers must be valid and `out_xyz` must hold `out_cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn mhdnn_iterate(
    params: *const MhdnnParamsC,
    state: *const MhdnnStateC,
    transient: usize,
    n: usize,
    out_xyz: *mut f64,
    out_cap: usize,
) -> MhdnnStatus {
    guard(|| {
        let p = to_params(params.as_ref().ok_or_else(|| null("params"))?);
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        let need = n.checked_mul(3).ok_or_else(|| Fail(MhdnnStatus::InvalidArgument, "n too large".into()))?;
        if out_cap < need {
            return Err(Fail(MhdnnStatus::BufferTooSmall, format!("need {need} doubles, got {out_cap}")));
        }
        let dst = slice_mut(out_xyz, need, "out_xyz")?;
        let orbit = neuron::iterate(&p, MhdnnState::new(s.x, s.y, s.z), transient, n)?;
        for (chunk, st) in dst.chunks_exact_mut(3).zip(&orbit.states) {
            chunk.copy_from_slice(&st.to_array());
        }
        Ok(())
    })
}

/// Lyapunov spectrum, sorted descending, into `out_spectrum[3]`.
///
/// # Safety
/// All pointers must be valid; `out_spectrum` must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn mhdnn_lyapunov(
    params: *const MhdnnParamsC,
    state: *const MhdnnStateC,
    transient: usize,
    iterations: usize,
    out_spectrum: *mut f64,
) -> MhdnnStatus {
    guard(|| {
        let p = to_params(params.as_ref().ok_or_else(|| null("params"))?);
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        let dst = slice_mut(out_spectrum, 3, "out_spectrum")?;
        let sp = dynamics::lyapunov_spectrum(&p, MhdnnState::new(s.x, s.y, s.z), transient, iterations)?;
        dst.copy_from_slice(&sp.to_array());
        Ok(())
    })
}
