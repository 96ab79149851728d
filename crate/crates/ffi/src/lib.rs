//! C ABI for `secwire`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or
//! `*_read` functions and released with the matching `*_free`. Every fallible
//! function returns a [`SecwireStatus`]; on failure a message is available
//! from [`secwire_last_error`] on the same thread until the next call.
//! Panics are caught and reported as [`SecwireStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use secwire::bounds::{eta_n, zeta_n, BoundParams};
use secwire::channels::{ChannelTriple, TransitionMatrix};
use secwire::error::Error;
use secwire::feedback::{run_session, IdealTransport};
use secwire::info::{channel_capacity, secrecy_capacity};
use secwire::parsing::{conditional_lz_complexity, incremental_parse, lz_complexity, Alphabet, SymbolSequence};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecwireStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BudgetExceeded = 3,
    Io = 4,
    Internal = 5,
}

pub struct SecwireSequence(SymbolSequence);

pub struct SecwireChannel(TransitionMatrix);

pub struct SecwireTriple(ChannelTriple);

/// Outcome of one feedback session over an ideal link.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SecwireSession {
    pub chunks_sent: usize,
    pub i_star: usize,
    pub stopped: bool,
    pub correct: bool,
    pub compression_ratio: f64,
    pub rho: f64,
    pub impostors: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> SecwireStatus {
    match e {
        Error::BudgetExceeded { .. } => SecwireStatus::BudgetExceeded,
        Error::Io { .. } => SecwireStatus::Io,
        _ => SecwireStatus::InvalidArgument,
    }
}

struct Null;

enum Failure {
    Lib(Error),
    Null,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<Null> for Failure {
    fn from(_: Null) -> Self {
        Failure::Null
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SecwireStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SecwireStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null)) => {
            set_error("null pointer argument".into());
            SecwireStatus::NullPointer
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            SecwireStatus::Internal
        }
    }
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, Null> {
    p.as_ref().ok_or(Null)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Null> {
    p.as_mut().ok_or(Null)
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Null> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Null);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(Failure::Null);
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidArgument("path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn secwire_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn secwire_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a sequence over `{0, ..., alphabet - 1}` from `len` symbols.
///
/// # Safety
/// `data` must point to `len` readable values (or be NULL when `len` is 0)
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn secwire_sequence_new(
    alphabet: usize,
    data: *const u32,
    len: usize,
    out_seq: *mut *mut SecwireSequence,
) -> SecwireStatus {
    guard(|| {
        let out_seq = out(out_seq)?;
        let u = SymbolSequence::new(Alphabet::new(alphabet)?, slice(data, len)?.to_vec())?;
        *out_seq = boxed(SecwireSequence(u));
        Ok(())
    })
}

/// Reads a sequence file.
///
/// # Safety
/// `file` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn secwire_sequence_read(file: *const c_char, out_seq: *mut *mut SecwireSequence) -> SecwireStatus {
    guard(|| {
        let out_seq = out(out_seq)?;
        let u = secwire::io::read_sequence(path(file)?)?;
        *out_seq = boxed(SecwireSequence(u));
        Ok(())
    })
}

/// # Safety
/// `seq` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn secwire_sequence_free(seq: *mut SecwireSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// # Safety
/// `seq` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn secwire_sequence_len(seq: *const SecwireSequence) -> usize {
    seq.as_ref().map_or(0, |s| s.0.len())
}

/// Phrase count `c` and LZ complexity `c log c / n` of a sequence.
///
/// # Safety
/// `seq` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn secwire_lz_complexity(
    seq: *const SecwireSequence,
    out_phrases: *mut usize,
    out_rho: *mut f64,
) -> SecwireStatus {
    guard(|| {
        let u = &get(seq)?.0;
        let (c, rho) = (out(out_phrases)?, out(out_rho)?);
        *rho = lz_complexity(u)?;
        *c = incremental_parse(u).count();
        Ok(())
    })
}

/// Conditional LZ complexity of `u` given `w`.
///
/// # Safety
/// Both handles must be live; `out_rho` must be writable.
#[no_mangle]
pub unsafe extern "C" fn secwire_conditional_lz_complexity(
    u: *const SecwireSequence,
    w: *const SecwireSequence,
    out_rho: *mut f64,
) -> SecwireStatus {
    guard(|| {
        let (u, w, rho) = (&get(u)?.0, &get(w)?.0, out(out_rho)?);
        *rho = conditional_lz_complexity(u, w)?;
        Ok(())
    })
}

/// Creates a channel from a row-major `inputs x outputs` matrix.
///
/// # Safety
/// `data` must point to `inputs * outputs` readable values.
#[no_mangle]
pub unsafe extern "C" fn secwire_channel_new(
    inputs: usize,
    outputs: usize,
    data: *const f64,
    out_channel: *mut *mut SecwireChannel,
) -> SecwireStatus {
    guard(|| {
        let out_channel = out(out_channel)?;
        let len = inputs
            .checked_mul(outputs)
            .ok_or_else(|| Error::InvalidArgument("channel dimensions overflow".into()))?;
        let ch = TransitionMatrix::from_flat(inputs, outputs, slice(data, len)?.to_vec())?;
        *out_channel = boxed(SecwireChannel(ch));
        Ok(())
    })
}

/// Reads a channel file.
///
/// # Safety
/// `file` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn secwire_channel_read(file: *const c_char, out_channel: *mut *mut SecwireChannel) -> SecwireStatus {
    guard(|| {
        let out_channel = out(out_channel)?;
        let ch = secwire::io::read_channel(path(file)?)?;
        *out_channel = boxed(SecwireChannel(ch));
        Ok(())
    })
}

/// # Safety
/// `channel` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn secwire_channel_free(channel: *mut SecwireChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// Capacity of a channel in bits per use, with a certified gap.
///
/// # Safety
/// `channel` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn secwire_channel_capacity(
    channel: *const SecwireChannel,
    tol: f64,
    out_value: *mut f64,
    out_gap: *mut f64,
) -> SecwireStatus {
    guard(|| {
        let ch = &get(channel)?.0;
        let (value, gap) = (out(out_value)?, out(out_gap)?);
        let r = channel_capacity(ch, tol)?;
        *value = r.value;
        *gap = r.certified_gap;
        Ok(())
    })
}

/// Pairs a main channel with a wiretap channel fed by its output. Both
/// channels are copied; the caller keeps ownership of its handles.
///
/// # Safety
/// Both handles must be live; `out_triple` must be writable.
#[no_mangle]
pub unsafe extern "C" fn secwire_triple_new(
    main: *const SecwireChannel,
    wiretap: *const SecwireChannel,
    out_triple: *mut *mut SecwireTriple,
) -> SecwireStatus {
    guard(|| {
        let (main, wiretap, out_triple) = (&get(main)?.0, &get(wiretap)?.0, out(out_triple)?);
        *out_triple = boxed(SecwireTriple(ChannelTriple::new(main.clone(), wiretap.clone())?));
        Ok(())
    })
}

/// # Safety
/// `triple` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn secwire_triple_free(triple: *mut SecwireTriple) {
    if !triple.is_null() {
        drop(Box::from_raw(triple));
    }
}

/// Copies the source-to-eavesdropper cascade into a new channel handle.
///
/// # Safety
/// `triple` must be live; `out_channel` writable.
#[no_mangle]
pub unsafe extern "C" fn secwire_triple_cascade(
    triple: *const SecwireTriple,
    out_channel: *mut *mut SecwireChannel,
) -> SecwireStatus {
    guard(|| {
        let (t, out_channel) = (&get(triple)?.0, out(out_channel)?);
        *out_channel = boxed(SecwireChannel(t.cascade().clone()));
        Ok(())
    })
}

/// Secrecy capacity. When `argmax` is not NULL it receives the maximizing
/// input law and must hold `argmax_len` values, at least the main channel's
/// input alphabet size.
///
/// # Safety
/// `triple` must be live; output pointers writable with the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn secwire_secrecy_capacity(
    triple: *const SecwireTriple,
    tol: f64,
    out_value: *mut f64,
    out_gap: *mut f64,
    argmax: *mut f64,
    argmax_len: usize,
) -> SecwireStatus {
    guard(|| {
        let t = &get(triple)?.0;
        let (value, gap) = (out(out_value)?, out(out_gap)?);
        let r = secrecy_capacity(t, tol)?;
        if !argmax.is_null() {
            let p = r.argmax.as_slice();
            if argmax_len < p.len() {
                return Err(Error::InvalidArgument(format!("argmax buffer holds {argmax_len} values, need {}", p.len())).into());
            }
            std::slice::from_raw_parts_mut(argmax, p.len()).copy_from_slice(p);
        }
        *value = r.value;
        *gap = r.certified_gap;
        Ok(())
    })
}

/// Redundancy term of the bandwidth-expansion bound without side
/// information, minimised over block multiples `ell`.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn secwire_zeta(
    n: usize,
    k: usize,
    q_d: usize,
    alpha: usize,
    eps_n: f64,
    out_value: *mut f64,
    out_ell: *mut usize,
) -> SecwireStatus {
    guard(|| {
        let (value, ell) = (out(out_value)?, out(out_ell)?);
        let params = BoundParams { k, q_d, alpha, eps_n, ..BoundParams::default() };
        params.validate()?;
        let r = zeta_n(n, &params)?;
        *value = r.value;
        *ell = r.ell_star;
        Ok(())
    })
}

/// Redundancy term of the bound with decoder side information.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn secwire_eta(
    n: usize,
    k: usize,
    q_e: usize,
    q_d: usize,
    alpha: usize,
    omega: usize,
    eps_n: f64,
    out_value: *mut f64,
    out_ell: *mut usize,
) -> SecwireStatus {
    guard(|| {
        let (value, ell) = (out(out_value)?, out(out_ell)?);
        let params = BoundParams { k, q_e, q_d, alpha, omega, eps_n, ..BoundParams::default() };
        params.validate()?;
        let r = eta_n(n, &params)?;
        *value = r.value;
        *ell = r.ell_star;
        Ok(())
    })
}

/// Runs one feedback session for `u` with receiver side information `w`
/// over an error-free link.
///
/// # Safety
/// Both handles must be live; `out_session` writable.
#[no_mangle]
pub unsafe extern "C" fn secwire_feedback_session(
    u: *const SecwireSequence,
    w: *const SecwireSequence,
    r: usize,
    delta: f64,
    seed: u64,
    out_session: *mut SecwireSession,
) -> SecwireStatus {
    guard(|| {
        let (u, w, session) = (&get(u)?.0, &get(w)?.0, out(out_session)?);
        let t = run_session(u, w, r, delta, &mut IdealTransport::default(), seed)?;
        *session = SecwireSession {
            chunks_sent: t.chunks_sent,
            i_star: t.i_star,
            stopped: t.stopped_at.is_some(),
            correct: t.correct,
            compression_ratio: t.compression_ratio,
            rho: t.rho,
            impostors: t.impostors,
        };
        Ok(())
    })
}
