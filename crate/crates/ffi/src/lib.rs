//! C ABI for rramkit.
//!
//! Objects are opaque handles created by `*_new`/`*_compile` and released
//! with the matching `*_free`. Every fallible call returns an [`RkStatus`];
//! on failure the message is kept per thread and read back with
//! [`rk_last_error_message`]. Panics are caught at the boundary and reported
//! as `RK_STATUS_PANIC`.
//!
//! Bit and digit buffers are one byte per element (0/1 for bits, 0..=2 for
//! trits, least significant digit first).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rramkit::device::{DeviceError, DeviceParams, LevelConfig, VariationSpec};
use rramkit::limc::{emit_spice, execute_schedule, parse_netlist, schedule, tech_map, LimError, LimSchedule};
use rramkit::mvl::{ternary_add, MvlError, TritVector};
use rramkit::sec::{trng_fill, PufConfig, PufInstance, SecError, TrngConfig};
use rramkit::xbar::{energy_report, Crossbar, XbarError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Capacity = 4,
    Device = 5,
    Security = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

pub struct RkCrossbar {
    xbar: Crossbar,
    levels: LevelConfig,
}

pub struct RkLimProgram {
    sched: LimSchedule,
    inputs: usize,
}

pub struct RkPuf(PufInstance);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail(RkStatus, String);

impl Fail {
    fn null(what: &str) -> Self {
        Fail(RkStatus::NullPointer, format!("{what} is null"))
    }

    fn arg(msg: impl Into<String>) -> Self {
        Fail(RkStatus::InvalidArgument, msg.into())
    }
}

impl From<XbarError> for Fail {
    fn from(e: XbarError) -> Self {
        let status = match e {
            XbarError::OutOfRange { .. }
            | XbarError::TooLarge { .. }
            | XbarError::ZeroDimension { .. }
            | XbarError::DimensionMismatch(_)
            | XbarError::Device(DeviceError::LevelOutOfRange { .. }) => RkStatus::InvalidArgument,
            _ => RkStatus::Device,
        };
        Fail(status, e.to_string())
    }
}

impl From<LimError> for Fail {
    fn from(e: LimError) -> Self {
        let status = match &e {
            LimError::Syntax { .. }
            | LimError::Cycle(_)
            | LimError::DuplicateDriver { .. }
            | LimError::Undefined { .. }
            | LimError::UnsupportedWidth { .. } => RkStatus::Parse,
            LimError::Capacity { .. } | LimError::Fanout { .. } | LimError::Placement(_) => RkStatus::Capacity,
            LimError::InputCount { .. } | LimError::Config { .. } => RkStatus::InvalidArgument,
            LimError::Xbar(_) => RkStatus::Device,
        };
        Fail(status, e.to_string())
    }
}

impl From<MvlError> for Fail {
    fn from(e: MvlError) -> Self {
        let status = match &e {
            MvlError::Capacity { .. } => RkStatus::Capacity,
            MvlError::Xbar(_) | MvlError::Device(_) | MvlError::StateCorruption { .. } => RkStatus::Device,
            _ => RkStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

impl From<SecError> for Fail {
    fn from(e: SecError) -> Self {
        let status = match &e {
            SecError::Xbar(_) | SecError::Device(_) => RkStatus::Device,
            SecError::Config { .. } | SecError::ChallengeLength { .. } => RkStatus::InvalidArgument,
            _ => RkStatus::Security,
        };
        Fail(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RkStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            RkStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn output<'a, T>(p: *mut T, n: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn handle<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail::null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::null(what));
    }
    out.write(v);
    Ok(())
}

fn bits(bytes: &[u8], what: &str) -> Result<Vec<bool>, Fail> {
    bytes
        .iter()
        .map(|b| match b {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(Fail::arg(format!("{what} holds {v}; bits must be 0 or 1"))),
        })
        .collect()
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn rk_status_string(status: RkStatus) -> *const c_char {
    let s: &'static CStr = match status {
        RkStatus::Ok => c"ok",
        RkStatus::NullPointer => c"null pointer",
        RkStatus::InvalidArgument => c"invalid argument",
        RkStatus::Parse => c"parse error",
        RkStatus::Capacity => c"capacity exceeded",
        RkStatus::Device => c"device error",
        RkStatus::Security => c"security primitive error",
        RkStatus::BufferTooSmall => c"buffer too small",
        RkStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Length in bytes of the calling thread's last error message, excluding the
/// terminating NUL; 0 after a successful call.
#[no_mangle]
pub extern "C" fn rk_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes().len()))
}

/// Copy the last error message into `buf` (truncated, always NUL-terminated
/// when `cap > 0`). Returns the full message length.
///
/// # Safety
/// `buf` must be valid for `cap` bytes of writes, or null with `cap == 0`.
#[no_mangle]
pub unsafe extern "C" fn rk_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let msg = e.as_ref().map_or(&[][..], |c| c.as_bytes());
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// New all-HRS crossbar with default device parameters. `d2d` and `c2c`
/// switch the default variation on or off.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rk_crossbar_new(
    rows: usize,
    cols: usize,
    seed: u64,
    d2d: bool,
    c2c: bool,
    out: *mut *mut RkCrossbar,
) -> RkStatus {
    guard(|| {
        let spec = VariationSpec {
            d2d,
            c2c,
            ..VariationSpec::default()
        };
        let mut xbar = Crossbar::new(rows, cols, DeviceParams::default(), spec, seed)?;
        xbar.set_recording(false);
        let h = Box::new(RkCrossbar {
            xbar,
            levels: LevelConfig::six_level(),
        });
        put(out, Box::into_raw(h), "out")
    })
}

/// # Safety
/// `x` must come from [`rk_crossbar_new`] and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn rk_crossbar_free(x: *mut RkCrossbar) {
    if !x.is_null() {
        drop(Box::from_raw(x));
    }
}

/// # Safety
/// `x` must be a live crossbar handle.
#[no_mangle]
pub unsafe extern "C" fn rk_crossbar_write_bit(x: *mut RkCrossbar, row: usize, col: usize, bit: bool) -> RkStatus {
    guard(|| Ok(handle(x, "crossbar")?.xbar.write_bit(row, col, bit)?))
}

/// # Safety
/// `x` must be a live crossbar handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rk_crossbar_read_bit(x: *mut RkCrossbar, row: usize, col: usize, out: *mut bool) -> RkStatus {
    guard(|| {
        let b = handle(x, "crossbar")?.xbar.read_bit(row, col)?;
        put(out, b, "out")
    })
}

/// Sensed resistance in ohms.
///
/// # Safety
/// `x` must be a live crossbar handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rk_crossbar_resistance(x: *mut RkCrossbar, row: usize, col: usize, out: *mut f64) -> RkStatus {
    guard(|| {
        let r = handle(x, "crossbar")?.xbar.sense(row, col)?;
        put(out, r, "out")
    })
}

/// Program one of the six shipped levels (0 = LRS).
///
/// # Safety
/// `x` must be a live crossbar handle.
#[no_mangle]
pub unsafe extern "C" fn rk_crossbar_program_level(
    x: *mut RkCrossbar,
    row: usize,
    col: usize,
    level: usize,
) -> RkStatus {
    guard(|| {
        let h = handle(x, "crossbar")?;
        Ok(h.xbar.program_level(row, col, &h.levels, level)?)
    })
}

/// # Safety
/// `x` must be a live crossbar handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rk_crossbar_read_level(
    x: *mut RkCrossbar,
    row: usize,
    col: usize,
    out: *mut usize,
) -> RkStatus {
    guard(|| {
        let h = handle(x, "crossbar")?;
        let l = h.xbar.read_level(row, col, &h.levels)?;
        put(out, l, "out")
    })
}

/// Parse, map and schedule a BLIF netlist for a `rows x cols` array.
///
/// # Safety
/// `blif` must be a NUL-terminated string and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rk_lim_compile(
    blif: *const c_char,
    rows: usize,
    cols: usize,
    out: *mut *mut RkLimProgram,
) -> RkStatus {
    guard(|| {
        if blif.is_null() {
            return Err(Fail::null("blif"));
        }
        let text = CStr::from_ptr(blif)
            .to_str()
            .map_err(|_| Fail(RkStatus::Parse, "netlist is not UTF-8".into()))?;
        let net = parse_netlist(text)?;
        let sched = schedule(&tech_map(&net)?, rows, cols)?;
        let h = Box::new(RkLimProgram {
            sched,
            inputs: net.inputs.len(),
        });
        put(out, Box::into_raw(h), "out")
    })
}

/// # Safety
/// `p` must come from [`rk_lim_compile`] and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn rk_lim_free(p: *mut RkLimProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Primary input count; 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live program handle.
#[no_mangle]
pub unsafe extern "C" fn rk_lim_num_inputs(p: *const RkLimProgram) -> usize {
    p.as_ref().map_or(0, |p| p.inputs)
}

/// Primary output count; 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live program handle.
#[no_mangle]
pub unsafe extern "C" fn rk_lim_num_outputs(p: *const RkLimProgram) -> usize {
    p.as_ref().map_or(0, |p| p.sched.outputs.len())
}

/// Execute one input vector. `energy_j` may be null; otherwise it receives
/// the total energy of the run in joules.
///
/// # Safety
/// `p` and `x` must be live handles, `inputs` readable for `n_inputs` bytes,
/// `outputs` writable for `n_outputs` bytes, `energy_j` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rk_lim_run(
    p: *const RkLimProgram,
    x: *mut RkCrossbar,
    inputs: *const u8,
    n_inputs: usize,
    outputs: *mut u8,
    n_outputs: usize,
    energy_j: *mut f64,
) -> RkStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| Fail::null("program"))?;
        let h = handle(x, "crossbar")?;
        let bits = bits(input(inputs, n_inputs, "inputs")?, "inputs")?;
        let out = output(outputs, n_outputs, "outputs")?;
        if out.len() != p.sched.outputs.len() {
            return Err(Fail::arg(format!(
                "need {} output slots, got {}",
                p.sched.outputs.len(),
                out.len()
            )));
        }
        let (got, tr) = execute_schedule(&mut h.xbar, &p.sched, &bits)?;
        for (o, g) in out.iter_mut().zip(got) {
            *o = g as u8;
        }
        if !energy_j.is_null() {
            energy_j.write(energy_report(&tr).total);
        }
        Ok(())
    })
}

/// Write the SPICE netlist for one input vector as a NUL-terminated string.
/// `needed` (if non-null) receives the size including the NUL; with a
/// too-small `buf` nothing is written and `RK_STATUS_BUFFER_TOO_SMALL` is
/// returned.
///
/// # Safety
/// `p` must be a live handle, `inputs` readable for `n_inputs` bytes, `buf`
/// writable for `cap` bytes (or null with `cap == 0`), `needed` null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rk_lim_emit_spice(
    p: *const RkLimProgram,
    inputs: *const u8,
    n_inputs: usize,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> RkStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| Fail::null("program"))?;
        let bits = bits(input(inputs, n_inputs, "inputs")?, "inputs")?;
        let text = emit_spice(&p.sched, &bits, &DeviceParams::default())?;
        let size = text.len() + 1;
        if !needed.is_null() {
            needed.write(size);
        }
        if cap < size {
            return Err(Fail(RkStatus::BufferTooSmall, format!("need {size} bytes, got {cap}")));
        }
        let dst = output(buf.cast::<u8>(), cap, "buf")?;
        dst[..text.len()].copy_from_slice(text.as_bytes());
        dst[text.len()] = 0;
        Ok(())
    })
}

/// Add two `n`-trit numbers in the crossbar (cells from the origin). `sum`
/// receives `n + 1` digits.
///
/// # Safety
/// `x` must be a live handle, `a` and `b` readable for `n` bytes, `sum`
/// writable for `n + 1` bytes.
#[no_mangle]
pub unsafe extern "C" fn rk_ternary_add(
    x: *mut RkCrossbar,
    a: *const u8,
    b: *const u8,
    n: usize,
    sum: *mut u8,
) -> RkStatus {
    guard(|| {
        let h = handle(x, "crossbar")?;
        let ta = TritVector::new(input(a, n, "a")?.to_vec())?;
        let tb = TritVector::new(input(b, n, "b")?.to_vec())?;
        let out = output(sum, n + 1, "sum")?;
        let s = ternary_add(&mut h.xbar, &ta, &tb, &h.levels)?;
        out.copy_from_slice(s.digits());
        Ok(())
    })
}

/// Fill `out` with `n` TRNG bits from cell (`row`, `col`). A non-positive
/// `amplitude` selects the shipped default.
///
/// # Safety
/// `x` must be a live handle and `out` writable for `n` bytes.
#[no_mangle]
pub unsafe extern "C" fn rk_trng_fill(
    x: *mut RkCrossbar,
    row: usize,
    col: usize,
    amplitude: f64,
    debias: bool,
    out: *mut u8,
    n: usize,
) -> RkStatus {
    guard(|| {
        let h = handle(x, "crossbar")?;
        let dst = output(out, n, "out")?;
        let mut cfg = TrngConfig {
            cell: (row, col),
            debias,
            ..TrngConfig::default()
        };
        if amplitude > 0.0 {
            cfg.pulse_amplitude = amplitude;
        }
        let bits = trng_fill(&mut h.xbar, n, &cfg)?.bits;
        for (d, b) in dst.iter_mut().zip(bits) {
            *d = b as u8;
        }
        Ok(())
    })
}

/// New PUF chip with default device, variation and PUF settings.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn rk_puf_new(chip_seed: u64, out: *mut *mut RkPuf) -> RkStatus {
    guard(|| {
        let inst = PufInstance::new(
            chip_seed,
            &DeviceParams::default(),
            &VariationSpec::default(),
            &PufConfig::default(),
        )?;
        put(out, Box::into_raw(Box::new(RkPuf(inst))), "out")
    })
}

/// # Safety
/// `p` must come from [`rk_puf_new`] and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn rk_puf_free(p: *mut RkPuf) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be null or a live PUF handle.
#[no_mangle]
pub unsafe extern "C" fn rk_puf_challenge_len(p: *const RkPuf) -> usize {
    p.as_ref().map_or(0, |p| p.0.config().challenge_len)
}

/// # Safety
/// `p` must be null or a live PUF handle.
#[no_mangle]
pub unsafe extern "C" fn rk_puf_response_len(p: *const RkPuf) -> usize {
    p.as_ref().map_or(0, |p| p.0.config().response_len)
}

/// # Safety
/// `p` must be a live handle, `challenge` readable for `n_challenge` bytes
/// and `response` writable for `n_response` bytes.
#[no_mangle]
pub unsafe extern "C" fn rk_puf_response(
    p: *mut RkPuf,
    challenge: *const u8,
    n_challenge: usize,
    response: *mut u8,
    n_response: usize,
) -> RkStatus {
    guard(|| {
        let p = handle(p, "puf")?;
        let ch = bits(input(challenge, n_challenge, "challenge")?, "challenge")?;
        let dst = output(response, n_response, "response")?;
        if dst.len() != p.0.config().response_len {
            return Err(Fail::arg(format!(
                "need {} response slots, got {}",
                p.0.config().response_len,
                dst.len()
            )));
        }
        for (d, b) in dst.iter_mut().zip(p.0.response(&ch)?) {
            *d = b as u8;
        }
        Ok(())
    })
}
