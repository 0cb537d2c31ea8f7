//! Multi-valued computing on multi-level cells: trit storage, a
//! digit-serial ternary adder and a Krinsky automaton held in one device.

mod krinsky;

pub use krinsky::{
    action_of, krinsky_next, krinsky_step, run_automaton, run_software, AutomatonConfig, AutomatonRun, Feedback,
    StepRecord,
};

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::device::{DeviceError, DeviceParams, LevelConfig, VariationSpec};
use crate::seed;
use crate::xbar::{Crossbar, XbarError};

#[derive(Debug, thiserror::Error)]
pub enum MvlError {
    #[error("digit {index} is {value}; trits must be 0, 1 or 2")]
    Digit { index: usize, value: u8 },
    #[error("operand lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("need {required} cells from the start cell, {available} available")]
    Capacity { required: usize, available: usize },
    #[error("value does not fit in {trits} trits")]
    Overflow { trits: usize },
    #[error("cannot parse operand `{0}`")]
    Parse(String),
    #[error("level {level} does not decode to an automaton state")]
    StateCorruption { level: usize },
    #[error("invalid {field}: {reason}")]
    Config { field: &'static str, reason: String },
    #[error(transparent)]
    Xbar(#[from] XbarError),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// Little-endian unbalanced ternary number.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TritVector {
    digits: Vec<u8>,
}

impl TritVector {
    pub fn new(digits: Vec<u8>) -> Result<Self, MvlError> {
        if let Some((index, &value)) = digits.iter().enumerate().find(|(_, d)| **d > 2) {
            return Err(MvlError::Digit { index, value });
        }
        Ok(Self { digits })
    }

    pub fn zero(n: usize) -> Self {
        Self { digits: vec![0; n] }
    }

    /// `v` in exactly `n` trits.
    pub fn from_u128(mut v: u128, n: usize) -> Result<Self, MvlError> {
        let mut digits = Vec::with_capacity(n);
        for _ in 0..n {
            digits.push((v % 3) as u8);
            v /= 3;
        }
        if v != 0 {
            return Err(MvlError::Overflow { trits: n });
        }
        Ok(Self { digits })
    }

    /// Value, or `None` past `u128::MAX`.
    pub fn to_u128(&self) -> Option<u128> {
        self.digits
            .iter()
            .rev()
            .try_fold(0u128, |acc, &d| acc.checked_mul(3)?.checked_add(d as u128))
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Uniform random value over `n` trits.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            digits: (0..n).map(|_| rng.random_range(0..3u8)).collect(),
        }
    }

    /// Parse a decimal number, or base-3 digits (most significant first)
    /// after a `0t` prefix, into `n` trits.
    pub fn parse(s: &str, n: usize) -> Result<Self, MvlError> {
        let s = s.trim();
        if let Some(t) = s.strip_prefix("0t") {
            if t.is_empty() {
                return Err(MvlError::Parse(s.into()));
            }
            let mut digits: Vec<u8> = t
                .bytes()
                .rev()
                .map(|b| match b {
                    b'0'..=b'2' => Ok(b - b'0'),
                    _ => Err(MvlError::Parse(s.into())),
                })
                .collect::<Result<_, _>>()?;
            if digits.iter().skip(n).any(|d| *d != 0) {
                return Err(MvlError::Overflow { trits: n });
            }
            digits.resize(n, 0);
            return Ok(Self { digits });
        }
        let v: u128 = s.parse().map_err(|_| MvlError::Parse(s.into()))?;
        Self::from_u128(v, n)
    }
}

impl FromStr for TritVector {
    type Err = MvlError;

    /// Base-3 digits, most significant first, as many trits as written.
    fn from_str(s: &str) -> Result<Self, MvlError> {
        let t = s.trim().trim_start_matches("0t");
        Self::parse(&format!("0t{t}"), t.len())
    }
}

impl fmt::Display for TritVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.digits.iter().rev() {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Trits per cell: the three lowest levels.
const RADIX: usize = 3;

fn cells_from(xbar: &Crossbar, start: (usize, usize), n: usize) -> Result<usize, MvlError> {
    let (rows, cols) = (xbar.rows(), xbar.cols());
    if start.0 >= rows || start.1 >= cols {
        return Err(XbarError::OutOfRange {
            row: start.0,
            col: start.1,
            rows,
            cols,
        }
        .into());
    }
    let first = start.0 * cols + start.1;
    let available = rows * cols - first;
    if n > available {
        return Err(MvlError::Capacity { required: n, available });
    }
    Ok(first)
}

fn check_ladder(cfg: &LevelConfig) -> Result<(), MvlError> {
    if cfg.n_levels < RADIX {
        return Err(MvlError::Config {
            field: "n_levels",
            reason: format!("ternary storage needs at least 3 levels, got {}", cfg.n_levels),
        });
    }
    Ok(())
}

/// Store `v` one digit per cell, row-major from `start`.
pub fn write_trits(
    xbar: &mut Crossbar,
    start: (usize, usize),
    v: &TritVector,
    cfg: &LevelConfig,
) -> Result<(), MvlError> {
    check_ladder(cfg)?;
    let first = cells_from(xbar, start, v.len())?;
    let cols = xbar.cols();
    for (k, &d) in v.digits.iter().enumerate() {
        let i = first + k;
        xbar.program_level(i / cols, i % cols, cfg, d as usize)?;
    }
    Ok(())
}

/// Read `n` digits back. A level above the ternary range reads as 2.
pub fn read_trits(
    xbar: &mut Crossbar,
    start: (usize, usize),
    n: usize,
    cfg: &LevelConfig,
) -> Result<TritVector, MvlError> {
    check_ladder(cfg)?;
    let first = cells_from(xbar, start, n)?;
    let cols = xbar.cols();
    let mut digits = Vec::with_capacity(n);
    for k in 0..n {
        let i = first + k;
        let level = xbar.read_level(i / cols, i % cols, cfg)?;
        digits.push(level.min(RADIX - 1) as u8);
    }
    Ok(TritVector { digits })
}

/// Cells used by [`ternary_add`] for `n`-trit operands.
pub fn adder_cells(n: usize) -> usize {
    3 * n + 1
}

/// Digit-serial addition. Operands go to cells `0..n` and `n..2n`
/// (row-major from the origin), the `n + 1` sum digits to `2n..3n+1`.
/// The carry lives in the controller.
pub fn ternary_add(
    xbar: &mut Crossbar,
    a: &TritVector,
    b: &TritVector,
    cfg: &LevelConfig,
) -> Result<TritVector, MvlError> {
    let n = a.len();
    if b.len() != n {
        return Err(MvlError::LengthMismatch { a: n, b: b.len() });
    }
    check_ladder(cfg)?;
    cells_from(xbar, (0, 0), adder_cells(n))?;
    let cols = xbar.cols();
    let at = |i: usize| (i / cols, i % cols);
    write_trits(xbar, at(0), a, cfg)?;
    write_trits(xbar, at(n), b, cfg)?;
    let mut carry = 0usize;
    for i in 0..n {
        let (ra, ca) = at(i);
        let (rb, cb) = at(n + i);
        let ai = xbar.read_level(ra, ca, cfg)?.min(RADIX - 1);
        let bi = xbar.read_level(rb, cb, cfg)?.min(RADIX - 1);
        let t = ai + bi + carry;
        let (rs, cs) = at(2 * n + i);
        xbar.program_level(rs, cs, cfg, t % RADIX)?;
        carry = t / RADIX;
    }
    let (rs, cs) = at(3 * n);
    xbar.program_level(rs, cs, cfg, carry)?;
    read_trits(xbar, at(2 * n), n + 1, cfg)
}

/// Per-digit misread rate of trit storage: `trials` random digits written
/// and read back on one cell with the given variation.
pub fn trit_error_rate(
    params: &DeviceParams,
    spec: &VariationSpec,
    cfg: &LevelConfig,
    trials: usize,
    seed_value: u64,
) -> Result<f64, MvlError> {
    check_ladder(cfg)?;
    let mut xb = Crossbar::new(1, 1, *params, *spec, seed_value)?;
    xb.set_recording(false);
    let mut digits = seed::stream(seed_value, "trit-digits", 0);
    let mut errors = 0usize;
    for _ in 0..trials {
        let d = digits.random_range(0..3u8);
        xb.program_level(0, 0, cfg, d as usize)?;
        if xb.read_level(0, 0, cfg)?.min(RADIX - 1) != d as usize {
            errors += 1;
        }
    }
    Ok(errors as f64 / trials.max(1) as f64)
}

#[cfg(test)]
mod tests;
