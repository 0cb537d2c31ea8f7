//! Stochastic-switching TRNG.
//!
//! A trial RESETs the cell, applies one near-threshold SET pulse whose
//! threshold and rate carry cycle-to-cycle jitter, reads whether the cell
//! crossed the binary read threshold, and RESETs it again.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::SecError;
use crate::xbar::{Crossbar, Phase};

/// Pulse amplitude giving p = 0.5 on the nominal device with the default
/// 100 ns pulse, from [`calibrate_trng`].
pub const DEFAULT_TRNG_AMPLITUDE: f64 = 1.0953;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrngConfig {
    /// SET pulse amplitude across the device, volts.
    pub pulse_amplitude: f64,
    pub pulse_width: f64,
    pub target_p: f64,
    pub debias: bool,
    pub cell: (usize, usize),
    /// RESET pulse used before and after every trial.
    pub reset_amplitude: f64,
    pub reset_width: f64,
}

impl Default for TrngConfig {
    fn default() -> Self {
        Self {
            pulse_amplitude: DEFAULT_TRNG_AMPLITUDE,
            pulse_width: 100e-9,
            target_p: 0.5,
            debias: true,
            cell: (0, 0),
            reset_amplitude: -3.0,
            reset_width: 1e-6,
        }
    }
}

impl TrngConfig {
    pub fn validate(&self) -> Result<(), SecError> {
        let bad = |field, reason: &str| {
            Err(SecError::Config {
                field,
                reason: reason.into(),
            })
        };
        if !(self.target_p > 0.0 && self.target_p < 1.0) {
            return bad("target_p", "must lie in (0, 1)");
        }
        if !(self.pulse_amplitude.is_finite() && self.pulse_amplitude > 0.0) {
            return bad("pulse_amplitude", "must be finite and > 0");
        }
        if !(self.reset_amplitude.is_finite() && self.reset_amplitude < 0.0) {
            return bad("reset_amplitude", "must be finite and < 0");
        }
        if !(self.pulse_width > 0.0 && self.reset_width > 0.0) {
            return bad("pulse_width", "pulse widths must be > 0");
        }
        Ok(())
    }
}

/// One trial on `cfg.cell`. Jitter is switched on for the trial and the
/// crossbar's C2C setting restored afterwards.
pub fn trng_bit(xbar: &mut Crossbar, cfg: &TrngConfig) -> Result<bool, SecError> {
    let (r, c) = cfg.cell;
    let prev = xbar.c2c();
    xbar.set_c2c(true);
    let out = (|| {
        xbar.drive_cell(r, c, cfg.reset_amplitude, cfg.reset_width, Phase::Reset)?;
        xbar.drive_cell(r, c, cfg.pulse_amplitude, cfg.pulse_width, Phase::Evaluate)?;
        let bit = xbar.read_bit(r, c)?;
        xbar.drive_cell(r, c, cfg.reset_amplitude, cfg.reset_width, Phase::Reset)?;
        Ok(bit)
    })();
    xbar.set_c2c(prev);
    out
}

/// Von Neumann extractor: `01 -> 0`, `10 -> 1`, equal pairs dropped.
pub fn von_neumann(bits: &[bool]) -> Vec<bool> {
    bits.chunks_exact(2).filter(|p| p[0] != p[1]).map(|p| p[0]).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrngOutput {
    pub bits: Vec<bool>,
    /// Raw trials consumed.
    pub raw: usize,
}

/// `n` raw trials, debiased if `cfg.debias`.
pub fn trng_stream(xbar: &mut Crossbar, n: usize, cfg: &TrngConfig) -> Result<TrngOutput, SecError> {
    cfg.validate()?;
    if n == 0 {
        return Err(SecError::Config {
            field: "n",
            reason: "must be >= 1".into(),
        });
    }
    let mut raw = Vec::with_capacity(n);
    for _ in 0..n {
        raw.push(trng_bit(xbar, cfg)?);
    }
    let bits = if cfg.debias { von_neumann(&raw) } else { raw };
    Ok(TrngOutput { bits, raw: n })
}

/// Keep drawing until `n` output bits exist (after debiasing if enabled).
pub fn trng_fill(xbar: &mut Crossbar, n: usize, cfg: &TrngConfig) -> Result<TrngOutput, SecError> {
    cfg.validate()?;
    let mut bits = Vec::with_capacity(n);
    let mut raw = 0usize;
    while bits.len() < n {
        let a = trng_bit(xbar, cfg)?;
        raw += 1;
        if !cfg.debias {
            bits.push(a);
            continue;
        }
        let b = trng_bit(xbar, cfg)?;
        raw += 1;
        if a != b {
            bits.push(a);
        }
    }
    Ok(TrngOutput { bits, raw })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrngCalibration {
    pub amplitude: f64,
    /// Empirical p at `amplitude`.
    pub p: f64,
    pub iterations: usize,
}

/// Bisect the pulse amplitude until `trials` trials give an empirical
/// switching probability within `tol` of `cfg.target_p`.
pub fn calibrate_trng(
    xbar: &mut Crossbar,
    cfg: &TrngConfig,
    trials: usize,
    tol: f64,
    max_iter: usize,
) -> Result<TrngCalibration, SecError> {
    cfg.validate()?;
    if trials == 0 {
        return Err(SecError::Config {
            field: "trials",
            reason: "must be >= 1".into(),
        });
    }
    let th = xbar.nominal().v_set_th;
    let (mut lo, mut hi) = (0.5 * th, 3.0 * th);
    let mut probe = *cfg;
    for it in 1..=max_iter {
        probe.pulse_amplitude = 0.5 * (lo + hi);
        let mut ones = 0usize;
        for _ in 0..trials {
            ones += trng_bit(xbar, &probe)? as usize;
        }
        let p = ones as f64 / trials as f64;
        if (p - cfg.target_p).abs() <= tol {
            return Ok(TrngCalibration {
                amplitude: probe.pulse_amplitude,
                p,
                iterations: it,
            });
        }
        if p < cfg.target_p {
            lo = probe.pulse_amplitude;
        } else {
            hi = probe.pulse_amplitude;
        }
    }
    Err(SecError::Calibration(format!(
        "no amplitude within {tol} of p = {} after {max_iter} probes",
        cfg.target_p
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RandomnessReport {
    pub n: usize,
    pub ones: usize,
    pub runs: usize,
    pub monobit_z: f64,
    pub runs_z: f64,
    pub alpha: f64,
    pub monobit_pass: bool,
    pub runs_pass: bool,
}

/// Minimum stream length for [`randomness_tests`].
pub const MIN_TEST_BITS: usize = 1000;

/// Two-sided monobit and Wald–Wolfowitz runs tests at level `alpha`.
pub fn randomness_tests(bits: &[bool], alpha: f64) -> Result<RandomnessReport, SecError> {
    if bits.len() < MIN_TEST_BITS {
        return Err(SecError::TooFewBits {
            need: MIN_TEST_BITS,
            got: bits.len(),
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SecError::Config {
            field: "alpha",
            reason: "must lie in (0, 1)".into(),
        });
    }
    let n = bits.len();
    let nf = n as f64;
    let ones = bits.iter().filter(|b| **b).count();
    let zeros = n - ones;
    let monobit_z = (2.0 * ones as f64 - nf) / nf.sqrt();
    let runs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let runs_z = if ones == 0 || zeros == 0 {
        f64::INFINITY
    } else {
        let (n1, n0) = (ones as f64, zeros as f64);
        let mu = 2.0 * n1 * n0 / nf + 1.0;
        let var = (mu - 1.0) * (mu - 2.0) / (nf - 1.0);
        (runs as f64 - mu) / var.sqrt()
    };
    let crit = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    Ok(RandomnessReport {
        n,
        ones,
        runs,
        monobit_z,
        runs_z,
        alpha,
        monobit_pass: monobit_z.abs() < crit,
        runs_pass: runs_z.abs() < crit,
    })
}

/// Pack bits little-endian within each byte.
pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |b, (i, &v)| b | ((v as u8) << i)))
        .collect()
}
