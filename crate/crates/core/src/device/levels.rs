//! Multi-level programming by amplitude-controlled partial RESET.
//!
//! A level is written by a full SET followed, for levels above 0, by one
//! fixed-width RESET pulse whose amplitude sets the depth. Amplitudes are
//! found by bisection against log-spaced resistance targets.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{drive_constant, resistance, DeviceError, DeviceParams, DeviceState, Pulse};

/// Pulse shapes shared by every level of a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelPulses {
    pub set_amplitude: f64,
    pub set_width: f64,
    pub reset_width: f64,
    pub dt: f64,
}

impl Default for LevelPulses {
    fn default() -> Self {
        Self {
            set_amplitude: 2.0,
            set_width: 1e-6,
            reset_width: 200e-9,
            dt: 1e-9,
        }
    }
}

impl LevelPulses {
    fn set_pulse(&self) -> Pulse {
        Pulse::new(self.set_amplitude, self.set_width, self.dt)
    }

    fn reset_pulse(&self, amplitude: f64) -> Pulse {
        Pulse::new(amplitude, self.reset_width, self.dt)
    }
}

/// A calibrated resistance ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub n_levels: usize,
    /// Target resistances, ohms, strictly increasing.
    pub targets: Vec<f64>,
    /// RESET amplitude for levels `1..n_levels`, volts, increasingly negative.
    pub reset_amplitudes: Vec<f64>,
    /// Decision thresholds between consecutive bands, ohms.
    pub read_boundaries: Vec<f64>,
    #[serde(default)]
    pub pulses: LevelPulses,
}

/// Shipped six-level ladder for the default device, produced by
/// [`LevelConfig::calibrate`] with default pulses and a top target of
/// `r_off / 2`.
const SIX_LEVEL_RESET_AMPLITUDES: [f64; 5] = [
    -1.396_440_054_881_743_7,
    -1.798_664_252_566_077,
    -2.216_334_053_668_681_7,
    -2.675_382_862_824_044,
    -3.271_345_904_097_153,
];

fn bad(field: &'static str, reason: impl Into<String>) -> DeviceError {
    DeviceError::InvalidLevels {
        field,
        reason: reason.into(),
    }
}

impl Default for LevelConfig {
    fn default() -> Self {
        Self::six_level()
    }
}

impl LevelConfig {
    /// The shipped six-level calibration for [`DeviceParams::default`].
    pub fn six_level() -> Self {
        let params = DeviceParams::default();
        let pulses = LevelPulses::default();
        let targets = log_spaced_targets(&params, &pulses, 6);
        let read_boundaries = boundaries(&targets);
        Self {
            n_levels: 6,
            targets,
            reset_amplitudes: SIX_LEVEL_RESET_AMPLITUDES.to_vec(),
            read_boundaries,
            pulses,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let n = self.n_levels;
        if n < 2 {
            return Err(bad("n_levels", "must be >= 2"));
        }
        if self.targets.len() != n {
            return Err(bad("targets", format!("expected {n} entries")));
        }
        if self.reset_amplitudes.len() != n - 1 {
            return Err(bad("reset_amplitudes", format!("expected {} entries", n - 1)));
        }
        if self.read_boundaries.len() != n - 1 {
            return Err(bad("read_boundaries", format!("expected {} entries", n - 1)));
        }
        if self.targets.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(bad("targets", "must be finite and > 0"));
        }
        if self.targets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("targets", "must be strictly increasing"));
        }
        if self.reset_amplitudes.iter().any(|a| !a.is_finite() || *a >= 0.0) {
            return Err(bad("reset_amplitudes", "must be finite and negative"));
        }
        if self.reset_amplitudes.windows(2).any(|w| w[1] >= w[0]) {
            return Err(bad("reset_amplitudes", "must be increasingly negative"));
        }
        if self.read_boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("read_boundaries", "must be strictly increasing"));
        }
        for (j, b) in self.read_boundaries.iter().enumerate() {
            if !(self.targets[j] < *b && *b < self.targets[j + 1]) {
                return Err(bad(
                    "read_boundaries",
                    format!("boundary {j} must lie between targets {j} and {}", j + 1),
                ));
            }
        }
        let p = &self.pulses;
        if !(p.dt > 0.0 && p.set_width >= p.dt && p.reset_width >= p.dt && p.set_amplitude > 0.0) {
            return Err(bad("pulses", "need dt > 0, widths >= dt, set_amplitude > 0"));
        }
        Ok(())
    }

    /// Calibrate an `n_levels` ladder for `params`: log-spaced targets from
    /// the full-SET resistance to `r_off / 2`, one RESET amplitude per level
    /// found by bisection, and boundaries at the geometric means of adjacent
    /// targets.
    pub fn calibrate(params: &DeviceParams, n_levels: usize, pulses: LevelPulses) -> Result<Self, DeviceError> {
        params.validate()?;
        if n_levels < 2 {
            return Err(bad("n_levels", "must be >= 2"));
        }
        let targets = log_spaced_targets(params, &pulses, n_levels);
        let mut reset_amplitudes = Vec::with_capacity(n_levels - 1);
        for target in &targets[1..] {
            reset_amplitudes.push(bisect_amplitude(params, &pulses, *target)?);
        }
        let cfg = Self {
            n_levels,
            read_boundaries: boundaries(&targets),
            targets,
            reset_amplitudes,
            pulses,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Band index of a measured resistance. A hit exactly on a boundary
    /// belongs to the lower band.
    pub fn classify(&self, r: f64) -> usize {
        self.read_boundaries.iter().filter(|b| **b < r).count()
    }
}

fn full_set_resistance(params: &DeviceParams, pulses: &LevelPulses) -> f64 {
    let mut rng = crate::seed::stream(0, "unused", 0);
    let (s, _) =
        drive_constant(DeviceState::HRS, params, &pulses.set_pulse(), &mut rng, false).expect("valid set pulse");
    resistance(&s, params)
}

fn log_spaced_targets(params: &DeviceParams, pulses: &LevelPulses, n: usize) -> Vec<f64> {
    let lo = full_set_resistance(params, pulses).ln();
    let hi = (0.5 * params.r_off).ln();
    (0..n)
        .map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

fn boundaries(targets: &[f64]) -> Vec<f64> {
    targets.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect()
}

fn reset_depth(params: &DeviceParams, pulses: &LevelPulses, amplitude: f64) -> f64 {
    let mut rng = crate::seed::stream(0, "unused", 0);
    let (s, _) =
        drive_constant(DeviceState::HRS, params, &pulses.set_pulse(), &mut rng, false).expect("valid set pulse");
    let (s, _) = drive_constant(s, params, &pulses.reset_pulse(amplitude), &mut rng, false).expect("valid reset pulse");
    resistance(&s, params)
}

fn bisect_amplitude(params: &DeviceParams, pulses: &LevelPulses, target: f64) -> Result<f64, DeviceError> {
    // Resistance after SET+RESET grows monotonically with |amplitude|.
    let mut near = params.v_reset_th;
    let mut far = params.v_reset_th - 20.0 * params.v_reset_th.abs();
    if reset_depth(params, pulses, far) < target {
        return Err(DeviceError::Calibration(format!(
            "target {target:.1} ohm unreachable with a {:.0} ns RESET",
            pulses.reset_width * 1e9
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (near + far);
        if reset_depth(params, pulses, mid) < target {
            near = mid;
        } else {
            far = mid;
        }
        if (far - near).abs() < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (near + far))
}

/// Write level `k`: full SET, then for `k > 0` one RESET at the level's
/// amplitude.
pub fn program_level<R: Rng + ?Sized>(
    state: DeviceState,
    params: &DeviceParams,
    cfg: &LevelConfig,
    k: usize,
    rng: &mut R,
    c2c: bool,
) -> Result<DeviceState, DeviceError> {
    program_level_with_energy(state, params, cfg, k, rng, c2c).map(|(s, _)| s)
}

/// [`program_level`] that also reports the device energy, joules.
pub fn program_level_with_energy<R: Rng + ?Sized>(
    state: DeviceState,
    params: &DeviceParams,
    cfg: &LevelConfig,
    k: usize,
    rng: &mut R,
    c2c: bool,
) -> Result<(DeviceState, f64), DeviceError> {
    if k >= cfg.n_levels {
        return Err(DeviceError::LevelOutOfRange {
            level: k,
            n_levels: cfg.n_levels,
        });
    }
    let (mut s, mut energy) = drive_constant(state, params, &cfg.pulses.set_pulse(), rng, c2c)?;
    if k > 0 {
        let (s2, e2) = drive_constant(
            s,
            params,
            &cfg.pulses.reset_pulse(cfg.reset_amplitudes[k - 1]),
            rng,
            c2c,
        )?;
        s = s2;
        energy += e2;
    }
    Ok((s, energy))
}

/// Band index of the device's current resistance.
pub fn read_level(state: &DeviceState, params: &DeviceParams, cfg: &LevelConfig) -> usize {
    cfg.classify(resistance(state, params))
}
