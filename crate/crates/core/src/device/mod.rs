//! Threshold-switching RRAM device model.
//!
//! The internal state `x ∈ [0, 1]` interpolates conductance linearly between
//! HRS (`x = 0`) and LRS (`x = 1`). Above the SET threshold the state grows
//! with a polynomial overdrive rate times the window `(1 - x)`; below the
//! RESET threshold it decays with the window `x`. Between the thresholds the
//! device is frozen.
//!
//! Integration is explicit fixed-step Euler with a hard clamp to `[0, 1]`.

mod levels;

pub use levels::{program_level, program_level_with_energy, read_level, LevelConfig, LevelPulses};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum consecutive rejected draws in [`sample_instance`].
pub const MAX_VARIATION_RETRIES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("invalid device parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("rejected pulse input: {0}")]
    InvalidPulse(String),
    #[error("variation spec infeasible: {MAX_VARIATION_RETRIES} consecutive samples violated device invariants")]
    VariationInfeasible,
    #[error("invalid variation spec `{field}`: {reason}")]
    InvalidVariation { field: &'static str, reason: String },
    #[error("invalid level config `{field}`: {reason}")]
    InvalidLevels { field: &'static str, reason: String },
    #[error("level {level} out of range for a {n_levels}-level config")]
    LevelOutOfRange { level: usize, n_levels: usize },
    #[error("level calibration failed: {0}")]
    Calibration(String),
}

/// Per-device model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceParams {
    /// LRS resistance, ohms.
    pub r_on: f64,
    /// HRS resistance, ohms.
    pub r_off: f64,
    /// SET threshold, volts (> 0).
    pub v_set_th: f64,
    /// RESET threshold, volts (< 0).
    pub v_reset_th: f64,
    /// SET rate coefficient, 1/s.
    pub k_set: f64,
    /// RESET rate coefficient, 1/s.
    pub k_reset: f64,
    pub alpha_set: f64,
    pub alpha_reset: f64,
    /// Per-event threshold jitter std, volts.
    pub c2c_sigma_th: f64,
    /// Per-event relative std (log scale) of the rate coefficients.
    pub c2c_sigma_rate: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            r_on: 10e3,
            r_off: 1e6,
            v_set_th: 1.0,
            v_reset_th: -1.0,
            k_set: 1e7,
            k_reset: 1e7,
            alpha_set: 1.0,
            alpha_reset: 1.0,
            c2c_sigma_th: 0.02,
            c2c_sigma_rate: 0.03,
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> DeviceError {
    DeviceError::InvalidParams {
        field,
        reason: reason.into(),
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let all = [
            ("r_on", self.r_on),
            ("r_off", self.r_off),
            ("v_set_th", self.v_set_th),
            ("v_reset_th", self.v_reset_th),
            ("k_set", self.k_set),
            ("k_reset", self.k_reset),
            ("alpha_set", self.alpha_set),
            ("alpha_reset", self.alpha_reset),
            ("c2c_sigma_th", self.c2c_sigma_th),
            ("c2c_sigma_rate", self.c2c_sigma_rate),
        ];
        for (field, v) in all {
            if !v.is_finite() {
                return Err(invalid(field, "must be finite"));
            }
        }
        if self.r_on <= 0.0 {
            return Err(invalid("r_on", "must satisfy r_on > 0"));
        }
        if self.r_off <= self.r_on {
            return Err(invalid("r_off", "must satisfy r_off > r_on"));
        }
        if self.v_set_th <= 0.0 {
            return Err(invalid("v_set_th", "must satisfy v_set_th > 0"));
        }
        if self.v_reset_th >= 0.0 {
            return Err(invalid("v_reset_th", "must satisfy v_reset_th < 0"));
        }
        if self.k_set < 0.0 {
            return Err(invalid("k_set", "must satisfy k_set >= 0"));
        }
        if self.k_reset < 0.0 {
            return Err(invalid("k_reset", "must satisfy k_reset >= 0"));
        }
        if self.alpha_set < 1.0 {
            return Err(invalid("alpha_set", "must satisfy alpha_set >= 1"));
        }
        if self.alpha_reset < 1.0 {
            return Err(invalid("alpha_reset", "must satisfy alpha_reset >= 1"));
        }
        if self.c2c_sigma_th < 0.0 {
            return Err(invalid("c2c_sigma_th", "must be >= 0"));
        }
        if self.c2c_sigma_rate < 0.0 {
            return Err(invalid("c2c_sigma_rate", "must be >= 0"));
        }
        Ok(())
    }

    /// Conductance at state `x`.
    #[inline]
    pub fn conductance(&self, x: f64) -> f64 {
        x / self.r_on + (1.0 - x) / self.r_off
    }

    /// Geometric mean of the two resistance extremes; the binary read threshold.
    pub fn read_threshold(&self) -> f64 {
        (self.r_on * self.r_off).sqrt()
    }
}

/// Internal device state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeviceState {
    /// 1 ⇔ LRS, 0 ⇔ HRS.
    pub x: f64,
    /// Pulses that drove the device past a threshold.
    pub cycle_count: u64,
}

impl DeviceState {
    pub const HRS: DeviceState = DeviceState { x: 0.0, cycle_count: 0 };
    pub const LRS: DeviceState = DeviceState { x: 1.0, cycle_count: 0 };

    pub fn with_x(x: f64) -> Self {
        Self {
            x: x.clamp(0.0, 1.0),
            cycle_count: 0,
        }
    }
}

/// `1 / G(x)` with `G = x/r_on + (1-x)/r_off`.
pub fn resistance(state: &DeviceState, params: &DeviceParams) -> f64 {
    1.0 / params.conductance(state.x)
}

/// Device-to-device and cycle-to-cycle variation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationSpec {
    /// Log-scale std of the per-device `r_on`/`r_off` factors.
    pub d2d_sigma_r: f64,
    /// Std of the per-device threshold shift, volts.
    pub d2d_sigma_th: f64,
    pub d2d: bool,
    pub c2c: bool,
}

impl Default for VariationSpec {
    fn default() -> Self {
        Self {
            d2d_sigma_r: 0.1,
            d2d_sigma_th: 0.01,
            d2d: true,
            c2c: true,
        }
    }
}

impl VariationSpec {
    /// No variation of either kind.
    pub fn none() -> Self {
        Self {
            d2d_sigma_r: 0.0,
            d2d_sigma_th: 0.0,
            d2d: false,
            c2c: false,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        for (field, v) in [("d2d_sigma_r", self.d2d_sigma_r), ("d2d_sigma_th", self.d2d_sigma_th)] {
            if !v.is_finite() || v < 0.0 {
                return Err(DeviceError::InvalidVariation {
                    field,
                    reason: "must be finite and >= 0".into(),
                });
            }
        }
        Ok(())
    }

    fn is_degenerate(&self) -> bool {
        !self.d2d || (self.d2d_sigma_r == 0.0 && self.d2d_sigma_th == 0.0)
    }
}

/// Draw a per-device parameter set around `nominal`.
///
/// Resistances get independent lognormal factors, thresholds independent
/// normal shifts. Draws that break the device invariants are rejected.
pub fn sample_instance<R: Rng + ?Sized>(
    nominal: &DeviceParams,
    spec: &VariationSpec,
    rng: &mut R,
) -> Result<DeviceParams, DeviceError> {
    spec.validate()?;
    if spec.is_degenerate() {
        return Ok(*nominal);
    }
    for _ in 0..MAX_VARIATION_RETRIES {
        let z: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let mut p = *nominal;
        p.r_on *= (spec.d2d_sigma_r * z[0]).exp();
        p.r_off *= (spec.d2d_sigma_r * z[1]).exp();
        p.v_set_th += spec.d2d_sigma_th * z[2];
        p.v_reset_th += spec.d2d_sigma_th * z[3];
        if p.validate().is_ok() {
            return Ok(p);
        }
    }
    Err(DeviceError::VariationInfeasible)
}

/// A rectangular voltage pulse applied across the device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub amplitude: f64,
    pub width: f64,
    pub dt: f64,
}

impl Pulse {
    pub fn new(amplitude: f64, width: f64, dt: f64) -> Self {
        Self { amplitude, width, dt }
    }

    fn validate(&self) -> Result<(), DeviceError> {
        if !self.amplitude.is_finite() {
            return Err(DeviceError::InvalidPulse("non-finite amplitude".into()));
        }
        if !self.width.is_finite() || self.width <= 0.0 {
            return Err(DeviceError::InvalidPulse(format!(
                "width must be finite and > 0, got {}",
                self.width
            )));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 || self.dt > self.width {
            return Err(DeviceError::InvalidPulse(format!(
                "dt must satisfy 0 < dt <= width, got dt={} width={}",
                self.dt, self.width
            )));
        }
        Ok(())
    }
}

/// Split `width` into `n` full steps of `dt` plus an optional shorter tail.
pub(crate) fn step_plan(width: f64, dt: f64) -> (u64, f64) {
    let n = (width / dt + 1e-9).floor();
    let tail = width - n * dt;
    let tail = if tail > dt * 1e-9 { tail } else { 0.0 };
    (n as u64, tail)
}

/// Switching parameters in effect for one pulse. With C2C on these are
/// jittered copies of the device parameters, drawn once per pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventParams {
    pub v_set_th: f64,
    pub v_reset_th: f64,
    pub k_set: f64,
    pub k_reset: f64,
    pub alpha_set: f64,
    pub alpha_reset: f64,
}

impl EventParams {
    pub fn nominal(p: &DeviceParams) -> Self {
        Self {
            v_set_th: p.v_set_th,
            v_reset_th: p.v_reset_th,
            k_set: p.k_set,
            k_reset: p.k_reset,
            alpha_set: p.alpha_set,
            alpha_reset: p.alpha_reset,
        }
    }

    /// Draws four standard normals when `c2c` is on, none otherwise.
    pub fn sample<R: Rng + ?Sized>(p: &DeviceParams, rng: &mut R, c2c: bool) -> Self {
        let mut e = Self::nominal(p);
        if c2c {
            let z: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            // Thresholds keep their polarity.
            e.v_set_th = (p.v_set_th + p.c2c_sigma_th * z[0]).max(1e-6);
            e.v_reset_th = (p.v_reset_th + p.c2c_sigma_th * z[1]).min(-1e-6);
            e.k_set = p.k_set * (p.c2c_sigma_rate * z[2]).exp();
            e.k_reset = p.k_reset * (p.c2c_sigma_rate * z[3]).exp();
        }
        e
    }

    /// Rate coefficient `c` such that `dx/dt = c·(1-x)` (SET, c > 0) or
    /// `dx/dt = c·x` (RESET, c < 0). Zero inside the deadband.
    #[inline]
    pub fn drive(&self, v: f64) -> f64 {
        if v > self.v_set_th {
            let od = (v - self.v_set_th) / self.v_set_th;
            self.k_set * od.powf(self.alpha_set)
        } else if v < self.v_reset_th {
            let od = (self.v_reset_th - v) / self.v_reset_th.abs();
            -self.k_reset * od.powf(self.alpha_reset)
        } else {
            0.0
        }
    }

    /// `dx/dt` at state `x` under device voltage `v`.
    #[inline]
    pub fn rate(&self, x: f64, v: f64) -> f64 {
        let c = self.drive(v);
        if c > 0.0 {
            c * (1.0 - x)
        } else if c < 0.0 {
            c * x
        } else {
            0.0
        }
    }
}

/// One explicit Euler step with clamping.
#[inline]
pub fn euler_step(x: f64, rate: f64, h: f64) -> f64 {
    (x + h * rate).clamp(0.0, 1.0)
}

/// A transient sample returned by [`apply_pulse`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub v: f64,
    pub i: f64,
}

/// Integrate a pulse applied directly across the device.
///
/// Returns the final state and one `{t, v, i}` sample per time point
/// (including `t = 0`).
pub fn apply_pulse<R: Rng + ?Sized>(
    state: DeviceState,
    params: &DeviceParams,
    pulse: &Pulse,
    rng: &mut R,
    c2c: bool,
) -> Result<(DeviceState, Vec<Sample>), DeviceError> {
    pulse.validate()?;
    let ev = EventParams::sample(params, rng, c2c);
    let v = pulse.amplitude;
    let (n, tail) = step_plan(pulse.width, pulse.dt);
    let mut out = state;
    let mut samples = Vec::with_capacity(n as usize + 2);
    let mut x = state.x;
    let mut t = 0.0;
    samples.push(Sample {
        t,
        v,
        i: v * params.conductance(x),
    });
    let steps = (0..n).map(|_| pulse.dt).chain((tail > 0.0).then_some(tail));
    for h in steps {
        x = euler_step(x, ev.rate(x, v), h);
        t += h;
        samples.push(Sample {
            t,
            v,
            i: v * params.conductance(x),
        });
    }
    if ev.drive(v) != 0.0 {
        out.cycle_count += 1;
    }
    out.x = x;
    Ok((out, samples))
}

/// Trapezoidal energy of a sample trace, joules.
pub fn trace_energy(samples: &[Sample]) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].v * w[0].i + w[1].v * w[1].i))
        .sum()
}

/// Closed-form evaluation of the Euler recurrence for a constant device
/// voltage.
///
/// For constant `v` the Euler map is affine: `1 - x ← (1 - a)(1 - x)` for SET
/// and `x ← (1 - a) x` for RESET with `a = h·c`, so `n` steps collapse to a
/// power. The trapezoidal energy collapses to a geometric sum. Consumes the
/// RNG exactly like [`apply_pulse`] and agrees with it up to rounding.
pub fn drive_constant<R: Rng + ?Sized>(
    state: DeviceState,
    params: &DeviceParams,
    pulse: &Pulse,
    rng: &mut R,
    c2c: bool,
) -> Result<(DeviceState, f64), DeviceError> {
    pulse.validate()?;
    let ev = EventParams::sample(params, rng, c2c);
    Ok(drive_constant_with(state, params, &ev, pulse))
}

pub(crate) fn drive_constant_with(
    state: DeviceState,
    params: &DeviceParams,
    ev: &EventParams,
    pulse: &Pulse,
) -> (DeviceState, f64) {
    let v = pulse.amplitude;
    let c = ev.drive(v);
    let g_off = 1.0 / params.r_off;
    let dg = 1.0 / params.r_on - g_off;
    let power = |x: f64| v * v * (g_off + dg * x);
    if c == 0.0 {
        return (state, pulse.width * power(state.x));
    }
    let (n, tail) = step_plan(pulse.width, pulse.dt);
    // Work in the "distance to the attractor" d: d = 1 - x for SET, d = x for RESET.
    let set = c > 0.0;
    let to_x = |d: f64| if set { 1.0 - d } else { d };
    let d0 = if set { 1.0 - state.x } else { state.x };
    let a = pulse.dt * c.abs();
    // Sum of d_k for k = 0..=n and the final d_n.
    let (sum_d, d_n) = if a >= 1.0 {
        // First step overshoots and clamps onto the attractor.
        (d0, if n == 0 { d0 } else { 0.0 })
    } else {
        let q = 1.0 - a;
        let qn = q.powf(n as f64);
        let geo = if a > 0.0 { (1.0 - qn * q) / a } else { (n + 1) as f64 };
        (d0 * geo, d0 * qn)
    };
    let sum_x = if set { (n + 1) as f64 - sum_d } else { sum_d };
    let x0 = state.x;
    let x_n = to_x(d_n);
    let mut energy = pulse.dt * (v * v * ((n + 1) as f64 * g_off + dg * sum_x) - 0.5 * (power(x0) + power(x_n)));
    let mut x_end = x_n;
    if tail > 0.0 {
        let a_t = (tail * c.abs()).min(1.0);
        let d_t = d_n * (1.0 - a_t);
        x_end = to_x(d_t);
        energy += 0.5 * tail * (power(x_n) + power(x_end));
    }
    let mut out = state;
    out.x = x_end.clamp(0.0, 1.0);
    out.cycle_count += 1;
    (out, energy.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn quiet() -> seed::Stream {
        seed::stream(0, "device-test", 0)
    }

    #[test]
    fn defaults_validate() {
        DeviceParams::default().validate().unwrap();
    }

    #[test]
    fn invalid_params_name_field() {
        let mut p = DeviceParams::default();
        p.r_off = p.r_on;
        match p.validate() {
            Err(DeviceError::InvalidParams { field, .. }) => assert_eq!(field, "r_off"),
            other => panic!("unexpected {other:?}"),
        }
        let p = DeviceParams {
            v_reset_th: 0.5,
            ..DeviceParams::default()
        };
        assert!(matches!(
            p.validate(),
            Err(DeviceError::InvalidParams {
                field: "v_reset_th",
                ..
            })
        ));
        let p = DeviceParams {
            alpha_set: 0.5,
            ..DeviceParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn resistance_endpoints() {
        let p = DeviceParams::default();
        assert_eq!(resistance(&DeviceState::LRS, &p), p.r_on);
        assert!((resistance(&DeviceState::HRS, &p) - p.r_off).abs() < 1e-6);
    }

    #[test]
    fn resistance_midpoint() {
        let p = DeviceParams::default();
        // Independent evaluation: series of the two weighted conductances.
        let g = 0.5 * 1e-4 + 0.5 * 1e-6;
        let expect = 1.0 / g;
        let got = resistance(&DeviceState::with_x(0.5), &p);
        assert!((got - expect).abs() / expect < 1e-12);
        assert!((got - 19_802.0).abs() < 1.0);
    }

    #[test]
    fn zero_drive_is_inert() {
        let p = DeviceParams::default();
        let s = DeviceState::with_x(0.3);
        let (out, samples) = apply_pulse(s, &p, &Pulse::new(0.0, 1e-6, 1e-9), &mut quiet(), false).unwrap();
        assert_eq!(out.x, 0.3);
        assert!(samples.iter().all(|s| s.i == 0.0));
    }

    #[test]
    fn deadband_is_bit_exact() {
        let p = DeviceParams::default();
        let (out, _) = apply_pulse(
            DeviceState::HRS,
            &p,
            &Pulse::new(0.5 * p.v_set_th, 2e-6, 1e-9),
            &mut quiet(),
            false,
        )
        .unwrap();
        assert_eq!(out.x, 0.0);
        let s = DeviceState::with_x(0.42);
        let (out, _) = apply_pulse(s, &p, &Pulse::new(-0.9, 1e-6, 1e-9), &mut quiet(), false).unwrap();
        assert_eq!(out.x.to_bits(), 0.42f64.to_bits());
    }

    /// Fine-step reference: RK4 on dx/dt = c(1-x) with 0.01 ns steps.
    fn reference_set(x0: f64, c: f64, t: f64) -> f64 {
        let h = 1e-11;
        let n = (t / h).round() as usize;
        let f = |x: f64| c * (1.0 - x);
        let mut x = x0;
        for _ in 0..n {
            let k1 = f(x);
            let k2 = f(x + 0.5 * h * k1);
            let k3 = f(x + 0.5 * h * k2);
            let k4 = f(x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        x
    }

    #[test]
    fn full_set_reaches_lrs() {
        let p = DeviceParams::default();
        let (out, _) = apply_pulse(DeviceState::HRS, &p, &Pulse::new(2.0, 1e-6, 1e-9), &mut quiet(), false).unwrap();
        let closed = 1.0 - (-1e7 * 1.0 * 1e-6f64).exp();
        let reference = reference_set(0.0, 1e7, 1e-6);
        assert!((closed - reference).abs() < 1e-9);
        assert!(out.x >= 0.999);
        assert!((out.x - closed).abs() < 1e-4);
    }

    #[test]
    fn non_finite_pulse_rejected() {
        let p = DeviceParams::default();
        for pulse in [
            Pulse::new(f64::NAN, 1e-6, 1e-9),
            Pulse::new(1.0, f64::INFINITY, 1e-9),
            Pulse::new(1.0, 0.0, 1e-9),
            Pulse::new(1.0, 1e-9, 2e-9),
        ] {
            assert!(matches!(
                apply_pulse(DeviceState::HRS, &p, &pulse, &mut quiet(), false),
                Err(DeviceError::InvalidPulse(_))
            ));
        }
    }

    #[test]
    fn closed_form_matches_loop() {
        let p = DeviceParams::default();
        let cases = [
            (0.0, 2.0, 1e-6),
            (0.2, 1.3, 0.37e-6),
            (1.0, -2.5, 2e-7),
            (0.6, -1.4, 1.05e-6),
            (0.5, 0.3, 1e-7),
            (0.0, 200.0, 1e-7), // a > 1: clamps in one step
        ];
        for (x0, v, w) in cases {
            let pulse = Pulse::new(v, w, 1e-9);
            let s = DeviceState::with_x(x0);
            let (a, samples) = apply_pulse(s, &p, &pulse, &mut quiet(), false).unwrap();
            let (b, e) = drive_constant(s, &p, &pulse, &mut quiet(), false).unwrap();
            assert!((a.x - b.x).abs() < 1e-9, "x {x0} v {v}: {} vs {}", a.x, b.x);
            let e_loop = trace_energy(&samples);
            assert!(
                (e - e_loop).abs() <= 1e-9 * e_loop.abs().max(1e-30),
                "energy {e} vs {e_loop}"
            );
        }
    }

    #[test]
    fn closed_form_consumes_rng_like_loop() {
        let p = DeviceParams::default();
        let pulse = Pulse::new(1.05, 1e-7, 1e-9);
        let mut r1 = quiet();
        let mut r2 = quiet();
        let (a, _) = apply_pulse(DeviceState::HRS, &p, &pulse, &mut r1, true).unwrap();
        let (b, _) = drive_constant(DeviceState::HRS, &p, &pulse, &mut r2, true).unwrap();
        assert!((a.x - b.x).abs() < 1e-12);
        assert_eq!(r1.random::<u64>(), r2.random::<u64>());
    }

    #[test]
    fn degenerate_variation_returns_nominal() {
        let p = DeviceParams::default();
        let spec = VariationSpec {
            d2d_sigma_r: 0.0,
            d2d_sigma_th: 0.0,
            d2d: true,
            c2c: false,
        };
        assert_eq!(sample_instance(&p, &spec, &mut quiet()).unwrap(), p);
        assert_eq!(sample_instance(&p, &VariationSpec::none(), &mut quiet()).unwrap(), p);
    }

    #[test]
    fn variation_is_deterministic() {
        let p = DeviceParams::default();
        let spec = VariationSpec::default();
        let a = sample_instance(&p, &spec, &mut seed::stream(9, "d2d", 0)).unwrap();
        let b = sample_instance(&p, &spec, &mut seed::stream(9, "d2d", 0)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, p);
    }

    #[test]
    fn lognormal_spread_matches_sigma() {
        let p = DeviceParams::default();
        let spec = VariationSpec {
            d2d_sigma_r: 0.1,
            d2d_sigma_th: 0.0,
            d2d: true,
            c2c: false,
        };
        let mut rng = seed::stream(3, "d2d-spread", 0);
        let logs: Vec<f64> = (0..10_000)
            .map(|_| {
                let q = sample_instance(&p, &spec, &mut rng).unwrap();
                (q.r_on / p.r_on).ln()
            })
            .collect();
        let n = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / n;
        let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        assert!((sd - 0.1).abs() < 0.01, "sd {sd}");
    }

    #[test]
    fn infeasible_variation_errors() {
        // r_off == r_on can never be repaired by threshold jitter alone.
        let mut bad = DeviceParams::default();
        bad.r_off = bad.r_on;
        let spec = VariationSpec {
            d2d_sigma_r: 0.0,
            d2d_sigma_th: 0.1,
            d2d: true,
            c2c: false,
        };
        assert_eq!(
            sample_instance(&bad, &spec, &mut quiet()),
            Err(DeviceError::VariationInfeasible)
        );
    }

    #[test]
    fn negative_sigma_rejected() {
        let spec = VariationSpec {
            d2d_sigma_r: -0.1,
            ..VariationSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn halving_dt_converges() {
        let p = DeviceParams::default();
        let cases = [
            (0.0, 2.0, 1e-6),
            (0.0, 1.2, 5e-7),
            (1.0, -2.0, 1e-6),
            (1.0, -3.3, 2e-7),
            (1.0, -1.4, 2e-7),
        ];
        for (x0, v, w) in cases {
            let s = DeviceState::with_x(x0);
            let (a, _) = apply_pulse(s, &p, &Pulse::new(v, w, 1e-9), &mut quiet(), false).unwrap();
            let (b, _) = apply_pulse(s, &p, &Pulse::new(v, w, 0.5e-9), &mut quiet(), false).unwrap();
            assert!((a.x - b.x).abs() < 1e-3, "v {v}: {} vs {}", a.x, b.x);
        }
    }
}
