//! Gate templates.
//!
//! * NOR / NOT (RESET type, cross wired): the output is pre-SET to LRS during
//!   init. Each input joins a floating bus by its row with its column at
//!   0 V; the output joins the bus by its column with its row at
//!   `-nor_voltage`, and a load resistor ties the bus to 0 V. Inputs and
//!   output therefore see the same polarity. With every input in HRS the
//!   output's share of the voltage stays below the RESET threshold; an LRS
//!   input in parallel with the load pulls the bus toward 0 V and the output
//!   RESETs, after which the input's share only shrinks.
//! * COPY (SET type, divider): the destination is pre-RESET and driven at
//!   `+copy_voltage` through the source. An LRS source pins the bus near 0 V
//!   and the destination SETs until its share falls to the threshold; an HRS
//!   source splits the voltage roughly in half, below the SET threshold.

use serde::{Deserialize, Serialize};

use super::{BusLoad, Crossbar, Drive, Phase, PulseProgram, PulseStep, XbarConfig, XbarError};
use crate::device::{DeviceParams, DeviceState, VariationSpec};

/// Electrical recipe for the gate templates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateTemplates {
    pub nor_voltage: f64,
    pub nor_width: f64,
    pub nor_load_ohms: f64,
    pub copy_voltage: f64,
    pub copy_width: f64,
}

/// Shipped calibration for [`DeviceParams::default`] and
/// [`XbarConfig::default`]; reproduced by [`calibrate_templates`].
impl Default for GateTemplates {
    fn default() -> Self {
        Self {
            nor_voltage: SHIPPED_NOR_VOLTAGE,
            nor_width: 2e-6,
            nor_load_ohms: SHIPPED_NOR_LOAD,
            copy_voltage: SHIPPED_COPY_VOLTAGE,
            copy_width: 1e-6,
        }
    }
}

const SHIPPED_NOR_VOLTAGE: f64 = 2.24;
const SHIPPED_NOR_LOAD: f64 = 17.5e3;
const SHIPPED_COPY_VOLTAGE: f64 = 1.7;

impl GateTemplates {
    pub fn validate(&self) -> Result<(), XbarError> {
        let fields = [
            ("nor_voltage", self.nor_voltage),
            ("nor_width", self.nor_width),
            ("nor_load_ohms", self.nor_load_ohms),
            ("copy_voltage", self.copy_voltage),
            ("copy_width", self.copy_width),
        ];
        for (field, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(XbarError::InvalidConfig {
                    field,
                    reason: "must be finite and > 0".into(),
                });
            }
        }
        Ok(())
    }

    /// NOR over `inputs` into `out` (NOT when there is one input).
    pub fn nor_step(
        &self,
        rows: usize,
        cols: usize,
        inputs: &[(usize, usize)],
        out: (usize, usize),
        op_id: u64,
    ) -> Result<PulseStep, XbarError> {
        cross_step(
            rows,
            cols,
            inputs,
            out,
            -self.nor_voltage,
            (self.nor_load_ohms, 0.0),
            self.nor_width,
            Phase::Evaluate,
            op_id,
        )
    }

    pub fn copy_step(
        &self,
        rows: usize,
        cols: usize,
        src: (usize, usize),
        dst: (usize, usize),
        op_id: u64,
    ) -> Result<PulseStep, XbarError> {
        divider_step(
            rows,
            cols,
            &[src],
            dst,
            self.copy_voltage,
            None,
            self.copy_width,
            Phase::Evaluate,
            op_id,
        )
    }
}

/// Whether a cross step with these coordinates can be wired: no input may
/// share a row or a column with the output.
pub fn cross_feasible(inputs: &[(usize, usize)], out: (usize, usize)) -> bool {
    !inputs.iter().any(|i| i.0 == out.0 || i.1 == out.1)
}

/// Build a cross step: each input joins bus 0 by its row (column held at
/// 0 V) and the output by its column (row driven at `out_v`), with a
/// `(ohms, volts)` load on the bus. Inputs and output see the same
/// polarity, so a RESET-type step can only RESET its inputs further.
#[allow(clippy::too_many_arguments)]
pub fn cross_step(
    rows: usize,
    cols: usize,
    inputs: &[(usize, usize)],
    out: (usize, usize),
    out_v: f64,
    load: (f64, f64),
    width: f64,
    phase: Phase,
    op_id: u64,
) -> Result<PulseStep, XbarError> {
    for &(r, c) in inputs.iter().chain(std::iter::once(&out)) {
        if r >= rows || c >= cols {
            return Err(XbarError::OutOfRange {
                row: r,
                col: c,
                rows,
                cols,
            });
        }
    }
    if inputs.contains(&out) {
        return Err(XbarError::SameCell(out.0, out.1));
    }
    if !cross_feasible(inputs, out) {
        return Err(XbarError::LineConflict(out.0, out.1));
    }
    let mut step = PulseStep::idle(rows, cols, width, phase, op_id);
    for &(r, c) in inputs {
        step.select_cell(r, c);
        step.row_v[r] = Drive::Float(0);
    }
    step.select_cell(out.0, out.1);
    step.col_v[out.1] = Drive::Float(0);
    step.row_v[out.0] = Drive::Volts(out_v);
    step.loads.push(BusLoad {
        bus: 0,
        ohms: load.0,
        volts: load.1,
    });
    Ok(step)
}

/// Whether a divider step with these coordinates can be wired.
pub fn divider_feasible(inputs: &[(usize, usize)], out: (usize, usize)) -> bool {
    !inputs.iter().any(|i| i.0 == out.0) || !inputs.iter().any(|i| i.1 == out.1)
}

/// Build a divider step: each input cell between a 0 V line and bus 0, the
/// output between bus 0 and a line at `out_v`, with an optional
/// `(ohms, volts)` load on the bus.
///
/// Rows are driven and the involved columns tied into the bus when the
/// output row holds no input; otherwise columns are driven (with every
/// voltage negated, which preserves each device's polarity) and rows tied.
#[allow(clippy::too_many_arguments)]
pub fn divider_step(
    rows: usize,
    cols: usize,
    inputs: &[(usize, usize)],
    out: (usize, usize),
    out_v: f64,
    load: Option<(f64, f64)>,
    width: f64,
    phase: Phase,
    op_id: u64,
) -> Result<PulseStep, XbarError> {
    for &(r, c) in inputs.iter().chain(std::iter::once(&out)) {
        if r >= rows || c >= cols {
            return Err(XbarError::OutOfRange {
                row: r,
                col: c,
                rows,
                cols,
            });
        }
    }
    if inputs.contains(&out) {
        return Err(XbarError::SameCell(out.0, out.1));
    }
    let mut step = PulseStep::idle(rows, cols, width, phase, op_id);
    let drive_rows = !inputs.iter().any(|i| i.0 == out.0);
    let sign = if drive_rows {
        1.0
    } else if !inputs.iter().any(|i| i.1 == out.1) {
        -1.0
    } else {
        return Err(XbarError::LineConflict(out.0, out.1));
    };
    for &(r, c) in inputs.iter().chain(std::iter::once(&out)) {
        step.select_cell(r, c);
        if drive_rows {
            step.col_v[c] = Drive::Float(0);
        } else {
            step.row_v[r] = Drive::Float(0);
        }
    }
    // Inputs sit at 0 V, which every line already holds.
    if drive_rows {
        step.row_v[out.0] = Drive::Volts(out_v);
    } else {
        step.col_v[out.1] = Drive::Volts(-out_v);
    }
    if let Some((ohms, volts)) = load {
        step.loads.push(BusLoad {
            bus: 0,
            ohms,
            volts: sign * volts,
        });
    }
    Ok(step)
}

/// Bounds the templates must respect at every probed device corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateCheck {
    /// Weakest logic-0 a gate input may present, in units of its `r_off`.
    pub weak_zero: f64,
    /// Weakest logic-1 a COPY may leave in its destination, in units of its
    /// `r_on`. A SET-type copy stops once the destination's share of the
    /// voltage falls to its threshold, so copies come out weaker than
    /// gate outputs.
    pub copy_one: f64,
    /// Relative resistance drift allowed on a cell that must keep its value.
    pub drift: f64,
    /// Distance of the probed D2D corners from nominal, in standard
    /// deviations of the variation spec.
    pub corner_sigmas: f64,
}

impl Default for TemplateCheck {
    fn default() -> Self {
        Self {
            weak_zero: 0.9,
            copy_one: 2.5,
            drift: 0.05,
            corner_sigmas: 2.5,
        }
    }
}

/// A probed device: parameters plus the resistance it starts from.
#[derive(Clone, Copy)]
struct Probe {
    p: DeviceParams,
    ohms: f64,
}

fn x_for(p: &DeviceParams, ohms: f64) -> f64 {
    ((1.0 / ohms - 1.0 / p.r_off) / (1.0 / p.r_on - 1.0 / p.r_off)).clamp(0.0, 1.0)
}

/// Corner device: resistances scaled by `exp(r_dir * k * sigma_r)`, both
/// threshold magnitudes moved by `th_dir * k * sigma_th`.
fn corner(p: &DeviceParams, spec: &VariationSpec, k: f64, r_dir: f64, th_dir: f64) -> DeviceParams {
    let (sr, st) = if spec.d2d {
        (spec.d2d_sigma_r, spec.d2d_sigma_th)
    } else {
        (0.0, 0.0)
    };
    let f = (r_dir * k * sr).exp();
    DeviceParams {
        r_on: p.r_on * f,
        r_off: p.r_off * f,
        v_set_th: p.v_set_th + th_dir * k * st,
        v_reset_th: p.v_reset_th - th_dir * k * st,
        ..*p
    }
}

/// Fresh 3×3 array running `init` then `gate`, with `cells` placed first.
fn probe_run(
    cfg: &XbarConfig,
    t: &GateTemplates,
    cells: &[((usize, usize), Probe)],
    init: PulseStep,
    gate: PulseStep,
) -> Result<Vec<f64>, XbarError> {
    let nominal = cells[0].1.p;
    let mut xb = Crossbar::with_config(3, 3, nominal, VariationSpec::none(), 0, *cfg)?;
    xb.set_templates(*t);
    for &((r, c), pr) in cells {
        xb.set_params(r, c, pr.p)?;
        xb.set_state(r, c, DeviceState::with_x(x_for(&pr.p, pr.ohms)))?;
    }
    let mut prog = PulseProgram::new();
    prog.push(init);
    prog.push(gate);
    xb.run_program(&prog, false)?;
    cells.iter().map(|&((r, c), _)| xb.resistance(r, c)).collect()
}

const NOR_INPUTS: [(usize, usize); 2] = [(0, 0), (0, 1)];
const NOR_OUT: (usize, usize) = (1, 2);

/// Output and input resistances after the output is pre-SET and one NOR
/// step runs over `inputs` (one or two).
fn probe_nor(cfg: &XbarConfig, t: &GateTemplates, out: DeviceParams, inputs: &[Probe]) -> Result<Vec<f64>, XbarError> {
    let mut cells = vec![(
        NOR_OUT,
        Probe {
            p: out,
            ohms: out.r_off,
        },
    )];
    cells.extend(NOR_INPUTS.iter().copied().zip(inputs.iter().copied()));
    let mut init = PulseStep::idle(3, 3, cfg.set_width, Phase::Init, 0);
    init.row_v[NOR_OUT.0] = Drive::Volts(cfg.set_voltage);
    init.select_cell(NOR_OUT.0, NOR_OUT.1);
    let gate = t.nor_step(3, 3, &NOR_INPUTS[..inputs.len()], NOR_OUT, 1)?;
    probe_run(cfg, t, &cells, init, gate)
}

/// Destination and source resistances after the destination is pre-RESET
/// and one COPY step runs.
fn probe_copy(cfg: &XbarConfig, t: &GateTemplates, dst: DeviceParams, src: Probe) -> Result<Vec<f64>, XbarError> {
    let cells = [((1, 1), Probe { p: dst, ohms: dst.r_on }), ((0, 0), src)];
    let mut init = PulseStep::idle(3, 3, cfg.reset_width, Phase::Init, 0);
    init.row_v[1] = Drive::Volts(cfg.reset_voltage);
    init.select_cell(1, 1);
    let gate = t.copy_step(3, 3, (0, 0), (1, 1), 1)?;
    probe_run(cfg, t, &cells, init, gate)
}

/// Probed corners, deduplicated when variation is off.
struct Corners {
    /// Cells that must switch: high threshold magnitude, either resistance.
    firing: Vec<DeviceParams>,
    /// Cells that must hold: low threshold magnitude, either resistance.
    holding: Vec<DeviceParams>,
}

impl Corners {
    fn new(p: &DeviceParams, spec: &VariationSpec, k: f64) -> Self {
        let pick = |th_dir: f64| {
            let mut v = vec![corner(p, spec, k, -1.0, th_dir), corner(p, spec, k, 1.0, th_dir)];
            v.dedup();
            v
        };
        Self {
            firing: pick(1.0),
            holding: pick(-1.0),
        }
    }
}

fn nor_passes(
    p: &DeviceParams,
    spec: &VariationSpec,
    cfg: &XbarConfig,
    t: &GateTemplates,
    k: &TemplateCheck,
) -> Result<bool, XbarError> {
    let cs = Corners::new(p, spec, k.corner_sigmas);
    let one = |d: DeviceParams| Probe { p: d, ohms: d.r_on };
    let zero = |d: DeviceParams, weak: bool| Probe {
        p: d,
        ohms: if weak { k.weak_zero * d.r_off } else { d.r_off },
    };
    // Any logic-1 input fires the gate and keeps its value.
    for out in &cs.firing {
        for inp in &cs.holding {
            let cases = [
                vec![one(*inp)],
                vec![one(*inp), zero(*inp, true)],
                vec![one(*inp), one(*inp)],
            ];
            for ins in cases {
                let r = probe_nor(cfg, t, *out, &ins)?;
                if r[0] < k.weak_zero * out.r_off {
                    return Ok(false);
                }
                for (after, before) in r[1..].iter().zip(&ins) {
                    if before.ohms < before.p.read_threshold() && *after > before.ohms * (1.0 + k.drift) {
                        return Ok(false);
                    }
                }
            }
        }
    }
    // All logic-0 inputs hold the output.
    for out in &cs.holding {
        for inp in &cs.holding {
            for ins in [
                vec![zero(*inp, true)],
                vec![zero(*inp, true), zero(*inp, true)],
                vec![zero(*inp, false); 2],
            ] {
                let r = probe_nor(cfg, t, *out, &ins)?;
                if r[0] > out.r_on * (1.0 + k.drift)
                    || r[1..].iter().zip(&ins).any(|(a, b)| *a < k.weak_zero * b.p.r_off)
                {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn copy_passes(
    p: &DeviceParams,
    spec: &VariationSpec,
    cfg: &XbarConfig,
    t: &GateTemplates,
    k: &TemplateCheck,
) -> Result<bool, XbarError> {
    let cs = Corners::new(p, spec, k.corner_sigmas);
    for dst in &cs.firing {
        for src in &cs.holding {
            let r = probe_copy(
                cfg,
                t,
                *dst,
                Probe {
                    p: *src,
                    ohms: src.r_on,
                },
            )?;
            if r[0] > k.copy_one * dst.r_on || r[1] > src.r_on * (1.0 + k.drift) {
                return Ok(false);
            }
        }
    }
    for dst in &cs.holding {
        for src in &cs.holding {
            for ohms in [k.weak_zero * src.r_off, src.r_off] {
                let r = probe_copy(cfg, t, *dst, Probe { p: *src, ohms })?;
                if r[0] < k.weak_zero * dst.r_off || r[1] < k.weak_zero * src.r_off {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Longest run of passing grid points as `(start, end)` indices, end
/// exclusive.
fn longest_run(pass: &[bool]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, ok) in pass.iter().chain(std::iter::once(&false)).enumerate() {
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(bs, be)| i - s > be - bs) {
                    best = Some((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

/// Midpoint of the longest run of passing grid voltages, rounded to 10 mV.
fn window_mid(grid: &[f64], pass: &[bool]) -> Option<f64> {
    longest_run(pass).map(|(s, e)| {
        let mid = 0.5 * (grid[s] + grid[e - 1]);
        (mid * 100.0).round() / 100.0
    })
}

/// NOR bus loads tried by the calibration, in units of nominal `r_on`.
pub const NOR_LOAD_FACTORS: [f64; 9] = [0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 3.0, 4.0];

/// Calibrated templates and the corner distance each one was checked at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateCalibration {
    pub templates: GateTemplates,
    pub nor_sigmas: f64,
    pub copy_sigmas: f64,
}

fn voltage_grid(p: &DeviceParams) -> Vec<f64> {
    let hi = 4.0 * p.v_set_th.max(p.v_reset_th.abs());
    (0..).map(|i| 0.5 + 0.02 * i as f64).take_while(|v| *v <= hi).collect()
}

/// Widest NOR window over the candidate loads: `(load, voltage)`.
fn calibrate_nor(
    p: &DeviceParams,
    spec: &VariationSpec,
    cfg: &XbarConfig,
    base: &GateTemplates,
    check: &TemplateCheck,
) -> Result<Option<(f64, f64)>, XbarError> {
    let grid = voltage_grid(p);
    let mut t = *base;
    let mut best: Option<(usize, f64, f64)> = None;
    for factor in NOR_LOAD_FACTORS {
        t.nor_load_ohms = factor * p.r_on;
        let mut pass = Vec::with_capacity(grid.len());
        for &v in &grid {
            t.nor_voltage = v;
            pass.push(nor_passes(p, spec, cfg, &t, check)?);
        }
        if let Some((s, e)) = longest_run(&pass) {
            if best.is_none_or(|(w, _, _)| e - s > w) {
                best = Some((e - s, t.nor_load_ohms, window_mid(&grid, &pass).expect("run exists")));
            }
        }
    }
    Ok(best.map(|(_, load, v)| (load, v)))
}

fn calibrate_copy(
    p: &DeviceParams,
    spec: &VariationSpec,
    cfg: &XbarConfig,
    base: &GateTemplates,
    check: &TemplateCheck,
) -> Result<Option<f64>, XbarError> {
    let grid = voltage_grid(p);
    let mut t = *base;
    let mut pass = Vec::with_capacity(grid.len());
    for &v in &grid {
        t.copy_voltage = v;
        pass.push(copy_passes(p, spec, cfg, &t, check)?);
    }
    Ok(window_mid(&grid, &pass))
}

fn no_window(what: &str) -> XbarError {
    XbarError::InvalidConfig {
        field: "templates",
        reason: format!("no {what} voltage passes the template checks"),
    }
}

/// Sweep template voltages on a 20 mV grid and return the midpoint of the
/// widest passing window, checking at the D2D corners of `spec` (widths
/// held at the values in `base`). The NOR bus load is picked from
/// [`NOR_LOAD_FACTORS`] by the same criterion. Each template is checked
/// at `check.corner_sigmas`, or at the largest smaller multiple of 0.5
/// that still leaves a window.
pub fn calibrate_templates(
    p: &DeviceParams,
    spec: &VariationSpec,
    cfg: &XbarConfig,
    base: &GateTemplates,
) -> Result<TemplateCalibration, XbarError> {
    p.validate()?;
    spec.validate()?;
    cfg.validate()?;
    let top = TemplateCheck::default();
    let steps: Vec<f64> = (0..=(top.corner_sigmas / 0.5).round() as usize)
        .rev()
        .map(|i| i as f64 * 0.5)
        .collect();
    let mut t = *base;
    let mut out = TemplateCalibration {
        templates: t,
        nor_sigmas: 0.0,
        copy_sigmas: 0.0,
    };
    let mut found = None;
    for &k in &steps {
        let check = TemplateCheck {
            corner_sigmas: k,
            ..top
        };
        if let Some(w) = calibrate_nor(p, spec, cfg, &t, &check)? {
            found = Some((k, w));
            break;
        }
    }
    let (k, (load, v)) = found.ok_or_else(|| no_window("NOR"))?;
    t.nor_load_ohms = load;
    t.nor_voltage = v;
    out.nor_sigmas = k;
    let mut found = None;
    for &k in &steps {
        let check = TemplateCheck {
            corner_sigmas: k,
            ..top
        };
        if let Some(v) = calibrate_copy(p, spec, cfg, &t, &check)? {
            found = Some((k, v));
            break;
        }
    }
    let (k, v) = found.ok_or_else(|| no_window("COPY"))?;
    t.copy_voltage = v;
    out.copy_sigmas = k;
    out.templates = t;
    Ok(out)
}

/// Calibrate at exactly `check.corner_sigmas`.
pub fn calibrate_templates_with(
    p: &DeviceParams,
    spec: &VariationSpec,
    cfg: &XbarConfig,
    base: &GateTemplates,
    check: &TemplateCheck,
) -> Result<GateTemplates, XbarError> {
    p.validate()?;
    spec.validate()?;
    cfg.validate()?;
    let mut t = *base;
    let (load, v) = calibrate_nor(p, spec, cfg, &t, check)?.ok_or_else(|| no_window("NOR"))?;
    t.nor_load_ohms = load;
    t.nor_voltage = v;
    t.copy_voltage = calibrate_copy(p, spec, cfg, &t, check)?.ok_or_else(|| no_window("COPY"))?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_midpoint_picks_longest_run() {
        let grid = [1.0, 1.1, 1.2, 1.3, 1.4, 1.5];
        let pass = [true, false, true, true, true, false];
        assert_eq!(window_mid(&grid, &pass), Some(1.3));
        assert_eq!(window_mid(&grid, &[false; 6]), None);
    }

    #[test]
    fn shipped_templates_match_recalibration() {
        let shipped = GateTemplates::default();
        let fresh = calibrate_templates(
            &DeviceParams::default(),
            &VariationSpec::default(),
            &XbarConfig::default(),
            &shipped,
        )
        .unwrap();
        assert_eq!(fresh.templates, shipped);
        assert_eq!(fresh.nor_sigmas, 2.5);
        assert_eq!(fresh.copy_sigmas, 1.0);
    }

    #[test]
    fn shipped_templates_pass_their_checks() {
        let p = DeviceParams::default();
        let spec = VariationSpec::default();
        let cfg = XbarConfig::default();
        let t = GateTemplates::default();
        let nor = TemplateCheck::default();
        let copy = TemplateCheck {
            corner_sigmas: 1.0,
            ..nor
        };
        assert!(nor_passes(&p, &spec, &cfg, &t, &nor).unwrap());
        assert!(copy_passes(&p, &spec, &cfg, &t, &copy).unwrap());
        // Nominal devices pass everything.
        let none = VariationSpec::none();
        assert!(nor_passes(&p, &none, &cfg, &t, &nor).unwrap());
        assert!(copy_passes(&p, &none, &cfg, &t, &nor).unwrap());
    }

    #[test]
    fn corners_move_resistance_and_threshold() {
        let p = DeviceParams::default();
        let spec = VariationSpec::default();
        let c = corner(&p, &spec, 2.0, 1.0, -1.0);
        assert!((c.r_on / p.r_on - 0.2f64.exp()).abs() < 1e-12);
        assert!((c.v_set_th - 0.98).abs() < 1e-12);
        assert!((c.v_reset_th + 0.98).abs() < 1e-12);
        let off = VariationSpec { d2d: false, ..spec };
        assert_eq!(corner(&p, &off, 2.0, 1.0, 1.0), p);
        assert_eq!(Corners::new(&p, &off, 2.0).firing.len(), 1);
    }

    #[test]
    fn cross_wiring() {
        let s = cross_step(
            3,
            3,
            &[(0, 0), (0, 1)],
            (1, 2),
            -2.0,
            (1e4, 0.0),
            1e-6,
            Phase::Evaluate,
            0,
        )
        .unwrap();
        assert_eq!(s.row_v[0], Drive::Float(0));
        assert_eq!(s.col_v[0], Drive::Volts(0.0));
        assert_eq!(s.col_v[1], Drive::Volts(0.0));
        assert_eq!(s.col_v[2], Drive::Float(0));
        assert_eq!(s.row_v[1], Drive::Volts(-2.0));
        assert_eq!(s.row_v[2], Drive::Volts(0.0));
        assert_eq!(s.selected().count(), 3);
        assert_eq!(
            s.loads,
            vec![BusLoad {
                bus: 0,
                ohms: 1e4,
                volts: 0.0
            }]
        );
        for out in [(0, 2), (1, 0)] {
            assert!(!cross_feasible(&[(0, 0)], out));
            let err = cross_step(3, 3, &[(0, 0)], out, -2.0, (1e4, 0.0), 1e-6, Phase::Evaluate, 0);
            assert_eq!(err, Err(XbarError::LineConflict(out.0, out.1)));
        }
        assert!(cross_feasible(&[(0, 0), (2, 0)], (1, 1)));
    }

    #[test]
    fn divider_modes() {
        // Output row free of inputs: rows driven, columns on the bus.
        let s = divider_step(
            3,
            3,
            &[(0, 0), (0, 1)],
            (1, 0),
            -2.0,
            Some((1e4, 0.0)),
            1e-6,
            Phase::Evaluate,
            0,
        )
        .unwrap();
        assert_eq!(s.row_v[1], Drive::Volts(-2.0));
        assert_eq!(s.row_v[0], Drive::Volts(0.0));
        assert_eq!(s.col_v[0], Drive::Float(0));
        assert_eq!(s.col_v[1], Drive::Float(0));
        assert_eq!(s.col_v[2], Drive::Volts(0.0));
        // Output shares the input row: columns driven with negated voltage.
        let s = divider_step(3, 3, &[(0, 0)], (0, 2), -2.0, None, 1e-6, Phase::Evaluate, 0).unwrap();
        assert_eq!(s.col_v[2], Drive::Volts(2.0));
        assert_eq!(s.row_v[0], Drive::Float(0));
        // Shares both.
        let err = divider_step(3, 3, &[(0, 0), (1, 1)], (0, 1), -2.0, None, 1e-6, Phase::Evaluate, 0);
        assert_eq!(err, Err(XbarError::LineConflict(0, 1)));
        assert!(!divider_feasible(&[(0, 0), (1, 1)], (0, 1)));
        assert!(divider_feasible(&[(0, 0), (1, 1)], (2, 2)));
    }
}
