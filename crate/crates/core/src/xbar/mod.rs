//! 1T1R crossbar simulator.
//!
//! Each cell is a selector transistor (ideal switch with a fixed
//! on-resistance) in series with one device. A pulse step drives every row
//! and column line either to a fixed voltage or leaves it floating on a
//! shared bus node; selected cells conduct, unselected cells are open. The
//! bus node voltages come from a small nodal solve repeated every `dt` as
//! device resistances evolve, so divider-style gate steps and plain write
//! pulses run through the same engine.

mod engine;
mod program;
mod serial;
mod templates;
mod trace;

pub use program::{BusLoad, Drive, Phase, PulseProgram, PulseStep};
pub use templates::{
    calibrate_templates, calibrate_templates_with, cross_feasible, cross_step, divider_feasible, divider_step,
    GateTemplates, TemplateCalibration, TemplateCheck, NOR_LOAD_FACTORS,
};
pub use trace::{energy_report, EnergyReport, ExecutionTrace, ReadSample};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{
    self, resistance, sample_instance, DeviceError, DeviceParams, DeviceState, EventParams, LevelConfig, Pulse,
    VariationSpec,
};
use crate::seed::{self, Stream};

/// Largest supported array.
pub const MAX_ROWS: usize = 512;
pub const MAX_COLS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum XbarError {
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error("crossbar dimensions must be >= 1, got {rows}×{cols}")]
    ZeroDimension { rows: usize, cols: usize },
    #[error("crossbar {rows}×{cols} exceeds the supported {MAX_ROWS}×{MAX_COLS}")]
    TooLarge { rows: usize, cols: usize },
    #[error("cell ({row}, {col}) out of range for a {rows}×{cols} crossbar")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("invalid crossbar config `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("source and destination are the same cell ({0}, {1})")]
    SameCell(usize, usize),
    #[error("gate step impossible: output ({0}, {1}) shares a row or column with its inputs in a way the template cannot wire")]
    LineConflict(usize, usize),
    #[error("crossbar text line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Electrical settings of the array and its peripheral drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XbarConfig {
    /// Selector on-resistance, ohms.
    pub r_selector_on: f64,
    /// Integration step, seconds.
    pub dt: f64,
    pub read_voltage: f64,
    pub read_width: f64,
    pub set_voltage: f64,
    pub set_width: f64,
    pub reset_voltage: f64,
    pub reset_width: f64,
}

impl Default for XbarConfig {
    fn default() -> Self {
        Self {
            r_selector_on: 1e3,
            dt: 1e-9,
            read_voltage: 0.2,
            read_width: 10e-9,
            set_voltage: 2.0,
            set_width: 1e-6,
            reset_voltage: -2.0,
            reset_width: 1e-6,
        }
    }
}

impl XbarConfig {
    pub fn validate(&self) -> Result<(), XbarError> {
        let bad = |field, reason: &str| XbarError::InvalidConfig {
            field,
            reason: reason.into(),
        };
        let positive = [
            ("r_selector_on", self.r_selector_on),
            ("dt", self.dt),
            ("read_width", self.read_width),
            ("set_width", self.set_width),
            ("reset_width", self.reset_width),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(field, "must be finite and > 0"));
            }
        }
        for (field, w) in [
            ("read_width", self.read_width),
            ("set_width", self.set_width),
            ("reset_width", self.reset_width),
        ] {
            if w < self.dt {
                return Err(bad(field, "must be >= dt"));
            }
        }
        if !(self.read_voltage.is_finite() && self.read_voltage > 0.0) {
            return Err(bad("read_voltage", "must be finite and > 0"));
        }
        if !(self.set_voltage.is_finite() && self.set_voltage > 0.0) {
            return Err(bad("set_voltage", "must be finite and > 0"));
        }
        if !(self.reset_voltage.is_finite() && self.reset_voltage < 0.0) {
            return Err(bad("reset_voltage", "must be finite and < 0"));
        }
        Ok(())
    }
}

/// A `rows × cols` 1T1R array.
#[derive(Debug, Clone)]
pub struct Crossbar {
    rows: usize,
    cols: usize,
    nominal: DeviceParams,
    params: Vec<DeviceParams>,
    states: Vec<DeviceState>,
    cfg: XbarConfig,
    templates: GateTemplates,
    seed: u64,
    c2c: bool,
    rng: Stream,
    next_op: u64,
    record: bool,
    trace: ExecutionTrace,
}

impl Crossbar {
    /// Build an all-HRS array with default electrical settings.
    pub fn new(
        rows: usize,
        cols: usize,
        nominal: DeviceParams,
        spec: VariationSpec,
        seed: u64,
    ) -> Result<Self, XbarError> {
        Self::with_config(rows, cols, nominal, spec, seed, XbarConfig::default())
    }

    pub fn with_config(
        rows: usize,
        cols: usize,
        nominal: DeviceParams,
        spec: VariationSpec,
        seed: u64,
        cfg: XbarConfig,
    ) -> Result<Self, XbarError> {
        check_dims(rows, cols)?;
        nominal.validate()?;
        spec.validate()?;
        cfg.validate()?;
        let mut params = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let mut rng = seed::stream(seed, "d2d", cell_key(r, c));
                params.push(sample_instance(&nominal, &spec, &mut rng)?);
            }
        }
        Ok(Self {
            rows,
            cols,
            nominal,
            params,
            states: vec![DeviceState::HRS; rows * cols],
            cfg,
            templates: GateTemplates::default(),
            seed,
            c2c: spec.c2c,
            rng: seed::stream(seed, "c2c", 0),
            next_op: 0,
            record: true,
            trace: ExecutionTrace::new(rows, cols),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn nominal(&self) -> &DeviceParams {
        &self.nominal
    }

    pub fn config(&self) -> &XbarConfig {
        &self.cfg
    }

    pub fn templates(&self) -> &GateTemplates {
        &self.templates
    }

    pub fn set_templates(&mut self, t: GateTemplates) {
        self.templates = t;
    }

    /// Whether ad-hoc operations apply cycle-to-cycle jitter.
    pub fn c2c(&self) -> bool {
        self.c2c
    }

    pub fn set_c2c(&mut self, on: bool) {
        self.c2c = on;
    }

    /// Turn accumulation into [`Crossbar::trace`] on or off. Monte Carlo
    /// loops that issue millions of operations switch it off.
    pub fn set_recording(&mut self, on: bool) {
        self.record = on;
    }

    /// Everything executed on this crossbar while recording was on.
    pub fn trace(&self) -> &ExecutionTrace {
        &self.trace
    }

    pub fn take_trace(&mut self) -> ExecutionTrace {
        std::mem::replace(&mut self.trace, ExecutionTrace::new(self.rows, self.cols))
    }

    /// A fresh operation id for ad-hoc operations.
    pub fn next_op_id(&mut self) -> u64 {
        let id = self.next_op;
        self.next_op += 1;
        id
    }

    /// Reserve op ids below `id` so ad-hoc operations never collide with a
    /// program's own numbering.
    pub fn reserve_op_ids(&mut self, id: u64) {
        self.next_op = self.next_op.max(id);
    }

    fn idx(&self, row: usize, col: usize) -> Result<usize, XbarError> {
        if row >= self.rows || col >= self.cols {
            return Err(XbarError::OutOfRange {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(row * self.cols + col)
    }

    pub fn params(&self, row: usize, col: usize) -> Result<&DeviceParams, XbarError> {
        let i = self.idx(row, col)?;
        Ok(&self.params[i])
    }

    pub fn state(&self, row: usize, col: usize) -> Result<DeviceState, XbarError> {
        let i = self.idx(row, col)?;
        Ok(self.states[i])
    }

    /// Replace one device's parameters, e.g. to place a chosen corner.
    pub fn set_params(&mut self, row: usize, col: usize, p: DeviceParams) -> Result<(), XbarError> {
        p.validate()?;
        let i = self.idx(row, col)?;
        self.params[i] = p;
        Ok(())
    }

    pub fn set_state(&mut self, row: usize, col: usize, s: DeviceState) -> Result<(), XbarError> {
        let i = self.idx(row, col)?;
        self.states[i] = s;
        Ok(())
    }

    /// Row-major device states.
    pub fn states(&self) -> &[DeviceState] {
        &self.states
    }

    /// Device resistance without applying any pulse.
    pub fn resistance(&self, row: usize, col: usize) -> Result<f64, XbarError> {
        let i = self.idx(row, col)?;
        Ok(resistance(&self.states[i], &self.params[i]))
    }

    /// Binary read threshold, ohms.
    pub fn read_threshold(&self) -> f64 {
        self.nominal.read_threshold()
    }

    /// Execute a program and return its trace. The trace is also folded
    /// into [`Crossbar::trace`] when recording is on.
    pub fn run_program(&mut self, prog: &PulseProgram, c2c: bool) -> Result<ExecutionTrace, XbarError> {
        prog.validate(self.rows, self.cols)?;
        let mut tr = ExecutionTrace::new(self.rows, self.cols);
        for step in &prog.steps {
            self.run_step(step, c2c, &mut tr);
        }
        tr.final_states = self.states.clone();
        if self.record {
            self.trace.merge(&tr);
        }
        Ok(tr)
    }

    /// Run a single-cell step with both lines driven, outside any program.
    fn adhoc(&mut self, idx: usize, v_pair: f64, width: f64, phase: Phase, op: u64) {
        let ev = EventParams::sample(&self.params[idx], &mut self.rng, self.c2c);
        // With recording off the step goes to a throwaway trace; an empty
        // trace does not allocate.
        let mut tr = if self.record {
            std::mem::take(&mut self.trace)
        } else {
            ExecutionTrace::default()
        };
        if phase == Phase::Read {
            self.record_read(idx, op, &mut tr);
        }
        self.run_fixed(idx, v_pair, &ev, width, phase, op, &mut tr);
        if self.record {
            tr.duration += width;
            tr.steps += 1;
            self.trace = tr;
        }
    }

    fn record_read(&self, idx: usize, op: u64, tr: &mut ExecutionTrace) {
        tr.reads.push(ReadSample {
            row: idx / self.cols,
            col: idx % self.cols,
            op_id: op,
            ohms: resistance(&self.states[idx], &self.params[idx]),
        });
    }

    /// Full SET (`true`) or full RESET (`false`) through the selector.
    pub fn write_bit(&mut self, row: usize, col: usize, bit: bool) -> Result<(), XbarError> {
        let idx = self.idx(row, col)?;
        let op = self.next_op_id();
        self.write_idx(idx, bit, Phase::Load, op);
        Ok(())
    }

    fn write_idx(&mut self, idx: usize, bit: bool, phase: Phase, op: u64) {
        let (v, w) = if bit {
            (self.cfg.set_voltage, self.cfg.set_width)
        } else {
            (self.cfg.reset_voltage, self.cfg.reset_width)
        };
        self.adhoc(idx, v, w, phase, op);
    }

    /// Measure a cell at the read voltage and return its resistance.
    pub fn sense(&mut self, row: usize, col: usize) -> Result<f64, XbarError> {
        let idx = self.idx(row, col)?;
        let op = self.next_op_id();
        self.adhoc(idx, self.cfg.read_voltage, self.cfg.read_width, Phase::Read, op);
        Ok(resistance(&self.states[idx], &self.params[idx]))
    }

    /// LRS reads as `true`.
    pub fn read_bit(&mut self, row: usize, col: usize) -> Result<bool, XbarError> {
        Ok(self.sense(row, col)? < self.read_threshold())
    }

    /// Copy `src`'s binary state into `dst` without reading `src` out:
    /// RESET `dst`, then a divider step in which `src` gates `dst`'s SET.
    pub fn clone_cell(&mut self, src: (usize, usize), dst: (usize, usize)) -> Result<(), XbarError> {
        self.idx(src.0, src.1)?;
        self.idx(dst.0, dst.1)?;
        if src == dst {
            return Err(XbarError::SameCell(src.0, src.1));
        }
        let op = self.next_op_id();
        let mut prog = PulseProgram::new();
        let mut init = PulseStep::idle(self.rows, self.cols, self.cfg.reset_width, Phase::Init, op);
        init.row_v[dst.0] = Drive::Volts(self.cfg.reset_voltage);
        init.select_cell(dst.0, dst.1);
        prog.push(init);
        prog.push(self.templates.copy_step(self.rows, self.cols, src, dst, op)?);
        self.run_program(&prog, self.c2c)?;
        Ok(())
    }

    /// Apply a pulse straight across one device through a regulated write
    /// driver (the selector drop is compensated, so the device sees exactly
    /// `amplitude`). Used for level programming and stochastic switching.
    pub fn drive_cell(
        &mut self,
        row: usize,
        col: usize,
        amplitude: f64,
        width: f64,
        phase: Phase,
    ) -> Result<(), XbarError> {
        let idx = self.idx(row, col)?;
        let pulse = Pulse::new(amplitude, width, self.cfg.dt);
        let (s, e) = device::drive_constant(self.states[idx], &self.params[idx], &pulse, &mut self.rng, self.c2c)?;
        self.states[idx] = s;
        let op = self.next_op_id();
        if self.record {
            self.trace.add_energy(idx, op, phase, e);
            self.trace.duration += width;
            self.trace.steps += 1;
        }
        Ok(())
    }

    /// Program a multi-level cell through the write driver.
    pub fn program_level(&mut self, row: usize, col: usize, cfg: &LevelConfig, level: usize) -> Result<(), XbarError> {
        let idx = self.idx(row, col)?;
        let (s, e) = device::program_level_with_energy(
            self.states[idx],
            &self.params[idx],
            cfg,
            level,
            &mut self.rng,
            self.c2c,
        )?;
        self.states[idx] = s;
        let op = self.next_op_id();
        if self.record {
            self.trace.add_energy(idx, op, Phase::Evaluate, e);
        }
        Ok(())
    }

    /// Sense a multi-level cell and classify it against `cfg`.
    pub fn read_level(&mut self, row: usize, col: usize, cfg: &LevelConfig) -> Result<usize, XbarError> {
        Ok(cfg.classify(self.sense(row, col)?))
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<(), XbarError> {
    if rows == 0 || cols == 0 {
        return Err(XbarError::ZeroDimension { rows, cols });
    }
    if rows > MAX_ROWS || cols > MAX_COLS {
        return Err(XbarError::TooLarge { rows, cols });
    }
    Ok(())
}

/// Per-cell D2D substream index; independent of the array dimensions.
fn cell_key(row: usize, col: usize) -> u64 {
    ((row as u64) << 32) | col as u64
}
