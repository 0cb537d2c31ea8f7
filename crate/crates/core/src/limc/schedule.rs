//! Placement, phase construction and execution.

use std::collections::HashSet;

use serde::Serialize;

use super::{GateGraph, GateKind, LimError, Source};
use crate::xbar::{
    cross_feasible, divider_feasible, Crossbar, Drive, ExecutionTrace, GateTemplates, Phase, PulseProgram, PulseStep,
    XbarConfig,
};

pub type Cell = (usize, usize);

pub const OP_INIT_RESET: u64 = 0;
pub const OP_INIT_SET: u64 = 1;
pub const OP_LOAD_RESET: u64 = 2;
pub const OP_LOAD_SET: u64 = 3;
/// Op id of the first gate; gate `k` in `gate_order` runs as `GATE_OP_BASE + k`.
pub const GATE_OP_BASE: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Input,
    Const,
    Gate,
    Scratch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Placed {
    pub name: String,
    pub role: Role,
    pub cell: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduledGate {
    pub op_id: u64,
    pub kind: GateKind,
    pub inputs: Vec<Cell>,
    pub output: Cell,
    /// Intermediate NOR result of an OR2.
    pub scratch: Option<Cell>,
}

/// A placed and phased LiM program.
#[derive(Debug, Clone, PartialEq)]
pub struct LimSchedule {
    pub rows: usize,
    pub cols: usize,
    /// Every stored signal and OR2 intermediate, in placement order.
    pub placement: Vec<Placed>,
    /// Primary input cells in netlist order.
    pub inputs: Vec<Cell>,
    pub outputs: Vec<(String, Cell)>,
    pub init: PulseProgram,
    pub evaluate: PulseProgram,
    pub read: PulseProgram,
    pub gate_order: Vec<ScheduledGate>,
    pub xbar: XbarConfig,
    pub templates: GateTemplates,
}

struct Placer {
    rows: usize,
    cols: usize,
    used: Vec<bool>,
    first_free: usize,
}

impl Placer {
    /// First free cell in row-major order that `wireable` accepts as the
    /// output of a step over `inputs`.
    fn take(&mut self, inputs: &[Cell], wireable: fn(&[Cell], Cell) -> bool) -> Option<Cell> {
        let n = self.rows * self.cols;
        let i = (self.first_free..n).find(|&i| !self.used[i] && wireable(inputs, (i / self.cols, i % self.cols)))?;
        self.used[i] = true;
        while self.first_free < n && self.used[self.first_free] {
            self.first_free += 1;
        }
        Some((i / self.cols, i % self.cols))
    }
}

/// Schedule with the default templates and electrical settings.
pub fn schedule(graph: &GateGraph, rows: usize, cols: usize) -> Result<LimSchedule, LimError> {
    schedule_with(graph, rows, cols, &GateTemplates::default(), &XbarConfig::default())
}

pub fn schedule_with(
    graph: &GateGraph,
    rows: usize,
    cols: usize,
    templates: &GateTemplates,
    xcfg: &XbarConfig,
) -> Result<LimSchedule, LimError> {
    if rows == 0 || cols == 0 {
        return Err(LimError::Capacity {
            required: graph.signals.len(),
            available: 0,
        });
    }
    let scratch_needed = graph.count(GateKind::Or2);
    let required = graph.signals.len() + scratch_needed;
    let available = rows * cols;
    if required > available {
        return Err(LimError::Capacity { required, available });
    }
    let mut placer = Placer {
        rows,
        cols,
        used: vec![false; available],
        first_free: 0,
    };
    let mut cell_of: Vec<Option<Cell>> = vec![None; graph.signals.len()];
    let mut placement = Vec::with_capacity(required);
    let no_room = || LimError::Placement(format!("no wireable free cell left on a {rows}×{cols} crossbar"));

    for &s in &graph.inputs {
        let c = placer.take(&[], divider_feasible).ok_or_else(no_room)?;
        cell_of[s] = Some(c);
        placement.push(Placed {
            name: graph.signals[s].name.clone(),
            role: Role::Input,
            cell: c,
        });
    }
    for (s, sig) in graph.signals.iter().enumerate() {
        if matches!(sig.source, Source::Const(_)) {
            let c = placer.take(&[], divider_feasible).ok_or_else(no_room)?;
            cell_of[s] = Some(c);
            placement.push(Placed {
                name: sig.name.clone(),
                role: Role::Const,
                cell: c,
            });
        }
    }

    let mut gate_order = Vec::with_capacity(graph.gates.len());
    let mut evaluate = PulseProgram::new();
    for (k, g) in graph.gates.iter().enumerate() {
        let op_id = GATE_OP_BASE + k as u64;
        let ins: Vec<Cell> = g
            .inputs
            .iter()
            .map(|&s| cell_of[s].expect("gate inputs are defined before use"))
            .collect();
        let name = &graph.signals[g.output].name;
        let (scratch, out) = match g.kind {
            GateKind::Or2 => {
                let sc = placer.take(&ins, cross_feasible).ok_or_else(no_room)?;
                placement.push(Placed {
                    name: format!("{name}$nor"),
                    role: Role::Scratch,
                    cell: sc,
                });
                let out = placer.take(&[sc], cross_feasible).ok_or_else(no_room)?;
                evaluate.push(templates.nor_step(rows, cols, &ins, sc, op_id)?);
                evaluate.push(templates.nor_step(rows, cols, &[sc], out, op_id)?);
                (Some(sc), out)
            }
            GateKind::Not => {
                let out = placer.take(&ins, cross_feasible).ok_or_else(no_room)?;
                evaluate.push(templates.nor_step(rows, cols, &ins, out, op_id)?);
                (None, out)
            }
            GateKind::Copy => {
                let out = placer.take(&ins, divider_feasible).ok_or_else(no_room)?;
                evaluate.push(templates.copy_step(rows, cols, ins[0], out, op_id)?);
                (None, out)
            }
        };
        cell_of[g.output] = Some(out);
        placement.push(Placed {
            name: name.clone(),
            role: Role::Gate,
            cell: out,
        });
        gate_order.push(ScheduledGate {
            op_id,
            kind: g.kind,
            inputs: ins,
            output: out,
            scratch,
        });
    }

    // Init: RESET every result cell, then SET the cells NOR-type gates
    // expect in LRS plus the constant-1 cells.
    let mut reset = Vec::new();
    let mut set = Vec::new();
    for (s, sig) in graph.signals.iter().enumerate() {
        match sig.source {
            Source::Const(v) => {
                reset.push(cell_of[s].unwrap());
                if v {
                    set.push(cell_of[s].unwrap());
                }
            }
            Source::Gate(_) | Source::Input(_) => {}
        }
    }
    for g in &gate_order {
        reset.push(g.output);
        if let Some(sc) = g.scratch {
            reset.push(sc);
            set.push(sc);
        }
        if g.kind != GateKind::Copy {
            set.push(g.output);
        }
    }
    let mut init = PulseProgram::new();
    if !reset.is_empty() {
        init.push(write_step(
            rows,
            cols,
            &reset,
            xcfg.reset_voltage,
            xcfg.reset_width,
            Phase::Init,
            OP_INIT_RESET,
        ));
    }
    if !set.is_empty() {
        init.push(write_step(
            rows,
            cols,
            &set,
            xcfg.set_voltage,
            xcfg.set_width,
            Phase::Init,
            OP_INIT_SET,
        ));
    }

    let outputs: Vec<(String, Cell)> = graph
        .outputs
        .iter()
        .map(|(n, s)| (n.clone(), cell_of[*s].unwrap()))
        .collect();
    let mut read = PulseProgram::new();
    if !outputs.is_empty() {
        let cells: Vec<Cell> = outputs.iter().map(|(_, c)| *c).collect();
        let op = GATE_OP_BASE + gate_order.len() as u64;
        read.push(write_step(
            rows,
            cols,
            &cells,
            xcfg.read_voltage,
            xcfg.read_width,
            Phase::Read,
            op,
        ));
    }

    let sched = LimSchedule {
        rows,
        cols,
        placement,
        inputs: graph.inputs.iter().map(|&s| cell_of[s].unwrap()).collect(),
        outputs,
        init,
        evaluate,
        read,
        gate_order,
        xbar: *xcfg,
        templates: *templates,
    };
    sched.check_legality()?;
    Ok(sched)
}

/// Drive the rows of `cells` to `v` with the columns grounded and select
/// exactly `cells`.
fn write_step(rows: usize, cols: usize, cells: &[Cell], v: f64, width: f64, phase: Phase, op: u64) -> PulseStep {
    let mut s = PulseStep::idle(rows, cols, width, phase, op);
    for &(r, c) in cells {
        s.row_v[r] = Drive::Volts(v);
        s.select_cell(r, c);
    }
    s
}

impl LimSchedule {
    /// Input-load phase for one input vector: RESET every input cell, then
    /// SET the ones carrying 1.
    pub fn load(&self, bits: &[bool]) -> Result<PulseProgram, LimError> {
        if bits.len() != self.inputs.len() {
            return Err(LimError::InputCount {
                expected: self.inputs.len(),
                got: bits.len(),
            });
        }
        let mut p = PulseProgram::new();
        if self.inputs.is_empty() {
            return Ok(p);
        }
        let x = &self.xbar;
        p.push(write_step(
            self.rows,
            self.cols,
            &self.inputs,
            x.reset_voltage,
            x.reset_width,
            Phase::Load,
            OP_LOAD_RESET,
        ));
        let ones: Vec<Cell> = self
            .inputs
            .iter()
            .zip(bits)
            .filter(|(_, b)| **b)
            .map(|(c, _)| *c)
            .collect();
        if !ones.is_empty() {
            p.push(write_step(
                self.rows,
                self.cols,
                &ones,
                x.set_voltage,
                x.set_width,
                Phase::Load,
                OP_LOAD_SET,
            ));
        }
        Ok(p)
    }

    /// The complete program for one input vector.
    pub fn program(&self, bits: &[bool]) -> Result<PulseProgram, LimError> {
        let mut p = self.init.clone();
        p.extend(self.load(bits)?);
        p.extend(self.evaluate.clone());
        p.extend(self.read.clone());
        Ok(p)
    }

    /// Phases present, in execution order.
    pub fn phases(&self) -> Vec<Phase> {
        let mut v = vec![Phase::Init];
        if !self.inputs.is_empty() {
            v.push(Phase::Load);
        }
        if !self.evaluate.steps.is_empty() {
            v.push(Phase::Evaluate);
        }
        if !self.read.steps.is_empty() {
            v.push(Phase::Read);
        }
        v
    }

    pub fn cells_used(&self) -> usize {
        self.placement.len()
    }

    /// Structural legality: injective placement, one written cell per
    /// evaluate step, and every gate input defined before use.
    pub fn check_legality(&self) -> Result<(), LimError> {
        let mut seen = HashSet::new();
        for p in &self.placement {
            if p.cell.0 >= self.rows || p.cell.1 >= self.cols || !seen.insert(p.cell) {
                return Err(LimError::Placement(format!(
                    "signal `{}` has an invalid or shared cell {:?}",
                    p.name, p.cell
                )));
            }
        }
        let mut defined: HashSet<Cell> = self
            .placement
            .iter()
            .filter(|p| matches!(p.role, Role::Input | Role::Const))
            .map(|p| p.cell)
            .collect();
        for g in &self.gate_order {
            if let Some(c) = g.inputs.iter().find(|c| !defined.contains(c)) {
                return Err(LimError::Placement(format!(
                    "op {} reads {c:?} before it is written",
                    g.op_id
                )));
            }
            let writes: Vec<Cell> = g.scratch.into_iter().chain([g.output]).collect();
            for w in writes {
                if !defined.insert(w) {
                    return Err(LimError::Placement(format!("op {} rewrites {w:?}", g.op_id)));
                }
            }
        }
        Ok(())
    }

    /// Schedule summary for reports.
    pub fn to_json(&self) -> serde_json::Value {
        let phase_row = |phase: Phase, p: &PulseProgram| {
            serde_json::json!({
                "phase": phase,
                "steps": p.steps.len(),
                "duration_s": p.duration(),
            })
        };
        serde_json::json!({
            "rows": self.rows,
            "cols": self.cols,
            "cells_used": self.cells_used(),
            "placement": self.placement,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "gate_order": self.gate_order,
            "phases": [
                phase_row(Phase::Init, &self.init),
                serde_json::json!({"phase": Phase::Load, "steps_max": if self.inputs.is_empty() { 0 } else { 2 }}),
                phase_row(Phase::Evaluate, &self.evaluate),
                phase_row(Phase::Read, &self.read),
            ],
            "templates": self.templates,
        })
    }
}

/// Run a schedule for one input vector and sense the outputs.
pub fn execute_schedule(
    xbar: &mut Crossbar,
    sched: &LimSchedule,
    bits: &[bool],
) -> Result<(Vec<bool>, ExecutionTrace), LimError> {
    if (xbar.rows(), xbar.cols()) != (sched.rows, sched.cols) {
        return Err(LimError::Xbar(crate::xbar::XbarError::DimensionMismatch(format!(
            "schedule is {}×{}, crossbar is {}×{}",
            sched.rows,
            sched.cols,
            xbar.rows(),
            xbar.cols()
        ))));
    }
    let prog = sched.program(bits)?;
    let c2c = xbar.c2c();
    let tr = xbar.run_program(&prog, c2c)?;
    let threshold = xbar.read_threshold();
    let read_op = GATE_OP_BASE + sched.gate_order.len() as u64;
    let outs = sched
        .outputs
        .iter()
        .map(|(_, (r, c))| {
            tr.reads
                .iter()
                .find(|s| s.op_id == read_op && (s.row, s.col) == (*r, *c))
                .map(|s| s.ohms < threshold)
                .unwrap_or(false)
        })
        .collect();
    Ok((outs, tr))
}
