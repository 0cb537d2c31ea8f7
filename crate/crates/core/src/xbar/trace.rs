//! Execution traces and energy reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::Phase;
use crate::device::DeviceState;

/// A resistance measured during a read step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadSample {
    pub row: usize,
    pub col: usize,
    pub op_id: u64,
    pub ohms: f64,
}

/// Everything a program run leaves behind.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecutionTrace {
    pub rows: usize,
    pub cols: usize,
    /// Joules per `(row-major cell index, op_id, phase)`.
    pub energy: BTreeMap<(usize, u64, Phase), f64>,
    pub reads: Vec<ReadSample>,
    /// Row-major device states after the last step.
    pub final_states: Vec<DeviceState>,
    /// Total simulated time, seconds.
    pub duration: f64,
    pub steps: usize,
}

impl ExecutionTrace {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            ..Self::default()
        }
    }

    pub(crate) fn add_energy(&mut self, cell: usize, op_id: u64, phase: Phase, joules: f64) {
        *self.energy.entry((cell, op_id, phase)).or_insert(0.0) += joules;
    }

    /// Fold `other` into `self`. Dimensions must agree.
    pub fn merge(&mut self, other: &ExecutionTrace) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (k, e) in &other.energy {
            *self.energy.entry(*k).or_insert(0.0) += e;
        }
        self.reads.extend_from_slice(&other.reads);
        self.final_states.clone_from(&other.final_states);
        self.duration += other.duration;
        self.steps += other.steps;
    }

    /// Reads of one cell, in program order.
    pub fn reads_of(&self, row: usize, col: usize) -> impl Iterator<Item = &ReadSample> {
        self.reads.iter().filter(move |s| s.row == row && s.col == col)
    }

    /// Energy CSV with columns `row,col,op_id,phase,joules`, one line per
    /// touched `(cell, op, phase)`.
    pub fn energy_csv(&self) -> String {
        let mut out = String::from("row,col,op_id,phase,joules\n");
        for ((cell, op, phase), e) in &self.energy {
            let _ = writeln!(
                out,
                "{},{},{},{},{:e}",
                cell / self.cols,
                cell % self.cols,
                op,
                phase,
                e
            );
        }
        out
    }
}

/// Aggregated energy views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub rows: usize,
    pub cols: usize,
    /// Row-major joules per device.
    pub per_device: Vec<f64>,
    pub per_op: BTreeMap<u64, f64>,
    pub per_phase: BTreeMap<Phase, f64>,
    pub total: f64,
}

impl EnergyReport {
    pub fn device(&self, row: usize, col: usize) -> f64 {
        self.per_device[row * self.cols + col]
    }

    pub fn phase(&self, phase: Phase) -> f64 {
        self.per_phase.get(&phase).copied().unwrap_or(0.0)
    }

    /// Largest relative disagreement between the total and each of the three
    /// aggregate sums.
    pub fn identity_error(&self) -> f64 {
        let sums = [
            self.per_device.iter().sum::<f64>(),
            self.per_op.values().sum::<f64>(),
            self.per_phase.values().sum::<f64>(),
        ];
        let scale = self.total.abs().max(f64::MIN_POSITIVE);
        sums.iter().map(|s| (s - self.total).abs() / scale).fold(0.0, f64::max)
    }
}

/// Aggregate a trace into per-device, per-op and per-phase totals.
pub fn energy_report(trace: &ExecutionTrace) -> EnergyReport {
    let mut per_device = vec![0.0; trace.rows * trace.cols];
    let mut per_op = BTreeMap::new();
    let mut per_phase = BTreeMap::new();
    let mut total = 0.0;
    for ((cell, op, phase), e) in &trace.energy {
        per_device[*cell] += e;
        *per_op.entry(*op).or_insert(0.0) += e;
        *per_phase.entry(*phase).or_insert(0.0) += e;
        total += e;
    }
    EnergyReport {
        rows: trace.rows,
        cols: trace.cols,
        per_device,
        per_op,
        per_phase,
        total,
    }
}
