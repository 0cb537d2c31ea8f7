//! Pulse programs: timed row/column voltage vectors plus selector masks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::XbarError;

/// Phase label attached to every step; drives the energy split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Init,
    Load,
    Evaluate,
    Read,
    Reset,
}

impl Phase {
    pub const ALL: [Phase; 5] = [Phase::Init, Phase::Load, Phase::Evaluate, Phase::Read, Phase::Reset];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Load => "load",
            Phase::Evaluate => "evaluate",
            Phase::Read => "read",
            Phase::Reset => "reset",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Phase::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown phase `{s}`"))
    }
}

/// How a row or column line is driven during a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Drive {
    /// Held at a fixed voltage.
    Volts(f64),
    /// Left floating and tied to the shared bus node with this id. All lines
    /// carrying the same id form one electrical node.
    Float(u8),
}

impl Drive {
    pub fn volts(self) -> Option<f64> {
        match self {
            Drive::Volts(v) => Some(v),
            Drive::Float(_) => None,
        }
    }
}

/// A resistor from a bus node to a fixed voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusLoad {
    pub bus: u8,
    pub ohms: f64,
    pub volts: f64,
}

/// One step of a pulse program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseStep {
    pub row_v: Vec<Drive>,
    pub col_v: Vec<Drive>,
    /// Row-major `rows × cols` selector mask.
    pub select: Vec<bool>,
    #[serde(default)]
    pub loads: Vec<BusLoad>,
    pub width: f64,
    pub phase: Phase,
    pub op_id: u64,
}

impl PulseStep {
    /// A step with every line at 0 V and nothing selected.
    pub fn idle(rows: usize, cols: usize, width: f64, phase: Phase, op_id: u64) -> Self {
        Self {
            row_v: vec![Drive::Volts(0.0); rows],
            col_v: vec![Drive::Volts(0.0); cols],
            select: vec![false; rows * cols],
            loads: Vec::new(),
            width,
            phase,
            op_id,
        }
    }

    pub fn rows(&self) -> usize {
        self.row_v.len()
    }

    pub fn cols(&self) -> usize {
        self.col_v.len()
    }

    pub fn select_cell(&mut self, r: usize, c: usize) {
        let cols = self.cols();
        self.select[r * cols + c] = true;
    }

    pub fn is_selected(&self, r: usize, c: usize) -> bool {
        self.select[r * self.cols() + c]
    }

    /// Selected cells in row-major order.
    pub fn selected(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols();
        self.select
            .iter()
            .enumerate()
            .filter(|(_, s)| **s)
            .map(move |(i, _)| (i / cols, i % cols))
    }

    fn validate(&self, rows: usize, cols: usize) -> Result<(), XbarError> {
        if self.row_v.len() != rows || self.col_v.len() != cols {
            return Err(XbarError::DimensionMismatch(format!(
                "step drives {}×{} lines, crossbar is {rows}×{cols}",
                self.row_v.len(),
                self.col_v.len()
            )));
        }
        if self.select.len() != rows * cols {
            return Err(XbarError::DimensionMismatch(format!(
                "select mask has {} entries, expected {}",
                self.select.len(),
                rows * cols
            )));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(XbarError::InvalidProgram(format!(
                "step width must be finite and > 0, got {}",
                self.width
            )));
        }
        let finite = |d: &Drive| match d {
            Drive::Volts(v) => v.is_finite(),
            Drive::Float(_) => true,
        };
        if !self.row_v.iter().chain(&self.col_v).all(finite) {
            return Err(XbarError::InvalidProgram("non-finite line voltage".into()));
        }
        for l in &self.loads {
            if !(l.ohms.is_finite() && l.ohms > 0.0 && l.volts.is_finite()) {
                return Err(XbarError::InvalidProgram(format!(
                    "bus load needs finite ohms > 0 and finite volts, got {l:?}"
                )));
            }
        }
        Ok(())
    }
}

/// An ordered list of steps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseProgram {
    pub steps: Vec<PulseStep>,
}

impl PulseProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: PulseStep) {
        self.steps.push(step);
    }

    pub fn extend(&mut self, other: PulseProgram) {
        self.steps.extend(other.steps);
    }

    pub fn duration(&self) -> f64 {
        self.steps.iter().map(|s| s.width).sum()
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<(), XbarError> {
        self.steps.iter().try_for_each(|s| s.validate(rows, cols))
    }
}
