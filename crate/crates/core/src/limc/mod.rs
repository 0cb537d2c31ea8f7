//! Logic-in-memory compiler: BLIF subset in, placed pulse schedule and SPICE
//! netlist out.

mod bench;
mod blif;
mod schedule;
mod spice;
mod techmap;

pub use bench::{full_adder_blif, ripple_carry_blif};
pub use blif::{input_vector, logical_sim, parse_netlist, LogicNetlist, Node};
pub use schedule::{
    execute_schedule, schedule, schedule_with, Cell, LimSchedule, Placed, Role, ScheduledGate, GATE_OP_BASE,
    OP_INIT_RESET, OP_INIT_SET, OP_LOAD_RESET, OP_LOAD_SET,
};
pub use spice::{emit_spice, parse_spice, SpiceSummary};
pub use techmap::{tech_map, tech_map_with, Gate, GateGraph, GateKind, Signal, Source, TechMapConfig, MAX_NODE_INPUTS};

use crate::xbar::XbarError;

#[derive(Debug, thiserror::Error)]
pub enum LimError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("combinational cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("signal `{name}` is driven twice (line {line})")]
    DuplicateDriver { name: String, line: usize },
    #[error("signal `{name}` is used but never defined")]
    Undefined { name: String },
    #[error("node `{node}` has {width} inputs; at most 16 are supported")]
    UnsupportedWidth { node: String, width: usize },
    #[error("signal `{signal}` has fanout {fanout}; at most {max} is reachable with copies")]
    Fanout { signal: String, fanout: usize, max: usize },
    #[error("schedule needs {required} cells but the crossbar has {available}")]
    Capacity { required: usize, available: usize },
    #[error("expected {expected} input bits, got {got}")]
    InputCount { expected: usize, got: usize },
    #[error("placement: {0}")]
    Placement(String),
    #[error("invalid {field}: {reason}")]
    Config { field: &'static str, reason: String },
    #[error(transparent)]
    Xbar(#[from] XbarError),
}
