//! Generic SPICE emission of a schedule and a parser for the subset we emit.
//!
//! Each placed cell becomes an `Xr{r}c{c}` instance of a behavioral 1T1R
//! subcircuit (voltage-controlled switch for the selector, state-dependent
//! resistor for the device). Every row/column line hosting a placed cell
//! gets a PWL source with two breakpoints per step; lines that float in
//! some step are connected through switches to their driver and to the
//! shared bus, each switch with its own PWL enable. Selector gates get one
//! PWL source per cell.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{LimError, LimSchedule};
use crate::device::DeviceParams;
use crate::xbar::{Drive, PulseProgram};

/// Offset between the end of one step and the first breakpoint of the next.
const EDGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Line {
    Row(usize),
    Col(usize),
}

impl Line {
    fn node(self) -> String {
        match self {
            Line::Row(r) => format!("row{r}"),
            Line::Col(c) => format!("col{c}"),
        }
    }
}

fn pwl(points: &[(f64, f64)]) -> String {
    let body: Vec<String> = points.iter().map(|(t, v)| format!("{t:e} {v}")).collect();
    format!("PWL({})", body.join(" "))
}

/// Two breakpoints per step holding `value(step)` across it.
fn breakpoints(prog: &PulseProgram, edge: f64, value: impl Fn(usize) -> f64) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(2 * prog.steps.len());
    let mut t = 0.0;
    for (k, s) in prog.steps.iter().enumerate() {
        let v = value(k);
        pts.push((if k == 0 { 0.0 } else { t + edge }, v));
        t += s.width;
        pts.push((t, v));
    }
    pts
}

/// Emit the netlist for one input vector.
pub fn emit_spice(sched: &LimSchedule, bits: &[bool], params: &DeviceParams) -> Result<String, LimError> {
    let prog = sched.program(bits)?;
    let mut out = String::new();
    let _ = writeln!(out, "* rramkit {} logic-in-memory netlist", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        out,
        "* crossbar {}x{}, {} placed cells, {} steps",
        sched.rows,
        sched.cols,
        sched.placement.len(),
        prog.steps.len()
    );
    if prog.steps.is_empty() {
        out.push_str(".end\n");
        return Ok(out);
    }
    let edge = prog.steps.iter().map(|s| s.width / 1000.0).fold(EDGE, f64::min);
    let duration = prog.duration();

    let _ = writeln!(
        out,
        ".param r_on={} r_off={} r_sel={}",
        params.r_on, params.r_off, sched.xbar.r_selector_on
    );
    out.push_str(".model selsw sw(vt=0.5 vh=0 ron={r_sel} roff=1e12)\n");
    out.push_str(".model linesw sw(vt=0.5 vh=0 ron=1e-3 roff=1e12)\n");
    out.push_str(".subckt rram1t1r top bot gate x0=0\n");
    out.push_str("S1 top mid gate 0 selsw\n");
    out.push_str("R1 mid bot R={1/(x0/r_on+(1-x0)/r_off)}\n");
    out.push_str(".ends rram1t1r\n");

    let mut cells: Vec<(usize, usize)> = sched.placement.iter().map(|p| p.cell).collect();
    cells.sort_unstable();
    for &(r, c) in &cells {
        let _ = writeln!(out, "Xr{r}c{c} row{r} col{c} gate{r}c{c} rram1t1r x0=0");
    }

    out.push_str("* selector gates\n");
    for &(r, c) in &cells {
        let pts = breakpoints(&prog, edge, |k| if prog.steps[k].is_selected(r, c) { 1.0 } else { 0.0 });
        let _ = writeln!(out, "Vg_r{r}c{c} gate{r}c{c} 0 {}", pwl(&pts));
    }

    out.push_str("* line drivers\n");
    let mut lines: Vec<Line> = cells.iter().flat_map(|&(r, c)| [Line::Row(r), Line::Col(c)]).collect();
    lines.sort_unstable();
    lines.dedup();
    let drive = |line: Line, k: usize| -> Drive {
        match line {
            Line::Row(r) => prog.steps[k].row_v[r],
            Line::Col(c) => prog.steps[k].col_v[c],
        }
    };
    for &line in &lines {
        let node = line.node();
        let volts = breakpoints(&prog, edge, |k| drive(line, k).volts().unwrap_or(0.0));
        let floats: Vec<Option<u8>> = (0..prog.steps.len())
            .map(|k| match drive(line, k) {
                Drive::Float(b) => Some(b),
                Drive::Volts(_) => None,
            })
            .collect();
        if floats.iter().all(Option::is_none) {
            let _ = writeln!(out, "V{node} {node} 0 {}", pwl(&volts));
            continue;
        }
        let _ = writeln!(out, "V{node} {node}_drv 0 {}", pwl(&volts));
        let _ = writeln!(out, "Sd_{node} {node} {node}_drv en_{node} 0 linesw");
        let en = breakpoints(&prog, edge, |k| if floats[k].is_none() { 1.0 } else { 0.0 });
        let _ = writeln!(out, "Ven_{node} en_{node} 0 {}", pwl(&en));
        let buses: std::collections::BTreeSet<u8> = floats.iter().flatten().copied().collect();
        for b in buses {
            let _ = writeln!(out, "St{b}_{node} {node} bus{b} tie{b}_{node} 0 linesw");
            let tie = breakpoints(&prog, edge, |k| if floats[k] == Some(b) { 1.0 } else { 0.0 });
            let _ = writeln!(out, "Vtie{b}_{node} tie{b}_{node} 0 {}", pwl(&tie));
        }
    }

    let mut loads: BTreeMap<(u8, u64, u64), usize> = BTreeMap::new();
    for s in &prog.steps {
        for l in &s.loads {
            let n = loads.len();
            loads.entry((l.bus, l.ohms.to_bits(), l.volts.to_bits())).or_insert(n);
        }
    }
    if !loads.is_empty() {
        out.push_str("* bus loads\n");
    }
    for (&(bus, ohms, volts), &k) in &loads {
        let (ohms, volts) = (f64::from_bits(ohms), f64::from_bits(volts));
        let _ = writeln!(out, "Rload{k} bus{bus} load{k}n {ohms}");
        let _ = writeln!(out, "Sload{k} load{k}n load{k}s en_load{k} 0 linesw");
        let _ = writeln!(out, "Vload{k} load{k}s 0 DC {volts}");
        let en = breakpoints(&prog, edge, |i| {
            let on = prog.steps[i]
                .loads
                .iter()
                .any(|l| (l.bus, l.ohms, l.volts) == (bus, ohms, volts));
            if on {
                1.0
            } else {
                0.0
            }
        });
        let _ = writeln!(out, "Ven_load{k} en_load{k} 0 {}", pwl(&en));
    }

    let tstep = sched.xbar.dt;
    let _ = writeln!(out, ".tran {tstep} {duration}");
    out.push_str(".end\n");
    Ok(out)
}

/// What [`parse_spice`] recovers from an emitted netlist.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpiceSummary {
    /// Subcircuit instances (`X...` lines).
    pub cells: usize,
    /// `.tran` stop time, seconds; 0 without a `.tran` card.
    pub duration: f64,
    /// Every PWL source by name with its `(t, v)` breakpoints.
    pub pwl: Vec<(String, Vec<(f64, f64)>)>,
}

/// Parse the subset of SPICE that [`emit_spice`] produces.
pub fn parse_spice(text: &str) -> Result<SpiceSummary, LimError> {
    let mut sum = SpiceSummary::default();
    let mut in_subckt = false;
    let mut ended = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let n = i + 1;
        let err = |msg: String| LimError::Syntax { line: n, msg };
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        if ended {
            return Err(err("content after .end".into()));
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with(".subckt") {
            in_subckt = true;
        } else if lower.starts_with(".ends") {
            in_subckt = false;
        } else if lower == ".end" {
            ended = true;
        } else if lower.starts_with(".tran") {
            let stop = line
                .split_whitespace()
                .nth(2)
                .ok_or_else(|| err(".tran needs a stop time".into()))?;
            sum.duration = stop.parse().map_err(|_| err(format!("bad .tran stop time `{stop}`")))?;
        } else if !in_subckt && (lower.starts_with('x')) {
            sum.cells += 1;
        } else if !in_subckt && lower.starts_with('v') {
            if let Some(open) = line.find("PWL(") {
                let close = line.rfind(')').ok_or_else(|| err("unterminated PWL".into()))?;
                let nums: Vec<f64> = line[open + 4..close]
                    .split_whitespace()
                    .map(|w| w.parse::<f64>().map_err(|_| err(format!("bad PWL number `{w}`"))))
                    .collect::<Result<_, _>>()?;
                if !nums.len().is_multiple_of(2) {
                    return Err(err("PWL needs (t, v) pairs".into()));
                }
                let name = line.split_whitespace().next().unwrap_or_default().to_string();
                sum.pwl.push((name, nums.chunks(2).map(|p| (p[0], p[1])).collect()));
            }
        }
    }
    if !ended {
        return Err(LimError::Syntax {
            line: text.lines().count(),
            msg: "missing .end".into(),
        });
    }
    Ok(sum)
}
