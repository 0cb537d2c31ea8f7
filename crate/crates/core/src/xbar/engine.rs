//! Transient execution of one pulse step.

use std::collections::BTreeMap;

use super::{Crossbar, Drive, ExecutionTrace, Phase, PulseStep};
use crate::device::{euler_step, step_plan, DeviceParams, EventParams};

#[derive(Clone, Copy)]
enum Term {
    Fixed(f64),
    Bus(usize),
}

struct Coupled {
    idx: usize,
    row: Term,
    col: Term,
    ev: EventParams,
    x: f64,
    moved: bool,
    energy: f64,
}

/// Device voltage and power for a selected cell at state `x` under a
/// terminal-to-terminal voltage `v_pair`.
#[inline]
fn operating_point(p: &DeviceParams, rs: f64, x: f64, v_pair: f64) -> (f64, f64) {
    let r = 1.0 / p.conductance(x);
    let i = v_pair / (r + rs);
    let vd = i * r;
    (vd, vd * i)
}

/// Sub-steps of a step: `n` full `dt` steps plus an optional tail.
fn substeps(width: f64, dt: f64) -> impl Iterator<Item = f64> {
    let (n, tail) = step_plan(width, dt);
    (0..n).map(move |_| dt).chain((tail > 0.0).then_some(tail))
}

impl Crossbar {
    pub(super) fn run_step(&mut self, step: &PulseStep, c2c: bool, tr: &mut ExecutionTrace) {
        let selected: Vec<usize> = step.selected().map(|(r, c)| r * self.cols + c).collect();
        if step.phase == Phase::Read {
            for &i in &selected {
                self.record_read(i, step.op_id, tr);
            }
        }
        let events: Vec<EventParams> = selected
            .iter()
            .map(|&i| EventParams::sample(&self.params[i], &mut self.rng, c2c))
            .collect();

        let mut bus_index: BTreeMap<u8, usize> = BTreeMap::new();
        let mut term = |d: Drive| match d {
            Drive::Volts(v) => Term::Fixed(v),
            Drive::Float(b) => {
                let n = bus_index.len();
                Term::Bus(*bus_index.entry(b).or_insert(n))
            }
        };
        let mut coupled = Vec::new();
        let mut fixed = Vec::new();
        for (&i, ev) in selected.iter().zip(&events) {
            let row = term(step.row_v[i / self.cols]);
            let col = term(step.col_v[i % self.cols]);
            match (row, col) {
                (Term::Fixed(a), Term::Fixed(b)) => fixed.push((i, a - b, *ev)),
                _ => coupled.push(Coupled {
                    idx: i,
                    row,
                    col,
                    ev: *ev,
                    x: self.states[i].x,
                    moved: false,
                    energy: 0.0,
                }),
            }
        }
        for (i, v_pair, ev) in fixed {
            self.run_fixed(i, v_pair, &ev, step.width, step.phase, step.op_id, tr);
        }
        if !coupled.is_empty() {
            let loads: Vec<(usize, f64, f64)> = step
                .loads
                .iter()
                .filter_map(|l| bus_index.get(&l.bus).map(|&b| (b, 1.0 / l.ohms, l.volts)))
                .collect();
            self.run_coupled(&mut coupled, bus_index.len(), &loads, step.width);
            for c in &coupled {
                let s = &mut self.states[c.idx];
                s.x = c.x;
                if c.moved {
                    s.cycle_count += 1;
                }
                tr.add_energy(c.idx, step.op_id, step.phase, c.energy);
            }
        }
        tr.duration += step.width;
        tr.steps += 1;
    }

    /// A cell whose two lines are both driven: independent of the rest.
    #[allow(clippy::too_many_arguments)]
    pub(super) fn run_fixed(
        &mut self,
        idx: usize,
        v_pair: f64,
        ev: &EventParams,
        width: f64,
        phase: Phase,
        op: u64,
        tr: &mut ExecutionTrace,
    ) {
        let p = self.params[idx];
        let rs = self.cfg.r_selector_on;
        let mut x = self.states[idx].x;
        let (mut vd, mut pw) = operating_point(&p, rs, x, v_pair);
        let mut energy = 0.0;
        let mut elapsed = 0.0;
        let mut moved = false;
        for h in substeps(width, self.cfg.dt) {
            let rate = ev.rate(x, vd);
            if rate == 0.0 {
                // Frozen from here on: constant power for the rest of the step.
                break;
            }
            moved = true;
            x = euler_step(x, rate, h);
            let (vd2, pw2) = operating_point(&p, rs, x, v_pair);
            energy += 0.5 * h * (pw + pw2);
            vd = vd2;
            pw = pw2;
            elapsed += h;
        }
        energy += pw * (width - elapsed).max(0.0);
        let s = &mut self.states[idx];
        s.x = x;
        if moved {
            s.cycle_count += 1;
        }
        tr.add_energy(idx, op, phase, energy);
    }

    /// Cells touching at least one floating bus, integrated together.
    fn run_coupled(&self, cells: &mut [Coupled], n_bus: usize, loads: &[(usize, f64, f64)], width: f64) {
        let rs = self.cfg.r_selector_on;
        let mut solver = Nodal::new(n_bus);
        let mut vd = vec![0.0; cells.len()];
        let mut pw = vec![0.0; cells.len()];
        let point = |cells: &[Coupled], solver: &mut Nodal, vd: &mut [f64], pw: &mut [f64]| {
            solver.solve(cells, &self.params, rs, loads);
            for (k, c) in cells.iter().enumerate() {
                let v_pair = solver.volts(c.row) - solver.volts(c.col);
                (vd[k], pw[k]) = operating_point(&self.params[c.idx], rs, c.x, v_pair);
            }
        };
        point(cells, &mut solver, &mut vd, &mut pw);
        let mut rates = vec![0.0; cells.len()];
        let mut elapsed = 0.0;
        for h in substeps(width, self.cfg.dt) {
            let mut any = false;
            for (k, c) in cells.iter().enumerate() {
                rates[k] = c.ev.rate(c.x, vd[k]);
                any |= rates[k] != 0.0;
            }
            if !any {
                break;
            }
            for (k, c) in cells.iter_mut().enumerate() {
                if rates[k] != 0.0 {
                    c.x = euler_step(c.x, rates[k], h);
                    c.moved = true;
                }
            }
            let before = pw.clone();
            point(cells, &mut solver, &mut vd, &mut pw);
            for (k, c) in cells.iter_mut().enumerate() {
                c.energy += 0.5 * h * (before[k] + pw[k]);
            }
            elapsed += h;
        }
        let rest = (width - elapsed).max(0.0);
        for (k, c) in cells.iter_mut().enumerate() {
            c.energy += pw[k] * rest;
        }
    }
}

/// Dense nodal solve for the floating bus voltages.
struct Nodal {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    v: Vec<f64>,
}

impl Nodal {
    fn new(n: usize) -> Self {
        Self {
            n,
            a: vec![0.0; n * n],
            b: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    #[inline]
    fn volts(&self, t: Term) -> f64 {
        match t {
            Term::Fixed(v) => v,
            Term::Bus(b) => self.v[b],
        }
    }

    fn solve(&mut self, cells: &[Coupled], params: &[DeviceParams], rs: f64, loads: &[(usize, f64, f64)]) {
        let n = self.n;
        self.a.iter_mut().for_each(|a| *a = 0.0);
        self.b.iter_mut().for_each(|b| *b = 0.0);
        for c in cells {
            let g = 1.0 / (1.0 / params[c.idx].conductance(c.x) + rs);
            match (c.row, c.col) {
                (Term::Bus(p), Term::Bus(q)) => {
                    if p != q {
                        self.a[p * n + p] += g;
                        self.a[q * n + q] += g;
                        self.a[p * n + q] -= g;
                        self.a[q * n + p] -= g;
                    }
                }
                (Term::Bus(p), Term::Fixed(v)) | (Term::Fixed(v), Term::Bus(p)) => {
                    self.a[p * n + p] += g;
                    self.b[p] += g * v;
                }
                (Term::Fixed(_), Term::Fixed(_)) => {}
            }
        }
        for &(p, g, v) in loads {
            self.a[p * n + p] += g;
            self.b[p] += g * v;
        }
        // A bus nothing connects to stays at 0 V.
        for p in 0..n {
            if self.a[p * n..(p + 1) * n].iter().all(|a| *a == 0.0) {
                self.a[p * n + p] = 1.0;
            }
        }
        if n == 1 {
            self.v[0] = self.b[0] / self.a[0];
            return;
        }
        gauss(&mut self.a, &mut self.b, n);
        self.v.copy_from_slice(&self.b);
    }
}

/// In-place Gaussian elimination with partial pivoting; solution left in `b`.
fn gauss(a: &mut [f64], b: &mut [f64], n: usize) {
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
            .unwrap_or(k);
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            b.swap(k, piv);
        }
        let d = a[k * n + k];
        if d == 0.0 {
            continue;
        }
        for i in k + 1..n {
            let f = a[i * n + k] / d;
            if f != 0.0 {
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a[k * n + j] * b[j];
        }
        let d = a[k * n + k];
        b[k] = if d == 0.0 { 0.0 } else { s / d };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_solves_small_system() {
        let mut a = vec![2.0, 1.0, -1.0, -3.0, -1.0, 2.0, -2.0, 1.0, 2.0];
        let mut b = vec![8.0, -11.0, -3.0];
        gauss(&mut a, &mut b, 3);
        for (got, want) in b.iter().zip([2.0, 3.0, -1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}
