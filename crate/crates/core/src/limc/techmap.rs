//! Technology mapping onto OR2 / NOT / COPY.
//!
//! Each node's cover becomes a sum of products. A product of literals is
//! `NOT(OR(¬l1, ¬l2, ...))`; the sum is a chain of OR2. OFF-set covers map
//! their complement and add a final NOT. Inverters are cached per signal and
//! double negation folds away.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{LimError, LogicNetlist};

/// Widest node the mapper accepts.
pub const MAX_NODE_INPUTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Or2,
    Not,
    Copy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<usize>,
    pub output: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Primary input with this position.
    Input(usize),
    Const(bool),
    /// Output of the gate with this index.
    Gate(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signal {
    pub name: String,
    pub source: Source,
}

/// Mapped graph; gates are in topological order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateGraph {
    pub signals: Vec<Signal>,
    /// Signal id of each primary input, in netlist order.
    pub inputs: Vec<usize>,
    /// Primary output name and the signal carrying it.
    pub outputs: Vec<(String, usize)>,
    pub gates: Vec<Gate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TechMapConfig {
    /// Gate inputs plus copies one stored signal may drive before COPY
    /// gates are inserted.
    pub max_fanout: usize,
}

impl Default for TechMapConfig {
    fn default() -> Self {
        Self { max_fanout: 8 }
    }
}

struct Builder {
    signals: Vec<Signal>,
    gates: Vec<Gate>,
    not_of: HashMap<usize, usize>,
    or_of: HashMap<(usize, usize), usize>,
    consts: [Option<usize>; 2],
}

impl Builder {
    fn add_gate(&mut self, kind: GateKind, inputs: Vec<usize>, name: String) -> usize {
        let out = self.signals.len();
        self.signals.push(Signal {
            name,
            source: Source::Gate(self.gates.len()),
        });
        self.gates.push(Gate {
            kind,
            inputs,
            output: out,
        });
        out
    }

    fn constant(&mut self, v: bool) -> usize {
        if let Some(s) = self.consts[v as usize] {
            return s;
        }
        let s = self.signals.len();
        self.signals.push(Signal {
            name: format!("$const{}", v as u8),
            source: Source::Const(v),
        });
        self.consts[v as usize] = Some(s);
        s
    }

    fn not(&mut self, s: usize) -> usize {
        if let Some(&n) = self.not_of.get(&s) {
            return n;
        }
        if let Source::Const(v) = self.signals[s].source {
            return self.constant(!v);
        }
        let name = format!("$n{}", self.signals.len());
        let n = self.add_gate(GateKind::Not, vec![s], name);
        self.not_of.insert(s, n);
        self.not_of.insert(n, s);
        n
    }

    fn or2(&mut self, a: usize, b: usize) -> usize {
        if a == b {
            return a;
        }
        for (x, y) in [(a, b), (b, a)] {
            match self.signals[x].source {
                Source::Const(true) => return x,
                Source::Const(false) => return y,
                _ => {}
            }
        }
        let key = (a.min(b), a.max(b));
        if let Some(&o) = self.or_of.get(&key) {
            return o;
        }
        let name = format!("$o{}", self.signals.len());
        let o = self.add_gate(GateKind::Or2, vec![key.0, key.1], name);
        self.or_of.insert(key, o);
        o
    }

    fn or_all(&mut self, terms: &[usize]) -> Option<usize> {
        let (&first, rest) = terms.split_first()?;
        Some(rest.iter().fold(first, |acc, &t| self.or2(acc, t)))
    }

    /// Sum of products of a cover over `ins`; `None` for an empty cover.
    fn sop(&mut self, ins: &[usize], cubes: &[Vec<Option<bool>>]) -> Option<usize> {
        let mut terms = Vec::with_capacity(cubes.len());
        for cube in cubes {
            let lits: Vec<(usize, bool)> = cube
                .iter()
                .zip(ins)
                .filter_map(|(l, &s)| l.map(|pos| (s, pos)))
                .collect();
            let term = match lits.as_slice() {
                // A cube with no literals covers everything.
                [] => return Some(self.constant(true)),
                [(s, true)] => *s,
                [(s, false)] => self.not(*s),
                _ => {
                    let negated: Vec<usize> = lits.iter().map(|&(s, pos)| if pos { self.not(s) } else { s }).collect();
                    let any = self.or_all(&negated).expect("two or more literals");
                    self.not(any)
                }
            };
            terms.push(term);
        }
        self.or_all(&terms)
    }
}

/// Map a netlist onto OR2/NOT/COPY with the default fanout limit.
pub fn tech_map(net: &LogicNetlist) -> Result<GateGraph, LimError> {
    tech_map_with(net, &TechMapConfig::default())
}

pub fn tech_map_with(net: &LogicNetlist, cfg: &TechMapConfig) -> Result<GateGraph, LimError> {
    if cfg.max_fanout < 2 {
        return Err(LimError::Config {
            field: "max_fanout",
            reason: "must be >= 2".into(),
        });
    }
    let mut b = Builder {
        signals: Vec::new(),
        gates: Vec::new(),
        not_of: HashMap::new(),
        or_of: HashMap::new(),
        consts: [None, None],
    };
    let mut by_name: HashMap<&str, usize> = HashMap::new();
    let mut inputs = Vec::with_capacity(net.inputs.len());
    for (k, name) in net.inputs.iter().enumerate() {
        let s = b.signals.len();
        b.signals.push(Signal {
            name: name.clone(),
            source: Source::Input(k),
        });
        by_name.insert(name, s);
        inputs.push(s);
    }
    for node in &net.nodes {
        if node.inputs.len() > MAX_NODE_INPUTS {
            return Err(LimError::UnsupportedWidth {
                node: node.output.clone(),
                width: node.inputs.len(),
            });
        }
        let ins: Vec<usize> = node.inputs.iter().map(|n| by_name[n.as_str()]).collect();
        let f = b.sop(&ins, &node.cubes);
        let s = match (f, node.on_set) {
            (Some(s), true) => s,
            (Some(s), false) => b.not(s),
            (None, on) => b.constant(!on),
        };
        // Give a freshly created gate output the node's name.
        if matches!(b.signals[s].source, Source::Gate(_)) && b.signals[s].name.starts_with('$') {
            b.signals[s].name = node.output.clone();
        }
        by_name.insert(&node.output, s);
    }
    let outputs = net.outputs.iter().map(|o| (o.clone(), by_name[o.as_str()])).collect();
    let graph = GateGraph {
        signals: b.signals,
        inputs,
        outputs,
        gates: b.gates,
    };
    insert_copies(graph, cfg.max_fanout)
}

/// Give every stored signal at most `f` readers (gate inputs and copies).
/// Copies are always taken from the original, so one signal can serve at
/// most `f²` gate inputs.
fn insert_copies(g: GateGraph, f: usize) -> Result<GateGraph, LimError> {
    let mut uses: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.signals.len()];
    for (gi, gate) in g.gates.iter().enumerate() {
        for (slot, &s) in gate.inputs.iter().enumerate() {
            uses[s].push((gi, slot));
        }
    }
    if let Some((s, u)) = uses.iter().enumerate().find(|(_, u)| u.len() > f * f) {
        return Err(LimError::Fanout {
            signal: g.signals[s].name.clone(),
            fanout: u.len(),
            max: f * f,
        });
    }
    if uses.iter().all(|u| u.len() <= f) {
        return Ok(g);
    }
    // Number of copies per signal: smallest k with f + k(f-1) >= uses.
    let copies: Vec<usize> = uses
        .iter()
        .map(|u| if u.len() <= f { 0 } else { (u.len() - f).div_ceil(f - 1) })
        .collect();

    let mut out = Rewire {
        signals: g.signals.clone(),
        gates: Vec::with_capacity(g.gates.len()),
        rewired: HashMap::new(),
    };
    for &s in &g.inputs {
        out.copies_of(s, copies[s], &uses[s], f);
    }
    for s in 0..g.signals.len() {
        if matches!(g.signals[s].source, Source::Const(_)) {
            out.copies_of(s, copies[s], &uses[s], f);
        }
    }
    for (gi, gate) in g.gates.iter().enumerate() {
        out.signals[gate.output].source = Source::Gate(out.gates.len());
        let inputs = gate
            .inputs
            .iter()
            .enumerate()
            .map(|(slot, &s)| out.rewired.get(&(gi, slot)).copied().unwrap_or(s))
            .collect();
        out.gates.push(Gate {
            kind: gate.kind,
            inputs,
            output: gate.output,
        });
        out.copies_of(gate.output, copies[gate.output], &uses[gate.output], f);
    }
    let Rewire { signals, gates, .. } = out;
    Ok(GateGraph {
        signals,
        inputs: g.inputs,
        outputs: g.outputs,
        gates,
    })
}

struct Rewire {
    signals: Vec<Signal>,
    gates: Vec<Gate>,
    /// New source signal per `(original gate, input slot)`.
    rewired: HashMap<(usize, usize), usize>,
}

impl Rewire {
    /// Emit `k` copies of `s` and hand each up to `f` of its later readers;
    /// the first `f - k` readers keep the original.
    fn copies_of(&mut self, s: usize, k: usize, uses: &[(usize, usize)], f: usize) {
        let mut next = f - k.min(f);
        for c in 0..k {
            let id = self.signals.len();
            self.signals.push(Signal {
                name: format!("{}$copy{}", self.signals[s].name, c + 1),
                source: Source::Gate(self.gates.len()),
            });
            self.gates.push(Gate {
                kind: GateKind::Copy,
                inputs: vec![s],
                output: id,
            });
            for &u in uses.iter().skip(next).take(f) {
                self.rewired.insert(u, id);
            }
            next += f;
        }
    }
}

impl GateGraph {
    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// Evaluate the graph directly; the mapping oracle.
    pub fn simulate(&self, inputs: &[bool]) -> Result<Vec<bool>, LimError> {
        if inputs.len() != self.inputs.len() {
            return Err(LimError::InputCount {
                expected: self.inputs.len(),
                got: inputs.len(),
            });
        }
        let mut v = vec![false; self.signals.len()];
        for (s, sig) in self.signals.iter().enumerate() {
            match sig.source {
                Source::Input(k) => v[s] = inputs[k],
                Source::Const(c) => v[s] = c,
                Source::Gate(_) => {}
            }
        }
        for g in &self.gates {
            v[g.output] = match g.kind {
                GateKind::Or2 => v[g.inputs[0]] || v[g.inputs[1]],
                GateKind::Not => !v[g.inputs[0]],
                GateKind::Copy => v[g.inputs[0]],
            };
        }
        Ok(self.outputs.iter().map(|(_, s)| v[*s]).collect())
    }

    /// Largest number of readers of any stored signal.
    pub fn max_fanout(&self) -> usize {
        let mut n = vec![0usize; self.signals.len()];
        for g in &self.gates {
            for &s in &g.inputs {
                n[s] += 1;
            }
        }
        n.into_iter().max().unwrap_or(0)
    }
}
