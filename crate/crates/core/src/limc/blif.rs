//! Combinational BLIF subset: `.model`, `.inputs`, `.outputs`, `.names`,
//! `.end`. Comments start with `#`; a trailing `\` continues a line.

use std::collections::{HashMap, HashSet};

use super::LimError;

/// One `.names` block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub output: String,
    pub inputs: Vec<String>,
    /// Cover rows over the inputs; `None` is a don't-care.
    pub cubes: Vec<Vec<Option<bool>>>,
    /// `true` if the cover lists the ON-set, `false` for the OFF-set.
    pub on_set: bool,
    /// Source line of the `.names` directive.
    pub line: usize,
}

impl Node {
    pub fn eval(&self, values: &[bool]) -> bool {
        let hit = self.cubes.iter().any(|cube| {
            cube.iter()
                .zip(values)
                .all(|(lit, v)| lit.is_none_or(|want| want == *v))
        });
        hit == self.on_set
    }
}

/// A validated, acyclic netlist with nodes in topological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicNetlist {
    pub model: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub nodes: Vec<Node>,
}

fn syntax(line: usize, msg: impl Into<String>) -> LimError {
    LimError::Syntax { line, msg: msg.into() }
}

/// Join continuations and drop comments; yields `(first line number, text)`.
fn logical_lines(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim_end();
        let (body, cont) = match body.strip_suffix('\\') {
            Some(b) => (b, true),
            None => (body, false),
        };
        let entry = pending.get_or_insert_with(|| (i + 1, String::new()));
        entry.1.push(' ');
        entry.1.push_str(body);
        if !cont {
            let (n, s) = pending.take().unwrap();
            if !s.trim().is_empty() {
                out.push((n, s.trim().to_string()));
            }
        }
    }
    if let Some((n, s)) = pending {
        if !s.trim().is_empty() {
            out.push((n, s.trim().to_string()));
        }
    }
    out
}

fn parse_row(line: usize, words: &[&str], n_inputs: usize) -> Result<(Vec<Option<bool>>, bool), LimError> {
    let (plane, out) = match (n_inputs, words) {
        (0, [o]) => ("", *o),
        (_, [p, o]) if n_inputs > 0 => (*p, *o),
        _ => {
            return Err(syntax(
                line,
                format!("cover row must have {} field(s)", if n_inputs == 0 { 1 } else { 2 }),
            ))
        }
    };
    if plane.chars().count() != n_inputs {
        return Err(syntax(
            line,
            format!(
                "cover row `{plane}` has {} literals, expected {n_inputs}",
                plane.chars().count()
            ),
        ));
    }
    let cube = plane
        .chars()
        .map(|ch| match ch {
            '0' => Ok(Some(false)),
            '1' => Ok(Some(true)),
            '-' => Ok(None),
            _ => Err(syntax(line, format!("invalid literal `{ch}` in cover row"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let out = match out {
        "1" => true,
        "0" => false,
        _ => return Err(syntax(line, format!("output column must be 0 or 1, got `{out}`"))),
    };
    Ok((cube, out))
}

/// Parse and validate a netlist.
pub fn parse_netlist(text: &str) -> Result<LogicNetlist, LimError> {
    let mut model = String::new();
    let mut inputs: Vec<(String, usize)> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut current: Option<(Node, Option<bool>)> = None;
    let mut ended = false;

    let finish = |cur: Option<(Node, Option<bool>)>, nodes: &mut Vec<Node>| {
        if let Some((mut n, pol)) = cur {
            // An empty cover is constant 0.
            n.on_set = pol.unwrap_or(true);
            nodes.push(n);
        }
    };

    for (line, text) in logical_lines(text) {
        if ended {
            return Err(syntax(line, "content after .end"));
        }
        let words: Vec<&str> = text.split_whitespace().collect();
        let head = words[0];
        if head.starts_with('.') {
            finish(current.take(), &mut nodes);
            match head {
                ".model" => model = words[1..].join(" "),
                ".inputs" => inputs.extend(words[1..].iter().map(|w| (w.to_string(), line))),
                ".outputs" => outputs.extend(words[1..].iter().map(|w| w.to_string())),
                ".names" => {
                    let Some((out, ins)) = words[1..].split_last() else {
                        return Err(syntax(line, ".names needs at least an output name"));
                    };
                    current = Some((
                        Node {
                            output: out.to_string(),
                            inputs: ins.iter().map(|s| s.to_string()).collect(),
                            cubes: Vec::new(),
                            on_set: true,
                            line,
                        },
                        None,
                    ));
                }
                ".end" => ended = true,
                other => return Err(syntax(line, format!("unsupported directive `{other}`"))),
            }
            continue;
        }
        let Some((node, pol)) = current.as_mut() else {
            return Err(syntax(line, format!("cover row `{text}` outside a .names block")));
        };
        let (cube, out) = parse_row(line, &words, node.inputs.len())?;
        if pol.is_some_and(|p| p != out) {
            return Err(syntax(line, "cover mixes ON-set and OFF-set rows"));
        }
        *pol = Some(out);
        node.cubes.push(cube);
    }
    finish(current.take(), &mut nodes);
    build(model, inputs, outputs, nodes)
}

fn build(
    model: String,
    inputs: Vec<(String, usize)>,
    outputs: Vec<String>,
    nodes: Vec<Node>,
) -> Result<LogicNetlist, LimError> {
    let mut driver: HashMap<&str, Option<usize>> = HashMap::new();
    for (name, line) in &inputs {
        if driver.insert(name, None).is_some() {
            return Err(LimError::DuplicateDriver {
                name: name.clone(),
                line: *line,
            });
        }
    }
    for (k, n) in nodes.iter().enumerate() {
        if driver.insert(&n.output, Some(k)).is_some() {
            return Err(LimError::DuplicateDriver {
                name: n.output.clone(),
                line: n.line,
            });
        }
    }
    for n in &nodes {
        if let Some(u) = n.inputs.iter().find(|i| !driver.contains_key(i.as_str())) {
            return Err(LimError::Undefined { name: u.clone() });
        }
        let mut seen = HashSet::new();
        if let Some(d) = n.inputs.iter().find(|i| !seen.insert(i.as_str())) {
            return Err(syntax(n.line, format!("input `{d}` listed twice")));
        }
    }
    if let Some(u) = outputs.iter().find(|o| !driver.contains_key(o.as_str())) {
        return Err(LimError::Undefined { name: u.clone() });
    }

    // Depth-first topological sort; a grey node seen again closes a cycle.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark = vec![Mark::White; nodes.len()];
    let mut order = Vec::with_capacity(nodes.len());
    for root in 0..nodes.len() {
        if mark[root] != Mark::White {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Grey;
        while let Some(&mut (k, ref mut next)) = stack.last_mut() {
            if let Some(name) = nodes[k].inputs.get(*next) {
                *next += 1;
                if let Some(Some(dep)) = driver.get(name.as_str()).copied() {
                    match mark[dep] {
                        Mark::White => {
                            mark[dep] = Mark::Grey;
                            stack.push((dep, 0));
                        }
                        Mark::Grey => {
                            let from = stack.iter().position(|(s, _)| *s == dep).unwrap();
                            let mut cycle: Vec<String> =
                                stack[from..].iter().map(|(s, _)| nodes[*s].output.clone()).collect();
                            cycle.push(nodes[dep].output.clone());
                            return Err(LimError::Cycle(cycle));
                        }
                        Mark::Black => {}
                    }
                }
            } else {
                mark[k] = Mark::Black;
                order.push(k);
                stack.pop();
            }
        }
    }
    let mut slots: Vec<Option<Node>> = nodes.into_iter().map(Some).collect();
    let nodes = order.into_iter().map(|k| slots[k].take().unwrap()).collect();
    Ok(LogicNetlist {
        model,
        inputs: inputs.into_iter().map(|(n, _)| n).collect(),
        outputs,
        nodes,
    })
}

/// Pure Boolean evaluation in topological order.
pub fn logical_sim(net: &LogicNetlist, inputs: &[bool]) -> Result<Vec<bool>, LimError> {
    if inputs.len() != net.inputs.len() {
        return Err(LimError::InputCount {
            expected: net.inputs.len(),
            got: inputs.len(),
        });
    }
    let mut val: HashMap<&str, bool> = net
        .inputs
        .iter()
        .map(String::as_str)
        .zip(inputs.iter().copied())
        .collect();
    let mut buf = Vec::new();
    for n in &net.nodes {
        buf.clear();
        buf.extend(n.inputs.iter().map(|i| val[i.as_str()]));
        let v = n.eval(&buf);
        val.insert(&n.output, v);
    }
    Ok(net.outputs.iter().map(|o| val[o.as_str()]).collect())
}

/// Little-endian bit expansion of `k` over `n` inputs.
pub fn input_vector(k: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| (k >> i) & 1 == 1).collect()
}
