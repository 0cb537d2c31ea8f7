//! Versioned plain-text crossbar snapshots.
//!
//! ```text
//! rramkit-crossbar 1
//! rows 2
//! cols 2
//! seed 7
//! c2c true
//! next_op 0
//! rng_seed <64 hex digits>
//! rng_word_pos 0
//! nominal r_on=10000 r_off=1000000 ...
//! config r_selector_on=1000 dt=0.000000001 ...
//! templates nor_voltage=1.95 ...
//! cell 0 0 r_on=... x=0 cycles=0
//! ...
//! ```
//!
//! One `cell` line per device, row-major. Floats use the shortest decimal
//! form that parses back to the same bits, so a reload is bit-exact,
//! including the position of the cycle-to-cycle random stream.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::SeedableRng;

use super::{Crossbar, ExecutionTrace, GateTemplates, XbarConfig, XbarError};
use crate::device::{DeviceParams, DeviceState};
use crate::seed::Stream;

const MAGIC: &str = "rramkit-crossbar";
const VERSION: u32 = 1;

macro_rules! kv_fields {
    ($ty:ty, $($f:ident),+) => {
        impl KeyValues for $ty {
            fn write_kv(&self, out: &mut String) {
                $( let _ = write!(out, " {}={}", stringify!($f), self.$f); )+
            }
            fn read_kv(map: &HashMap<&str, &str>, line: usize) -> Result<Self, XbarError> {
                Ok(Self { $( $f: field(map, stringify!($f), line)?, )+ })
            }
        }
    };
}

trait KeyValues: Sized {
    fn write_kv(&self, out: &mut String);
    fn read_kv(map: &HashMap<&str, &str>, line: usize) -> Result<Self, XbarError>;
}

kv_fields!(
    DeviceParams,
    r_on,
    r_off,
    v_set_th,
    v_reset_th,
    k_set,
    k_reset,
    alpha_set,
    alpha_reset,
    c2c_sigma_th,
    c2c_sigma_rate
);
kv_fields!(
    XbarConfig,
    r_selector_on,
    dt,
    read_voltage,
    read_width,
    set_voltage,
    set_width,
    reset_voltage,
    reset_width
);
kv_fields!(
    GateTemplates,
    nor_voltage,
    nor_width,
    nor_load_ohms,
    copy_voltage,
    copy_width
);

fn perr(line: usize, msg: impl Into<String>) -> XbarError {
    XbarError::Parse { line, msg: msg.into() }
}

fn field<T: std::str::FromStr>(map: &HashMap<&str, &str>, key: &str, line: usize) -> Result<T, XbarError> {
    let raw = map.get(key).ok_or_else(|| perr(line, format!("missing `{key}`")))?;
    raw.parse()
        .map_err(|_| perr(line, format!("bad value `{raw}` for `{key}`")))
}

fn pairs<'a>(words: impl Iterator<Item = &'a str>, line: usize) -> Result<HashMap<&'a str, &'a str>, XbarError> {
    words
        .map(|w| {
            w.split_once('=')
                .ok_or_else(|| perr(line, format!("expected key=value, got `{w}`")))
        })
        .collect()
}

impl Crossbar {
    /// Serialize the full instance (parameters, states, RNG position).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {VERSION}");
        let _ = writeln!(out, "rows {}", self.rows);
        let _ = writeln!(out, "cols {}", self.cols);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "c2c {}", self.c2c);
        let _ = writeln!(out, "next_op {}", self.next_op);
        let hex: String = self.rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        let _ = writeln!(out, "rng_seed {hex}");
        let _ = writeln!(out, "rng_word_pos {}", self.rng.get_word_pos());
        out.push_str("nominal");
        self.nominal.write_kv(&mut out);
        out.push_str("\nconfig");
        self.cfg.write_kv(&mut out);
        out.push_str("\ntemplates");
        self.templates.write_kv(&mut out);
        out.push('\n');
        for (i, (p, s)) in self.params.iter().zip(&self.states).enumerate() {
            let _ = write!(out, "cell {} {}", i / self.cols, i % self.cols);
            p.write_kv(&mut out);
            let _ = writeln!(out, " x={} cycles={}", s.x, s.cycle_count);
        }
        out
    }

    /// Inverse of [`Crossbar::to_text`]. The reloaded instance starts with an
    /// empty trace and recording on.
    pub fn from_text(text: &str) -> Result<Self, XbarError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |key: &str| -> Result<(usize, String), XbarError> {
            let (n, l) = lines
                .next()
                .ok_or_else(|| perr(0, format!("unexpected end of input, wanted `{key}`")))?;
            let rest = l
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix(' ').or(if r.is_empty() { Some(r) } else { None }))
                .ok_or_else(|| perr(n, format!("expected `{key}`")))?;
            Ok((n, rest.to_string()))
        };
        let (n, v) = next(MAGIC)?;
        if v != VERSION.to_string() {
            return Err(perr(n, format!("unsupported version `{v}`")));
        }
        let parse = |(n, v): (usize, String), what: &str| -> Result<u128, XbarError> {
            v.parse().map_err(|_| perr(n, format!("bad {what} `{v}`")))
        };
        let rows = parse(next("rows")?, "rows")? as usize;
        let cols = parse(next("cols")?, "cols")? as usize;
        let seed = parse(next("seed")?, "seed")? as u64;
        let (n, c2c) = next("c2c")?;
        let c2c = c2c.parse().map_err(|_| perr(n, "bad c2c flag"))?;
        let next_op = parse(next("next_op")?, "next_op")? as u64;
        let (n, hex) = next("rng_seed")?;
        if hex.len() != 64 {
            return Err(perr(n, "rng_seed must be 64 hex digits"));
        }
        let mut key = [0u8; 32];
        for (k, b) in key.iter_mut().enumerate() {
            *b = u8::from_str_radix(&hex[2 * k..2 * k + 2], 16).map_err(|_| perr(n, "bad rng_seed"))?;
        }
        let word_pos = parse(next("rng_word_pos")?, "rng_word_pos")?;
        let (n, v) = next("nominal")?;
        let nominal = DeviceParams::read_kv(&pairs(v.split_whitespace(), n)?, n)?;
        let (n, v) = next("config")?;
        let cfg = XbarConfig::read_kv(&pairs(v.split_whitespace(), n)?, n)?;
        let (n, v) = next("templates")?;
        let templates = GateTemplates::read_kv(&pairs(v.split_whitespace(), n)?, n)?;
        super::check_dims(rows, cols)?;
        nominal.validate()?;
        cfg.validate()?;
        templates.validate()?;

        let mut params = Vec::with_capacity(rows * cols);
        let mut states = Vec::with_capacity(rows * cols);
        for i in 0..rows * cols {
            let (n, v) = next("cell")?;
            let mut words = v.split_whitespace();
            let r: usize = words
                .next()
                .and_then(|w| w.parse().ok())
                .ok_or_else(|| perr(n, "bad row"))?;
            let c: usize = words
                .next()
                .and_then(|w| w.parse().ok())
                .ok_or_else(|| perr(n, "bad col"))?;
            if (r, c) != (i / cols, i % cols) {
                return Err(perr(n, format!("cell ({r}, {c}) out of row-major order")));
            }
            let map = pairs(words, n)?;
            let p = DeviceParams::read_kv(&map, n)?;
            p.validate()?;
            let x: f64 = field(&map, "x", n)?;
            if !(0.0..=1.0).contains(&x) {
                return Err(perr(n, "x outside [0, 1]"));
            }
            params.push(p);
            states.push(DeviceState {
                x,
                cycle_count: field(&map, "cycles", n)?,
            });
        }
        if let Some((n, l)) = lines.find(|(_, l)| !l.is_empty()) {
            return Err(perr(n, format!("trailing content `{l}`")));
        }
        let mut rng = Stream::from_seed(key);
        rng.set_word_pos(word_pos);
        Ok(Self {
            rows,
            cols,
            nominal,
            params,
            states,
            cfg,
            templates,
            seed,
            c2c,
            rng,
            next_op,
            record: true,
            trace: ExecutionTrace::new(rows, cols),
        })
    }
}
