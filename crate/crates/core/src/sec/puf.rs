//! Variation-based PUF on a formed crossbar.
//!
//! Every cell outside the last row is formed (full SET) at construction;
//! device-to-device spread of the formed resistance is the entropy. The
//! last cell of the last row is the chip's TRNG cell, whose debiased bits
//! become the pairing seed.
//!
//! Challenge expansion: the challenge is folded into a 64-bit key,
//! `key = mix(... mix(mix(pairing_seed ^ len) ^ w0) ^ w1 ...)` over its
//! 64-bit little-endian words, where `mix` is the SplitMix64 finalizer. A
//! SplitMix64 sequence started at `key` drives a Fisher–Yates shuffle of
//! the PUF cells; consecutive entries of the shuffled list form the
//! `response_len` disjoint pairs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::trng::{trng_fill, TrngConfig};
use super::SecError;
use crate::device::{DeviceParams, VariationSpec};
use crate::seed::mix64;
use crate::xbar::Crossbar;

type Cell = (usize, usize);

pub type Challenge = Vec<bool>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PufConfig {
    pub rows: usize,
    pub cols: usize,
    pub challenge_len: usize,
    pub response_len: usize,
    /// Relative resistance difference under which a pair counts as a tie.
    pub tie_margin: f64,
    /// Largest tie fraction a PUF-grade chip may show.
    pub max_tie_fraction: f64,
    /// TRNG used for the pairing seed; its cell is moved to the last cell.
    pub trng: TrngConfig,
}

impl Default for PufConfig {
    fn default() -> Self {
        Self {
            rows: 16,
            cols: 32,
            challenge_len: 64,
            response_len: 128,
            tie_margin: 1e-3,
            max_tie_fraction: 0.05,
            trng: TrngConfig::default(),
        }
    }
}

impl PufConfig {
    /// Cells available for pairs.
    pub fn puf_cells(&self) -> usize {
        self.rows.saturating_sub(1) * self.cols
    }

    pub fn validate(&self) -> Result<(), SecError> {
        let bad = |field, reason: String| Err(SecError::Config { field, reason });
        if self.rows < 2 || self.cols == 0 {
            return bad("rows", "need at least 2 rows and 1 column".into());
        }
        if self.challenge_len == 0 {
            return bad("challenge_len", "must be >= 1".into());
        }
        if self.response_len == 0 || self.response_len > self.puf_cells() / 2 {
            return bad(
                "response_len",
                format!(
                    "must lie in 1..={} for a {}x{} chip",
                    self.puf_cells() / 2,
                    self.rows,
                    self.cols
                ),
            );
        }
        if !(self.tie_margin >= 0.0 && (0.0..=1.0).contains(&self.max_tie_fraction)) {
            return bad(
                "tie_margin",
                "tie_margin >= 0 and max_tie_fraction in [0, 1] required".into(),
            );
        }
        self.trng.validate()
    }
}

/// SplitMix64 sequence.
struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        let z = mix64(self.0);
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z
    }

    /// Uniform in `0..n` by multiply-shift.
    fn below(&mut self, n: usize) -> usize {
        ((self.next() as u128 * n as u128) >> 64) as usize
    }
}

fn challenge_key(pairing_seed: u64, challenge: &[bool]) -> u64 {
    let mut key = mix64(pairing_seed ^ challenge.len() as u64);
    for chunk in challenge.chunks(64) {
        let w = chunk.iter().enumerate().fold(0u64, |w, (i, &b)| w | ((b as u64) << i));
        key = mix64(key ^ w);
    }
    key
}

/// Challenge `k` of a fixed schedule: SplitMix64 words keyed by the
/// schedule id.
pub fn schedule_challenge(schedule_id: u64, k: u64, len: usize) -> Challenge {
    let mut g = SplitMix(mix64(schedule_id) ^ mix64(k.wrapping_add(0x5155_4c45)));
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let w = g.next();
        out.extend((0..64).map(|i| (w >> i) & 1 == 1).take(len - out.len()));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PufHealth {
    pub tie_fraction: f64,
    pub puf_grade: bool,
}

/// One chip.
#[derive(Debug, Clone)]
pub struct PufInstance {
    chip: Crossbar,
    cfg: PufConfig,
    pairing_seed: u64,
}

impl PufInstance {
    /// Build, form and seed a chip. `variation.c2c` is ignored: formation
    /// and reads run jitter-free, re-reads switch jitter on.
    pub fn new(
        chip_seed: u64,
        params: &DeviceParams,
        variation: &VariationSpec,
        cfg: &PufConfig,
    ) -> Result<Self, SecError> {
        let mut inst = Self::unseeded(chip_seed, params, variation, cfg)?;
        let mut tcfg = inst.cfg.trng;
        tcfg.debias = true;
        let bits = trng_fill(&mut inst.chip, 64, &tcfg)?.bits;
        inst.pairing_seed = bits.iter().enumerate().fold(0u64, |s, (i, &b)| s | ((b as u64) << i));
        Ok(inst)
    }

    /// Build with an explicit pairing seed instead of TRNG entropy.
    pub fn with_pairing_seed(
        chip_seed: u64,
        params: &DeviceParams,
        variation: &VariationSpec,
        cfg: &PufConfig,
        pairing_seed: u64,
    ) -> Result<Self, SecError> {
        let mut inst = Self::unseeded(chip_seed, params, variation, cfg)?;
        inst.pairing_seed = pairing_seed;
        Ok(inst)
    }

    fn unseeded(
        chip_seed: u64,
        params: &DeviceParams,
        variation: &VariationSpec,
        cfg: &PufConfig,
    ) -> Result<Self, SecError> {
        cfg.validate()?;
        let mut cfg = *cfg;
        cfg.trng.cell = (cfg.rows - 1, cfg.cols - 1);
        let spec = VariationSpec {
            c2c: false,
            ..*variation
        };
        let mut chip = Crossbar::new(cfg.rows, cfg.cols, *params, spec, chip_seed)?;
        chip.set_recording(false);
        let mut inst = Self {
            chip,
            cfg,
            pairing_seed: 0,
        };
        inst.form()?;
        Ok(inst)
    }

    fn cell(&self, i: usize) -> (usize, usize) {
        (i / self.cfg.cols, i % self.cfg.cols)
    }

    fn form(&mut self) -> Result<(), SecError> {
        for i in 0..self.cfg.puf_cells() {
            let (r, c) = self.cell(i);
            self.chip.write_bit(r, c, true)?;
        }
        Ok(())
    }

    pub fn config(&self) -> &PufConfig {
        &self.cfg
    }

    pub fn pairing_seed(&self) -> u64 {
        self.pairing_seed
    }

    pub fn chip(&self) -> &Crossbar {
        &self.chip
    }

    pub fn chip_mut(&mut self) -> &mut Crossbar {
        &mut self.chip
    }

    /// Disjoint cell pairs selected by `challenge`.
    pub fn pairs(&self, challenge: &[bool]) -> Result<Vec<(Cell, Cell)>, SecError> {
        if challenge.len() != self.cfg.challenge_len {
            return Err(SecError::ChallengeLength {
                expected: self.cfg.challenge_len,
                got: challenge.len(),
            });
        }
        let mut g = SplitMix(challenge_key(self.pairing_seed, challenge));
        let mut idx: Vec<usize> = (0..self.cfg.puf_cells()).collect();
        let need = 2 * self.cfg.response_len;
        // Partial Fisher–Yates: only the first `need` slots are used.
        for i in 0..need {
            let j = i + g.below(idx.len() - i);
            idx.swap(i, j);
        }
        Ok(idx[..need]
            .chunks_exact(2)
            .map(|p| (self.cell(p[0]), self.cell(p[1])))
            .collect())
    }

    fn sensed_pairs(&mut self, challenge: &[bool]) -> Result<Vec<(f64, f64)>, SecError> {
        let pairs = self.pairs(challenge)?;
        let mut out = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            let ra = self.chip.sense(a.0, a.1)?;
            let rb = self.chip.sense(b.0, b.1)?;
            out.push((ra, rb));
        }
        Ok(out)
    }

    /// Bit `k` is 1 iff the first cell of pair `k` has the lower resistance.
    pub fn response(&mut self, challenge: &[bool]) -> Result<Vec<bool>, SecError> {
        Ok(self.sensed_pairs(challenge)?.into_iter().map(|(a, b)| a < b).collect())
    }

    /// Fraction of near-tied pairs for `challenge`.
    pub fn health(&mut self, challenge: &[bool]) -> Result<PufHealth, SecError> {
        let pairs = self.sensed_pairs(challenge)?;
        let ties = pairs
            .iter()
            .filter(|(a, b)| (a - b).abs() <= self.cfg.tie_margin * 0.5 * (a + b))
            .count();
        let tie_fraction = ties as f64 / pairs.len() as f64;
        Ok(PufHealth {
            tie_fraction,
            puf_grade: tie_fraction <= self.cfg.max_tie_fraction,
        })
    }

    /// RESET and re-SET every PUF cell with cycle-to-cycle jitter on.
    pub fn reform_with_c2c(&mut self) -> Result<(), SecError> {
        let prev = self.chip.c2c();
        self.chip.set_c2c(true);
        let out = (|| {
            for i in 0..self.cfg.puf_cells() {
                let (r, c) = self.cell(i);
                self.chip.write_bit(r, c, false)?;
                self.chip.write_bit(r, c, true)?;
            }
            Ok(())
        })();
        self.chip.set_c2c(prev);
        out
    }

    /// Responses to challenges `0..` of `schedule_id`, concatenated and cut
    /// to `n_bits`.
    pub fn keystream(&mut self, schedule_id: u64, n_bits: usize) -> Result<Vec<bool>, SecError> {
        let mut out = Vec::with_capacity(n_bits + self.cfg.response_len);
        let mut k = 0;
        while out.len() < n_bits {
            let ch = schedule_challenge(schedule_id, k, self.cfg.challenge_len);
            out.extend(self.response(&ch)?);
            k += 1;
        }
        out.truncate(n_bits);
        Ok(out)
    }
}

fn hd(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Percentage of ones.
pub fn uniformity(r: &[bool]) -> f64 {
    100.0 * r.iter().filter(|b| **b).count() as f64 / r.len() as f64
}

/// Mean pairwise Hamming distance between chips, percent.
pub fn uniqueness(responses: &[Vec<bool>]) -> Result<f64, SecError> {
    let k = responses.len();
    if k < 2 {
        return Err(SecError::TooFewChips(k));
    }
    let n = responses[0].len() as f64;
    let mut sum = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            sum += hd(&responses[i], &responses[j]) as f64 / n;
        }
    }
    Ok(100.0 * 2.0 * sum / (k * (k - 1)) as f64)
}

/// 100 minus the mean Hamming distance of re-reads to the reference, percent.
pub fn reliability(reference: &[bool], rereads: &[Vec<bool>]) -> f64 {
    let n = reference.len() as f64;
    let m = rereads.len() as f64;
    let mean: f64 = rereads.iter().map(|r| hd(reference, r) as f64 / n).sum::<f64>() / m;
    100.0 - 100.0 * mean
}

/// Percentage of chips answering 1, per bit position.
pub fn bit_aliasing(responses: &[Vec<bool>]) -> Vec<f64> {
    let k = responses.len() as f64;
    let n = responses.first().map_or(0, Vec::len);
    (0..n)
        .map(|b| 100.0 * responses.iter().filter(|r| r[b]).count() as f64 / k)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PufMetrics {
    /// Per chip, averaged over challenges.
    pub uniformity: Vec<f64>,
    /// Averaged over challenges.
    pub uniqueness: f64,
    /// Per chip, averaged over challenges.
    pub reliability: Vec<f64>,
    /// Per bit position, averaged over challenges.
    pub bit_aliasing: Vec<f64>,
}

impl PufMetrics {
    pub fn mean_uniformity(&self) -> f64 {
        mean(&self.uniformity)
    }

    pub fn mean_reliability(&self) -> f64 {
        mean(&self.reliability)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Population metrics. Reference responses are read first; then each of the
/// `m` re-reads re-forms every chip with jitter and answers all challenges.
pub fn puf_metrics(chips: &mut [PufInstance], challenges: &[Challenge], m: usize) -> Result<PufMetrics, SecError> {
    if chips.len() < 2 {
        return Err(SecError::TooFewChips(chips.len()));
    }
    if challenges.is_empty() || m < 2 {
        return Err(SecError::Config {
            field: "challenges",
            reason: "need at least one challenge and m >= 2 re-reads".into(),
        });
    }
    let nc = challenges.len() as f64;
    let n = chips[0].cfg.response_len;
    // reference[chip][challenge]
    let mut reference = Vec::with_capacity(chips.len());
    for chip in chips.iter_mut() {
        let r: Vec<Vec<bool>> = challenges.iter().map(|c| chip.response(c)).collect::<Result<_, _>>()?;
        reference.push(r);
    }
    let uniformity = reference
        .iter()
        .map(|rs| rs.iter().map(|r| uniformity(r)).sum::<f64>() / nc)
        .collect();
    let mut uniq = 0.0;
    let mut alias = vec![0.0; n];
    for k in 0..challenges.len() {
        let rs: Vec<Vec<bool>> = reference.iter().map(|r| r[k].clone()).collect();
        uniq += uniqueness(&rs)?;
        for (a, v) in alias.iter_mut().zip(bit_aliasing(&rs)) {
            *a += v / nc;
        }
    }
    let mut reliab = Vec::with_capacity(chips.len());
    for (chip, refs) in chips.iter_mut().zip(&reference) {
        let mut rereads: Vec<Vec<Vec<bool>>> = vec![Vec::with_capacity(m); challenges.len()];
        for _ in 0..m {
            chip.reform_with_c2c()?;
            for (k, c) in challenges.iter().enumerate() {
                rereads[k].push(chip.response(c)?);
            }
        }
        let rel = refs.iter().zip(&rereads).map(|(r, rr)| reliability(r, rr)).sum::<f64>() / nc;
        reliab.push(rel);
    }
    Ok(PufMetrics {
        uniformity,
        uniqueness: uniq / nc,
        reliability: reliab,
        bit_aliasing: alias,
    })
}

pub fn bits_to_hex(bits: &[bool]) -> String {
    let mut s = String::with_capacity(bits.len().div_ceil(4));
    for b in super::trng::pack_bits(bits) {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// CRP database rows: `chip_id,challenge,response` with hex bit strings.
pub fn crp_csv(rows: &[(usize, Challenge, Vec<bool>)]) -> String {
    let mut out = String::from("chip_id,challenge,response\n");
    for (id, c, r) in rows {
        let _ = writeln!(out, "{id},{},{}", bits_to_hex(c), bits_to_hex(r));
    }
    out
}
