//! PUF-keyed locking of 4-level NN weights and the demo network.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::puf::PufInstance;
use super::SecError;
use crate::seed;

/// Weight value of each 2-bit level.
pub const LEVEL_VALUES: [f64; 4] = [-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0];

fn check_levels(levels: &[u8]) -> Result<(), SecError> {
    match levels.iter().enumerate().find(|(_, l)| **l > 3) {
        Some((index, &value)) => Err(SecError::Level { index, value }),
        None => Ok(()),
    }
}

/// XOR each level with the next two key bits (first bit is the low bit).
pub fn lock_weights(levels: &[u8], key: &[bool]) -> Result<Vec<u8>, SecError> {
    check_levels(levels)?;
    let need = 2 * levels.len();
    if key.len() < need {
        return Err(SecError::KeystreamUnderflow { need, got: key.len() });
    }
    Ok(levels
        .iter()
        .zip(key.chunks_exact(2))
        .map(|(l, k)| l ^ (k[0] as u8 | (k[1] as u8) << 1))
        .collect())
}

/// Inverse of [`lock_weights`]; XOR masking is its own inverse.
pub fn unlock_weights(locked: &[u8], key: &[bool]) -> Result<Vec<u8>, SecError> {
    lock_weights(locked, key)
}

/// Reject keystreams that cannot mask anything useful: constant streams
/// and streams whose ones-fraction is outside [0.3, 0.7].
pub fn keystream_health(key: &[bool]) -> Result<(), SecError> {
    if key.is_empty() {
        return Err(SecError::WeakKeystream("empty keystream".into()));
    }
    let ones = key.iter().filter(|b| **b).count();
    if ones == 0 || ones == key.len() {
        return Err(SecError::WeakKeystream("keystream is constant".into()));
    }
    let frac = ones as f64 / key.len() as f64;
    if !(0.3..=0.7).contains(&frac) {
        return Err(SecError::WeakKeystream(format!("ones fraction {frac:.3}")));
    }
    Ok(())
}

/// On-disk locked weights. Carries the challenge schedule, never the key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockedWeights {
    pub schedule_id: u64,
    pub shape: Vec<usize>,
    pub levels: Vec<u8>,
}

/// Lock with the keystream a chip produces for `schedule_id`.
pub fn lock_with_puf(
    levels: &[u8],
    shape: &[usize],
    chip: &mut PufInstance,
    schedule_id: u64,
) -> Result<LockedWeights, SecError> {
    let key = chip.keystream(schedule_id, 2 * levels.len())?;
    keystream_health(&key)?;
    Ok(LockedWeights {
        schedule_id,
        shape: shape.to_vec(),
        levels: lock_weights(levels, &key)?,
    })
}

pub fn unlock_with_puf(locked: &LockedWeights, chip: &mut PufInstance) -> Result<Vec<u8>, SecError> {
    let key = chip.keystream(locked.schedule_id, 2 * locked.levels.len())?;
    unlock_weights(&locked.levels, &key)
}

/// Two-layer ReLU perceptron with 4-level weights and real biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    /// Row-major `hidden x inputs`, then `outputs x hidden`.
    pub levels: Vec<u8>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Mlp {
    /// The 4-8-2 demo network: class 1 iff `x0 + x1 - x2 - x3 > 0`.
    pub fn demo() -> Self {
        let (inputs, hidden, outputs) = (4, 8, 2);
        let pattern = [1.0, 1.0, -1.0, -1.0];
        let level_of = |v: f64| LEVEL_VALUES.iter().position(|l| (l - v).abs() < 1e-12).unwrap() as u8;
        let mut levels = Vec::with_capacity(inputs * hidden + hidden * outputs);
        // Even units detect s > 0, odd ones s < 0; the first four at full
        // weight, the rest at a third.
        let sign = |j: usize| if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        for j in 0..hidden {
            let mag = if j < 4 { 1.0 } else { 1.0 / 3.0 };
            levels.extend(pattern.iter().map(|p| level_of(sign(j) * mag * p)));
        }
        for o in 0..outputs {
            let class_sign = if o == 1 { 1.0 } else { -1.0 };
            levels.extend((0..hidden).map(|j| level_of(class_sign * sign(j))));
        }
        Self {
            inputs,
            hidden,
            outputs,
            levels,
            b1: vec![0.0; hidden],
            b2: vec![0.0; outputs],
        }
    }

    pub fn n_weights(&self) -> usize {
        self.inputs * self.hidden + self.hidden * self.outputs
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.inputs, self.hidden, self.outputs]
    }

    /// Same network with replaced weight levels.
    pub fn with_levels(&self, levels: Vec<u8>) -> Result<Self, SecError> {
        if levels.len() != self.n_weights() {
            return Err(SecError::Shape(format!(
                "expected {} weight levels, got {}",
                self.n_weights(),
                levels.len()
            )));
        }
        check_levels(&levels)?;
        Ok(Self { levels, ..self.clone() })
    }

    pub fn infer(&self, x: &[f64]) -> Result<Vec<f64>, SecError> {
        if x.len() != self.inputs {
            return Err(SecError::Shape(format!(
                "expected {} inputs, got {}",
                self.inputs,
                x.len()
            )));
        }
        let w = |k: usize| LEVEL_VALUES[self.levels[k] as usize];
        let h: Vec<f64> = (0..self.hidden)
            .map(|j| {
                let s: f64 = (0..self.inputs).map(|i| w(j * self.inputs + i) * x[i]).sum();
                (s + self.b1[j]).max(0.0)
            })
            .collect();
        let off = self.inputs * self.hidden;
        Ok((0..self.outputs)
            .map(|o| {
                (0..self.hidden)
                    .map(|j| w(off + o * self.hidden + j) * h[j])
                    .sum::<f64>()
                    + self.b2[o]
            })
            .collect())
    }

    /// Arg-max class; ties go to the lower index.
    pub fn classify(&self, x: &[f64]) -> Result<usize, SecError> {
        let y = self.infer(x)?;
        Ok((0..y.len()).fold(0, |best, k| if y[k] > y[best] { k } else { best }))
    }

    pub fn accuracy(&self, data: &[(Vec<f64>, usize)]) -> Result<f64, SecError> {
        let mut ok = 0;
        for (x, label) in data {
            ok += (self.classify(x)? == *label) as usize;
        }
        Ok(ok as f64 / data.len().max(1) as f64)
    }
}

/// Uniform points in `[-1, 1]^4`, labelled `x0 + x1 - x2 - x3 > 0`.
pub fn demo_dataset(n: usize, seed_value: u64) -> Vec<(Vec<f64>, usize)> {
    let mut rng = seed::stream(seed_value, "nn-data", 0);
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let label = (x[0] + x[1] - x[2] - x[3] > 0.0) as usize;
            (x, label)
        })
        .collect()
}
