//! Security primitives on the crossbar: stochastic-switching TRNG,
//! pairwise-comparison PUF and PUF-keyed weight locking.

mod lock;
mod puf;
mod trng;

pub use lock::{
    demo_dataset, keystream_health, lock_weights, lock_with_puf, unlock_weights, unlock_with_puf, LockedWeights, Mlp,
    LEVEL_VALUES,
};
pub use puf::{
    bit_aliasing, bits_to_hex, crp_csv, puf_metrics, reliability, schedule_challenge, uniformity, uniqueness,
    Challenge, PufConfig, PufHealth, PufInstance, PufMetrics,
};
pub use trng::{
    calibrate_trng, pack_bits, randomness_tests, trng_bit, trng_fill, trng_stream, von_neumann, RandomnessReport,
    TrngCalibration, TrngConfig, TrngOutput, DEFAULT_TRNG_AMPLITUDE, MIN_TEST_BITS,
};

use crate::device::DeviceError;
use crate::xbar::XbarError;

#[derive(Debug, thiserror::Error)]
pub enum SecError {
    #[error("invalid {field}: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("need at least {need} bits, got {got}")]
    TooFewBits { need: usize, got: usize },
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("challenge has {got} bits, expected {expected}")]
    ChallengeLength { expected: usize, got: usize },
    #[error("need at least 2 chips, got {0}")]
    TooFewChips(usize),
    #[error("keystream has {got} bits, {need} needed")]
    KeystreamUnderflow { need: usize, got: usize },
    #[error("keystream rejected: {0}")]
    WeakKeystream(String),
    #[error("weight {index} has level {value}; levels are 0..=3")]
    Level { index: usize, value: u8 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Xbar(#[from] XbarError),
    #[error(transparent)]
    Device(#[from] DeviceError),
}
