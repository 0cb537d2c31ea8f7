//! TOML tool configuration.
//!
//! Every section is optional and falls back to the library defaults. Unknown
//! keys are rejected so a misspelt field fails loudly.
//!
//! ```toml
//! seed = 7
//!
//! [device]
//! r_on = 10e3
//!
//! [variation]
//! c2c = false
//!
//! [xbar]
//! r_selector_on = 1e3
//!
//! [lim]
//! rows = 32
//! cols = 32
//!
//! [trng]
//! pulse_width = 100e-9
//!
//! [harness]
//! alpha = 0.01
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::device::{DeviceParams, LevelConfig, VariationSpec};
use crate::limc::TechMapConfig;
use crate::sec::{PufConfig, TrngConfig};
use crate::xbar::{GateTemplates, XbarConfig, MAX_COLS, MAX_ROWS};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("config {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("invalid config [{section}]: {reason}")]
    Invalid { section: &'static str, reason: String },
}

/// Logic-in-memory array size and mapping settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimConfig {
    pub rows: usize,
    pub cols: usize,
    pub max_fanout: usize,
}

impl Default for LimConfig {
    fn default() -> Self {
        Self {
            rows: 32,
            cols: 32,
            max_fanout: TechMapConfig::default().max_fanout,
        }
    }
}

/// Statistical thresholds and calibration effort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub alpha: f64,
    pub calibration_trials: usize,
    pub calibration_tol: f64,
    pub calibration_max_iter: usize,
    /// Accepted `[lo, hi]` band for PUF uniqueness and uniformity, percent.
    pub metric_band: [f64; 2],
    pub min_reliability: f64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            calibration_trials: 10_000,
            calibration_tol: 0.01,
            calibration_max_iter: 50,
            metric_band: [45.0, 55.0],
            min_reliability: 90.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub seed: Option<u64>,
    pub device: DeviceParams,
    pub variation: VariationSpec,
    /// Ladder for multi-level storage; the shipped six-level one if absent.
    pub levels: Option<LevelConfig>,
    pub xbar: XbarConfig,
    pub templates: GateTemplates,
    pub lim: LimConfig,
    #[serde(deserialize_with = "cli_trng")]
    pub trng: TrngConfig,
    pub puf: PufConfig,
    pub harness: HarnessConfig,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            seed: None,
            device: DeviceParams::default(),
            variation: VariationSpec::default(),
            levels: None,
            xbar: XbarConfig::default(),
            templates: GateTemplates::default(),
            lim: LimConfig::default(),
            // Raw bits unless asked for; `--debias` switches it on.
            trng: TrngConfig {
                debias: false,
                ..TrngConfig::default()
            },
            puf: PufConfig::default(),
            harness: HarnessConfig::default(),
        }
    }
}

// A `[trng]` section fills unset keys from the CLI default (debias off),
// not from the library default.
fn cli_trng<'de, D: serde::Deserializer<'de>>(d: D) -> Result<TrngConfig, D::Error> {
    let mut t = toml::Table::deserialize(d)?;
    t.entry("debias").or_insert(toml::Value::Boolean(false));
    t.try_into().map_err(serde::de::Error::custom)
}

fn invalid(section: &'static str, e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        section,
        reason: e.to_string(),
    }
}

impl ToolConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: shown.clone(),
            reason: e.to_string(),
        })?;
        Self::from_toml(&text, &shown)
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            reason: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn levels(&self) -> LevelConfig {
        self.levels.clone().unwrap_or_else(LevelConfig::six_level)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.device.validate().map_err(|e| invalid("device", e))?;
        self.variation.validate().map_err(|e| invalid("variation", e))?;
        if let Some(l) = &self.levels {
            l.validate().map_err(|e| invalid("levels", e))?;
        }
        self.xbar.validate().map_err(|e| invalid("xbar", e))?;
        self.templates.validate().map_err(|e| invalid("templates", e))?;
        let l = &self.lim;
        if !(1..=MAX_ROWS).contains(&l.rows) || !(1..=MAX_COLS).contains(&l.cols) {
            return Err(invalid(
                "lim",
                format!("rows/cols must lie in 1..={MAX_ROWS} and 1..={MAX_COLS}"),
            ));
        }
        if l.max_fanout < 2 {
            return Err(invalid("lim", "max_fanout must be >= 2"));
        }
        self.trng.validate().map_err(|e| invalid("trng", e))?;
        self.puf.validate().map_err(|e| invalid("puf", e))?;
        let h = &self.harness;
        if !(h.alpha > 0.0 && h.alpha < 1.0) {
            return Err(invalid("harness", "alpha must lie in (0, 1)"));
        }
        if h.calibration_trials == 0 || h.calibration_max_iter == 0 {
            return Err(invalid(
                "harness",
                "calibration_trials and calibration_max_iter must be >= 1",
            ));
        }
        if !(h.calibration_tol > 0.0 && h.calibration_tol < 0.5) {
            return Err(invalid("harness", "calibration_tol must lie in (0, 0.5)"));
        }
        let [lo, hi] = h.metric_band;
        if !(0.0 <= lo && lo <= hi && hi <= 100.0) {
            return Err(invalid("harness", "metric_band must satisfy 0 <= lo <= hi <= 100"));
        }
        if !(0.0..=100.0).contains(&h.min_reliability) {
            return Err(invalid("harness", "min_reliability must lie in [0, 100]"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ToolConfig {
            seed: Some(42),
            ..ToolConfig::default()
        };
        cfg.device.r_on = 12e3;
        cfg.lim.rows = 16;
        cfg.trng.pulse_amplitude = 1.2;
        let back = ToolConfig::from_toml(&cfg.to_toml(), "mem").unwrap();
        assert_eq!(back, cfg);
        assert_eq!(ToolConfig::from_toml("", "mem").unwrap(), ToolConfig::default());
    }

    #[test]
    fn trng_section_keeps_cli_debias_default() {
        let cfg = ToolConfig::from_toml("[trng]\npulse_width = 2e-7\n", "mem").unwrap();
        assert!(!cfg.trng.debias);
        assert_eq!(cfg.trng.pulse_width, 2e-7);
        let on = ToolConfig::from_toml("[trng]\ndebias = true\n", "mem").unwrap();
        assert!(on.trng.debias);
    }

    #[test]
    fn unknown_keys_and_bad_values_name_the_field() {
        let e = ToolConfig::from_toml("[device]\nr_onn = 1.0\n", "f.toml")
            .unwrap_err()
            .to_string();
        assert!(e.contains("r_onn") && e.contains("f.toml"), "{e}");
        let e = ToolConfig::from_toml("[trng]\nwidth = 1.0\n", "f.toml")
            .unwrap_err()
            .to_string();
        assert!(e.contains("width"), "{e}");
        let e = ToolConfig::from_toml("bogus = 1\n", "f.toml").unwrap_err().to_string();
        assert!(e.contains("bogus"), "{e}");
        let e = ToolConfig::from_toml("[lim]\nrows = 0\n", "f.toml")
            .unwrap_err()
            .to_string();
        assert!(e.contains("[lim]"), "{e}");
        let e = ToolConfig::from_toml("[harness]\nalpha = 1.5\n", "f.toml")
            .unwrap_err()
            .to_string();
        assert!(e.contains("alpha"), "{e}");
    }
}
