//! Simulation configuration and radio constants.
//!
//! The on-disk form is a flat JSON object whose keys mirror the struct
//! fields; radio and base-station fields are flattened into the top level.
//! Missing keys fall back to the reference experiment defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::Position;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("malformed configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cannot read configuration: {0}")]
    Io(#[from] std::io::Error),
}

/// First-order radio model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioParams {
    /// Electronics energy, J/bit.
    pub e_elec: f64,
    /// Free-space amplifier, J/bit/m².
    pub eps_fs: f64,
    /// Multipath amplifier, J/bit/m⁴.
    pub eps_mp: f64,
    /// Data aggregation energy, J/bit/signal.
    pub e_da: f64,
    /// Free-space / multipath switching distance, m.
    pub d0: f64,
    /// Packet length L, bits.
    pub packet_bits: u64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            e_elec: 5e-9,
            eps_fs: 1e-11,
            eps_mp: 1.3e-15,
            e_da: 5e-9,
            d0: 70.0,
            packet_bits: 4000,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks = [
            ("e_elec", self.e_elec),
            ("eps_fs", self.eps_fs),
            ("eps_mp", self.eps_mp),
            ("e_da", self.e_da),
            ("d0", self.d0),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.packet_bits == 0 {
            return Err(ConfigError::Invalid("packet_bits must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n: usize,
    pub field_m: f64,
    pub bs_x: f64,
    pub bs_y: f64,
    pub e0: f64,
    pub p_opt: f64,
    pub m_frac: f64,
    pub alpha: f64,
    /// Registry name of the clustering protocol (`leach`, `sep`, `eacp`).
    pub protocol: String,
    pub sleep_cap: u32,
    /// When false, EACP members always join their nearest cluster head.
    pub member_sleep: bool,
    pub max_rounds: u64,
    pub seed: u64,
    #[serde(flatten)]
    pub radio: RadioParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 100,
            field_m: 100.0,
            bs_x: 50.0,
            bs_y: 50.0,
            e0: 0.5,
            p_opt: 0.1,
            m_frac: 0.1,
            alpha: 5.0,
            protocol: "eacp".into(),
            sleep_cap: 4,
            member_sleep: true,
            max_rounds: 200_000,
            seed: 1,
            radio: RadioParams::default(),
        }
    }
}

impl SimConfig {
    /// Reference heterogeneity setting with 10% advanced nodes at 5x extra energy.
    pub fn case1() -> Self {
        Self::default()
    }

    /// Reference heterogeneity setting with 20% advanced nodes at 3x extra energy.
    pub fn case2() -> Self {
        Self {
            m_frac: 0.2,
            alpha: 3.0,
            ..Self::default()
        }
    }

    pub fn with_protocol(mut self, name: &str) -> Self {
        self.protocol = name.to_ascii_lowercase();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn bs(&self) -> Position {
        Position::new(self.bs_x, self.bs_y)
    }

    pub fn advanced_count(&self) -> usize {
        (self.m_frac * self.n as f64).round() as usize
    }

    pub fn normal_count(&self) -> usize {
        self.n - self.advanced_count()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::Invalid("n must be at least 1".into()));
        }
        if !(self.field_m.is_finite() && self.field_m > 0.0) {
            return Err(ConfigError::Invalid("field_m must be > 0".into()));
        }
        let inside = |v: f64| (0.0..=self.field_m).contains(&v);
        if !inside(self.bs_x) || !inside(self.bs_y) {
            return Err(ConfigError::Invalid(format!(
                "base station ({}, {}) lies outside the field",
                self.bs_x, self.bs_y
            )));
        }
        if !(self.e0.is_finite() && self.e0 >= 0.0) {
            return Err(ConfigError::Invalid("e0 must be >= 0".into()));
        }
        if !(self.p_opt > 0.0 && self.p_opt < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "p_opt must lie in (0, 1), got {}",
                self.p_opt
            )));
        }
        if !(0.0..=1.0).contains(&self.m_frac) {
            return Err(ConfigError::Invalid(format!(
                "m_frac must lie in [0, 1], got {}",
                self.m_frac
            )));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(ConfigError::Invalid("alpha must be >= 0".into()));
        }
        self.radio.validate()
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let doc: serde_json::Value = serde_json::from_str(text)?;
        let known = serde_json::to_value(SimConfig::default())?;
        if let (Some(given), Some(known)) = (doc.as_object(), known.as_object()) {
            if let Some(key) = given.keys().find(|k| !known.contains_key(*k)) {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
        }
        let mut cfg: SimConfig = serde_json::from_value(doc)?;
        cfg.protocol = cfg.protocol.to_ascii_lowercase();
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Returns a copy with one flat key overridden. The value string is
    /// parsed as JSON when possible and as a bare string otherwise.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self, ConfigError> {
        let mut doc = serde_json::to_value(self)?;
        let map = doc
            .as_object_mut()
            .expect("SimConfig serializes to a JSON object");
        if !map.contains_key(key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        let parsed = serde_json::from_str(value)
            .unwrap_or_else(|_| serde_json::Value::String(value.to_string()));
        map.insert(key.to_string(), parsed);
        let mut cfg: SimConfig = serde_json::from_value(doc)?;
        cfg.protocol = cfg.protocol.to_ascii_lowercase();
        Ok(cfg)
    }
}
