//! First-order radio dissipation model and the analytic energy estimators
//! used by the energy-aware election.

use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, RadioParams, SimConfig};
use crate::net::{mean_ch_to_bs_distance, total_normal_energy};

/// Energy to transmit `bits` over `d` meters. Distances at or beyond the
/// configured `d0` use the multipath amplifier.
pub fn tx_energy(bits: u64, d: f64, radio: &RadioParams) -> f64 {
    let l = bits as f64;
    if d < radio.d0 {
        l * radio.e_elec + l * radio.eps_fs * d * d
    } else {
        l * radio.e_elec + l * radio.eps_mp * d.powi(4)
    }
}

pub fn rx_energy(bits: u64, radio: &RadioParams) -> f64 {
    bits as f64 * radio.e_elec
}

/// Fusion cost for `signal_count` packets (members plus the head's own).
pub fn aggregation_energy(bits: u64, signal_count: usize, radio: &RadioParams) -> f64 {
    signal_count as f64 * bits as f64 * radio.e_da
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub tx: f64,
    pub rx: f64,
    pub aggregation: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.tx + self.rx + self.aggregation
    }
}

/// Expected squared member-to-head distance for `k` clusters over an
/// `m x m` field with uniform node density.
pub fn mean_sq_member_distance(field_m: f64, k: f64) -> f64 {
    field_m * field_m / (2.0 * std::f64::consts::PI * k)
}

fn cluster_count(cfg: &SimConfig) -> Result<f64, ConfigError> {
    let k = cfg.p_opt * cfg.n as f64;
    if k < 1.0 {
        return Err(ConfigError::Invalid(format!(
            "expected cluster count p_opt * n = {k} is below 1"
        )));
    }
    Ok(k)
}

/// Analytic energy a single cluster head spends per round, split by kind.
pub fn expected_ch_energy(cfg: &SimConfig) -> Result<EnergyBreakdown, ConfigError> {
    let k = cluster_count(cfg)?;
    let r = &cfg.radio;
    let l = r.packet_bits as f64;
    let per_cluster = cfg.n as f64 / k;
    let d_bs = mean_ch_to_bs_distance(cfg.field_m);
    Ok(EnergyBreakdown {
        tx: l * r.e_elec + l * r.eps_fs * d_bs * d_bs,
        rx: (per_cluster - 1.0) * l * r.e_elec,
        aggregation: per_cluster * l * r.e_da,
    })
}

/// Analytic energy a non-head node spends per round.
pub fn expected_member_energy(cfg: &SimConfig) -> Result<f64, ConfigError> {
    let k = cluster_count(cfg)?;
    let r = &cfg.radio;
    let l = r.packet_bits as f64;
    Ok(l * (r.e_elec + r.eps_fs * mean_sq_member_distance(cfg.field_m, k)))
}

/// Expected network-wide dissipation in one round with `k = p_opt * n`
/// clusters.
pub fn expected_round_energy(cfg: &SimConfig) -> Result<f64, ConfigError> {
    let k = cluster_count(cfg)?;
    let r = &cfg.radio;
    let n = cfg.n as f64;
    let d_bs = mean_ch_to_bs_distance(cfg.field_m);
    let d_ch_sq = mean_sq_member_distance(cfg.field_m, k);
    Ok(r.packet_bits as f64
        * (2.0 * n * r.e_elec + n * r.e_da + k * r.eps_fs * d_bs * d_bs + n * r.eps_fs * d_ch_sq))
}

/// Estimated network lifetime in rounds: initial normal-node energy over
/// the expected per-round dissipation.
pub fn estimated_total_rounds(cfg: &SimConfig) -> Result<f64, ConfigError> {
    let per_round = expected_round_energy(cfg)?;
    if per_round.is_nan() || per_round <= 0.0 {
        return Err(ConfigError::Invalid("expected round energy is zero".into()));
    }
    Ok(total_normal_energy(cfg) / per_round)
}

/// Linear-decay estimate of the mean residual energy of a normal node at
/// round `r`, clamped at zero past the estimated lifetime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalEnergyEstimator {
    initial_mean: f64,
    lifetime_rounds: f64,
}

impl NormalEnergyEstimator {
    pub fn new(cfg: &SimConfig) -> Result<Self, ConfigError> {
        let normals = cfg.normal_count();
        let initial_mean = if normals == 0 {
            0.0
        } else {
            total_normal_energy(cfg) / normals as f64
        };
        Ok(Self {
            initial_mean,
            lifetime_rounds: estimated_total_rounds(cfg)?,
        })
    }

    pub fn lifetime_rounds(&self) -> f64 {
        self.lifetime_rounds
    }

    pub fn at(&self, r: u64) -> f64 {
        self.initial_mean * (1.0 - r as f64 / self.lifetime_rounds).max(0.0)
    }
}

pub fn average_normal_energy(r: u64, cfg: &SimConfig) -> Result<f64, ConfigError> {
    Ok(NormalEnergyEstimator::new(cfg)?.at(r))
}
