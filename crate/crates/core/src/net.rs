//! Network model: node types, random deployment, geometry and the
//! closed-form capacity formulas.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, RadioParams, SimConfig};

/// Expected cluster-head to sink distance as a fraction of the half side
/// length, for a sink at the field centre.
pub const CH_TO_BS_DISTANCE_FACTOR: f64 = 0.765;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Position, b: Position) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Normal,
    Advanced,
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub pos: Position,
    /// Residual energy in joules.
    pub energy: f64,
    pub alive: bool,
    /// Consecutive rounds spent asleep.
    pub sleep_count: u32,
    /// Set once the node has served as cluster head in its current epoch.
    pub elected_in_epoch: bool,
}

impl Node {
    pub fn new(id: NodeId, kind: NodeKind, pos: Position, energy: f64) -> Self {
        Self {
            id,
            kind,
            pos,
            energy,
            alive: energy > 0.0,
            sleep_count: 0,
            elected_in_epoch: false,
        }
    }

    pub fn is_sleeping(&self) -> bool {
        self.sleep_count > 0
    }
}

pub fn initial_energy(kind: NodeKind, e0: f64, alpha: f64) -> f64 {
    match kind {
        NodeKind::Normal => e0,
        NodeKind::Advanced => e0 * (1.0 + alpha),
    }
}

/// Places `cfg.n` nodes uniformly over the square field.
///
/// Positions are drawn first, in id order; the advanced subset is then
/// sampled uniformly without replacement from the ids.
pub fn deploy_network<R: Rng + ?Sized>(
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Vec<Node>, ConfigError> {
    cfg.validate()?;
    let side = cfg.field_m;
    let positions: Vec<Position> = (0..cfg.n)
        .map(|_| Position::new(rng.gen_range(0.0..=side), rng.gen_range(0.0..=side)))
        .collect();

    let mut kinds = vec![NodeKind::Normal; cfg.n];
    for id in index::sample(rng, cfg.n, cfg.advanced_count()) {
        kinds[id] = NodeKind::Advanced;
    }

    Ok(positions
        .into_iter()
        .zip(kinds)
        .enumerate()
        .map(|(id, (pos, kind))| Node::new(id, kind, pos, initial_energy(kind, cfg.e0, cfg.alpha)))
        .collect())
}

/// Distance at which free-space and multipath amplifier costs coincide,
/// `sqrt(eps_fs / eps_mp)`.
pub fn crossover_distance(radio: &RadioParams) -> Result<f64, ConfigError> {
    if !(radio.eps_fs > 0.0 && radio.eps_mp > 0.0) {
        return Err(ConfigError::Invalid(
            "amplifier constants must be strictly positive".into(),
        ));
    }
    Ok((radio.eps_fs / radio.eps_mp).sqrt())
}

/// The crossover distance when it disagrees with the configured `d0`.
pub fn d0_mismatch(radio: &RadioParams) -> Option<f64> {
    let d = crossover_distance(radio).ok()?;
    ((d - radio.d0).abs() > 1e-9 * d).then_some(d)
}

/// Mean cluster-head to sink distance for a centred sink.
pub fn mean_ch_to_bs_distance(field_m: f64) -> f64 {
    CH_TO_BS_DISTANCE_FACTOR * field_m / 2.0
}

/// Analytically optimal number of clusters.
pub fn optimal_cluster_count(n: usize, field_m: f64, radio: &RadioParams) -> f64 {
    let d_bs = mean_ch_to_bs_distance(field_m);
    (n as f64).sqrt() / (2.0 * std::f64::consts::PI).sqrt()
        * (radio.eps_fs / radio.eps_mp).sqrt()
        * field_m
        / (d_bs * d_bs)
}

/// Per-node election probability implied by [`optimal_cluster_count`].
pub fn optimal_probability(n: usize, field_m: f64, radio: &RadioParams) -> f64 {
    optimal_cluster_count(n, field_m, radio) / n as f64
}

/// `N * E0 * (1 + alpha * m)`.
pub fn total_initial_energy(cfg: &SimConfig) -> f64 {
    cfg.n as f64 * cfg.e0 * (1.0 + cfg.alpha * cfg.m_frac)
}

/// Initial energy held by the normal population only.
pub fn total_normal_energy(cfg: &SimConfig) -> f64 {
    cfg.normal_count() as f64 * cfg.e0
}
