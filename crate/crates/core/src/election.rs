//! Probabilistic cluster-head election with per-kind epoch rotation.

use std::collections::BTreeSet;

use rand::Rng;
use thiserror::Error;

use crate::net::{Node, NodeId, NodeKind};

/// Per-kind election probabilities and the rotation epoch derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectionParams {
    pub p_nrm: f64,
    pub p_adv: f64,
    pub epoch_nrm: u64,
    pub epoch_adv: u64,
}

impl ElectionParams {
    pub fn new(p_nrm: f64, p_adv: f64) -> Self {
        Self {
            p_nrm,
            p_adv,
            epoch_nrm: epoch_length(p_nrm),
            epoch_adv: epoch_length(p_adv),
        }
    }

    /// Same probability for every node regardless of kind.
    pub fn uniform(p: f64) -> Self {
        Self::new(p, p)
    }

    /// Heterogeneity-weighted probabilities.
    pub fn weighted(p_opt: f64, m: f64, alpha: f64) -> Self {
        Self::new(
            weighted_probability(NodeKind::Normal, p_opt, m, alpha),
            weighted_probability(NodeKind::Advanced, p_opt, m, alpha),
        )
    }

    pub fn probability(&self, kind: NodeKind) -> f64 {
        match kind {
            NodeKind::Normal => self.p_nrm,
            NodeKind::Advanced => self.p_adv,
        }
    }

    pub fn epoch(&self, kind: NodeKind) -> u64 {
        match kind {
            NodeKind::Normal => self.epoch_nrm,
            NodeKind::Advanced => self.epoch_adv,
        }
    }

    /// True when round `r` opens a new epoch for `kind`.
    pub fn is_epoch_start(&self, kind: NodeKind, r: u64) -> bool {
        r.is_multiple_of(self.epoch(kind))
    }
}

/// `max(1, round(1/p))`, rounding halves up. The reciprocal is snapped to
/// nine decimals first so that e.g. `1 / (0.6 / 1.5)` counts as 2.5.
pub fn epoch_length(p: f64) -> u64 {
    let inv = ((1.0 / p) * 1e9).round() / 1e9;
    (inv.round() as u64).max(1)
}

pub fn weighted_probability(kind: NodeKind, p_opt: f64, m: f64, alpha: f64) -> f64 {
    let scale = 1.0 + alpha * m;
    match kind {
        NodeKind::Normal => p_opt / scale,
        NodeKind::Advanced => p_opt * (1.0 + alpha) / scale,
    }
}

/// How a protocol turns the rotation threshold into a per-node threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdRule {
    /// The rotation threshold alone.
    Rotation,
    /// Normal nodes scale the rotation threshold by residual energy over
    /// the estimated normal-node mean; advanced nodes use it unscaled.
    EnergyWeightedNormal,
}

#[derive(Debug, Error, PartialEq)]
pub enum ThresholdError {
    #[error("node {0} is dead")]
    DeadNode(NodeId),
    #[error("normal-node energy estimate exhausted ({0} J)")]
    EstimatorExhausted(f64),
}

/// `p / (1 - p * (r mod epoch))`, before clamping.
pub fn rotation_threshold(p: f64, epoch: u64, r: u64) -> f64 {
    p / (1.0 - p * (r % epoch) as f64)
}

/// Election threshold for `node` at round `r`, clamped to `[0, 1]`.
///
/// Nodes already elected in their current epoch get 0. When the rule needs
/// the normal-node energy estimate and it is not positive, returns
/// [`ThresholdError::EstimatorExhausted`].
pub fn election_threshold(
    node: &Node,
    r: u64,
    rule: ThresholdRule,
    params: &ElectionParams,
    e_avg_normal: f64,
) -> Result<f64, ThresholdError> {
    if !node.alive {
        return Err(ThresholdError::DeadNode(node.id));
    }
    if node.elected_in_epoch {
        return Ok(0.0);
    }
    let base = rotation_threshold(params.probability(node.kind), params.epoch(node.kind), r);
    let raw = match (rule, node.kind) {
        (ThresholdRule::EnergyWeightedNormal, NodeKind::Normal) => {
            if e_avg_normal.is_nan() || e_avg_normal <= 0.0 {
                return Err(ThresholdError::EstimatorExhausted(e_avg_normal));
            }
            base * node.energy / e_avg_normal
        }
        _ => base,
    };
    Ok(clamp_unit(raw))
}

// r mod epoch <= round(1/p) - 1 < 1/p, so the denominator stays positive
fn clamp_unit(t: f64) -> f64 {
    t.clamp(0.0, 1.0)
}

/// Threshold actually used by the election: an exhausted estimator falls
/// back to the clamped rotation threshold.
pub fn effective_threshold(
    node: &Node,
    r: u64,
    rule: ThresholdRule,
    params: &ElectionParams,
    e_avg_normal: f64,
) -> f64 {
    match election_threshold(node, r, rule, params, e_avg_normal) {
        Ok(t) => t,
        Err(ThresholdError::EstimatorExhausted(_)) => clamp_unit(rotation_threshold(
            params.probability(node.kind),
            params.epoch(node.kind),
            r,
        )),
        Err(ThresholdError::DeadNode(_)) => 0.0,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ElectionOutcome {
    pub cluster_head_ids: BTreeSet<NodeId>,
    pub draws_used: usize,
}

/// Clears `elected_in_epoch` for every kind whose epoch starts at `r`.
pub fn reset_epochs(nodes: &mut [Node], r: u64, params: &ElectionParams) {
    for node in nodes.iter_mut() {
        if params.is_epoch_start(node.kind, r) {
            node.elected_in_epoch = false;
        }
    }
}

/// Runs one election round.
///
/// Applies the epoch reset for `r`, then draws one uniform value per alive
/// node in ascending id order (ineligible nodes still consume their draw).
/// Elected nodes are flagged `elected_in_epoch`.
pub fn elect_cluster_heads<R: Rng + ?Sized>(
    nodes: &mut [Node],
    r: u64,
    rule: ThresholdRule,
    params: &ElectionParams,
    e_avg_normal: f64,
    rng: &mut R,
) -> ElectionOutcome {
    reset_epochs(nodes, r, params);
    let mut outcome = ElectionOutcome::default();
    for node in nodes.iter_mut().filter(|n| n.alive) {
        let u: f64 = rng.gen();
        outcome.draws_used += 1;
        let t = effective_threshold(node, r, rule, params, e_avg_normal);
        if u < t {
            node.elected_in_epoch = true;
            outcome.cluster_head_ids.insert(node.id);
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Position;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn node(id: NodeId, kind: NodeKind, energy: f64) -> Node {
        Node::new(id, kind, Position::new(0.0, 0.0), energy)
    }

    #[test]
    fn weighted_probability_examples() {
        let p = ElectionParams::weighted(0.1, 0.1, 5.0);
        assert!((p.p_nrm - 0.1 / 1.5).abs() < 1e-15);
        assert!((p.p_nrm - 0.0667).abs() < 1e-4);
        assert!((p.p_adv - 0.4).abs() < 1e-15);

        let h = ElectionParams::weighted(0.1, 0.1, 0.0);
        assert_eq!(h.p_nrm, 0.1);
        assert_eq!(h.p_adv, 0.1);

        let c2 = ElectionParams::weighted(0.1, 0.2, 3.0);
        assert!((c2.p_nrm - 0.0625).abs() < 1e-15);
        assert!((c2.p_adv - 0.25).abs() < 1e-15);
    }

    #[test]
    fn epoch_lengths() {
        assert_eq!(epoch_length(0.1), 10);
        assert_eq!(epoch_length(0.4), 3);
        assert_eq!(epoch_length(0.1 / 1.5), 15);
        assert_eq!(epoch_length(0.0625), 16);
        assert_eq!(epoch_length(0.25), 4);
        assert_eq!(epoch_length(1.0), 1);
        assert_eq!(epoch_length(0.9), 1);
    }

    #[test]
    fn round_zero_anchor_for_energy_weighted_normal() {
        let params = ElectionParams::weighted(0.1, 0.1, 5.0);
        let n = node(0, NodeKind::Normal, 0.5);
        let t =
            election_threshold(&n, 0, ThresholdRule::EnergyWeightedNormal, &params, 0.5).unwrap();
        assert_eq!(t, params.p_nrm);
    }

    #[test]
    fn already_elected_gets_zero() {
        let params = ElectionParams::weighted(0.1, 0.1, 5.0);
        for rule in [ThresholdRule::Rotation, ThresholdRule::EnergyWeightedNormal] {
            for kind in [NodeKind::Normal, NodeKind::Advanced] {
                let mut n = node(0, kind, 1.0);
                n.elected_in_epoch = true;
                assert_eq!(election_threshold(&n, 5, rule, &params, 0.4).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn late_epoch_threshold_clamps_to_one() {
        let params = ElectionParams::weighted(0.1, 0.1, 5.0);
        assert_eq!(params.epoch_adv, 3);
        let a = node(0, NodeKind::Advanced, 3.0);
        assert!((rotation_threshold(0.4, 3, 2) - 2.0).abs() < 1e-12);
        assert_eq!(
            election_threshold(&a, 2, ThresholdRule::Rotation, &params, 0.5).unwrap(),
            1.0
        );
        assert_eq!(
            election_threshold(&a, 5, ThresholdRule::Rotation, &params, 0.5).unwrap(),
            1.0
        );
    }

    #[test]
    fn exhausted_estimator_signals_and_falls_back_to_rotation() {
        let params = ElectionParams::weighted(0.1, 0.1, 5.0);
        let n = node(0, NodeKind::Normal, 0.2);
        assert!(matches!(
            election_threshold(&n, 3, ThresholdRule::EnergyWeightedNormal, &params, 0.0),
            Err(ThresholdError::EstimatorExhausted(_))
        ));
        let t = effective_threshold(&n, 3, ThresholdRule::EnergyWeightedNormal, &params, 0.0);
        assert_eq!(t, rotation_threshold(params.p_nrm, params.epoch_nrm, 3));
        // advanced nodes never consult the estimator
        let a = node(1, NodeKind::Advanced, 1.0);
        assert!(
            election_threshold(&a, 0, ThresholdRule::EnergyWeightedNormal, &params, 0.0).is_ok()
        );
    }

    #[test]
    fn dead_node_is_an_error() {
        let params = ElectionParams::uniform(0.1);
        let mut n = node(0, NodeKind::Normal, 0.0);
        n.alive = false;
        assert_eq!(
            election_threshold(&n, 0, ThresholdRule::Rotation, &params, 0.5),
            Err(ThresholdError::DeadNode(0))
        );
    }

    #[test]
    fn all_ineligible_elects_nobody() {
        let params = ElectionParams::uniform(0.1);
        let mut nodes: Vec<Node> = (0..20).map(|i| node(i, NodeKind::Normal, 0.5)).collect();
        for n in &mut nodes {
            n.elected_in_epoch = true;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // r = 3 is not an epoch boundary, so nobody is reset
        let out = elect_cluster_heads(
            &mut nodes,
            3,
            ThresholdRule::Rotation,
            &params,
            0.5,
            &mut rng,
        );
        assert!(out.cluster_head_ids.is_empty());
        assert_eq!(out.draws_used, 20);
    }

    #[test]
    fn dead_nodes_consume_no_draws() {
        let params = ElectionParams::uniform(0.1);
        let mut nodes: Vec<Node> = (0..10).map(|i| node(i, NodeKind::Normal, 0.5)).collect();
        nodes[4].alive = false;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = elect_cluster_heads(
            &mut nodes,
            0,
            ThresholdRule::Rotation,
            &params,
            0.5,
            &mut rng,
        );
        assert_eq!(out.draws_used, 9);
        assert!(!out.cluster_head_ids.contains(&4));
    }

    #[test]
    fn election_is_deterministic() {
        let params = ElectionParams::weighted(0.1, 0.1, 5.0);
        let base: Vec<Node> = (0..100)
            .map(|i| {
                node(
                    i,
                    if i % 10 == 0 {
                        NodeKind::Advanced
                    } else {
                        NodeKind::Normal
                    },
                    0.5,
                )
            })
            .collect();
        let run = || {
            let mut nodes = base.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            elect_cluster_heads(
                &mut nodes,
                4,
                ThresholdRule::EnergyWeightedNormal,
                &params,
                0.4,
                &mut rng,
            )
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn fresh_round_mean_matches_expected_head_count() {
        // E[#CH] at r = 0 with full eligibility is sum_i p_i = n * p_opt.
        let params = ElectionParams::weighted(0.1, 0.1, 5.0);
        let base: Vec<Node> = (0..100)
            .map(|i| {
                node(
                    i,
                    if i < 10 {
                        NodeKind::Advanced
                    } else {
                        NodeKind::Normal
                    },
                    0.5,
                )
            })
            .collect();
        let expected = 90.0 * params.p_nrm + 10.0 * params.p_adv;
        assert!((expected - 10.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let trials = 1000;
        let total: usize = (0..trials)
            .map(|_| {
                let mut nodes = base.clone();
                elect_cluster_heads(
                    &mut nodes,
                    0,
                    ThresholdRule::Rotation,
                    &params,
                    0.5,
                    &mut rng,
                )
                .cluster_head_ids
                .len()
            })
            .sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 10.0).abs() <= 1.5, "mean {mean}");
        // variance of a sum of independent Bernoullis
        let var =
            90.0 * params.p_nrm * (1.0 - params.p_nrm) + 10.0 * params.p_adv * (1.0 - params.p_adv);
        let se = (var / trials as f64).sqrt();
        assert!((mean - expected).abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn epoch_exclusivity_over_many_rounds() {
        let params = ElectionParams::weighted(0.1, 0.2, 3.0);
        let mut nodes: Vec<Node> = (0..100)
            .map(|i| {
                node(
                    i,
                    if i < 20 {
                        NodeKind::Advanced
                    } else {
                        NodeKind::Normal
                    },
                    0.5,
                )
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut last_elected: Vec<Option<u64>> = vec![None; nodes.len()];
        for r in 0..500 {
            let out = elect_cluster_heads(
                &mut nodes,
                r,
                ThresholdRule::Rotation,
                &params,
                0.5,
                &mut rng,
            );
            for id in out.cluster_head_ids {
                let epoch = params.epoch(nodes[id].kind);
                if let Some(prev) = last_elected[id] {
                    assert_ne!(
                        prev / epoch,
                        r / epoch,
                        "node {id} elected twice in one epoch"
                    );
                }
                last_elected[id] = Some(r);
            }
        }
    }

    #[test]
    fn every_eligible_node_serves_once_per_epoch() {
        // threshold reaches 1 in the last round of the epoch, so a full
        // epoch elects every node exactly once
        let params = ElectionParams::uniform(0.1);
        let mut nodes: Vec<Node> = (0..50).map(|i| node(i, NodeKind::Normal, 0.5)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut count = 0;
        for r in 0..10 {
            count += elect_cluster_heads(
                &mut nodes,
                r,
                ThresholdRule::Rotation,
                &params,
                0.5,
                &mut rng,
            )
            .cluster_head_ids
            .len();
        }
        assert_eq!(count, 50);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn thresholds_lie_in_unit_interval(
                p_opt in 0.01f64..0.5,
                m in 0.0f64..1.0,
                alpha in 0.0f64..10.0,
                r in 0u64..20_000,
                energy in 0.001f64..5.0,
                e_avg in -0.1f64..1.0,
                advanced in any::<bool>(),
                weighted in any::<bool>(),
            ) {
                let params = ElectionParams::weighted(p_opt, m, alpha);
                let kind = if advanced { NodeKind::Advanced } else { NodeKind::Normal };
                let rule = if weighted { ThresholdRule::EnergyWeightedNormal } else { ThresholdRule::Rotation };
                let n = node(0, kind, energy);
                let t = effective_threshold(&n, r, rule, &params, e_avg);
                prop_assert!((0.0..=1.0).contains(&t));
            }

            #[test]
            fn threshold_non_decreasing_within_epoch(
                p_opt in 0.01f64..0.5,
                m in 0.0f64..1.0,
                alpha in 0.0f64..10.0,
                ratio in 0.1f64..3.0,
                epoch_index in 0u64..50,
            ) {
                let params = ElectionParams::weighted(p_opt, m, alpha);
                let n = node(0, NodeKind::Normal, 0.5 * ratio);
                let epoch = params.epoch_nrm;
                let mut prev = 0.0;
                for offset in 0..epoch {
                    let r = epoch_index * epoch + offset;
                    let t = effective_threshold(&n, r, ThresholdRule::EnergyWeightedNormal, &params, 0.5);
                    prop_assert!(t >= prev);
                    prev = t;
                }
            }

            #[test]
            fn higher_energy_normal_never_has_lower_threshold(
                e1 in 0.001f64..1.0,
                e2 in 0.001f64..1.0,
                e_avg in 0.01f64..0.5,
                r in 0u64..10_000,
            ) {
                let params = ElectionParams::weighted(0.1, 0.1, 5.0);
                let a = node(0, NodeKind::Normal, e1.max(e2));
                let b = node(1, NodeKind::Normal, e1.min(e2));
                let ta = effective_threshold(&a, r, ThresholdRule::EnergyWeightedNormal, &params, e_avg);
                let tb = effective_threshold(&b, r, ThresholdRule::EnergyWeightedNormal, &params, e_avg);
                prop_assert!(ta >= tb);
            }
        }
    }
}
