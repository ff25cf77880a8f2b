//! The round loop.
//!
//! Each round runs: epoch reset and election, cluster formation (with the
//! protocol's member decisions), the steady-state transmissions, and an
//! atomic end-of-round settlement that deducts energy and marks deaths.

use std::collections::BTreeSet;

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, SimConfig};
use crate::election::{elect_cluster_heads, ElectionParams, ThresholdRule};
use crate::energy::{aggregation_energy, rx_energy, tx_energy, NormalEnergyEstimator};
use crate::metrics::{summarize, Summary};
use crate::net::{d0_mismatch, deploy_network, distance, Node, NodeId, NodeKind};
use crate::protocol::{ClusteringProtocol, ProtocolRegistry};
use crate::routing::{next_sleep_count, GatewayAssignment, MemberAction};

/// Observables for one completed round. Message counters are cumulative
/// from the start of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub alive_normal: usize,
    pub alive_advanced: usize,
    pub ch_count: usize,
    pub sleeping: usize,
    pub residual_total: f64,
    pub msgs_to_ch: u64,
    pub msgs_to_bs: u64,
    pub msgs_relayed: u64,
}

impl RoundRecord {
    pub fn alive_total(&self) -> usize {
        self.alive_normal + self.alive_advanced
    }
}

/// A node's exclusive role within one round. Gateway duty is tracked
/// separately because a relay is also a member or a direct sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Dead,
    ClusterHead,
    Member(NodeId),
    Direct,
    Sleeping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyUse {
    MemberTx,
    HeadRx,
    Aggregation,
    HeadTx,
    RelayRx,
    RelayTx,
    DirectTx,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEvent {
    pub node: NodeId,
    pub kind: EnergyUse,
    pub joules: f64,
}

/// Message counts produced by a single round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageCounts {
    pub to_ch: u64,
    pub to_bs: u64,
    pub relayed: u64,
}

/// Roles, relays and energy demands decided for one round, before
/// settlement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundPlan {
    pub roles: Vec<Role>,
    pub gateways: Vec<GatewayAssignment>,
    pub events: Vec<EnergyEvent>,
    pub messages: MessageCounts,
}

impl RoundPlan {
    /// Total demanded energy per node.
    pub fn demand(&self, node_count: usize) -> Vec<f64> {
        let mut out = vec![0.0; node_count];
        for e in &self.events {
            out[e.node] += e.joules;
        }
        out
    }
}

/// Everything the engine did in one round, for tracing and invariant checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    /// Zero-based election round.
    pub election_round: u64,
    pub heads: BTreeSet<NodeId>,
    pub plan: RoundPlan,
    /// Energy actually removed from each battery (demand capped at the
    /// energy available).
    pub drawn: Vec<f64>,
    pub deaths: Vec<NodeId>,
    /// Sleep counters after the round.
    pub sleep_counts: Vec<u32>,
}

fn nearest_head<'a>(node: &Node, heads: &[&'a Node]) -> Option<&'a Node> {
    heads
        .iter()
        .copied()
        .map(|h| (distance(node.pos, h.pos), h))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)))
        .map(|(_, h)| h)
}

/// Decides roles and energy demands for a round with the given heads.
/// Pure: `nodes` are not modified.
pub fn plan_round(
    nodes: &[Node],
    heads: &BTreeSet<NodeId>,
    protocol: &dyn ClusteringProtocol,
    cfg: &SimConfig,
) -> RoundPlan {
    let radio = &cfg.radio;
    let bits = radio.packet_bits;
    let bs = cfg.bs();
    let mut roles = vec![Role::Dead; nodes.len()];
    let mut events = Vec::new();
    let mut messages = MessageCounts::default();

    let head_nodes: Vec<&Node> = heads
        .iter()
        .map(|&id| &nodes[id])
        .filter(|n| n.alive)
        .collect();
    let mut members_of = vec![0usize; nodes.len()];

    for node in nodes.iter().filter(|n| n.alive) {
        if heads.contains(&node.id) {
            roles[node.id] = Role::ClusterHead;
            continue;
        }
        let action = match nearest_head(node, &head_nodes) {
            Some(ch) => protocol.member_action(node, ch, bs, radio),
            None => protocol.headless_action(node),
        };
        roles[node.id] = match action {
            MemberAction::Join(ch) => {
                let d = distance(node.pos, nodes[ch].pos);
                events.push(EnergyEvent {
                    node: node.id,
                    kind: EnergyUse::MemberTx,
                    joules: tx_energy(bits, d, radio),
                });
                members_of[ch] += 1;
                messages.to_ch += 1;
                Role::Member(ch)
            }
            MemberAction::Sleep => Role::Sleeping,
            MemberAction::DirectToBS => {
                let d = distance(node.pos, bs);
                events.push(EnergyEvent {
                    node: node.id,
                    kind: EnergyUse::DirectTx,
                    joules: tx_energy(bits, d, radio),
                });
                messages.to_bs += 1;
                Role::Direct
            }
        };
    }

    let candidates: Vec<&Node> = nodes
        .iter()
        .filter(|n| {
            n.kind == NodeKind::Advanced && matches!(roles[n.id], Role::Member(_) | Role::Direct)
        })
        .collect();

    let mut gateways = Vec::with_capacity(head_nodes.len());
    for ch in &head_nodes {
        let members = members_of[ch.id];
        if members > 0 {
            events.push(EnergyEvent {
                node: ch.id,
                kind: EnergyUse::HeadRx,
                joules: members as f64 * rx_energy(bits, radio),
            });
        }
        events.push(EnergyEvent {
            node: ch.id,
            kind: EnergyUse::Aggregation,
            joules: aggregation_energy(bits, members + 1, radio),
        });
        let relay = protocol.relay_for(ch, &candidates, bs);
        match relay {
            Some(g) => {
                let gw = &nodes[g];
                events.push(EnergyEvent {
                    node: ch.id,
                    kind: EnergyUse::HeadTx,
                    joules: tx_energy(bits, distance(ch.pos, gw.pos), radio),
                });
                events.push(EnergyEvent {
                    node: g,
                    kind: EnergyUse::RelayRx,
                    joules: rx_energy(bits, radio),
                });
                events.push(EnergyEvent {
                    node: g,
                    kind: EnergyUse::RelayTx,
                    joules: tx_energy(bits, distance(gw.pos, bs), radio),
                });
                messages.relayed += 1;
            }
            None => {
                events.push(EnergyEvent {
                    node: ch.id,
                    kind: EnergyUse::HeadTx,
                    joules: tx_energy(bits, distance(ch.pos, bs), radio),
                });
            }
        }
        messages.to_bs += 1;
        gateways.push(GatewayAssignment {
            ch_id: ch.id,
            gateway_id: relay,
        });
    }

    RoundPlan {
        roles,
        gateways,
        events,
        messages,
    }
}

/// State of one simulation run.
#[derive(Debug)]
pub struct Simulation {
    cfg: SimConfig,
    protocol: Box<dyn ClusteringProtocol>,
    params: ElectionParams,
    estimator: Option<NormalEnergyEstimator>,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
    round: u64,
    totals: MessageCounts,
    initial_energy: f64,
    consumed: f64,
}

impl Simulation {
    /// Deploys a network for `cfg` and resolves its protocol from the
    /// built-in registry.
    pub fn new(cfg: &SimConfig) -> Result<Self, ConfigError> {
        Self::with_registry(cfg, &ProtocolRegistry::builtin())
    }

    pub fn with_registry(
        cfg: &SimConfig,
        registry: &ProtocolRegistry,
    ) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let protocol = registry.for_config(cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let nodes = deploy_network(cfg, &mut rng)?;
        Self::from_parts(cfg, protocol, nodes, rng)
    }

    /// Builds a run over an explicit node list and random stream.
    pub fn from_parts(
        cfg: &SimConfig,
        protocol: Box<dyn ClusteringProtocol>,
        nodes: Vec<Node>,
        rng: ChaCha8Rng,
    ) -> Result<Self, ConfigError> {
        cfg.validate()?;
        if let Some(d0) = d0_mismatch(&cfg.radio) {
            debug!("d0 = {} m, crossover = {:.3} m", cfg.radio.d0, d0);
        }
        let params = protocol.election_params(cfg);
        let estimator = match protocol.threshold_rule() {
            ThresholdRule::EnergyWeightedNormal => Some(NormalEnergyEstimator::new(cfg)?),
            ThresholdRule::Rotation => None,
        };
        let initial_energy = nodes.iter().map(|n| n.energy).sum();
        Ok(Self {
            cfg: cfg.clone(),
            protocol,
            params,
            estimator,
            nodes,
            rng,
            round: 0,
            totals: MessageCounts::default(),
            initial_energy,
            consumed: 0.0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn protocol(&self) -> &dyn ClusteringProtocol {
        self.protocol.as_ref()
    }

    pub fn election_params(&self) -> &ElectionParams {
        &self.params
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Rounds completed so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn initial_energy(&self) -> f64 {
        self.initial_energy
    }

    /// Energy removed from batteries so far.
    pub fn consumed_energy(&self) -> f64 {
        self.consumed
    }

    pub fn residual_energy(&self) -> f64 {
        self.nodes.iter().map(|n| n.energy).sum()
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    pub fn is_finished(&self) -> bool {
        self.alive_count() == 0 || self.round >= self.cfg.max_rounds
    }

    /// Estimated mean normal-node energy for election round `r`, when the
    /// protocol uses one.
    pub fn estimated_normal_energy(&self, r: u64) -> Option<f64> {
        self.estimator.map(|e| e.at(r))
    }

    /// Runs one round and returns its record, or `None` once every node
    /// is dead.
    pub fn advance_round(&mut self) -> Option<RoundRecord> {
        self.step().map(|(record, _)| record)
    }

    /// Like [`advance_round`](Self::advance_round) but also returns the
    /// full trace of the round.
    pub fn step(&mut self) -> Option<(RoundRecord, RoundTrace)> {
        if self.alive_count() == 0 {
            return None;
        }
        let r = self.round;
        let e_avg = self.estimated_normal_energy(r).unwrap_or(0.0);
        let election = elect_cluster_heads(
            &mut self.nodes,
            r,
            self.protocol.threshold_rule(),
            &self.params,
            e_avg,
            &mut self.rng,
        );
        let heads = election.cluster_head_ids;
        let plan = plan_round(&self.nodes, &heads, self.protocol.as_ref(), &self.cfg);

        for (node, role) in self.nodes.iter_mut().zip(&plan.roles) {
            node.sleep_count = match role {
                Role::Dead => node.sleep_count,
                Role::ClusterHead => 0,
                Role::Member(ch) => next_sleep_count(node.sleep_count, MemberAction::Join(*ch)),
                Role::Direct => next_sleep_count(node.sleep_count, MemberAction::DirectToBS),
                Role::Sleeping => next_sleep_count(node.sleep_count, MemberAction::Sleep),
            };
        }

        let demand = plan.demand(self.nodes.len());
        let mut drawn = vec![0.0; self.nodes.len()];
        let mut deaths = Vec::new();
        for (node, want) in self.nodes.iter_mut().zip(&demand) {
            if *want == 0.0 {
                continue;
            }
            let before = node.energy;
            let after = before - want;
            if after <= 0.0 {
                node.energy = 0.0;
                node.alive = false;
                deaths.push(node.id);
            } else {
                node.energy = after;
            }
            drawn[node.id] = before - node.energy;
        }
        self.consumed += drawn.iter().sum::<f64>();

        self.totals.to_ch += plan.messages.to_ch;
        self.totals.to_bs += plan.messages.to_bs;
        self.totals.relayed += plan.messages.relayed;
        self.round += 1;

        let record = RoundRecord {
            round: self.round,
            alive_normal: self
                .nodes
                .iter()
                .filter(|n| n.alive && n.kind == NodeKind::Normal)
                .count(),
            alive_advanced: self
                .nodes
                .iter()
                .filter(|n| n.alive && n.kind == NodeKind::Advanced)
                .count(),
            ch_count: heads.len(),
            sleeping: plan.roles.iter().filter(|r| **r == Role::Sleeping).count(),
            residual_total: self.residual_energy(),
            msgs_to_ch: self.totals.to_ch,
            msgs_to_bs: self.totals.to_bs,
            msgs_relayed: self.totals.relayed,
        };
        let trace = RoundTrace {
            election_round: r,
            heads,
            plan,
            drawn,
            deaths,
            sleep_counts: self.nodes.iter().map(|n| n.sleep_count).collect(),
        };
        Some((record, trace))
    }

    /// Runs until every node is dead or `max_rounds` is reached.
    pub fn run(mut self) -> SimOutput {
        let mut records = Vec::new();
        while self.round < self.cfg.max_rounds {
            match self.advance_round() {
                Some(rec) => records.push(rec),
                None => break,
            }
        }
        let summary = if records.is_empty() {
            Summary::without_rounds(self.alive_count() == 0)
        } else {
            summarize(&records, self.nodes.len()).expect("records are non-empty")
        };
        SimOutput { records, summary }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub records: Vec<RoundRecord>,
    pub summary: Summary,
}

/// Deploys, runs to completion and summarizes one configuration.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimOutput, ConfigError> {
    Ok(Simulation::new(cfg)?.run())
}
