//! Clustering protocols as interchangeable strategies.
//!
//! The engine owns the round loop and the energy accounting; a protocol
//! only answers the questions where LEACH, SEP and EACP differ: election
//! probabilities, how thresholds are weighted, what a non-head node does,
//! and whether a normal head may relay through a gateway.

use std::collections::BTreeMap;
use std::fmt::Debug;

use crate::config::{ConfigError, RadioParams, SimConfig};
use crate::election::{ElectionParams, ThresholdRule};
use crate::net::{Node, NodeId, NodeKind, Position};
use crate::routing::{self, MemberAction};

pub trait ClusteringProtocol: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn election_params(&self, cfg: &SimConfig) -> ElectionParams;

    fn threshold_rule(&self) -> ThresholdRule {
        ThresholdRule::Rotation
    }

    /// Action of an alive non-head node given its nearest head.
    fn member_action(
        &self,
        _node: &Node,
        nearest_ch: &Node,
        _bs: Position,
        _radio: &RadioParams,
    ) -> MemberAction {
        MemberAction::Join(nearest_ch.id)
    }

    /// Action of an alive node in a round where nobody was elected.
    fn headless_action(&self, _node: &Node) -> MemberAction {
        MemberAction::DirectToBS
    }

    /// Relay for a head's aggregated packet, if the protocol uses one.
    /// `candidates` are alive, awake, non-head advanced nodes.
    fn relay_for(&self, _ch: &Node, _candidates: &[&Node], _bs: Position) -> Option<NodeId> {
        None
    }
}

/// Low-energy adaptive clustering: one probability for every node.
#[derive(Debug, Clone, Copy, Default)]
pub struct Leach;

impl ClusteringProtocol for Leach {
    fn name(&self) -> &'static str {
        "leach"
    }

    fn election_params(&self, cfg: &SimConfig) -> ElectionParams {
        ElectionParams::uniform(cfg.p_opt)
    }
}

/// Stable election: probabilities weighted by initial energy class.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sep;

impl ClusteringProtocol for Sep {
    fn name(&self) -> &'static str {
        "sep"
    }

    fn election_params(&self, cfg: &SimConfig) -> ElectionParams {
        ElectionParams::weighted(cfg.p_opt, cfg.m_frac, cfg.alpha)
    }
}

/// Energy-aware clustering: SEP weighting, residual-energy scaled normal
/// thresholds, gateway relay for normal heads and bounded member sleep.
#[derive(Debug, Clone, Copy)]
pub struct Eacp {
    /// `None` disables member sleep; every member joins its nearest head.
    pub sleep_cap: Option<u32>,
}

impl Eacp {
    pub fn from_config(cfg: &SimConfig) -> Self {
        Self {
            sleep_cap: cfg.member_sleep.then_some(cfg.sleep_cap),
        }
    }
}

impl ClusteringProtocol for Eacp {
    fn name(&self) -> &'static str {
        "eacp"
    }

    fn election_params(&self, cfg: &SimConfig) -> ElectionParams {
        ElectionParams::weighted(cfg.p_opt, cfg.m_frac, cfg.alpha)
    }

    fn threshold_rule(&self) -> ThresholdRule {
        ThresholdRule::EnergyWeightedNormal
    }

    fn member_action(
        &self,
        node: &Node,
        nearest_ch: &Node,
        bs: Position,
        radio: &RadioParams,
    ) -> MemberAction {
        match self.sleep_cap {
            Some(cap) => routing::member_action(node, nearest_ch, bs, radio, cap),
            None => MemberAction::Join(nearest_ch.id),
        }
    }

    fn headless_action(&self, node: &Node) -> MemberAction {
        match self.sleep_cap {
            Some(cap) if node.is_sleeping() => routing::unfavorable_action(node.sleep_count, cap),
            _ => MemberAction::DirectToBS,
        }
    }

    fn relay_for(&self, ch: &Node, candidates: &[&Node], bs: Position) -> Option<NodeId> {
        if ch.kind != NodeKind::Normal {
            return None;
        }
        routing::select_gateway(ch, candidates.iter().copied(), bs)
    }
}

pub type ProtocolFactory = fn(&SimConfig) -> Box<dyn ClusteringProtocol>;

/// Name-indexed protocol constructors.
#[derive(Debug, Clone)]
pub struct ProtocolRegistry {
    factories: BTreeMap<String, ProtocolFactory>,
}

impl Default for ProtocolRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl ProtocolRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// Registry holding `leach`, `sep` and `eacp`.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("leach", |_| Box::new(Leach));
        reg.register("sep", |_| Box::new(Sep));
        reg.register("eacp", |cfg| Box::new(Eacp::from_config(cfg)));
        reg
    }

    /// Registers `factory` under `name` (case-insensitive), replacing any
    /// previous entry.
    pub fn register(&mut self, name: &str, factory: ProtocolFactory) {
        self.factories.insert(name.to_ascii_lowercase(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(&name.to_ascii_lowercase())
    }

    pub fn create(
        &self,
        name: &str,
        cfg: &SimConfig,
    ) -> Result<Box<dyn ClusteringProtocol>, ConfigError> {
        self.factories
            .get(&name.to_ascii_lowercase())
            .map(|f| f(cfg))
            .ok_or_else(|| ConfigError::UnknownProtocol(name.to_string()))
    }

    /// Instantiates the protocol named in `cfg.protocol`.
    pub fn for_config(&self, cfg: &SimConfig) -> Result<Box<dyn ClusteringProtocol>, ConfigError> {
        self.create(&cfg.protocol, cfg)
    }
}
