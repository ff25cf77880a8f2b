//! Post-election routing decisions: gateway relay for normal cluster heads
//! and the member join / sleep / direct-transmission choice.

use serde::{Deserialize, Serialize};

use crate::config::RadioParams;
use crate::energy::tx_energy;
use crate::net::{distance, Node, NodeId, Position};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemberAction {
    Join(NodeId),
    Sleep,
    DirectToBS,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayAssignment {
    pub ch_id: NodeId,
    pub gateway_id: Option<NodeId>,
}

/// Picks the relay for a normal cluster head.
///
/// `candidates` must already be restricted to alive, awake, advanced nodes
/// that are not heads this round. Only candidates strictly closer to the
/// head than the base station qualify; the nearest wins, ties to the lowest
/// id.
pub fn select_gateway<'a, I>(ch: &Node, candidates: I, bs: Position) -> Option<NodeId>
where
    I: IntoIterator<Item = &'a Node>,
{
    let d_bs = distance(ch.pos, bs);
    candidates
        .into_iter()
        .filter(|c| c.id != ch.id)
        .map(|c| (distance(ch.pos, c.pos), c.id))
        .filter(|&(d, _)| d < d_bs)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

/// Decides what a non-head node does this round given its nearest head.
///
/// Joining costs `E1 = tx(L, d(node, ch))`, direct delivery costs
/// `E2 = tx(L, d(node, bs))`. Ties join.
pub fn member_action(
    node: &Node,
    nearest_ch: &Node,
    bs: Position,
    radio: &RadioParams,
    sleep_cap: u32,
) -> MemberAction {
    let join_cost = tx_energy(radio.packet_bits, distance(node.pos, nearest_ch.pos), radio);
    let direct_cost = tx_energy(radio.packet_bits, distance(node.pos, bs), radio);
    if join_cost <= direct_cost {
        MemberAction::Join(nearest_ch.id)
    } else {
        unfavorable_action(node.sleep_count, sleep_cap)
    }
}

/// Action for a node that has no favourable cluster to join.
pub fn unfavorable_action(sleep_count: u32, sleep_cap: u32) -> MemberAction {
    if sleep_count < sleep_cap {
        MemberAction::Sleep
    } else {
        MemberAction::DirectToBS
    }
}

/// Sleep counter after taking `action`.
pub fn next_sleep_count(current: u32, action: MemberAction) -> u32 {
    match action {
        MemberAction::Sleep => current + 1,
        MemberAction::Join(_) | MemberAction::DirectToBS => 0,
    }
}
