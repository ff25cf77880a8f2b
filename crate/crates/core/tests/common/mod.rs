//! Run checkers shared by the integration suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use wsn_sim::engine::{plan_round, Role};
use wsn_sim::net::distance;
use wsn_sim::protocol::Sep;
use wsn_sim::{NodeKind, SimConfig, Simulation};

macro_rules! ensure {
    ($cond:expr $(,)?) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!("{} failed at {}:{}", stringify!($cond), file!(), line!()));
        }
    }};
    ($cond:expr, $($fmt:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    }};
}

macro_rules! ensure_eq {
    ($a:expr, $b:expr $(,)?) => {
        ensure!(($a) == ($b), "{} != {} ({:?} vs {:?})", stringify!($a), stringify!($b), $a, $b)
    };
    ($a:expr, $b:expr, $($fmt:tt)+) => {
        ensure!(($a) == ($b), $($fmt)+)
    };
}

/// Steps one run to the end, checking conservation, monotonicity, epoch
/// exclusivity, the sleep cap, role exclusivity, gateway rules and that
/// dead nodes stay inert.
pub fn check_run(cfg: &SimConfig) -> Result<(), String> {
    let ctx = format!(
        "{} seed {} m {} alpha {}",
        cfg.protocol, cfg.seed, cfg.m_frac, cfg.alpha
    );
    let mut sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
    let initial = sim.initial_energy();
    let params = *sim.election_params();
    let cap = if cfg.protocol == "eacp" {
        cfg.sleep_cap
    } else {
        0
    };
    let bs = cfg.bs();

    let mut drawn_total = 0.0;
    let mut prev_alive = cfg.n;
    let mut prev_residual = initial;
    let mut prev_round = 0;
    // (node, epoch index) pairs that already produced a head
    let mut served: BTreeSet<(usize, u64)> = BTreeSet::new();
    let mut asleep_streak = vec![0u32; cfg.n];

    while sim.round() < cfg.max_rounds {
        let before = sim.nodes().to_vec();
        let Some((rec, trace)) = sim.step() else {
            break;
        };

        ensure_eq!(rec.round, prev_round + 1, "{ctx}");
        prev_round = rec.round;
        ensure!(
            rec.alive_total() <= prev_alive,
            "{ctx}: alive count grew at round {}",
            rec.round
        );
        ensure!(
            rec.residual_total <= prev_residual,
            "{ctx}: residual grew at round {}",
            rec.round
        );
        ensure!(rec.residual_total >= 0.0);
        prev_alive = rec.alive_total();
        prev_residual = rec.residual_total;

        drawn_total += trace.drawn.iter().sum::<f64>();
        let err = (initial - (rec.residual_total + drawn_total)).abs();
        ensure!(
            err <= 1e-9 * initial,
            "{ctx}: conservation off by {err} at round {}",
            rec.round
        );

        let r = trace.election_round;
        for &h in &trace.heads {
            let node = &before[h];
            ensure!(node.alive, "{ctx}: dead node {h} elected");
            let epoch = params.epoch(node.kind);
            ensure!(
                served.insert((h, r / epoch)),
                "{ctx}: node {h} elected twice in one epoch"
            );
        }

        let mut members = 0;
        for (id, role) in trace.plan.roles.iter().enumerate() {
            let was_alive = before[id].alive;
            ensure_eq!(
                *role == Role::Dead,
                !was_alive,
                "{ctx}: node {id} role {role:?} alive {was_alive}"
            );
            ensure_eq!(
                *role == Role::ClusterHead,
                trace.heads.contains(&id),
                "{ctx}"
            );
            match role {
                Role::Member(ch) => {
                    ensure!(trace.heads.contains(ch), "{ctx}: member of non-head {ch}");
                    members += 1;
                }
                Role::Sleeping => ensure_eq!(
                    trace.drawn[id],
                    0.0,
                    "{ctx}: sleeping node {id} spent energy"
                ),
                Role::Dead => {
                    ensure_eq!(trace.drawn[id], 0.0, "{ctx}: dead node {id} spent energy")
                }
                _ => {}
            }
            asleep_streak[id] = if *role == Role::Sleeping {
                asleep_streak[id] + 1
            } else {
                0
            };
            ensure!(
                asleep_streak[id] <= cap,
                "{ctx}: node {id} slept {} rounds",
                asleep_streak[id]
            );
            ensure!(trace.sleep_counts[id] <= cap, "{ctx}");
        }
        for e in &trace.plan.events {
            ensure!(
                before[e.node].alive,
                "{ctx}: dead node {} has {:?}",
                e.node,
                e.kind
            );
            ensure!(e.joules > 0.0);
        }
        ensure_eq!(trace.plan.messages.to_ch, members);

        let mut relays = BTreeMap::new();
        for g in &trace.plan.gateways {
            let Some(gw) = g.gateway_id else { continue };
            ensure!(trace.heads.contains(&g.ch_id));
            let ch = &before[g.ch_id];
            let node = &before[gw];
            ensure_eq!(ch.kind, NodeKind::Normal, "{ctx}");
            ensure_eq!(node.kind, NodeKind::Advanced, "{ctx}");
            ensure!(
                node.alive && !trace.heads.contains(&gw),
                "{ctx}: gateway {gw} is dead or a head"
            );
            ensure!(
                matches!(trace.plan.roles[gw], Role::Member(_) | Role::Direct),
                "{ctx}"
            );
            ensure!(
                distance(ch.pos, node.pos) < distance(ch.pos, bs),
                "{ctx}: gateway does not shorten the hop"
            );
            *relays.entry(gw).or_insert(0u64) += 1;
        }
        ensure_eq!(trace.plan.messages.relayed, relays.values().sum::<u64>());
        if cfg.protocol != "eacp" {
            ensure!(relays.is_empty());
        }

        for &d in &trace.deaths {
            ensure!(!sim.nodes()[d].alive && sim.nodes()[d].energy == 0.0);
        }
    }
    ensure!(sim.round() == cfg.max_rounds || sim.alive_count() == 0);
    Ok(())
}

/// Steps an EACP run and replays every round's heads through SEP's
/// planner on the same node states; roles, deductions and message counts
/// must agree.
pub fn check_matches_sep(cfg: &SimConfig, rounds: u64) -> Result<u64, String> {
    let mut sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
    let mut compared = 0;
    while sim.round() < rounds {
        let before = sim.nodes().to_vec();
        let Some((_, trace)) = sim.step() else { break };
        let sep = plan_round(&before, &trace.heads, &Sep, cfg);
        let r = trace.election_round;
        ensure_eq!(
            trace.plan.roles,
            sep.roles,
            "seed {} round {r}: roles differ",
            cfg.seed
        );
        ensure_eq!(
            trace.plan.events,
            sep.events,
            "seed {} round {r}: deductions differ",
            cfg.seed
        );
        ensure_eq!(
            trace.plan.messages,
            sep.messages,
            "seed {} round {r}: messages differ",
            cfg.seed
        );
        compared += 1;
    }
    Ok(compared)
}
