//! Multi-seed batches and parameter sweeps.
//!
//! Runs are independent and execute in parallel; results always come back
//! ordered by protocol (as given) and then by seed.

use rayon::prelude::*;

use crate::config::{ConfigError, SimConfig};
use crate::engine::{SimOutput, Simulation};
use crate::metrics::{aggregate_runs, AggregateSummary};
use crate::protocol::ProtocolRegistry;

/// `count` consecutive seeds starting at `start`.
pub fn seed_list(start: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| start.wrapping_add(i)).collect()
}

#[derive(Debug, Clone)]
pub struct ProtocolRuns {
    pub protocol: String,
    pub seeds: Vec<u64>,
    pub outputs: Vec<SimOutput>,
    pub aggregate: AggregateSummary,
}

/// Runs every protocol over the same seed list.
pub fn run_batch(
    base: &SimConfig,
    protocols: &[String],
    seeds: &[u64],
    registry: &ProtocolRegistry,
) -> Result<Vec<ProtocolRuns>, ConfigError> {
    if seeds.is_empty() {
        return Err(ConfigError::Invalid("at least one seed is required".into()));
    }
    base.validate()?;
    for p in protocols {
        if !registry.contains(p) {
            return Err(ConfigError::UnknownProtocol(p.clone()));
        }
    }
    protocols
        .iter()
        .map(|p| {
            let outputs = seeds
                .par_iter()
                .map(|&seed| {
                    let cfg = base.clone().with_protocol(p).with_seed(seed);
                    Simulation::with_registry(&cfg, registry).map(Simulation::run)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let summaries: Vec<_> = outputs.iter().map(|o| o.summary).collect();
            let aggregate = aggregate_runs(&summaries).expect("seed list is non-empty");
            Ok(ProtocolRuns {
                protocol: p.to_ascii_lowercase(),
                seeds: seeds.to_vec(),
                outputs,
                aggregate,
            })
        })
        .collect()
}

/// One `key=v1,v2,...` axis of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl std::str::FromStr for SweepAxis {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, values) = s.split_once('=').ok_or_else(|| {
            ConfigError::Invalid(format!("sweep axis `{s}` is not key=v1,v2,..."))
        })?;
        let values: Vec<String> = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(str::to_string)
            .collect();
        if key.trim().is_empty() || values.is_empty() {
            return Err(ConfigError::Invalid(format!(
                "sweep axis `{s}` has no key or no values"
            )));
        }
        Ok(Self {
            key: key.trim().to_string(),
            values,
        })
    }
}

/// A single point of a sweep: the overridden key/value pairs and the
/// resulting configuration.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub assignments: Vec<(String, String)>,
    pub config: SimConfig,
}

/// Cartesian product of the axes applied to `base`, first axis varying
/// slowest.
pub fn sweep_points(base: &SimConfig, axes: &[SweepAxis]) -> Result<Vec<SweepPoint>, ConfigError> {
    let mut points = vec![SweepPoint {
        assignments: Vec::new(),
        config: base.clone(),
    }];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for point in &points {
            for value in &axis.values {
                let config = point.config.with_override(&axis.key, value)?;
                config.validate()?;
                let mut assignments = point.assignments.clone();
                assignments.push((axis.key.clone(), value.clone()));
                next.push(SweepPoint {
                    assignments,
                    config,
                });
            }
        }
        points = next;
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let a: SweepAxis = "alpha=1, 3,5".parse().unwrap();
        assert_eq!(a.key, "alpha");
        assert_eq!(a.values, ["1", "3", "5"]);
        assert!("alpha".parse::<SweepAxis>().is_err());
        assert!("alpha=".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn cartesian_product_order() {
        let axes: Vec<SweepAxis> = vec![
            "m_frac=0.1,0.2".parse().unwrap(),
            "alpha=1,3,5".parse().unwrap(),
        ];
        let pts = sweep_points(&SimConfig::default(), &axes).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0].config.m_frac, 0.1);
        assert_eq!(pts[0].config.alpha, 1.0);
        assert_eq!(pts[2].config.alpha, 5.0);
        assert_eq!(pts[3].config.m_frac, 0.2);
        assert_eq!(
            pts[5].assignments,
            [
                ("m_frac".to_string(), "0.2".to_string()),
                ("alpha".to_string(), "5".to_string())
            ]
        );
    }

    #[test]
    fn sweep_rejects_unknown_keys_and_invalid_values() {
        let bad: Vec<SweepAxis> = vec!["speed=1".parse().unwrap()];
        assert!(sweep_points(&SimConfig::default(), &bad).is_err());
        let invalid: Vec<SweepAxis> = vec!["m_frac=1.5".parse().unwrap()];
        assert!(sweep_points(&SimConfig::default(), &invalid).is_err());
    }

    #[test]
    fn batch_is_seed_ordered_and_reproducible() {
        let cfg = SimConfig {
            max_rounds: 200,
            ..SimConfig::case1()
        };
        let reg = ProtocolRegistry::builtin();
        let protocols = vec!["sep".to_string(), "eacp".to_string()];
        let seeds = seed_list(10, 4);
        let a = run_batch(&cfg, &protocols, &seeds, &reg).unwrap();
        let b = run_batch(&cfg, &protocols, &seeds, &reg).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].protocol, "sep");
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.outputs, y.outputs);
        }
        for (i, &seed) in seeds.iter().enumerate() {
            let single =
                crate::engine::run_simulation(&cfg.clone().with_protocol("eacp").with_seed(seed))
                    .unwrap();
            assert_eq!(single, a[1].outputs[i]);
        }
    }

    #[test]
    fn batch_rejects_unknown_protocol() {
        let reg = ProtocolRegistry::builtin();
        let err = run_batch(&SimConfig::default(), &["teen".to_string()], &[1], &reg).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownProtocol(_)));
        assert!(run_batch(&SimConfig::default(), &["sep".to_string()], &[], &reg).is_err());
    }
}
