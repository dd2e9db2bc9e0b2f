//! Decision rules mapping an observation to a catalog index: the trained
//! network and the three fixed baselines.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::dqn::argmax;
use super::network::QNetwork;
use crate::environment::{ActionCatalog, ActionVector, DeviceAction, Observation, UavMove};
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Dqn,
    Random,
    UavHeavy,
    CloudHeavy,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Dqn,
        PolicyKind::Random,
        PolicyKind::UavHeavy,
        PolicyKind::CloudHeavy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Dqn => "dqn",
            PolicyKind::Random => "random",
            PolicyKind::UavHeavy => "uav_heavy",
            PolicyKind::CloudHeavy => "cloud_heavy",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dqn" => Ok(PolicyKind::Dqn),
            "random" => Ok(PolicyKind::Random),
            "uav_heavy" | "uav" => Ok(PolicyKind::UavHeavy),
            "cloud_heavy" | "cloud" => Ok(PolicyKind::CloudHeavy),
            other => Err(SimError::invalid("policy", format!("unknown policy `{other}`"))),
        }
    }
}

fn fixed_action(catalog: &ActionCatalog, per_device: DeviceAction) -> Result<usize> {
    let devices = catalog.get(0).map_or(0, |a| a.devices.len());
    let action = ActionVector {
        devices: vec![per_device; devices],
        uav_move: UavMove::Stay,
    };
    catalog.index_of(&action).ok_or_else(|| {
        SimError::invalid("action_levels", "baseline policies need the levels 0.3 and 0.6")
    })
}

/// Catalog index of a fixed baseline. The random baseline has none.
pub fn baseline_index(kind: PolicyKind, catalog: &ActionCatalog) -> Result<Option<usize>> {
    let idx = match kind {
        PolicyKind::UavHeavy => fixed_action(
            catalog,
            DeviceAction {
                x_uav: 0.6,
                x_cloud: 0.3,
                w_uav: 0.6,
                w_cloud: 0.3,
            },
        )?,
        PolicyKind::CloudHeavy => fixed_action(
            catalog,
            DeviceAction {
                x_uav: 0.6,
                x_cloud: 0.6,
                w_uav: 0.3,
                w_cloud: 0.6,
            },
        )?,
        PolicyKind::Random => return Ok(None),
        PolicyKind::Dqn => {
            return Err(SimError::invalid("policy", "dqn is not a baseline"));
        }
    };
    Ok(Some(idx))
}

/// Baseline decision for one interval.
pub fn baseline_action<R: Rng + ?Sized>(
    kind: PolicyKind,
    catalog: &ActionCatalog,
    rng: &mut R,
) -> Result<usize> {
    match baseline_index(kind, catalog)? {
        Some(i) => Ok(i),
        None => Ok(rng.random_range(0..catalog.len())),
    }
}

/// A ready-to-run policy. The DQN variant is greedy over a frozen network and
/// memoises its decision per observation.
#[derive(Debug, Clone)]
pub enum Policy {
    Dqn {
        net: QNetwork,
        memo: HashMap<Vec<u64>, usize>,
    },
    Random {
        catalog_size: usize,
    },
    Fixed {
        kind: PolicyKind,
        index: usize,
    },
}

impl Policy {
    pub fn baseline(kind: PolicyKind, catalog: &ActionCatalog) -> Result<Self> {
        Ok(match baseline_index(kind, catalog)? {
            Some(index) => Policy::Fixed { kind, index },
            None => Policy::Random {
                catalog_size: catalog.len(),
            },
        })
    }

    pub fn greedy(net: QNetwork, catalog: &ActionCatalog) -> Result<Self> {
        if net.output_width() != catalog.len() {
            return Err(SimError::DimensionMismatch {
                expected: catalog.len(),
                got: net.output_width(),
            });
        }
        Ok(Policy::Dqn {
            net,
            memo: HashMap::new(),
        })
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Dqn { .. } => PolicyKind::Dqn,
            Policy::Random { .. } => PolicyKind::Random,
            Policy::Fixed { kind, .. } => *kind,
        }
    }

    pub fn act<R: Rng + ?Sized>(&mut self, obs: &Observation, rng: &mut R) -> Result<usize> {
        match self {
            Policy::Dqn { net, memo } => {
                let x = obs.features();
                let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
                if let Some(&a) = memo.get(&key) {
                    return Ok(a);
                }
                let a = argmax(&net.forward(&x)?);
                memo.insert(key, a);
                Ok(a)
            }
            Policy::Random { catalog_size } => Ok(rng.random_range(0..*catalog_size)),
            Policy::Fixed { index, .. } => Ok(*index),
        }
    }
}
