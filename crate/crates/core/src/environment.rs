//! The MDP wrapper around the network model.
//!
//! One [`Environment`] owns one episode: per-device queues, the UAV position,
//! the PDE accumulator and the random stream that drives channels and
//! arrivals. Actions are indices into a joint [`ActionCatalog`] enumerating
//! every combination of per-device fractions and a shared UAV move.
//!
//! The random stream is consumed identically whatever the actions are (two
//! normals per device for the channel, then one uniform per device for the
//! arrival), so two policies run from the same seed see the same channels and
//! the same arrivals.

use std::sync::Arc;

use crate::channel::{channel_gain, distance, Position2D, ServiceArea};
use crate::computation::{comp_delay, CpuAllocation, DelayBreakdown};
use crate::config::SimConfig;
use crate::error::{Result, SimError};
use crate::objective::{
    check_feasibility, reward, DeviceDecision, DeviceHistory, FeasibilityReport, PdeAccumulator,
    RewardWeights, UavLeg,
};
use crate::phy_link::{cloud_comm_delay, total_comm_delay, uplink_comm_delay, uplink_rates, UplinkSnapshot};
use crate::queueing::{compute_splits, draw_arrival, QueueTriple, SplitAmounts};
use crate::rng::{self, SimRng};

/// Number of discrete levels per queue in the observation.
pub const QUEUE_LEVELS: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UavMove {
    Stay,
    PosX,
    NegX,
    PosY,
    NegY,
}

impl UavMove {
    pub const ALL: [UavMove; 5] = [
        UavMove::Stay,
        UavMove::PosX,
        UavMove::NegX,
        UavMove::PosY,
        UavMove::NegY,
    ];

    fn direction(self) -> (f64, f64) {
        match self {
            UavMove::Stay => (0.0, 0.0),
            UavMove::PosX => (1.0, 0.0),
            UavMove::NegX => (-1.0, 0.0),
            UavMove::PosY => (0.0, 1.0),
            UavMove::NegY => (0.0, -1.0),
        }
    }

    fn index(self) -> usize {
        Self::ALL.iter().position(|&m| m == self).unwrap()
    }

    /// Apply the move with step `step`, clipped to the area.
    pub fn apply(self, from: Position2D, step: f64, area: &ServiceArea) -> Position2D {
        let (dx, dy) = self.direction();
        area.clamp(Position2D::new(from.x + dx * step, from.y + dy * step))
    }
}

/// Per-device controllable fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceAction {
    pub x_uav: f64,
    pub x_cloud: f64,
    pub w_uav: f64,
    pub w_cloud: f64,
}

/// One joint decision for all devices plus the UAV move.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionVector {
    pub devices: Vec<DeviceAction>,
    pub uav_move: UavMove,
}

/// Lexicographic enumeration of all joint actions.
///
/// Index layout: device 0's combination is the most significant digit, the UAV
/// move the least significant. Within a device the fraction order is
/// `(x_uav, x_cloud, w_uav, w_cloud)`, `x_uav` most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionCatalog {
    levels: Vec<f64>,
    devices: usize,
    actions: Vec<ActionVector>,
}

impl ActionCatalog {
    pub fn new(levels: &[f64], devices: usize, cap: usize) -> Result<Self> {
        let l = levels.len() as u128;
        let per_device = l.pow(4);
        let size = per_device
            .checked_pow(devices as u32)
            .and_then(|s| s.checked_mul(UavMove::ALL.len() as u128))
            .unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(SimError::CatalogTooLarge { size, cap });
        }
        let size = size as usize;
        let per_device = per_device as usize;
        let moves = UavMove::ALL.len();
        let mut actions = Vec::with_capacity(size);
        for index in 0..size {
            let mut rest = index / moves;
            let mut devs = vec![None; devices];
            for k in (0..devices).rev() {
                let combo = rest % per_device;
                rest /= per_device;
                devs[k] = Some(Self::decode_device(levels, combo));
            }
            actions.push(ActionVector {
                devices: devs.into_iter().map(Option::unwrap).collect(),
                uav_move: UavMove::ALL[index % moves],
            });
        }
        Ok(Self {
            levels: levels.to_vec(),
            devices,
            actions,
        })
    }

    fn decode_device(levels: &[f64], combo: usize) -> DeviceAction {
        let l = levels.len();
        DeviceAction {
            x_uav: levels[combo / (l * l * l) % l],
            x_cloud: levels[combo / (l * l) % l],
            w_uav: levels[combo / l % l],
            w_cloud: levels[combo % l],
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&ActionVector> {
        self.actions.get(index)
    }

    pub fn actions(&self) -> &[ActionVector] {
        &self.actions
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    fn level_index(&self, v: f64) -> Option<usize> {
        self.levels.iter().position(|&l| l == v)
    }

    /// Catalog index of an action, if it is representable.
    pub fn index_of(&self, action: &ActionVector) -> Option<usize> {
        if action.devices.len() != self.devices {
            return None;
        }
        let l = self.levels.len();
        let mut index = 0usize;
        for d in &action.devices {
            let mut combo = 0usize;
            for v in [d.x_uav, d.x_cloud, d.w_uav, d.w_cloud] {
                combo = combo * l + self.level_index(v)?;
            }
            index = index * l.pow(4) + combo;
        }
        Some(index * UavMove::ALL.len() + action.uav_move.index())
    }
}

/// Enumerate the joint action space for a configuration.
pub fn action_catalog(cfg: &SimConfig) -> Result<ActionCatalog> {
    ActionCatalog::new(&cfg.action_levels, cfg.num_devices, cfg.catalog_cap)
}

/// Discretize one backlog into `0..QUEUE_LEVELS`.
pub fn queue_level(q: f64, q_cap: f64) -> u8 {
    let top = QUEUE_LEVELS - 1;
    let l = (f64::from(QUEUE_LEVELS) * q / q_cap).floor();
    if l >= f64::from(top) {
        top
    } else if l <= 0.0 {
        0
    } else {
        l as u8
    }
}

/// What the agent sees.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Three levels per device: local, UAV, cloud.
    pub levels: Vec<u8>,
    pub raw: Vec<QueueTriple>,
    /// UAV position normalised to `[0, 1]^2`, when observed.
    pub uav: Option<(f64, f64)>,
}

impl Observation {
    /// Network input: levels scaled to `[0, 1]`, then UAV coordinates.
    pub fn features(&self) -> Vec<f64> {
        let top = f64::from(QUEUE_LEVELS - 1);
        let mut f: Vec<f64> = self.levels.iter().map(|&l| f64::from(l) / top).collect();
        if let Some((x, y)) = self.uav {
            f.push(x);
            f.push(y);
        }
        f
    }

    pub fn width(&self) -> usize {
        self.levels.len() + if self.uav.is_some() { 2 } else { 0 }
    }
}

/// Observation width for a configuration.
pub fn observation_width(cfg: &SimConfig) -> usize {
    3 * cfg.num_devices + if cfg.observe_uav_position { 2 } else { 0 }
}

/// Discretize the episode state.
pub fn observe(state: &EpisodeState, cfg: &SimConfig) -> Observation {
    let cap = cfg.q_cap();
    let levels = state
        .queues
        .iter()
        .flat_map(|q| q.as_array().map(|v| queue_level(v, cap)))
        .collect();
    let uav = cfg
        .observe_uav_position
        .then(|| (state.uav.x / cfg.area_width, state.uav.y / cfg.area_height));
    Observation {
        levels,
        raw: state.queues.clone(),
        uav,
    }
}

/// Device placement. Random layouts are drawn uniformly over the area.
pub fn device_layout(cfg: &SimConfig, seed: u64) -> Vec<Position2D> {
    match &cfg.device_positions {
        Some(ps) => ps.clone(),
        None => {
            let mut rng = rng::stream(seed);
            let area = cfg.area();
            (0..cfg.num_devices).map(|_| area.sample(&mut rng)).collect()
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeState {
    pub interval: usize,
    pub queues: Vec<QueueTriple>,
    pub uav: Position2D,
    pub acc: PdeAccumulator,
    pub rng: SimRng,
}

/// Per-device outputs of one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceInterval {
    /// Backlogs at the start of the interval.
    pub queues: QueueTriple,
    pub splits: SplitAmounts,
    pub arrival: f64,
    pub power_gain: f64,
    pub sinr: f64,
    pub rate: f64,
    pub delays: DelayBreakdown,
    pub t_comm: f64,
    pub b_tot: f64,
    pub eta: bool,
    /// Cumulative history before this interval, as used by the reward.
    pub history: DeviceHistory,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRecord {
    pub interval: usize,
    pub uav_from: Position2D,
    pub uav_to: Position2D,
    pub devices: Vec<DeviceInterval>,
    pub feasibility: FeasibilityReport,
    pub reward: f64,
}

impl IntervalRecord {
    /// Recompute the interval reward from the stored quantities.
    pub fn recompute_reward(&self, weights: &RewardWeights) -> f64 {
        self.devices
            .iter()
            .map(|d| reward(&d.queues, &d.splits, d.t_comm, &d.history, weights, d.eta))
            .sum()
    }

    pub fn comm_delay(&self) -> f64 {
        self.devices.iter().map(|d| d.t_comm).sum()
    }

    pub fn processed(&self) -> f64 {
        self.devices.iter().map(|d| d.b_tot).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub observation: Observation,
    pub action: usize,
    pub reward: f64,
    pub next_observation: Observation,
    pub done: bool,
    pub record: IntervalRecord,
}

pub struct Environment {
    cfg: SimConfig,
    catalog: Arc<ActionCatalog>,
    devices: Vec<Position2D>,
    cpu: CpuAllocation,
    weights: RewardWeights,
    state: EpisodeState,
}

impl Environment {
    pub fn new(cfg: &SimConfig, devices: Vec<Position2D>) -> Result<Self> {
        let catalog = Arc::new(action_catalog(cfg)?);
        Self::with_catalog(cfg, devices, catalog)
    }

    /// Build an environment sharing an existing catalog.
    pub fn with_catalog(
        cfg: &SimConfig,
        devices: Vec<Position2D>,
        catalog: Arc<ActionCatalog>,
    ) -> Result<Self> {
        if devices.len() != cfg.num_devices {
            return Err(SimError::DimensionMismatch {
                expected: cfg.num_devices,
                got: devices.len(),
            });
        }
        let mut env = Self {
            cpu: cfg.cpu_allocation(),
            weights: cfg.reward_weights(),
            state: Self::fresh_state(cfg, 0),
            cfg: cfg.clone(),
            catalog,
            devices,
        };
        env.reset(0);
        Ok(env)
    }

    fn fresh_state(cfg: &SimConfig, seed: u64) -> EpisodeState {
        EpisodeState {
            interval: 0,
            queues: vec![QueueTriple::default(); cfg.num_devices],
            uav: cfg.area().center(),
            acc: PdeAccumulator::new(cfg.num_devices),
            rng: rng::stream(seed),
        }
    }

    /// Start a new episode driven by `seed`.
    pub fn reset(&mut self, seed: u64) -> Observation {
        self.state = Self::fresh_state(&self.cfg, seed);
        self.observe()
    }

    pub fn observe(&self) -> Observation {
        observe(&self.state, &self.cfg)
    }

    pub fn state(&self) -> &EpisodeState {
        &self.state
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn catalog(&self) -> &Arc<ActionCatalog> {
        &self.catalog
    }

    pub fn devices(&self) -> &[Position2D] {
        &self.devices
    }

    pub fn is_done(&self) -> bool {
        self.state.interval >= self.cfg.intervals
    }

    /// Advance one interval under catalog action `index`.
    pub fn step(&mut self, index: usize) -> Result<TransitionRecord> {
        if self.is_done() {
            return Err(SimError::EpisodeFinished(self.state.interval));
        }
        let action = self
            .catalog
            .get(index)
            .ok_or(SimError::ActionOutOfRange {
                index,
                size: self.catalog.len(),
            })?
            .clone();
        let observation = self.observe();
        let cfg = &self.cfg;
        let k_devices = cfg.num_devices;
        let n = self.state.interval;

        // UAV motion
        let area = cfg.area();
        let uav_from = self.state.uav;
        let uav_to = action.uav_move.apply(uav_from, cfg.uav_step(), &area);

        // channels, SINR and rates at the new position
        let params = cfg.channel_params();
        let power_gains: Vec<f64> = self
            .devices
            .iter()
            .map(|dev| {
                let d = distance(uav_to, *dev, params.altitude);
                channel_gain(d, &params, &mut self.state.rng).power_gain
            })
            .collect();
        let snapshot = UplinkSnapshot::new(power_gains.clone(), vec![cfg.tx_power; k_devices]);
        let budget = cfg.link_budget();
        let (sinrs, rates) = uplink_rates(&snapshot, &budget);

        // splits, delays, deadline indicators
        let mut splits = Vec::with_capacity(k_devices);
        let mut delays = Vec::with_capacity(k_devices);
        for (k, dev) in action.devices.iter().enumerate() {
            let q = &self.state.queues[k];
            let s = compute_splits(q, dev.x_uav, dev.x_cloud, cfg.w_local, dev.w_uav, dev.w_cloud);
            let b = DelayBreakdown::new(
                comp_delay(s.b_local, self.cpu.local, cfg.cycles_per_bit),
                uplink_comm_delay(s.d_uav, rates[k]),
                comp_delay(s.b_uav, self.cpu.uav, cfg.cycles_per_bit),
                cloud_comm_delay(dev.x_cloud, budget.install_delay),
                comp_delay(s.b_cloud, self.cpu.cloud, cfg.cycles_per_bit),
            );
            splits.push(s);
            delays.push(b);
        }
        let decisions: Vec<DeviceDecision> = action
            .devices
            .iter()
            .map(|d| DeviceDecision {
                tx_power: cfg.tx_power,
                x_uav: d.x_uav,
                x_cloud: d.x_cloud,
                w_local: cfg.w_local,
                w_uav: d.w_uav,
                w_cloud: d.w_cloud,
                cpu: self.cpu,
            })
            .collect();
        let leg = UavLeg {
            interval: n,
            from: uav_from,
            to: uav_to,
        };
        let totals: Vec<f64> = delays.iter().map(|d| d.t_total).collect();
        let feasibility = check_feasibility(&decisions, &leg, &totals, &cfg.feasibility_limits());

        // rewards against the history before this interval
        let mut device_records = Vec::with_capacity(k_devices);
        for k in 0..k_devices {
            let q = self.state.queues[k];
            let s = splits[k];
            let t_comm = total_comm_delay(delays[k].t_uplink_comm, delays[k].t_cloud_comm);
            let history = self.state.acc.device(k);
            let eta = feasibility.eta[k];
            let r = reward(&q, &s, t_comm, &history, &self.weights, eta);
            device_records.push(DeviceInterval {
                queues: q,
                splits: s,
                arrival: 0.0,
                power_gain: power_gains[k],
                sinr: sinrs[k],
                rate: rates[k],
                delays: delays[k],
                t_comm,
                b_tot: s.processed(),
                eta,
                history,
                reward: r,
            });
        }
        let total_reward: f64 = device_records.iter().map(|d| d.reward).sum();

        // queue updates with fresh arrivals
        let arrivals = cfg.arrival_process();
        for (k, rec) in device_records.iter_mut().enumerate() {
            let a = draw_arrival(&mut self.state.rng, &arrivals);
            rec.arrival = a;
            self.state.queues[k] = rec.queues.advance(&rec.splits, a);
        }

        let processed: Vec<f64> = device_records.iter().map(|d| d.b_tot).collect();
        let comm: Vec<f64> = device_records.iter().map(|d| d.t_comm).collect();
        self.state.acc.record(&processed, &comm);
        self.state.uav = uav_to;
        self.state.interval += 1;

        Ok(TransitionRecord {
            observation,
            action: index,
            reward: total_reward,
            next_observation: self.observe(),
            done: self.is_done(),
            record: IntervalRecord {
                interval: n,
                uav_from,
                uav_to,
                devices: device_records,
                feasibility,
                reward: total_reward,
            },
        })
    }
}
