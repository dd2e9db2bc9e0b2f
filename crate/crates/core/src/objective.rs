//! Processed-data accounting, processed-data efficiency (PDE), the
//! drift-plus-penalty objective, the per-device reward and the constraint
//! checker.
//!
//! PDE is a ratio of cumulative processed bits to cumulative communication
//! delay. An empty history, or one with zero delay and zero data, has PDE 0;
//! data with zero delay has PDE `+inf`.

use crate::channel::{Position2D, ServiceArea};
use crate::computation::CpuAllocation;
use crate::queueing::{QueueTriple, SplitAmounts};

/// Bits processed for one device in one interval, summed over the three tiers.
pub fn processed_total(b_local: f64, b_uav: f64, b_cloud: f64) -> f64 {
    b_local + b_uav + b_cloud
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Cumulative processed bits and communication delay of one device.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeviceHistory {
    pub processed: f64,
    pub comm_delay: f64,
}

impl DeviceHistory {
    /// Historical per-device PDE as used inside the reward: 0 while the device
    /// has no delay history.
    pub fn pde(&self) -> f64 {
        if self.comm_delay > 0.0 {
            self.processed / self.comm_delay
        } else {
            0.0
        }
    }
}

/// Running sums behind the long- and short-term PDE.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PdeAccumulator {
    cum_processed: f64,
    cum_comm_delay: f64,
    devices: Vec<DeviceHistory>,
    /// System-wide `(processed, comm delay)` per recorded interval.
    history: Vec<(f64, f64)>,
}

impl PdeAccumulator {
    pub fn new(devices: usize) -> Self {
        Self {
            devices: vec![DeviceHistory::default(); devices],
            ..Default::default()
        }
    }

    /// Record one interval. Slices are indexed by device.
    pub fn record(&mut self, processed: &[f64], comm_delay: &[f64]) {
        debug_assert_eq!(processed.len(), comm_delay.len());
        if self.devices.len() < processed.len() {
            self.devices.resize(processed.len(), DeviceHistory::default());
        }
        for (k, (&b, &t)) in processed.iter().zip(comm_delay).enumerate() {
            self.devices[k].processed += b;
            self.devices[k].comm_delay += t;
        }
        let b: f64 = processed.iter().sum();
        let t: f64 = comm_delay.iter().sum();
        self.cum_processed += b;
        self.cum_comm_delay += t;
        self.history.push((b, t));
    }

    /// Fold another accumulator into this one (pooling episodes).
    pub fn absorb(&mut self, other: &PdeAccumulator) {
        if self.devices.len() < other.devices.len() {
            self.devices.resize(other.devices.len(), DeviceHistory::default());
        }
        for (mine, theirs) in self.devices.iter_mut().zip(&other.devices) {
            mine.processed += theirs.processed;
            mine.comm_delay += theirs.comm_delay;
        }
        self.cum_processed += other.cum_processed;
        self.cum_comm_delay += other.cum_comm_delay;
        self.history.extend_from_slice(&other.history);
    }

    pub fn cum_processed(&self) -> f64 {
        self.cum_processed
    }

    pub fn cum_comm_delay(&self) -> f64 {
        self.cum_comm_delay
    }

    pub fn intervals(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &[(f64, f64)] {
        &self.history
    }

    pub fn device(&self, k: usize) -> DeviceHistory {
        self.devices.get(k).copied().unwrap_or_default()
    }

    pub fn device_count(&self) -> usize {
        self.devices.len()
    }
}

/// PDE over everything recorded so far.
pub fn long_term_pde(acc: &PdeAccumulator) -> f64 {
    ratio(acc.cum_processed, acc.cum_comm_delay)
}

/// PDE over intervals `0..n`, the utility estimate entering interval `n`.
pub fn short_term_pde(acc: &PdeAccumulator, n: usize) -> f64 {
    let n = n.min(acc.history.len());
    let (b, t) = acc.history[..n]
        .iter()
        .fold((0.0, 0.0), |(b, t), &(bi, ti)| (b + bi, t + ti));
    if t > 0.0 {
        b / t
    } else {
        0.0
    }
}

/// Reward and Lyapunov weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
    pub lyapunov_v: f64,
    /// Subtracted from a device's reward when its task misses the deadline.
    pub violation_penalty: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            v1: 1e-6,
            v2: 1e-6,
            v3: 1e-6,
            v4: 1.0,
            lyapunov_v: 1.0,
            violation_penalty: 0.0,
        }
    }
}

fn local_drift(q: &QueueTriple, s: &SplitAmounts) -> f64 {
    q.q_local * (s.b_local + s.d_uav)
}

fn uav_drift(q: &QueueTriple, s: &SplitAmounts) -> f64 {
    q.q_uav * (s.d_uav - s.b_uav - s.d_cloud)
}

fn cloud_drift(q: &QueueTriple, s: &SplitAmounts) -> f64 {
    q.q_cloud * (s.d_cloud - s.b_cloud)
}

/// Per-interval drift-plus-penalty objective evaluated for a candidate
/// decision. `acc` holds the history before this interval and supplies the
/// short-term PDE used as the penalty price.
pub fn drift_plus_penalty_value(
    queues: &[QueueTriple],
    splits: &[SplitAmounts],
    comm_delays: &[f64],
    acc: &PdeAccumulator,
    lyapunov_v: f64,
) -> f64 {
    let u_n = short_term_pde(acc, acc.intervals());
    let processed: f64 = splits.iter().map(SplitAmounts::processed).sum();
    let delay: f64 = comm_delays.iter().sum();
    let penalty = if lyapunov_v == 0.0 {
        0.0
    } else {
        lyapunov_v * (processed - u_n * delay)
    };
    let drift: f64 = queues
        .iter()
        .zip(splits)
        .map(|(q, s)| local_drift(q, s) - uav_drift(q, s) - cloud_drift(q, s))
        .sum();
    penalty + drift
}

/// Reward of one device for one interval.
///
/// The efficiency term is weighted by the deadline indicator: when the task
/// misses the deadline (`eta == false`) it contributes nothing, and the
/// configured violation penalty is subtracted instead.
pub fn reward(
    state: &QueueTriple,
    splits: &SplitAmounts,
    t_comm: f64,
    history: &DeviceHistory,
    weights: &RewardWeights,
    eta: bool,
) -> f64 {
    let queue_terms = weights.v1 * local_drift(state, splits)
        - weights.v2 * uav_drift(state, splits)
        - weights.v3 * cloud_drift(state, splits);
    let efficiency = if eta {
        weights.v4 * (splits.processed() - t_comm * history.pde())
    } else {
        -weights.violation_penalty
    };
    queue_terms + efficiency
}

/// Everything the constraint checker needs about one device's decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceDecision {
    pub tx_power: f64,
    pub x_uav: f64,
    pub x_cloud: f64,
    pub w_local: f64,
    pub w_uav: f64,
    pub w_cloud: f64,
    pub cpu: CpuAllocation,
}

/// Static bounds the decisions are checked against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityLimits {
    pub p_max: f64,
    pub local_cpu_max: f64,
    pub uav_cpu_max: f64,
    pub cloud_cpu_max: f64,
    pub v_max: f64,
    pub tau: f64,
    pub area: ServiceArea,
    pub start: Position2D,
    pub end: Position2D,
    pub intervals: usize,
}

/// UAV move over one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavLeg {
    pub interval: usize,
    pub from: Position2D,
    pub to: Position2D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub c1_power: bool,
    pub c2_offload_fractions: bool,
    pub c3_process_fractions: bool,
    pub c4_local_cpu: bool,
    pub c5_uav_cpu: bool,
    pub c6_cloud_cpu: bool,
    pub c7_speed: bool,
    pub c8_waypoints: bool,
    pub c9_area: bool,
    pub c10_deadline: bool,
    /// Per-device deadline indicator.
    pub eta: Vec<bool>,
}

impl FeasibilityReport {
    /// True when C1 through C9 all hold (the action-side constraints).
    pub fn action_feasible(&self) -> bool {
        self.c1_power
            && self.c2_offload_fractions
            && self.c3_process_fractions
            && self.c4_local_cpu
            && self.c5_uav_cpu
            && self.c6_cloud_cpu
            && self.c7_speed
            && self.c8_waypoints
            && self.c9_area
    }
}

const GEOM_TOL: f64 = 1e-9;

fn in_unit(f: f64) -> bool {
    (0.0..=1.0).contains(&f)
}

/// Evaluate the per-interval constraints. Never alters the inputs; the
/// deadline constraint also produces the per-device `eta` indicators.
pub fn check_feasibility(
    decisions: &[DeviceDecision],
    leg: &UavLeg,
    task_delays: &[f64],
    limits: &FeasibilityLimits,
) -> FeasibilityReport {
    let c1 = decisions
        .iter()
        .all(|d| d.tx_power >= 0.0 && d.tx_power <= limits.p_max);
    let c2 = decisions.iter().all(|d| in_unit(d.x_uav) && in_unit(d.x_cloud));
    let c3 = decisions
        .iter()
        .all(|d| in_unit(d.w_local) && in_unit(d.w_uav) && in_unit(d.w_cloud));
    let c4 = decisions
        .iter()
        .all(|d| d.cpu.local >= 0.0 && d.cpu.local <= limits.local_cpu_max);
    let uav_sum: f64 = decisions.iter().map(|d| d.cpu.uav).sum();
    let cloud_sum: f64 = decisions.iter().map(|d| d.cpu.cloud).sum();
    let c5 = decisions.iter().all(|d| d.cpu.uav >= 0.0)
        && uav_sum <= limits.uav_cpu_max * (1.0 + GEOM_TOL);
    let c6 = decisions.iter().all(|d| d.cpu.cloud >= 0.0)
        && cloud_sum <= limits.cloud_cpu_max * (1.0 + GEOM_TOL);
    let speed = leg.from.distance_to(&leg.to) / limits.tau;
    let c7 = speed <= limits.v_max + GEOM_TOL;
    let start_ok = leg.interval != 0 || leg.from.distance_to(&limits.start) <= GEOM_TOL;
    let end_ok =
        leg.interval + 1 != limits.intervals || leg.to.distance_to(&limits.end) <= GEOM_TOL;
    let c8 = start_ok && end_ok;
    let c9 = limits.area.contains(&leg.from) && limits.area.contains(&leg.to);
    let eta: Vec<bool> = task_delays.iter().map(|&t| t <= limits.tau).collect();
    let c10 = eta.iter().all(|&e| e);
    FeasibilityReport {
        c1_power: c1,
        c2_offload_fractions: c2,
        c3_process_fractions: c3,
        c4_local_cpu: c4,
        c5_uav_cpu: c5,
        c6_cloud_cpu: c6,
        c7_speed: c7,
        c8_waypoints: c8,
        c9_area: c9,
        c10_deadline: c10,
        eta,
    }
}
