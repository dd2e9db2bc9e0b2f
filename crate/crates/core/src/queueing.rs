//! Per-device queue triple (device, UAV, cloud) and its update laws.
//!
//! Splits are always computed from the start-of-interval backlogs. The bits
//! offloaded to the next tier are credited to that tier's queue in the same
//! update, and fresh arrivals join the device queue after service.

use rand::Rng;

use crate::error::{Result, SimError};

/// Backlogs in bits.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QueueTriple {
    pub q_local: f64,
    pub q_uav: f64,
    pub q_cloud: f64,
}

impl QueueTriple {
    pub const fn new(q_local: f64, q_uav: f64, q_cloud: f64) -> Self {
        Self {
            q_local,
            q_uav,
            q_cloud,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.q_local, self.q_uav, self.q_cloud]
    }

    pub fn total(&self) -> f64 {
        self.q_local + self.q_uav + self.q_cloud
    }

    /// Apply one interval of service and arrivals.
    pub fn advance(&self, s: &SplitAmounts, arrival: f64) -> QueueTriple {
        QueueTriple {
            q_local: update_local(self.q_local, s, arrival),
            q_uav: update_uav(self.q_uav, s),
            q_cloud: update_cloud(self.q_cloud, s),
        }
    }

    /// Pre-clamp residuals of the three update laws. All are nonnegative when
    /// the splits come from fractions in `[0, 1]`.
    pub fn residuals(&self, s: &SplitAmounts) -> [f64; 3] {
        [
            self.q_local - s.d_uav - s.b_local,
            self.q_uav - s.d_cloud - s.b_uav,
            self.q_cloud - s.b_cloud,
        ]
    }
}

/// Bits moved or processed in one interval for one device.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SplitAmounts {
    /// Offloaded device -> UAV.
    pub d_uav: f64,
    /// Processed at the device.
    pub b_local: f64,
    /// Offloaded UAV -> cloud.
    pub d_cloud: f64,
    /// Processed at the UAV.
    pub b_uav: f64,
    /// Processed at the cloud.
    pub b_cloud: f64,
}

impl SplitAmounts {
    pub fn processed(&self) -> f64 {
        self.b_local + self.b_uav + self.b_cloud
    }
}

/// Uniform i.i.d. task arrivals on `[0, max_bits]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalProcess {
    pub max_bits: f64,
}

/// Offload/process amounts from the current backlogs and the action fractions.
pub fn compute_splits(
    q: &QueueTriple,
    x_uav: f64,
    x_cloud: f64,
    w_local: f64,
    w_uav: f64,
    w_cloud: f64,
) -> SplitAmounts {
    debug_assert!(
        [x_uav, x_cloud, w_local, w_uav, w_cloud]
            .iter()
            .all(|f| (0.0..=1.0).contains(f)),
        "fractions must lie in [0, 1]"
    );
    SplitAmounts {
        d_uav: x_uav * q.q_local,
        b_local: w_local * (1.0 - x_uav) * q.q_local,
        d_cloud: x_cloud * q.q_uav,
        b_uav: w_uav * (1.0 - x_cloud) * q.q_uav,
        b_cloud: w_cloud * q.q_cloud,
    }
}

pub fn update_local(q_local: f64, s: &SplitAmounts, arrival: f64) -> f64 {
    (q_local - s.d_uav - s.b_local).max(0.0) + arrival
}

pub fn update_uav(q_uav: f64, s: &SplitAmounts) -> f64 {
    (q_uav - s.d_cloud - s.b_uav).max(0.0) + s.d_uav
}

pub fn update_cloud(q_cloud: f64, s: &SplitAmounts) -> f64 {
    (q_cloud - s.b_cloud).max(0.0) + s.d_cloud
}

pub fn draw_arrival<R: Rng + ?Sized>(rng: &mut R, process: &ArrivalProcess) -> f64 {
    // one uniform draw per call, even for max_bits = 0
    let u: f64 = rng.random();
    u * process.max_bits
}

/// Per-queue arithmetic mean of a backlog history; the finite-horizon estimate
/// of the long-run average backlog.
pub fn running_mean_backlog(history: &[QueueTriple]) -> Result<QueueTriple> {
    if history.is_empty() {
        return Err(SimError::EmptyHistory);
    }
    let n = history.len() as f64;
    let sum = history.iter().fold(QueueTriple::default(), |acc, q| {
        QueueTriple::new(
            acc.q_local + q.q_local,
            acc.q_uav + q.q_uav,
            acc.q_cloud + q.q_cloud,
        )
    });
    Ok(QueueTriple::new(sum.q_local / n, sum.q_uav / n, sum.q_cloud / n))
}
