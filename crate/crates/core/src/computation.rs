//! Computation delays and the end-to-end per-task delay.

/// CPU budgets and the per-bit workload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComputeParams {
    pub cycles_per_bit: f64,
    /// Per-device local CPU budget (cycles/s).
    pub local_cpu: f64,
    /// Total UAV CPU shared by all devices (cycles/s).
    pub uav_cpu_total: f64,
    /// Total cloud CPU shared by all devices (cycles/s).
    pub cloud_cpu_total: f64,
}

/// CPU frequencies assigned to one device's task at each tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpuAllocation {
    pub local: f64,
    pub uav: f64,
    pub cloud: f64,
}

impl CpuAllocation {
    /// Full local budget, even split of the UAV and cloud budgets.
    pub fn even_split(params: &ComputeParams, devices: usize) -> Self {
        let k = devices.max(1) as f64;
        Self {
            local: params.local_cpu,
            uav: params.uav_cpu_total / k,
            cloud: params.cloud_cpu_total / k,
        }
    }
}

/// Delay components of one device's task in one interval, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DelayBreakdown {
    pub t_local_comp: f64,
    pub t_uplink_comm: f64,
    pub t_uav_comp: f64,
    pub t_cloud_comm: f64,
    pub t_cloud_comp: f64,
    pub t_total: f64,
}

impl DelayBreakdown {
    pub fn new(
        t_local_comp: f64,
        t_uplink_comm: f64,
        t_uav_comp: f64,
        t_cloud_comm: f64,
        t_cloud_comp: f64,
    ) -> Self {
        let mut b = Self {
            t_local_comp,
            t_uplink_comm,
            t_uav_comp,
            t_cloud_comm,
            t_cloud_comp,
            t_total: 0.0,
        };
        b.t_total = total_task_delay(&b);
        b
    }

    pub fn comm_delay(&self) -> f64 {
        self.t_uplink_comm + self.t_cloud_comm
    }
}

/// Time to process `bits` at `cpu` cycles/s. Zero bits cost nothing; positive
/// bits on a zero-capacity CPU give `+inf`.
pub fn comp_delay(bits: f64, cpu: f64, cycles_per_bit: f64) -> f64 {
    if bits <= 0.0 {
        0.0
    } else if cpu <= 0.0 {
        f64::INFINITY
    } else {
        bits * cycles_per_bit / cpu
    }
}

/// End-to-end delay: local compute overlaps the uplink, UAV compute overlaps
/// the cloud hand-off, and cloud compute runs last.
pub fn total_task_delay(b: &DelayBreakdown) -> f64 {
    b.t_local_comp.max(b.t_uplink_comm) + b.t_uav_comp.max(b.t_cloud_comm) + b.t_cloud_comp
}
