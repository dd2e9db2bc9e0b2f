//! Uplink SINR, achievable rate and communication delays.
//!
//! All devices transmit simultaneously to the UAV on the same band, so each
//! device sees the others as interference. Every interferer contributes with
//! its own channel gain. The UAV to cloud backhaul is modelled only through a
//! fixed installation delay paid whenever anything is forwarded.

/// Per-interval bandwidth, noise and backhaul constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Hz.
    pub bandwidth: f64,
    /// Total receiver noise power in Watts.
    pub noise_power: f64,
    /// UAV to cloud setup delay in seconds.
    pub install_delay: f64,
}

/// Instantaneous uplink state: one `|h_k|^2` and one `p_k` per device.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UplinkSnapshot {
    pub power_gains: Vec<f64>,
    pub tx_powers: Vec<f64>,
}

impl UplinkSnapshot {
    pub fn new(power_gains: Vec<f64>, tx_powers: Vec<f64>) -> Self {
        debug_assert_eq!(power_gains.len(), tx_powers.len());
        Self {
            power_gains,
            tx_powers,
        }
    }

    pub fn len(&self) -> usize {
        self.power_gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power_gains.is_empty()
    }

    fn received_power(&self, k: usize) -> f64 {
        self.power_gains[k] * self.tx_powers[k]
    }
}

/// SINR of device `device_index` at the UAV.
///
/// # Panics
///
/// If `device_index` is out of range.
pub fn sinr(device_index: usize, snapshot: &UplinkSnapshot, noise_power: f64) -> f64 {
    let interference: f64 = (0..snapshot.len())
        .filter(|&i| i != device_index)
        .map(|i| snapshot.received_power(i))
        .sum();
    snapshot.received_power(device_index) / (interference + noise_power)
}

/// Shannon rate `B log2(1 + sinr)` in bits/s.
pub fn rate(sinr: f64, bandwidth: f64) -> f64 {
    bandwidth * (1.0 + sinr).log2()
}

/// Device to UAV transmission time. Zero bits take zero time even over a dead
/// link; positive bits over a zero rate give `+inf`.
pub fn uplink_comm_delay(bits_offloaded: f64, rate: f64) -> f64 {
    if bits_offloaded <= 0.0 {
        0.0
    } else if rate <= 0.0 {
        f64::INFINITY
    } else {
        bits_offloaded / rate
    }
}

/// UAV to cloud delay: the installation delay whenever anything is forwarded.
pub fn cloud_comm_delay(x_cloud: f64, install_delay: f64) -> f64 {
    if x_cloud > 0.0 {
        install_delay
    } else {
        0.0
    }
}

pub fn total_comm_delay(uplink: f64, cloud: f64) -> f64 {
    uplink + cloud
}

/// Rates of every device for one snapshot.
pub fn uplink_rates(snapshot: &UplinkSnapshot, budget: &LinkBudget) -> (Vec<f64>, Vec<f64>) {
    let sinrs: Vec<f64> = (0..snapshot.len())
        .map(|k| sinr(k, snapshot, budget.noise_power))
        .collect();
    let rates = sinrs.iter().map(|&s| rate(s, budget.bandwidth)).collect();
    (sinrs, rates)
}

/// Noise power over `bandwidth` for a density given in dBm/Hz.
pub fn noise_power_from_density(density_dbm_per_hz: f64, bandwidth: f64) -> f64 {
    1e-3 * 10f64.powf(density_dbm_per_hz / 10.0) * bandwidth
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sinr_examples() {
        let single = UplinkSnapshot::new(vec![1e-8], vec![0.1]);
        assert!((sinr(0, &single, 1e-9) - 1.0).abs() < 1e-12);

        let pair = UplinkSnapshot::new(vec![1e-8, 1e-8], vec![0.1, 0.1]);
        assert!((sinr(0, &pair, 1e-9) - 0.5).abs() < 1e-12);

        let silent = UplinkSnapshot::new(vec![1e-8, 1e-8], vec![0.0, 0.1]);
        assert_eq!(sinr(0, &silent, 1e-9), 0.0);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate(0.0, 180e3), 0.0);
        assert!((rate(1.0, 180e3) - 180e3).abs() < 1e-9);
        assert!((rate(3.0, 180e3) - 360e3).abs() < 1e-9);
    }

    #[test]
    fn delay_examples() {
        assert_eq!(uplink_comm_delay(0.0, 0.0), 0.0);
        assert_eq!(uplink_comm_delay(180e3, 180e3), 1.0);
        assert_eq!(uplink_comm_delay(1000.0, 0.0), f64::INFINITY);

        assert_eq!(cloud_comm_delay(0.0, 0.25), 0.0);
        assert_eq!(cloud_comm_delay(0.3, 0.25), 0.25);
        assert_eq!(cloud_comm_delay(0.6, 0.25), 0.25);

        assert_eq!(total_comm_delay(0.0, 0.0), 0.0);
        assert_eq!(total_comm_delay(1.0, 0.25), 1.25);
        assert_eq!(total_comm_delay(f64::INFINITY, 0.25), f64::INFINITY);
    }

    #[test]
    fn thermal_noise_over_180khz() {
        let n = noise_power_from_density(-174.0, 180e3);
        let dbm = 10.0 * (n / 1e-3).log10();
        assert!((dbm - (-121.4473)).abs() < 1e-3, "{dbm}");
    }

    proptest! {
        #[test]
        fn sinr_scale_invariant(
            g in proptest::collection::vec(1e-12..1e-6f64, 1..5),
            noise in 1e-16..1e-9f64,
            scale in 1e-3..1e3f64,
        ) {
            let p = vec![0.1; g.len()];
            let a = UplinkSnapshot::new(g.clone(), p.clone());
            let b = UplinkSnapshot::new(g.iter().map(|x| x * scale).collect(), p);
            for k in 0..g.len() {
                let s1 = sinr(k, &a, noise);
                let s2 = sinr(k, &b, noise * scale);
                prop_assert!((s1 - s2).abs() <= 1e-9 * s1.max(1e-300));
            }
        }

        #[test]
        fn extra_interferer_never_helps(
            g in proptest::collection::vec(1e-12..1e-6f64, 1..5),
            extra in 1e-12..1e-6f64,
            noise in 1e-16..1e-9f64,
        ) {
            let p = vec![0.1; g.len()];
            let base = UplinkSnapshot::new(g.clone(), p.clone());
            let mut g2 = g.clone();
            g2.push(extra);
            let mut p2 = p;
            p2.push(0.1);
            let more = UplinkSnapshot::new(g2, p2);
            for k in 0..g.len() {
                prop_assert!(sinr(k, &more, noise) <= sinr(k, &base, noise));
            }
        }

        #[test]
        fn rate_increasing_and_concave(s in 0.0..1e3f64, d in 1e-3..10.0f64) {
            let b = 180e3;
            prop_assert!(rate(s + d, b) > rate(s, b));
            let mid = rate(s + d / 2.0, b);
            prop_assert!(mid + 1e-9 >= 0.5 * (rate(s, b) + rate(s + d, b)));
        }

        #[test]
        fn total_delay_monotone(a in 0.0..10.0f64, b in 0.0..10.0f64, e in 0.0..1.0f64) {
            prop_assert!(total_comm_delay(a + e, b) >= total_comm_delay(a, b));
            prop_assert!(total_comm_delay(a, b + e) >= total_comm_delay(a, b));
        }
    }
}
