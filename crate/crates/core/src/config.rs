//! Simulation and training configuration.
//!
//! Configuration files are flat `key = value` text with `#` comments. Values
//! are layered as defaults, then file, then command-line overrides, and the
//! result is validated as a whole. Unset optional keys (or the literal `auto`)
//! fall back to derived defaults.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::channel::{db_to_linear, ChannelParams, Position2D, ServiceArea};
use crate::computation::{ComputeParams, CpuAllocation};
use crate::error::{Result, SimError};
use crate::objective::{FeasibilityLimits, RewardWeights};
use crate::phy_link::{noise_power_from_density, LinkBudget};
use crate::queueing::ArrivalProcess;

/// DQN learning hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    /// Classical momentum coefficient; 0 gives plain SGD.
    pub momentum: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gradient steps between target-network syncs.
    pub target_sync: usize,
    /// Environment steps per gradient step.
    pub train_every: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of all training steps over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    pub episodes: usize,
    /// Global L2-norm bound on the gradient.
    pub grad_clip: f64,
    pub hidden_layers: Vec<usize>,
    /// Rewards are divided by this before entering the replay buffer.
    pub reward_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            learning_rate: 1e-3,
            momentum: 0.0,
            batch_size: 64,
            buffer_capacity: 10_000,
            target_sync: 200,
            train_every: 1,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.5,
            episodes: 200,
            grad_clip: 10.0,
            hidden_layers: vec![64, 64],
            reward_scale: 1e5,
        }
    }
}

/// Every physical, network and learning constant of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_devices: usize,
    /// Intervals per episode.
    pub intervals: usize,
    /// Interval duration in seconds.
    pub tau: f64,
    pub area_width: f64,
    pub area_height: f64,
    pub altitude: f64,
    pub eta0_db: f64,
    pub path_loss_exponent: f64,
    pub rice_k: f64,
    pub bandwidth: f64,
    pub noise_density_dbm_hz: f64,
    /// Total noise power in Watts; overrides the density when set.
    pub noise_power_w: Option<f64>,
    pub p_max: f64,
    pub tx_power: f64,
    pub cycles_per_bit: f64,
    pub local_cpu_max: f64,
    pub uav_cpu_max: f64,
    pub cloud_cpu_max: f64,
    pub local_cpu: Option<f64>,
    pub uav_cpu_per_device: Option<f64>,
    pub cloud_cpu_per_device: Option<f64>,
    pub install_delay: f64,
    pub v_max: f64,
    pub i_max: f64,
    pub w_local: f64,
    /// Backlog at which the observation saturates; defaults to `4 * i_max`.
    pub q_cap: Option<f64>,
    pub action_levels: Vec<f64>,
    pub observe_uav_position: bool,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
    pub lyapunov_v: f64,
    pub violation_penalty: f64,
    pub catalog_cap: usize,
    /// Fixed device positions; random per layout seed when unset.
    pub device_positions: Option<Vec<Position2D>>,
    pub eval_realizations: usize,
    pub train: TrainConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        let w = RewardWeights::default();
        Self {
            num_devices: 2,
            intervals: 1000,
            tau: 1.0,
            area_width: 500.0,
            area_height: 500.0,
            altitude: 100.0,
            eta0_db: -40.0,
            path_loss_exponent: 2.0,
            rice_k: 10.0,
            bandwidth: 180e3,
            noise_density_dbm_hz: -174.0,
            noise_power_w: None,
            p_max: 0.1,
            tx_power: 0.1,
            cycles_per_bit: 1024.0,
            local_cpu_max: 1e6,
            uav_cpu_max: 5e6,
            cloud_cpu_max: 1e8,
            local_cpu: None,
            uav_cpu_per_device: None,
            cloud_cpu_per_device: None,
            install_delay: 0.25,
            v_max: 30.0,
            i_max: 2.5e5,
            w_local: 0.3,
            q_cap: None,
            action_levels: vec![0.3, 0.6],
            observe_uav_position: false,
            v1: w.v1,
            v2: w.v2,
            v3: w.v3,
            v4: w.v4,
            lyapunov_v: w.lyapunov_v,
            violation_penalty: w.violation_penalty,
            catalog_cap: 100_000,
            device_positions: None,
            eval_realizations: 1000,
            train: TrainConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| SimError::invalid(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    if value.trim().eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_positions(key: &str, value: &str) -> Result<Option<Vec<Position2D>>> {
    if value.trim().eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    value
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (x, y) = pair
                .split_once(':')
                .ok_or_else(|| SimError::invalid(key, format!("expected x:y, got `{pair}`")))?;
            Ok(Position2D::new(parse(key, x)?, parse(key, y)?))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".to_string(), |x| x.to_string())
}

fn fmt_list<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl SimConfig {
    /// Assign one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        match key {
            "num_devices" => self.num_devices = parse(key, value)?,
            "intervals" => self.intervals = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "area_width" => self.area_width = parse(key, value)?,
            "area_height" => self.area_height = parse(key, value)?,
            "altitude" => self.altitude = parse(key, value)?,
            "eta0_db" => self.eta0_db = parse(key, value)?,
            "path_loss_exponent" => self.path_loss_exponent = parse(key, value)?,
            "rice_k" => self.rice_k = parse(key, value)?,
            "bandwidth" => self.bandwidth = parse(key, value)?,
            "noise_density_dbm_hz" => self.noise_density_dbm_hz = parse(key, value)?,
            "noise_power_w" => self.noise_power_w = parse_opt(key, value)?,
            "p_max" => self.p_max = parse(key, value)?,
            "tx_power" => self.tx_power = parse(key, value)?,
            "cycles_per_bit" => self.cycles_per_bit = parse(key, value)?,
            "local_cpu_max" => self.local_cpu_max = parse(key, value)?,
            "uav_cpu_max" => self.uav_cpu_max = parse(key, value)?,
            "cloud_cpu_max" => self.cloud_cpu_max = parse(key, value)?,
            "local_cpu" => self.local_cpu = parse_opt(key, value)?,
            "uav_cpu_per_device" => self.uav_cpu_per_device = parse_opt(key, value)?,
            "cloud_cpu_per_device" => self.cloud_cpu_per_device = parse_opt(key, value)?,
            "install_delay" => self.install_delay = parse(key, value)?,
            "v_max" => self.v_max = parse(key, value)?,
            "i_max" => self.i_max = parse(key, value)?,
            "w_local" => self.w_local = parse(key, value)?,
            "q_cap" => self.q_cap = parse_opt(key, value)?,
            "action_levels" => self.action_levels = parse_list(key, value)?,
            "observe_uav_position" => self.observe_uav_position = parse(key, value)?,
            "v1" => self.v1 = parse(key, value)?,
            "v2" => self.v2 = parse(key, value)?,
            "v3" => self.v3 = parse(key, value)?,
            "v4" => self.v4 = parse(key, value)?,
            "lyapunov_v" => self.lyapunov_v = parse(key, value)?,
            "violation_penalty" => self.violation_penalty = parse(key, value)?,
            "catalog_cap" => self.catalog_cap = parse(key, value)?,
            "device_positions" => self.device_positions = parse_positions(key, value)?,
            "eval_realizations" => self.eval_realizations = parse(key, value)?,
            "gamma" => t.gamma = parse(key, value)?,
            "learning_rate" => t.learning_rate = parse(key, value)?,
            "momentum" => t.momentum = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "buffer_capacity" => t.buffer_capacity = parse(key, value)?,
            "target_sync" => t.target_sync = parse(key, value)?,
            "train_every" => t.train_every = parse(key, value)?,
            "epsilon_start" => t.epsilon_start = parse(key, value)?,
            "epsilon_end" => t.epsilon_end = parse(key, value)?,
            "epsilon_decay_fraction" => t.epsilon_decay_fraction = parse(key, value)?,
            "episodes" => t.episodes = parse(key, value)?,
            "grad_clip" => t.grad_clip = parse(key, value)?,
            "hidden_layers" => t.hidden_layers = parse_list(key, value)?,
            "reward_scale" => t.reward_scale = parse(key, value)?,
            _ => return Err(SimError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Every key with its current textual value, in a stable order. Feeding
    /// the output back through [`SimConfig::set`] reproduces the config.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let t = &self.train;
        vec![
            ("num_devices", self.num_devices.to_string()),
            ("intervals", self.intervals.to_string()),
            ("tau", self.tau.to_string()),
            ("area_width", self.area_width.to_string()),
            ("area_height", self.area_height.to_string()),
            ("altitude", self.altitude.to_string()),
            ("eta0_db", self.eta0_db.to_string()),
            ("path_loss_exponent", self.path_loss_exponent.to_string()),
            ("rice_k", self.rice_k.to_string()),
            ("bandwidth", self.bandwidth.to_string()),
            ("noise_density_dbm_hz", self.noise_density_dbm_hz.to_string()),
            ("noise_power_w", fmt_opt(self.noise_power_w)),
            ("p_max", self.p_max.to_string()),
            ("tx_power", self.tx_power.to_string()),
            ("cycles_per_bit", self.cycles_per_bit.to_string()),
            ("local_cpu_max", self.local_cpu_max.to_string()),
            ("uav_cpu_max", self.uav_cpu_max.to_string()),
            ("cloud_cpu_max", self.cloud_cpu_max.to_string()),
            ("local_cpu", fmt_opt(self.local_cpu)),
            ("uav_cpu_per_device", fmt_opt(self.uav_cpu_per_device)),
            ("cloud_cpu_per_device", fmt_opt(self.cloud_cpu_per_device)),
            ("install_delay", self.install_delay.to_string()),
            ("v_max", self.v_max.to_string()),
            ("i_max", self.i_max.to_string()),
            ("w_local", self.w_local.to_string()),
            ("q_cap", fmt_opt(self.q_cap)),
            ("action_levels", fmt_list(&self.action_levels)),
            ("observe_uav_position", self.observe_uav_position.to_string()),
            ("v1", self.v1.to_string()),
            ("v2", self.v2.to_string()),
            ("v3", self.v3.to_string()),
            ("v4", self.v4.to_string()),
            ("lyapunov_v", self.lyapunov_v.to_string()),
            ("violation_penalty", self.violation_penalty.to_string()),
            ("catalog_cap", self.catalog_cap.to_string()),
            (
                "device_positions",
                self.device_positions.as_ref().map_or_else(
                    || "auto".to_string(),
                    |ps| {
                        ps.iter()
                            .map(|p| format!("{}:{}", p.x, p.y))
                            .collect::<Vec<_>>()
                            .join(";")
                    },
                ),
            ),
            ("eval_realizations", self.eval_realizations.to_string()),
            ("gamma", t.gamma.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("momentum", t.momentum.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("buffer_capacity", t.buffer_capacity.to_string()),
            ("target_sync", t.target_sync.to_string()),
            ("train_every", t.train_every.to_string()),
            ("epsilon_start", t.epsilon_start.to_string()),
            ("epsilon_end", t.epsilon_end.to_string()),
            ("epsilon_decay_fraction", t.epsilon_decay_fraction.to_string()),
            ("episodes", t.episodes.to_string()),
            ("grad_clip", t.grad_clip.to_string()),
            ("hidden_layers", fmt_list(&t.hidden_layers)),
            ("reward_scale", t.reward_scale.to_string()),
        ]
    }

    pub fn to_file_string(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Apply `key = value` lines; blank lines and `#` comments are ignored.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| SimError::Malformed {
                line: i + 1,
                content: raw.to_string(),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(SimError::Malformed {
                    line: i + 1,
                    content: raw.to_string(),
                });
            }
            self.set(key, value.trim())?;
        }
        Ok(())
    }

    /// Apply `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| SimError::MalformedOverride(o.to_string()))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(key: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SimError::invalid(key, format!("must be positive and finite, got {v}")))
            }
        }
        fn nonneg(key: &str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(SimError::invalid(key, format!("must be nonnegative and finite, got {v}")))
            }
        }
        fn unit(key: &str, v: f64) -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SimError::invalid(key, format!("must lie in [0, 1], got {v}")))
            }
        }
        fn count(key: &str, v: usize) -> Result<()> {
            if v > 0 {
                Ok(())
            } else {
                Err(SimError::invalid(key, "must be at least 1"))
            }
        }

        count("num_devices", self.num_devices)?;
        count("intervals", self.intervals)?;
        positive("tau", self.tau)?;
        positive("area_width", self.area_width)?;
        positive("area_height", self.area_height)?;
        positive("altitude", self.altitude)?;
        if !self.eta0_db.is_finite() {
            return Err(SimError::invalid("eta0_db", "must be finite"));
        }
        nonneg("path_loss_exponent", self.path_loss_exponent)?;
        if self.rice_k.is_nan() || self.rice_k < 0.0 {
            return Err(SimError::invalid("rice_k", "must be nonnegative (inf allowed)"));
        }
        positive("bandwidth", self.bandwidth)?;
        if !self.noise_density_dbm_hz.is_finite() {
            return Err(SimError::invalid("noise_density_dbm_hz", "must be finite"));
        }
        if let Some(n) = self.noise_power_w {
            positive("noise_power_w", n)?;
        }
        positive("p_max", self.p_max)?;
        nonneg("tx_power", self.tx_power)?;
        if self.tx_power > self.p_max {
            return Err(SimError::invalid("tx_power", "exceeds p_max"));
        }
        positive("cycles_per_bit", self.cycles_per_bit)?;
        positive("local_cpu_max", self.local_cpu_max)?;
        positive("uav_cpu_max", self.uav_cpu_max)?;
        positive("cloud_cpu_max", self.cloud_cpu_max)?;
        if let Some(c) = self.local_cpu {
            positive("local_cpu", c)?;
            if c > self.local_cpu_max {
                return Err(SimError::invalid("local_cpu", "exceeds local_cpu_max"));
            }
        }
        let k = self.num_devices as f64;
        if let Some(c) = self.uav_cpu_per_device {
            positive("uav_cpu_per_device", c)?;
            if c * k > self.uav_cpu_max * (1.0 + 1e-12) {
                return Err(SimError::invalid("uav_cpu_per_device", "sum over devices exceeds uav_cpu_max"));
            }
        }
        if let Some(c) = self.cloud_cpu_per_device {
            positive("cloud_cpu_per_device", c)?;
            if c * k > self.cloud_cpu_max * (1.0 + 1e-12) {
                return Err(SimError::invalid(
                    "cloud_cpu_per_device",
                    "sum over devices exceeds cloud_cpu_max",
                ));
            }
        }
        nonneg("install_delay", self.install_delay)?;
        positive("v_max", self.v_max)?;
        nonneg("i_max", self.i_max)?;
        unit("w_local", self.w_local)?;
        if let Some(q) = self.q_cap {
            positive("q_cap", q)?;
        } else if self.i_max <= 0.0 {
            return Err(SimError::invalid("q_cap", "must be set explicitly when i_max is 0"));
        }
        if self.action_levels.is_empty() {
            return Err(SimError::invalid("action_levels", "must not be empty"));
        }
        for &l in &self.action_levels {
            unit("action_levels", l)?;
        }
        for (key, v) in [
            ("v1", self.v1),
            ("v2", self.v2),
            ("v3", self.v3),
            ("v4", self.v4),
            ("lyapunov_v", self.lyapunov_v),
            ("violation_penalty", self.violation_penalty),
        ] {
            nonneg(key, v)?;
        }
        count("catalog_cap", self.catalog_cap)?;
        if let Some(ps) = &self.device_positions {
            if ps.len() != self.num_devices {
                return Err(SimError::invalid(
                    "device_positions",
                    format!("expected {} positions, got {}", self.num_devices, ps.len()),
                ));
            }
            if !ps.iter().all(|p| p.is_finite() && self.area().contains(p)) {
                return Err(SimError::invalid("device_positions", "positions must lie inside the area"));
            }
        }
        count("eval_realizations", self.eval_realizations)?;

        let t = &self.train;
        if !(0.0..1.0).contains(&t.gamma) {
            return Err(SimError::invalid("gamma", "must lie in [0, 1)"));
        }
        positive("learning_rate", t.learning_rate)?;
        if !(0.0..1.0).contains(&t.momentum) {
            return Err(SimError::invalid("momentum", "must lie in [0, 1)"));
        }
        count("batch_size", t.batch_size)?;
        count("buffer_capacity", t.buffer_capacity)?;
        if t.buffer_capacity < t.batch_size {
            return Err(SimError::invalid("buffer_capacity", "must be at least batch_size"));
        }
        count("target_sync", t.target_sync)?;
        count("train_every", t.train_every)?;
        unit("epsilon_start", t.epsilon_start)?;
        unit("epsilon_end", t.epsilon_end)?;
        unit("epsilon_decay_fraction", t.epsilon_decay_fraction)?;
        count("episodes", t.episodes)?;
        positive("grad_clip", t.grad_clip)?;
        if t.hidden_layers.iter().any(|&h| h == 0) {
            return Err(SimError::invalid("hidden_layers", "layer widths must be at least 1"));
        }
        positive("reward_scale", t.reward_scale)?;
        Ok(())
    }

    pub fn area(&self) -> ServiceArea {
        ServiceArea::new(self.area_width, self.area_height)
    }

    pub fn eta0_linear(&self) -> f64 {
        db_to_linear(self.eta0_db)
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power_w
            .unwrap_or_else(|| noise_power_from_density(self.noise_density_dbm_hz, self.bandwidth))
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            eta0: self.eta0_linear(),
            theta: self.path_loss_exponent,
            rice_k: self.rice_k,
            altitude: self.altitude,
        }
    }

    pub fn link_budget(&self) -> LinkBudget {
        LinkBudget {
            bandwidth: self.bandwidth,
            noise_power: self.noise_power(),
            install_delay: self.install_delay,
        }
    }

    pub fn compute_params(&self) -> ComputeParams {
        ComputeParams {
            cycles_per_bit: self.cycles_per_bit,
            local_cpu: self.local_cpu_max,
            uav_cpu_total: self.uav_cpu_max,
            cloud_cpu_total: self.cloud_cpu_max,
        }
    }

    /// Fixed per-device CPU allocation used every interval.
    pub fn cpu_allocation(&self) -> CpuAllocation {
        let even = CpuAllocation::even_split(&self.compute_params(), self.num_devices);
        CpuAllocation {
            local: self.local_cpu.unwrap_or(even.local),
            uav: self.uav_cpu_per_device.unwrap_or(even.uav),
            cloud: self.cloud_cpu_per_device.unwrap_or(even.cloud),
        }
    }

    pub fn q_cap(&self) -> f64 {
        self.q_cap.unwrap_or(4.0 * self.i_max)
    }

    pub fn arrival_process(&self) -> ArrivalProcess {
        ArrivalProcess {
            max_bits: self.i_max,
        }
    }

    pub fn reward_weights(&self) -> RewardWeights {
        RewardWeights {
            v1: self.v1,
            v2: self.v2,
            v3: self.v3,
            v4: self.v4,
            lyapunov_v: self.lyapunov_v,
            violation_penalty: self.violation_penalty,
        }
    }

    pub fn feasibility_limits(&self) -> FeasibilityLimits {
        let area = self.area();
        FeasibilityLimits {
            p_max: self.p_max,
            local_cpu_max: self.local_cpu_max,
            uav_cpu_max: self.uav_cpu_max,
            cloud_cpu_max: self.cloud_cpu_max,
            v_max: self.v_max,
            tau: self.tau,
            area,
            start: area.center(),
            end: area.center(),
            intervals: self.intervals,
        }
    }

    /// Maximum UAV displacement per interval.
    pub fn uav_step(&self) -> f64 {
        self.v_max * self.tau
    }
}

/// Load a configuration: defaults, then the file at `path` (if any), then
/// `key=value` overrides; the result is validated.
pub fn load_config<S: AsRef<str>>(path: Option<&Path>, overrides: &[S]) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        cfg.apply_str(&text)?;
    }
    cfg.apply_overrides(overrides)?;
    cfg.validate()?;
    Ok(cfg)
}
