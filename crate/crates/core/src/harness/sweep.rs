use std::path::{Path, PathBuf};

use super::eval::{run_eval, ResultRow};
use crate::agent::{checkpoint, train, Policy, PolicyKind, QNetwork};
use crate::config::SimConfig;
use crate::environment::{device_layout, Environment};
use crate::error::{Result, SimError};
use crate::rng::{derive_seed, tags};

/// Arrival bounds swept by default (bits per interval).
pub const DEFAULT_I_MAX_GRID: [f64; 5] = [0.5e5, 1.0e5, 1.5e5, 2.0e5, 2.5e5];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub i_max_values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicyKind>,
    pub realizations: usize,
    /// Train one network (first seed, last grid point) and evaluate it
    /// everywhere instead of retraining per point.
    pub shared_model: bool,
    /// Load `<out>/dqn_<i_max>_<seed>.ckpt` when it already exists.
    pub reuse_checkpoints: bool,
    pub verbose: bool,
}

impl SweepSpec {
    pub fn new(i_max_values: Vec<f64>, seeds: Vec<u64>, policies: Vec<PolicyKind>, realizations: usize) -> Self {
        Self {
            i_max_values,
            seeds,
            policies,
            realizations,
            shared_model: false,
            reuse_checkpoints: false,
            verbose: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.i_max_values.is_empty() || self.seeds.is_empty() || self.policies.is_empty() {
            return Err(SimError::InvalidSweep("grid, seeds and policies must be nonempty".into()));
        }
        if self.realizations == 0 {
            return Err(SimError::InvalidSweep("realizations must be at least 1".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(SimError::InvalidSweep("seeds must be distinct".into()));
        }
        if self.i_max_values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SimError::InvalidSweep("arrival bounds must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

fn i_max_label(i_max: f64) -> String {
    if i_max.fract() == 0.0 && i_max.abs() < 1e15 {
        format!("{}", i_max as i64)
    } else {
        format!("{i_max}")
    }
}

/// `<out>/dqn_<i_max>_<seed>.ckpt`
pub fn checkpoint_path(out: &Path, i_max: f64, seed: u64) -> PathBuf {
    out.join(format!("dqn_{}_{}.ckpt", i_max_label(i_max), seed))
}

/// Train the DQN for one (config, seed) pair on that seed's device layout.
pub fn train_policy(cfg: &SimConfig, seed: u64) -> Result<QNetwork> {
    let layout = device_layout(cfg, derive_seed(seed, tags::LAYOUT));
    let mut env = Environment::new(cfg, layout)?;
    Ok(train(&mut env, &cfg.train, derive_seed(seed, tags::TRAIN))?.net)
}

fn obtain_network(cfg: &SimConfig, seed: u64, spec: &SweepSpec, out: Option<&Path>) -> Result<QNetwork> {
    let path = out.map(|o| checkpoint_path(o, cfg.i_max, seed));
    if spec.reuse_checkpoints {
        if let Some(p) = path.as_deref().filter(|p| p.exists()) {
            return checkpoint::load(p);
        }
    }
    if spec.verbose {
        eprintln!("training dqn: i_max={} seed={seed}", cfg.i_max);
    }
    let net = train_policy(cfg, seed)?;
    if let Some(p) = &path {
        checkpoint::save(&net, p)?;
    }
    Ok(net)
}

/// Evaluate every policy at every (arrival bound, seed) point.
///
/// Rows come back sorted by (policy name, i_max, seed) whatever order they
/// were computed in.
pub fn run_sweep(spec: &SweepSpec, cfg: &SimConfig, out: Option<&Path>) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let wants_dqn = spec.policies.contains(&PolicyKind::Dqn);
    let shared = if wants_dqn && spec.shared_model {
        let mut c = cfg.clone();
        c.i_max = *spec.i_max_values.last().unwrap();
        c.validate()?;
        Some(obtain_network(&c, spec.seeds[0], spec, out)?)
    } else {
        None
    };

    let mut rows = Vec::new();
    for &i_max in &spec.i_max_values {
        let mut point = cfg.clone();
        point.i_max = i_max;
        point.validate()?;
        let catalog = crate::environment::action_catalog(&point)?;
        for &seed in &spec.seeds {
            for &kind in &spec.policies {
                let policy = match kind {
                    PolicyKind::Dqn => {
                        let net = match &shared {
                            Some(n) => n.clone(),
                            None => obtain_network(&point, seed, spec, out)?,
                        };
                        Policy::greedy(net, &catalog)?
                    }
                    other => Policy::baseline(other, &catalog)?,
                };
                let row = run_eval(&policy, &point, seed, spec.realizations)?;
                if spec.verbose {
                    eprintln!(
                        "{:<12} i_max={:<8} seed={:<4} pde={:.1} cd={:.4} pd={:.1}",
                        kind.name(),
                        i_max,
                        seed,
                        row.mean_pde,
                        row.mean_cd,
                        row.mean_pd
                    );
                }
                rows.push(row);
            }
        }
    }
    rows.sort_by(|a, b| {
        a.policy
            .name()
            .cmp(b.policy.name())
            .then(a.i_max.total_cmp(&b.i_max))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(rows)
}
