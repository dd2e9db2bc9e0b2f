use std::path::Path;

use crate::agent::{checkpoint, Policy, PolicyKind};
use crate::config::SimConfig;
use crate::environment::{action_catalog, device_layout, Environment, TransitionRecord};
use crate::error::{Result, SimError};
use crate::objective::{long_term_pde, PdeAccumulator};
use crate::rng::{self, derive_seed, tags};

/// One evaluated (policy, arrival bound, seed) point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub policy: PolicyKind,
    pub i_max: f64,
    pub seed: u64,
    /// Pooled processed bits over pooled communication delay (bits/s).
    pub mean_pde: f64,
    /// Communication delay summed over devices, per interval (s).
    pub mean_cd: f64,
    /// Processed bits summed over devices, per interval.
    pub mean_pd: f64,
    /// Start-of-interval backlogs averaged over devices and intervals (bits).
    pub mean_ql: f64,
    pub mean_qu: f64,
    pub mean_qc: f64,
    /// Fraction of (device, interval) pairs missing the deadline.
    pub c10_violation_rate: f64,
    /// Mean final distance from the UAV to its required end point (m).
    pub terminal_uav_distance: f64,
}

/// Raw sums behind a [`ResultRow`], kept so that callers can inspect the
/// pooled history.
#[derive(Debug, Clone, Default)]
pub struct EvalRun {
    pub acc: PdeAccumulator,
    pub intervals: usize,
    pub device_intervals: usize,
    pub sum_cd: f64,
    pub sum_pd: f64,
    pub sum_q: [f64; 3],
    pub violations: usize,
    pub sum_terminal_distance: f64,
    pub episodes: usize,
}

impl EvalRun {
    fn absorb_step(&mut self, t: &TransitionRecord) {
        self.intervals += 1;
        self.sum_cd += t.record.comm_delay();
        self.sum_pd += t.record.processed();
        for d in &t.record.devices {
            self.device_intervals += 1;
            self.sum_q[0] += d.queues.q_local;
            self.sum_q[1] += d.queues.q_uav;
            self.sum_q[2] += d.queues.q_cloud;
            if !d.eta {
                self.violations += 1;
            }
        }
    }

    pub fn row(&self, policy: PolicyKind, i_max: f64, seed: u64) -> ResultRow {
        let per = |s: f64, n: usize| if n > 0 { s / n as f64 } else { 0.0 };
        ResultRow {
            policy,
            i_max,
            seed,
            mean_pde: long_term_pde(&self.acc),
            mean_cd: per(self.sum_cd, self.intervals),
            mean_pd: per(self.sum_pd, self.intervals),
            mean_ql: per(self.sum_q[0], self.device_intervals),
            mean_qu: per(self.sum_q[1], self.device_intervals),
            mean_qc: per(self.sum_q[2], self.device_intervals),
            c10_violation_rate: per(self.violations as f64, self.device_intervals),
            terminal_uav_distance: per(self.sum_terminal_distance, self.episodes),
        }
    }
}

/// Run one full episode from `seed` under `policy`, feeding every transition
/// to `sink`.
pub fn run_episode<R: rand::Rng + ?Sized>(
    env: &mut Environment,
    policy: &mut Policy,
    seed: u64,
    policy_rng: &mut R,
    mut sink: impl FnMut(&TransitionRecord),
) -> Result<()> {
    let mut obs = env.reset(seed);
    while !env.is_done() {
        let a = policy.act(&obs, policy_rng)?;
        let t = env.step(a)?;
        sink(&t);
        obs = t.next_observation;
    }
    Ok(())
}

/// Build a runnable policy; the DQN needs a checkpoint.
pub fn load_policy(kind: PolicyKind, cfg: &SimConfig, checkpoint_file: Option<&Path>) -> Result<Policy> {
    let catalog = action_catalog(cfg)?;
    match kind {
        PolicyKind::Dqn => {
            let path = checkpoint_file
                .ok_or_else(|| SimError::MissingCheckpoint("<none given>".into()))?;
            Policy::greedy(checkpoint::load(path)?, &catalog)
        }
        other => Policy::baseline(other, &catalog),
    }
}

/// Evaluate a frozen policy over `realizations` independent episodes.
///
/// Device placement comes from `seed`; episode `r` is driven by a stream
/// derived from `seed` and `r`, disjoint from the streams used in training.
pub fn run_eval(policy: &Policy, cfg: &SimConfig, seed: u64, realizations: usize) -> Result<ResultRow> {
    let (run, _) = evaluate(policy, cfg, seed, realizations, |_, _| {})?;
    Ok(run.row(policy.kind(), cfg.i_max, seed))
}

/// [`run_eval`] that also hands every transition, tagged with its episode
/// index, to `sink`.
pub fn run_eval_with(
    policy: &Policy,
    cfg: &SimConfig,
    seed: u64,
    realizations: usize,
    sink: impl FnMut(usize, &TransitionRecord),
) -> Result<ResultRow> {
    let (run, _) = evaluate(policy, cfg, seed, realizations, sink)?;
    Ok(run.row(policy.kind(), cfg.i_max, seed))
}

fn evaluate(
    policy: &Policy,
    cfg: &SimConfig,
    seed: u64,
    realizations: usize,
    mut sink: impl FnMut(usize, &TransitionRecord),
) -> Result<(EvalRun, Environment)> {
    let layout = device_layout(cfg, derive_seed(seed, tags::LAYOUT));
    let mut env = Environment::new(cfg, layout)?;
    let mut policy = policy.clone();
    let mut policy_rng = rng::stream(derive_seed(seed, tags::POLICY));
    let eval_seed = derive_seed(seed, tags::EVAL);
    let end = cfg.feasibility_limits().end;
    let mut run = EvalRun::default();
    for r in 0..realizations {
        run_episode(&mut env, &mut policy, derive_seed(eval_seed, r as u64), &mut policy_rng, |t| {
            run.absorb_step(t);
            sink(r, t);
        })?;
        run.acc.absorb(&env.state().acc);
        run.sum_terminal_distance += env.state().uav.distance_to(&end);
        run.episodes += 1;
    }
    Ok((run, env))
}

/// Every transition of the first evaluation episode for `seed`, the same
/// episode that [`run_eval`] starts with.
pub fn episode_records(policy: &Policy, cfg: &SimConfig, seed: u64) -> Result<Vec<TransitionRecord>> {
    let mut out = Vec::with_capacity(cfg.intervals);
    evaluate(policy, cfg, seed, 1, |_, t| out.push(t.clone()))?;
    Ok(out)
}
