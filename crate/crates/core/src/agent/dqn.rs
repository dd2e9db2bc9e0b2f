//! DQN learning: epsilon-greedy selection, the TD update against a frozen
//! target network, and the episode loop.

use std::collections::HashMap;

use rand::Rng;

use super::network::{Gradient, QNetwork};
use super::replay::{ReplayBuffer, Transition};
use crate::config::TrainConfig;
use crate::environment::{observation_width, Environment};
use crate::error::{Result, SimError};
use crate::rng::{self, derive_seed, tags};

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy action. One uniform draw decides exploration; exploring
/// draws a second uniform index over the catalog.
pub fn select_action<R: Rng + ?Sized>(
    net: &QNetwork,
    obs: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    let u: f64 = rng.random();
    if u < epsilon {
        Ok(rng.random_range(0..net.output_width()))
    } else {
        Ok(argmax(&net.forward(obs)?))
    }
}

/// Make `target` an exact copy of `net`.
pub fn sync_target(net: &QNetwork, target: &mut QNetwork) {
    target.copy_from(net);
}

/// Linear epsilon decay from `start` to `end` over `decay_steps` steps.
pub fn epsilon_at(cfg: &TrainConfig, step: usize, total_steps: usize) -> f64 {
    let horizon = cfg.epsilon_decay_fraction * total_steps as f64;
    if horizon <= 0.0 {
        return cfg.epsilon_end;
    }
    let frac = step as f64 / horizon;
    if frac >= 1.0 {
        return cfg.epsilon_end;
    }
    cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac
}

fn feature_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Memo of `max_a Q_target(s', a)` per next-state. Valid only while the
/// target network is unchanged; clear it on every sync.
#[derive(Debug, Default, Clone)]
pub struct TargetCache {
    values: HashMap<Vec<u64>, f64>,
}

impl TargetCache {
    pub fn clear(&mut self) {
        self.values.clear();
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max_a Q_target(x, a)` for every input, evaluating misses together.
    fn max_q_many(&mut self, target: &QNetwork, xs: &[&[f64]]) -> Result<Vec<f64>> {
        let keys: Vec<Vec<u64>> = xs.iter().map(|x| feature_key(x)).collect();
        let mut missing: Vec<usize> = Vec::new();
        let mut seen = HashMap::new();
        for (i, k) in keys.iter().enumerate() {
            if !self.values.contains_key(k) && seen.insert(k, i).is_none() {
                missing.push(i);
            }
        }
        if !missing.is_empty() {
            let inputs: Vec<&[f64]> = missing.iter().map(|&i| xs[i]).collect();
            let values = target.max_outputs(&inputs)?;
            for (&i, v) in missing.iter().zip(values) {
                self.values.insert(keys[i].clone(), v);
            }
        }
        Ok(keys.iter().map(|k| self.values[k]).collect())
    }
}

/// Gradient descent with global-norm clipping and optional momentum.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    pub grad_clip: f64,
    grad: Option<Gradient>,
    velocity: Option<QNetwork>,
}

impl Sgd {
    pub fn new(cfg: &TrainConfig) -> Self {
        Self {
            learning_rate: cfg.learning_rate,
            momentum: cfg.momentum,
            grad_clip: cfg.grad_clip,
            grad: None,
            velocity: None,
        }
    }

    fn apply(&mut self, net: &mut QNetwork, grad: &mut Gradient) {
        let norm = grad.norm();
        if norm > self.grad_clip {
            grad.scale(self.grad_clip / norm);
        }
        let lr = self.learning_rate;
        let n = net.layers().len();
        if self.momentum == 0.0 {
            for (p, g) in net.layers_mut()[..n - 1].iter_mut().zip(&grad.layers) {
                p.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w -= lr * d);
                p.biases.iter_mut().zip(&g.biases).for_each(|(b, d)| *b -= lr * d);
            }
            let out = &mut net.layers_mut()[n - 1];
            let g = &grad.layers[n - 1];
            let width = out.outputs;
            for &a in grad.touched_outputs() {
                for i in 0..out.inputs {
                    out.weights[i * width + a] -= lr * g.weights[i * width + a];
                }
                out.biases[a] -= lr * g.biases[a];
            }
            return;
        }
        let mu = self.momentum;
        let vel = self
            .velocity
            .get_or_insert_with(|| QNetwork::zeros(&net.sizes()));
        for ((p, v), g) in net
            .layers_mut()
            .iter_mut()
            .zip(vel.layers_mut())
            .zip(&grad.layers)
        {
            for ((w, vw), d) in p.weights.iter_mut().zip(&mut v.weights).zip(&g.weights) {
                *vw = mu * *vw + d;
                *w -= lr * *vw;
            }
            for ((b, vb), d) in p.biases.iter_mut().zip(&mut v.biases).zip(&g.biases) {
                *vb = mu * *vb + d;
                *b -= lr * *vb;
            }
        }
    }
}

/// One DQN update on `net` from `batch`; returns the loss before the update.
pub fn train_step(
    net: &mut QNetwork,
    target: &QNetwork,
    batch: &[&Transition],
    cfg: &TrainConfig,
) -> Result<f64> {
    train_step_with(net, target, batch, cfg, &mut Sgd::new(cfg), &mut TargetCache::default())
}

/// [`train_step`] with a persistent optimizer and target-value memo.
pub fn train_step_with(
    net: &mut QNetwork,
    target: &QNetwork,
    batch: &[&Transition],
    cfg: &TrainConfig,
    opt: &mut Sgd,
    cache: &mut TargetCache,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(SimError::InvalidValue {
            key: "batch".into(),
            reason: "empty batch".into(),
        });
    }
    let live: Vec<&[f64]> = batch
        .iter()
        .filter(|t| !t.done)
        .map(|t| t.next_state.as_slice())
        .collect();
    let mut bootstrap = cache.max_q_many(target, &live)?.into_iter();
    let targets: Vec<f64> = batch
        .iter()
        .map(|t| {
            if t.done {
                t.reward
            } else {
                t.reward + cfg.gamma * bootstrap.next().unwrap_or(0.0)
            }
        })
        .collect();
    let inputs: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
    let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
    let mut grad = opt.grad.take().unwrap_or_else(|| Gradient::for_network(net));
    let loss = net.loss_and_gradient(&inputs, &actions, &targets, &mut grad)?;
    if !loss.is_finite() {
        opt.grad = Some(grad);
        return Err(SimError::Divergence { step: 0, loss });
    }
    opt.apply(net, &mut grad);
    opt.grad = Some(grad);
    Ok(loss)
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: QNetwork,
    /// Cumulative (unscaled) reward of each episode.
    pub episode_rewards: Vec<f64>,
    /// Mean loss of each episode (0 before learning starts).
    pub episode_losses: Vec<f64>,
    pub gradient_steps: usize,
}

/// Train a DQN on `env`. Episode `e` is driven by a seed derived from
/// `seed` and `e`; exploration, replay sampling and initialisation draw from
/// separate derived streams, so a fixed seed reproduces the run exactly.
pub fn train(env: &mut Environment, cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    let sim = env.config().clone();
    let mut sizes = vec![observation_width(&sim)];
    sizes.extend(&cfg.hidden_layers);
    sizes.push(env.catalog().len());

    let mut init_rng = rng::stream(derive_seed(seed, tags::INIT));
    let mut explore_rng = rng::stream(derive_seed(seed, tags::POLICY));
    let mut replay_rng = rng::stream(derive_seed(seed, tags::TRAIN));

    let mut net = QNetwork::new(&sizes, &mut init_rng);
    let mut target = net.clone();
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut opt = Sgd::new(cfg);
    let mut cache = TargetCache::default();

    let total_steps = cfg.episodes * sim.intervals;
    let mut step = 0usize;
    let mut gradient_steps = 0usize;
    let mut episode_rewards = Vec::with_capacity(cfg.episodes);
    let mut episode_losses = Vec::with_capacity(cfg.episodes);

    for episode in 0..cfg.episodes {
        let mut obs = env.reset(derive_seed(seed, 1000 + episode as u64)).features();
        let mut total = 0.0;
        let mut loss_sum = 0.0;
        let mut loss_n = 0usize;
        while !env.is_done() {
            let eps = epsilon_at(cfg, step, total_steps);
            let a = select_action(&net, &obs, eps, &mut explore_rng)?;
            let rec = env.step(a)?;
            total += rec.reward;
            let tr = Transition::from_record(&rec, cfg.reward_scale);
            obs = tr.next_state.clone();
            buffer.push(tr);
            step += 1;

            if buffer.len() >= cfg.batch_size && step % cfg.train_every == 0 {
                let batch = buffer.sample(cfg.batch_size, &mut replay_rng);
                let loss = train_step_with(&mut net, &target, &batch, cfg, &mut opt, &mut cache)
                    .map_err(|e| match e {
                        SimError::Divergence { loss, .. } => SimError::Divergence { step, loss },
                        other => other,
                    })?;
                loss_sum += loss;
                loss_n += 1;
                gradient_steps += 1;
                if gradient_steps % cfg.target_sync == 0 {
                    sync_target(&net, &mut target);
                    cache.clear();
                }
            }
        }
        episode_rewards.push(total);
        episode_losses.push(if loss_n > 0 { loss_sum / loss_n as f64 } else { 0.0 });
    }

    Ok(TrainOutcome {
        net,
        episode_rewards,
        episode_losses,
        gradient_steps,
    })
}
