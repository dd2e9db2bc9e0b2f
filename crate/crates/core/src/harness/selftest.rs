//! Quick consistency checks runnable from the command line. Each check
//! compares a module against an independent recomputation.

use crate::agent::{checkpoint, Gradient, QNetwork};
use crate::channel::rician_sample;
use crate::config::SimConfig;
use crate::environment::Environment;
use crate::objective::{drift_plus_penalty_value, reward, DeviceHistory, PdeAccumulator, RewardWeights};
use crate::queueing::{compute_splits, QueueTriple};
use crate::rng;
use crate::channel::Position2D;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn fading_power() -> CheckResult {
    let mut r = rng::stream(11);
    let n = 20_000;
    let mean = (0..n).map(|_| rician_sample(&mut r, 10.0).norm_sqr()).sum::<f64>() / n as f64;
    check("fading_unit_power", (mean - 1.0).abs() < 0.03, format!("E|rho|^2 = {mean:.4}"))
}

fn queue_example() -> CheckResult {
    let q = QueueTriple::new(1e5, 5e4, 2e4);
    let s = compute_splits(&q, 0.6, 0.3, 0.3, 0.6, 0.3);
    let next = q.advance(&s, 2e4);
    // hand-evaluated: L = 1e5 - 6e4 - 1.2e4 + 2e4, U = 5e4 + 6e4 - 1.5e4 - 2.1e4,
    // C = 2e4 + 1.5e4 - 6e3
    let want = [4.8e4, 7.4e4, 2.9e4];
    let got = next.as_array();
    let ok = got.iter().zip(want).all(|(g, w)| (g - w).abs() < 1e-6);
    check("queue_update", ok, format!("{got:?} vs {want:?}"))
}

fn reward_matches_objective() -> CheckResult {
    let q = QueueTriple::new(1e5, 5e4, 2e4);
    let s = compute_splits(&q, 0.6, 0.3, 0.3, 0.6, 0.3);
    let mut acc = PdeAccumulator::new(1);
    acc.record(&[3e4], &[0.5]);
    let w = RewardWeights { v1: 1.0, v2: 1.0, v3: 1.0, v4: 1.0, lyapunov_v: 1.0, violation_penalty: 0.0 };
    let r = reward(&q, &s, 0.7, &acc.device(0), &w, true);
    let dpp = drift_plus_penalty_value(&[q], &[s], &[0.7], &acc, 1.0);
    check("reward_vs_objective", (r - dpp).abs() <= 1e-9 * dpp.abs().max(1.0), format!("{r} vs {dpp}"))
}

fn zero_history_pde() -> CheckResult {
    let h = DeviceHistory::default();
    check("empty_history_pde", h.pde() == 0.0, format!("{}", h.pde()))
}

fn gradient_finite_difference() -> CheckResult {
    let mut r = rng::stream(5);
    let net = QNetwork::new(&[4, 6, 5, 3], &mut r);
    let xs = [vec![0.1, 0.7, 0.3, 0.9], vec![0.5, 0.2, 0.8, 0.4]];
    let inputs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let actions = [2, 0];
    let targets = [0.4, -0.3];
    let mut grad = Gradient::for_network(&net);
    if net.loss_and_gradient(&inputs, &actions, &targets, &mut grad).is_err() {
        return check("gradient_fd", false, "loss evaluation failed".into());
    }
    let loss_at = |n: &QNetwork| {
        let mut g = Gradient::for_network(n);
        n.loss_and_gradient(&inputs, &actions, &targets, &mut g).unwrap_or(f64::NAN)
    };
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for l in 0..net.layers().len() {
        for i in 0..net.layers()[l].weights.len() {
            let mut plus = net.clone();
            plus.layers_mut()[l].weights[i] += h;
            let mut minus = net.clone();
            minus.layers_mut()[l].weights[i] -= h;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            let an = grad.layers[l].weights[i];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    check("gradient_fd", worst < 1e-4, format!("max relative error {worst:.2e}"))
}

fn checkpoint_round_trip() -> CheckResult {
    let net = QNetwork::new(&[3, 4, 2], &mut rng::stream(9));
    let ok = checkpoint::decode(&checkpoint::encode(&net)).map(|n| n == net).unwrap_or(false);
    check("checkpoint_round_trip", ok, String::new())
}

fn environment_determinism() -> CheckResult {
    let mut cfg = SimConfig::default();
    cfg.intervals = 50;
    let devices = vec![Position2D::new(100.0, 200.0), Position2D::new(400.0, 50.0)];
    let run = || -> Option<Vec<f64>> {
        let mut env = Environment::new(&cfg, devices.clone()).ok()?;
        env.reset(42);
        let n = env.catalog().len();
        let mut out = Vec::new();
        let mut i = 0;
        while !env.is_done() {
            let t = env.step((i * 37) % n).ok()?;
            out.push(t.reward);
            out.extend(t.record.devices.iter().map(|d| d.queues.total()));
            i += 1;
        }
        Some(out)
    };
    let (a, b) = (run(), run());
    check("environment_determinism", a.is_some() && a == b, String::new())
}

/// Run every check.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        fading_power(),
        queue_example(),
        reward_matches_objective(),
        zero_history_pde(),
        gradient_finite_difference(),
        checkpoint_round_trip(),
        environment_determinism(),
    ]
}
