//! Self-contained DQN (dense Q-network, replay buffer, target network,
//! epsilon-greedy exploration) and the baseline policies.

pub mod checkpoint;
pub mod dqn;
pub mod network;
pub mod policy;
pub mod replay;

pub use dqn::{argmax, epsilon_at, select_action, sync_target, train, train_step, TrainOutcome};
pub use network::{Dense, Gradient, QNetwork};
pub use policy::{baseline_action, Policy, PolicyKind};
pub use replay::{ReplayBuffer, Transition};
