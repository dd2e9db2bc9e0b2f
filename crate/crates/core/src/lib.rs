//! Discrete-interval simulator of a three-tier (IoT device, UAV, cloud)
//! mobile edge computing network with per-device task queues, together with
//! a small self-contained DQN allocator and three baseline policies.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: geometry, path loss and Rician block fading
//! - [`phy_link`]: uplink SINR, Shannon rate and communication delays
//! - [`computation`]: per-tier computation delays and the end-to-end task delay
//! - [`queueing`]: queue splits, the three queue update laws, backlog statistics
//! - [`objective`]: processed data, PDE, drift-plus-penalty, reward, feasibility
//! - [`environment`]: the MDP wrapper (catalog, observation, transition)
//! - [`agent`]: Q-network, replay, target network, baselines, training loop
//! - [`harness`]: configuration, evaluation, sweeps and CSV output

pub mod agent;
pub mod channel;
pub mod computation;
pub mod config;
pub mod environment;
pub mod error;
pub mod harness;
pub mod objective;
pub mod phy_link;
pub mod queueing;
pub mod rng;

pub use config::{SimConfig, TrainConfig};
pub use error::{Result, SimError};
