//! Placement of aerial mobile access points (MAPs) on a 3D grid and
//! association of mobile ground users to access points.
//!
//! The crate is organised around the simulation pipeline:
//!
//! * [`scenario`] describes the world (area, fleet, candidate locations,
//!   users) and advances user mobility and traffic.
//! * [`channel`] turns geometry into path loss, link budgets, SINR and rates.
//! * [`association`] holds the MAX-SNR baseline, QoS accounting and the
//!   alpha-fair network utility.
//! * [`deployment`] prices MAP moves, checks the placement constraints and
//!   implements the SIMBA Monte-Carlo search next to exhaustive and random
//!   baselines.
//! * [`marl`] trains a shared actor-critic association policy with PPO.
//! * [`experiments`] reproduces the cost, QoS, sum-rate and handover sweeps
//!   and writes them as CSV.

pub mod association;
pub mod channel;
pub mod deployment;
pub mod error;
pub mod experiments;
pub mod marl;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
