//! Online learning with changing action sets ("sleeping" experts and bandits),
//! measured by approximate regret against the best ranking of actions.
//!
//! - [`hedge`]: exponential weights over small choice sets.
//! - [`hatt`]: full information, exactly one zero-loss action per round.
//! - [`hopp`]: full information, exactly two zero-loss actions per round.
//! - [`bandit`]: Bandit-HATT, the deterministic Level algorithm, and loss rounding.
//! - [`oracle`]: exact best-ranking comparators and baseline learners.
//! - [`envgen`]: environment generators and the one-one → one-zero adapter.
//! - [`harness`] and [`experiment`]: checked replays and config-driven runs.

pub mod bandit;
pub mod domain;
pub mod envgen;
pub mod error;
pub mod experiment;
pub mod harness;
pub mod hatt;
pub mod hedge;
pub mod hopp;
pub mod oracle;
pub mod regret;
pub mod rng;
pub mod tournament;
pub mod trace;

pub use domain::{
    actions, sigma_choice, validate_as, validate_environment, ActionId, Diagnostic, Environment,
    LossMode, Pair, Ranking, RoundTrace, ZeroCountClass,
};
pub use error::{Error, InvariantViolation, Result};
pub use hedge::{ewu_update, hedge_bound, HedgeInstance};
pub use regret::{comparator_loss_of, comparator_trajectory, ApproxRegret, RegretReport};
pub use rng::{RngContract, SimRng, StreamTag};
