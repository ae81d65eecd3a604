//! Bandit feedback: the learner observes only the loss of the action it plays.
//!
//! Bandit algorithms never see a [`RoundTrace`]. Each round they get the
//! available set and a [`LossQuery`], which reveals exactly one loss and is
//! consumed by doing so.

pub mod hatt;
pub mod level;
pub mod rounding;

pub use hatt::{
    estimated_certificate, exploration_draw, BanditHatt, BanditHattConfig, BanditHattStep,
};
pub use level::{
    level_bound, level_certificate, level_step, Level, LevelState, LevelStep, LevelViolation,
};
pub use rounding::{round_environment, round_losses};

use crate::domain::{ActionId, RoundTrace};
use crate::error::{Error, Result};

/// One-shot access to the loss of a single action in the current round.
pub struct LossQuery<'a> {
    round: &'a RoundTrace,
}

impl<'a> LossQuery<'a> {
    pub fn new(round: &'a RoundTrace) -> Self {
        LossQuery { round }
    }

    /// Index of the round being played.
    pub fn round_index(&self) -> usize {
        self.round.t
    }

    /// Reveals `ℓ_t(action)`; fails if `action` is not available.
    pub fn reveal(self, action: ActionId) -> Result<f64> {
        self.round
            .loss_of(action)
            .ok_or_else(|| Error::Precondition {
                round: self.round.t,
                reason: format!("played unavailable action {action}"),
            })
    }
}

pub(crate) fn require_binary(round: usize, loss: f64) -> Result<()> {
    if loss == 0.0 || loss == 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition {
            round,
            reason: format!("observed non-binary loss {loss}"),
        })
    }
}
