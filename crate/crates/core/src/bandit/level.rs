//! The Level algorithm: play a minimum-level available action and demote it
//! on every mistake. Deterministic, and needs only the played action's loss.

use rand::Rng;

use super::{require_binary, LossQuery};
use crate::domain::{ActionId, Ranking};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelState {
    levels: Vec<u64>,
}

impl LevelState {
    pub fn new(n: usize) -> Self {
        LevelState { levels: vec![0; n] }
    }

    pub fn levels(&self) -> &[u64] {
        &self.levels
    }

    pub fn level(&self, a: ActionId) -> u64 {
        self.levels[a.0]
    }

    /// `Σ_a level(a)`; equals the learner's cumulative loss.
    pub fn total(&self) -> u64 {
        self.levels.iter().sum()
    }

    /// Overwrites one level. Only meant for building counterexamples.
    pub fn set_level(&mut self, a: ActionId, level: u64) {
        self.levels[a.0] = level;
    }

    /// Lowest-id action among the minimum-level members of `available`.
    pub fn argmin(&self, available: &[ActionId]) -> Result<ActionId> {
        let mut best: Option<ActionId> = None;
        for &a in available {
            if a.0 >= self.levels.len() {
                return Err(Error::domain(format!(
                    "action {a} outside 0..{}",
                    self.levels.len()
                )));
            }
            let better = match best {
                None => true,
                Some(b) => (self.levels[a.0], a) < (self.levels[b.0], b),
            };
            if better {
                best = Some(a);
            }
        }
        best.ok_or_else(|| Error::domain("level step over an empty action set"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStep {
    pub chosen: ActionId,
    pub loss: f64,
}

pub fn level_step(
    state: &mut LevelState,
    available: &[ActionId],
    query: LossQuery<'_>,
) -> Result<LevelStep> {
    let chosen = state.argmin(available)?;
    let t = query.round_index();
    let loss = query.reveal(chosen)?;
    require_binary(t, loss)?;
    if loss == 1.0 {
        state.levels[chosen.0] += 1;
    }
    Ok(LevelStep { chosen, loss })
}

/// An action whose level exceeds `m_σ(a) − 1 + Σ_{τ<t} ℓ_τ(σ(A_τ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelViolation {
    pub action: ActionId,
    pub level: u64,
    pub bound: f64,
}

/// Checks `level(a) ≤ m_σ(a) − 1 + cum_sigma_loss` for every action.
pub fn level_certificate(
    state: &LevelState,
    sigma: &Ranking,
    cum_sigma_loss: f64,
) -> std::result::Result<(), LevelViolation> {
    for (i, &level) in state.levels.iter().enumerate() {
        let a = ActionId(i);
        let bound = sigma.rank(a) as f64 + cum_sigma_loss;
        if level as f64 > bound {
            return Err(LevelViolation {
                action: a,
                level,
                bound,
            });
        }
    }
    Ok(())
}

/// `N·L* + N(N−1)/2`.
pub fn level_bound(n: usize, comparator_loss: f64) -> f64 {
    n as f64 * comparator_loss + (n * n.saturating_sub(1) / 2) as f64
}

/// Level as a stateful learner.
#[derive(Debug, Clone)]
pub struct Level {
    state: LevelState,
}

impl Level {
    pub fn new(n: usize) -> Self {
        Level {
            state: LevelState::new(n),
        }
    }

    pub fn state(&self) -> &LevelState {
        &self.state
    }

    /// The rng is unused; the signature matches the other bandit learners.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        available: &[ActionId],
        query: LossQuery<'_>,
        _rng: &mut R,
    ) -> Result<LevelStep> {
        level_step(&mut self.state, available, query)
    }
}
