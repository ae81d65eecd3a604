//! Comparator losses and approximate-regret accounting.

use serde::Serialize;

use crate::domain::{Environment, Ranking};
use crate::error::{Error, Result};

/// `Σ_t ℓ_t(σ(A_t))` for a single ranking.
pub fn comparator_loss_of(sigma: &Ranking, env: &Environment) -> Result<f64> {
    check_ranking_size(sigma, env)?;
    env.rounds.iter().map(|r| r.comparator_loss(sigma)).sum()
}

/// Running totals of `ℓ_t(σ(A_t))`, one entry per round.
pub fn comparator_trajectory(sigma: &Ranking, env: &Environment) -> Result<Vec<f64>> {
    check_ranking_size(sigma, env)?;
    let mut acc = 0.0;
    env.rounds
        .iter()
        .map(|r| {
            acc += r.comparator_loss(sigma)?;
            Ok(acc)
        })
        .collect()
}

fn check_ranking_size(sigma: &Ranking, env: &Environment) -> Result<()> {
    if sigma.len() != env.n {
        return Err(Error::domain(format!(
            "ranking over {} actions used on an environment with N = {}",
            sigma.len(),
            env.n
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxRegret {
    pub alpha: f64,
    pub value: f64,
}

/// Learner loss against the best ranking, with `learner − α·L*` at each requested `α`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub learner_loss: f64,
    pub comparator_loss: f64,
    pub best_ranking: Ranking,
    /// False when `comparator_loss` came from sampling rather than an exact oracle.
    pub comparator_exact: bool,
    pub approx_regret: Vec<ApproxRegret>,
    /// `(learner cumulative, comparator cumulative)` after each round.
    pub per_round_cumulative: Vec<(f64, f64)>,
}

impl RegretReport {
    pub fn build(
        env: &Environment,
        learner_losses: &[f64],
        best_ranking: Ranking,
        comparator_exact: bool,
        alphas: &[f64],
    ) -> Result<Self> {
        if learner_losses.len() != env.horizon() {
            return Err(Error::domain(format!(
                "{} learner losses for a horizon of {}",
                learner_losses.len(),
                env.horizon()
            )));
        }
        let comparator = comparator_trajectory(&best_ranking, env)?;
        let mut learner_cum = 0.0;
        let per_round_cumulative: Vec<(f64, f64)> = learner_losses
            .iter()
            .zip(&comparator)
            .map(|(&l, &c)| {
                learner_cum += l;
                (learner_cum, c)
            })
            .collect();
        let learner_loss = learner_cum;
        let comparator_loss = comparator.last().copied().unwrap_or(0.0);
        let approx_regret = alphas
            .iter()
            .map(|&alpha| ApproxRegret {
                alpha,
                value: learner_loss - alpha * comparator_loss,
            })
            .collect();
        Ok(RegretReport {
            learner_loss,
            comparator_loss,
            best_ranking,
            comparator_exact,
            approx_regret,
            per_round_cumulative,
        })
    }

    pub fn approx_regret_at(&self, alpha: f64) -> f64 {
        self.learner_loss - alpha * self.comparator_loss
    }
}
