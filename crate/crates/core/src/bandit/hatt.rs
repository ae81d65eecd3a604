//! Bandit-HATT: HATT with uniform exploration and inverse-propensity pair losses.
//!
//! Every round the tournament proposes `â_t`. With probability `μ` the learner
//! instead plays a uniform draw from `A_t`; if that exploratory action turns
//! out to have loss 0 it must be `z_t`, and every consulted pair containing it
//! charges its other member `|A_t|/μ`. Nothing else ever updates the hedges.
//!
//! Random draws per round, in order: the tournament's match samples, the
//! Bernoulli(`μ`) exploration coin, then (only when exploring) the uniform draw.

use std::collections::BTreeSet;

use rand::Rng;

use super::{require_binary, LossQuery};
use crate::domain::ActionId;
use crate::error::{Error, Result};
use crate::hatt::PairLossCertificate;
use crate::tournament::{run_tournament, PairHedgeBank, TournamentOutcome};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BanditHattConfig {
    pub mu: f64,
    pub eta: f64,
    /// Declared bound on `|A_t|`; sets the hedge loss range `K/μ`.
    pub k: usize,
}

impl BanditHattConfig {
    pub fn new(mu: f64, eta: f64, k: usize) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::config(format!(
                "exploration probability mu must lie in (0, 1], got {mu}"
            )));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::config(format!(
                "learning rate eta must be positive, got {eta}"
            )));
        }
        if k == 0 {
            return Err(Error::config("availability bound K must be at least 1"));
        }
        Ok(BanditHattConfig { mu, eta, k })
    }

    /// `μ = min{N·√(K/T), 1}`, `η = μ/K`.
    pub fn defaults(n: usize, k: usize, horizon: usize) -> Result<Self> {
        let mu = default_mu(n, k, horizon);
        Self::new(mu, mu / k.max(1) as f64, k)
    }

    pub fn loss_range(&self) -> f64 {
        self.k as f64 / self.mu
    }
}

pub fn default_mu(n: usize, k: usize, horizon: usize) -> f64 {
    if horizon == 0 {
        return 1.0;
    }
    (n as f64 * (k as f64 / horizon as f64).sqrt()).min(1.0)
}

/// With probability `μ`, a uniform draw from `available`; otherwise `None`.
pub fn exploration_draw<R: Rng + ?Sized>(
    mu: f64,
    available: &[ActionId],
    rng: &mut R,
) -> Option<ActionId> {
    if rng.gen_bool(mu) {
        Some(available[rng.gen_range(0..available.len())])
    } else {
        None
    }
}

/// One realization of the estimated pair losses for a fixed tournament
/// outcome, drawing `(ρ_t, exploration)` afresh. Non-empty only when the
/// exploratory draw hits `zero_action`.
pub fn estimated_certificate<R: Rng + ?Sized>(
    round: usize,
    outcome: &TournamentOutcome,
    available: &[ActionId],
    zero_action: ActionId,
    mu: f64,
    rng: &mut R,
) -> PairLossCertificate {
    let hit = exploration_draw(mu, available, rng) == Some(zero_action);
    certificate_for(round, outcome, available.len(), zero_action, mu, hit)
}

fn certificate_for(
    round: usize,
    outcome: &TournamentOutcome,
    size: usize,
    zero_action: ActionId,
    mu: f64,
    hit: bool,
) -> PairLossCertificate {
    let charged: BTreeSet<_> = if hit {
        outcome
            .consulted
            .iter()
            .copied()
            .filter(|p| p.contains(zero_action))
            .collect()
    } else {
        BTreeSet::new()
    };
    PairLossCertificate {
        round,
        zero_action,
        charge: size as f64 / mu,
        charged,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditHattStep {
    pub chosen: ActionId,
    pub loss: f64,
    /// The tournament proposal `â_t`.
    pub proposed: ActionId,
    pub outcome: TournamentOutcome,
    /// `ρ_t = 1`.
    pub explored: bool,
    /// Present exactly when the hedges were updated.
    pub certificate: Option<PairLossCertificate>,
}

impl BanditHattStep {
    pub fn updated(&self) -> bool {
        self.certificate.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct BanditHatt {
    config: BanditHattConfig,
    bank: PairHedgeBank,
}

impl BanditHatt {
    pub fn new(config: BanditHattConfig) -> Result<Self> {
        let bank = PairHedgeBank::new(config.eta, config.loss_range())?;
        Ok(BanditHatt { config, bank })
    }

    pub fn config(&self) -> &BanditHattConfig {
        &self.config
    }

    pub fn bank(&self) -> &PairHedgeBank {
        &self.bank
    }

    pub fn step<R: Rng + ?Sized>(
        &mut self,
        available: &[ActionId],
        query: LossQuery<'_>,
        rng: &mut R,
    ) -> Result<BanditHattStep> {
        let t = query.round_index();
        if available.len() > self.config.k {
            return Err(Error::Precondition {
                round: t,
                reason: format!(
                    "{} available actions exceed K = {}",
                    available.len(),
                    self.config.k
                ),
            });
        }
        let outcome = run_tournament(available, &mut self.bank, rng)?;
        let proposed = outcome.winner;
        let explore = exploration_draw(self.config.mu, available, rng);
        let chosen = explore.unwrap_or(proposed);
        let loss = query.reveal(chosen)?;
        require_binary(t, loss)?;
        let certificate = if explore.is_some() && loss == 0.0 {
            let cert = certificate_for(t, &outcome, available.len(), chosen, self.config.mu, true);
            cert.apply(&mut self.bank)?;
            Some(cert)
        } else {
            None
        };
        Ok(BanditHattStep {
            chosen,
            loss,
            proposed,
            outcome,
            explored: explore.is_some(),
            certificate,
        })
    }
}

/// `(1+⌈log₂K⌉)·x/(1−e^{−x})·L* + C(N,2)·ln2·(K/μ)/(1−e^{−x}) + μT` with `x = Kη/μ`.
pub fn bandit_hatt_bound(
    config: &BanditHattConfig,
    n: usize,
    horizon: usize,
    comparator_loss: f64,
) -> f64 {
    let x = config.k as f64 * config.eta / config.mu;
    let denom = -(-x).exp_m1();
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    crate::hatt::comparator_cost_factor(config.k) as f64 * x / denom * comparator_loss
        + pairs * std::f64::consts::LN_2 * config.loss_range() / denom
        + config.mu * horizon as f64
}
