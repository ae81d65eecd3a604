//! HATT: pairwise Hedges aggregated by a tournament, for rounds with exactly
//! one zero-loss action under full information.
//!
//! Each round plays the canonical bracket on `A_t`, with every match decided
//! by a draw from that pair's Hedge. After the losses are revealed, only the
//! consulted pairs that contain the zero-loss action `z_t` are updated: the
//! other member of the pair is charged 1, `z_t` is charged 0.

use std::collections::BTreeSet;

use rand::Rng;

use crate::domain::{ActionId, Pair, Ranking, RoundTrace};
use crate::error::{Error, Result};
use crate::tournament::{ceil_log2, run_tournament, PairHedgeBank, TournamentOutcome};

/// The per-pair losses of one round: `charge` on the non-zero member of every
/// pair in `charged`, zero everywhere else.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLossCertificate {
    pub round: usize,
    pub zero_action: ActionId,
    pub charge: f64,
    pub charged: BTreeSet<Pair>,
}

impl PairLossCertificate {
    /// `c_t^{pair}(choice)`.
    pub fn loss(&self, pair: Pair, choice: ActionId) -> f64 {
        if choice != self.zero_action && self.charged.contains(&pair) {
            self.charge
        } else {
            0.0
        }
    }

    pub fn is_zero(&self) -> bool {
        self.charged.is_empty() || self.charge == 0.0
    }

    /// `Σ_{i<j} c_t^{i,j}(a_t^{i,j})` over the pairs that were sampled.
    pub fn learner_charge(&self, outcome: &TournamentOutcome) -> f64 {
        outcome
            .sub_winners
            .iter()
            .map(|(&p, &w)| self.loss(p, w))
            .sum()
    }

    /// `Σ_{i<j} c_t^{i,j}(σ(i,j))`.
    pub fn comparator_cost(&self, sigma: &Ranking) -> Result<f64> {
        let mut total = 0.0;
        for &p in &self.charged {
            if p.hi().0 >= sigma.len() {
                return Err(Error::domain(format!("pair {p} outside the ranking")));
            }
            total += self.loss(p, sigma.pair_choice(p));
        }
        Ok(total)
    }

    pub(crate) fn apply(&self, bank: &mut PairHedgeBank) -> Result<()> {
        for &p in &self.charged {
            let losses = [self.loss(p, p.lo()), self.loss(p, p.hi())];
            bank.instance(p).update(&losses)?;
        }
        Ok(())
    }
}

pub fn certificate_comparator_cost(
    certificate: &PairLossCertificate,
    sigma: &Ranking,
) -> Result<f64> {
    certificate.comparator_cost(sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HattStep {
    pub chosen: ActionId,
    pub outcome: TournamentOutcome,
    pub certificate: PairLossCertificate,
}

/// One HATT round against `round`, which must have exactly one zero-loss action.
pub fn hatt_step<R: Rng + ?Sized>(
    bank: &mut PairHedgeBank,
    round: &RoundTrace,
    rng: &mut R,
) -> Result<HattStep> {
    let zero_action = single_zero(round)?;
    let outcome = run_tournament(&round.available, bank, rng)?;
    let charged = outcome
        .consulted
        .iter()
        .copied()
        .filter(|p| p.contains(zero_action))
        .collect();
    let certificate = PairLossCertificate {
        round: round.t,
        zero_action,
        charge: 1.0,
        charged,
    };
    certificate.apply(bank)?;
    Ok(HattStep {
        chosen: outcome.winner,
        outcome,
        certificate,
    })
}

pub(crate) fn single_zero(round: &RoundTrace) -> Result<ActionId> {
    if !round.is_binary() {
        return Err(Error::Precondition {
            round: round.t,
            reason: "losses must be binary".into(),
        });
    }
    match round.zeros().as_slice() {
        [z] => Ok(*z),
        zs => Err(Error::Precondition {
            round: round.t,
            reason: format!("exactly one zero-loss action required, found {}", zs.len()),
        }),
    }
}

/// Full-information HATT learner.
#[derive(Debug, Clone)]
pub struct Hatt {
    bank: PairHedgeBank,
}

impl Hatt {
    pub fn new(eta: f64) -> Result<Self> {
        Ok(Hatt {
            bank: PairHedgeBank::new(eta, 1.0)?,
        })
    }

    pub fn bank(&self) -> &PairHedgeBank {
        &self.bank
    }

    pub fn step<R: Rng + ?Sized>(&mut self, round: &RoundTrace, rng: &mut R) -> Result<HattStep> {
        hatt_step(&mut self.bank, round, rng)
    }
}

/// Per-round bound on [`PairLossCertificate::comparator_cost`]: `1 + ⌈log₂ K⌉`.
pub fn comparator_cost_factor(k: usize) -> usize {
    1 + ceil_log2(k)
}

/// Expected-loss guarantee: `η(1+⌈log₂K⌉)/(1−e^{−η})·L* + C(N,2)·ln2/(1−e^{−η})`.
pub fn hatt_bound(eta: f64, n: usize, k: usize, comparator_loss: f64) -> f64 {
    let denom = -(-eta).exp_m1();
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    eta * comparator_cost_factor(k) as f64 / denom * comparator_loss
        + pairs * std::f64::consts::LN_2 / denom
}
