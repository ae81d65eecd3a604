//! Randomized rounding of real losses in `[0, 1]` to binary losses with the same mean.

use rand::Rng;

use crate::domain::{Environment, RoundTrace, ZeroCountClass};
use crate::error::{Error, Result};

/// Replaces each loss `ℓ` by an independent Bernoulli(`ℓ`) draw, in available order.
pub fn round_losses<R: Rng + ?Sized>(round: &RoundTrace, rng: &mut R) -> Result<RoundTrace> {
    let mut losses = Vec::with_capacity(round.losses.len());
    for (a, l) in round.entries() {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::domain(format!(
                "round {}: loss {l} of action {a} outside [0, 1]",
                round.t
            )));
        }
        let u: f64 = rng.gen();
        losses.push(if u < l { 1.0 } else { 0.0 });
    }
    Ok(RoundTrace {
        t: round.t,
        available: round.available.clone(),
        losses,
    })
}

/// Rounds every round of `env`. The result is binary and unconstrained.
pub fn round_environment<R: Rng + ?Sized>(env: &Environment, rng: &mut R) -> Result<Environment> {
    let rounds = env
        .rounds
        .iter()
        .map(|r| round_losses(r, rng))
        .collect::<Result<Vec<_>>>()?;
    Environment::with_bound(env.n, env.k, ZeroCountClass::Unconstrained, rounds)
}
