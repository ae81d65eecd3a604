//! Exponential weights over a small finite choice set.
//!
//! Weights live in log space and are shifted so the largest log-weight is 0
//! after every update; long horizons with large `η·R` would otherwise
//! underflow every weight. Choice labels are opaque, so the same instance type
//! serves single actions, pairs of actions and triples.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeInstance<C> {
    choices: Vec<C>,
    log_weights: Vec<f64>,
    eta: f64,
    loss_range: f64,
}

impl<C: Clone + PartialEq> HedgeInstance<C> {
    /// A uniform instance over `choices` with losses in `[0, loss_range]`.
    pub fn new(choices: Vec<C>, eta: f64, loss_range: f64) -> Result<Self> {
        if choices.is_empty() {
            return Err(Error::domain("hedge needs at least one choice"));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::domain(format!(
                "learning rate must be positive, got {eta}"
            )));
        }
        if !(loss_range.is_finite() && loss_range > 0.0) {
            return Err(Error::domain(format!(
                "loss range must be positive, got {loss_range}"
            )));
        }
        let log_weights = vec![0.0; choices.len()];
        Ok(HedgeInstance {
            choices,
            log_weights,
            eta,
            loss_range,
        })
    }

    pub fn choices(&self) -> &[C] {
        &self.choices
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn loss_range(&self) -> f64 {
        self.loss_range
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_weights.iter().map(|lw| (lw - max).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    pub fn probability(&self, choice: &C) -> Option<f64> {
        let idx = self.choices.iter().position(|c| c == choice)?;
        Some(self.probabilities()[idx])
    }

    /// Exponential weight update with `losses` aligned to [`choices`](Self::choices).
    pub fn update(&mut self, losses: &[f64]) -> Result<()> {
        if losses.len() != self.choices.len() {
            return Err(Error::domain(format!(
                "loss vector has {} entries for {} choices",
                losses.len(),
                self.choices.len()
            )));
        }
        if let Some(bad) = losses
            .iter()
            .find(|&&l| !(0.0..=self.loss_range).contains(&l))
        {
            return Err(Error::domain(format!(
                "loss {bad} outside [0, {}]",
                self.loss_range
            )));
        }
        for (lw, &l) in self.log_weights.iter_mut().zip(losses) {
            *lw -= self.eta * l;
        }
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        for lw in &mut self.log_weights {
            *lw -= max;
        }
        Ok(())
    }

    pub fn update_with(&mut self, loss: impl Fn(&C) -> f64) -> Result<()> {
        let losses: Vec<f64> = self.choices.iter().map(loss).collect();
        self.update(&losses)
    }

    /// Draws a choice with probability `p(a)` using one uniform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> C {
        self.choices[self.sample_index(rng)].clone()
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let p = self.probabilities();
        let mut acc = 0.0;
        for (i, &pi) in p.iter().enumerate() {
            acc += pi;
            if u < acc {
                return i;
            }
        }
        // Rounding left `acc` just below 1; fall back to the last supported choice.
        p.iter().rposition(|&pi| pi > 0.0).unwrap_or(0)
    }

    /// `Σ_a p(a)·ℓ(a)` under the current distribution.
    pub fn expected_loss(&self, losses: &[f64]) -> f64 {
        self.probabilities()
            .iter()
            .zip(losses)
            .map(|(p, l)| p * l)
            .sum()
    }
}

/// Functional form of the update: returns the updated copy.
pub fn ewu_update<C: Clone + PartialEq>(
    h: &HedgeInstance<C>,
    losses: &[f64],
) -> Result<HedgeInstance<C>> {
    let mut next = h.clone();
    next.update(losses)?;
    Ok(next)
}

/// Right-hand side of the Hedge guarantee for losses in `[0, R]`:
/// `ηR/(1−e^{−ηR})·L* + R·ln(n)/(1−e^{−ηR})`.
pub fn hedge_bound(eta: f64, loss_range: f64, n_choices: usize, comparator_loss: f64) -> f64 {
    let x = eta * loss_range;
    let denom = -(-x).exp_m1();
    x / denom * comparator_loss + loss_range * (n_choices as f64).ln() / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two() -> HedgeInstance<u8> {
        HedgeInstance::new(vec![0, 1], 1.0, 1.0).unwrap()
    }

    #[test]
    fn ewu_closed_form() {
        let h = ewu_update(&two(), &[1.0, 0.0]).unwrap();
        let p = h.probabilities();
        // 1/(1+e) and e/(1+e).
        assert!((p[0] - 0.268_941_421_369_995).abs() < 1e-15);
        assert!((p[1] - 0.731_058_578_630_005).abs() < 1e-15);
    }

    #[test]
    fn zero_and_constant_losses_are_identity() {
        let mut h = two();
        h.update(&[1.0, 0.0]).unwrap();
        let before = h.probabilities();
        for c in [0.0, 0.3, 1.0] {
            let after = ewu_update(&h, &[c, c]).unwrap().probabilities();
            for (a, b) in before.iter().zip(&after) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn update_errors() {
        let mut h = two();
        assert!(h.update(&[1.5, 0.0]).is_err());
        assert!(h.update(&[-0.1, 0.0]).is_err());
        assert!(h.update(&[0.5]).is_err());
        // A rejected update leaves the state untouched.
        assert_eq!(h, two());
        assert!(HedgeInstance::new(Vec::<u8>::new(), 1.0, 1.0).is_err());
        assert!(HedgeInstance::new(vec![1u8], 0.0, 1.0).is_err());
        assert!(HedgeInstance::new(vec![1u8], 1.0, -1.0).is_err());
    }

    #[test]
    fn bound_values() {
        // ln2/(1−e^{−1}) and 10/(1−e^{−1}) + ln2/(1−e^{−1}) to 15 digits.
        assert!((hedge_bound(1.0, 1.0, 2, 0.0) - 1.096_542_694_077_98).abs() < 1e-12);
        assert_eq!(hedge_bound(0.7, 3.0, 1, 0.0), 0.0);
        assert!((hedge_bound(1.0, 1.0, 2, 10.0) - 16.916_309_762_771_24).abs() < 1e-12);
        assert!((hedge_bound(0.5, 4.0, 3, 7.0) - 21.273_504_976_040_35).abs() < 1e-12);
    }

    #[test]
    fn uniform_sampling_frequency() {
        let h = two();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let ones = (0..n).filter(|_| h.sample(&mut rng) == 1).count();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn degenerate_distribution_always_first() {
        let mut h = HedgeInstance::new(vec!['a', 'b'], 1.0, 1.0).unwrap();
        for _ in 0..2000 {
            h.update(&[0.0, 1.0]).unwrap();
        }
        assert_eq!(h.probabilities(), vec![1.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..10_000).all(|_| h.sample(&mut rng) == 'a'));
    }

    #[test]
    fn sampling_is_deterministic_per_rng_state() {
        let mut h = HedgeInstance::new(vec![0, 1, 2], 0.5, 1.0).unwrap();
        h.update(&[0.2, 0.9, 0.4]).unwrap();
        let copy = h.clone();
        let a = h.sample(&mut ChaCha8Rng::seed_from_u64(99));
        let b = copy.sample(&mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn normalized_after_any_updates(
            eta in 0.01f64..5.0,
            r in 0.5f64..50.0,
            seq in proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, 3), 0..200),
        ) {
            let mut h = HedgeInstance::new(vec![0, 1, 2], eta, r).unwrap();
            for l in seq {
                let scaled: Vec<f64> = l.iter().map(|x| x * r).collect();
                h.update(&scaled).unwrap();
            }
            let p = h.probabilities();
            prop_assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn update_order_does_not_matter(
            a in proptest::collection::vec(0.0f64..=2.0, 3),
            b in proptest::collection::vec(0.0f64..=2.0, 3),
        ) {
            let h = HedgeInstance::new(vec![0, 1, 2], 0.8, 2.0).unwrap();
            let ab = ewu_update(&ewu_update(&h, &a).unwrap(), &b).unwrap().probabilities();
            let ba = ewu_update(&ewu_update(&h, &b).unwrap(), &a).unwrap().probabilities();
            for (x, y) in ab.iter().zip(&ba) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
