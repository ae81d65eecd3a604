//! Environment generators and the exactly-one-one → exactly-one-zero adapter.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ActionId, Environment, Ranking, RoundTrace, ZeroCountClass};
use crate::error::{Error, Result};
use crate::rng::{RngContract, StreamTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// Zeros follow a hidden ranking, relocated with probability `ε` per round.
    PlantedRanking,
    /// Zeros placed uniformly at random.
    UniformRandom,
    /// The zero walks through the available set so no fixed preference keeps up.
    AdversarialRotation,
    /// Losses i.i.d. uniform on `[0, 1]`.
    RealValued,
}

impl GeneratorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorKind::PlantedRanking => "planted-ranking",
            GeneratorKind::UniformRandom => "uniform-random",
            GeneratorKind::AdversarialRotation => "adversarial-rotation",
            GeneratorKind::RealValued => "real-valued",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub epsilon: f64,
    pub zero_count_class: ZeroCountClass,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(Error::config(format!(
                "need 1 ≤ K ≤ N, got K = {}, N = {}",
                self.k, self.n
            )));
        }
        if self.t == 0 {
            return Err(Error::config("horizon T must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if let Some(c) = self.zero_count_class.required_zeros() {
            if self.k < c {
                return Err(Error::config(format!(
                    "K = {} cannot hold {c} zero-loss actions",
                    self.k
                )));
            }
        }
        if self.kind == GeneratorKind::RealValued
            && self.zero_count_class != ZeroCountClass::Unconstrained
        {
            return Err(Error::config(
                "real-valued environments must use the unconstrained class",
            ));
        }
        Ok(())
    }

    /// Zero-loss actions per round for the binary kinds.
    fn zeros_per_round(&self) -> usize {
        self.zero_count_class.required_zeros().unwrap_or(1)
    }

    /// Smallest available-set size: `max(2, zeros)`, capped at `K`.
    fn min_size(&self) -> usize {
        self.zeros_per_round().max(2).min(self.k)
    }
}

/// Generates from the spec's own seed (trial 0, environment stream).
pub fn generate_seeded(spec: &GeneratorSpec) -> Result<Environment> {
    let mut rng = RngContract::new(spec.seed).stream(0, StreamTag::Environment);
    generate(spec, &mut rng)
}

pub fn generate<R: Rng + ?Sized>(spec: &GeneratorSpec, rng: &mut R) -> Result<Environment> {
    spec.validate()?;
    let planted = Ranking::random(spec.n, rng);
    let mut rounds = Vec::with_capacity(spec.t);
    for t in 1..=spec.t {
        let size = rng.gen_range(spec.min_size()..=spec.k);
        let mut available: Vec<ActionId> = sample(rng, spec.n, size)
            .into_iter()
            .map(ActionId)
            .collect();
        available.sort();
        let losses = match spec.kind {
            GeneratorKind::RealValued => (0..size).map(|_| rng.gen::<f64>()).collect(),
            GeneratorKind::PlantedRanking => {
                let zeros = spec.zeros_per_round().min(size);
                let positions = if rng.gen_bool(spec.epsilon) {
                    sample(rng, size, zeros).into_vec()
                } else {
                    let mut by_rank: Vec<usize> = (0..size).collect();
                    by_rank.sort_by_key(|&i| planted.rank(available[i]));
                    by_rank.truncate(zeros);
                    by_rank
                };
                binary_with_zeros(size, &positions)
            }
            GeneratorKind::UniformRandom => match spec.zero_count_class.required_zeros() {
                Some(c) => binary_with_zeros(size, &sample(rng, size, c).into_vec()),
                None => (0..size)
                    .map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 })
                    .collect(),
            },
            GeneratorKind::AdversarialRotation => {
                let zeros = spec.zeros_per_round().min(size);
                let start = (t - 1) % size;
                let positions: Vec<usize> = (0..zeros).map(|j| (start + j) % size).collect();
                binary_with_zeros(size, &positions)
            }
        };
        rounds.push(RoundTrace {
            t,
            available,
            losses,
        });
    }
    Environment::with_bound(spec.n, spec.k, spec.zero_count_class, rounds)
}

fn binary_with_zeros(size: usize, zero_positions: &[usize]) -> Vec<f64> {
    let mut losses = vec![1.0; size];
    for &i in zero_positions {
        losses[i] = 0.0;
    }
    losses
}

/// Converts a round with exactly one zero, or exactly one one, into a round
/// with exactly one zero. Requires `|A_t| = K ≥ 2`.
///
/// With one zero: keep the round with probability `1/(K−1)`, otherwise put the
/// zero on a uniform action. With one one: put the zero on a uniform member of
/// the `K−1` zero-loss actions.
pub fn z01_to_z0<R: Rng + ?Sized>(round: &RoundTrace, k: usize, rng: &mut R) -> Result<RoundTrace> {
    if k < 2 {
        return Err(Error::domain(format!("the adapter needs K ≥ 2, got {k}")));
    }
    if round.size() != k {
        return Err(Error::domain(format!(
            "round {} has {} available actions, expected K = {k}",
            round.t,
            round.size()
        )));
    }
    if !round.is_binary() {
        return Err(Error::domain(format!(
            "round {} has non-binary losses",
            round.t
        )));
    }
    let zeros = round.zeros();
    let zero_at = |i: usize| RoundTrace {
        t: round.t,
        available: round.available.clone(),
        losses: binary_with_zeros(k, &[i]),
    };
    if zeros.len() == 1 {
        if rng.gen_bool(1.0 / (k - 1) as f64) {
            Ok(round.clone())
        } else {
            Ok(zero_at(rng.gen_range(0..k)))
        }
    } else if zeros.len() == k - 1 {
        let pick = zeros[rng.gen_range(0..zeros.len())];
        let i = round
            .available
            .binary_search(&pick)
            .expect("zero is available");
        Ok(zero_at(i))
    } else {
        Err(Error::domain(format!(
            "round {} has {} zeros among {k} actions: neither exactly one zero nor exactly one one",
            round.t,
            zeros.len()
        )))
    }
}

/// An adversary that picks each round after seeing the learner's previous action.
/// Library-only: adaptive sequences are never written to trace files.
pub trait AdaptiveAdversary {
    fn next_round(
        &mut self,
        t: usize,
        last_action: Option<ActionId>,
        rng: &mut dyn rand::RngCore,
    ) -> RoundTrace;
}

/// Exactly-one-zero adversary that never puts the zero on the learner's previous
/// action when that action is available again.
#[derive(Debug, Clone)]
pub struct AvoidLastAction {
    pub n: usize,
    pub k: usize,
}

impl AdaptiveAdversary for AvoidLastAction {
    fn next_round(
        &mut self,
        t: usize,
        last_action: Option<ActionId>,
        rng: &mut dyn rand::RngCore,
    ) -> RoundTrace {
        let size = rng.gen_range(self.k.min(2)..=self.k);
        let mut available: Vec<ActionId> = sample(rng, self.n, size)
            .into_iter()
            .map(ActionId)
            .collect();
        available.sort();
        let candidates: Vec<usize> = (0..size)
            .filter(|&i| Some(available[i]) != last_action)
            .collect();
        let zero = if candidates.is_empty() {
            0
        } else {
            candidates[rng.gen_range(0..candidates.len())]
        };
        RoundTrace {
            t,
            available,
            losses: binary_with_zeros(size, &[zero]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::validate_environment;
    use crate::oracle::best_ranking;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(kind: GeneratorKind, class: ZeroCountClass) -> GeneratorSpec {
        GeneratorSpec {
            kind,
            n: 6,
            k: 4,
            t: 300,
            epsilon: 0.0,
            zero_count_class: class,
            seed: 7,
        }
    }

    #[test]
    fn every_kind_validates() {
        let classes = [
            ZeroCountClass::ExactlyOne,
            ZeroCountClass::ExactlyTwo,
            ZeroCountClass::Unconstrained,
        ];
        for kind in [
            GeneratorKind::PlantedRanking,
            GeneratorKind::UniformRandom,
            GeneratorKind::AdversarialRotation,
        ] {
            for class in classes {
                let env = generate_seeded(&spec(kind, class)).unwrap();
                assert!(validate_environment(&env).is_ok());
                assert_eq!(env.horizon(), 300);
                assert!(env.rounds.iter().all(|r| r.size() >= 2 && r.size() <= 4));
            }
        }
        let env = generate_seeded(&spec(
            GeneratorKind::RealValued,
            ZeroCountClass::Unconstrained,
        ))
        .unwrap();
        assert!(validate_environment(&env).is_ok());
    }

    #[test]
    fn infeasible_specs_rejected() {
        let mut s = spec(GeneratorKind::UniformRandom, ZeroCountClass::ExactlyTwo);
        s.k = 1;
        assert!(matches!(generate_seeded(&s), Err(Error::Config(_))));
        let s = spec(GeneratorKind::RealValued, ZeroCountClass::ExactlyOne);
        assert!(matches!(generate_seeded(&s), Err(Error::Config(_))));
        let mut s = spec(GeneratorKind::UniformRandom, ZeroCountClass::ExactlyOne);
        s.k = 7;
        assert!(generate_seeded(&s).is_err());
    }

    #[test]
    fn noiseless_planted_ranking_is_perfect() {
        for class in [ZeroCountClass::ExactlyOne, ZeroCountClass::ExactlyTwo] {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let s = spec(GeneratorKind::PlantedRanking, class);
            let env = generate(&s, &mut rng).unwrap();
            let (_, lstar) = best_ranking(&env).unwrap();
            assert_eq!(lstar, 0.0);
            // Rebuild the hidden ranking from the same stream.
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let planted = Ranking::random(6, &mut rng);
            assert_eq!(
                crate::regret::comparator_loss_of(&planted, &env).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn fixed_seed_gives_identical_traces() {
        let s = spec(GeneratorKind::UniformRandom, ZeroCountClass::ExactlyOne);
        let a = crate::trace::to_trace_string(&generate_seeded(&s).unwrap());
        let b = crate::trace::to_trace_string(&generate_seeded(&s).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn adapter_rejects_bad_rounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = RoundTrace::from_ids(1, &[0, 1, 2, 3], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(z01_to_z0(&r, 4, &mut rng).is_err());
        let r = RoundTrace::from_ids(1, &[0, 1, 2], &[0.0, 1.0, 1.0]).unwrap();
        assert!(z01_to_z0(&r, 4, &mut rng).is_err());
        assert!(z01_to_z0(&r, 3, &mut rng).is_ok());
    }

    #[test]
    fn adaptive_adversary_avoids_last_action() {
        let mut adv = AvoidLastAction { n: 5, k: 3 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut hatt = crate::hatt::Hatt::new(1.0).unwrap();
        let mut last = None;
        for t in 1..=200 {
            let round = adv.next_round(t, last, &mut rng);
            assert_eq!(round.zero_count(), 1);
            if let Some(a) = last {
                if round.contains(a) {
                    assert_eq!(round.loss_of(a), Some(1.0));
                }
            }
            last = Some(hatt.step(&round, &mut rng).unwrap().chosen);
        }
    }
}
