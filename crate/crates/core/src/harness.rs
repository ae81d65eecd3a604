//! Replaying an environment against one algorithm, with optional per-round
//! invariant checks.
//!
//! Full-information learners receive the whole [`RoundTrace`]; bandit learners
//! receive the available set and a [`LossQuery`] only.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{
    level_certificate, round_environment, BanditHatt, BanditHattConfig, Level, LossQuery,
};
use crate::domain::{ActionId, Environment, LossMode, Ranking, RoundTrace, ZeroCountClass};
use crate::error::{Error, InvariantViolation, Result};
use crate::hatt::{comparator_cost_factor, Hatt, HattStep};
use crate::hopp::{comparator_cost_factors, Hopp, HoppStep, SelectionBranch};
use crate::oracle::{PerSubset, RankingHedge, RANKING_HEDGE_CAP};
use crate::rng::{RngContract, StreamTag};
use crate::tournament::ceil_log2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmKind {
    Hatt,
    Hopp,
    BanditHatt,
    Level,
    PerSubset,
    RankingHedge,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 6] = [
        AlgorithmKind::Hatt,
        AlgorithmKind::Hopp,
        AlgorithmKind::BanditHatt,
        AlgorithmKind::Level,
        AlgorithmKind::PerSubset,
        AlgorithmKind::RankingHedge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmKind::Hatt => "hatt",
            AlgorithmKind::Hopp => "hopp",
            AlgorithmKind::BanditHatt => "bandit-hatt",
            AlgorithmKind::Level => "level",
            AlgorithmKind::PerSubset => "per-subset",
            AlgorithmKind::RankingHedge => "ranking-hedge",
        }
    }

    pub fn is_bandit(self) -> bool {
        matches!(self, AlgorithmKind::BanditHatt | AlgorithmKind::Level)
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown algorithm `{s}`")))
    }
}

/// What the compatibility check needs to know about an environment before it exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvShape {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub zero_count_class: ZeroCountClass,
    pub loss_mode: LossMode,
}

impl EnvShape {
    pub fn of(env: &Environment) -> Self {
        EnvShape {
            n: env.n,
            k: env.k,
            t: env.horizon(),
            zero_count_class: env.zero_count_class,
            loss_mode: env.loss_mode(),
        }
    }
}

/// Rejects algorithm/environment combinations the algorithm cannot run on.
pub fn check_compatible(kind: AlgorithmKind, shape: &EnvShape) -> Result<()> {
    let need = |class: ZeroCountClass| {
        if shape.zero_count_class == class {
            Ok(())
        } else {
            Err(Error::config(format!(
                "{kind} requires a {class} environment, got {}",
                shape.zero_count_class
            )))
        }
    };
    match kind {
        AlgorithmKind::Hatt | AlgorithmKind::BanditHatt => need(ZeroCountClass::ExactlyOne),
        AlgorithmKind::Hopp => need(ZeroCountClass::ExactlyTwo),
        AlgorithmKind::RankingHedge if shape.n > RANKING_HEDGE_CAP => Err(Error::config(format!(
            "ranking-hedge supports N ≤ {RANKING_HEDGE_CAP}, got N = {}",
            shape.n
        ))),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlgorithmParams {
    pub eta: Option<f64>,
    pub mu: Option<f64>,
}

impl AlgorithmParams {
    /// Bandit-HATT settings: explicit values where given, otherwise the
    /// defaults `μ = min{N√(K/T), 1}` and `η = μ/K`.
    pub fn bandit_config(&self, shape: &EnvShape) -> Result<BanditHattConfig> {
        let k = shape.k.max(1);
        let mu = self
            .mu
            .unwrap_or_else(|| crate::bandit::hatt::default_mu(shape.n, k, shape.t));
        let eta = self.eta.unwrap_or(mu / k as f64);
        BanditHattConfig::new(mu, eta, k)
    }

    pub fn full_info_eta(&self) -> f64 {
        self.eta.unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundRecord {
    pub t: usize,
    pub chosen: ActionId,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub records: Vec<RoundRecord>,
    pub violations: Vec<InvariantViolation>,
    /// The binary environment the learner actually played, when real losses were rounded.
    pub rounded: Option<Environment>,
}

impl Replay {
    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }

    pub fn total_loss(&self) -> f64 {
        self.records.iter().map(|r| r.loss).sum()
    }
}

/// At most this many violations are kept per replay.
const MAX_VIOLATIONS: usize = 100;

struct Checker {
    on: bool,
    violations: Vec<InvariantViolation>,
}

impl Checker {
    fn fail(&mut self, invariant: &'static str, round: usize, witness: String) {
        if self.violations.len() < MAX_VIOLATIONS {
            self.violations.push(InvariantViolation {
                invariant,
                round,
                witness,
            });
        }
    }

    fn ensure(
        &mut self,
        ok: bool,
        invariant: &'static str,
        round: usize,
        witness: impl FnOnce() -> String,
    ) {
        if !ok {
            self.fail(invariant, round, witness());
        }
    }
}

/// Number of random rankings each per-round comparator check uses, besides the identity.
pub const CHECK_RANKINGS: usize = 20;
/// Random rankings tracked by the level potential check when `N > 5`.
pub const LEVEL_CHECK_RANKINGS: usize = 50;

/// Replays `env` with trial `trial`'s streams from `streams`.
pub fn replay(
    env: &Environment,
    kind: AlgorithmKind,
    params: &AlgorithmParams,
    streams: &RngContract,
    trial: u64,
    check_invariants: bool,
) -> Result<Replay> {
    let shape = EnvShape::of(env);
    check_compatible(kind, &shape)?;
    let mut rng = streams.stream(trial, StreamTag::Algorithm);
    let mut checks_rng = streams.stream(trial, StreamTag::Checks);
    let mut checker = Checker {
        on: check_invariants,
        violations: Vec::new(),
    };
    let mut records = Vec::with_capacity(env.horizon());
    let mut rounded = None;
    match kind {
        AlgorithmKind::Hatt => {
            let mut hatt = Hatt::new(params.full_info_eta())?;
            for round in &env.rounds {
                let step = hatt.step(round, &mut rng)?;
                if checker.on {
                    check_hatt(&step, round, env, &mut checks_rng, &mut checker)?;
                }
                records.push(record(round, step.chosen));
            }
        }
        AlgorithmKind::Hopp => {
            let mut hopp = Hopp::new(params.full_info_eta())?;
            for round in &env.rounds {
                let step = hopp.step(round, &mut rng)?;
                if checker.on {
                    check_hopp(&step, round, env, &mut checks_rng, &mut checker)?;
                }
                records.push(record(round, step.chosen));
            }
        }
        AlgorithmKind::BanditHatt => {
            let mut learner = BanditHatt::new(params.bandit_config(&shape)?)?;
            for round in &env.rounds {
                let before = checker.on.then(|| learner.bank().clone());
                let step = learner.step(&round.available, LossQuery::new(round), &mut rng)?;
                if let Some(before) = before {
                    let t = round.t;
                    if step.updated() {
                        checker.ensure(
                            step.explored && step.loss == 0.0,
                            "bandit-update-rule",
                            t,
                            || {
                                format!(
                                    "updated with explored = {}, loss = {}",
                                    step.explored, step.loss
                                )
                            },
                        );
                    } else {
                        // Hedges first consulted this round are created uniform; everything else must be untouched.
                        let unchanged = learner.bank().iter().all(|(p, h)| match before.get(*p) {
                            Some(old) => old == h,
                            None => h.log_weights().iter().all(|&w| w == 0.0),
                        });
                        checker.ensure(unchanged, "bandit-update-rule", t, || {
                            "hedge state changed without an exploratory zero-loss observation"
                                .into()
                        });
                    }
                }
                records.push(record(round, step.chosen));
            }
        }
        AlgorithmKind::Level => {
            let played = match env.loss_mode() {
                LossMode::Binary => None,
                LossMode::Real => {
                    let mut rounding_rng = streams.stream(trial, StreamTag::Rounding);
                    Some(round_environment(env, &mut rounding_rng)?)
                }
            };
            let game = played.as_ref().unwrap_or(env);
            let mut level = Level::new(env.n);
            let mut potential = checker
                .on
                .then(|| LevelPotential::new(env.n, &mut checks_rng));
            let mut cum = 0.0;
            for (round, real) in game.rounds.iter().zip(&env.rounds) {
                if let Some(p) = potential.as_mut() {
                    p.check(level.state(), round.t, &mut checker);
                }
                let step = level.step(&round.available, LossQuery::new(round), &mut rng)?;
                cum += step.loss;
                if let Some(p) = potential.as_mut() {
                    p.advance(round)?;
                    let total = level.state().total() as f64;
                    checker.ensure(total == cum, "level-sum", round.t, || {
                        format!("sum of levels {total} != cumulative loss {cum}")
                    });
                }
                records.push(record(real, step.chosen));
            }
            if let Some(p) = potential.as_ref() {
                p.check(level.state(), env.horizon() + 1, &mut checker);
            }
            rounded = played;
        }
        AlgorithmKind::PerSubset => {
            let mut learner = PerSubset::new();
            for round in &env.rounds {
                let chosen = learner.step(round, &mut rng)?;
                records.push(record(round, chosen));
            }
        }
        AlgorithmKind::RankingHedge => {
            let mut learner = RankingHedge::new(env.n)?;
            for round in &env.rounds {
                let chosen = learner.step(round, &mut rng)?;
                records.push(record(round, chosen));
            }
        }
    }
    Ok(Replay {
        records,
        violations: checker.violations,
        rounded,
    })
}

fn record(round: &RoundTrace, chosen: ActionId) -> RoundRecord {
    RoundRecord {
        t: round.t,
        chosen,
        loss: round
            .loss_of(chosen)
            .expect("learners play available actions"),
    }
}

fn check_rankings<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Ranking> {
    let mut out = vec![Ranking::identity(n)];
    out.extend((0..CHECK_RANKINGS).map(|_| Ranking::random(n, rng)));
    out
}

fn check_hatt<R: Rng + ?Sized>(
    step: &HattStep,
    round: &RoundTrace,
    env: &Environment,
    rng: &mut R,
    checker: &mut Checker,
) -> Result<()> {
    let t = round.t;
    let size = round.size();
    let consulted = step.outcome.consulted.len();
    checker.ensure(consulted + 1 == size, "tournament-structure", t, || {
        format!("{consulted} consulted pairs for {size} available actions")
    });
    let limit = 1 + ceil_log2(size);
    for &a in &round.available {
        let k = step.outcome.appearances(a);
        checker.ensure(k <= limit, "tournament-structure", t, || {
            format!("action {a} in {k} consulted pairs")
        });
    }
    let loss = round.loss_of(step.chosen).expect("available");
    let charge = step.certificate.learner_charge(&step.outcome);
    checker.ensure(loss <= charge, "learner-charge", t, || {
        format!(
            "loss {loss} of chosen {} exceeds pair charge {charge}",
            step.chosen
        )
    });
    let factor = comparator_cost_factor(env.k) as f64;
    for sigma in check_rankings(env.n, rng) {
        let cost = step.certificate.comparator_cost(&sigma)?;
        let sl = round.comparator_loss(&sigma)?;
        checker.ensure(cost <= factor * sl, "comparator-cost", t, || {
            format!("ranking {sigma}: pair cost {cost} > {factor} × {sl}")
        });
    }
    Ok(())
}

fn check_hopp<R: Rng + ?Sized>(
    step: &HoppStep,
    round: &RoundTrace,
    env: &Environment,
    rng: &mut R,
    checker: &mut Checker,
) -> Result<()> {
    let t = round.t;
    let good = &step.selection.good_pairs;
    for (i, a) in good.iter().enumerate() {
        for b in &good[i + 1..] {
            checker.ensure(a.intersects(*b), "good-pairs-intersect", t, || {
                format!("good pairs {a} and {b} are disjoint")
            });
        }
    }
    if step.selection.branch == SelectionBranch::Triangle {
        let ok = good.len() == 3 && step.selection.triple_sample.map(|s| s.1) == Some(step.chosen);
        checker.ensure(ok, "good-pairs-intersect", t, || {
            format!("malformed triangle branch with {} good pairs", good.len())
        });
    }
    let loss = round.loss_of(step.chosen).expect("available");
    let charge = step.certificate.learner_charge(&step.selection);
    checker.ensure(loss <= charge, "learner-charge", t, || {
        format!(
            "loss {loss} of chosen {} exceeds sampled charge {charge}",
            step.chosen
        )
    });
    let (pf, tf) = comparator_cost_factors(env.k);
    for sigma in check_rankings(env.n, rng) {
        let (pc, tc) = step.certificate.comparator_cost(&sigma)?;
        let sl = round.comparator_loss(&sigma)?;
        checker.ensure(
            pc <= pf as f64 * sl && tc <= tf as f64 * sl,
            "comparator-cost",
            t,
            || format!("ranking {sigma}: costs ({pc}, {tc}) exceed ({pf}, {tf}) × {sl}"),
        );
    }
    Ok(())
}

/// Tracks `Σ_{τ<t} ℓ_τ(σ(A_τ))` for a fixed set of rankings: every ranking
/// when `N ≤ 5`, otherwise the identity plus random ones.
struct LevelPotential {
    rankings: Vec<Ranking>,
    cum: Vec<f64>,
}

impl LevelPotential {
    fn new<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let rankings: Vec<Ranking> = if n <= 5 {
            (0..n)
                .permutations(n)
                .map(|p| Ranking::from_ids(&p).expect("permutation"))
                .collect()
        } else {
            std::iter::once(Ranking::identity(n))
                .chain((0..LEVEL_CHECK_RANKINGS).map(|_| Ranking::random(n, rng)))
                .collect()
        };
        let cum = vec![0.0; rankings.len()];
        LevelPotential { rankings, cum }
    }

    fn check(&self, state: &crate::bandit::LevelState, t: usize, checker: &mut Checker) {
        for (sigma, &c) in self.rankings.iter().zip(&self.cum) {
            if let Err(v) = level_certificate(state, sigma, c) {
                checker.fail(
                    "level-potential",
                    t,
                    format!(
                        "ranking {sigma}: level {} of action {} exceeds {}",
                        v.level, v.action, v.bound
                    ),
                );
                return;
            }
        }
    }

    fn advance(&mut self, round: &RoundTrace) -> Result<()> {
        for (sigma, c) in self.rankings.iter().zip(self.cum.iter_mut()) {
            *c += round.comparator_loss(sigma)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgen::{generate_seeded, GeneratorKind, GeneratorSpec};

    fn env(class: ZeroCountClass, kind: GeneratorKind) -> Environment {
        generate_seeded(&GeneratorSpec {
            kind,
            n: 6,
            k: 5,
            t: 200,
            epsilon: 0.1,
            zero_count_class: class,
            seed: 3,
        })
        .unwrap()
    }

    #[test]
    fn names_round_trip() {
        for k in AlgorithmKind::ALL {
            assert_eq!(k.as_str().parse::<AlgorithmKind>().unwrap(), k);
        }
        assert!("exp3".parse::<AlgorithmKind>().is_err());
    }

    #[test]
    fn class_guard() {
        let two = env(ZeroCountClass::ExactlyTwo, GeneratorKind::UniformRandom);
        let streams = RngContract::new(1);
        let err = replay(
            &two,
            AlgorithmKind::Hatt,
            &AlgorithmParams::default(),
            &streams,
            0,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(replay(
            &two,
            AlgorithmKind::Hopp,
            &AlgorithmParams::default(),
            &streams,
            0,
            true
        )
        .is_ok());
    }

    #[test]
    fn empty_environment_gives_empty_records() {
        let e = Environment::with_bound(3, 2, ZeroCountClass::ExactlyOne, vec![]).unwrap();
        for kind in AlgorithmKind::ALL
            .into_iter()
            .filter(|k| *k != AlgorithmKind::Hopp)
        {
            let r = replay(
                &e,
                kind,
                &AlgorithmParams::default(),
                &RngContract::new(0),
                0,
                true,
            )
            .unwrap();
            assert!(r.records.is_empty());
        }
    }

    #[test]
    fn checked_replays_are_clean() {
        let streams = RngContract::new(5);
        let one = env(ZeroCountClass::ExactlyOne, GeneratorKind::PlantedRanking);
        for kind in [
            AlgorithmKind::Hatt,
            AlgorithmKind::BanditHatt,
            AlgorithmKind::Level,
            AlgorithmKind::PerSubset,
            AlgorithmKind::RankingHedge,
        ] {
            let r = replay(&one, kind, &AlgorithmParams::default(), &streams, 2, true).unwrap();
            assert!(r.violations.is_empty(), "{kind}: {:?}", r.violations);
            assert_eq!(r.records.len(), 200);
        }
        let real = env(ZeroCountClass::Unconstrained, GeneratorKind::RealValued);
        let r = replay(
            &real,
            AlgorithmKind::Level,
            &AlgorithmParams::default(),
            &streams,
            0,
            true,
        )
        .unwrap();
        assert!(r.violations.is_empty());
        assert!(r.rounded.is_some());
    }

    #[test]
    fn level_replay_is_deterministic() {
        let e = env(ZeroCountClass::Unconstrained, GeneratorKind::UniformRandom);
        let a = replay(
            &e,
            AlgorithmKind::Level,
            &AlgorithmParams::default(),
            &RngContract::new(1),
            0,
            false,
        )
        .unwrap();
        let b = replay(
            &e,
            AlgorithmKind::Level,
            &AlgorithmParams::default(),
            &RngContract::new(2),
            7,
            false,
        )
        .unwrap();
        assert_eq!(a.records, b.records);
    }
}
