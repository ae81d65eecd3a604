//! Best-ranking comparators and baseline learners.
//!
//! Both exact oracles work from the table
//! `w(a, R) = Σ_{t : a ∈ A_t ⊆ R} ℓ_t(a)`, the loss `a` collects when it is the
//! top choice among the still-unplaced actions `R`. A ranking's loss is then
//! `Σ_k w(order[k], [N] ∖ {order[0..k]})`, so enumeration prices a ranking
//! incrementally and the subset DP `g(R) = min_a w(a,R) + g(R∖{a})` finds the
//! optimum in `O(N·2^N)`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use itertools::Itertools;
use rand::Rng;
use serde::Serialize;

use crate::domain::{ActionId, Environment, Ranking, RoundTrace};
use crate::error::{Error, Result};
use crate::hedge::HedgeInstance;
use crate::regret::{comparator_loss_of, RegretReport};

/// Largest `N` handled by full enumeration.
pub const ENUMERATION_CAP: usize = 8;
/// Largest `N` handled by the subset dynamic program.
pub const DP_CAP: usize = 16;
/// Largest `N` for the Hedge over all rankings.
pub const RANKING_HEDGE_CAP: usize = 7;
/// Random rankings tried when no exact oracle applies.
pub const DEFAULT_SAMPLES: usize = 20_000;

struct WTable {
    n: usize,
    /// `w[mask * n + a]`.
    w: Vec<f64>,
}

impl WTable {
    fn build(env: &Environment) -> Self {
        let n = env.n;
        let size = 1usize << n;
        let mut w = vec![0.0; size * n];
        for r in &env.rounds {
            let mask = r.available.iter().fold(0usize, |m, a| m | 1 << a.0);
            for (a, l) in r.entries() {
                w[mask * n + a.0] += l;
            }
        }
        // Sum over subsets: after the pass for bit `b`, `w[R]` covers all masks
        // that agree with `R` outside the bits processed so far and are subsets inside.
        for b in 0..n {
            let bit = 1usize << b;
            for mask in 0..size {
                if mask & bit != 0 {
                    let (lo, hi) = w.split_at_mut(mask * n);
                    let src = &lo[(mask ^ bit) * n..(mask ^ bit) * n + n];
                    for (d, s) in hi[..n].iter_mut().zip(src) {
                        *d += *s;
                    }
                }
            }
        }
        WTable { n, w }
    }

    #[inline]
    fn get(&self, a: usize, mask: usize) -> f64 {
        self.w[mask * self.n + a]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    Enumeration,
    SubsetDp,
    /// Best of random rankings: an upper bound on the true optimum.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparatorResult {
    pub ranking: Ranking,
    pub lstar: f64,
    pub exact: bool,
    pub method: OracleMethod,
}

/// Enumerates all `N!` rankings (`N ≤ 8`); ties go to the lexicographically smallest order.
pub fn best_ranking(env: &Environment) -> Result<(Ranking, f64)> {
    best_ranking_with_cap(env, ENUMERATION_CAP)
}

pub fn best_ranking_with_cap(env: &Environment, cap: usize) -> Result<(Ranking, f64)> {
    if env.n > cap {
        return Err(Error::Capability(format!(
            "N = {} exceeds the enumeration cap of {cap}; use the subset DP or sampling mode",
            env.n
        )));
    }
    if env.n > DP_CAP {
        return Err(Error::Capability(format!(
            "N = {} is too large to tabulate",
            env.n
        )));
    }
    let table = WTable::build(env);
    let n = env.n;
    let full = (1usize << n) - 1;
    let mut search = Search {
        table: &table,
        prefix: Vec::with_capacity(n),
        best: None,
    };
    search.dfs(full, 0.0);
    let order = search.best.map(|(o, _)| o).unwrap_or_default();
    let ranking = Ranking::from_order(order.into_iter().map(ActionId).collect())?;
    let lstar = comparator_loss_of(&ranking, env)?;
    Ok((ranking, lstar))
}

struct Search<'a> {
    table: &'a WTable,
    prefix: Vec<usize>,
    best: Option<(Vec<usize>, f64)>,
}

impl Search<'_> {
    /// Visits completions in lexicographic order; a strictly smaller cost is
    /// required to replace the incumbent, so the first optimum found stays.
    fn dfs(&mut self, remaining: usize, cost: f64) {
        if let Some((_, b)) = &self.best {
            if cost >= *b && remaining != 0 {
                return;
            }
        }
        if remaining == 0 {
            if self.best.as_ref().is_none_or(|(_, b)| cost < *b) {
                self.best = Some((self.prefix.clone(), cost));
            }
            return;
        }
        let mut rest = remaining;
        while rest != 0 {
            let a = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let c = cost + self.table.get(a, remaining);
            self.prefix.push(a);
            self.dfs(remaining & !(1 << a), c);
            self.prefix.pop();
        }
    }
}

/// Exact optimum by dynamic programming over subsets (`N ≤ 16`), with the same
/// lexicographic tie-break as [`best_ranking`].
pub fn best_ranking_dp(env: &Environment) -> Result<(Ranking, f64)> {
    if env.n > DP_CAP {
        return Err(Error::Capability(format!(
            "N = {} exceeds the subset-DP cap of {DP_CAP}",
            env.n
        )));
    }
    let table = WTable::build(env);
    let n = env.n;
    let size = 1usize << n;
    let mut g = vec![0.0f64; size];
    for mask in 1..size {
        let mut best = f64::INFINITY;
        let mut rest = mask;
        while rest != 0 {
            let a = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            best = best.min(table.get(a, mask) + g[mask & !(1 << a)]);
        }
        g[mask] = best;
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = size - 1;
    while mask != 0 {
        let mut rest = mask;
        let pick = loop {
            let a = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if table.get(a, mask) + g[mask & !(1 << a)] == g[mask] {
                break a;
            }
        };
        order.push(ActionId(pick));
        mask &= !(1 << pick);
    }
    let ranking = Ranking::from_order(order)?;
    let lstar = comparator_loss_of(&ranking, env)?;
    Ok((ranking, lstar))
}

/// Best of `samples` uniformly random rankings (plus the identity). Only an
/// upper bound on `L*`.
pub fn best_sampled_ranking<R: Rng + ?Sized>(
    env: &Environment,
    samples: usize,
    rng: &mut R,
) -> Result<(Ranking, f64)> {
    let mut best = Ranking::identity(env.n);
    let mut best_loss = comparator_loss_of(&best, env)?;
    for _ in 0..samples {
        let sigma = Ranking::random(env.n, rng);
        let loss = comparator_loss_of(&sigma, env)?;
        if loss < best_loss {
            best = sigma;
            best_loss = loss;
        }
    }
    Ok((best, best_loss))
}

/// The best available comparator: enumeration up to `N = 8`, subset DP up to
/// `N = 16`, sampling beyond.
pub fn comparator<R: Rng + ?Sized>(env: &Environment, rng: &mut R) -> Result<ComparatorResult> {
    if env.n <= ENUMERATION_CAP {
        let (ranking, lstar) = best_ranking(env)?;
        Ok(ComparatorResult {
            ranking,
            lstar,
            exact: true,
            method: OracleMethod::Enumeration,
        })
    } else if env.n <= DP_CAP {
        let (ranking, lstar) = best_ranking_dp(env)?;
        Ok(ComparatorResult {
            ranking,
            lstar,
            exact: true,
            method: OracleMethod::SubsetDp,
        })
    } else {
        let (ranking, lstar) = best_sampled_ranking(env, DEFAULT_SAMPLES, rng)?;
        Ok(ComparatorResult {
            ranking,
            lstar,
            exact: false,
            method: OracleMethod::Sampled,
        })
    }
}

/// One Hedge (η = 1, R = 1) per distinct available set, trained on full loss vectors.
#[derive(Debug, Clone, Default)]
pub struct PerSubset {
    hedges: BTreeMap<Vec<ActionId>, HedgeInstance<ActionId>>,
}

impl PerSubset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn subsets(&self) -> usize {
        self.hedges.len()
    }

    pub fn step<R: Rng + ?Sized>(&mut self, round: &RoundTrace, rng: &mut R) -> Result<ActionId> {
        let h = match self.hedges.entry(round.available.clone()) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(HedgeInstance::new(round.available.clone(), 1.0, 1.0)?),
        };
        let chosen = h.sample(rng);
        h.update(&round.losses)?;
        Ok(chosen)
    }
}

/// One Hedge (η = 1, R = 1) over all `N!` rankings (`N ≤ 7`), charged `ℓ_t(σ(A_t))`.
#[derive(Debug, Clone)]
pub struct RankingHedge {
    hedge: HedgeInstance<usize>,
    rankings: Vec<Ranking>,
}

impl RankingHedge {
    pub fn new(n: usize) -> Result<Self> {
        if n > RANKING_HEDGE_CAP {
            return Err(Error::Capability(format!(
                "hedging over all rankings needs N ≤ {RANKING_HEDGE_CAP}, got {n}"
            )));
        }
        let rankings: Vec<Ranking> = (0..n)
            .permutations(n)
            .map(|p| Ranking::from_ids(&p).expect("permutation"))
            .collect();
        let hedge = HedgeInstance::new((0..rankings.len()).collect(), 1.0, 1.0)?;
        Ok(RankingHedge { hedge, rankings })
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }

    pub fn hedge(&self) -> &HedgeInstance<usize> {
        &self.hedge
    }

    pub fn step<R: Rng + ?Sized>(&mut self, round: &RoundTrace, rng: &mut R) -> Result<ActionId> {
        let idx = self.hedge.sample(rng);
        let chosen = self.rankings[idx].choice(&round.available)?;
        let losses = self
            .rankings
            .iter()
            .map(|s| round.comparator_loss(s))
            .collect::<Result<Vec<f64>>>()?;
        self.hedge.update(&losses)?;
        Ok(chosen)
    }
}

fn baseline_report<R: Rng + ?Sized>(
    env: &Environment,
    losses: Vec<f64>,
    rng: &mut R,
) -> Result<RegretReport> {
    let c = comparator(env, rng)?;
    RegretReport::build(env, &losses, c.ranking, c.exact, &[1.0])
}

pub fn per_subset_baseline<R: Rng + ?Sized>(
    env: &Environment,
    rng: &mut R,
) -> Result<RegretReport> {
    let mut learner = PerSubset::new();
    let mut losses = Vec::with_capacity(env.horizon());
    for r in &env.rounds {
        let a = learner.step(r, rng)?;
        losses.push(r.loss_of(a).expect("chosen from A_t"));
    }
    baseline_report(env, losses, rng)
}

pub fn ranking_hedge_baseline<R: Rng + ?Sized>(
    env: &Environment,
    rng: &mut R,
) -> Result<RegretReport> {
    let mut learner = RankingHedge::new(env.n)?;
    let mut losses = Vec::with_capacity(env.horizon());
    for r in &env.rounds {
        let a = learner.step(r, rng)?;
        losses.push(r.loss_of(a).expect("chosen from A_t"));
    }
    baseline_report(env, losses, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ZeroCountClass;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example_env() -> Environment {
        Environment::new(
            3,
            ZeroCountClass::ExactlyOne,
            vec![
                RoundTrace::from_ids(1, &[0, 1], &[1.0, 0.0]).unwrap(),
                RoundTrace::from_ids(2, &[1, 2], &[1.0, 0.0]).unwrap(),
            ],
        )
        .unwrap()
    }

    fn random_env(n: usize, t: usize, rng: &mut ChaCha8Rng) -> Environment {
        let rounds = (1..=t)
            .map(|i| {
                let size = rng.gen_range(1..=n);
                let mut ids = rand::seq::index::sample(rng, n, size).into_vec();
                ids.sort();
                let losses: Vec<f64> = ids.iter().map(|_| rng.gen_range(0..=1) as f64).collect();
                RoundTrace::from_ids(i, &ids, &losses).unwrap()
            })
            .collect();
        Environment::with_bound(n, n, ZeroCountClass::Unconstrained, rounds).unwrap()
    }

    #[test]
    fn all_zero_gives_identity() {
        let env = Environment::new(
            4,
            ZeroCountClass::Unconstrained,
            vec![RoundTrace::from_ids(1, &[0, 3], &[0.0, 0.0]).unwrap()],
        )
        .unwrap();
        let (r, l) = best_ranking(&env).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(r, Ranking::identity(4));
        assert_eq!(best_ranking_dp(&env).unwrap().0, Ranking::identity(4));
    }

    #[test]
    fn two_round_example() {
        // Of the six orders, only [2,1,0] has loss 0: 1 must beat 0 and 2 must beat 1.
        let (r, l) = best_ranking(&example_env()).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(r, Ranking::from_ids(&[2, 1, 0]).unwrap());
        assert_eq!(best_ranking_dp(&example_env()).unwrap(), (r, l));
    }

    #[test]
    fn constant_zero_action_is_ranked_first() {
        let rounds = (1..=5)
            .map(|t| RoundTrace::from_ids(t, &[0, 1, 2, 3], &[1.0, 1.0, 0.0, 1.0]).unwrap())
            .collect();
        let env = Environment::new(4, ZeroCountClass::ExactlyOne, rounds).unwrap();
        let (r, l) = best_ranking(&env).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(r.order()[0], ActionId(2));
    }

    #[test]
    fn cap_is_enforced() {
        let env = Environment::with_bound(9, 1, ZeroCountClass::Unconstrained, vec![]).unwrap();
        assert!(matches!(best_ranking(&env), Err(Error::Capability(_))));
        assert!(best_ranking_dp(&env).is_ok());
        assert!(matches!(RankingHedge::new(8), Err(Error::Capability(_))));
    }

    #[test]
    fn dp_agrees_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..=7 {
            for _ in 0..10 {
                let env = random_env(n, 40, &mut rng);
                let e = best_ranking(&env).unwrap();
                let d = best_ranking_dp(&env).unwrap();
                assert_eq!(e, d, "n = {n}");
            }
        }
    }

    #[test]
    fn sampled_is_an_upper_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let env = random_env(6, 60, &mut rng);
        let (_, exact) = best_ranking(&env).unwrap();
        let (_, sampled) = best_sampled_ranking(&env, 50, &mut rng).unwrap();
        assert!(exact <= sampled);
    }

    #[test]
    fn per_subset_single_set_is_plain_hedge() {
        let rounds: Vec<RoundTrace> = (1..=30)
            .map(|t| {
                RoundTrace::from_ids(
                    t,
                    &[1, 2],
                    if t % 3 == 0 { &[1.0, 0.0] } else { &[0.0, 1.0] },
                )
                .unwrap()
            })
            .collect();
        let env = Environment::with_bound(3, 2, ZeroCountClass::ExactlyOne, rounds).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        let mut learner = PerSubset::new();
        let mut h = HedgeInstance::new(crate::domain::actions(&[1, 2]), 1.0, 1.0).unwrap();
        for r in &env.rounds {
            assert_eq!(learner.step(r, &mut a).unwrap(), h.sample(&mut b));
            h.update(&r.losses).unwrap();
        }
        assert_eq!(learner.subsets(), 1);
    }

    #[test]
    fn empty_horizon_has_zero_losses() {
        let env = Environment::with_bound(3, 0, ZeroCountClass::Unconstrained, vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rep = per_subset_baseline(&env, &mut rng).unwrap();
        assert_eq!(rep.learner_loss, 0.0);
        assert_eq!(rep.comparator_loss, 0.0);
    }

    #[test]
    fn single_action_ranking_hedge() {
        let env = Environment::new(
            1,
            ZeroCountClass::Unconstrained,
            vec![RoundTrace::from_ids(1, &[0], &[1.0]).unwrap()],
        )
        .unwrap();
        let mut learner = RankingHedge::new(1).unwrap();
        assert_eq!(
            learner
                .step(&env.rounds[0], &mut ChaCha8Rng::seed_from_u64(0))
                .unwrap(),
            ActionId(0)
        );
    }
}
