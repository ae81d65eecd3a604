//! Actions, rankings, rounds and environments.
//!
//! Actions are 0-indexed: an instance with `n` actions uses ids `0..n`, both
//! in memory and in trace files. Loss values are always stored as `f64`; the
//! binary setting is a validation-time restriction, not a separate type.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl ActionId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for ActionId {
    fn from(v: usize) -> Self {
        ActionId(v)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Shorthand for building action lists in tests and examples.
pub fn actions(ids: &[usize]) -> Vec<ActionId> {
    ids.iter().copied().map(ActionId).collect()
}

/// An unordered pair of distinct actions, stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    lo: ActionId,
    hi: ActionId,
}

impl Pair {
    /// Panics if `a == b`.
    pub fn new(a: ActionId, b: ActionId) -> Self {
        assert_ne!(a, b, "a pair needs two distinct actions");
        if a < b {
            Pair { lo: a, hi: b }
        } else {
            Pair { lo: b, hi: a }
        }
    }

    pub fn lo(self) -> ActionId {
        self.lo
    }

    pub fn hi(self) -> ActionId {
        self.hi
    }

    pub fn contains(self, a: ActionId) -> bool {
        self.lo == a || self.hi == a
    }

    pub fn intersects(self, other: Pair) -> bool {
        self.contains(other.lo) || self.contains(other.hi)
    }

    /// The member that is not `a`, if `a` belongs to the pair.
    pub fn other(self, a: ActionId) -> Option<ActionId> {
        if a == self.lo {
            Some(self.hi)
        } else if a == self.hi {
            Some(self.lo)
        } else {
            None
        }
    }

    pub fn members(self) -> [ActionId; 2] {
        [self.lo, self.hi]
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.lo, self.hi)
    }
}

/// A total order on `0..n`. `order[k]` is the action ranked `k`-th (0 is the top).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ranking {
    order: Vec<ActionId>,
    rank_of: Vec<usize>,
}

impl Ranking {
    pub fn from_order(order: Vec<ActionId>) -> Result<Self> {
        let n = order.len();
        let mut rank_of = vec![usize::MAX; n];
        for (k, a) in order.iter().enumerate() {
            if a.0 >= n {
                return Err(Error::domain(format!(
                    "ranking entry {a} out of range 0..{n}"
                )));
            }
            if rank_of[a.0] != usize::MAX {
                return Err(Error::domain(format!("ranking lists action {a} twice")));
            }
            rank_of[a.0] = k;
        }
        Ok(Ranking { order, rank_of })
    }

    pub fn from_ids(ids: &[usize]) -> Result<Self> {
        Self::from_order(actions(ids))
    }

    pub fn identity(n: usize) -> Self {
        Ranking {
            order: (0..n).map(ActionId).collect(),
            rank_of: (0..n).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut order: Vec<ActionId> = (0..n).map(ActionId).collect();
        order.shuffle(rng);
        Self::from_order(order).expect("a shuffle is a permutation")
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[ActionId] {
        &self.order
    }

    /// 0-based rank; smaller is better.
    #[inline]
    pub fn rank(&self, a: ActionId) -> usize {
        self.rank_of[a.0]
    }

    /// 1-based position `m_σ(a)`.
    #[inline]
    pub fn position(&self, a: ActionId) -> usize {
        self.rank_of[a.0] + 1
    }

    /// The highest-ranked member of `set`.
    pub fn choice(&self, set: &[ActionId]) -> Result<ActionId> {
        let mut best: Option<ActionId> = None;
        for &a in set {
            if a.0 >= self.order.len() {
                return Err(Error::domain(format!(
                    "action {a} outside ranking over {} actions",
                    self.order.len()
                )));
            }
            if best.is_none_or(|b| self.rank_of[a.0] < self.rank_of[b.0]) {
                best = Some(a);
            }
        }
        best.ok_or_else(|| Error::domain("choice from an empty action set"))
    }

    /// Which member of the pair the ranking prefers.
    pub fn pair_choice(&self, pair: Pair) -> ActionId {
        if self.rank(pair.lo()) < self.rank(pair.hi()) {
            pair.lo()
        } else {
            pair.hi()
        }
    }
}

/// `σ(S)`: the highest-ranked element of a nonempty set.
pub fn sigma_choice(sigma: &Ranking, set: &[ActionId]) -> Result<ActionId> {
    sigma.choice(set)
}

impl Serialize for Ranking {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.order.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ranking {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let order = Vec::<ActionId>::deserialize(d)?;
        Ranking::from_order(order).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, a) in self.order.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("]")
    }
}

/// One round: the available actions (sorted, distinct) and their losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub t: usize,
    pub available: Vec<ActionId>,
    #[serde(rename = "loss")]
    pub losses: Vec<f64>,
}

impl RoundTrace {
    /// Builds a round from `(action, loss)` entries in any order.
    pub fn new(t: usize, entries: impl IntoIterator<Item = (ActionId, f64)>) -> Result<Self> {
        let mut entries: Vec<(ActionId, f64)> = entries.into_iter().collect();
        if entries.is_empty() {
            return Err(Error::domain(format!("round {t} has no available actions")));
        }
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::domain(format!("round {t} lists an action twice")));
        }
        let (available, losses) = entries.into_iter().unzip();
        Ok(RoundTrace {
            t,
            available,
            losses,
        })
    }

    pub fn from_ids(t: usize, ids: &[usize], losses: &[f64]) -> Result<Self> {
        if ids.len() != losses.len() {
            return Err(Error::domain(format!(
                "round {t}: {} actions but {} losses",
                ids.len(),
                losses.len()
            )));
        }
        Self::new(
            t,
            ids.iter().map(|&i| ActionId(i)).zip(losses.iter().copied()),
        )
    }

    pub fn size(&self) -> usize {
        self.available.len()
    }

    pub fn contains(&self, a: ActionId) -> bool {
        self.available.binary_search(&a).is_ok()
    }

    pub fn loss_of(&self, a: ActionId) -> Option<f64> {
        self.available
            .binary_search(&a)
            .ok()
            .map(|i| self.losses[i])
    }

    pub fn entries(&self) -> impl Iterator<Item = (ActionId, f64)> + '_ {
        self.available
            .iter()
            .copied()
            .zip(self.losses.iter().copied())
    }

    pub fn zeros(&self) -> Vec<ActionId> {
        self.entries().filter(|e| e.1 == 0.0).map(|e| e.0).collect()
    }

    pub fn zero_count(&self) -> usize {
        self.losses.iter().filter(|&&l| l == 0.0).count()
    }

    pub fn is_binary(&self) -> bool {
        self.losses.iter().all(|&l| l == 0.0 || l == 1.0)
    }

    /// Loss of `σ(A_t)`.
    pub fn comparator_loss(&self, sigma: &Ranking) -> Result<f64> {
        let a = sigma.choice(&self.available)?;
        Ok(self
            .loss_of(a)
            .expect("choice is drawn from the available set"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroCountClass {
    ExactlyOne,
    ExactlyTwo,
    Unconstrained,
}

impl ZeroCountClass {
    /// Number of zero-loss actions every round must have, if constrained.
    pub fn required_zeros(self) -> Option<usize> {
        match self {
            ZeroCountClass::ExactlyOne => Some(1),
            ZeroCountClass::ExactlyTwo => Some(2),
            ZeroCountClass::Unconstrained => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ZeroCountClass::ExactlyOne => "exactly-one",
            ZeroCountClass::ExactlyTwo => "exactly-two",
            ZeroCountClass::Unconstrained => "unconstrained",
        }
    }
}

impl fmt::Display for ZeroCountClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    /// Every loss is 0 or 1.
    Binary,
    /// Every loss lies in `[0, 1]`.
    Real,
}

/// A fixed (oblivious) sequence of rounds over `n` actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub n: usize,
    /// Upper bound on `|A_t|`.
    pub k: usize,
    pub zero_count_class: ZeroCountClass,
    pub rounds: Vec<RoundTrace>,
}

impl Environment {
    /// Builds and validates an environment whose `k` is the realized max `|A_t|`.
    pub fn new(
        n: usize,
        zero_count_class: ZeroCountClass,
        rounds: Vec<RoundTrace>,
    ) -> Result<Self> {
        let k = rounds.iter().map(RoundTrace::size).max().unwrap_or(0);
        Self::with_bound(n, k, zero_count_class, rounds)
    }

    /// Builds and validates an environment with a declared availability bound.
    pub fn with_bound(
        n: usize,
        k: usize,
        zero_count_class: ZeroCountClass,
        rounds: Vec<RoundTrace>,
    ) -> Result<Self> {
        let env = Environment {
            n,
            k,
            zero_count_class,
            rounds,
        };
        validate_environment(&env).map_err(Error::InvalidEnvironment)?;
        Ok(env)
    }

    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn realized_k(&self) -> usize {
        self.rounds.iter().map(RoundTrace::size).max().unwrap_or(0)
    }

    pub fn loss_mode(&self) -> LossMode {
        if self.rounds.iter().all(RoundTrace::is_binary) {
            LossMode::Binary
        } else {
            LossMode::Real
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Diagnostic {
    #[error("round {round}: declared t = {found}")]
    RoundIndex { round: usize, found: usize },
    #[error("round {round}: empty available set")]
    EmptyAvailable { round: usize },
    #[error("round {round}: available set not sorted and duplicate-free")]
    Unsorted { round: usize },
    #[error("round {round}: action {action} outside 0..{n}")]
    ActionOutOfRange {
        round: usize,
        action: ActionId,
        n: usize,
    },
    #[error("round {round}: {losses} losses for {available} available actions")]
    LossMisaligned {
        round: usize,
        available: usize,
        losses: usize,
    },
    #[error("round {round}: loss {loss} of action {action} outside [0, 1]")]
    LossOutOfRange {
        round: usize,
        action: ActionId,
        loss: f64,
    },
    #[error("round {round}: loss {loss} of action {action} is not binary")]
    NonBinaryLoss {
        round: usize,
        action: ActionId,
        loss: f64,
    },
    #[error("round {round}: {size} available actions exceed K = {k}")]
    SetTooLarge { round: usize, size: usize, k: usize },
    #[error("round {round}: {found} zero-loss actions, class requires {expected}")]
    ZeroCountMismatch {
        round: usize,
        expected: usize,
        found: usize,
    },
    #[error("K = {k} exceeds N = {n}")]
    BoundExceedsActions { k: usize, n: usize },
}

/// Every invariant violation in `env`. Constrained zero-count classes imply binary losses.
pub fn validate_environment(env: &Environment) -> std::result::Result<(), Vec<Diagnostic>> {
    let mode = match env.zero_count_class {
        ZeroCountClass::Unconstrained => LossMode::Real,
        _ => LossMode::Binary,
    };
    validate_as(env, mode)
}

/// Like [`validate_environment`], additionally requiring the given loss mode.
pub fn validate_as(env: &Environment, mode: LossMode) -> std::result::Result<(), Vec<Diagnostic>> {
    let mut diags = Vec::new();
    if env.k > env.n {
        diags.push(Diagnostic::BoundExceedsActions { k: env.k, n: env.n });
    }
    let required = env.zero_count_class.required_zeros();
    for (i, r) in env.rounds.iter().enumerate() {
        let round = i + 1;
        if r.t != round {
            diags.push(Diagnostic::RoundIndex { round, found: r.t });
        }
        if r.available.is_empty() {
            diags.push(Diagnostic::EmptyAvailable { round });
        }
        if r.available.windows(2).any(|w| w[0] >= w[1]) {
            diags.push(Diagnostic::Unsorted { round });
        }
        for &a in &r.available {
            if a.0 >= env.n {
                diags.push(Diagnostic::ActionOutOfRange {
                    round,
                    action: a,
                    n: env.n,
                });
            }
        }
        if r.available.len() > env.k {
            diags.push(Diagnostic::SetTooLarge {
                round,
                size: r.available.len(),
                k: env.k,
            });
        }
        if r.losses.len() != r.available.len() {
            diags.push(Diagnostic::LossMisaligned {
                round,
                available: r.available.len(),
                losses: r.losses.len(),
            });
            continue;
        }
        for (a, loss) in r.entries() {
            if !(0.0..=1.0).contains(&loss) {
                diags.push(Diagnostic::LossOutOfRange {
                    round,
                    action: a,
                    loss,
                });
            } else if mode == LossMode::Binary && loss != 0.0 && loss != 1.0 {
                diags.push(Diagnostic::NonBinaryLoss {
                    round,
                    action: a,
                    loss,
                });
            }
        }
        if let Some(expected) = required {
            let found = r.zero_count();
            if found != expected {
                diags.push(Diagnostic::ZeroCountMismatch {
                    round,
                    expected,
                    found,
                });
            }
        }
    }
    if diags.is_empty() {
        Ok(())
    } else {
        Err(diags)
    }
}
