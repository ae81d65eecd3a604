//! Single-elimination brackets over an available action set.
//!
//! The canonical bracket puts the available actions on the leaves in
//! ascending id order and splits every node's range into a left half of
//! `⌈n/2⌉` leaves and a right half of `⌊n/2⌋`. Matches are played bottom-up by
//! depth (deepest first) and left-to-right within a depth, so the order in
//! which pair hedges are sampled is fixed.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::domain::{ActionId, Pair};
use crate::error::{Error, Result};
use crate::hedge::HedgeInstance;

#[derive(Debug, Clone)]
struct Node {
    children: Option<(usize, usize)>,
    depth: usize,
    first_leaf: usize,
}

/// Shape of a bracket with a given number of leaves.
#[derive(Debug, Clone)]
pub struct Bracket {
    nodes: Vec<Node>,
    root: usize,
    schedule: Vec<usize>,
    leaves: usize,
}

impl Bracket {
    /// Panics if `leaves == 0`.
    pub fn canonical(leaves: usize) -> Self {
        assert!(leaves > 0, "bracket needs at least one leaf");
        let mut nodes = Vec::with_capacity(2 * leaves);
        let root = build(&mut nodes, 0, leaves, 0);
        let mut schedule: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].children.is_some())
            .collect();
        schedule.sort_by_key(|&i| (std::cmp::Reverse(nodes[i].depth), nodes[i].first_leaf));
        Bracket {
            nodes,
            root,
            schedule,
            leaves,
        }
    }

    pub fn leaves(&self) -> usize {
        self.leaves
    }

    /// Number of two-child matches.
    pub fn matches(&self) -> usize {
        self.schedule.len()
    }

    /// Length of the longest leaf-to-root path.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }
}

fn build(nodes: &mut Vec<Node>, lo: usize, hi: usize, depth: usize) -> usize {
    let children = if hi - lo == 1 {
        None
    } else {
        let mid = lo + (hi - lo).div_ceil(2);
        let left = build(nodes, lo, mid, depth + 1);
        let right = build(nodes, mid, hi, depth + 1);
        Some((left, right))
    };
    nodes.push(Node {
        children,
        depth,
        first_leaf: lo,
    });
    nodes.len() - 1
}

/// Result of one tournament: the winner and the pairs that met.
#[derive(Debug, Clone, PartialEq)]
pub struct TournamentOutcome {
    pub winner: ActionId,
    /// `U_t`: every pair that played a match.
    pub consulted: BTreeSet<Pair>,
    /// Winner of each consulted match.
    pub sub_winners: BTreeMap<Pair, ActionId>,
    /// Consulted pairs in play order.
    pub play_order: Vec<Pair>,
}

impl TournamentOutcome {
    /// How many consulted pairs involve `a`.
    pub fn appearances(&self, a: ActionId) -> usize {
        self.consulted.iter().filter(|p| p.contains(a)).count()
    }
}

/// Plays the canonical bracket on `available`, asking `decide` for each match winner.
pub fn run_tournament_with<F>(available: &[ActionId], mut decide: F) -> Result<TournamentOutcome>
where
    F: FnMut(Pair) -> Result<ActionId>,
{
    if available.is_empty() {
        return Err(Error::domain("tournament over an empty action set"));
    }
    let mut leaves = available.to_vec();
    leaves.sort();
    let bracket = Bracket::canonical(leaves.len());
    let mut winners: Vec<Option<ActionId>> = vec![None; bracket.nodes.len()];
    for (i, node) in bracket.nodes.iter().enumerate() {
        if node.children.is_none() {
            winners[i] = Some(leaves[node.first_leaf]);
        }
    }
    let mut consulted = BTreeSet::new();
    let mut sub_winners = BTreeMap::new();
    let mut play_order = Vec::with_capacity(bracket.matches());
    for &v in &bracket.schedule {
        let (l, r) = bracket.nodes[v]
            .children
            .expect("scheduled nodes are matches");
        let (i, j) = (
            winners[l].expect("children play first"),
            winners[r].expect("children play first"),
        );
        let pair = Pair::new(i, j);
        let w = decide(pair)?;
        if !pair.contains(w) {
            return Err(Error::Internal(format!(
                "match {pair} decided for outsider {w}"
            )));
        }
        winners[v] = Some(w);
        consulted.insert(pair);
        sub_winners.insert(pair, w);
        play_order.push(pair);
    }
    Ok(TournamentOutcome {
        winner: winners[bracket.root].expect("root resolved"),
        consulted,
        sub_winners,
        play_order,
    })
}

/// One two-choice Hedge per unordered pair, created on first use.
#[derive(Debug, Clone)]
pub struct PairHedgeBank {
    hedges: BTreeMap<Pair, HedgeInstance<ActionId>>,
    eta: f64,
    loss_range: f64,
}

impl PairHedgeBank {
    pub fn new(eta: f64, loss_range: f64) -> Result<Self> {
        // Validate parameters once through the instance constructor.
        HedgeInstance::new(vec![ActionId(0)], eta, loss_range)?;
        Ok(PairHedgeBank {
            hedges: BTreeMap::new(),
            eta,
            loss_range,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn loss_range(&self) -> f64 {
        self.loss_range
    }

    pub fn get(&self, pair: Pair) -> Option<&HedgeInstance<ActionId>> {
        self.hedges.get(&pair)
    }

    pub fn instance(&mut self, pair: Pair) -> &mut HedgeInstance<ActionId> {
        let (eta, r) = (self.eta, self.loss_range);
        self.hedges.entry(pair).or_insert_with(|| {
            HedgeInstance::new(vec![pair.lo(), pair.hi()], eta, r).expect("validated in new")
        })
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, pair: Pair, rng: &mut R) -> ActionId {
        self.instance(pair).sample(rng)
    }

    /// Probability that the pair's hedge picks `a` (1/2 for untouched pairs).
    pub fn probability(&self, pair: Pair, a: ActionId) -> f64 {
        match self.hedges.get(&pair) {
            Some(h) => h.probability(&a).unwrap_or(0.0),
            None if pair.contains(a) => 0.5,
            None => 0.0,
        }
    }

    /// Number of instantiated hedges.
    pub fn len(&self) -> usize {
        self.hedges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hedges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pair, &HedgeInstance<ActionId>)> {
        self.hedges.iter()
    }

    /// True when every instantiated hedge is still uniform.
    pub fn hedges_untouched(&self) -> bool {
        self.hedges
            .values()
            .all(|h| h.log_weights().iter().all(|&w| w == 0.0))
    }
}

/// Plays the canonical bracket with each match decided by a draw from its pair hedge.
pub fn run_tournament<R: Rng + ?Sized>(
    available: &[ActionId],
    bank: &mut PairHedgeBank,
    rng: &mut R,
) -> Result<TournamentOutcome> {
    run_tournament_with(available, |pair| Ok(bank.sample(pair, rng)))
}

/// `⌈log₂ k⌉` for `k ≥ 1`.
pub fn ceil_log2(k: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}
