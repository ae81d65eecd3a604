//! HOPP: Hedges over pairs of pairs, for rounds with exactly two zero-loss
//! actions under full information.
//!
//! Two kinds of sub-problems are learned. A matchup Hedge compares two
//! disjoint action pairs `X` and `Y`; a triple Hedge picks one action of a
//! 3-set. A pair `X ⊆ A_t` is *good* when it wins the sampled matchup against
//! every disjoint pair inside `A_t`. Any two good pairs intersect, so either
//! all good pairs share an action or they form a triangle `{i,j},{j,k},{k,i}`,
//! in which case the triple Hedge on `{i,j,k}` decides.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use crate::domain::{ActionId, Pair, Ranking, RoundTrace};
use crate::error::{Error, Result};
use crate::hedge::HedgeInstance;

/// Two disjoint pairs, ordered so that `x < y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Matchup {
    x: Pair,
    y: Pair,
}

impl Matchup {
    pub fn new(a: Pair, b: Pair) -> Result<Self> {
        if a.intersects(b) {
            return Err(Error::domain(format!("matchup pairs {a} and {b} overlap")));
        }
        Ok(if a < b {
            Matchup { x: a, y: b }
        } else {
            Matchup { x: b, y: a }
        })
    }

    pub fn x(self) -> Pair {
        self.x
    }

    pub fn y(self) -> Pair {
        self.y
    }

    pub fn other(self, side: Pair) -> Option<Pair> {
        if side == self.x {
            Some(self.y)
        } else if side == self.y {
            Some(self.x)
        } else {
            None
        }
    }
}

impl fmt::Display for Matchup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} v {}", self.x, self.y)
    }
}

/// A 3-set of actions in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple([ActionId; 3]);

impl Triple {
    pub fn new(a: ActionId, b: ActionId, c: ActionId) -> Result<Self> {
        let mut m = [a, b, c];
        m.sort();
        if m[0] == m[1] || m[1] == m[2] {
            return Err(Error::domain("triple needs three distinct actions"));
        }
        Ok(Triple(m))
    }

    pub fn members(self) -> [ActionId; 3] {
        self.0
    }

    pub fn contains(self, a: ActionId) -> bool {
        self.0.contains(&a)
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{},{}}}", self.0[0], self.0[1], self.0[2])
    }
}

/// All pairs inside `available`, lexicographic.
pub fn pairs_within(available: &[ActionId]) -> Vec<Pair> {
    let mut out = Vec::new();
    for (i, &a) in available.iter().enumerate() {
        for &b in &available[i + 1..] {
            out.push(Pair::new(a, b));
        }
    }
    out.sort();
    out
}

/// All matchups of disjoint pairs inside `available`, in sampling order.
pub fn matchups_within(available: &[ActionId]) -> Vec<Matchup> {
    let pairs = pairs_within(available);
    let mut out = Vec::new();
    for (i, &x) in pairs.iter().enumerate() {
        for &y in &pairs[i + 1..] {
            if !x.intersects(y) {
                out.push(Matchup { x, y });
            }
        }
    }
    out
}

/// Lazily populated matchup and triple Hedges.
#[derive(Debug, Clone)]
pub struct PairPairHedgeBank {
    pair_hedges: BTreeMap<Matchup, HedgeInstance<Pair>>,
    triple_hedges: BTreeMap<Triple, HedgeInstance<ActionId>>,
    eta: f64,
}

impl PairPairHedgeBank {
    pub fn new(eta: f64) -> Result<Self> {
        HedgeInstance::new(vec![()], eta, 1.0)?;
        Ok(PairPairHedgeBank {
            pair_hedges: BTreeMap::new(),
            triple_hedges: BTreeMap::new(),
            eta,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn pair_hedge(&self, m: Matchup) -> Option<&HedgeInstance<Pair>> {
        self.pair_hedges.get(&m)
    }

    pub fn triple_hedge(&self, s: Triple) -> Option<&HedgeInstance<ActionId>> {
        self.triple_hedges.get(&s)
    }

    pub fn pair_hedges(&self) -> impl Iterator<Item = (&Matchup, &HedgeInstance<Pair>)> {
        self.pair_hedges.iter()
    }

    pub fn triple_hedges(&self) -> impl Iterator<Item = (&Triple, &HedgeInstance<ActionId>)> {
        self.triple_hedges.iter()
    }

    fn pair_instance(&mut self, m: Matchup) -> &mut HedgeInstance<Pair> {
        let eta = self.eta;
        self.pair_hedges.entry(m).or_insert_with(|| {
            HedgeInstance::new(vec![m.x, m.y], eta, 1.0).expect("validated in new")
        })
    }

    fn triple_instance(&mut self, s: Triple) -> &mut HedgeInstance<ActionId> {
        let eta = self.eta;
        self.triple_hedges.entry(s).or_insert_with(|| {
            HedgeInstance::new(s.0.to_vec(), eta, 1.0).expect("validated in new")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionBranch {
    NoGoodPair,
    CommonAction,
    Triangle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub chosen: ActionId,
    /// `A_t^{X,Y}` for every matchup inside `A_t`.
    pub pair_samples: BTreeMap<Matchup, Pair>,
    /// `(S, b_t^S)` for the triangle triple, when consulted.
    pub triple_sample: Option<(Triple, ActionId)>,
    pub good_pairs: Vec<Pair>,
    pub branch: SelectionBranch,
}

/// Pairs inside `available` that win every matchup against a disjoint pair inside `available`.
pub fn find_good_pairs(
    available: &[ActionId],
    pair_samples: &BTreeMap<Matchup, Pair>,
) -> Result<Vec<Pair>> {
    let pairs = pairs_within(available);
    let mut good = Vec::new();
    for &x in &pairs {
        let mut is_good = true;
        for &y in pairs.iter().filter(|y| !x.intersects(**y)) {
            let m = Matchup::new(x, y).expect("disjoint by filter");
            let winner = pair_samples
                .get(&m)
                .ok_or_else(|| Error::Internal(format!("no sample for matchup {m}")))?;
            if *winner != x {
                is_good = false;
                break;
            }
        }
        if is_good {
            good.push(x);
        }
    }
    Ok(good)
}

/// The selection rule's case split. Returns the branch, the chosen action for
/// the first two branches, and the triangle's triple for the third.
pub fn classify_good_pairs(
    available: &[ActionId],
    good: &[Pair],
) -> Result<(SelectionBranch, Option<ActionId>, Option<Triple>)> {
    let Some(first) = good.first() else {
        let lowest = *available
            .iter()
            .min()
            .ok_or_else(|| Error::domain("empty available set"))?;
        return Ok((SelectionBranch::NoGoodPair, Some(lowest), None));
    };
    for (i, a) in good.iter().enumerate() {
        for b in &good[i + 1..] {
            if !a.intersects(*b) {
                return Err(Error::Internal(format!(
                    "good pairs {a} and {b} are disjoint"
                )));
            }
        }
    }
    let common = first
        .members()
        .into_iter()
        .filter(|&a| good.iter().all(|p| p.contains(a)))
        .min();
    if let Some(a) = common {
        return Ok((SelectionBranch::CommonAction, Some(a), None));
    }
    let mut members: Vec<ActionId> = good.iter().flat_map(|p| p.members()).collect();
    members.sort();
    members.dedup();
    if good.len() == 3 && members.len() == 3 {
        let s = Triple::new(members[0], members[1], members[2])?;
        return Ok((SelectionBranch::Triangle, None, Some(s)));
    }
    Err(Error::Internal(format!(
        "{} pairwise-intersecting good pairs without a common action or triangle",
        good.len()
    )))
}

/// Samples every matchup inside `available`, then applies the selection rule.
pub fn select<R: Rng + ?Sized>(
    bank: &mut PairPairHedgeBank,
    available: &[ActionId],
    rng: &mut R,
) -> Result<SelectionOutcome> {
    let mut pair_samples = BTreeMap::new();
    for m in matchups_within(available) {
        let w = bank.pair_instance(m).sample(rng);
        pair_samples.insert(m, w);
    }
    let good_pairs = find_good_pairs(available, &pair_samples)?;
    let (branch, chosen, triangle) = classify_good_pairs(available, &good_pairs)?;
    let (chosen, triple_sample) = match (chosen, triangle) {
        (Some(a), _) => (a, None),
        (None, Some(s)) => {
            let b = bank.triple_instance(s).sample(rng);
            (b, Some((s, b)))
        }
        (None, None) => unreachable!("classification yields an action or a triple"),
    };
    Ok(SelectionOutcome {
        chosen,
        pair_samples,
        triple_sample,
        good_pairs,
        branch,
    })
}

/// The round's sub-problem losses, determined by the zero-loss pair `Z_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoppCertificate {
    pub round: RoundTrace,
    pub zero_pair: Pair,
}

impl HoppCertificate {
    fn inside(&self, p: Pair) -> bool {
        self.round.contains(p.lo()) && self.round.contains(p.hi())
    }

    /// `c_t^{X,Y}(side)`: 1 iff the other side is `Z_t` and `side ⊆ A_t`.
    pub fn pair_loss(&self, m: Matchup, side: Pair) -> f64 {
        match m.other(side) {
            Some(other) if other == self.zero_pair && self.inside(side) => 1.0,
            _ => 0.0,
        }
    }

    /// `d_t^S(a) = ℓ_t(a)·1[Z_t ⊆ S ⊆ A_t]`.
    pub fn triple_loss(&self, s: Triple, a: ActionId) -> f64 {
        let [lo, hi] = self.zero_pair.members();
        if !(s.contains(a) && s.contains(lo) && s.contains(hi)) {
            return 0.0;
        }
        if s.members().iter().all(|&x| self.round.contains(x)) {
            self.round.loss_of(a).expect("member of A_t")
        } else {
            0.0
        }
    }

    /// Pairs `X ⊆ A_t ∖ Z_t`; each is charged in its matchup against `Z_t`.
    pub fn charged_pairs(&self) -> Vec<Pair> {
        let rest: Vec<ActionId> = self
            .round
            .available
            .iter()
            .copied()
            .filter(|&a| !self.zero_pair.contains(a))
            .collect();
        pairs_within(&rest)
    }

    /// Triples `Z_t ∪ {i}` for `i ∈ A_t ∖ Z_t`.
    pub fn charged_triples(&self) -> Vec<Triple> {
        let [z1, z2] = self.zero_pair.members();
        self.round
            .available
            .iter()
            .filter(|&&a| !self.zero_pair.contains(a))
            .map(|&a| Triple::new(z1, z2, a).expect("distinct"))
            .collect()
    }

    /// `Σ c_t^{X,Y}(A_t^{X,Y}) + Σ d_t^S(b_t^S)` over what was sampled.
    pub fn learner_charge(&self, selection: &SelectionOutcome) -> f64 {
        let pairs: f64 = selection
            .pair_samples
            .iter()
            .map(|(&m, &w)| self.pair_loss(m, w))
            .sum();
        let triple = selection
            .triple_sample
            .map_or(0.0, |(s, b)| self.triple_loss(s, b));
        pairs + triple
    }

    /// `(Σ c_t^{X,Y}(σ(X,Y)), Σ_S d_t^S(σ(S)))`.
    pub fn comparator_cost(&self, sigma: &Ranking) -> Result<(f64, f64)> {
        let [z1, z2] = self.zero_pair.members();
        let mut pair_cost = 0.0;
        for x in self.charged_pairs() {
            let top = sigma.choice(&[x.lo(), x.hi(), z1, z2])?;
            if x.contains(top) {
                pair_cost += 1.0;
            }
        }
        let mut triple_cost = 0.0;
        for s in self.charged_triples() {
            let top = sigma.choice(&s.members())?;
            triple_cost += self.triple_loss(s, top);
        }
        Ok((pair_cost, triple_cost))
    }

    fn apply(&self, bank: &mut PairPairHedgeBank) -> Result<()> {
        for x in self.charged_pairs() {
            let m = Matchup::new(x, self.zero_pair)?;
            bank.pair_instance(m)
                .update_with(|side| self.pair_loss(m, *side))?;
        }
        for s in self.charged_triples() {
            bank.triple_instance(s)
                .update_with(|a| self.triple_loss(s, *a))?;
        }
        Ok(())
    }
}

pub fn hopp_certificate_comparator_cost(
    certificate: &HoppCertificate,
    sigma: &Ranking,
) -> Result<(f64, f64)> {
    certificate.comparator_cost(sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoppStep {
    pub chosen: ActionId,
    pub selection: SelectionOutcome,
    pub certificate: HoppCertificate,
}

/// One HOPP round against `round`, which must have exactly two zero-loss actions.
pub fn hopp_step<R: Rng + ?Sized>(
    bank: &mut PairPairHedgeBank,
    round: &RoundTrace,
    rng: &mut R,
) -> Result<HoppStep> {
    let zero_pair = zero_pair(round)?;
    let selection = select(bank, &round.available, rng)?;
    let certificate = HoppCertificate {
        round: round.clone(),
        zero_pair,
    };
    certificate.apply(bank)?;
    Ok(HoppStep {
        chosen: selection.chosen,
        selection,
        certificate,
    })
}

fn zero_pair(round: &RoundTrace) -> Result<Pair> {
    if !round.is_binary() {
        return Err(Error::Precondition {
            round: round.t,
            reason: "losses must be binary".into(),
        });
    }
    match round.zeros().as_slice() {
        [a, b] => Ok(Pair::new(*a, *b)),
        zs => Err(Error::Precondition {
            round: round.t,
            reason: format!("exactly two zero-loss actions required, found {}", zs.len()),
        }),
    }
}

/// Full-information HOPP learner.
#[derive(Debug, Clone)]
pub struct Hopp {
    bank: PairPairHedgeBank,
}

impl Hopp {
    pub fn new(eta: f64) -> Result<Self> {
        Ok(Hopp {
            bank: PairPairHedgeBank::new(eta)?,
        })
    }

    pub fn bank(&self) -> &PairPairHedgeBank {
        &self.bank
    }

    pub fn step<R: Rng + ?Sized>(&mut self, round: &RoundTrace, rng: &mut R) -> Result<HoppStep> {
        hopp_step(&mut self.bank, round, rng)
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Per-round factors bounding the comparator's pair and triple costs: `(C(K−2,2), K−2)`.
pub fn comparator_cost_factors(k: usize) -> (usize, usize) {
    let rest = k.saturating_sub(2);
    (binomial(rest, 2), rest)
}

/// `η/(1−e^{−η})·(C(K−2,2)+K−2)·L* + [(C(N,2)+3C(N,4))·ln2 + C(N,3)·ln3]/(1−e^{−η})`.
pub fn hopp_bound(eta: f64, n: usize, k: usize, comparator_loss: f64) -> f64 {
    let denom = -(-eta).exp_m1();
    let (pc, tc) = comparator_cost_factors(k);
    let ratio = eta / denom * (pc + tc) as f64;
    let additive = ((binomial(n, 2) + 3 * binomial(n, 4)) as f64 * std::f64::consts::LN_2
        + binomial(n, 3) as f64 * 3f64.ln())
        / denom;
    ratio * comparator_loss + additive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::actions;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(a: usize, b: usize) -> Pair {
        Pair::new(ActionId(a), ActionId(b))
    }

    type SampleSpec = ((usize, usize), (usize, usize), (usize, usize));

    fn samples(list: &[SampleSpec]) -> BTreeMap<Matchup, Pair> {
        list.iter()
            .map(|&(x, y, w)| (Matchup::new(p(x.0, x.1), p(y.0, y.1)).unwrap(), p(w.0, w.1)))
            .collect()
    }

    #[test]
    fn three_actions_are_a_vacuous_triangle() {
        let avail = actions(&[0, 1, 2]);
        assert!(matchups_within(&avail).is_empty());
        let good = find_good_pairs(&avail, &BTreeMap::new()).unwrap();
        assert_eq!(good, vec![p(0, 1), p(0, 2), p(1, 2)]);
        let (branch, chosen, triple) = classify_good_pairs(&avail, &good).unwrap();
        assert_eq!(branch, SelectionBranch::Triangle);
        assert_eq!(chosen, None);
        assert_eq!(
            triple,
            Some(Triple::new(ActionId(0), ActionId(1), ActionId(2)).unwrap())
        );
    }

    #[test]
    fn common_action_branch() {
        let avail = actions(&[0, 1, 2, 3]);
        let s = samples(&[
            ((0, 1), (2, 3), (0, 1)),
            ((0, 2), (1, 3), (0, 2)),
            ((0, 3), (1, 2), (0, 3)),
        ]);
        let good = find_good_pairs(&avail, &s).unwrap();
        assert_eq!(good, vec![p(0, 1), p(0, 2), p(0, 3)]);
        let (branch, chosen, _) = classify_good_pairs(&avail, &good).unwrap();
        assert_eq!(
            (branch, chosen),
            (SelectionBranch::CommonAction, Some(ActionId(0)))
        );
    }

    #[test]
    fn triangle_branch() {
        let avail = actions(&[0, 1, 2, 3]);
        let s = samples(&[
            ((0, 1), (2, 3), (0, 1)),
            ((0, 3), (1, 2), (1, 2)),
            ((0, 2), (1, 3), (0, 2)),
        ]);
        let good = find_good_pairs(&avail, &s).unwrap();
        assert_eq!(good, vec![p(0, 1), p(0, 2), p(1, 2)]);
        let (branch, _, triple) = classify_good_pairs(&avail, &good).unwrap();
        assert_eq!(branch, SelectionBranch::Triangle);
        assert_eq!(
            triple,
            Some(Triple::new(ActionId(0), ActionId(1), ActionId(2)).unwrap())
        );
    }

    #[test]
    fn no_good_pair_picks_lowest_id() {
        let avail = actions(&[1, 2, 3, 4]);
        let s = samples(&[
            ((1, 2), (3, 4), (3, 4)),
            ((1, 3), (2, 4), (2, 4)),
            ((1, 4), (2, 3), (1, 4)),
        ]);
        let good = find_good_pairs(&avail, &s).unwrap();
        assert_eq!(good, vec![p(1, 4), p(2, 4), p(3, 4)]);
        // All three share 4, so this is a common-action round; flip one sample to break it.
        let s = samples(&[
            ((1, 2), (3, 4), (1, 2)),
            ((1, 3), (2, 4), (2, 4)),
            ((1, 4), (2, 3), (1, 4)),
        ]);
        let good = find_good_pairs(&avail, &s).unwrap();
        assert_eq!(good, vec![p(1, 2), p(1, 4), p(2, 4)]);
        let s = samples(&[
            ((1, 2), (3, 4), (3, 4)),
            ((1, 3), (2, 4), (2, 4)),
            ((1, 4), (2, 3), (2, 3)),
        ]);
        let good = find_good_pairs(&avail, &s).unwrap();
        assert_eq!(good, vec![p(2, 3), p(2, 4), p(3, 4)]);
        // Five actions: every pair has at least three opponents, so a good pair is rare.
        let avail5 = actions(&[0, 1, 2, 3, 4]);
        let all_y: BTreeMap<Matchup, Pair> = matchups_within(&avail5)
            .into_iter()
            .map(|m| (m, m.y()))
            .collect();
        let good = find_good_pairs(&avail5, &all_y).unwrap();
        let (branch, chosen, _) = classify_good_pairs(&avail5, &good).unwrap();
        if good.is_empty() {
            assert_eq!(
                (branch, chosen),
                (SelectionBranch::NoGoodPair, Some(ActionId(0)))
            );
        }
        let (branch, chosen, _) = classify_good_pairs(&avail, &[]).unwrap();
        assert_eq!(
            (branch, chosen),
            (SelectionBranch::NoGoodPair, Some(ActionId(1)))
        );
    }

    #[test]
    fn missing_sample_is_internal_error() {
        let avail = actions(&[0, 1, 2, 3]);
        assert!(matches!(
            find_good_pairs(&avail, &BTreeMap::new()),
            Err(Error::Internal(_))
        ));
    }

    #[test]
    fn two_available_actions() {
        let mut bank = PairPairHedgeBank::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let round = RoundTrace::from_ids(1, &[3, 5], &[0.0, 0.0]).unwrap();
        let step = hopp_step(&mut bank, &round, &mut rng).unwrap();
        assert_eq!(step.selection.branch, SelectionBranch::CommonAction);
        assert_eq!(step.chosen, ActionId(3));
        let (pc, tc) = step
            .certificate
            .comparator_cost(&Ranking::random(6, &mut rng))
            .unwrap();
        assert_eq!((pc, tc), (0.0, 0.0));
    }

    #[test]
    fn rejects_wrong_zero_count() {
        let mut bank = PairPairHedgeBank::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let round = RoundTrace::from_ids(4, &[0, 1, 2], &[0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            hopp_step(&mut bank, &round, &mut rng),
            Err(Error::Precondition { round: 4, .. })
        ));
    }

    #[test]
    fn certificate_values() {
        let round = RoundTrace::from_ids(1, &[0, 1, 2, 3, 4], &[1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let cert = HoppCertificate {
            round,
            zero_pair: p(1, 3),
        };
        assert_eq!(cert.charged_pairs(), vec![p(0, 2), p(0, 4), p(2, 4)]);
        let m = Matchup::new(p(0, 2), p(1, 3)).unwrap();
        assert_eq!(cert.pair_loss(m, p(0, 2)), 1.0);
        assert_eq!(cert.pair_loss(m, p(1, 3)), 0.0);
        let other = Matchup::new(p(0, 1), p(2, 3)).unwrap();
        assert_eq!(cert.pair_loss(other, p(0, 1)), 0.0);
        let s = Triple::new(ActionId(1), ActionId(3), ActionId(4)).unwrap();
        assert_eq!(cert.triple_loss(s, ActionId(4)), 1.0);
        assert_eq!(cert.triple_loss(s, ActionId(1)), 0.0);
        let outside = Triple::new(ActionId(0), ActionId(1), ActionId(2)).unwrap();
        assert_eq!(cert.triple_loss(outside, ActionId(0)), 0.0);
        // σ ranks 0 first: it prefers every X containing 0 and every triple's non-zero member 0... only Z∪{0}.
        let sigma = Ranking::from_ids(&[0, 4, 2, 1, 3]).unwrap();
        assert_eq!(cert.comparator_cost(&sigma).unwrap(), (3.0, 3.0));
        let sigma = Ranking::from_ids(&[3, 0, 1, 2, 4]).unwrap();
        assert_eq!(cert.comparator_cost(&sigma).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn certificates_hold_and_updates_stay_in_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 8;
        let k = 6;
        let mut hopp = Hopp::new(1.0).unwrap();
        let (pc, tc) = comparator_cost_factors(k);
        for t in 1..=1500 {
            let size = rng.gen_range(2..=k);
            let mut ids = rand::seq::index::sample(&mut rng, n, size).into_vec();
            ids.sort();
            let zs = rand::seq::index::sample(&mut rng, size, 2).into_vec();
            let losses: Vec<f64> = (0..size)
                .map(|i| if zs.contains(&i) { 0.0 } else { 1.0 })
                .collect();
            let round = RoundTrace::from_ids(t, &ids, &losses).unwrap();
            let before = hopp.bank().clone();
            let step = hopp.step(&round, &mut rng).unwrap();
            let good = &step.selection.good_pairs;
            for (i, a) in good.iter().enumerate() {
                for b in &good[i + 1..] {
                    assert!(a.intersects(*b));
                }
            }
            if step.selection.branch == SelectionBranch::Triangle {
                assert_eq!(good.len(), 3);
                assert_eq!(Some(step.chosen), step.selection.triple_sample.map(|s| s.1));
            }
            let loss = round.loss_of(step.chosen).unwrap();
            assert!(loss <= step.certificate.learner_charge(&step.selection));
            for _ in 0..5 {
                let sigma = Ranking::random(n, &mut rng);
                let sl = round.comparator_loss(&sigma).unwrap();
                let (p_cost, t_cost) = step.certificate.comparator_cost(&sigma).unwrap();
                assert!(p_cost <= pc as f64 * sl);
                assert!(t_cost <= tc as f64 * sl);
            }
            let z = step.certificate.zero_pair;
            let in_rest =
                |x: Pair| !x.intersects(z) && round.contains(x.lo()) && round.contains(x.hi());
            for (m, h) in hopp.bank().pair_hedges() {
                let allowed = (m.x() == z && in_rest(m.y())) || (m.y() == z && in_rest(m.x()));
                let unchanged = match before.pair_hedge(*m) {
                    Some(old) => old == h,
                    None => h.log_weights().iter().all(|&w| w == 0.0),
                };
                assert!(
                    allowed || unchanged,
                    "matchup {m} changed outside the update support"
                );
            }
            for (s, h) in hopp.bank().triple_hedges() {
                let [z1, z2] = z.members();
                let allowed = s.contains(z1)
                    && s.contains(z2)
                    && s.members().iter().all(|&a| round.contains(a));
                let unchanged = match before.triple_hedge(*s) {
                    Some(old) => old == h,
                    None => h.log_weights().iter().all(|&w| w == 0.0),
                };
                assert!(
                    allowed || unchanged,
                    "triple {s} changed outside the update support"
                );
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(10, 4), 210);
        assert_eq!(binomial(2, 3), 0);
        assert_eq!(comparator_cost_factors(6), (6, 4));
        assert_eq!(comparator_cost_factors(2), (0, 0));
    }
}
