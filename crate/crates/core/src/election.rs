//! The discrete election: agendas, recruitment-cluster ballots and two-round
//! resolution.
//!
//! Candidates are `1..=n` arranged on a cycle. A voter with seed `s` ranks the
//! candidates `s, s+1, …, n, 1, …, s-1`, so inside any candidate subset the
//! voter supports the first member met when walking clockwise from `s`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Candidate = u32;

/// Default cap on `n^m` for the exhaustive oracles.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

/// The electorate: one seed per voter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedVector {
    n: u32,
    seeds: Vec<Candidate>,
}

impl SeedVector {
    pub fn new(n: u32, seeds: Vec<Candidate>) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::NoVoters);
        }
        if let Some(&seed) = seeds.iter().find(|&&s| s == 0 || s > n) {
            return Err(Error::SeedOutOfRange { n, seed });
        }
        Ok(Self { n, seeds })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn seeds(&self) -> &[Candidate] {
        &self.seeds
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Rotates every seed by `delta` positions: `s -> ((s - 1 + delta) mod n) + 1`.
    pub fn shifted(&self, delta: i64) -> SeedVector {
        let seeds = self.seeds.iter().map(|&s| rotate(self.n, s, delta)).collect();
        SeedVector { n: self.n, seeds }
    }
}

fn rotate(n: u32, candidate: Candidate, delta: i64) -> Candidate {
    let n = i64::from(n);
    ((i64::from(candidate) - 1 + delta).rem_euclid(n) + 1) as Candidate
}

/// Draws `m` seeds uniformly from `1..=n`.
pub fn sample_seeds<R: Rng + ?Sized>(n: u32, m: usize, rng: &mut R) -> Result<SeedVector> {
    if n == 0 {
        return Err(Error::InvalidCandidateCount(n));
    }
    let mut seeds = Vec::with_capacity(m);
    fill_seeds(n, m, rng, &mut seeds);
    SeedVector::new(n, seeds)
}

pub(crate) fn fill_seeds<R: Rng + ?Sized>(n: u32, m: usize, rng: &mut R, out: &mut Vec<Candidate>) {
    out.clear();
    out.extend((0..m).map(|_| rng.random_range(1..=n)));
}

/// Per-seed vote destination inside one candidate subset.
///
/// `target(s)` is the first member of the subset at or after `s` clockwise, so
/// the preimage of a member `i` is `C⁻(i) ∪ {i}`: the run of non-members
/// immediately before `i`, plus `i` itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallotMap {
    n: u32,
    members: Vec<Candidate>,
    // targets[s - 1], doubled so that rotated lookups need no modulo
    targets: Vec<Candidate>,
}

impl BallotMap {
    fn from_membership(in_set: &[bool]) -> Self {
        let n = in_set.len();
        let members: Vec<Candidate> = (1..=n as Candidate).filter(|&c| in_set[c as usize - 1]).collect();
        let mut targets = vec![0; 2 * n];
        // walk the doubled cycle backwards, remembering the nearest member ahead
        let mut next = 0;
        for k in (0..3 * n).rev() {
            let c = k % n;
            if in_set[c] {
                next = c as Candidate + 1;
            }
            if k < 2 * n {
                targets[k] = next;
            }
        }
        Self {
            n: n as u32,
            members,
            targets,
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Members of the subset in increasing order.
    pub fn members(&self) -> &[Candidate] {
        &self.members
    }

    /// The member receiving the vote of a voter with seed `s`.
    pub fn target(&self, seed: Candidate) -> Candidate {
        self.targets[seed as usize - 1]
    }

    /// Seeds whose vote goes to `candidate` (empty if not a member).
    pub fn preimage(&self, candidate: Candidate) -> Vec<Candidate> {
        (1..=self.n).filter(|&s| self.target(s) == candidate).collect()
    }

    #[inline]
    fn target_shifted(&self, seed: Candidate, back: u32) -> Candidate {
        // seed rotated by -back, with back < n
        self.targets[(seed - 1 + self.n - back) as usize]
    }
}

/// The agenda `(A, B)` for `n` candidates, cluster width `l` and rotation `i`.
///
/// For rotation 1, `A = {1..l} ∪ {l+2, l+4, …, n-l}` and `B` is the complement
/// `{l+1, l+3, …, n-l-1} ∪ {n-l+1..n}`; rotation `i` shifts every member by
/// `i - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    n: u32,
    width: u32,
    rotation: u32,
    in_a: Vec<bool>,
    ballot_a: BallotMap,
    ballot_b: BallotMap,
}

/// Inclusive range of admissible cluster widths for `n` candidates.
pub fn valid_widths(n: u32) -> (u32, u32) {
    (2, (n / 2).saturating_sub(1))
}

pub fn check_width(n: u32, l: u32) -> Result<()> {
    if n < 6 || !n.is_multiple_of(2) {
        return Err(Error::InvalidCandidateCount(n));
    }
    let (min, max) = valid_widths(n);
    if l < min || l > max {
        return Err(Error::DegeneratePartition { n, l, min, max });
    }
    Ok(())
}

impl Partition {
    pub fn build(n: u32, l: u32, rotation: u32) -> Result<Self> {
        check_width(n, l)?;
        if rotation == 0 || rotation > n {
            return Err(Error::InvalidRotation { n, rotation });
        }
        let mut in_a = vec![false; n as usize];
        let base = (1..=l).chain((1..=(n - 2 * l) / 2).map(|k| l + 2 * k));
        for a in base {
            let c = rotate(n, a, i64::from(rotation) - 1);
            in_a[c as usize - 1] = true;
        }
        let in_b: Vec<bool> = in_a.iter().map(|x| !x).collect();
        Ok(Self {
            n,
            width: l,
            rotation,
            ballot_a: BallotMap::from_membership(&in_a),
            ballot_b: BallotMap::from_membership(&in_b),
            in_a,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn rotation(&self) -> u32 {
        self.rotation
    }

    pub fn in_a(&self, candidate: Candidate) -> bool {
        self.in_a[candidate as usize - 1]
    }

    pub fn members_a(&self) -> &[Candidate] {
        self.ballot_a.members()
    }

    pub fn members_b(&self) -> &[Candidate] {
        self.ballot_b.members()
    }

    /// Head of `A`: the target candidate `i` itself.
    pub fn head_a(&self) -> Candidate {
        self.rotation
    }

    /// Head of `B`: candidate `l + 1` rotated by `i - 1`.
    pub fn head_b(&self) -> Candidate {
        rotate(self.n, self.width + 1, i64::from(self.rotation) - 1)
    }

    pub fn ballot_a(&self) -> &BallotMap {
        &self.ballot_a
    }

    pub fn ballot_b(&self) -> &BallotMap {
        &self.ballot_b
    }
}

/// Recruitment-cluster ballot maps of a partition, for `A` and for `B`.
pub fn recruitment_ballot_map(partition: &Partition) -> (BallotMap, BallotMap) {
    (partition.ballot_a.clone(), partition.ballot_b.clone())
}

/// Vote counts inside one candidate subset; every member is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteTally {
    pub counts: BTreeMap<Candidate, u32>,
}

impl VoteTally {
    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| u64::from(c)).sum()
    }

    pub fn get(&self, candidate: Candidate) -> u32 {
        self.counts.get(&candidate).copied().unwrap_or(0)
    }
}

pub fn tally(seeds: &SeedVector, map: &BallotMap) -> Result<VoteTally> {
    if seeds.n() != map.n() {
        return Err(Error::CandidateCountMismatch {
            map: map.n(),
            seeds: seeds.n(),
        });
    }
    let mut counts: BTreeMap<Candidate, u32> = map.members().iter().map(|&c| (c, 0)).collect();
    for &s in seeds.seeds() {
        *counts.entry(map.target(s)).or_insert(0) += 1;
    }
    Ok(VoteTally { counts })
}

/// The candidate with the strictly greatest count, or `None` on a tie.
pub fn unique_winner(tally: &VoteTally) -> Option<Candidate> {
    let mut best: Option<(Candidate, u32)> = None;
    let mut tied = false;
    for (&c, &k) in &tally.counts {
        match best {
            Some((_, top)) if k < top => {}
            Some((_, top)) if k == top => tied = true,
            _ => {
                best = Some((c, k));
                tied = false;
            }
        }
    }
    if tied {
        None
    } else {
        best.map(|(c, _)| c)
    }
}

/// Clockwise distance from a seed to a candidate.
#[inline]
fn distance(n: u32, seed: Candidate, candidate: Candidate) -> u32 {
    (candidate + n - seed) % n
}

/// Final round between two distinct candidates; `None` when the vote is split
/// evenly.
pub fn head_to_head(seeds: &SeedVector, first: Candidate, second: Candidate) -> Option<Candidate> {
    head_to_head_raw(seeds.n(), seeds.seeds(), first, second)
}

fn head_to_head_raw(n: u32, seeds: &[Candidate], first: Candidate, second: Candidate) -> Option<Candidate> {
    let for_first = seeds
        .iter()
        .filter(|&&s| distance(n, s, first) < distance(n, s, second))
        .count();
    let for_second = seeds.len() - for_first;
    match for_first.cmp(&for_second) {
        std::cmp::Ordering::Greater => Some(first),
        std::cmp::Ordering::Less => Some(second),
        std::cmp::Ordering::Equal => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TwoRoundOutcome {
    Winner(Candidate),
    VoidInA,
    VoidInB,
    VoidInFinal,
}

impl TwoRoundOutcome {
    pub fn is_win_for(self, candidate: Candidate) -> bool {
        self == TwoRoundOutcome::Winner(candidate)
    }

    pub fn is_void(self) -> bool {
        !matches!(self, TwoRoundOutcome::Winner(_))
    }
}

/// Scratch space for the allocation-free trial path.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    counts: Vec<u32>,
}

impl Scratch {
    pub(crate) fn new(n: u32) -> Self {
        Self {
            counts: vec![0; n as usize + 1],
        }
    }

    /// Plurality over `seeds` rotated back by `back`, through `map`.
    #[inline]
    fn plurality(&mut self, seeds: &[Candidate], map: &BallotMap, back: u32) -> Option<Candidate> {
        let counts = &mut self.counts;
        for &s in seeds {
            counts[map.target_shifted(s, back) as usize] += 1;
        }
        let mut best = 0;
        let mut best_count = 0;
        let mut tied = false;
        for &s in seeds {
            let c = map.target_shifted(s, back);
            let k = counts[c as usize];
            if k > best_count {
                best = c;
                best_count = k;
                tied = false;
            } else if k == best_count && c != best {
                tied = true;
            }
        }
        for &s in seeds {
            counts[map.target_shifted(s, back) as usize] = 0;
        }
        (!tied).then_some(best)
    }

    pub(crate) fn resolve(&mut self, seeds: &[Candidate], partition: &Partition, back: u32) -> TwoRoundOutcome {
        let Some(a) = self.plurality(seeds, &partition.ballot_a, back) else {
            return TwoRoundOutcome::VoidInA;
        };
        let Some(b) = self.plurality(seeds, &partition.ballot_b, back) else {
            return TwoRoundOutcome::VoidInB;
        };
        let n = partition.n;
        let for_a = seeds
            .iter()
            .filter(|&&s| {
                let s = rotate_back(n, s, back);
                distance(n, s, a) < distance(n, s, b)
            })
            .count();
        let for_b = seeds.len() - for_a;
        match for_a.cmp(&for_b) {
            std::cmp::Ordering::Greater => TwoRoundOutcome::Winner(a),
            std::cmp::Ordering::Less => TwoRoundOutcome::Winner(b),
            std::cmp::Ordering::Equal => TwoRoundOutcome::VoidInFinal,
        }
    }

    /// `resolve(..) == Winner(head)` with an early exit once the head is out.
    #[inline]
    pub(crate) fn head_wins(&mut self, seeds: &[Candidate], partition: &Partition, back: u32) -> bool {
        let head = partition.head_a();
        if self.plurality(seeds, &partition.ballot_a, back) != Some(head) {
            return false;
        }
        let Some(b) = self.plurality(seeds, &partition.ballot_b, back) else {
            return false;
        };
        let n = partition.n;
        let for_head = seeds
            .iter()
            .filter(|&&s| {
                let s = rotate_back(n, s, back);
                distance(n, s, head) < distance(n, s, b)
            })
            .count();
        2 * for_head > seeds.len()
    }

    /// Whether the rotation-`i` head wins under `A^(i)` for every `i`, using
    /// the rotation-1 partition and rotated seeds.
    pub(crate) fn universal(&mut self, seeds: &[Candidate], base: &Partition) -> bool {
        debug_assert_eq!(base.rotation, 1);
        (0..base.n).all(|back| self.head_wins(seeds, base, back))
    }
}

#[inline]
fn rotate_back(n: u32, seed: Candidate, back: u32) -> Candidate {
    (seed - 1 + n - back) % n + 1
}

fn check_same_n(seeds: &SeedVector, partition: &Partition) -> Result<()> {
    if seeds.n() != partition.n() {
        return Err(Error::CandidateCountMismatch {
            map: partition.n(),
            seeds: seeds.n(),
        });
    }
    Ok(())
}

/// Both first rounds, then the final between their winners. A tie at any stage
/// voids the election.
pub fn run_two_round(seeds: &SeedVector, partition: &Partition) -> Result<TwoRoundOutcome> {
    check_same_n(seeds, partition)?;
    Ok(Scratch::new(partition.n()).resolve(seeds.seeds(), partition, 0))
}

/// True iff every candidate `i` wins under its own rotated agenda `A^(i,n,l)`
/// with this one electorate.
pub fn universal_victory(seeds: &SeedVector, n: u32, l: u32) -> Result<bool> {
    let base = Partition::build(n, l, 1)?;
    check_same_n(seeds, &base)?;
    Ok(Scratch::new(n).universal(seeds.seeds(), &base))
}

/// Exact probability as a success count over an enumerated sample space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactProbability {
    pub favourable: u64,
    pub total: u64,
}

impl ExactProbability {
    pub fn value(&self) -> f64 {
        self.favourable as f64 / self.total as f64
    }
}

fn enumerate(
    n: u32,
    m: u32,
    l: u32,
    budget: u64,
    mut predicate: impl FnMut(&mut Scratch, &[Candidate], &Partition) -> bool,
) -> Result<ExactProbability> {
    if m == 0 {
        return Err(Error::NoVoters);
    }
    let partition = Partition::build(n, l, 1)?;
    let total = u64::from(n)
        .checked_pow(m)
        .filter(|&t| t <= budget)
        .ok_or(Error::EnumerationBudget { n, m, budget })?;
    let mut scratch = Scratch::new(n);
    let mut seeds = vec![1; m as usize];
    let mut favourable = 0;
    for _ in 0..total {
        if predicate(&mut scratch, &seeds, &partition) {
            favourable += 1;
        }
        // odometer increment over {1..n}^m
        for s in seeds.iter_mut() {
            if *s < n {
                *s += 1;
                break;
            }
            *s = 1;
        }
    }
    Ok(ExactProbability { favourable, total })
}

/// `P(candidate 1 wins under A^(1,n,l))` by enumerating all `n^m` electorates.
pub fn exact_p1_bruteforce(n: u32, m: u32, l: u32, budget: u64) -> Result<ExactProbability> {
    enumerate(n, m, l, budget, |scratch, seeds, partition| {
        scratch.resolve(seeds, partition, 0).is_win_for(1)
    })
}

/// Probability of the universal event by enumerating all `n^m` electorates.
pub fn exact_p2_bruteforce(n: u32, m: u32, l: u32, budget: u64) -> Result<ExactProbability> {
    enumerate(n, m, l, budget, |scratch, seeds, partition| {
        scratch.universal(seeds, partition)
    })
}
