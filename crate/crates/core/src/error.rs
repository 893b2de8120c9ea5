use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("candidate count n = {0} must be even and at least 6")]
    InvalidCandidateCount(u32),
    #[error("cluster width l = {l} is degenerate for n = {n}: l must lie in {min}..{max} (inclusive)")]
    DegeneratePartition { n: u32, l: u32, min: u32, max: u32 },
    #[error("rotation index {rotation} outside 1..{n}")]
    InvalidRotation { n: u32, rotation: u32 },
    #[error("seed {seed} outside 1..{n}")]
    SeedOutOfRange { n: u32, seed: u32 },
    #[error("voter count must be at least 1")]
    NoVoters,
    #[error("ballot map and seed vector disagree on n ({map} vs {seeds})")]
    CandidateCountMismatch { map: u32, seeds: u32 },
    #[error("enumeration of {n}^{m} seed vectors exceeds the budget of {budget}")]
    EnumerationBudget { n: u32, m: u32, budget: u64 },
    #[error("invalid binomial counts: {successes} successes out of {trials} trials")]
    InvalidCounts { successes: u64, trials: u64 },
    #[error("z must be positive and finite, got {0}")]
    InvalidZ(f64),
    #[error("width eta = {0} must lie strictly inside (0, 0.5)")]
    InvalidEta(f64),
    #[error("point {0} outside [0, 1)")]
    PointOutOfRange(f64),
    #[error("extended precision needs at least 60 digits, got {0}")]
    InsufficientPrecision(u32),
    #[error("invalid eta grid [{start}, {end}] with step {step}")]
    InvalidGrid { start: f64, end: f64, step: f64 },
    #[error("no feasible victory: p = 0 on the whole grid for m = {0}")]
    NoFeasibleVictory(u32),
    #[error(
        "step distribution needs p_minus < p_plus and valid probabilities (p_plus = {p_plus}, p_minus = {p_minus})"
    )]
    InvalidStepDistribution { p_plus: f64, p_minus: f64 },
    #[error("decay fit needs at least 3 rows with strictly increasing m")]
    DegenerateFit,
    #[error("empty width range {l_min}..{l_max}")]
    EmptyRange { l_min: u32, l_max: u32 },
    #[error("trial count must be at least 1")]
    NoTrials,
}

pub type Result<T> = std::result::Result<T, Error>;
