//! Reproducible Monte Carlo estimation for the discrete model.
//!
//! Trial `t` always draws its electorate from stream `t` of the scan family,
//! whatever the width `l` under test: every width sees the same electorates
//! (common random numbers), and the integer success counts make the result
//! independent of how rayon splits the work.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::election::{check_width, fill_seeds, valid_widths, Candidate, Partition, Scratch};
use crate::rng::{RngSpec, StreamFamily};
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const DEFAULT_Z: f64 = 1.96;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(Error::InvalidCounts { successes, trials });
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidZ(z));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // pin the degenerate ends exactly and keep lower <= p <= upper under rounding
    let lower = if successes == 0 {
        0.0
    } else {
        (center - half).clamp(0.0, p)
    };
    let upper = if successes == trials {
        1.0
    } else {
        (center + half).clamp(p, 1.0)
    };
    Ok((lower, upper))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialEstimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub wilson_lower: f64,
    pub wilson_upper: f64,
    pub z: f64,
}

impl BinomialEstimate {
    pub fn from_counts(successes: u64, trials: u64, z: f64) -> Result<Self> {
        let (wilson_lower, wilson_upper) = wilson_interval(successes, trials, z)?;
        Ok(Self {
            successes,
            trials,
            p_hat: successes as f64 / trials as f64,
            wilson_lower,
            wilson_upper,
            z,
        })
    }

    /// Plain binomial standard error `sqrt(p(1-p)/N)`.
    pub fn standard_error(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.trials as f64).sqrt()
    }

    pub fn contains(&self, p: f64) -> bool {
        self.wilson_lower <= p && p <= self.wilson_upper
    }
}

/// Which victory the estimator counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VictoryEvent {
    /// Candidate 1 wins under `A^(1,n,l)`.
    #[default]
    Individual,
    /// Every candidate wins under its own rotated agenda.
    Universal,
}

impl VictoryEvent {
    fn holds(self, scratch: &mut Scratch, seeds: &[Candidate], partition: &Partition) -> bool {
        match self {
            VictoryEvent::Individual => scratch.head_wins(seeds, partition, 0),
            VictoryEvent::Universal => scratch.universal(seeds, partition),
        }
    }
}

/// Success counts for every width in `widths`, sharing trial electorates.
fn count_widths(
    event: VictoryEvent,
    n: u32,
    m: u32,
    widths: &[u32],
    trials: u64,
    rng: &RngSpec,
    family: StreamFamily,
) -> Result<Vec<u64>> {
    let partitions = widths
        .iter()
        .map(|&l| Partition::build(n, l, 1))
        .collect::<Result<Vec<_>>>()?;
    let counts = (0..trials)
        .into_par_iter()
        .fold(
            || {
                (
                    Scratch::new(n),
                    Vec::with_capacity(m as usize),
                    vec![0u64; widths.len()],
                )
            },
            |(mut scratch, mut seeds, mut counts), t| {
                let mut stream = rng.stream(family, t);
                fill_seeds(n, m as usize, &mut stream, &mut seeds);
                for (count, partition) in counts.iter_mut().zip(&partitions) {
                    if event.holds(&mut scratch, &seeds, partition) {
                        *count += 1;
                    }
                }
                (scratch, seeds, counts)
            },
        )
        .map(|(_, _, counts)| counts)
        .reduce(
            || vec![0u64; widths.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts)
}

fn check_trials(m: u32, trials: u64) -> Result<()> {
    if m == 0 {
        return Err(Error::NoVoters);
    }
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    Ok(())
}

/// Monte Carlo estimate of `event` at `(n, m, l)` from the scan stream family.
pub fn estimate_discrete(
    event: VictoryEvent,
    n: u32,
    m: u32,
    l: u32,
    trials: u64,
    rng: &RngSpec,
    z: f64,
) -> Result<BinomialEstimate> {
    check_width(n, l)?;
    check_trials(m, trials)?;
    let counts = count_widths(event, n, m, &[l], trials, rng, StreamFamily::Scan)?;
    BinomialEstimate::from_counts(counts[0], trials, z)
}

/// Estimates at several widths from the same electorates (common random
/// numbers): trial `t` uses scan stream `t` for every width.
pub fn scan_widths(
    event: VictoryEvent,
    n: u32,
    m: u32,
    widths: &[u32],
    trials: u64,
    rng: &RngSpec,
    z: f64,
) -> Result<Vec<BinomialEstimate>> {
    check_trials(m, trials)?;
    count_widths(event, n, m, widths, trials, rng, StreamFamily::Scan)?
        .into_iter()
        .map(|c| BinomialEstimate::from_counts(c, trials, z))
        .collect()
}

pub fn estimate_p1_discrete(n: u32, m: u32, l: u32, trials: u64, rng: &RngSpec) -> Result<BinomialEstimate> {
    estimate_discrete(VictoryEvent::Individual, n, m, l, trials, rng, DEFAULT_Z)
}

pub fn estimate_p2_discrete(n: u32, m: u32, l: u32, trials: u64, rng: &RngSpec) -> Result<BinomialEstimate> {
    estimate_discrete(VictoryEvent::Universal, n, m, l, trials, rng, DEFAULT_Z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentroidConfig {
    pub event: VictoryEvent,
    /// Defaults to 2.
    pub l_min: Option<u32>,
    /// Defaults to `n/2 - 1`.
    pub l_max: Option<u32>,
    pub scan_trials: u64,
    pub validation_trials: u64,
    pub z: f64,
}

impl Default for CentroidConfig {
    fn default() -> Self {
        Self {
            event: VictoryEvent::Individual,
            l_min: None,
            l_max: None,
            scan_trials: 10_000,
            validation_trials: 100_000,
            z: DEFAULT_Z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub l: u32,
    pub estimate: BinomialEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauResult {
    pub l_opt: u32,
    pub l_left: u32,
    pub l_right: u32,
    /// Width with the largest scanned estimate (smallest such width on ties).
    pub l_max_scan: u32,
    /// Lower Wilson bound of the best scanned estimate: the plateau threshold.
    pub threshold: f64,
    pub p_validated: BinomialEstimate,
    /// Every evaluated width, in increasing order.
    pub scan: Vec<ScanPoint>,
}

/// Widths scanned before densification: every width for `n <= 200`, otherwise
/// a stride of `ceil((l_max - l_min) / 512)`.
pub fn coarse_grid(n: u32, l_min: u32, l_max: u32) -> Vec<u32> {
    let stride = if n <= 200 {
        1
    } else {
        (l_max - l_min).div_ceil(512).max(1)
    };
    let mut grid: Vec<u32> = (l_min..=l_max).step_by(stride as usize).collect();
    if grid.last() != Some(&l_max) {
        grid.push(l_max);
    }
    grid
}

/// Round-half-to-even midpoint of two integers.
pub fn centroid(left: u32, right: u32) -> u32 {
    let sum = u64::from(left) + u64::from(right);
    let half = (sum / 2) as u32;
    if sum % 2 == 0 || half.is_multiple_of(2) {
        half
    } else {
        half + 1
    }
}

struct Plateau {
    best: usize,
    threshold: f64,
    left: usize,
    right: usize,
}

fn locate_plateau(points: &[(u32, BinomialEstimate)]) -> Plateau {
    let mut best = 0;
    for (i, (_, e)) in points.iter().enumerate() {
        if e.p_hat > points[best].1.p_hat {
            best = i;
        }
    }
    let threshold = points[best].1.wilson_lower;
    let inside = |i: usize| points[i].1.p_hat >= threshold;
    let mut left = best;
    while left > 0 && inside(left - 1) {
        left -= 1;
    }
    let mut right = best;
    while right + 1 < points.len() && inside(right + 1) {
        right += 1;
    }
    Plateau {
        best,
        threshold,
        left,
        right,
    }
}

/// Plateau-centroid optimization of the cluster width.
///
/// Scans the estimate over the width range with shared electorates, keeps the
/// maximal contiguous run around the best width whose estimates reach the
/// best width's lower Wilson bound, and returns its rounded midpoint together
/// with an estimate from a fresh set of electorates.
pub fn wilson_centroid_optimize(n: u32, m: u32, config: &CentroidConfig, rng: &RngSpec) -> Result<PlateauResult> {
    let (default_min, default_max) = valid_widths(n);
    let l_min = config.l_min.unwrap_or(default_min);
    let l_max = config.l_max.unwrap_or(default_max);
    if l_min > l_max {
        return Err(Error::EmptyRange { l_min, l_max });
    }
    check_width(n, l_min)?;
    check_width(n, l_max)?;
    check_trials(m, config.scan_trials)?;
    check_trials(m, config.validation_trials)?;

    let grid = coarse_grid(n, l_min, l_max);
    let stride = grid.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(1);
    let mut evaluated: BTreeMap<u32, BinomialEstimate> = BTreeMap::new();
    let mut pending = grid;
    let mut first = true;
    loop {
        let counts = count_widths(
            config.event,
            n,
            m,
            &pending,
            config.scan_trials,
            rng,
            StreamFamily::Scan,
        )?;
        for (&l, c) in pending.iter().zip(counts) {
            evaluated.insert(l, BinomialEstimate::from_counts(c, config.scan_trials, config.z)?);
        }
        let points: Vec<(u32, BinomialEstimate)> = evaluated.iter().map(|(&l, &e)| (l, e)).collect();
        let plateau = locate_plateau(&points);

        // densify: fill gaps next to both plateau edges, and around the best
        // width on the first pass
        let mut wanted = Vec::new();
        if plateau.left > 0 {
            wanted.extend(points[plateau.left - 1].0 + 1..points[plateau.left].0);
        }
        if plateau.right + 1 < points.len() {
            wanted.extend(points[plateau.right].0 + 1..points[plateau.right + 1].0);
        }
        if first && stride > 1 {
            let best = points[plateau.best].0;
            wanted.extend(best.saturating_sub(stride).max(l_min)..=(best + stride).min(l_max));
        }
        first = false;
        wanted.sort_unstable();
        wanted.dedup();
        wanted.retain(|l| !evaluated.contains_key(l));
        if wanted.is_empty() {
            let l_left = points[plateau.left].0;
            let l_right = points[plateau.right].0;
            let l_opt = centroid(l_left, l_right);
            let validation = count_widths(
                config.event,
                n,
                m,
                &[l_opt],
                config.validation_trials,
                rng,
                StreamFamily::Validation,
            )?;
            return Ok(PlateauResult {
                l_opt,
                l_left,
                l_right,
                l_max_scan: points[plateau.best].0,
                threshold: plateau.threshold,
                p_validated: BinomialEstimate::from_counts(validation[0], config.validation_trials, config.z)?,
                scan: points
                    .into_iter()
                    .map(|(l, estimate)| ScanPoint { l, estimate })
                    .collect(),
            });
        }
        pending = wanted;
    }
}
