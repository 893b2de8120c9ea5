//! The continuous limit of the election.
//!
//! With infinitely many candidates the seeds become i.i.d. uniforms on the
//! circle `[0, 1)` and the two recruitment clusters become the arcs
//! `(0, η)` and `(1 - η, 1)`. Writing `s` and `t` for the number of points in
//! those arcs, the target wins iff `s >= 2`, `t >= 2` and `s < m/2`, so
//!
//! ```text
//! p(m, η) = Σ_{s=2}^{⌊(m-1)/2⌋} Σ_{t=2}^{m-s} m! / (s! t! (m-s-t)!) · η^(s+t) · (1-2η)^(m-s-t)
//! ```
//!
//! The failure probability `q` is summed separately over the complement of
//! that region; it never goes through `1 - p`, which keeps its relative
//! accuracy when it is as small as `1e-48`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimator::{BinomialEstimate, DEFAULT_Z};
use crate::extended::Extended;
use crate::rng::{RngSpec, StreamFamily};
use crate::{Error, Result};

/// Digits used when extended precision is requested without a count.
pub const DEFAULT_DIGITS: u32 = 80;
/// Smallest digit count accepted for extended mode.
pub const MIN_EXTENDED_DIGITS: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousParams {
    m: u32,
    eta: f64,
}

impl ContinuousParams {
    pub fn new(m: u32, eta: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::NoVoters);
        }
        check_eta(eta)?;
        Ok(Self { m, eta })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidEta(eta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PrecisionConfig {
    #[default]
    Machine,
    Extended {
        digits: u32,
    },
}

impl PrecisionConfig {
    pub fn extended(digits: u32) -> Result<Self> {
        let config = PrecisionConfig::Extended { digits };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PrecisionConfig::Extended { digits } if digits < MIN_EXTENDED_DIGITS => {
                Err(Error::InsufficientPrecision(digits))
            }
            _ => Ok(()),
        }
    }
}

/// Victory probability and its independently summed complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinProbability {
    pub p: f64,
    pub q: f64,
    pub log10_q: f64,
}

#[inline]
fn in_victory_region(m: u32, s: u32, t: u32) -> bool {
    s >= 2 && t >= 2 && s <= (m - 1) / 2
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn log_factorials(m: u32) -> Vec<f64> {
    let mut table = Vec::with_capacity(m as usize + 1);
    let mut acc = CompensatedSum::default();
    table.push(0.0);
    for k in 1..=m {
        acc.add(f64::from(k).ln());
        table.push(acc.value());
    }
    table
}

fn p_q_machine(m: u32, eta: f64) -> (f64, f64) {
    let lf = log_factorials(m);
    let ln_a = eta.ln();
    let ln_c = (1.0 - 2.0 * eta).ln();
    let mut p = CompensatedSum::default();
    let mut q = CompensatedSum::default();
    for s in 0..=m {
        for t in 0..=m - s {
            let r = m - s - t;
            let log_term = lf[m as usize] - lf[s as usize] - lf[t as usize] - lf[r as usize]
                + f64::from(s + t) * ln_a
                + f64::from(r) * ln_c;
            let term = log_term.exp();
            if in_victory_region(m, s, t) {
                p.add(term);
            } else {
                q.add(term);
            }
        }
    }
    // per-term rounding can push a sum a few ulps past one
    (p.value().clamp(0.0, 1.0), q.value().clamp(0.0, 1.0))
}

/// Extended-precision evaluator for one `m`: the multinomial cells are walked
/// by exact ratio recurrences, which cannot under- or overflow at this
/// exponent range.
struct ExtendedEvaluator {
    ctx: Extended,
    m: u32,
    ints: Vec<astro_float::BigFloat>,
    inv: Vec<astro_float::BigFloat>,
}

impl ExtendedEvaluator {
    fn new(m: u32, digits: u32) -> Self {
        let ctx = Extended::with_digits(digits);
        let one = ctx.int(1);
        let ints: Vec<_> = (0..=u64::from(m) + 1).map(|k| ctx.int(k)).collect();
        let inv = ints
            .iter()
            .map(|k| if k.is_zero() { ctx.zero() } else { ctx.div(&one, k) })
            .collect();
        Self { ctx, m, ints, inv }
    }

    fn eval(&mut self, eta: f64) -> WinProbability {
        let ctx = &self.ctx;
        let m = self.m;
        let a = ctx.float(eta);
        let c = ctx.sub(&ctx.int(1), &ctx.mul(&ctx.int(2), &a));
        let ratio = ctx.div(&a, &c);
        // step[k] = (η / (1 - 2η)) / (k + 1)
        let step: Vec<_> = (0..=m as usize).map(|k| ctx.mul(&ratio, &self.inv[k + 1])).collect();
        let mut p = ctx.zero();
        let mut q = ctx.zero();
        // cell (s, 0)
        let mut anchor = ctx.powi(&c, m as usize);
        for s in 0..=m {
            let mut term = anchor.clone();
            for t in 0..=m - s {
                if in_victory_region(m, s, t) {
                    p = ctx.add(&p, &term);
                } else {
                    q = ctx.add(&q, &term);
                }
                let r = m - s - t;
                if r > 0 {
                    term = ctx.mul(&ctx.mul(&term, &self.ints[r as usize]), &step[t as usize]);
                }
            }
            if s < m {
                anchor = ctx.mul(&ctx.mul(&anchor, &self.ints[(m - s) as usize]), &step[s as usize]);
            }
        }
        let log10_q = if q.is_zero() {
            f64::NEG_INFINITY
        } else {
            let l = self.ctx.log10(&q);
            self.ctx.lower(&l)
        };
        WinProbability {
            p: self.ctx.lower(&p),
            q: self.ctx.lower(&q),
            log10_q,
        }
    }
}

/// A reusable evaluator of `p(m, ·)` at a fixed precision.
enum Evaluator {
    Machine(u32),
    Extended(Box<ExtendedEvaluator>),
}

impl Evaluator {
    fn new(m: u32, precision: PrecisionConfig) -> Result<Self> {
        precision.validate()?;
        if m == 0 {
            return Err(Error::NoVoters);
        }
        Ok(match precision {
            PrecisionConfig::Machine => Evaluator::Machine(m),
            PrecisionConfig::Extended { digits } => Evaluator::Extended(Box::new(ExtendedEvaluator::new(m, digits))),
        })
    }

    fn eval(&mut self, eta: f64) -> WinProbability {
        match self {
            Evaluator::Machine(m) => {
                let (p, q) = p_q_machine(*m, eta);
                WinProbability {
                    p,
                    q,
                    log10_q: q.log10(),
                }
            }
            Evaluator::Extended(ext) => ext.eval(eta),
        }
    }
}

/// Probability that the target wins in the continuous limit.
pub fn p_win_continuous(params: ContinuousParams, precision: PrecisionConfig) -> Result<WinProbability> {
    Ok(Evaluator::new(params.m, precision)?.eval(params.eta))
}

/// Scan grid for the width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for EtaGrid {
    /// `[0.1, 0.45]` in steps of `0.0007`.
    fn default() -> Self {
        Self {
            start: 0.1,
            end: 0.45,
            step: 0.0007,
        }
    }
}

impl EtaGrid {
    pub fn validate(&self) -> Result<()> {
        let ok =
            self.start > 0.0 && self.start < self.end && self.end < 0.5 && self.step > 0.0 && self.step.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGrid {
                start: self.start,
                end: self.end,
                step: self.step,
            })
        }
    }

    /// Grid points `start + k·step` up to `end` (inclusive, within rounding).
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaOptimum {
    pub m: u32,
    pub eta_star: f64,
    pub p: f64,
    pub q: f64,
    pub log10_q: f64,
}

/// Width of the refinement bracket at which golden-section search stops.
pub const REFINE_TOLERANCE: f64 = 1e-6;

/// Maximizes `p(m, η)` over the grid, then refines by golden-section search.
///
/// Every comparison is made on the complement `q`, which carries the full
/// relative accuracy once `p` rounds to one. The grid pass runs in machine
/// precision; the refinement and the reported values use `precision`. Grid
/// ties go to the smaller width.
pub fn optimize_eta_win(m: u32, grid: EtaGrid, precision: PrecisionConfig) -> Result<EtaOptimum> {
    grid.validate()?;
    let mut refine = Evaluator::new(m, precision)?;
    let points = grid.points();
    let values: Vec<(f64, f64)> = points.par_iter().map(|&eta| p_q_machine(m, eta)).collect();
    if values.iter().all(|&(p, _)| p <= 0.0) {
        return Err(Error::NoFeasibleVictory(m));
    }
    let mut best = 0;
    for (i, &(_, q)) in values.iter().enumerate() {
        if q < values[best].1 {
            best = i;
        }
    }

    let mut lo = points[best.saturating_sub(1)];
    let mut hi = points[(best + 1).min(points.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = refine.eval(x1).q;
    let mut f2 = refine.eval(x2).q;
    while hi - lo > REFINE_TOLERANCE {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = refine.eval(x1).q;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = refine.eval(x2).q;
        }
    }
    let eta_star = 0.5 * (lo + hi);
    let at_star = refine.eval(eta_star);
    Ok(EtaOptimum {
        m,
        eta_star,
        p: at_star.p,
        q: at_star.q,
        log10_q: at_star.log10_q,
    })
}

/// One optimized row per voter count.
pub fn decay_table(m_list: &[u32], grid: EtaGrid, precision: PrecisionConfig) -> Result<Vec<EtaOptimum>> {
    m_list.iter().map(|&m| optimize_eta_win(m, grid, precision)).collect()
}

/// Points on the circle, in draw order and sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformSample {
    points: Vec<f64>,
    sorted: Vec<f64>,
}

impl UniformSample {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::NoVoters);
        }
        if let Some(&x) = points.iter().find(|x| !(0.0..1.0).contains(*x)) {
            return Err(Error::PointOutOfRange(x));
        }
        let mut sorted = points.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { points, sorted })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn sample_uniform_points<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<UniformSample> {
    UniformSample::new((0..m).map(|_| rng.random::<f64>()).collect())
}

/// First index in `sorted` with value `>= x`, treating `sorted` as followed by
/// its copy shifted up by one turn.
#[inline]
fn lower_bound_wrapped(sorted: &[f64], x: f64) -> usize {
    let m = sorted.len();
    if x < 1.0 {
        sorted.partition_point(|&y| y < x)
    } else {
        m + sorted.partition_point(|&y| y + 1.0 < x)
    }
}

#[inline]
fn upper_bound_wrapped(sorted: &[f64], x: f64) -> usize {
    let m = sorted.len();
    if x < 1.0 {
        sorted.partition_point(|&y| y <= x)
    } else {
        m + sorted.partition_point(|&y| y + 1.0 <= x)
    }
}

fn universal_sorted(sorted: &[f64], eta: f64) -> bool {
    let m = sorted.len();
    sorted.iter().all(|&u| {
        let end = lower_bound_wrapped(sorted, u + eta);
        let open = end - upper_bound_wrapped(sorted, u);
        let half_closed = end - lower_bound_wrapped(sorted, u);
        open >= 2 && 2 * half_closed < m
    })
}

/// Exact check of the continuous universal event.
///
/// The event holds iff, over all anchors `U_j`, the open arc `(U_j, U_j + η)`
/// always holds at least two points and the half-open arc `[U_j, U_j + η)`
/// always holds fewer than `m/2`.
pub fn universal_event_continuous(sample: &UniformSample, eta: f64) -> Result<bool> {
    check_eta(eta)?;
    Ok(universal_sorted(&sample.sorted, eta))
}

fn fill_sorted_uniforms<R: Rng + ?Sized>(m: usize, rng: &mut R, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..m).map(|_| rng.random::<f64>()));
    out.sort_by(f64::total_cmp);
}

fn count_eta_grid(m: u32, etas: &[f64], trials: u64, rng: &RngSpec, family: StreamFamily) -> Vec<u64> {
    (0..trials)
        .into_par_iter()
        .fold(
            || (Vec::with_capacity(m as usize), vec![0u64; etas.len()]),
            |(mut points, mut counts), t| {
                let mut stream = rng.stream(family, t);
                fill_sorted_uniforms(m as usize, &mut stream, &mut points);
                for (count, &eta) in counts.iter_mut().zip(etas) {
                    if universal_sorted(&points, eta) {
                        *count += 1;
                    }
                }
                (points, counts)
            },
        )
        .map(|(_, counts)| counts)
        .reduce(
            || vec![0u64; etas.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Monte Carlo estimate of the continuous universal event.
pub fn estimate_p2_continuous(m: u32, eta: f64, trials: u64, rng: &RngSpec) -> Result<BinomialEstimate> {
    ContinuousParams::new(m, eta)?;
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let counts = count_eta_grid(m, &[eta], trials, rng, StreamFamily::Scan);
    BinomialEstimate::from_counts(counts[0], trials, DEFAULT_Z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalOptimum {
    pub m: u32,
    pub eta_star: f64,
    /// Estimate at `eta_star` from the scan electorates.
    pub scan_estimate: BinomialEstimate,
    /// Estimate at `eta_star` from fresh electorates.
    pub validated: BinomialEstimate,
    pub scan: Vec<(f64, BinomialEstimate)>,
}

/// Grid scan of the continuous universal event with the same samples reused
/// at every width, followed by a validation run at the best width.
pub fn optimize_eta_universal(
    m: u32,
    grid: EtaGrid,
    scan_trials: u64,
    validation_trials: u64,
    rng: &RngSpec,
) -> Result<UniversalOptimum> {
    grid.validate()?;
    if m == 0 {
        return Err(Error::NoVoters);
    }
    if scan_trials == 0 || validation_trials == 0 {
        return Err(Error::NoTrials);
    }
    let etas = grid.points();
    let counts = count_eta_grid(m, &etas, scan_trials, rng, StreamFamily::Scan);
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    let eta_star = etas[best];
    let scan = etas
        .iter()
        .zip(&counts)
        .map(|(&eta, &c)| Ok((eta, BinomialEstimate::from_counts(c, scan_trials, DEFAULT_Z)?)))
        .collect::<Result<Vec<_>>>()?;
    let validated = count_eta_grid(m, &[eta_star], validation_trials, rng, StreamFamily::Validation)[0];
    Ok(UniversalOptimum {
        m,
        eta_star,
        scan_estimate: scan[best].1,
        validated: BinomialEstimate::from_counts(validated, validation_trials, DEFAULT_Z)?,
        scan,
    })
}
