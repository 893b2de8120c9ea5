//! Chernoff-type failure bounds and the decay-law fit.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Law of one step of a lazy ±1 walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDistribution {
    p_plus: f64,
    p_minus: f64,
}

impl StepDistribution {
    /// Requires `0 <= p_minus < p_plus`, `p_plus + p_minus <= 1`.
    pub fn new(p_plus: f64, p_minus: f64) -> Result<Self> {
        let valid = (0.0..=1.0).contains(&p_plus)
            && (0.0..=1.0).contains(&p_minus)
            && p_plus + p_minus <= 1.0 + 1e-12
            && p_minus < p_plus;
        if valid {
            Ok(Self { p_plus, p_minus })
        } else {
            Err(Error::InvalidStepDistribution { p_plus, p_minus })
        }
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_zero(&self) -> f64 {
        (1.0 - self.p_plus - self.p_minus).max(0.0)
    }
}

/// `r = 1 - (√p₊ - √p₋)²`, so that `P(Y_1 + … + Y_m <= 0) <= r^m`.
pub fn chernoff_rate(d: &StepDistribution) -> f64 {
    let gap = d.p_plus.sqrt() - d.p_minus.sqrt();
    1.0 - gap * gap
}

/// Per-voter rates of the two failure modes of candidate 1 at `(n, l)`:
/// an isolated `A` candidate catching up with the head, and the `B` head
/// beating candidate 1 in the final.
pub fn per_round_rates(n: u32, l: u32) -> [f64; 2] {
    let n_f = f64::from(n);
    let first = (f64::from(l + 1).sqrt() - 2f64.sqrt()).powi(2);
    let last = (f64::from(n.saturating_sub(l)).sqrt() - f64::from(l).sqrt()).powi(2);
    [1.0 - first / n_f, 1.0 - last / n_f]
}

/// `min(1, (n-2)·r₁^m + r₂^m)` with the rates of [`per_round_rates`].
pub fn failure_upper_bound(n: u32, m: u32, l: u32) -> f64 {
    let [r1, r2] = per_round_rates(n, l);
    let m = f64::from(m);
    let bound = f64::from(n.saturating_sub(2)) * (m * r1.ln()).exp() + (m * r2.ln()).exp();
    bound.min(1.0)
}

/// The looser `min(1, (n-1)·max(r₁, r₂)^m)` form.
pub fn relaxed_failure_bound(n: u32, m: u32, l: u32) -> f64 {
    let [r1, r2] = per_round_rates(n, l);
    let bound = f64::from(n.saturating_sub(1)) * (f64::from(m) * r1.max(r2).ln()).exp();
    bound.min(1.0)
}

/// Least-squares slope of `log10 q` against `m`.
pub fn fit_decay_slope(rows: &[(u32, f64)]) -> Result<f64> {
    if rows.len() < 3 || rows.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::DegenerateFit);
    }
    let k = rows.len() as f64;
    let mean_m = rows.iter().map(|r| f64::from(r.0)).sum::<f64>() / k;
    let mean_y = rows.iter().map(|r| r.1).sum::<f64>() / k;
    let (sxy, sxx) = rows.iter().fold((0.0, 0.0), |(sxy, sxx), &(m, y)| {
        let dx = f64::from(m) - mean_m;
        (sxy + dx * (y - mean_y), sxx + dx * dx)
    });
    Ok(sxy / sxx)
}
