//! Subcommand parameters and their execution.
//!
//! Each parameter struct is both a clap argument group and the serialized
//! parameter block of an output record, so a record can be fed back in.

use agenda_core::bounds::{failure_upper_bound, fit_decay_slope, per_round_rates, relaxed_failure_bound};
use agenda_core::continuum::{
    decay_table, estimate_p2_continuous, optimize_eta_universal, optimize_eta_win, p_win_continuous, ContinuousParams,
    EtaGrid, PrecisionConfig,
};
use agenda_core::election::check_width;
use agenda_core::estimator::{
    estimate_discrete, wilson_centroid_optimize, BinomialEstimate, CentroidConfig, VictoryEvent, DEFAULT_Z,
};
use agenda_core::rng::RngSpec;
use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Monte Carlo estimate of the individual or universal victory probability.
    DiscreteSim(DiscreteSim),
    /// Optimal cluster width by the Wilson centroid method.
    DiscreteOptimize(DiscreteOptimize),
    /// Exact victory probability in the continuous limit.
    ContinuousEval(ContinuousEval),
    /// Width maximizing the continuous victory probability.
    ContinuousOptimize(ContinuousOptimize),
    /// Optimal width and failure probability for several electorate sizes.
    DecayTable(DecayTable),
    /// Monte Carlo estimate (or optimization) of the continuous universal event.
    ContinuousUniversal(ContinuousUniversal),
    /// Chernoff bounds on the failure probability.
    Bounds(Bounds),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DiscreteSim {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub l: u32,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Master seed; drawn at random and recorded when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Estimate the universal event instead of the individual one.
    #[arg(long)]
    #[serde(default)]
    pub universal: bool,
    #[arg(long, default_value_t = DEFAULT_Z)]
    pub z: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DiscreteOptimize {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    #[serde(default)]
    pub l_min: Option<u32>,
    #[arg(long)]
    #[serde(default)]
    pub l_max: Option<u32>,
    #[arg(long, default_value_t = 10_000)]
    pub scan_trials: u64,
    #[arg(long, default_value_t = 100_000)]
    pub validation_trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(default)]
    pub universal: bool,
    #[arg(long, default_value_t = DEFAULT_Z)]
    pub z: f64,
    /// Include every scanned width in the output.
    #[arg(long)]
    #[serde(default)]
    pub scan: bool,
}

#[derive(Debug, Clone, Copy, Args, Serialize, Deserialize)]
pub struct Grid {
    #[arg(long, default_value_t = EtaGrid::default().start)]
    pub grid_start: f64,
    #[arg(long, default_value_t = EtaGrid::default().end)]
    pub grid_end: f64,
    #[arg(long, default_value_t = EtaGrid::default().step)]
    pub grid_step: f64,
}

impl Grid {
    fn eta_grid(&self) -> EtaGrid {
        EtaGrid {
            start: self.grid_start,
            end: self.grid_end,
            step: self.grid_step,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ContinuousEval {
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub eta: f64,
    /// Decimal digits of extended precision; machine precision when omitted.
    #[arg(long)]
    #[serde(default)]
    pub precision: Option<u32>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ContinuousOptimize {
    #[arg(long)]
    pub m: u32,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: Grid,
    #[arg(long)]
    #[serde(default)]
    pub precision: Option<u32>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DecayTable {
    /// Comma-separated electorate sizes.
    #[arg(long = "m", value_delimiter = ',', required = true)]
    pub m_values: Vec<u32>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: Grid,
    #[arg(long)]
    #[serde(default)]
    pub precision: Option<u32>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ContinuousUniversal {
    #[arg(long)]
    pub m: u32,
    /// Width to evaluate; the grid is searched when omitted.
    #[arg(long)]
    #[serde(default)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Fresh trials for the estimate at the best width when searching.
    #[arg(long, default_value_t = 100_000)]
    pub validation_trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: Grid,
    #[arg(long)]
    #[serde(default)]
    pub scan: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Bounds {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub l: u32,
}

/// Invalid parameters, as opposed to I/O trouble.
#[derive(Debug)]
pub struct UsageError(pub String);

impl From<agenda_core::Error> for UsageError {
    fn from(e: agenda_core::Error) -> Self {
        UsageError(e.to_string())
    }
}

type Outcome = Result<Map<String, Value>, UsageError>;

fn auto_seed() -> u64 {
    use std::hash::{BuildHasher, Hasher};
    let mut h = std::collections::hash_map::RandomState::new().build_hasher();
    h.write_u128(
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos()),
    );
    // stays exact in any JSON reader
    h.finish() & ((1 << 53) - 1)
}

fn precision(digits: Option<u32>) -> Result<PrecisionConfig, UsageError> {
    Ok(match digits {
        None => PrecisionConfig::Machine,
        Some(d) => PrecisionConfig::extended(d)?,
    })
}

fn event(universal: bool) -> VictoryEvent {
    if universal {
        VictoryEvent::Universal
    } else {
        VictoryEvent::Individual
    }
}

fn estimate_fields(e: &BinomialEstimate) -> Map<String, Value> {
    object(json!({
        "successes": e.successes,
        "p_hat": e.p_hat,
        "wilson_lower": e.wilson_lower,
        "wilson_upper": e.wilson_upper,
    }))
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(map) => map,
        _ => Map::new(),
    }
}

fn warn_even(m: u32) {
    if m > 0 && m.is_multiple_of(2) {
        eprintln!("warning: m = {m} is even; ties are structurally more likely");
    }
}

impl Command {
    /// Fills in any seed left to chance, so the record is reproducible.
    pub fn resolve_seed(&mut self) {
        let seed = match self {
            Command::DiscreteSim(a) => &mut a.seed,
            Command::DiscreteOptimize(a) => &mut a.seed,
            Command::ContinuousUniversal(a) => &mut a.seed,
            _ => return,
        };
        seed.get_or_insert_with(auto_seed);
    }

    pub fn run(&self) -> Outcome {
        match self {
            Command::DiscreteSim(a) => a.run(),
            Command::DiscreteOptimize(a) => a.run(),
            Command::ContinuousEval(a) => a.run(),
            Command::ContinuousOptimize(a) => a.run(),
            Command::DecayTable(a) => a.run(),
            Command::ContinuousUniversal(a) => a.run(),
            Command::Bounds(a) => a.run(),
        }
    }
}

impl DiscreteSim {
    fn run(&self) -> Outcome {
        check_width(self.n, self.l)?;
        warn_even(self.m);
        let rng = RngSpec::new(self.seed.unwrap_or_default());
        let e = estimate_discrete(event(self.universal), self.n, self.m, self.l, self.trials, &rng, self.z)?;
        Ok(estimate_fields(&e))
    }
}

impl DiscreteOptimize {
    fn run(&self) -> Outcome {
        warn_even(self.m);
        let config = CentroidConfig {
            event: event(self.universal),
            l_min: self.l_min,
            l_max: self.l_max,
            scan_trials: self.scan_trials,
            validation_trials: self.validation_trials,
            z: self.z,
        };
        let r = wilson_centroid_optimize(self.n, self.m, &config, &RngSpec::new(self.seed.unwrap_or_default()))?;
        let mut out = object(json!({
            "l_opt": r.l_opt,
            "l_left": r.l_left,
            "l_right": r.l_right,
            "l_max_scan": r.l_max_scan,
            "threshold": r.threshold,
        }));
        out.extend(estimate_fields(&r.p_validated));
        if self.scan {
            let rows = r
                .scan
                .iter()
                .map(|p| {
                    let mut row = object(json!({ "scan_l": p.l }));
                    row.extend(
                        estimate_fields(&p.estimate)
                            .into_iter()
                            .map(|(k, v)| (format!("scan_{k}"), v)),
                    );
                    Value::Object(row)
                })
                .collect();
            out.insert("scan_points".into(), Value::Array(rows));
        }
        Ok(out)
    }
}

impl ContinuousEval {
    fn run(&self) -> Outcome {
        warn_even(self.m);
        let w = p_win_continuous(ContinuousParams::new(self.m, self.eta)?, precision(self.precision)?)?;
        Ok(object(json!({ "p": w.p, "q": w.q, "log10_q": w.log10_q })))
    }
}

impl ContinuousOptimize {
    fn run(&self) -> Outcome {
        warn_even(self.m);
        let o = optimize_eta_win(self.m, self.grid.eta_grid(), precision(self.precision)?)?;
        Ok(object(
            json!({ "eta_star": o.eta_star, "p": o.p, "q": o.q, "log10_q": o.log10_q }),
        ))
    }
}

impl DecayTable {
    fn run(&self) -> Outcome {
        if let Some(&m) = self.m_values.iter().find(|&&m| m < 5) {
            return Err(UsageError(format!("every m must be at least 5, got {m}")));
        }
        let rows = decay_table(&self.m_values, self.grid.eta_grid(), precision(self.precision)?)?;
        let mut sorted: Vec<(u32, f64)> = rows.iter().map(|r| (r.m, r.log10_q)).collect();
        sorted.sort_by_key(|r| r.0);
        let slope = fit_decay_slope(&sorted).ok();
        let table: Vec<Value> = rows
            .iter()
            .map(|r| json!({ "row_m": r.m, "eta_star": r.eta_star, "p": r.p, "q": r.q, "log10_q": r.log10_q }))
            .collect();
        Ok(object(json!({ "slope": slope, "rows": table })))
    }
}

impl ContinuousUniversal {
    fn run(&self) -> Outcome {
        let rng = RngSpec::new(self.seed.unwrap_or_default());
        warn_even(self.m);
        if let Some(eta) = self.eta {
            let e = estimate_p2_continuous(self.m, eta, self.trials, &rng)?;
            let mut out = object(json!({ "eta_used": eta }));
            out.extend(estimate_fields(&e));
            return Ok(out);
        }
        let o = optimize_eta_universal(self.m, self.grid.eta_grid(), self.trials, self.validation_trials, &rng)?;
        let mut out = object(json!({ "eta_used": o.eta_star, "scan_p_hat_at_best": o.scan_estimate.p_hat }));
        out.extend(estimate_fields(&o.validated));
        if self.scan {
            let rows = o
                .scan
                .iter()
                .map(|(eta, e)| {
                    let mut row = object(json!({ "scan_eta": eta }));
                    row.extend(estimate_fields(e).into_iter().map(|(k, v)| (format!("scan_{k}"), v)));
                    Value::Object(row)
                })
                .collect();
            out.insert("scan_points".into(), Value::Array(rows));
        }
        Ok(out)
    }
}

impl Bounds {
    fn run(&self) -> Outcome {
        check_width(self.n, self.l)?;
        let [rate_a, rate_b] = per_round_rates(self.n, self.l);
        Ok(object(json!({
            "two_term_bound": failure_upper_bound(self.n, self.m, self.l),
            "relaxed_bound": relaxed_failure_bound(self.n, self.m, self.l),
            "rate_a": rate_a,
            "rate_b": rate_b,
        })))
    }
}
