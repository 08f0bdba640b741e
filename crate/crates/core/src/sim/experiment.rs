use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{average, ModelAverage, RunSummary, SimMetrics};
use super::{simulate, SimOptions};
use crate::error::{Error, Result};
use crate::rebalance::RebalanceModel;
use crate::scenarios::ScenarioBundle;

/// Demand-volume settings of the network comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioVariant {
    Optimistic,
    Neutral,
    Pessimistic,
}

impl ScenarioVariant {
    pub const ALL: [ScenarioVariant; 3] =
        [ScenarioVariant::Optimistic, ScenarioVariant::Neutral, ScenarioVariant::Pessimistic];

    pub fn multiplier(self) -> f64 {
        match self {
            ScenarioVariant::Optimistic => 1.2,
            ScenarioVariant::Neutral => 1.0,
            ScenarioVariant::Pessimistic => 0.8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioVariant::Optimistic => "optimistic",
            ScenarioVariant::Neutral => "neutral",
            ScenarioVariant::Pessimistic => "pessimistic",
        }
    }

    pub fn apply(self, bundle: ScenarioBundle) -> ScenarioBundle {
        let mut b = bundle.with_demand_multiplier(self.multiplier());
        if self != ScenarioVariant::Neutral {
            b.name = format!("{}-{}", b.name, self.name());
        }
        b
    }
}

impl fmt::Display for ScenarioVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown scenario variant '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    /// One row per (model, seed), models in the order given, then seeds.
    pub runs: Vec<RunSummary>,
    /// Per-period detail of each run, aligned with `runs`.
    pub details: Vec<SimMetrics>,
    pub averages: Vec<ModelAverage>,
}

pub fn run_replication(
    bundle: &ScenarioBundle,
    model: RebalanceModel,
    n_periods: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<(RunSummary, SimMetrics)> {
    let (_, metrics) = simulate(bundle, model, n_periods, seed, opts, None)?;
    Ok((metrics.summary(&bundle.name, model, seed), metrics))
}

/// Runs every model on every seed. A seed fixes all random streams, so the
/// models are compared on common random numbers. Replications run in
/// parallel; the table does not depend on scheduling.
pub fn run_experiment(
    bundle: &ScenarioBundle,
    models: &[RebalanceModel],
    n_periods: usize,
    seeds: &[u64],
    opts: &SimOptions,
) -> Result<ExperimentTable> {
    let jobs: Vec<(RebalanceModel, u64)> = models.iter().flat_map(|&m| seeds.iter().map(move |&s| (m, s))).collect();
    let results: Vec<(RunSummary, SimMetrics)> = jobs
        .par_iter()
        .map(|&(m, s)| run_replication(bundle, m, n_periods, s, opts))
        .collect::<Result<_>>()?;
    let (runs, details): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let averages = average(&runs);
    Ok(ExperimentTable { runs, details, averages })
}

/// Seeds of `n` replications starting from `base`.
pub fn replication_seeds(base: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|r| base.wrapping_add(r)).collect()
}

/// Single-period Monte-Carlo statistics of one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub model: RebalanceModel,
    pub replications: usize,
    pub mean_served: f64,
    pub mean_recommended: f64,
    pub mean_accepted: f64,
    /// Per region: mean number of drivers who moved in and stayed idle.
    pub mean_idle_arrivals: Vec<f64>,
}

/// Runs `replications` one-period simulations of `model`.
pub fn monte_carlo(
    bundle: &ScenarioBundle,
    model: RebalanceModel,
    replications: usize,
    base_seed: u64,
    opts: &SimOptions,
) -> Result<MonteCarloSummary> {
    let seeds = replication_seeds(base_seed, replications);
    let periods: Vec<_> = seeds
        .par_iter()
        .map(|&s| simulate(bundle, model, 1, s, opts, None).map(|(_, m)| m.periods.into_iter().next().unwrap_or_default()))
        .collect::<Result<_>>()?;
    let k = replications.max(1) as f64;
    let mut idle = vec![0.0; bundle.n_regions()];
    for p in &periods {
        for (acc, &v) in idle.iter_mut().zip(&p.idle_arrivals) {
            *acc += v as f64 / k;
        }
    }
    Ok(MonteCarloSummary {
        model,
        replications,
        mean_served: periods.iter().map(|p| p.served as f64).sum::<f64>() / k,
        mean_recommended: periods.iter().map(|p| p.recommended as f64).sum::<f64>() / k,
        mean_accepted: periods.iter().map(|p| p.accepted as f64).sum::<f64>() / k,
        mean_idle_arrivals: idle,
    })
}
