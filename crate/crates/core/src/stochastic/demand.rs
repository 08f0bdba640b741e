use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian demand per region: mean `nu_j`, standard deviation `sigma_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandModel {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl DemandModel {
    pub fn new(mean: Vec<f64>, stddev: Vec<f64>) -> Result<Self> {
        if mean.len() != stddev.len() {
            return Err(Error::invalid(format!(
                "demand mean has {} regions, stddev has {}",
                mean.len(),
                stddev.len()
            )));
        }
        if mean.iter().chain(&stddev).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("demand mean and stddev must be nonnegative"));
        }
        Ok(DemandModel { mean, stddev })
    }

    pub fn scaled(&self, factor: f64) -> DemandModel {
        DemandModel {
            mean: self.mean.iter().map(|m| m * factor).collect(),
            stddev: self.stddev.iter().map(|s| s * factor).collect(),
        }
    }
}

/// Draws a Gaussian per region, rounded to the nearest integer and clamped at 0.
pub fn sample_demand<R: Rng + ?Sized>(model: &DemandModel, rng: &mut R) -> Vec<u32> {
    model
        .mean
        .iter()
        .zip(&model.stddev)
        .map(|(&mu, &sd)| {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            let d = (mu + sd * z).round();
            if d <= 0.0 { 0 } else { d as u32 }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandObservation {
    pub demand: f64,
    pub hour: u32,
    pub weekday: u32,
    pub day_of_month: u32,
}

/// When a forecast is for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeContext {
    pub hour: u32,
    pub weekday: u32,
}

/// Per-region demand series, oldest first.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DemandHistory {
    pub series: Vec<Vec<DemandObservation>>,
}

impl DemandHistory {
    pub fn new(n_regions: usize) -> Self {
        DemandHistory { series: vec![Vec::new(); n_regions] }
    }

    pub fn n_regions(&self) -> usize {
        self.series.len()
    }

    pub fn push(&mut self, region: usize, obs: DemandObservation) {
        self.series[region].push(obs);
    }
}

pub trait Forecaster: Send + Sync {
    /// Raw per-region forecast; callers clamp it at 0.
    fn predict(&self, history: &DemandHistory, target: TimeContext) -> Result<Vec<f64>>;
}

/// Average of the look-back window at the same hour and weekday, falling back
/// to the same hour, then to the whole window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeasonalMean {
    pub window: usize,
}

impl Default for SeasonalMean {
    fn default() -> Self {
        SeasonalMean { window: 168 }
    }
}

fn mean_of<'a>(it: impl Iterator<Item = &'a DemandObservation>) -> Option<f64> {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), o| (s + o.demand, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl Forecaster for SeasonalMean {
    fn predict(&self, history: &DemandHistory, target: TimeContext) -> Result<Vec<f64>> {
        history
            .series
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let recent = &s[s.len().saturating_sub(self.window.max(1))..];
                mean_of(recent.iter().filter(|o| o.hour == target.hour && o.weekday == target.weekday))
                    .or_else(|| mean_of(recent.iter().filter(|o| o.hour == target.hour)))
                    .or_else(|| mean_of(recent.iter()))
                    .ok_or_else(|| Error::invalid(format!("demand history of region {j} is empty")))
            })
            .collect()
    }
}

pub fn forecast_demand(forecaster: &dyn Forecaster, history: &DemandHistory, target: TimeContext) -> Result<Vec<f64>> {
    if history.series.is_empty() || history.series.iter().any(|s| s.is_empty()) {
        return Err(Error::invalid("demand history is empty"));
    }
    Ok(forecaster.predict(history, target)?.into_iter().map(|v| v.max(0.0)).collect())
}

/// Root mean squared residual.
pub fn estimate_residual_stddev(actuals: &[f64], predictions: &[f64]) -> Result<f64> {
    if actuals.len() != predictions.len() {
        return Err(Error::invalid(format!(
            "{} actuals against {} predictions",
            actuals.len(),
            predictions.len()
        )));
    }
    if actuals.len() < 2 {
        return Err(Error::invalid("residual estimate needs at least two points"));
    }
    let ss: f64 = actuals.iter().zip(predictions).map(|(a, p)| (a - p).powi(2)).sum();
    Ok((ss / actuals.len() as f64).sqrt())
}
