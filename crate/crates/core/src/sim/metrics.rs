use serde::{Deserialize, Serialize};

use crate::domain::DriverId;
use crate::rebalance::RebalanceModel;

/// What happened in one planning period.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PeriodMetrics {
    pub period: usize,
    pub arrived: u32,
    pub served: u32,
    /// Served at period start by drivers already in the region.
    pub served_first_batch: u32,
    pub waiting_total_min: f64,
    /// Absent when nothing was served.
    pub mean_waiting_min: Option<f64>,
    pub fares: f64,
    pub earnings: f64,
    pub driver_profit: f64,
    /// Drivers told to move to another region.
    pub recommended: u32,
    /// Of those, drivers who followed the recommendation.
    pub accepted: u32,
    /// Repositioned drivers who picked up a request in the same period.
    pub allocated_after_rebalance: u32,
    pub rebalance_km: f64,
    pub trip_km: f64,
    /// Per region: drivers who moved in during the period and stayed idle.
    pub idle_arrivals: Vec<u32>,
    pub solver_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriverCounters {
    pub driver_id: DriverId,
    pub recommended: u32,
    pub accepted: u32,
    pub allocated: u32,
}

impl DriverCounters {
    pub fn new(driver_id: DriverId) -> Self {
        DriverCounters { driver_id, recommended: 0, accepted: 0, allocated: 0 }
    }
}

/// Full record of one replication.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub periods: Vec<PeriodMetrics>,
    pub drivers: Vec<DriverCounters>,
}

/// Totals of one replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub model: RebalanceModel,
    pub seed: u64,
    pub periods: usize,
    pub arrived: u64,
    pub served: u64,
    pub served_per_period: f64,
    /// Mean over served requests; absent when none was served.
    pub mean_waiting_min: Option<f64>,
    pub earnings: f64,
    pub driver_profit: f64,
    pub recommended: u64,
    pub accepted: u64,
}

impl SimMetrics {
    pub fn summary(&self, scenario: &str, model: RebalanceModel, seed: u64) -> RunSummary {
        let served: u64 = self.periods.iter().map(|p| p.served as u64).sum();
        let waiting: f64 = self.periods.iter().map(|p| p.waiting_total_min).sum();
        let n = self.periods.len();
        RunSummary {
            scenario: scenario.to_string(),
            model,
            seed,
            periods: n,
            arrived: self.periods.iter().map(|p| p.arrived as u64).sum(),
            served,
            served_per_period: if n == 0 { 0.0 } else { served as f64 / n as f64 },
            mean_waiting_min: (served > 0).then(|| waiting / served as f64),
            earnings: self.periods.iter().map(|p| p.earnings).sum(),
            driver_profit: self.periods.iter().map(|p| p.driver_profit).sum(),
            recommended: self.periods.iter().map(|p| p.recommended as u64).sum(),
            accepted: self.periods.iter().map(|p| p.accepted as u64).sum(),
        }
    }
}

/// Seed-averaged results of one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelAverage {
    pub scenario: String,
    pub model: RebalanceModel,
    pub seeds: usize,
    pub served_per_period: f64,
    pub served_per_run: f64,
    /// Average of the per-run means that exist.
    pub mean_waiting_min: Option<f64>,
    pub earnings: f64,
    pub driver_profit: f64,
    pub acceptance_rate: Option<f64>,
}

pub fn average(runs: &[RunSummary]) -> Vec<ModelAverage> {
    let mut models: Vec<RebalanceModel> = runs.iter().map(|r| r.model).collect();
    models.sort();
    models.dedup();
    models
        .into_iter()
        .map(|m| {
            let rs: Vec<&RunSummary> = runs.iter().filter(|r| r.model == m).collect();
            let k = rs.len() as f64;
            let waits: Vec<f64> = rs.iter().filter_map(|r| r.mean_waiting_min).collect();
            let recommended: u64 = rs.iter().map(|r| r.recommended).sum();
            let accepted: u64 = rs.iter().map(|r| r.accepted).sum();
            ModelAverage {
                scenario: rs[0].scenario.clone(),
                model: m,
                seeds: rs.len(),
                served_per_period: rs.iter().map(|r| r.served_per_period).sum::<f64>() / k,
                served_per_run: rs.iter().map(|r| r.served as f64).sum::<f64>() / k,
                mean_waiting_min: (!waits.is_empty()).then(|| waits.iter().sum::<f64>() / waits.len() as f64),
                earnings: rs.iter().map(|r| r.earnings).sum::<f64>() / k,
                driver_profit: rs.iter().map(|r| r.driver_profit).sum::<f64>() / k,
                acceptance_rate: (recommended > 0).then(|| accepted as f64 / recommended as f64),
            }
        })
        .collect()
}
