use serde::{Deserialize, Serialize};

use crate::domain::{DriverId, RegionGraph, RegionId, ScenarioConfig};
use crate::error::{Error, Result};

/// An idle driver as the recommenders see it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdleDriver {
    pub id: DriverId,
    pub region: RegionId,
    /// Probability of accepting a recommendation.
    pub mu: f64,
    /// Self-directed destination distribution over regions.
    pub preference: Vec<f64>,
}

/// Fleet state at the start of a planning period.
#[derive(Clone, Debug)]
pub struct FleetSnapshot<'a> {
    /// Sorted by driver id.
    pub drivers: Vec<IdleDriver>,
    /// Expected demand per region.
    pub demand: Vec<f64>,
    pub graph: &'a RegionGraph,
    pub config: &'a ScenarioConfig,
}

impl<'a> FleetSnapshot<'a> {
    pub fn new(
        mut drivers: Vec<IdleDriver>,
        demand: Vec<f64>,
        graph: &'a RegionGraph,
        config: &'a ScenarioConfig,
    ) -> Result<Self> {
        drivers.sort_by_key(|d| d.id);
        let s = FleetSnapshot { drivers, demand, graph, config };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.n_regions();
        let reject = |m: String| Err(Error::RejectedSnapshot(m));
        if self.demand.len() != n {
            return reject(format!("demand has {} regions, graph has {n}", self.demand.len()));
        }
        if let Some((j, v)) = self.demand.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return reject(format!("demand of region {j} is {v}"));
        }
        for w in self.drivers.windows(2) {
            if w[0].id == w[1].id {
                return reject(format!("driver {} appears twice", w[0].id));
            }
        }
        for d in &self.drivers {
            if !self.graph.contains(d.region) {
                return reject(format!("driver {} is in unknown region {}", d.id, d.region));
            }
            if !(0.0..=1.0).contains(&d.mu) {
                return reject(format!("driver {} has acceptance probability {}", d.id, d.mu));
            }
            if d.preference.len() != n {
                return reject(format!("driver {} preference has {} entries, expected {n}", d.id, d.preference.len()));
            }
            if d.preference.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return reject(format!("driver {} preference has a negative entry", d.id));
            }
            let total: f64 = d.preference.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return reject(format!("driver {} preference sums to {total}", d.id));
            }
            if !self.graph.regions().any(|j| self.reachable(d.region, j)) {
                return reject(format!("driver {} has no region reachable within the horizon", d.id));
            }
        }
        Ok(())
    }

    pub fn n_regions(&self) -> usize {
        self.graph.n_regions()
    }

    pub fn horizon(&self) -> f64 {
        self.config.horizon.minutes()
    }

    pub fn reachable(&self, from: RegionId, to: RegionId) -> bool {
        self.graph.travel_time(from, to) <= self.horizon()
    }

    /// Idle drivers per region.
    pub fn idle_counts(&self) -> Vec<usize> {
        let mut v = vec![0; self.n_regions()];
        for d in &self.drivers {
            v[d.region.0] += 1;
        }
        v
    }

    /// Expected supply per region when driver `k` is recommended `dest[k]`:
    /// `sum_c mu_c [dest_c = j] + (1 - mu_c) L_cj`.
    pub fn expected_supply(&self, dest: &[RegionId]) -> Vec<f64> {
        let mut s = vec![0.0; self.n_regions()];
        for (d, &to) in self.drivers.iter().zip(dest) {
            s[to.0] += d.mu;
            for (sj, p) in s.iter_mut().zip(&d.preference) {
                *sj += (1.0 - d.mu) * p;
            }
        }
        s
    }

    pub fn expected_allocation(&self, supply: &[f64]) -> Vec<f64> {
        supply.iter().zip(&self.demand).map(|(s, d)| s.min(*d)).collect()
    }
}
