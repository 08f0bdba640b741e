//! Identifiers, the region graph, planning horizon and scenario configuration.
//!
//! Units throughout the crate: distances in km, times in minutes, money in
//! abstract currency units.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DriverId(pub usize);

impl RegionId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl DriverId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for DriverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense inter-region tables: shortest-path distance, expected travel time
/// and travel-time standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRegionGraph", into = "RawRegionGraph")]
pub struct RegionGraph {
    n: usize,
    distance: Vec<f64>,
    travel_time: Vec<f64>,
    travel_time_stddev: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawRegionGraph {
    distance: Vec<Vec<f64>>,
    expected_travel_time: Vec<Vec<f64>>,
    travel_time_stddev: Vec<Vec<f64>>,
}

impl TryFrom<RawRegionGraph> for RegionGraph {
    type Error = Error;

    fn try_from(raw: RawRegionGraph) -> Result<Self> {
        RegionGraph::new(raw.distance, raw.expected_travel_time, raw.travel_time_stddev)
    }
}

impl From<RegionGraph> for RawRegionGraph {
    fn from(g: RegionGraph) -> Self {
        RawRegionGraph {
            distance: g.to_rows(&g.distance),
            expected_travel_time: g.to_rows(&g.travel_time),
            travel_time_stddev: g.to_rows(&g.travel_time_stddev),
        }
    }
}

impl RegionGraph {
    pub fn new(
        distance: Vec<Vec<f64>>,
        travel_time: Vec<Vec<f64>>,
        travel_time_stddev: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = distance.len();
        if n == 0 {
            return Err(Error::invalid("region graph needs at least one region"));
        }
        let flatten = |name: &str, rows: Vec<Vec<f64>>, zero_diag: bool| -> Result<Vec<f64>> {
            if rows.len() != n {
                return Err(Error::invalid(format!("{name} table has {} rows, expected {n}", rows.len())));
            }
            let mut flat = Vec::with_capacity(n * n);
            for (i, row) in rows.into_iter().enumerate() {
                if row.len() != n {
                    return Err(Error::invalid(format!("{name} row {i} has {} entries, expected {n}", row.len())));
                }
                for (j, v) in row.into_iter().enumerate() {
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::invalid(format!("{name}[{i}][{j}] = {v} is not a nonnegative number")));
                    }
                    if zero_diag && i == j && v != 0.0 {
                        return Err(Error::invalid(format!("{name}[{i}][{i}] must be 0, got {v}")));
                    }
                    flat.push(v);
                }
            }
            Ok(flat)
        };
        Ok(RegionGraph {
            n,
            distance: flatten("distance", distance, true)?,
            travel_time: flatten("expected_travel_time", travel_time, true)?,
            travel_time_stddev: flatten("travel_time_stddev", travel_time_stddev, false)?,
        })
    }

    /// Graph with zero travel-time noise.
    pub fn deterministic(distance: Vec<Vec<f64>>, travel_time: Vec<Vec<f64>>) -> Result<Self> {
        let n = distance.len();
        RegionGraph::new(distance, travel_time, vec![vec![0.0; n]; n])
    }

    fn to_rows(&self, flat: &[f64]) -> Vec<Vec<f64>> {
        flat.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn n_regions(&self) -> usize {
        self.n
    }

    pub fn regions(&self) -> impl Iterator<Item = RegionId> {
        (0..self.n).map(RegionId)
    }

    pub fn contains(&self, r: RegionId) -> bool {
        r.0 < self.n
    }

    pub fn distance(&self, from: RegionId, to: RegionId) -> f64 {
        self.distance[from.0 * self.n + to.0]
    }

    pub fn travel_time(&self, from: RegionId, to: RegionId) -> f64 {
        self.travel_time[from.0 * self.n + to.0]
    }

    pub fn travel_time_stddev(&self, from: RegionId, to: RegionId) -> f64 {
        self.travel_time_stddev[from.0 * self.n + to.0]
    }

    pub fn max_travel_time(&self) -> f64 {
        self.travel_time.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_distance(&self) -> f64 {
        self.distance.iter().copied().fold(0.0, f64::max)
    }

    pub fn distance_rows(&self) -> Vec<Vec<f64>> {
        self.to_rows(&self.distance)
    }

    pub fn travel_time_rows(&self) -> Vec<Vec<f64>> {
        self.to_rows(&self.travel_time)
    }

    pub fn stddev_rows(&self) -> Vec<Vec<f64>> {
        self.to_rows(&self.travel_time_stddev)
    }
}

/// Length of one planning period, in minutes. Strictly positive.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PlanningHorizon(f64);

impl PlanningHorizon {
    pub fn new(minutes: f64) -> Result<Self> {
        if minutes.is_finite() && minutes > 0.0 {
            Ok(PlanningHorizon(minutes))
        } else {
            Err(Error::invalid(format!("planning horizon must be positive, got {minutes}")))
        }
    }

    pub fn minutes(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PlanningHorizon {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        PlanningHorizon::new(v)
    }
}

impl From<PlanningHorizon> for f64 {
    fn from(h: PlanningHorizon) -> f64 {
        h.0
    }
}

/// Every tunable of the recommenders and the simulator.
///
/// Loads from TOML or JSON; keys match the field names (`M` is upper-case).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub horizon: PlanningHorizon,
    /// Travel-cost weight in AAVR and B2.
    pub beta: f64,
    /// Weight of the passenger-to-driver distance term in B4.
    pub beta_b4: f64,
    /// Over-saturation factor of B1.
    pub rho: f64,
    /// Unserved-demand penalty of B4; `None` means 1e4 times the largest distance.
    pub gamma: Option<f64>,
    pub epsilon0: f64,
    pub epsilon1: f64,
    /// Thompson samples per acceptance estimate.
    #[serde(rename = "M")]
    pub m: usize,
    pub fare_base: f64,
    pub fare_per_km: f64,
    pub cost_per_km: f64,
    pub commission_rate: f64,
    pub seed: u64,
    /// Look-back length of the demand forecaster, in history entries.
    pub window: usize,
    /// Relative optimality gap at which the recommenders stop branching.
    pub mip_rel_gap: f64,
    /// Branch-and-bound nodes per recommender solve; the best incumbent is
    /// used when the budget runs out.
    pub mip_node_limit: usize,
    /// Use the printed `- beta` sign in B2 instead of penalizing distance.
    pub b2_literal_sign: bool,
    /// Drop the net-flow term from the B3/B4 balance constraints, as printed.
    pub literal_balance: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            horizon: PlanningHorizon(5.0),
            beta: 1e-4,
            beta_b4: 1.0,
            rho: 1.0,
            gamma: None,
            epsilon0: 1.0,
            epsilon1: 1.0,
            m: 1000,
            fare_base: 2.5,
            fare_per_km: 1.5,
            cost_per_km: 0.3,
            commission_rate: 0.2,
            seed: 42,
            window: 168,
            mip_rel_gap: 1e-4,
            mip_node_limit: 2000,
            b2_literal_sign: false,
            literal_balance: false,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("beta", self.beta),
            ("beta_b4", self.beta_b4),
            ("rho", self.rho),
            ("epsilon0", self.epsilon0),
            ("epsilon1", self.epsilon1),
            ("fare_base", self.fare_base),
            ("fare_per_km", self.fare_per_km),
            ("cost_per_km", self.cost_per_km),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be a nonnegative number, got {v}")));
            }
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::invalid(format!("gamma must be nonnegative, got {g}")));
            }
        }
        if !(0.0..=1.0).contains(&self.commission_rate) {
            return Err(Error::invalid(format!(
                "commission_rate must lie in [0, 1], got {}",
                self.commission_rate
            )));
        }
        if !(0.0..1.0).contains(&self.mip_rel_gap) {
            return Err(Error::invalid(format!("mip_rel_gap must lie in [0, 1), got {}", self.mip_rel_gap)));
        }
        if self.mip_node_limit == 0 {
            return Err(Error::invalid("mip_node_limit must be at least 1"));
        }
        if self.m == 0 {
            return Err(Error::invalid("M must be at least 1"));
        }
        if self.window == 0 {
            return Err(Error::invalid("window must be at least 1"));
        }
        Ok(())
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn from_str_any(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)?
        } else {
            toml::from_str(text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ScenarioConfig::from_str_any(&text).map_err(|e| Error::Schema {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn gamma_for(&self, graph: &RegionGraph) -> f64 {
        self.gamma.unwrap_or_else(|| 1e4 * graph.max_distance().max(1.0))
    }

    pub fn fare(&self, trip_km: f64) -> f64 {
        self.fare_base + self.fare_per_km * trip_km
    }
}

/// Fraction of ordered region pairs (diagonal included) whose expected
/// travel time fits within the horizon.
pub fn reachability_fraction(graph: &RegionGraph, horizon: PlanningHorizon) -> f64 {
    let n = graph.n_regions();
    let reachable = graph
        .travel_time
        .iter()
        .filter(|&&t| t <= horizon.minutes())
        .count();
    reachable as f64 / (n * n) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_region_graph() -> RegionGraph {
        let t = vec![
            vec![0.0, 4.0, 6.0],
            vec![7.0, 0.0, 9.0],
            vec![11.0, 12.0, 0.0],
        ];
        RegionGraph::deterministic(t.clone(), t).unwrap()
    }

    #[test]
    fn reachability_counts_diagonal_only_for_tiny_horizon() {
        let g = three_region_graph();
        let h = PlanningHorizon::new(1e-9).unwrap();
        assert!((reachability_fraction(&g, h) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn reachability_is_one_beyond_max_travel_time() {
        let g = three_region_graph();
        let h = PlanningHorizon::new(g.max_travel_time()).unwrap();
        assert_eq!(reachability_fraction(&g, h), 1.0);
    }

    #[test]
    fn reachability_three_regions_horizon_seven() {
        // off-diagonal {4,6,7,9,11,12}: 4, 6 and 7 fit, plus 3 diagonal entries
        let g = three_region_graph();
        let h = PlanningHorizon::new(7.0).unwrap();
        assert!((reachability_fraction(&g, h) - 6.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn graph_rejects_nonzero_diagonal_and_ragged_tables() {
        let bad = RegionGraph::deterministic(vec![vec![1.0]], vec![vec![0.0]]);
        assert!(bad.is_err());
        let ragged = RegionGraph::deterministic(vec![vec![0.0, 1.0], vec![1.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(ragged.is_err());
        assert!(RegionGraph::deterministic(vec![], vec![]).is_err());
    }

    #[test]
    fn horizon_must_be_positive() {
        assert!(PlanningHorizon::new(0.0).is_err());
        assert!(PlanningHorizon::new(-1.0).is_err());
        assert!(PlanningHorizon::new(f64::NAN).is_err());
    }

    #[test]
    fn config_parses_toml_with_field_names() {
        let cfg = ScenarioConfig::from_str_any(
            "horizon = 5.0\nbeta = 0.01\nrho = 1.0\ngamma = 100.0\nepsilon0 = 1.0\nepsilon1 = 2.0\nM = 50\n\
             fare_base = 2.5\nfare_per_km = 1.5\ncost_per_km = 0.3\ncommission_rate = 0.2\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.m, 50);
        assert_eq!(cfg.epsilon1, 2.0);
        assert_eq!(cfg.gamma, Some(100.0));
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn config_rejects_bad_commission_and_zero_samples() {
        assert!(ScenarioConfig::from_str_any("commission_rate = 1.5").is_err());
        assert!(ScenarioConfig::from_str_any("M = 0").is_err());
        assert!(ScenarioConfig::from_str_any("unknown_key = 1").is_err());
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = ScenarioConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"M\":1000"));
        assert_eq!(ScenarioConfig::from_str_any(&text).unwrap(), cfg);
    }
}
