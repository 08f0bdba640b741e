//! Scenario bundles: the two-station case studies, a synthetic network and
//! region-level trip-record ingestion.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::behavior::{
    acceptance_probability_exact, preference_distribution, standardize_features, ChoiceRecord, DriverAgent, PreferenceModel, RegionFeatures,
    FEATURE_NAMES,
};
use crate::domain::{DriverId, PlanningHorizon, RegionGraph, RegionId, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rebalance::IdleDriver;
use crate::rng::seeded_rng;
use crate::stochastic::{DemandHistory, DemandModel, DemandObservation, TimeContext};

/// Everything the simulator needs to replay a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBundle {
    pub name: String,
    pub graph: RegionGraph,
    pub drivers: Vec<DriverAgent>,
    /// Requests per period before the hourly profile is applied.
    pub demand: DemandModel,
    /// 24 multipliers on the demand model, one per hour of day.
    pub hourly_profile: Vec<f64>,
    /// Trip destination shares; row i is the distribution of trips starting in i.
    pub od: Vec<Vec<f64>>,
    /// Length of a trip that starts and ends in the same region.
    pub intra_trip_km: Vec<f64>,
    pub speed_km_per_min: f64,
    pub history: DemandHistory,
    pub start_hour: u32,
    pub start_weekday: u32,
    pub config: ScenarioConfig,
}

impl ScenarioBundle {
    pub fn n_regions(&self) -> usize {
        self.graph.n_regions()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_regions();
        let reject = |m: String| Err(Error::RejectedScenario(m));
        self.config.validate()?;
        if self.demand.mean.len() != n {
            return reject(format!("demand model has {} regions, graph has {n}", self.demand.mean.len()));
        }
        if self.hourly_profile.len() != 24 || self.hourly_profile.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return reject("hourly profile needs 24 nonnegative entries".into());
        }
        if self.od.len() != n || self.od.iter().any(|r| r.len() != n) {
            return reject(format!("OD matrix must be {n}x{n}"));
        }
        for (i, row) in self.od.iter().enumerate() {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return reject(format!("OD row {i} is not a probability vector"));
            }
        }
        if self.intra_trip_km.len() != n {
            return reject(format!("intra_trip_km has {} entries, expected {n}", self.intra_trip_km.len()));
        }
        if !(self.speed_km_per_min > 0.0) {
            return reject("speed_km_per_min must be positive".into());
        }
        if self.history.n_regions() != n || self.history.series.iter().any(|s| s.is_empty()) {
            return reject("demand history must hold at least one entry per region".into());
        }
        let mut ids = BTreeSet::new();
        for d in &self.drivers {
            if !ids.insert(d.id) {
                return reject(format!("driver {} appears twice", d.id));
            }
            if !self.graph.contains(d.region) {
                return reject(format!("driver {} is in unknown region {}", d.id, d.region));
            }
            if let Some(p) = &d.pinned_preference {
                if p.len() != n {
                    return reject(format!("driver {} pinned preference has {} entries", d.id, p.len()));
                }
            } else if d.preference.feature_dim() != FEATURE_NAMES.len() {
                return reject(format!(
                    "driver {} preference model has {} features, expected {}",
                    d.id,
                    d.preference.feature_dim(),
                    FEATURE_NAMES.len()
                ));
            }
        }
        Ok(())
    }

    /// Hour and weekday at the start of `period`.
    pub fn time_of(&self, period: usize) -> TimeContext {
        let minutes = self.start_hour as f64 * 60.0 + period as f64 * self.config.horizon.minutes();
        let hours = (minutes / 60.0).floor() as u64;
        TimeContext { hour: (hours % 24) as u32, weekday: ((self.start_weekday as u64 + hours / 24) % 7) as u32 }
    }

    /// Demand model in force during `period`.
    pub fn demand_at(&self, period: usize) -> DemandModel {
        self.demand.scaled(self.hourly_profile[self.time_of(period).hour as usize])
    }

    /// Scales demand volume, including the recorded history.
    pub fn with_demand_multiplier(mut self, factor: f64) -> Self {
        self.demand = self.demand.scaled(factor);
        for s in &mut self.history.series {
            for o in s {
                o.demand *= factor;
            }
        }
        self
    }

    /// Standardized preference features of every region as seen from `origin`.
    pub fn region_features(&self, origin: RegionId, expected_pickups: &[f64], t: TimeContext) -> Vec<RegionFeatures> {
        let raw: Vec<RegionFeatures> = self
            .graph
            .regions()
            .map(|j| {
                RegionFeatures(vec![
                    self.graph.distance(origin, j),
                    expected_pickups[j.0],
                    self.intra_trip_km[j.0],
                    t.hour as f64,
                    t.weekday as f64,
                ])
            })
            .collect();
        standardize_features(&raw)
    }

    /// Idle drivers of the initial fleet with their acceptance probability
    /// (pinned, or by quadrature) and their preference over regions at the
    /// first period, for solving a single snapshot.
    pub fn initial_idle_drivers(&self) -> Result<Vec<IdleDriver>> {
        let when = self.time_of(0);
        let pickups = self.demand_at(0).mean;
        let mut out = Vec::new();
        for d in self.drivers.iter().filter(|d| d.is_idle()) {
            let mu = d.pinned_mu.unwrap_or_else(|| acceptance_probability_exact(d.belief_system, d.belief_self));
            let preference = match &d.pinned_preference {
                Some(p) => p.clone(),
                None => preference_distribution(&d.preference, &self.region_features(d.region, &pickups, when))?,
            };
            out.push(IdleDriver { id: d.id, region: d.region, mu, preference });
        }
        out.sort_by_key(|d| d.id);
        Ok(out)
    }

    /// Writes the bundle as one JSON document.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let b: ScenarioBundle = serde_json::from_str(&text)
            .map_err(|e| Error::Schema { path: path.display().to_string(), message: e.to_string() })?;
        b.validate()?;
        Ok(b)
    }
}

fn two_station_bundle(name: &str, mu: impl Fn(usize) -> f64, preference: [f64; 2]) -> ScenarioBundle {
    let graph = RegionGraph::deterministic(vec![vec![0.0, 2.0], vec![2.0, 0.0]], vec![vec![0.0, 4.0], vec![4.0, 0.0]])
        .expect("static tables are valid");
    let config = ScenarioConfig { horizon: PlanningHorizon::new(5.0).expect("positive"), ..ScenarioConfig::default() };
    let drivers = (0..1000)
        .map(|k| {
            let mut d = DriverAgent::new(DriverId(k), RegionId(0), PreferenceModel::zeros(FEATURE_NAMES.len()));
            d.pinned_mu = Some(mu(k));
            d.pinned_preference = Some(preference.to_vec());
            d
        })
        .collect();
    let nu = vec![0.0, 100.0];
    let mut history = DemandHistory::new(2);
    for (j, &v) in nu.iter().enumerate() {
        history.push(j, DemandObservation { demand: v, hour: 8, weekday: 0, day_of_month: 1 });
    }
    ScenarioBundle {
        name: name.to_string(),
        graph,
        drivers,
        demand: DemandModel::new(nu, vec![0.0, 0.0]).expect("valid"),
        hourly_profile: vec![1.0; 24],
        od: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        intra_trip_km: vec![3.0, 3.0],
        speed_km_per_min: 0.5,
        history,
        start_hour: 8,
        start_weekday: 0,
        config,
    }
}

/// 1000 drivers at A with acceptance probability 0.5 who otherwise stay at
/// A; 100 requests at B, four minutes away.
pub fn case_study_1() -> ScenarioBundle {
    two_station_bundle("case-study-1", |_| 0.5, [1.0, 0.0])
}

/// As [`case_study_1`], but a driver who ignores the recommendation picks A
/// or B with equal probability.
pub fn case_study_2() -> ScenarioBundle {
    two_station_bundle("case-study-2", |_| 0.5, [0.5, 0.5])
}

/// As [`case_study_1`] with acceptance probabilities drawn uniformly from (0, 1).
pub fn case_study_3(seed: u64) -> ScenarioBundle {
    let mut rng = seeded_rng(seed, "case-study-3/mu");
    let mus: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
    two_station_bundle("case-study-3", |k| mus[k], [1.0, 0.0])
}

/// Random desk-scale network: region centres in a 4 km square, straight-line
/// distances at 30 km/h, demand profiles peaking in the evening, one week of
/// hourly history and drivers with perturbed preference weights.
pub fn synthetic_network(n_regions: usize, n_drivers: usize, seed: u64) -> Result<ScenarioBundle> {
    if n_regions < 2 {
        return Err(Error::invalid(format!("synthetic network needs at least 2 regions, got {n_regions}")));
    }
    let mut rng = seeded_rng(seed, "synthetic/layout");
    let side = 4.0;
    let speed = 0.5;
    let centers: Vec<(f64, f64)> =
        (0..n_regions).map(|_| (rng.random::<f64>() * side, rng.random::<f64>() * side)).collect();
    let mut dist = vec![vec![0.0; n_regions]; n_regions];
    let mut time = vec![vec![0.0; n_regions]; n_regions];
    let mut sd = vec![vec![0.0; n_regions]; n_regions];
    for i in 0..n_regions {
        for j in 0..n_regions {
            if i != j {
                let (a, b) = (centers[i], centers[j]);
                let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt().max(0.05);
                dist[i][j] = d;
                time[i][j] = d / speed;
                sd[i][j] = 0.1 * time[i][j];
            }
        }
    }
    let graph = RegionGraph::new(dist, time, sd)?;

    let mean: Vec<f64> = (0..n_regions).map(|_| 0.5 + 4.5 * rng.random::<f64>().powi(2)).collect();
    let stddev: Vec<f64> = mean.iter().map(|m| 0.3 * m).collect();
    let demand = DemandModel::new(mean, stddev)?;
    let hourly_profile: Vec<f64> =
        (0..24).map(|h| 1.0 + 0.4 * (2.0 * std::f64::consts::PI * (h as f64 - 12.0) / 24.0).sin()).collect();
    let od: Vec<Vec<f64>> = (0..n_regions)
        .map(|_| {
            let raw: Vec<f64> = (0..n_regions).map(|_| rng.random::<f64>() + 0.05).collect();
            normalize(raw)
        })
        .collect();
    let intra_trip_km: Vec<f64> = (0..n_regions).map(|_| 1.0 + 2.0 * rng.random::<f64>()).collect();

    let mut hist_rng = seeded_rng(seed, "synthetic/history");
    let mut history = DemandHistory::new(n_regions);
    for day in 0..7u32 {
        for hour in 0..24u32 {
            let m = demand.scaled(hourly_profile[hour as usize]);
            for j in 0..n_regions {
                let z: f64 = StandardNormal.sample(&mut hist_rng);
                let v = (m.mean[j] + m.stddev[j] * z).round().max(0.0);
                history.push(j, DemandObservation { demand: v, hour, weekday: day, day_of_month: day + 1 });
            }
        }
    }

    let mut drv_rng = seeded_rng(seed, "synthetic/drivers");
    let total: f64 = demand.mean.iter().sum();
    let drivers = (0..n_drivers)
        .map(|k| {
            // start where demand is, roughly
            let u: f64 = drv_rng.random::<f64>() * total;
            let mut acc = 0.0;
            let region = demand.mean.iter().position(|m| {
                acc += m;
                u < acc
            });
            let region = RegionId(region.unwrap_or(n_regions - 1));
            let mut noise = || 0.3 * rand::Rng::sample::<f64, _>(&mut drv_rng, StandardNormal);
            let w = vec![-1.5 + noise(), 1.0 + noise(), 0.3 + noise(), 0.0, 0.0, 0.0];
            DriverAgent::new(DriverId(k), region, PreferenceModel::new(w).expect("finite"))
        })
        .collect();

    let bundle = ScenarioBundle {
        name: format!("synthetic-{n_regions}x{n_drivers}-{seed}"),
        graph,
        drivers,
        demand,
        hourly_profile,
        od,
        intra_trip_km,
        speed_km_per_min: speed,
        history,
        start_hour: 17,
        start_weekday: 2,
        config: ScenarioConfig { seed, ..ScenarioConfig::default() },
    };
    bundle.validate()?;
    Ok(bundle)
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    let mut out: Vec<f64> = v.iter().map(|x| x / total).collect();
    let drift = out.iter().sum::<f64>() - 1.0;
    if let Some(m) = out.iter_mut().max_by(|a, b| a.total_cmp(b)) {
        *m -= drift;
    }
    out
}

/// Choice records drawn from a planted preference model over random region
/// features, `n_regions` candidates each.
pub fn planted_choice_corpus(
    planted: &PreferenceModel,
    n_regions: usize,
    n_records: usize,
    seed: u64,
) -> Result<Vec<ChoiceRecord>> {
    let mut rng = seeded_rng(seed, "planted-corpus");
    let k = planted.feature_dim();
    (0..n_records)
        .map(|_| {
            let raw: Vec<RegionFeatures> = (0..n_regions)
                .map(|_| RegionFeatures((0..k).map(|_| StandardNormal.sample(&mut rng)).collect()))
                .collect();
            let features = standardize_features(&raw);
            let l = preference_distribution(planted, &features)?;
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let chosen = l
                .iter()
                .position(|p| {
                    acc += p;
                    u < acc
                })
                .unwrap_or(n_regions - 1);
            Ok(ChoiceRecord { chosen: RegionId(chosen), features })
        })
        .collect()
}

/// Settings for [`ingest_trip_records`].
#[derive(Clone, Debug, PartialEq)]
pub struct IngestOptions {
    /// Distance assumed for a region pair without observed trips.
    pub default_km: f64,
    pub speed_km_per_min: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { default_km: 2.0, speed_km_per_min: 0.5 }
    }
}

/// Region-level statistics recovered from a trip-record file.
#[derive(Clone, Debug, PartialEq)]
pub struct TripIngest {
    pub graph: RegionGraph,
    /// Trip counts per region for every (weekday, hour) seen in the file.
    pub history: DemandHistory,
    pub od: Vec<Vec<f64>>,
    /// Ordered pairs that fell back to the distance/speed defaults.
    pub fallback_pairs: usize,
    pub skipped_rows: usize,
}

#[derive(Debug, Deserialize)]
struct TripRow {
    pickup_region: usize,
    dropoff_region: usize,
    minutes: f64,
    km: f64,
    hour: u32,
    weekday: u32,
}

/// Reads `(pickup_region, dropoff_region, minutes, km, hour, weekday)` rows.
/// Travel time mean and (population) standard deviation come from the
/// observed trips of each ordered pair.
pub fn ingest_trip_records(path: &Path, opts: &IngestOptions) -> Result<TripIngest> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for (line, rec) in reader.deserialize::<TripRow>().enumerate() {
        match rec {
            Ok(r) if r.minutes.is_finite() && r.minutes >= 0.0 && r.km.is_finite() && r.km >= 0.0 && r.hour < 24 && r.weekday < 7 => {
                rows.push(r)
            }
            Ok(_) => {
                skipped += 1;
                log::warn!("{}: row {} has out-of-range values; skipped", path.display(), line + 2);
            }
            Err(e) => {
                skipped += 1;
                log::warn!("{}: row {} skipped: {e}", path.display(), line + 2);
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::RejectedScenario(format!("{} holds no usable trip rows", path.display())));
    }
    let n = rows.iter().map(|r| r.pickup_region.max(r.dropoff_region)).max().unwrap_or(0) + 1;
    if n < 2 {
        return Err(Error::RejectedScenario(format!("{} covers a single region", path.display())));
    }
    let mut minutes: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n]; n];
    let mut km: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n]; n];
    let mut od_counts = vec![vec![0.0; n]; n];
    let mut buckets = BTreeSet::new();
    for r in &rows {
        minutes[r.pickup_region][r.dropoff_region].push(r.minutes);
        km[r.pickup_region][r.dropoff_region].push(r.km);
        od_counts[r.pickup_region][r.dropoff_region] += 1.0;
        buckets.insert((r.weekday, r.hour));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut fallback = 0usize;
    let mut dist = vec![vec![0.0; n]; n];
    let mut time = vec![vec![0.0; n]; n];
    let mut sd = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let obs = &minutes[i][j];
            if obs.is_empty() {
                fallback += 1;
                log::warn!("no trips observed from region {i} to region {j}; using defaults");
                dist[i][j] = opts.default_km;
                time[i][j] = opts.default_km / opts.speed_km_per_min;
                continue;
            }
            let m = mean(obs);
            dist[i][j] = mean(&km[i][j]);
            time[i][j] = m;
            sd[i][j] = (obs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / obs.len() as f64).sqrt();
        }
    }
    let graph = RegionGraph::new(dist, time, sd)?;
    let od = od_counts
        .into_iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                normalize(row)
            } else {
                vec![1.0 / n as f64; n]
            }
        })
        .collect();
    let mut history = DemandHistory::new(n);
    for &(weekday, hour) in &buckets {
        for j in 0..n {
            let count = rows.iter().filter(|r| r.pickup_region == j && r.weekday == weekday && r.hour == hour).count();
            history.push(j, DemandObservation { demand: count as f64, hour, weekday, day_of_month: 0 });
        }
    }
    Ok(TripIngest { graph, history, od, fallback_pairs: fallback, skipped_rows: skipped })
}
