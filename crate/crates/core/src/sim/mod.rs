//! Discrete-time fleet simulator: demand arrival, first-come-first-serve
//! matching, rebalancing, sampled driver decisions and belief updates.
//!
//! Every random draw comes from a stream labeled by period and driver, so
//! two models run with the same seed see the same demand, the same
//! acceptance and preference draws and the same travel-time noise.

mod experiment;
mod metrics;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use experiment::{
    monte_carlo, replication_seeds, run_experiment, run_replication, ExperimentTable, MonteCarloSummary, ScenarioVariant,
};
pub use metrics::{average, DriverCounters, ModelAverage, PeriodMetrics, RunSummary, SimMetrics};

use crate::behavior::{
    acceptance_probability, acceptance_probability_exact, preference_distribution, sample_decision, update_belief,
    DriverAgent, DriverStatus,
};
use crate::domain::{DriverId, RegionId, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rebalance::{milp_options, solve_model, FleetSnapshot, IdleDriver, RebalanceModel};
use crate::rng::{seeded_rng, StreamRng};
use crate::scenarios::ScenarioBundle;
use crate::solver::MilpOptions;
use crate::stochastic::{forecast_demand, sample_demand, sample_travel_time, DemandHistory, DemandObservation, SeasonalMean};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodState {
    /// Index of the next period to run.
    pub period: usize,
    /// Sorted by id.
    pub drivers: Vec<DriverAgent>,
    pub history: DemandHistory,
    /// Open requests per region as arrival minutes; empty between periods.
    pub open_requests: Vec<Vec<f64>>,
    pub counters: Vec<DriverCounters>,
}

impl PeriodState {
    pub fn initial(bundle: &ScenarioBundle) -> Self {
        let mut drivers = bundle.drivers.clone();
        drivers.sort_by_key(|d| d.id);
        let counters = drivers.iter().map(|d| DriverCounters::new(d.id)).collect();
        PeriodState {
            period: 0,
            drivers,
            history: bundle.history.clone(),
            open_requests: vec![Vec::new(); bundle.n_regions()],
            counters,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    /// `None` uses the scenario's own gap settings.
    pub milp: Option<MilpOptions>,
    /// Compute acceptance probabilities by quadrature instead of sampling.
    pub exact_mu: bool,
    pub record_events: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { milp: None, exact_mu: false, record_events: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventAction {
    /// Matched at period start without moving.
    Pickup,
    Accepted,
    SelfDirected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub period: usize,
    pub driver_id: DriverId,
    pub action: EventAction,
    pub from_region: RegionId,
    pub to_region: RegionId,
    pub allocated: bool,
}

/// Bandit update after a decision: a followed recommendation updates the
/// belief in the system, a self-directed move the belief in oneself.
pub fn record_outcome(agent: &mut DriverAgent, accepted: bool, allocated: bool, config: &ScenarioConfig) {
    let (e0, e1) = (config.epsilon0, config.epsilon1);
    if accepted {
        agent.belief_system = update_belief(agent.belief_system, allocated, e0, e1);
    } else {
        agent.belief_self = update_belief(agent.belief_self, allocated, e0, e1);
    }
}

fn stream(seed: u64, kind: &str, period: usize, driver: DriverId) -> StreamRng {
    seeded_rng(seed, &format!("{kind}/{period}/{driver}"))
}

struct Books<'a> {
    bundle: &'a ScenarioBundle,
    seed: u64,
    period: usize,
    m: PeriodMetrics,
}

impl Books<'_> {
    /// Puts `driver` on a trip from its region starting at `start`.
    fn start_trip(&mut self, driver: &mut DriverAgent, start: f64) {
        let b = self.bundle;
        let mut rng = stream(self.seed, "trip", self.period, driver.id);
        let row = &b.od[driver.region.0];
        let u: f64 = rand::Rng::random(&mut rng);
        let mut acc = 0.0;
        let dest = row
            .iter()
            .position(|p| {
                acc += p;
                u < acc
            })
            .unwrap_or_else(|| row.iter().rposition(|p| *p > 0.0).unwrap_or(driver.region.0));
        let dest = RegionId(dest);
        let (km, minutes) = if dest == driver.region {
            let km = b.intra_trip_km[dest.0];
            (km, km / b.speed_km_per_min)
        } else {
            (b.graph.distance(driver.region, dest), sample_travel_time(&b.graph, driver.region, dest, &mut rng))
        };
        let cfg = &b.config;
        let fare = cfg.fare(km);
        self.m.fares += fare;
        self.m.earnings += cfg.commission_rate * fare;
        self.m.driver_profit += (1.0 - cfg.commission_rate) * fare - cfg.cost_per_km * km;
        self.m.trip_km += km;
        driver.region = dest;
        driver.status = DriverStatus::OnTrip { arrival: start + minutes };
    }
}

/// Runs one planning period and returns the next state. On error the
/// input state is untouched.
pub fn run_period(
    state: &PeriodState,
    bundle: &ScenarioBundle,
    model: RebalanceModel,
    opts: &SimOptions,
    seed: u64,
    events: Option<&mut Vec<SimEvent>>,
) -> Result<(PeriodState, PeriodMetrics)> {
    let period = state.period;
    let cfg = &bundle.config;
    let h = cfg.horizon.minutes();
    let t0 = period as f64 * h;
    let t1 = t0 + h;
    let n = bundle.n_regions();
    let mut next = state.clone();
    let mut log: Vec<SimEvent> = Vec::new();
    let mut books = Books { bundle, seed, period, m: PeriodMetrics { period, ..Default::default() } };
    books.m.idle_arrivals = vec![0; n];

    // drivers whose trip or move has ended are available again
    for d in &mut next.drivers {
        match d.status {
            DriverStatus::Repositioning { arrival } | DriverStatus::OnTrip { arrival } if arrival <= t0 + 1e-9 => {
                d.status = DriverStatus::Idle
            }
            _ => {}
        }
    }

    // (1) demand
    let when = bundle.time_of(period);
    let forecast = forecast_demand(&SeasonalMean { window: cfg.window }, &next.history, when)?;
    let mut demand_rng = seeded_rng(seed, &format!("demand/{period}"));
    let arrivals = sample_demand(&bundle.demand_at(period), &mut demand_rng);
    for (j, &a) in arrivals.iter().enumerate() {
        next.history.push(
            j,
            DemandObservation { demand: a as f64, hour: when.hour, weekday: when.weekday, day_of_month: 0 },
        );
        next.open_requests[j] = vec![t0; a as usize];
    }
    books.m.arrived = arrivals.iter().sum();

    // (2) first batch: co-located idle drivers, ascending id
    let mut first_served = vec![0u32; n];
    for k in 0..next.drivers.len() {
        let d = &next.drivers[k];
        if !d.is_idle() || next.open_requests[d.region.0].is_empty() {
            continue;
        }
        let j = d.region.0;
        next.open_requests[j].remove(0);
        first_served[j] += 1;
        let from = d.region;
        let mut driver = next.drivers[k].clone();
        books.start_trip(&mut driver, t0);
        if opts.record_events {
            log.push(SimEvent { period, driver_id: driver.id, action: EventAction::Pickup, from_region: from, to_region: from, allocated: true });
        }
        next.drivers[k] = driver;
    }
    books.m.served_first_batch = first_served.iter().sum();
    books.m.served = books.m.served_first_batch;

    // (3) acceptance probability and preference of the remaining idle drivers
    // demand within reach of a repositioned driver: the requests still open
    // now or the forecast arrivals at the start of the next period
    let upcoming = forecast_demand(&SeasonalMean { window: cfg.window }, &next.history, bundle.time_of(period + 1))?;
    let nu: Vec<f64> = upcoming.iter().zip(&next.open_requests).map(|(f, o)| f.max(o.len() as f64)).collect();
    let mut features_by_origin = BTreeMap::new();
    let mut idle = Vec::new();
    for (k, d) in next.drivers.iter().enumerate() {
        if !d.is_idle() {
            continue;
        }
        let mu = match d.pinned_mu {
            Some(mu) => mu,
            None if opts.exact_mu => acceptance_probability_exact(d.belief_system, d.belief_self),
            None => {
                let mut rng = stream(seed, "mu", period, d.id);
                acceptance_probability(d.belief_system, d.belief_self, cfg.m, &mut rng)
            }
        };
        let preference = match &d.pinned_preference {
            Some(p) => p.clone(),
            None => {
                let feats = features_by_origin
                    .entry(d.region)
                    .or_insert_with(|| bundle.region_features(d.region, &forecast, when));
                preference_distribution(&d.preference, feats)?
            }
        };
        idle.push((k, IdleDriver { id: d.id, region: d.region, mu, preference }));
    }

    // (4) recommendations
    let mut recommendation: Vec<RegionId> = idle.iter().map(|(_, d)| d.region).collect();
    if !idle.is_empty() {
        let snap = FleetSnapshot::new(idle.iter().map(|(_, d)| d.clone()).collect(), nu, &bundle.graph, cfg)
            .map_err(|e| Error::Period { period, source: Box::new(e) })?;
        let milp = opts.milp.clone().unwrap_or_else(|| milp_options(cfg));
        match solve_model(model, &snap, &milp) {
            Ok(plan) => {
                books.m.solver_nodes = plan.nodes;
                for (slot, (_, d)) in recommendation.iter_mut().zip(&idle) {
                    *slot = plan.destination_of(d.id).expect("plan covers every idle driver");
                }
            }
            // proportional targets are undefined without demand: everyone stays
            Err(Error::RejectedSnapshot(msg)) if matches!(model, RebalanceModel::B2 | RebalanceModel::B3) => {
                log::debug!("period {period}: {model} skipped ({msg})");
            }
            Err(e) => return Err(Error::Period { period, source: Box::new(e) }),
        }
    }

    // (5)-(6) decisions and moves
    struct Move {
        k: usize,
        accepted: bool,
        arrival: f64,
        moved: bool,
        from: RegionId,
        dest: RegionId,
    }
    let mut moves = Vec::with_capacity(idle.len());
    for ((k, info), &rec) in idle.iter().zip(&recommendation) {
        let mut rng = stream(seed, "decision", period, info.id);
        let (accepted, dest) = sample_decision(rec, info.mu, &info.preference, &mut rng);
        let origin = info.region;
        if rec != origin {
            books.m.recommended += 1;
            next.counters[*k].recommended += 1;
            if accepted {
                books.m.accepted += 1;
                next.counters[*k].accepted += 1;
            }
        }
        let d = &mut next.drivers[*k];
        let mut arrival = t0;
        if dest != origin {
            let mut trng = stream(seed, "travel", period, info.id);
            arrival = t0 + sample_travel_time(&bundle.graph, origin, dest, &mut trng);
            let km = bundle.graph.distance(origin, dest);
            books.m.rebalance_km += km;
            books.m.driver_profit -= cfg.cost_per_km * km;
            d.region = dest;
            d.status = DriverStatus::Repositioning { arrival };
        }
        moves.push(Move { k: *k, accepted, arrival, moved: dest != origin, from: origin, dest });
    }

    // (7) arrivals within the period, first come first served
    let mut order: Vec<usize> = (0..moves.len()).filter(|&i| moves[i].arrival <= t1).collect();
    order.sort_by(|&a, &b| moves[a].arrival.total_cmp(&moves[b].arrival).then(moves[a].k.cmp(&moves[b].k)));
    let mut allocated = vec![false; moves.len()];
    for i in order {
        let mv = &moves[i];
        let j = next.drivers[mv.k].region.0;
        if next.open_requests[j].is_empty() {
            if mv.moved {
                books.m.idle_arrivals[j] += 1;
                next.drivers[mv.k].status = DriverStatus::Idle;
            }
            continue;
        }
        next.open_requests[j].remove(0);
        allocated[i] = true;
        books.m.served += 1;
        books.m.waiting_total_min += mv.arrival - t0;
        if mv.moved {
            books.m.allocated_after_rebalance += 1;
        }
        next.counters[mv.k].allocated += 1;
        let mut driver = next.drivers[mv.k].clone();
        books.start_trip(&mut driver, mv.arrival);
        next.drivers[mv.k] = driver;
    }

    // (8) bandit updates
    for (i, mv) in moves.iter().enumerate() {
        record_outcome(&mut next.drivers[mv.k], mv.accepted, allocated[i], cfg);
        if opts.record_events {
            let d = &next.drivers[mv.k];
            log.push(SimEvent {
                period,
                driver_id: d.id,
                action: if mv.accepted { EventAction::Accepted } else { EventAction::SelfDirected },
                from_region: mv.from,
                to_region: mv.dest,
                allocated: allocated[i],
            });
        }
    }

    // (9) unserved requests leave
    for r in &mut next.open_requests {
        r.clear();
    }

    // (10) metrics
    books.m.mean_waiting_min = (books.m.served > 0).then(|| books.m.waiting_total_min / books.m.served as f64);
    next.period += 1;
    if let Some(ev) = events {
        ev.extend(log);
    }
    Ok((next, books.m))
}

/// Runs `n_periods` periods of one model from the bundle's initial state.
pub fn simulate(
    bundle: &ScenarioBundle,
    model: RebalanceModel,
    n_periods: usize,
    seed: u64,
    opts: &SimOptions,
    mut events: Option<&mut Vec<SimEvent>>,
) -> Result<(PeriodState, SimMetrics)> {
    bundle.validate()?;
    let mut state = PeriodState::initial(bundle);
    let mut metrics = SimMetrics::default();
    for _ in 0..n_periods {
        let (s, m) = run_period(&state, bundle, model, opts, seed, events.as_deref_mut())?;
        state = s;
        metrics.periods.push(m);
    }
    metrics.drivers = state.counters.clone();
    Ok((state, metrics))
}
