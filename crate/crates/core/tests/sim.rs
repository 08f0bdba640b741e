use aavr_core::behavior::{BetaBelief, DriverAgent, PreferenceModel};
use aavr_core::rebalance::RebalanceModel;
use aavr_core::scenarios::{case_study_1, synthetic_network, ScenarioBundle};
use aavr_core::sim::{record_outcome, run_experiment, run_period, simulate, EventAction, PeriodState, SimOptions};
use aavr_core::stochastic::DemandModel;
use aavr_core::{DriverId, RegionGraph, RegionId, ScenarioConfig};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Case Study 1 geometry with one request at B and a single driver there.
fn one_on_one() -> ScenarioBundle {
    let mut b = case_study_1();
    let mut d = b.drivers[0].clone();
    d.region = RegionId(1);
    b.drivers = vec![d];
    b.demand = DemandModel::new(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
    b
}

#[test]
fn zero_drivers_serve_nothing() {
    let mut b = case_study_1();
    b.drivers.clear();
    for model in RebalanceModel::ALL {
        let (_, m) = simulate(&b, model, 2, 1, &SimOptions::default(), None).unwrap();
        let s = m.summary(&b.name, model, 1);
        assert_eq!(s.arrived, 200);
        assert_eq!(s.served, 0);
        assert_eq!(s.mean_waiting_min, None);
        assert_eq!(s.earnings, 0.0);
    }
}

#[test]
fn co_located_driver_serves_at_once() {
    let b = one_on_one();
    let (state, m) = simulate(&b, RebalanceModel::Aavr, 1, 3, &SimOptions::default(), None).unwrap();
    let p = &m.periods[0];
    assert_eq!((p.arrived, p.served, p.served_first_batch), (1, 1, 1));
    assert_eq!(p.mean_waiting_min, Some(0.0));
    // B -> B is an intra-region trip of 3 km
    let fare = b.config.fare_base + b.config.fare_per_km * 3.0;
    assert!(close(p.fares, fare));
    assert!(close(p.earnings, b.config.commission_rate * fare));
    assert!(!state.drivers[0].is_idle());
}

#[test]
fn period_accounting_holds() {
    let b = synthetic_network(6, 40, 5).unwrap();
    let cfg = &b.config;
    for model in RebalanceModel::ALL {
        let (_, m) = simulate(&b, model, 12, 9, &SimOptions::default(), None).unwrap();
        for p in &m.periods {
            assert!(p.served <= p.arrived);
            assert!(p.served_first_batch <= p.served);
            assert!(p.accepted <= p.recommended);
            assert!(close(p.earnings, cfg.commission_rate * p.fares));
            let profit = (1.0 - cfg.commission_rate) * p.fares - cfg.cost_per_km * (p.rebalance_km + p.trip_km);
            assert!(close(p.driver_profit, profit), "{model} period {}", p.period);
        }
        let rec: u32 = m.periods.iter().map(|p| p.recommended).sum();
        assert_eq!(rec, m.drivers.iter().map(|d| d.recommended).sum::<u32>());
    }
}

#[test]
fn drivers_are_conserved() {
    let b = synthetic_network(5, 30, 2).unwrap();
    let (state, _) = simulate(&b, RebalanceModel::Aavr, 10, 4, &SimOptions::default(), None).unwrap();
    let mut ids: Vec<DriverId> = state.drivers.iter().map(|d| d.id).collect();
    ids.dedup();
    assert_eq!(ids.len(), 30);
    assert!(state.drivers.iter().all(|d| d.region.0 < 5));
}

#[test]
fn same_seed_same_table() {
    let b = synthetic_network(5, 30, 2).unwrap();
    let models = [RebalanceModel::Aavr, RebalanceModel::B3];
    let a = run_experiment(&b, &models, 6, &[1, 2], &SimOptions::default()).unwrap();
    let c = run_experiment(&b, &models, 6, &[1, 2], &SimOptions::default()).unwrap();
    assert_eq!(a, c);
    assert_eq!(a.runs.len(), 4);
    assert_eq!(a.averages.len(), 2);
}

#[test]
fn period_leaves_input_state_alone() {
    let b = synthetic_network(4, 20, 8).unwrap();
    let s0 = PeriodState::initial(&b);
    let copy = s0.clone();
    let (s1, _) = run_period(&s0, &b, RebalanceModel::Aavr, &SimOptions::default(), 5, None).unwrap();
    assert_eq!(s0, copy);
    assert_eq!(s1.period, 1);
}

#[test]
fn outcome_updates_the_matching_belief() {
    let cfg = ScenarioConfig::default();
    let mut d = DriverAgent::new(DriverId(0), RegionId(0), PreferenceModel::zeros(1));
    record_outcome(&mut d, true, true, &cfg);
    assert_eq!(d.belief_system, BetaBelief::new(2.0, 1.0).unwrap());
    assert_eq!(d.belief_self, BetaBelief::default());
    record_outcome(&mut d, false, false, &cfg);
    assert_eq!(d.belief_self, BetaBelief::new(1.0, 2.0).unwrap());
    assert_eq!(d.belief_system, BetaBelief::new(2.0, 1.0).unwrap());
}

#[test]
fn full_compliance_serves_all_of_b() {
    let mut aavr = case_study_1();
    for d in &mut aavr.drivers {
        d.pinned_mu = Some(1.0);
    }
    let (_, m) = simulate(&aavr, RebalanceModel::Aavr, 1, 7, &SimOptions::default(), None).unwrap();
    assert_eq!(m.periods[0].served, 100);
    assert_eq!(m.periods[0].idle_arrivals, vec![0, 0]);

    let mut b1 = aavr.clone();
    b1.graph = RegionGraph::deterministic(vec![vec![0.0, 2.0], vec![2.0, 0.0]], vec![vec![0.0; 2]; 2]).unwrap();
    b1.config.rho = 1.0;
    let (_, m) = simulate(&b1, RebalanceModel::B1, 1, 7, &SimOptions::default(), None).unwrap();
    assert_eq!(m.periods[0].recommended, 100);
    assert_eq!(m.periods[0].served, 100);
}

#[test]
fn event_log_covers_every_decision() {
    let b = case_study_1();
    let opts = SimOptions { record_events: true, ..SimOptions::default() };
    let mut events = Vec::new();
    let (_, m) = simulate(&b, RebalanceModel::Aavr, 1, 11, &opts, Some(&mut events)).unwrap();
    assert_eq!(events.len(), 1000);
    let accepted = events.iter().filter(|e| e.action == EventAction::Accepted && e.to_region == RegionId(1)).count();
    assert_eq!(accepted as u32, m.periods[0].accepted);
    let allocated = events.iter().filter(|e| e.allocated).count() as u32;
    assert_eq!(allocated, m.periods[0].served);
}
