//! Fixtures shared by the criterion benches.
use aavr_core::rebalance::IdleDriver;
use aavr_core::scenarios::ScenarioBundle;
use aavr_core::Result;

/// Idle drivers and mean demand of a scenario's first period.
pub fn first_period(bundle: &ScenarioBundle) -> Result<(Vec<IdleDriver>, Vec<f64>)> {
    Ok((bundle.initial_idle_drivers()?, bundle.demand_at(0).mean))
}

/// `n` success probabilities spread over (0, 1).
pub fn spread_probs(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}
