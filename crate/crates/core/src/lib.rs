pub mod behavior;
pub mod domain;
pub mod error;
pub mod io;
pub mod rebalance;
pub mod rng;
pub mod scenarios;
pub mod sim;
pub mod solver;
pub mod stochastic;

pub use domain::{reachability_fraction, DriverId, PlanningHorizon, RegionGraph, RegionId, ScenarioConfig};
pub use error::{Error, Result};
pub use rng::seeded_rng;
