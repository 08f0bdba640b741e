//! Supply aggregation, demand and travel-time models.

mod demand;
mod poisson_binomial;
mod travel;

pub use demand::{
    estimate_residual_stddev, forecast_demand, sample_demand, DemandHistory, DemandModel, DemandObservation,
    Forecaster, SeasonalMean, TimeContext,
};
pub use poisson_binomial::{pb_expectation, pb_pmf, pb_variance, PoissonBinomial};
pub use travel::{driver_travel_time, sample_travel_time, shortest_path_tables, RoadEdge};
