//! Rebalancing recommenders: AAVR, baselines B1-B4 and the conversion of
//! aggregate flows into per-driver recommendations.

mod aavr;
mod baselines;
mod convert;
mod snapshot;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use aavr::{build_aavr, build_aavr_reduced, solve_aavr, solve_aavr_literal, solve_aavr_with, AavrProgram};
pub use baselines::{
    build_b1, build_b1_literal, build_b2, build_b2_literal, build_b3, build_b4, solve_b1, solve_b2, solve_b3, solve_b4,
    B4Layout, FlowPlan,
};
pub use convert::{build_conversion_program, flows_to_drivers};
pub use snapshot::{FleetSnapshot, IdleDriver};

use crate::domain::{DriverId, RegionId, ScenarioConfig};
use crate::error::{Error, Result};
use crate::solver::{LinearProgram, MilpOptions, Solution, SolveStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RebalanceModel {
    Aavr,
    B1,
    B2,
    B3,
    B4,
}

impl RebalanceModel {
    pub const ALL: [RebalanceModel; 5] =
        [RebalanceModel::Aavr, RebalanceModel::B1, RebalanceModel::B2, RebalanceModel::B3, RebalanceModel::B4];

    pub fn name(self) -> &'static str {
        match self {
            RebalanceModel::Aavr => "aavr",
            RebalanceModel::B1 => "b1",
            RebalanceModel::B2 => "b2",
            RebalanceModel::B3 => "b3",
            RebalanceModel::B4 => "b4",
        }
    }
}

impl fmt::Display for RebalanceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RebalanceModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RebalanceModel::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown model '{s}' (expected aavr, b1, b2, b3 or b4)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub driver_id: DriverId,
    pub from_region: RegionId,
    pub to_region: RegionId,
    pub expected_travel_min: f64,
}

impl Assignment {
    pub fn is_move(&self) -> bool {
        self.from_region != self.to_region
    }
}

/// Recommended region-to-region driver counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateFlow {
    pub counts: Vec<Vec<u32>>,
}

impl AggregateFlow {
    pub fn zeros(n: usize) -> Self {
        AggregateFlow { counts: vec![vec![0; n]; n] }
    }

    pub fn n_regions(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, from: RegionId, to: RegionId) -> u32 {
        self.counts[from.0][to.0]
    }

    pub fn outflow(&self, from: RegionId) -> u32 {
        self.counts[from.0].iter().sum()
    }

    /// Off-diagonal total.
    pub fn total_moves(&self) -> u32 {
        let mut t = 0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if i != j {
                    t += c;
                }
            }
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecommendationPlan {
    pub model: RebalanceModel,
    /// One entry per idle driver, ascending id; staying put is `to == from`.
    pub assignments: Vec<Assignment>,
    /// Expected post-decision supply per region under the adherence model.
    pub expected_supply: Vec<f64>,
    /// `min(expected supply, expected demand)` per region.
    pub expected_allocation: Vec<f64>,
    /// Optimum of the model's own objective.
    pub objective_value: f64,
    /// `Optimal`, or `NodeLimit` when the search budget ran out with an incumbent.
    pub status: SolveStatus,
    pub nodes: usize,
    /// Aggregate flow for the flow-level models.
    pub flow: Option<AggregateFlow>,
    /// AAVR allocation variables `Z_j` at the optimum.
    pub allocation_vars: Vec<f64>,
}

impl RecommendationPlan {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Drivers told to move into `region` from elsewhere.
    pub fn recommended_to(&self, region: RegionId) -> usize {
        self.assignments.iter().filter(|a| a.is_move() && a.to_region == region).count()
    }

    pub fn n_moves(&self) -> usize {
        self.assignments.iter().filter(|a| a.is_move()).count()
    }

    pub fn destination_of(&self, driver: DriverId) -> Option<RegionId> {
        self.assignments
            .binary_search_by_key(&driver, |a| a.driver_id)
            .ok()
            .map(|k| self.assignments[k].to_region)
    }

    /// Region-to-region counts of the plan, diagonal included.
    pub fn to_flow(&self, n_regions: usize) -> AggregateFlow {
        let mut f = AggregateFlow::zeros(n_regions);
        for a in &self.assignments {
            f.counts[a.from_region.0][a.to_region.0] += 1;
        }
        f
    }
}

pub(crate) fn plan_from_destinations(
    model: RebalanceModel,
    s: &FleetSnapshot<'_>,
    dest: &[RegionId],
    objective_value: f64,
    sol: &Solution,
) -> RecommendationPlan {
    let assignments = s
        .drivers
        .iter()
        .zip(dest)
        .map(|(d, &to)| Assignment {
            driver_id: d.id,
            from_region: d.region,
            to_region: to,
            expected_travel_min: s.graph.travel_time(d.region, to),
        })
        .collect();
    let expected_supply = s.expected_supply(dest);
    let expected_allocation = s.expected_allocation(&expected_supply);
    RecommendationPlan {
        model,
        assignments,
        expected_supply,
        expected_allocation,
        objective_value,
        status: sol.status,
        nodes: sol.nodes,
        flow: None,
        allocation_vars: Vec::new(),
    }
}

/// Accepts `Optimal`, and `NodeLimit` with an incumbent; anything else is an error.
pub(crate) fn require_solution(model: RebalanceModel, sol: &Solution) -> Result<()> {
    match sol.status {
        SolveStatus::Optimal => Ok(()),
        SolveStatus::NodeLimit if sol.has_values() => {
            log::info!("{model}: node budget exhausted after {} nodes; using best incumbent", sol.nodes);
            Ok(())
        }
        status => Err(Error::Solve { model: model.name().to_string(), status }),
    }
}

/// Branch-and-bound settings used by the recommenders under `cfg`.
pub fn milp_options(cfg: &ScenarioConfig) -> MilpOptions {
    MilpOptions { rel_gap: cfg.mip_rel_gap, node_limit: cfg.mip_node_limit, ..MilpOptions::default() }
}

/// The program `model` solves on the snapshot, for export.
pub fn build_model(model: RebalanceModel, s: &FleetSnapshot<'_>) -> Result<LinearProgram> {
    Ok(match model {
        RebalanceModel::Aavr => build_aavr_reduced(s)?.lp,
        RebalanceModel::B1 => build_b1(s)?.0,
        RebalanceModel::B2 => build_b2(s)?.0,
        RebalanceModel::B3 => build_b3(s)?.0,
        RebalanceModel::B4 => build_b4(s)?.0,
    })
}

/// Solves `model` on the snapshot.
pub fn solve_model(model: RebalanceModel, s: &FleetSnapshot<'_>, opts: &MilpOptions) -> Result<RecommendationPlan> {
    match model {
        RebalanceModel::Aavr => solve_aavr_with(s, opts),
        RebalanceModel::B1 => solve_b1(s, opts),
        RebalanceModel::B2 => solve_b2(s, opts),
        RebalanceModel::B3 => from_flow(RebalanceModel::B3, solve_b3(s, opts)?, s),
        RebalanceModel::B4 => from_flow(RebalanceModel::B4, solve_b4(s, opts)?, s),
    }
}

fn from_flow(model: RebalanceModel, fp: FlowPlan, s: &FleetSnapshot<'_>) -> Result<RecommendationPlan> {
    let mut plan = flows_to_drivers(model, &fp.flow, s)?;
    plan.objective_value = fp.objective_value;
    plan.status = fp.status;
    plan.nodes = fp.nodes;
    Ok(plan)
}
