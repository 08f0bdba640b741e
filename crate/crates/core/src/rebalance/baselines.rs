//! Baselines B1-B4. None of them model adherence.
//!
//! B1 and B2 are agent-level, but their objectives and constraints only see
//! a driver through its origin, so they are solved over per-origin counts
//! `n_ij` and expanded by ascending driver id. The literal per-driver
//! programs are kept for cross-checks.

use super::snapshot::FleetSnapshot;
use super::{plan_from_destinations, require_solution, AggregateFlow, RebalanceModel, RecommendationPlan};
use crate::domain::RegionId;
use crate::error::{Error, Result};
use crate::solver::{solve_milp_with, LinearProgram, MilpOptions, Relation, Sense, SolveStatus, VarKind};

/// Outcome of a flow-level baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowPlan {
    pub flow: AggregateFlow,
    pub objective_value: f64,
    pub status: SolveStatus,
    pub nodes: usize,
}

/// Per-origin count variables `(from, to, var)`.
type CountVars = Vec<(RegionId, RegionId, usize)>;

fn expand_counts(s: &FleetSnapshot<'_>, vars: &CountVars, values: &[f64]) -> Vec<RegionId> {
    let mut dest: Vec<RegionId> = s.drivers.iter().map(|d| d.region).collect();
    let mut cursor = vec![0usize; s.n_regions()];
    let members: Vec<Vec<usize>> = (0..s.n_regions())
        .map(|i| (0..s.drivers.len()).filter(|&k| s.drivers[k].region.0 == i).collect())
        .collect();
    for &(i, j, v) in vars {
        let count = values[v].round() as usize;
        for _ in 0..count {
            let k = members[i.0][cursor[i.0]];
            cursor[i.0] += 1;
            dest[k] = j;
        }
    }
    dest
}

fn saturation_weight(s: &FleetSnapshot<'_>, i: RegionId, j: RegionId) -> f64 {
    1.0 - s.graph.travel_time(i, j) / s.horizon()
}

/// B1 over per-origin counts. Counts whose objective weight
/// `nu_j (1 - T_ij / H)` is zero are left out: they can only be zero-valued
/// or idle in an optimum, and leaving them out keeps those drivers in place.
pub fn build_b1(s: &FleetSnapshot<'_>) -> Result<(LinearProgram, CountVars)> {
    s.validate()?;
    let counts = s.idle_counts();
    let mut lp = LinearProgram::new(Sense::Maximize);
    let mut vars = CountVars::new();
    for i in s.graph.regions() {
        if counts[i.0] == 0 {
            continue;
        }
        for j in s.graph.regions() {
            let w = saturation_weight(s, i, j);
            let gain = s.demand[j.0] * w;
            if !s.reachable(i, j) || gain <= 0.0 {
                continue;
            }
            let v = lp.add_var(format!("n_{i}_{j}"), 0.0, counts[i.0] as f64, VarKind::Integer, gain);
            vars.push((i, j, v));
        }
    }
    for i in s.graph.regions() {
        let row: Vec<(usize, f64)> = vars.iter().filter(|t| t.0 == i).map(|t| (t.2, 1.0)).collect();
        if row.len() >= 2 {
            lp.add_constraint(format!("origin_{i}"), row, Relation::Le, counts[i.0] as f64);
        }
    }
    for j in s.graph.regions() {
        let row: Vec<(usize, f64)> =
            vars.iter().filter(|t| t.1 == j).map(|t| (t.2, saturation_weight(s, t.0, j))).collect();
        if !row.is_empty() {
            lp.add_constraint(format!("saturation_{j}"), row, Relation::Le, s.config.rho * s.demand[j.0]);
        }
    }
    Ok((lp, vars))
}

/// B1 with one binary per (driver, region).
pub fn build_b1_literal(s: &FleetSnapshot<'_>) -> Result<LinearProgram> {
    s.validate()?;
    let n = s.n_regions();
    let mut lp = LinearProgram::new(Sense::Maximize);
    for d in &s.drivers {
        for j in s.graph.regions() {
            let hi = if s.reachable(d.region, j) { 1.0 } else { 0.0 };
            let gain = s.demand[j.0] * saturation_weight(s, d.region, j);
            lp.add_var(format!("x_{}_{}", d.id, j), 0.0, hi, VarKind::Binary, gain);
        }
    }
    for (k, d) in s.drivers.iter().enumerate() {
        lp.add_constraint(format!("assign_{}", d.id), (0..n).map(|j| (k * n + j, 1.0)).collect(), Relation::Le, 1.0);
    }
    for j in s.graph.regions() {
        let row = s.drivers.iter().enumerate().map(|(k, d)| (k * n + j.0, saturation_weight(s, d.region, j))).collect();
        lp.add_constraint(format!("saturation_{j}"), row, Relation::Le, s.config.rho * s.demand[j.0]);
    }
    Ok(lp)
}

pub fn solve_b1(s: &FleetSnapshot<'_>, opts: &MilpOptions) -> Result<RecommendationPlan> {
    let (lp, vars) = build_b1(s)?;
    let sol = solve_milp_with(&lp, opts)?;
    require_solution(RebalanceModel::B1, &sol)?;
    let dest = expand_counts(s, &vars, &sol.values);
    Ok(plan_from_destinations(RebalanceModel::B1, s, &dest, sol.objective_value, &sol))
}

fn demand_shares(s: &FleetSnapshot<'_>) -> Result<Vec<f64>> {
    let total: f64 = s.demand.iter().sum();
    if total <= 0.0 {
        return Err(Error::RejectedSnapshot("total expected demand is zero; target shares are undefined".into()));
    }
    Ok(s.demand.iter().map(|d| d / total).collect())
}

fn b2_distance_weight(s: &FleetSnapshot<'_>) -> f64 {
    if s.config.b2_literal_sign {
        -s.config.beta
    } else {
        s.config.beta
    }
}

/// B2 over per-origin counts. The L1 deviation is carried by `t_j`, scaled
/// by the fleet size N. When the target is fractional a third row cuts
/// `|y - c|` down to its hull over integer `y`, which leaves the integer
/// optimum unchanged and makes the LP bound tight.
pub fn build_b2(s: &FleetSnapshot<'_>) -> Result<(LinearProgram, CountVars)> {
    s.validate()?;
    let shares = demand_shares(s)?;
    let counts = s.idle_counts();
    let fleet = s.drivers.len() as f64;
    let bw = b2_distance_weight(s);
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut vars = CountVars::new();
    for i in s.graph.regions() {
        if counts[i.0] == 0 {
            continue;
        }
        for j in s.graph.regions() {
            if !s.reachable(i, j) {
                continue;
            }
            let cost = bw * s.graph.distance(i, j);
            let v = lp.add_var(format!("n_{i}_{j}"), 0.0, counts[i.0] as f64, VarKind::Integer, cost);
            vars.push((i, j, v));
        }
    }
    let t0 = lp.n_vars();
    for j in 0..s.n_regions() {
        lp.add_var(format!("t_{j}"), 0.0, f64::INFINITY, VarKind::Continuous, 1.0 / fleet);
    }
    for i in s.graph.regions() {
        if counts[i.0] == 0 {
            continue;
        }
        let row = vars.iter().filter(|t| t.0 == i).map(|t| (t.2, 1.0)).collect();
        lp.add_constraint(format!("origin_{i}"), row, Relation::Eq, counts[i.0] as f64);
    }
    for j in s.graph.regions() {
        let inflow: Vec<(usize, f64)> = vars.iter().filter(|t| t.1 == j).map(|t| (t.2, 1.0)).collect();
        let target = fleet * shares[j.0];
        let mut above = vec![(t0 + j.0, 1.0)];
        above.extend(inflow.iter().map(|&(v, a)| (v, -a)));
        lp.add_constraint(format!("dev_hi_{j}"), above, Relation::Ge, -target);
        let mut below = vec![(t0 + j.0, 1.0)];
        below.extend(inflow.iter().copied());
        lp.add_constraint(format!("dev_lo_{j}"), below, Relation::Ge, target);
        let f = target.floor();
        if target - f > 1e-9 {
            let slope = 2.0 * f + 1.0 - 2.0 * target;
            let mut hull = vec![(t0 + j.0, 1.0)];
            hull.extend(inflow.iter().map(|&(v, a)| (v, -slope * a)));
            lp.add_constraint(format!("dev_hull_{j}"), hull, Relation::Ge, target - f - slope * f);
        }
    }
    Ok((lp, vars))
}

/// B2 with one binary per (driver, region) and unscaled deviations.
pub fn build_b2_literal(s: &FleetSnapshot<'_>) -> Result<LinearProgram> {
    s.validate()?;
    let shares = demand_shares(s)?;
    let n = s.n_regions();
    let fleet = s.drivers.len() as f64;
    let bw = b2_distance_weight(s);
    let mut lp = LinearProgram::new(Sense::Minimize);
    for d in &s.drivers {
        for j in s.graph.regions() {
            let hi = if s.reachable(d.region, j) { 1.0 } else { 0.0 };
            lp.add_var(format!("x_{}_{}", d.id, j), 0.0, hi, VarKind::Binary, bw * s.graph.distance(d.region, j));
        }
    }
    let t0 = lp.n_vars();
    for j in 0..n {
        lp.add_var(format!("t_{j}"), 0.0, f64::INFINITY, VarKind::Continuous, 1.0);
    }
    for (k, d) in s.drivers.iter().enumerate() {
        lp.add_constraint(format!("assign_{}", d.id), (0..n).map(|j| (k * n + j, 1.0)).collect(), Relation::Eq, 1.0);
    }
    for j in 0..n {
        let share: Vec<(usize, f64)> = (0..s.drivers.len()).map(|k| (k * n + j, 1.0 / fleet)).collect();
        let mut above = vec![(t0 + j, 1.0)];
        above.extend(share.iter().map(|&(v, a)| (v, -a)));
        lp.add_constraint(format!("dev_hi_{j}"), above, Relation::Ge, -shares[j]);
        let mut below = vec![(t0 + j, 1.0)];
        below.extend(share);
        lp.add_constraint(format!("dev_lo_{j}"), below, Relation::Ge, shares[j]);
    }
    Ok(lp)
}

pub fn solve_b2(s: &FleetSnapshot<'_>, opts: &MilpOptions) -> Result<RecommendationPlan> {
    if s.drivers.is_empty() {
        return Err(Error::RejectedSnapshot("B2 needs at least one idle driver".into()));
    }
    let (lp, vars) = build_b2(s)?;
    let sol = solve_milp_with(&lp, opts)?;
    require_solution(RebalanceModel::B2, &sol)?;
    let dest = expand_counts(s, &vars, &sol.values);
    Ok(plan_from_destinations(RebalanceModel::B2, s, &dest, sol.objective_value, &sol))
}

/// Off-diagonal flow variables `X_ij`, bounded by the idle count at i.
fn flow_vars(
    s: &FleetSnapshot<'_>,
    lp: &mut LinearProgram,
    cost: impl Fn(RegionId, RegionId) -> f64,
    reachable_only: bool,
) -> CountVars {
    let counts = s.idle_counts();
    let mut vars = CountVars::new();
    for i in s.graph.regions() {
        for j in s.graph.regions() {
            if i == j {
                continue;
            }
            let hi = if counts[i.0] == 0 || (reachable_only && !s.reachable(i, j)) { 0.0 } else { counts[i.0] as f64 };
            let v = lp.add_var(format!("X_{i}_{j}"), 0.0, hi, VarKind::Integer, cost(i, j));
            vars.push((i, j, v));
        }
    }
    vars
}

/// `inflow - outflow` coefficients of region i, or nothing under the
/// literal reading whose net term cancels.
fn net_inflow(s: &FleetSnapshot<'_>, vars: &CountVars, i: RegionId) -> Vec<(usize, f64)> {
    if s.config.literal_balance {
        return Vec::new();
    }
    vars.iter()
        .filter_map(|&(a, b, v)| {
            if b == i {
                Some((v, 1.0))
            } else if a == i {
                Some((v, -1.0))
            } else {
                None
            }
        })
        .collect()
}

fn outflow_rows(s: &FleetSnapshot<'_>, lp: &mut LinearProgram, vars: &CountVars) {
    let counts = s.idle_counts();
    for i in s.graph.regions() {
        let row: Vec<(usize, f64)> = vars.iter().filter(|t| t.0 == i).map(|t| (t.2, 1.0)).collect();
        lp.add_constraint(format!("outflow_{i}"), row, Relation::Le, counts[i.0] as f64);
    }
}

fn flow_from(s: &FleetSnapshot<'_>, vars: &CountVars, values: &[f64]) -> AggregateFlow {
    let mut f = AggregateFlow::zeros(s.n_regions());
    for &(i, j, v) in vars {
        f.counts[i.0][j.0] = values[v].round() as u32;
    }
    f
}

/// B3: cheapest integer flows reaching the demand-proportional distribution.
/// Travel time does not restrict the flows. Targets are rounded down: the
/// fractional targets sum to N, so their ceilings cannot all be met.
pub fn build_b3(s: &FleetSnapshot<'_>) -> Result<(LinearProgram, CountVars)> {
    s.validate()?;
    let shares = demand_shares(s)?;
    let counts = s.idle_counts();
    let fleet = s.drivers.len() as f64;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let vars = flow_vars(s, &mut lp, |i, j| s.graph.travel_time(i, j), false);
    for i in s.graph.regions() {
        let row = net_inflow(s, &vars, i);
        lp.add_constraint(format!("balance_{i}"), row, Relation::Ge, (shares[i.0] * fleet + 1e-9).floor() - counts[i.0] as f64);
    }
    outflow_rows(s, &mut lp, &vars);
    Ok((lp, vars))
}

pub fn solve_b3(s: &FleetSnapshot<'_>, opts: &MilpOptions) -> Result<FlowPlan> {
    let (lp, vars) = build_b3(s)?;
    let sol = solve_milp_with(&lp, opts)?;
    require_solution(RebalanceModel::B3, &sol)?;
    Ok(FlowPlan { flow: flow_from(s, &vars, &sol.values), objective_value: sol.objective_value, status: sol.status, nodes: sol.nodes })
}

/// B4 variable layout, for inspection in tests.
pub struct B4Layout {
    pub flows: CountVars,
    /// `(passenger region, driver region, var)`
    pub serves: Vec<(RegionId, RegionId, usize)>,
    pub supply: Vec<usize>,
    pub unserved: Vec<usize>,
}

/// B4: travel distance plus a penalty `gamma` per unserved request. Drivers
/// only serve passengers in regions at zero travel time from them.
pub fn build_b4(s: &FleetSnapshot<'_>) -> Result<(LinearProgram, B4Layout)> {
    s.validate()?;
    let counts = s.idle_counts();
    let gamma = s.config.gamma_for(s.graph);
    let mut lp = LinearProgram::new(Sense::Minimize);
    let flows = flow_vars(s, &mut lp, |i, j| s.graph.distance(i, j), true);
    let mut serves = Vec::new();
    for i in s.graph.regions() {
        for j in s.graph.regions() {
            // Y_ij: passengers of i served by drivers of j, only within zero travel time
            if s.graph.travel_time(i, j) > 0.0 {
                continue;
            }
            let cost = s.config.beta_b4 * s.graph.distance(j, i);
            let v = lp.add_var(format!("Y_{i}_{j}"), 0.0, s.demand[i.0], VarKind::Integer, cost);
            serves.push((i, j, v));
        }
    }
    let supply: Vec<usize> = (0..s.n_regions())
        .map(|i| lp.add_var(format!("S_{i}"), f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous, 0.0))
        .collect();
    let unserved: Vec<usize> = (0..s.n_regions())
        .map(|i| lp.add_var(format!("T_{i}"), f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous, gamma))
        .collect();
    for i in s.graph.regions() {
        // drivers of i serve at most S_i passengers
        let mut row: Vec<(usize, f64)> = serves.iter().filter(|t| t.1 == i).map(|t| (t.2, 1.0)).collect();
        row.push((supply[i.0], -1.0));
        lp.add_constraint(format!("serve_cap_{i}"), row, Relation::Le, 0.0);
        let row: Vec<(usize, f64)> = serves.iter().filter(|t| t.0 == i).map(|t| (t.2, 1.0)).collect();
        lp.add_constraint(format!("demand_cap_{i}"), row.clone(), Relation::Le, s.demand[i.0]);
        let mut row_t = row;
        row_t.push((unserved[i.0], 1.0));
        lp.add_constraint(format!("unserved_{i}"), row_t, Relation::Eq, s.demand[i.0]);
        let mut row_s: Vec<(usize, f64)> = net_inflow(s, &flows, i).into_iter().map(|(v, a)| (v, -a)).collect();
        row_s.push((supply[i.0], 1.0));
        lp.add_constraint(format!("supply_{i}"), row_s, Relation::Eq, counts[i.0] as f64);
    }
    outflow_rows(s, &mut lp, &flows);
    Ok((lp, B4Layout { flows, serves, supply, unserved }))
}

pub fn solve_b4(s: &FleetSnapshot<'_>, opts: &MilpOptions) -> Result<FlowPlan> {
    let (lp, layout) = build_b4(s)?;
    let sol = solve_milp_with(&lp, opts)?;
    require_solution(RebalanceModel::B4, &sol)?;
    Ok(FlowPlan {
        flow: flow_from(s, &layout.flows, &sol.values),
        objective_value: sol.objective_value,
        status: sol.status,
        nodes: sol.nodes,
    })
}
