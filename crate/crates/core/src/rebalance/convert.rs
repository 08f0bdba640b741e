//! Aggregate flows to per-driver recommendations.

use super::snapshot::FleetSnapshot;
use super::{AggregateFlow, Assignment, RebalanceModel, RecommendationPlan};
use crate::domain::RegionId;
use crate::error::{Error, Result};
use crate::solver::{LinearProgram, Relation, Sense, SolveStatus, VarKind};

fn check_flow(flow: &AggregateFlow, s: &FleetSnapshot<'_>) -> Result<Vec<usize>> {
    let n = s.n_regions();
    if flow.n_regions() != n || flow.counts.iter().any(|r| r.len() != n) {
        return Err(Error::invalid(format!("flow table must be {n}x{n}")));
    }
    let counts = s.idle_counts();
    for i in s.graph.regions() {
        let out: u32 = (0..n).filter(|&j| j != i.0).map(|j| flow.counts[i.0][j]).sum();
        if out as usize > counts[i.0] {
            return Err(Error::RejectedSnapshot(format!(
                "flow out of region {i} is {out} but only {} drivers are idle there",
                counts[i.0]
            )));
        }
    }
    Ok(counts)
}

/// Feasibility program: binary `x_cj` for each driver c and region j other
/// than its own, with `sum_{c in i} x_cj = X_ij` per (i, j) and at most one
/// destination per driver.
pub fn build_conversion_program(flow: &AggregateFlow, s: &FleetSnapshot<'_>) -> Result<LinearProgram> {
    check_flow(flow, s)?;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut by_pair: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); s.n_regions()]; s.n_regions()];
    for d in &s.drivers {
        let mut row = Vec::new();
        for j in s.graph.regions() {
            if j == d.region {
                continue;
            }
            let v = lp.add_var(format!("x_{}_{}", d.id, j), 0.0, 1.0, VarKind::Binary, 0.0);
            by_pair[d.region.0][j.0].push(v);
            row.push((v, 1.0));
        }
        if !row.is_empty() {
            lp.add_constraint(format!("one_{}", d.id), row, Relation::Le, 1.0);
        }
    }
    for i in s.graph.regions() {
        for j in s.graph.regions() {
            let vars = &by_pair[i.0][j.0];
            if i == j || (vars.is_empty() && flow.get(i, j) == 0) {
                continue;
            }
            let row = vars.iter().map(|&v| (v, 1.0)).collect();
            lp.add_constraint(format!("flow_{i}_{j}"), row, Relation::Eq, flow.get(i, j) as f64);
        }
    }
    Ok(lp)
}

/// Assigns `X_ij` drivers of region i to region j, taking drivers in
/// ascending id and destinations in ascending index. Everyone else stays.
/// The diagonal of `flow` is ignored.
pub fn flows_to_drivers(
    model: RebalanceModel,
    flow: &AggregateFlow,
    s: &FleetSnapshot<'_>,
) -> Result<RecommendationPlan> {
    let counts = check_flow(flow, s)?;
    let n = s.n_regions();
    let mut dest: Vec<RegionId> = s.drivers.iter().map(|d| d.region).collect();
    for i in 0..n {
        let mut members = (0..s.drivers.len()).filter(|&k| s.drivers[k].region.0 == i);
        for j in (0..n).filter(|&j| j != i) {
            for _ in 0..flow.counts[i][j] {
                let k = members.next().expect("outflow checked against population");
                dest[k] = RegionId(j);
            }
        }
    }
    let assignments: Vec<Assignment> = s
        .drivers
        .iter()
        .zip(&dest)
        .map(|(d, &to)| Assignment {
            driver_id: d.id,
            from_region: d.region,
            to_region: to,
            expected_travel_min: s.graph.travel_time(d.region, to),
        })
        .collect();
    let expected_supply = s.expected_supply(&dest);
    let expected_allocation = s.expected_allocation(&expected_supply);
    let mut realized = flow.clone();
    for (i, row) in realized.counts.iter_mut().enumerate() {
        let out: u32 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, c)| c).sum();
        row[i] = counts[i] as u32 - out;
    }
    Ok(RecommendationPlan {
        model,
        assignments,
        expected_supply,
        expected_allocation,
        objective_value: 0.0,
        status: SolveStatus::Optimal,
        nodes: 0,
        flow: Some(realized),
        allocation_vars: Vec::new(),
    })
}
