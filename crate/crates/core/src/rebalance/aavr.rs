//! The adherence-aware recommender.
//!
//! `build_aavr` emits the per-driver program with binary `x_cj` and
//! allocation variables `Z_j`. `solve_aavr` solves an equivalent, smaller
//! program: drivers sharing origin, acceptance probability and preference are
//! interchangeable, so each such group gets one integer count per reachable
//! destination other than its origin, and the "stay" count is eliminated
//! through the group size.

use std::collections::BTreeMap;

use super::snapshot::FleetSnapshot;
use super::{milp_options, plan_from_destinations, require_solution, RebalanceModel, RecommendationPlan};
use crate::domain::RegionId;
use crate::error::{Error, Result};
use crate::solver::{solve_milp_with, LinearProgram, MilpOptions, Relation, Sense, Solution, VarKind};

/// Per-driver program: variable `j + k * n_regions` is `x` for the k-th
/// driver (ascending id) and region j; `Z_j` follow after all `x`.
pub fn build_aavr(s: &FleetSnapshot<'_>) -> Result<LinearProgram> {
    s.validate()?;
    let n = s.n_regions();
    let beta = s.config.beta;
    let mut lp = LinearProgram::new(Sense::Maximize);
    for d in &s.drivers {
        for j in s.graph.regions() {
            let t = s.graph.travel_time(d.region, j);
            let hi = if s.reachable(d.region, j) { 1.0 } else { 0.0 };
            lp.add_var(format!("x_{}_{}", d.id, j), 0.0, hi, VarKind::Binary, -beta * t);
        }
    }
    let z0 = lp.n_vars();
    for j in 0..n {
        lp.add_var(format!("z_{j}"), 0.0, s.demand[j], VarKind::Continuous, 1.0);
    }
    for (k, d) in s.drivers.iter().enumerate() {
        lp.add_constraint(format!("assign_{}", d.id), (0..n).map(|j| (k * n + j, 1.0)).collect(), Relation::Eq, 1.0);
    }
    for j in 0..n {
        let mut coeffs = vec![(z0 + j, 1.0)];
        let mut rhs = 0.0;
        for (k, d) in s.drivers.iter().enumerate() {
            if d.mu != 0.0 {
                coeffs.push((k * n + j, -d.mu));
            }
            rhs += (1.0 - d.mu) * d.preference[j];
        }
        lp.add_constraint(format!("supply_{j}"), coeffs, Relation::Le, rhs);
    }
    Ok(lp)
}

struct Group {
    origin: RegionId,
    mu: f64,
    /// Indices into `FleetSnapshot::drivers`, ascending id.
    members: Vec<usize>,
    /// Reachable destinations other than the origin, ascending, with their variable.
    options: Vec<(RegionId, usize)>,
}

/// The grouped program plus the bookkeeping needed to expand its solution.
pub struct AavrProgram {
    pub lp: LinearProgram,
    groups: Vec<Group>,
    z0: usize,
}

impl AavrProgram {
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }
}

pub fn build_aavr_reduced(s: &FleetSnapshot<'_>) -> Result<AavrProgram> {
    s.validate()?;
    let n = s.n_regions();
    let beta = s.config.beta;

    let mut index: BTreeMap<(usize, u64, Vec<u64>), usize> = BTreeMap::new();
    let mut groups: Vec<Group> = Vec::new();
    for (k, d) in s.drivers.iter().enumerate() {
        let key = (d.region.0, d.mu.to_bits(), d.preference.iter().map(|p| p.to_bits()).collect());
        let g = *index.entry(key).or_insert_with(|| {
            groups.push(Group { origin: d.region, mu: d.mu, members: Vec::new(), options: Vec::new() });
            groups.len() - 1
        });
        groups[g].members.push(k);
    }

    let mut lp = LinearProgram::new(Sense::Maximize);
    for (g, grp) in groups.iter_mut().enumerate() {
        let size = grp.members.len() as f64;
        for j in s.graph.regions() {
            if j == grp.origin || !s.reachable(grp.origin, j) {
                continue;
            }
            let t = s.graph.travel_time(grp.origin, j);
            let v = lp.add_var(format!("n_{g}_{j}"), 0.0, size, VarKind::Integer, -beta * t);
            grp.options.push((j, v));
        }
    }
    let z0 = lp.n_vars();
    for j in 0..n {
        lp.add_var(format!("z_{j}"), 0.0, s.demand[j], VarKind::Continuous, 1.0);
    }
    for (g, grp) in groups.iter().enumerate() {
        if grp.options.len() >= 2 {
            let coeffs = grp.options.iter().map(|&(_, v)| (v, 1.0)).collect();
            lp.add_constraint(format!("group_{g}"), coeffs, Relation::Le, grp.members.len() as f64);
        }
    }
    // Z_j <= sum_g mu_g n_gj + mu_g (|g| - sum_k n_gk)[o_g = j] + |g| (1 - mu_g) L_gj
    let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|j| vec![(z0 + j, 1.0)]).collect();
    let mut rhs = vec![0.0; n];
    for grp in &groups {
        let size = grp.members.len() as f64;
        let pref = &s.drivers[grp.members[0]].preference;
        for j in 0..n {
            rhs[j] += size * (1.0 - grp.mu) * pref[j];
        }
        rhs[grp.origin.0] += size * grp.mu;
        if grp.mu == 0.0 {
            continue;
        }
        for &(j, v) in &grp.options {
            rows[j.0].push((v, -grp.mu));
            rows[grp.origin.0].push((v, grp.mu));
        }
    }
    for (j, (coeffs, b)) in rows.into_iter().zip(rhs).enumerate() {
        lp.add_constraint(format!("supply_{j}"), coeffs, Relation::Le, b);
    }
    Ok(AavrProgram { lp, groups, z0 })
}

/// Problem-1 objective at a per-driver assignment.
fn direct_objective(s: &FleetSnapshot<'_>, dest: &[RegionId]) -> f64 {
    let supply = s.expected_supply(dest);
    let alloc: f64 = s.expected_allocation(&supply).iter().sum();
    let travel: f64 = s.drivers.iter().zip(dest).map(|(d, &j)| s.graph.travel_time(d.region, j)).sum();
    alloc - s.config.beta * travel
}

/// Sends a recommended driver back to its origin whenever that does not
/// lower the objective; the travel term makes such a move a strict gain.
fn drop_redundant(s: &FleetSnapshot<'_>, dest: &mut [RegionId]) {
    let mut supply = s.expected_supply(dest);
    let alloc = |j: usize, v: f64| v.min(s.demand[j]);
    let mut movers: Vec<usize> = (0..s.drivers.len()).filter(|&k| dest[k] != s.drivers[k].region).collect();
    movers.sort_by(|&a, &b| s.drivers[a].mu.total_cmp(&s.drivers[b].mu).then(s.drivers[b].id.cmp(&s.drivers[a].id)));
    for k in movers {
        let (o, j, mu) = (s.drivers[k].region.0, dest[k].0, s.drivers[k].mu);
        let delta = alloc(j, supply[j] - mu) - alloc(j, supply[j]) + alloc(o, supply[o] + mu) - alloc(o, supply[o])
            + s.config.beta * s.graph.travel_time(RegionId(o), RegionId(j));
        if delta >= -1e-12 {
            dest[k] = RegionId(o);
            supply[j] -= mu;
            supply[o] += mu;
        }
    }
}

/// Among equally good assignments, prefer recommending drivers with higher
/// acceptance probability (then lower id). Swaps a recommended driver with a
/// stayer from the same origin whenever that does not lower the objective.
fn prefer_confident(s: &FleetSnapshot<'_>, dest: &mut [RegionId]) {
    let n = s.n_regions();
    let mut supply = s.expected_supply(dest);
    let alloc = |j: usize, v: f64| v.min(s.demand[j]);
    let better = |a: usize, b: usize| {
        let (da, db) = (&s.drivers[a], &s.drivers[b]);
        da.mu > db.mu || (da.mu == db.mu && da.id < db.id)
    };
    let rank = |a: usize, b: usize| {
        let (da, db) = (&s.drivers[a], &s.drivers[b]);
        db.mu.total_cmp(&da.mu).then(da.id.cmp(&db.id))
    };
    for o in 0..n {
        loop {
            let mut stayers: Vec<usize> = (0..s.drivers.len())
                .filter(|&k| s.drivers[k].region.0 == o && dest[k].0 == o)
                .collect();
            let mut movers: Vec<usize> = (0..s.drivers.len())
                .filter(|&k| s.drivers[k].region.0 == o && dest[k].0 != o)
                .collect();
            if stayers.is_empty() || movers.is_empty() {
                break;
            }
            // best stayers first, worst movers first
            stayers.sort_by(|&a, &b| rank(a, b));
            movers.sort_by(|&a, &b| rank(b, a));
            let mut swapped = false;
            'search: for &m in &movers {
                for &st in &stayers {
                    if !better(st, m) {
                        break;
                    }
                    let j = dest[m].0;
                    let d = s.drivers[st].mu - s.drivers[m].mu;
                    let delta = alloc(j, supply[j] + d) - alloc(j, supply[j]) + alloc(o, supply[o] - d)
                        - alloc(o, supply[o]);
                    if delta >= -1e-12 {
                        dest[st] = RegionId(j);
                        dest[m] = RegionId(o);
                        supply[j] += d;
                        supply[o] -= d;
                        swapped = true;
                        break 'search;
                    }
                }
            }
            if !swapped {
                break;
            }
        }
    }
}

fn finish(
    s: &FleetSnapshot<'_>,
    mut dest: Vec<RegionId>,
    sol: &Solution,
    z: Vec<f64>,
) -> RecommendationPlan {
    let before = dest.clone();
    drop_redundant(s, &mut dest);
    prefer_confident(s, &mut dest);
    let objective = direct_objective(s, &dest);
    let mut plan = plan_from_destinations(RebalanceModel::Aavr, s, &dest, objective, sol);
    // an exchange yields another optimum whose Z is its own expected allocation
    plan.allocation_vars = if dest == before { z } else { plan.expected_allocation.clone() };
    plan
}

pub fn solve_aavr(s: &FleetSnapshot<'_>) -> Result<RecommendationPlan> {
    solve_aavr_with(s, &milp_options(s.config))
}

pub fn solve_aavr_with(s: &FleetSnapshot<'_>, opts: &MilpOptions) -> Result<RecommendationPlan> {
    let prog = build_aavr_reduced(s)?;
    let sol = solve_milp_with(&prog.lp, opts)?;
    require_solution(RebalanceModel::Aavr, &sol)?;
    let mut dest: Vec<RegionId> = s.drivers.iter().map(|d| d.region).collect();
    for grp in &prog.groups {
        let mut next = grp.members.iter();
        for &(j, v) in &grp.options {
            let count = sol.values[v].round() as usize;
            for _ in 0..count {
                let k = *next.next().ok_or_else(|| Error::Certificate { violation: 1.0 })?;
                dest[k] = j;
            }
        }
    }
    let z = sol.values[prog.z0..prog.z0 + s.n_regions()].to_vec();
    Ok(finish(s, dest, &sol, z))
}

/// Solves the per-driver program directly; exponential in practice, meant
/// for small instances and cross-checks.
pub fn solve_aavr_literal(s: &FleetSnapshot<'_>, opts: &MilpOptions) -> Result<RecommendationPlan> {
    let lp = build_aavr(s)?;
    let sol = solve_milp_with(&lp, opts)?;
    require_solution(RebalanceModel::Aavr, &sol)?;
    let n = s.n_regions();
    let dest: Vec<RegionId> = (0..s.drivers.len())
        .map(|k| RegionId((0..n).find(|&j| sol.values[k * n + j] > 0.5).expect("assignment row")))
        .collect();
    let z0 = s.drivers.len() * n;
    let z = sol.values[z0..z0 + n].to_vec();
    Ok(finish(s, dest, &sol, z))
}
