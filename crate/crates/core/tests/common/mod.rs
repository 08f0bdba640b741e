#![allow(dead_code)]
//! Reference oracles shared by the integration suites.

use aavr_core::rebalance::{FleetSnapshot, IdleDriver};
use aavr_core::solver::{LinearProgram, Relation, Sense, VarKind};
use aavr_core::{DriverId, RegionGraph, RegionId};
use rand::Rng;

/// Exhaustive 2^n search over binaries, the reference optimum.
pub fn binary_oracle(lp: &LinearProgram) -> Option<f64> {
    let n = lp.n_vars();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
        if lp.constraints.iter().all(|c| c.violation(&x) <= 1e-9) {
            let v = lp.objective_value(&x);
            best = Some(match (best, lp.sense) {
                (None, _) => v,
                (Some(b), Sense::Maximize) => b.max(v),
                (Some(b), Sense::Minimize) => b.min(v),
            });
        }
    }
    best
}

pub fn random_binary_program(rng: &mut impl Rng, n: usize) -> LinearProgram {
    let sense = if rng.random_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let mut lp = LinearProgram::new(sense);
    for j in 0..n {
        lp.add_var(format!("b{j}"), 0.0, 1.0, VarKind::Binary, rng.random_range(-10..=10) as f64);
    }
    let rows = rng.random_range(1..=4);
    for i in 0..rows {
        let coeffs: Vec<(usize, f64)> = (0..n).map(|j| (j, rng.random_range(-3..=6) as f64)).collect();
        let total: f64 = coeffs.iter().map(|c| c.1.max(0.0)).sum();
        let rel = match rng.random_range(0..6) {
            0 => Relation::Ge,
            1 => Relation::Eq,
            _ => Relation::Le,
        };
        let rhs = (rng.random_range(0.2..0.7) * total).round();
        lp.add_constraint(format!("r{i}"), coeffs, rel, rhs);
    }
    lp
}

/// Problem-1 objective by exhaustive search over every reachable assignment.
pub fn brute_force(s: &FleetSnapshot<'_>) -> f64 {
    let n = s.n_regions();
    let c = s.drivers.len();
    let mut best = f64::NEG_INFINITY;
    let mut dest = vec![0usize; c];
    'outer: loop {
        let ok = (0..c).all(|k| s.graph.travel_time(s.drivers[k].region, RegionId(dest[k])) <= s.horizon());
        if ok {
            let mut supply = vec![0.0; n];
            let mut travel = 0.0;
            for (k, d) in s.drivers.iter().enumerate() {
                supply[dest[k]] += d.mu;
                for j in 0..n {
                    supply[j] += (1.0 - d.mu) * d.preference[j];
                }
                travel += s.graph.travel_time(d.region, RegionId(dest[k]));
            }
            let alloc: f64 = (0..n).map(|j| supply[j].min(s.demand[j])).sum();
            best = best.max(alloc - s.config.beta * travel);
        }
        for k in 0..c {
            dest[k] += 1;
            if dest[k] < n {
                continue 'outer;
            }
            dest[k] = 0;
        }
        return best;
    }
}

pub fn random_instance(rng: &mut impl Rng) -> (RegionGraph, Vec<IdleDriver>, Vec<f64>) {
    let n = rng.random_range(2..=3);
    let c = rng.random_range(1..=8);
    let mut t = vec![vec![0.0; n]; n];
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                t[i][j] = rng.random_range(1..=7) as f64;
                d[i][j] = t[i][j] * 0.5;
            }
        }
    }
    let g = RegionGraph::deterministic(d, t).unwrap();
    let drivers = (0..c)
        .map(|k| {
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            let mut pref: Vec<f64> = raw.iter().map(|p| p / total).collect();
            let drift: f64 = pref.iter().sum::<f64>() - 1.0;
            pref[0] -= drift;
            let mu = if rng.random_bool(0.3) { 0.5 } else { (rng.random::<f64>() * 10.0).round() / 10.0 };
            IdleDriver { id: DriverId(k * 3 + 1), region: RegionId(rng.random_range(0..n)), mu, preference: pref }
        })
        .collect();
    let demand = (0..n).map(|_| rng.random_range(0..=4) as f64).collect();
    (g, drivers, demand)
}

/// Highest-mu drivers first (ties by id) until their summed mu reaches
/// `demand`; returned ids ascend.
pub fn greedy_mu_prefix(mus: &[f64], demand: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..mus.len()).collect();
    order.sort_by(|&a, &b| mus[b].total_cmp(&mus[a]).then(a.cmp(&b)));
    let mut acc = 0.0;
    let mut prefix = Vec::new();
    for &k in &order {
        if acc >= demand {
            break;
        }
        acc += mus[k];
        prefix.push(k);
    }
    prefix.sort();
    prefix
}

/// Poisson-binomial PMF by summing over all 2^m success subsets.
pub fn pb_subset_oracle(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut pmf = vec![0.0; m + 1];
    for mask in 0u32..(1 << m) {
        let mut prob = 1.0;
        for (i, &pi) in p.iter().enumerate() {
            prob *= if (mask >> i) & 1 == 1 { pi } else { 1.0 - pi };
        }
        pmf[mask.count_ones() as usize] += prob;
    }
    pmf
}
