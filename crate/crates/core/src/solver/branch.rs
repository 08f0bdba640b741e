//! Branch-and-bound over the simplex relaxation: a depth-first dive to the
//! first incumbent, best-bound afterwards.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::model::{LinearProgram, Sense, Solution, SolveStatus};
use super::simplex::solve_relaxation;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MilpOptions {
    /// Number of LP relaxations solved before giving up with `NodeLimit`.
    pub node_limit: usize,
    pub abs_gap: f64,
    /// Relative gap on the incumbent objective; 0 proves exact optimality.
    pub rel_gap: f64,
    pub integrality_tol: f64,
    pub feasibility_tol: f64,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            node_limit: 200_000,
            abs_gap: 1e-9,
            rel_gap: 0.0,
            integrality_tol: 1e-7,
            feasibility_tol: 1e-7,
        }
    }
}

struct Node {
    /// Relaxation objective in minimization form.
    bound: f64,
    id: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap pops the greatest: smallest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

enum Eval {
    Pruned,
    Integral(Vec<f64>, f64),
    Open(Vec<f64>, f64),
    Failed(SolveStatus),
}

/// Index of the most fractional integral variable, lowest index on ties.
fn branching_variable(lp: &LinearProgram, x: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, v) in lp.variables.iter().enumerate() {
        if !v.kind.is_integral() {
            continue;
        }
        let frac = x[j] - x[j].floor();
        let dist = frac.min(1.0 - frac);
        if dist <= tol {
            continue;
        }
        match best {
            Some((_, d)) if d >= dist - 1e-12 => {}
            _ => best = Some((j, dist)),
        }
    }
    best.map(|(j, _)| j)
}

pub(crate) fn branch_and_bound(lp: &LinearProgram, opts: &MilpOptions) -> Result<Solution> {
    lp.check_dimensions().map_err(Error::InvalidInput)?;
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut lower: Vec<f64> = lp.variables.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = lp.variables.iter().map(|v| v.upper).collect();
    for (j, v) in lp.variables.iter().enumerate() {
        if v.kind.is_integral() {
            lower[j] = (lower[j] - opts.integrality_tol).ceil();
            upper[j] = (upper[j] + opts.integrality_tol).floor();
        }
    }

    let mut nodes = 0usize;
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let gap = |inc: f64| opts.abs_gap.max(opts.rel_gap * inc.abs());

    let evaluate = |lo: &[f64], hi: &[f64], incumbent: &Option<(Vec<f64>, f64)>, nodes: &mut usize| -> Eval {
        *nodes += 1;
        let out = solve_relaxation(lp, lo, hi);
        match out.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => return Eval::Pruned,
            s => return Eval::Failed(s),
        }
        let bound = sign * out.objective;
        if let Some((_, best)) = incumbent {
            if bound >= best - gap(*best) {
                return Eval::Pruned;
            }
        }
        if branching_variable(lp, &out.x, opts.integrality_tol).is_none() {
            Eval::Integral(out.x, bound)
        } else {
            Eval::Open(out.x, bound)
        }
    };

    let mut heap = BinaryHeap::new();
    let mut next_id = 0usize;
    match evaluate(&lower, &upper, &incumbent, &mut nodes) {
        Eval::Pruned => return Ok(Solution::without_values(SolveStatus::Infeasible, nodes)),
        Eval::Failed(s) => return Ok(Solution::without_values(s, nodes)),
        Eval::Integral(x, b) => incumbent = Some((x, b)),
        Eval::Open(x, bound) => {
            heap.push(Node { bound, id: next_id, lower: lower.clone(), upper: upper.clone(), x });
            next_id += 1;
        }
    }

    let mut hit_limit = false;
    // dive depth-first (up child first) until the first incumbent, then best-bound
    let mut dive: Option<Node> = None;
    loop {
        let (node, diving) = match dive.take() {
            Some(n) => (n, true),
            None => match heap.pop() {
                Some(n) => (n, false),
                None => break,
            },
        };
        if let Some((_, best)) = &incumbent {
            if node.bound >= best - gap(*best) {
                if diving {
                    continue;
                }
                // best-first: every remaining node is at least as bad
                break;
            }
        }
        if nodes >= opts.node_limit {
            hit_limit = true;
            break;
        }
        let j = branching_variable(lp, &node.x, opts.integrality_tol)
            .expect("open nodes always carry a fractional variable");
        let v = node.x[j];
        let mut up_lo = node.lower.clone();
        up_lo[j] = v.ceil();
        let mut down_hi = node.upper.clone();
        down_hi[j] = v.floor();
        let children = [(up_lo, node.upper.clone()), (node.lower, down_hi)];
        for (lo, hi) in children {
            match evaluate(&lo, &hi, &incumbent, &mut nodes) {
                Eval::Pruned => {}
                Eval::Failed(SolveStatus::Unbounded) => {
                    return Ok(Solution::without_values(SolveStatus::Unbounded, nodes))
                }
                Eval::Failed(s) => {
                    log::warn!("relaxation ended with {s:?}; node dropped");
                }
                Eval::Integral(x, b) => {
                    let better = match &incumbent {
                        None => true,
                        Some((_, best)) => b < best - gap(*best),
                    };
                    if better {
                        incumbent = Some((x, b));
                    }
                }
                Eval::Open(x, bound) => {
                    let child = Node { bound, id: next_id, lower: lo, upper: hi, x };
                    next_id += 1;
                    if incumbent.is_none() && dive.is_none() {
                        dive = Some(child);
                    } else {
                        heap.push(child);
                    }
                }
            }
        }
    }

    let status = if hit_limit { SolveStatus::NodeLimit } else { SolveStatus::Optimal };
    let Some((x, _)) = incumbent else {
        let status = if hit_limit { SolveStatus::NodeLimit } else { SolveStatus::Infeasible };
        return Ok(Solution::without_values(status, nodes));
    };
    let values = certify(lp, x, opts.feasibility_tol)?;
    let objective_value = lp.objective_value(&values);
    Ok(Solution { status, values, objective_value, nodes })
}

/// Snaps integral variables to integers and re-checks every bound and row.
pub(crate) fn certify(lp: &LinearProgram, mut x: Vec<f64>, tol: f64) -> Result<Vec<f64>> {
    for (xi, v) in x.iter_mut().zip(&lp.variables) {
        if v.kind.is_integral() {
            *xi = xi.round();
        }
        // clear tiny bound overshoot from floating-point pivots
        if *xi < v.lower && *xi > v.lower - tol {
            *xi = v.lower;
        }
        if *xi > v.upper && *xi < v.upper + tol {
            *xi = v.upper;
        }
        if *xi == 0.0 {
            *xi = 0.0; // normalize -0.0
        }
    }
    let violation = lp.max_violation(&x);
    if violation > tol {
        return Err(Error::Certificate { violation });
    }
    Ok(x)
}
