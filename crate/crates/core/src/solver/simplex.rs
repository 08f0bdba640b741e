//! Dense bounded-variable primal simplex.
//!
//! Every original variable is mapped onto nonnegative columns with an
//! optional finite upper bound (shifted, negated or split when free). Each
//! inequality gets a slack; rows whose slack cannot start basic get an
//! artificial column. Phase 1 drives the artificials out, phase 2 optimizes
//! the real cost. Pricing is Dantzig's rule, switching to Bland's rule after a
//! run of degenerate pivots.

use super::model::{LinearProgram, Relation, Sense, SolveStatus};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-7;
const DEGENERATE_RUN: usize = 50;

#[derive(Clone, Debug)]
pub(crate) struct LpOutcome {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

/// How one original variable maps onto standard columns.
#[derive(Clone, Copy, Debug)]
enum Mapping {
    /// x = offset + col
    Shift { col: usize, offset: f64 },
    /// x = offset - col
    Negate { col: usize, offset: f64 },
    /// x = pos - neg
    Split { pos: usize, neg: usize },
}

struct Tableau {
    m: usize,
    n: usize,
    /// Row-major m x n body, B^-1 A.
    body: Vec<f64>,
    /// Reduced costs for the current phase.
    cost_row: Vec<f64>,
    basis: Vec<usize>,
    /// Current value of every column (basic and nonbasic).
    value: Vec<f64>,
    upper: Vec<f64>,
    is_basic: Vec<bool>,
}

impl Tableau {
    fn row(&self, i: usize) -> &[f64] {
        &self.body[i * self.n..(i + 1) * self.n]
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let p = self.body[r * n + q];
        {
            let row = &mut self.body[r * n..(r + 1) * n];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[q] = 1.0;
        }
        let pivot_row: Vec<f64> = self.row(r).to_vec();
        let nz: Vec<usize> = (0..n).filter(|&j| pivot_row[j] != 0.0).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.body[i * n + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.body[i * n..(i + 1) * n];
            for &j in &nz {
                row[j] -= f * pivot_row[j];
            }
            row[q] = 0.0;
        }
        let f = self.cost_row[q];
        if f != 0.0 {
            for &j in &nz {
                self.cost_row[j] -= f * pivot_row[j];
            }
            self.cost_row[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }

    /// Reduced costs `c - c_B B^-1 A` for a fresh cost vector.
    fn price(&mut self, cost: &[f64]) {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            for (dj, &a) in d.iter_mut().zip(self.row(i)) {
                *dj -= cb * a;
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = 0.0;
        }
        self.cost_row = d;
    }

    /// Runs primal simplex iterations minimizing the current cost row.
    /// Returns `Optimal`, `Unbounded` or `IterationLimit`.
    fn optimize(&mut self, iteration_budget: &mut usize) -> SolveStatus {
        let mut degenerate = 0usize;
        loop {
            if *iteration_budget == 0 {
                return SolveStatus::IterationLimit;
            }
            *iteration_budget -= 1;
            let bland = degenerate >= DEGENERATE_RUN;

            // entering column
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if self.is_basic[j] || self.upper[j] <= 0.0 {
                    continue;
                }
                let d = self.cost_row[j];
                let at_upper = self.upper[j].is_finite() && self.value[j] >= self.upper[j];
                let dir = if !at_upper && d < -COST_TOL {
                    1.0
                } else if at_upper && d > COST_TOL {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                match entering {
                    Some((k, _)) if self.cost_row[k].abs() >= d.abs() => {}
                    _ => entering = Some((j, dir)),
                }
            }
            let Some((q, dir)) = entering else {
                return SolveStatus::Optimal;
            };

            // ratio test
            let mut step = self.upper[q];
            let mut leave: Option<(usize, bool)> = None; // (row, leaves at upper)
            let mut best_alpha = 0.0f64;
            for i in 0..self.m {
                let alpha = self.body[i * self.n + q] * dir;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let (limit, to_upper) = if alpha > 0.0 {
                    ((self.value[b] / alpha).max(0.0), false)
                } else if self.upper[b].is_finite() {
                    (((self.upper[b] - self.value[b]) / -alpha).max(0.0), true)
                } else {
                    continue;
                };
                let take = match leave {
                    None => limit < step,
                    Some((r, _)) => {
                        if limit < step - 1e-12 {
                            true
                        } else if limit <= step + 1e-12 {
                            if bland {
                                b < self.basis[r]
                            } else {
                                alpha.abs() > best_alpha
                            }
                        } else {
                            false
                        }
                    }
                };
                if take {
                    step = step.min(limit);
                    leave = Some((i, to_upper));
                    best_alpha = alpha.abs();
                }
            }
            if !step.is_finite() {
                return SolveStatus::Unbounded;
            }
            if step <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            for i in 0..self.m {
                let alpha = self.body[i * self.n + q] * dir;
                if alpha != 0.0 {
                    let b = self.basis[i];
                    self.value[b] -= alpha * step;
                }
            }
            self.value[q] += dir * step;

            match leave {
                None => {
                    // bound flip
                    self.value[q] = if dir > 0.0 { self.upper[q] } else { 0.0 };
                }
                Some((r, to_upper)) => {
                    let b = self.basis[r];
                    self.value[b] = if to_upper { self.upper[b] } else { 0.0 };
                    self.pivot(r, q);
                }
            }
        }
    }
}

/// Solves the continuous relaxation of `lp` with per-variable bounds
/// `lower`/`upper` overriding the program's own.
pub(crate) fn solve_relaxation(lp: &LinearProgram, lower: &[f64], upper: &[f64]) -> LpOutcome {
    let nv = lp.variables.len();
    let infeasible = || LpOutcome { status: SolveStatus::Infeasible, x: Vec::new(), objective: f64::NAN };

    // column layout for structurals
    let mut maps = Vec::with_capacity(nv);
    let mut col_upper: Vec<f64> = Vec::new();
    let mut col_cost: Vec<f64> = Vec::new();
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    for j in 0..nv {
        let (l, u) = (lower[j], upper[j]);
        if l > u + 1e-9 {
            return infeasible();
        }
        let c = sign * lp.variables[j].objective;
        if l.is_finite() {
            maps.push(Mapping::Shift { col: col_upper.len(), offset: l });
            col_upper.push((u - l).max(0.0));
            col_cost.push(c);
        } else if u.is_finite() {
            maps.push(Mapping::Negate { col: col_upper.len(), offset: u });
            col_upper.push(f64::INFINITY);
            col_cost.push(-c);
        } else {
            let pos = col_upper.len();
            maps.push(Mapping::Split { pos, neg: pos + 1 });
            col_upper.extend([f64::INFINITY, f64::INFINITY]);
            col_cost.extend([c, -c]);
        }
    }
    let n_struct = col_upper.len();

    // standardized rows over structural columns
    let m = lp.constraints.len();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for con in &lp.constraints {
        let mut row = Vec::with_capacity(con.coeffs.len() + 1);
        let mut b = con.rhs;
        for &(j, a) in &con.coeffs {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                Mapping::Shift { col, offset } => {
                    b -= a * offset;
                    row.push((col, a));
                }
                Mapping::Negate { col, offset } => {
                    b -= a * offset;
                    row.push((col, -a));
                }
                Mapping::Split { pos, neg } => {
                    row.push((pos, a));
                    row.push((neg, -a));
                }
            }
        }
        rows.push(row);
        rhs.push(b);
    }

    // slacks, then artificials where needed
    let n_slack = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
    let mut slack_of_row = vec![None; m];
    let mut next = n_struct;
    for (i, con) in lp.constraints.iter().enumerate() {
        let s = match con.relation {
            Relation::Le => 1.0,
            Relation::Ge => -1.0,
            Relation::Eq => continue,
        };
        slack_of_row[i] = Some((next, s));
        next += 1;
    }
    debug_assert_eq!(next, n_struct + n_slack);
    let mut row_sign = vec![1.0; m];
    let mut needs_artificial = vec![false; m];
    for i in 0..m {
        if rhs[i] < 0.0 {
            row_sign[i] = -1.0;
        }
        needs_artificial[i] = match slack_of_row[i] {
            Some((_, s)) => s * row_sign[i] < 0.0,
            None => true,
        };
    }
    let n_art = needs_artificial.iter().filter(|&&a| a).count();
    let n = n_struct + n_slack + n_art;

    let mut body = vec![0.0; m * n];
    let mut basis = vec![0usize; m];
    let mut upper_all = col_upper.clone();
    upper_all.extend(std::iter::repeat_n(f64::INFINITY, n_slack + n_art));
    let mut value = vec![0.0; n];
    let mut art = n_struct + n_slack;
    for i in 0..m {
        let sgn = row_sign[i];
        let r = &mut body[i * n..(i + 1) * n];
        for &(j, a) in &rows[i] {
            r[j] += sgn * a;
        }
        if let Some((sc, s)) = slack_of_row[i] {
            r[sc] = sgn * s;
        }
        let b = sgn * rhs[i];
        if needs_artificial[i] {
            r[art] = 1.0;
            basis[i] = art;
            value[art] = b;
            art += 1;
        } else {
            basis[i] = slack_of_row[i].unwrap().0;
            value[basis[i]] = b;
        }
    }
    let mut is_basic = vec![false; n];
    for &b in &basis {
        is_basic[b] = true;
    }
    let mut tab = Tableau { m, n, body, cost_row: Vec::new(), basis, value, upper: upper_all, is_basic };
    let mut budget = 50_000 + 50 * (m + n);

    if n_art > 0 {
        let mut c1 = vec![0.0; n];
        for c in c1.iter_mut().skip(n_struct + n_slack) {
            *c = 1.0;
        }
        tab.price(&c1);
        match tab.optimize(&mut budget) {
            SolveStatus::Optimal => {}
            SolveStatus::IterationLimit => {
                return LpOutcome { status: SolveStatus::IterationLimit, x: Vec::new(), objective: f64::NAN }
            }
            // phase 1 is bounded below by 0
            _ => unreachable!("phase 1 cannot be unbounded"),
        }
        let infeas: f64 = (n_struct + n_slack..n).map(|j| tab.value[j]).sum();
        if infeas > PHASE1_TOL {
            return infeasible();
        }
        for j in n_struct + n_slack..n {
            tab.upper[j] = 0.0;
            tab.value[j] = 0.0;
        }
    }

    let mut c2 = vec![0.0; n];
    c2[..n_struct].copy_from_slice(&col_cost);
    tab.price(&c2);
    let status = tab.optimize(&mut budget);
    if status != SolveStatus::Optimal {
        return LpOutcome { status, x: Vec::new(), objective: f64::NAN };
    }

    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            Mapping::Shift { col, offset } => offset + tab.value[col],
            Mapping::Negate { col, offset } => offset - tab.value[col],
            Mapping::Split { pos, neg } => tab.value[pos] - tab.value[neg],
        })
        .collect();
    let objective = lp.objective_value(&x);
    LpOutcome { status: SolveStatus::Optimal, x, objective }
}
