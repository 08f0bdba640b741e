//! A self-contained LP/MILP solver for desk-scale programs.

mod branch;
mod lp_format;
mod model;
mod simplex;

pub use branch::MilpOptions;
pub use lp_format::write_lp;
pub use model::{Constraint, LinearProgram, Relation, Sense, Solution, SolveStatus, VarKind, Variable};

use crate::error::{Error, Result};

/// Solves the continuous relaxation of `lp`, ignoring integrality flags.
pub fn solve_lp(lp: &LinearProgram) -> Result<Solution> {
    lp.check_dimensions().map_err(Error::InvalidInput)?;
    let lower: Vec<f64> = lp.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = lp.variables.iter().map(|v| v.upper).collect();
    let out = simplex::solve_relaxation(lp, &lower, &upper);
    if out.status != SolveStatus::Optimal {
        return Ok(Solution::without_values(out.status, 1));
    }
    let relaxed = lp.relaxed();
    let values = branch::certify(&relaxed, out.x, MilpOptions::default().feasibility_tol)?;
    let objective_value = lp.objective_value(&values);
    Ok(Solution { status: SolveStatus::Optimal, values, objective_value, nodes: 1 })
}

pub fn solve_milp(lp: &LinearProgram) -> Result<Solution> {
    branch::branch_and_bound(lp, &MilpOptions::default())
}

pub fn solve_milp_with(lp: &LinearProgram, opts: &MilpOptions) -> Result<Solution> {
    branch::branch_and_bound(lp, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-7
    }

    #[test]
    fn single_bound_lp() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, f64::INFINITY, VarKind::Continuous, 1.0);
        lp.add_constraint("c", vec![(x, 1.0)], Relation::Le, 3.0);
        let s = solve_lp(&lp).unwrap();
        assert!(s.is_optimal());
        assert!(close(s.values[0], 3.0));
    }

    #[test]
    fn degenerate_tie_lp() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, f64::INFINITY, VarKind::Continuous, 1.0);
        let y = lp.add_var("y", 0.0, f64::INFINITY, VarKind::Continuous, 1.0);
        lp.add_constraint("c", vec![(x, 1.0), (y, 1.0)], Relation::Le, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert!(close(s.objective_value, 1.0));
    }

    #[test]
    fn infeasible_and_unbounded_are_reported() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, f64::INFINITY, VarKind::Continuous, 1.0);
        lp.add_constraint("lo", vec![(x, 1.0)], Relation::Ge, 5.0);
        assert_eq!(solve_lp(&lp).unwrap().status, SolveStatus::Unbounded);
        lp.add_constraint("hi", vec![(x, 1.0)], Relation::Le, 4.0);
        assert_eq!(solve_lp(&lp).unwrap().status, SolveStatus::Infeasible);
        assert_eq!(solve_milp(&lp).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn free_and_negative_variables() {
        // min x + y, x free, y <= -2, x - y >= 1
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous, 1.0);
        let y = lp.add_var("y", f64::NEG_INFINITY, -2.0, VarKind::Continuous, 1.0);
        lp.add_constraint("c", vec![(x, 1.0), (y, -1.0)], Relation::Ge, 1.0);
        lp.add_constraint("d", vec![(x, 1.0), (y, 1.0)], Relation::Ge, -10.0);
        let s = solve_lp(&lp).unwrap();
        assert!(s.is_optimal());
        assert!(close(s.objective_value, -10.0), "{:?}", s);
    }

    #[test]
    fn equality_rows_need_phase_one() {
        // min 2a + 3b, a + b = 4, a <= 3
        let mut lp = LinearProgram::new(Sense::Minimize);
        let a = lp.add_var("a", 0.0, 3.0, VarKind::Continuous, 2.0);
        let b = lp.add_var("b", 0.0, f64::INFINITY, VarKind::Continuous, 3.0);
        lp.add_constraint("sum", vec![(a, 1.0), (b, 1.0)], Relation::Eq, 4.0);
        let s = solve_lp(&lp).unwrap();
        assert!(close(s.values[a], 3.0) && close(s.values[b], 1.0));
        assert!(close(s.objective_value, 9.0));
    }

    #[test]
    fn knapsack_example() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let a = lp.add_var("a", 0.0, 1.0, VarKind::Binary, 5.0);
        let b = lp.add_var("b", 0.0, 1.0, VarKind::Binary, 4.0);
        lp.add_constraint("w", vec![(a, 3.0), (b, 2.0)], Relation::Le, 4.0);
        let s = solve_milp(&lp).unwrap();
        assert!(s.is_optimal());
        assert_eq!(s.values, vec![1.0, 0.0]);
        assert!(close(s.objective_value, 5.0));
    }

    #[test]
    fn continuous_milp_matches_lp() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, f64::INFINITY, VarKind::Continuous, 3.0);
        let y = lp.add_var("y", 0.0, f64::INFINITY, VarKind::Continuous, 2.0);
        lp.add_constraint("a", vec![(x, 1.0), (y, 1.0)], Relation::Le, 4.0);
        lp.add_constraint("b", vec![(x, 1.0), (y, 3.0)], Relation::Le, 6.0);
        lp.add_constraint("c", vec![(x, 1.0)], Relation::Le, 3.5);
        let a = solve_lp(&lp).unwrap();
        let b = solve_milp(&lp).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(b.nodes, 1);
    }

    #[test]
    fn general_integers_branch() {
        // max x + y, 2x + 2y <= 7 with integers -> 3
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, 10.0, VarKind::Integer, 1.0);
        let y = lp.add_var("y", 0.0, 10.0, VarKind::Integer, 1.0);
        lp.add_constraint("c", vec![(x, 2.0), (y, 2.0)], Relation::Le, 7.0);
        let s = solve_milp(&lp).unwrap();
        assert!(close(s.objective_value, 3.0));
    }

    #[test]
    fn node_limit_is_distinct_status() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let vars: Vec<usize> = (0..6)
            .map(|j| lp.add_var(format!("x{j}"), 0.0, 1.0, VarKind::Binary, 1.0 + j as f64 * 0.1))
            .collect();
        lp.add_constraint("w", vars.iter().map(|&v| (v, 2.0)).collect(), Relation::Le, 5.0);
        let opts = MilpOptions { node_limit: 1, ..Default::default() };
        let s = solve_milp_with(&lp, &opts).unwrap();
        assert_eq!(s.status, SolveStatus::NodeLimit);
    }

    #[test]
    fn lp_export_is_stable() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let a = lp.add_var("x[0,1]", 0.0, 1.0, VarKind::Binary, 5.0);
        let z = lp.add_var("z 1", 0.0, 2.5, VarKind::Continuous, 1.0);
        let n = lp.add_var("n", 0.0, 4.0, VarKind::Integer, -0.5);
        lp.add_constraint("w", vec![(a, 3.0), (z, -2.0), (n, 1.0)], Relation::Le, 4.0);
        let text = write_lp(&lp);
        assert_eq!(text, write_lp(&lp));
        let expected = "Maximize\n obj: + 5 x[0_1] + 1 z_1 - 0.5 n\nSubject To\n w: + 3 x[0_1] - 2 z_1 + 1 n <= 4\n\
Bounds\n 0 <= x[0_1] <= 1\n 0 <= z_1 <= 2.5\n 0 <= n <= 4\nGenerals\n n\nBinaries\n x[0_1]\nEnd\n";
        assert_eq!(text, expected);
    }
}
