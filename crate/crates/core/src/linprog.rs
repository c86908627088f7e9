//! Thin wrapper over the `microlp` simplex solver.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Relation {
    Eq,
    Le,
    Ge,
}

pub(crate) struct LinearProgram {
    problem: Problem,
    vars: Vec<Variable>,
}

pub(crate) struct LpSolution {
    pub objective: f64,
    pub values: Vec<f64>,
}

impl LinearProgram {
    pub fn maximize() -> Self {
        Self {
            problem: Problem::new(OptimizationDirection::Maximize),
            vars: Vec::new(),
        }
    }

    pub fn minimize() -> Self {
        Self {
            problem: Problem::new(OptimizationDirection::Minimize),
            vars: Vec::new(),
        }
    }

    /// Adds a variable with objective coefficient and bounds; returns its index.
    pub fn var(&mut self, objective: f64, lo: f64, hi: f64) -> usize {
        self.vars.push(self.problem.add_var(objective, (lo, hi)));
        self.vars.len() - 1
    }

    /// Adds `sum coef * x_var  (rel)  rhs`. Repeated variables are merged.
    pub fn constraint(&mut self, terms: &[(usize, f64)], rel: Relation, rhs: f64) {
        let mut merged: Vec<(usize, f64)> = terms.to_vec();
        merged.sort_by_key(|t| t.0);
        merged.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let expr: Vec<(Variable, f64)> = merged
            .into_iter()
            .filter(|t| t.1 != 0.0)
            .map(|(v, c)| (self.vars[v], c))
            .collect();
        let op = match rel {
            Relation::Eq => ComparisonOp::Eq,
            Relation::Le => ComparisonOp::Le,
            Relation::Ge => ComparisonOp::Ge,
        };
        self.problem.add_constraint(expr.as_slice(), op, rhs);
    }

    pub fn solve(self) -> Result<LpSolution> {
        let outcome = self.problem.solve().map_err(|e| match e {
            microlp::Error::Infeasible => Error::Infeasible,
            other => Error::Numerical(format!("linear program failed: {other}")),
        })?;
        let solution = outcome.into_solution().map_err(|e| {
            Error::Numerical(format!(
                "linear program interrupted: {:?}",
                e.termination_reason()
            ))
        })?;
        Ok(LpSolution {
            objective: solution.objective(),
            values: self.vars.iter().map(|&v| solution.var_value(v)).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program() {
        // max x + y  s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0  ->  (1.6, 1.2)
        let mut lp = LinearProgram::maximize();
        let x = lp.var(1.0, 0.0, f64::INFINITY);
        let y = lp.var(1.0, 0.0, f64::INFINITY);
        lp.constraint(&[(x, 1.0), (y, 2.0)], Relation::Le, 4.0);
        lp.constraint(&[(x, 3.0), (y, 1.0)], Relation::Le, 6.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 2.8).abs() < 1e-9);
        assert!((sol.values[0] - 1.6).abs() < 1e-9);
    }

    #[test]
    fn free_variable_and_merging() {
        // min t s.t. t >= 1 - x, t >= x - 3 with x fixed at 0 via two merged terms
        let mut lp = LinearProgram::minimize();
        let t = lp.var(1.0, f64::NEG_INFINITY, f64::INFINITY);
        let x = lp.var(0.0, 0.0, 0.0);
        lp.constraint(&[(t, 0.5), (t, 0.5), (x, 1.0)], Relation::Ge, 1.0);
        lp.constraint(&[(t, 1.0), (x, -1.0)], Relation::Ge, -3.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible() {
        let mut lp = LinearProgram::maximize();
        let x = lp.var(1.0, 0.0, 1.0);
        lp.constraint(&[(x, 1.0)], Relation::Ge, 2.0);
        assert!(matches!(lp.solve(), Err(Error::Infeasible)));
    }
}
