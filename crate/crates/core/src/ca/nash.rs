use serde::Serialize;

use crate::cmdp::{induce_cmdp, solve_cmdp_lp};
use crate::error::{Error, Result};
use crate::tabular::eval::feasibility_of;
use crate::tabular::{evaluate, Cmpg, JointPolicy};

/// Gaps below this are treated as solver noise rather than a bug.
pub const NEGATIVE_GAP_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NashReport {
    /// Best constrained deviation value minus current value, per agent.
    pub gaps: Vec<f64>,
    /// Largest gap.
    pub epsilon: f64,
    pub best_values: Vec<f64>,
    pub current_values: Vec<f64>,
}

impl NashReport {
    pub fn is_nash(&self, epsilon: f64) -> bool {
        self.epsilon <= epsilon
    }
}

/// Exact unilateral-deviation gaps of a feasible profile.
///
/// Each agent's best response is solved exactly on its induced model. The
/// threshold is widened to the current cost when the profile sits within
/// `tol` above it, so the current policy always counts as a deviation.
pub fn verify_nash(game: &Cmpg, policy: &JointPolicy, tol: f64) -> Result<NashReport> {
    let eval = evaluate(game, policy)?;
    let f = feasibility_of(game, &eval.cost_values, tol);
    if !f.feasible {
        return Err(Error::InfeasiblePolicy(format!(
            "constraint slacks {:?}",
            f.slacks
        )));
    }
    let n = game.n_agents();
    let mut gaps = Vec::with_capacity(n);
    let mut best_values = Vec::with_capacity(n);
    for i in 0..n {
        let mut model = induce_cmdp(game, i, policy)?;
        if let Some(&c) = eval.cost_values.first() {
            let widened = model.threshold().max(c).min(game.horizon() as f64);
            model = model.with_threshold(widened)?;
        }
        let best = solve_cmdp_lp(&model)?.reward_value;
        let gap = best - eval.reward_values[i];
        if gap < -NEGATIVE_GAP_TOL {
            return Err(Error::Numerical(format!(
                "agent {i} has negative gap {gap}"
            )));
        }
        gaps.push(gap);
        best_values.push(best);
    }
    Ok(NashReport {
        epsilon: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        gaps,
        best_values,
        current_values: eval.reward_values,
    })
}
