use std::time::Instant;

use log::{debug, info};

use crate::ca::solver::{CmdpSolver, SolveContext};
use crate::ca::trace::{CycleRecord, RunTrace};
use crate::cmdp::induce_cmdp;
use crate::error::{Error, Result};
use crate::tabular::eval::feasibility_of;
use crate::tabular::{evaluate, Cmpg, JointPolicy};

/// Tolerance used when checking that a starting policy is feasible.
pub const INIT_FEASIBILITY_TOL: f64 = 1e-8;

/// Final policy and trace of a coordinate-ascent run.
#[derive(Clone, Debug)]
pub struct CaOutcome {
    /// The last accepted policy.
    pub policy: JointPolicy,
    pub trace: RunTrace,
}

/// Upper bound `ceil(2 n H / eps)` on accepted updates with exact gaps.
pub fn known_update_bound(n_agents: usize, horizon: usize, epsilon: f64) -> usize {
    (2.0 * n_agents as f64 * horizon as f64 / epsilon).ceil() as usize
}

/// Index of the largest gap, lowest index on ties.
pub fn select_agent(gaps: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &g) in gaps.iter().enumerate() {
        if best.is_none_or(|b| g > gaps[b]) {
            best = Some(i);
        }
    }
    best
}

pub(crate) fn check_start(
    game: &Cmpg,
    init: &JointPolicy,
    epsilon: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if game.n_constraints() > 1 {
        return Err(Error::Unsupported(
            "coordinate ascent supports at most one constraint".into(),
        ));
    }
    let eval = evaluate(game, init)?;
    let f = feasibility_of(game, &eval.cost_values, INIT_FEASIBILITY_TOL);
    if !f.feasible {
        return Err(Error::InfeasiblePolicy(format!(
            "initial policy has constraint slacks {:?}",
            f.slacks
        )));
    }
    Ok((eval.reward_values, eval.cost_values))
}

/// Coordinate ascent with exact evaluation.
///
/// Each cycle every agent best-responds to the current profile through its
/// induced CMDP; the agent with the largest exact gain is updated if that
/// gain exceeds `epsilon / 2`, otherwise the run stops. Without an explicit
/// cap the run is allowed `ceil(2nH/eps) + 1` cycles, enough for every
/// possible update plus the final check.
pub fn ca_cmpg_known(
    game: &Cmpg,
    init: &JointPolicy,
    epsilon: f64,
    max_cycles: Option<usize>,
    solver: &mut dyn CmdpSolver,
) -> Result<CaOutcome> {
    let (rewards, costs) = check_start(game, init, epsilon)?;
    let n = game.n_agents();
    let cap = max_cycles.unwrap_or_else(|| known_update_bound(n, game.horizon(), epsilon) + 1);
    let mut trace = RunTrace::new(n, game.thresholds().to_vec(), rewards, costs);
    let mut policy = init.clone();
    for cycle in 1..=cap {
        let started = Instant::now();
        let mut gaps = Vec::with_capacity(n);
        let mut candidates = Vec::with_capacity(n);
        let mut draws = 0;
        let mut episodes = 0;
        for i in 0..n {
            let model = induce_cmdp(game, i, &policy)?;
            let out = solver.solve(&model, SolveContext { agent: i, cycle })?;
            draws += out.draws;
            episodes += out.episodes;
            let current = model.evaluate(policy.agent(i))?.reward;
            let best = model.evaluate(&out.policy)?.reward;
            gaps.push(best - current);
            candidates.push(out.policy);
        }
        let pick = select_agent(&gaps).filter(|&j| gaps[j] > epsilon / 2.0);
        if let Some(j) = pick {
            policy = policy.with_agent(j, candidates.swap_remove(j));
        }
        let eval = evaluate(game, &policy)?;
        debug!(
            "cycle {cycle}: gaps {gaps:?}, selected {pick:?}, costs {:?}",
            eval.cost_values
        );
        trace.cycles.push(CycleRecord {
            cycle,
            gaps,
            selected: pick,
            reward_values: eval.reward_values,
            cost_values: eval.cost_values,
            elapsed: started.elapsed(),
            episodes,
            steps: episodes * game.horizon() as u64,
            draws,
        });
        if pick.is_none() {
            trace.converged = true;
            info!("converged after {cycle} cycles");
            break;
        }
    }
    Ok(CaOutcome { policy, trace })
}
