use std::time::Instant;

use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ca::estimate::estimate_value_mc;
use crate::ca::known::{check_start, select_agent, CaOutcome};
use crate::ca::solver::{CmdpSolver, SolveContext};
use crate::ca::trace::{CycleRecord, RunTrace};
use crate::cmdp::induce_cmdp;
use crate::error::{Error, Result};
use crate::tabular::{evaluate, Cmpg, JointPolicy};

/// Parameters of the sample-based coordinate ascent.
#[derive(Clone, Debug, PartialEq)]
pub struct ExploreConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Episodes per evaluated policy.
    pub episodes: usize,
    pub max_cycles: usize,
    /// Confidence handed to each CMDP solve.
    pub solver_delta: f64,
    pub seed: u64,
}

impl ExploreConfig {
    /// Episodes `ceil(32 H^2/eps^2 * ln(32 n^2 H/(eps delta)))`, cycles
    /// `ceil(4nH/eps)`, solver confidence `eps delta / (8 n^2 H)`.
    pub fn new(
        epsilon: f64,
        delta: f64,
        n_agents: usize,
        horizon: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("delta {delta} outside (0, 1)")));
        }
        let (n, h) = (n_agents as f64, horizon as f64);
        let episodes = (32.0 * h * h / (epsilon * epsilon)
            * (32.0 * n * n * h / (epsilon * delta)).ln())
        .ceil();
        let cfg = Self {
            epsilon,
            delta,
            episodes: episodes.max(1.0) as usize,
            max_cycles: (4.0 * n * h / epsilon).ceil().max(1.0) as usize,
            solver_delta: epsilon * delta / (8.0 * n * n * h),
            seed,
        };
        Ok(cfg)
    }

    pub fn with_episodes(mut self, episodes: usize) -> Self {
        self.episodes = episodes;
        self
    }

    pub fn with_max_cycles(mut self, cycles: usize) -> Self {
        self.max_cycles = cycles;
        self
    }

    /// Accuracy each CMDP solve must reach.
    pub fn solver_accuracy(&self) -> f64 {
        self.epsilon / 4.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.max_cycles == 0 {
            return Err(Error::Config("episodes and cycles must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) || !(self.epsilon > 0.0) {
            return Err(Error::Config(
                "epsilon must be positive and delta in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Coordinate ascent with Monte-Carlo gap estimates.
///
/// Each cycle the current profile is executed once for a shared batch of
/// episodes, every agent's candidate best response gets a fresh batch, and
/// the agent with the largest estimated gain is updated if that gain
/// exceeds `epsilon / 2`. Candidate policies come from `solver`, which sees
/// each induced CMDP. Trace values are exact evaluations kept for
/// diagnostics; decisions use only the estimates.
pub fn ca_cmpg_explore(
    game: &Cmpg,
    init: &JointPolicy,
    cfg: &ExploreConfig,
    solver: &mut dyn CmdpSolver,
) -> Result<CaOutcome> {
    cfg.validate()?;
    let (rewards, costs) = check_start(game, init, cfg.epsilon)?;
    let n = game.n_agents();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = RunTrace::new(n, game.thresholds().to_vec(), rewards, costs);
    let mut policy = init.clone();
    for cycle in 1..=cfg.max_cycles {
        let started = Instant::now();
        let base = estimate_value_mc(game, &policy, cfg.episodes, &mut rng)?;
        let mut episodes = base.episodes;
        let mut steps = base.steps;
        let mut draws = 0;
        let mut gaps = Vec::with_capacity(n);
        let mut candidates = Vec::with_capacity(n);
        for i in 0..n {
            let model = induce_cmdp(game, i, &policy)?;
            let out = solver.solve(&model, SolveContext { agent: i, cycle })?;
            draws += out.draws;
            episodes += out.episodes;
            steps += out.episodes * game.horizon() as u64;
            let candidate = policy.with_agent(i, out.policy.clone());
            let est = estimate_value_mc(game, &candidate, cfg.episodes, &mut rng)?;
            episodes += est.episodes;
            steps += est.steps;
            gaps.push(est.rewards[i] - base.rewards[i]);
            candidates.push(out.policy);
        }
        let pick = select_agent(&gaps).filter(|&j| gaps[j] > cfg.epsilon / 2.0);
        if let Some(j) = pick {
            policy = policy.with_agent(j, candidates.swap_remove(j));
        }
        let eval = evaluate(game, &policy)?;
        debug!("cycle {cycle}: estimated gaps {gaps:?}, selected {pick:?}");
        trace.cycles.push(CycleRecord {
            cycle,
            gaps,
            selected: pick,
            reward_values: eval.reward_values,
            cost_values: eval.cost_values,
            elapsed: started.elapsed(),
            episodes,
            steps,
            draws,
        });
        if pick.is_none() {
            trace.converged = true;
            info!(
                "stopped after {cycle} cycles, {} episodes",
                trace.total_episodes()
            );
            break;
        }
    }
    Ok(CaOutcome { policy, trace })
}
