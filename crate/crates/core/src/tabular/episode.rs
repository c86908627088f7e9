use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::tabular::model::Cmpg;
use crate::tabular::policy::JointPolicy;
use crate::tabular::transitions::sample_index;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Step {
    pub state: usize,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub costs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Episode {
    pub steps: Vec<Step>,
    pub final_state: usize,
}

/// One episode from a fresh seeded stream.
pub fn sample_episode(game: &Cmpg, policy: &JointPolicy, seed: u64) -> Result<Episode> {
    sample_episode_with(game, policy, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_episode_with<R: Rng + ?Sized>(
    game: &Cmpg,
    policy: &JointPolicy,
    rng: &mut R,
) -> Result<Episode> {
    game.check_policy(policy)?;
    let mut s = sample_index(game.initial_dist(), rng.gen());
    let mut steps = Vec::with_capacity(game.horizon());
    for h in 0..game.horizon() {
        let actions: Vec<usize> = policy
            .agents
            .iter()
            .map(|p| sample_index(p.dist(h, s), rng.gen()))
            .collect();
        let joint = game.joint_space().encode(&actions);
        let idx = game.index(h, s, joint);
        steps.push(Step {
            state: s,
            rewards: (0..game.n_agents())
                .map(|i| game.reward_table(i)[idx])
                .collect(),
            costs: (0..game.n_constraints())
                .map(|j| game.cost_table(j)[idx])
                .collect(),
            actions,
        });
        s = game.transitions().sample(idx, rng.gen());
    }
    Ok(Episode {
        steps,
        final_state: s,
    })
}

/// Adds one episode's cumulative rewards and costs into the accumulators.
/// The policy shape must already be checked.
pub(crate) fn accumulate_returns<R: Rng + ?Sized>(
    game: &Cmpg,
    policy: &JointPolicy,
    rng: &mut R,
    rewards: &mut [f64],
    costs: &mut [f64],
) {
    let space = game.joint_space();
    let mut s = sample_index(game.initial_dist(), rng.gen());
    for h in 0..game.horizon() {
        let mut joint = 0;
        for (i, p) in policy.agents.iter().enumerate() {
            joint += sample_index(p.dist(h, s), rng.gen()) * space.stride(i);
        }
        let idx = game.index(h, s, joint);
        for (i, r) in rewards.iter_mut().enumerate() {
            *r += game.reward_table(i)[idx];
        }
        for (j, c) in costs.iter_mut().enumerate() {
            *c += game.cost_table(j)[idx];
        }
        s = game.transitions().sample(idx, rng.gen());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::model::tests::matrix_game;
    use crate::tabular::policy::AgentPolicy;

    #[test]
    fn single_step_bimatrix() {
        let g = matrix_game(&[0.75, 0.5, 0.5, 1.0], &[0.0, 0.0, 0.0, 1.0], 2, 0.5);
        let pol = JointPolicy::new(vec![
            AgentPolicy::stationary(1, 1, &[0.0, 1.0]).unwrap(),
            AgentPolicy::stationary(1, 1, &[1.0, 0.0]).unwrap(),
        ]);
        let ep = sample_episode(&g, &pol, 3).unwrap();
        assert_eq!(ep.steps.len(), 1);
        assert_eq!(ep.steps[0].actions, vec![1, 0]);
        assert_eq!(ep.steps[0].rewards, vec![0.5, 0.5]);
        assert_eq!(ep.steps[0].costs, vec![0.0]);
    }

    #[test]
    fn seeded_determinism() {
        let g = matrix_game(&[0.75, 0.5, 0.5, 1.0], &[0.0, 0.0, 0.0, 1.0], 2, 0.5);
        let pol = g.uniform_policy();
        let a = sample_episode(&g, &pol, 11).unwrap();
        let b = sample_episode(&g, &pol, 11).unwrap();
        assert_eq!(a, b);
    }
}
