use rand::Rng;

use crate::error::{Error, Result};
use crate::tabular::episode::accumulate_returns;
use crate::tabular::{Cmpg, JointPolicy};

/// Monte-Carlo value estimates from one batch of episodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueEstimate {
    pub rewards: Vec<f64>,
    pub costs: Vec<f64>,
    pub episodes: u64,
    pub steps: u64,
}

/// Mean cumulative reward of every agent and cost of every constraint over
/// `episodes` independent episodes.
pub fn estimate_value_mc<R: Rng + ?Sized>(
    game: &Cmpg,
    policy: &JointPolicy,
    episodes: usize,
    rng: &mut R,
) -> Result<ValueEstimate> {
    if episodes == 0 {
        return Err(Error::Config("need at least one episode".into()));
    }
    game.check_policy(policy)?;
    let mut rewards = vec![0.0; game.n_agents()];
    let mut costs = vec![0.0; game.n_constraints()];
    for _ in 0..episodes {
        accumulate_returns(game, policy, rng, &mut rewards, &mut costs);
    }
    let m = episodes as f64;
    rewards
        .iter_mut()
        .chain(costs.iter_mut())
        .for_each(|x| *x /= m);
    Ok(ValueEstimate {
        rewards,
        costs,
        episodes: episodes as u64,
        steps: (episodes * game.horizon()) as u64,
    })
}
