use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cmdp::induce_cmdp;
use crate::envs::random::random_joint_policy;
use crate::error::{Error, Result};
use crate::linprog::{LinearProgram, Relation};
use crate::tabular::{Cmpg, JointPolicy};

/// Slater constant of a single-constraint game.
#[derive(Clone, Debug, PartialEq)]
pub struct SlaterEstimate {
    pub value: f64,
    /// True when `value` is the exact constant; otherwise it is an upper
    /// bound from the opponent profiles tried.
    pub exact: bool,
    /// Opponent profiles evaluated per agent (0 for the exact case).
    pub samples: usize,
}

/// Worst-case best achievable slack over agents and opponent profiles.
///
/// Two-agent, one-state, one-step games are solved exactly by a linear
/// program over the opponent's mixed action. Other games are evaluated at
/// the all-first-action profile, the uniform profile and `samples` random
/// profiles drawn from `seed`; the minimum is an upper bound.
pub fn slater_constant(game: &Cmpg, samples: usize, seed: u64) -> Result<SlaterEstimate> {
    check_single_constraint(game)?;
    if game.n_agents() == 2 && game.n_states() == 1 && game.horizon() == 1 {
        let value = (0..2)
            .map(|i| exact_matrix_slack(game, i))
            .collect::<Result<Vec<_>>>()?;
        return Ok(SlaterEstimate {
            value: value.into_iter().fold(f64::INFINITY, f64::min),
            exact: true,
            samples: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profiles = vec![game.first_action_policy(), game.uniform_policy()];
    profiles.extend((0..samples).map(|_| random_joint_policy(&mut rng, game)));
    let mut est = slater_upper_bound(game, &profiles)?;
    est.samples = profiles.len();
    Ok(est)
}

/// Minimum over the given opponent profiles and all agents of the best
/// slack an agent can reach against them.
pub fn slater_upper_bound(game: &Cmpg, profiles: &[JointPolicy]) -> Result<SlaterEstimate> {
    check_single_constraint(game)?;
    if profiles.is_empty() {
        return Err(Error::Empty("opponent profiles"));
    }
    let mut value = f64::INFINITY;
    for p in profiles {
        for i in 0..game.n_agents() {
            value = value.min(induce_cmdp(game, i, p)?.slater_constant());
        }
    }
    // with one agent the opponent set is trivial and the bound is exact
    Ok(SlaterEstimate {
        value,
        exact: game.n_agents() == 1,
        samples: profiles.len(),
    })
}

fn check_single_constraint(game: &Cmpg) -> Result<()> {
    if game.n_constraints() != 1 {
        return Err(Error::Unsupported(format!(
            "the Slater constant needs exactly one constraint, game has {}",
            game.n_constraints()
        )));
    }
    Ok(())
}

/// `min_q max_a (alpha - sum_b c(a, b) q_b)` for agent `agent` against the other.
fn exact_matrix_slack(game: &Cmpg, agent: usize) -> Result<f64> {
    let other = 1 - agent;
    let (own, opp) = (game.n_actions(agent), game.n_actions(other));
    let space = game.joint_space();
    let alpha = game.thresholds()[0];
    let mut lp = LinearProgram::minimize();
    let z = lp.var(1.0, f64::NEG_INFINITY, f64::INFINITY);
    let q: Vec<usize> = (0..opp).map(|_| lp.var(0.0, 0.0, 1.0)).collect();
    lp.constraint(
        &q.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(),
        Relation::Eq,
        1.0,
    );
    for a in 0..own {
        // z + sum_b c(a, b) q_b >= alpha
        let mut terms = vec![(z, 1.0)];
        for (b, &v) in q.iter().enumerate() {
            let mut actions = vec![0; 2];
            actions[agent] = a;
            actions[other] = b;
            terms.push((v, game.cost(0, 0, 0, space.encode(&actions))));
        }
        lp.constraint(&terms, Relation::Ge, alpha);
    }
    Ok(lp.solve()?.objective)
}
