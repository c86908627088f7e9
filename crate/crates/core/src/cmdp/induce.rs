use crate::cmdp::{Cmdp, CmdpParts};
use crate::error::{Error, Result};
use crate::tabular::eval::agent_stage;
use crate::tabular::transitions::Transitions;
use crate::tabular::{Cmpg, JointPolicy, Marginalizer};

/// The CMDP agent `agent` faces when everyone else follows `others`.
///
/// `others` is a full profile; the entry for `agent` is ignored. Games
/// without constraints induce a zero cost with a slack threshold.
pub fn induce_cmdp(game: &Cmpg, agent: usize, others: &JointPolicy) -> Result<Cmdp> {
    induce_cmdp_with(game, agent, others, Marginalizer::Auto)
}

pub fn induce_cmdp_with(
    game: &Cmpg,
    agent: usize,
    others: &JointPolicy,
    how: Marginalizer,
) -> Result<Cmdp> {
    if game.n_constraints() > 1 {
        return Err(Error::Unsupported(format!(
            "induced models support one constraint, game has {}",
            game.n_constraints()
        )));
    }
    if agent >= game.n_agents() {
        return Err(Error::Dimension(format!("agent {agent} out of range")));
    }
    if others.n_agents() != game.n_agents() {
        return Err(Error::Dimension(format!(
            "profile has {} agents, game has {}",
            others.n_agents(),
            game.n_agents()
        )));
    }
    for (i, p) in others.agents.iter().enumerate() {
        if i != agent {
            game.check_agent_policy(i, p)?;
        }
    }
    let counts = match how {
        Marginalizer::Auto => game.is_count_symmetric(),
        Marginalizer::Naive => false,
        Marginalizer::Counts if game.is_count_symmetric() => true,
        Marginalizer::Counts => {
            return Err(Error::Unsupported(
                "count marginalization on a game without count symmetry".into(),
            ))
        }
    };
    let (hz, ns, na) = (game.horizon(), game.n_states(), game.n_actions(agent));
    let mut reward = Vec::with_capacity(hz * ns * na);
    let mut cost = Vec::with_capacity(hz * ns * na);
    let mut rows = Vec::with_capacity(hz * ns * na);
    for h in 0..hz {
        for s in 0..ns {
            let mut dists = others.dists(h, s);
            // the agent's own row is replaced by the fixed action
            let own = vec![1.0 / na as f64; na];
            dists[agent] = &own;
            for st in agent_stage(game, h, s, agent, &dists, counts) {
                reward.push(clamp_unit(st.reward));
                cost.push(st.costs.first().copied().map_or(0.0, clamp_unit));
                rows.push(
                    st.next
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(t, &p)| (t, p))
                        .collect(),
                );
            }
        }
    }
    Cmdp::new(CmdpParts {
        n_states: ns,
        n_actions: na,
        horizon: hz,
        transitions: Transitions::from_rows(ns, rows)?,
        reward,
        cost,
        threshold: game.thresholds().first().copied().unwrap_or(hz as f64),
        initial_dist: game.initial_dist().to_vec(),
    })
}

/// Removes round-off that would push an expectation of unit-range values
/// outside [0, 1].
fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::random::{
        random_cooperative_game, random_general_game, random_joint_policy, random_policy,
    };
    use crate::tabular::model::tests::matrix_game;
    use crate::tabular::{evaluate, AgentPolicy};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair(p: &[f64], q: &[f64]) -> JointPolicy {
        JointPolicy::new(vec![
            AgentPolicy::stationary(1, 1, p).unwrap(),
            AgentPolicy::stationary(1, 1, q).unwrap(),
        ])
    }

    #[test]
    fn counterexample_column_lookup() {
        let g = matrix_game(&[0.75, 0.5, 0.5, 1.0], &[0.0, 0.0, 0.0, 1.0], 2, 0.5);
        let m = induce_cmdp(&g, 0, &pair(&[1.0, 0.0], &[0.0, 1.0])).unwrap();
        assert_eq!(m.reward(), &[0.5, 1.0]);
        assert_eq!(m.cost(), &[0.0, 1.0]);
        assert_eq!(m.threshold(), 0.5);
        let m = induce_cmdp(&g, 1, &pair(&[0.0, 1.0], &[0.3, 0.7])).unwrap();
        assert_eq!(m.reward(), &[0.5, 1.0]);
    }

    #[test]
    fn point_mass_opponents_select_a_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_general_game(&mut rng, &[3, 2], 2, 2, 1.0);
        let opp = AgentPolicy::deterministic(2, 2, 2, &[1, 0, 1, 1]).unwrap();
        let prof = JointPolicy::new(vec![AgentPolicy::uniform(2, 2, 3), opp.clone()]);
        let m = induce_cmdp(&g, 0, &prof).unwrap();
        for h in 0..2 {
            for s in 0..2 {
                let b = opp.as_deterministic().unwrap()[h * 2 + s];
                for a in 0..3 {
                    let joint = g.joint_space().encode(&[a, b]);
                    assert_eq!(m.reward()[m.index(h, s, a)], g.reward(0, h, s, joint));
                }
            }
        }
    }

    #[test]
    fn multi_constraint_rejected() {
        let g = matrix_game(&[0.0; 4], &[0.0; 4], 2, 0.5);
        let (mut parts, _) = g.into_parts();
        parts.costs.push(vec![0.0; 4]);
        parts.thresholds.push(0.5);
        let g = Cmpg::new(parts).unwrap();
        assert!(matches!(
            induce_cmdp(&g, 0, &g.uniform_policy()),
            Err(Error::Unsupported(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn induced_value_matches_joint_value(seed in any::<u64>(), ns in 1usize..4, hz in 1usize..4, m1 in 1usize..4, m2 in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_general_game(&mut rng, &[m1, m2], ns, hz, 1.0);
            let prof = random_joint_policy(&mut rng, &g);
            let joint = evaluate(&g, &prof).unwrap();
            for i in 0..2 {
                let m = induce_cmdp(&g, i, &prof).unwrap();
                let v = m.evaluate(prof.agent(i)).unwrap();
                prop_assert!((v.reward - joint.reward_values[i]).abs() < 1e-10);
                prop_assert!((v.cost - joint.cost_values[0]).abs() < 1e-10);
            }
        }

        #[test]
        fn three_agent_induction(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_cooperative_game(&mut rng, &[2, 3, 2], 2, 2, 1.0);
            let prof = random_joint_policy(&mut rng, &g);
            let dev = random_policy(&mut rng, 2, 2, 3);
            let m = induce_cmdp(&g, 1, &prof).unwrap();
            let direct = evaluate(&g, &prof.with_agent(1, dev.clone())).unwrap();
            let v = m.evaluate(&dev).unwrap();
            prop_assert!((v.reward - direct.reward_values[1]).abs() < 1e-10);
        }
    }
}
