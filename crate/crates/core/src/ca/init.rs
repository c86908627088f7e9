use log::debug;

use crate::cmdp::lp::OccupancyVars;
use crate::cmdp::{solve_mdp, Cmdp, CmdpParts, LP_RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::linprog::{LinearProgram, Relation};
use crate::tabular::{AgentPolicy, Cmpg, CmpgParts, JointPolicy, JointSpace, Transitions};

/// Deterministic joint policy minimizing the single constraint's cost.
///
/// Backward induction over joint actions (lowest joint index on ties), then
/// each agent keeps its own coordinate of the chosen joint action. Games
/// without constraints get the all-first-action policy.
pub fn feasible_init_single_constraint(game: &Cmpg) -> Result<JointPolicy> {
    match game.n_constraints() {
        0 => return Ok(game.first_action_policy()),
        1 => {}
        k => {
            return Err(Error::Unsupported(format!(
                "expected one constraint, game has {k}"
            )))
        }
    }
    let (hz, ns, nj) = (game.horizon(), game.n_states(), game.n_joint());
    let mut next = vec![0.0; ns];
    let mut cur = vec![0.0; ns];
    let mut choice = vec![0usize; hz * ns];
    for h in (0..hz).rev() {
        for s in 0..ns {
            let mut best = f64::INFINITY;
            for j in 0..nj {
                let idx = game.index(h, s, j);
                let q = game.cost(0, h, s, j) + game.transitions().expect(idx, &next);
                if q < best - crate::cmdp::mdp::TIE_TOL {
                    best = q;
                    choice[h * ns + s] = j;
                }
            }
            cur[s] = best;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let min_cost: f64 = next
        .iter()
        .zip(game.initial_dist())
        .map(|(v, m)| v * m)
        .sum();
    let alpha = game.thresholds()[0];
    if min_cost > alpha + LP_RESIDUAL_TOL {
        return Err(Error::InfeasibleGame(format!(
            "smallest achievable cost {min_cost} exceeds threshold {alpha}"
        )));
    }
    let space = game.joint_space();
    let agents = (0..game.n_agents())
        .map(|i| {
            let own: Vec<usize> = choice.iter().map(|&j| space.action_of(j, i)).collect();
            AgentPolicy::deterministic(hz, ns, game.n_actions(i), &own)
        })
        .collect::<Result<Vec<_>>>()?;
    debug!("cost-minimizing start has cost {min_cost}");
    Ok(JointPolicy::new(agents))
}

/// One agent of a game with independent transitions: its own states,
/// actions, dynamics, reward and per-constraint cost contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredAgent {
    pub n_states: usize,
    pub n_actions: usize,
    /// Rows indexed by `(h * n_states + s) * n_actions + a`.
    pub transitions: Transitions,
    /// Stage reward in `(h, s, a)` order.
    pub reward: Vec<f64>,
    /// One `(h, s, a)` table per constraint.
    pub costs: Vec<Vec<f64>>,
    pub initial_dist: Vec<f64>,
}

/// Agents evolving independently whose constraint costs add up.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredGame {
    pub horizon: usize,
    pub agents: Vec<FactoredAgent>,
    pub thresholds: Vec<f64>,
}

impl FactoredGame {
    fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::Empty("agents"));
        }
        for (i, ag) in self.agents.iter().enumerate() {
            if ag.costs.len() != self.thresholds.len() {
                return Err(Error::Dimension(format!(
                    "agent {i} has {} cost tables for {} thresholds",
                    ag.costs.len(),
                    self.thresholds.len()
                )));
            }
            // validates shapes, ranges and the initial distribution
            for c in &ag.costs {
                self.local_model(i, c)?;
            }
            self.local_model(i, &ag.reward)?;
        }
        Ok(())
    }

    /// Agent `i`'s own model with the given table as cost and a slack threshold.
    fn local_model(&self, i: usize, cost: &[f64]) -> Result<Cmdp> {
        let ag = &self.agents[i];
        Cmdp::new(CmdpParts {
            n_states: ag.n_states,
            n_actions: ag.n_actions,
            horizon: self.horizon,
            transitions: ag.transitions.clone(),
            reward: ag.reward.clone(),
            cost: cost.to_vec(),
            threshold: self.horizon as f64,
            initial_dist: ag.initial_dist.clone(),
        })
    }

    fn state_space(&self) -> Result<JointSpace> {
        JointSpace::new(&self.agents.iter().map(|a| a.n_states).collect::<Vec<_>>())
    }

    /// The equivalent game on the product state space. Agent `i` is paid
    /// its own reward; constraint costs are summed and must stay in `[0, 1]`.
    pub fn to_cmpg(&self) -> Result<Cmpg> {
        self.validate()?;
        let states = self.state_space()?;
        let actions: Vec<usize> = self.agents.iter().map(|a| a.n_actions).collect();
        let joint = JointSpace::new(&actions)?;
        let (hz, ns, nj, n) = (self.horizon, states.size(), joint.size(), self.agents.len());
        let local = |i: usize, h: usize, s: usize, a: usize| {
            let ag = &self.agents[i];
            (h * ag.n_states + s) * ag.n_actions + a
        };
        let mut rows = Vec::with_capacity(hz * ns * nj);
        let mut rewards = vec![vec![0.0; hz * ns * nj]; n];
        let mut costs = vec![vec![0.0; hz * ns * nj]; self.thresholds.len()];
        for h in 0..hz {
            for s in 0..ns {
                let ls = states.decode(s);
                for j in 0..nj {
                    let la = joint.decode(j);
                    let idx = (h * ns + s) * nj + j;
                    for i in 0..n {
                        let li = local(i, h, ls[i], la[i]);
                        rewards[i][idx] = self.agents[i].reward[li];
                        for (c, table) in costs.iter_mut().enumerate() {
                            table[idx] += self.agents[i].costs[c][li];
                        }
                    }
                    // product of independent successor distributions
                    let mut row: Vec<(usize, f64)> = vec![(0, 1.0)];
                    for i in 0..n {
                        let (t, p) = self.agents[i].transitions.row(local(i, h, ls[i], la[i]));
                        let stride = states.stride(i);
                        row = row
                            .iter()
                            .flat_map(|&(code, q)| {
                                t.iter()
                                    .zip(p)
                                    .map(move |(&ti, &pi)| (code + ti * stride, q * pi))
                            })
                            .collect();
                    }
                    rows.push(row);
                }
            }
        }
        if let Some(c) = costs.iter().flatten().find(|&&c| c > 1.0) {
            return Err(Error::InvalidModel(format!(
                "summed stage cost {c} exceeds 1"
            )));
        }
        let initial_dist = (0..ns)
            .map(|s| {
                states
                    .decode(s)
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| self.agents[i].initial_dist[l])
                    .product()
            })
            .collect();
        Cmpg::new(CmpgParts {
            n_states: ns,
            actions_per_agent: actions,
            horizon: hz,
            transitions: Transitions::from_rows(ns, rows)?,
            rewards,
            costs,
            thresholds: self.thresholds.clone(),
            initial_dist,
        })
    }

    /// Per-agent policies as a profile on the product state space.
    pub fn lift(&self, local: &[AgentPolicy]) -> Result<JointPolicy> {
        if local.len() != self.agents.len() {
            return Err(Error::Dimension(format!(
                "{} policies for {} agents",
                local.len(),
                self.agents.len()
            )));
        }
        let states = self.state_space()?;
        let ns = states.size();
        let agents = local
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let na = self.agents[i].n_actions;
                let mut probs = Vec::with_capacity(self.horizon * ns * na);
                for h in 0..self.horizon {
                    for s in 0..ns {
                        probs.extend_from_slice(p.dist(h, states.action_of(s, i)));
                    }
                }
                AgentPolicy::new(self.horizon, ns, na, probs)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(JointPolicy::new(agents))
    }

    /// Constraint values of independent local policies: sums of each
    /// agent's own expected cost.
    pub fn composite_costs(&self, local: &[AgentPolicy]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.thresholds.len()];
        for (i, p) in local.iter().enumerate() {
            for (c, table) in self.agents[i].costs.iter().enumerate() {
                out[c] += self.local_model(i, table)?.evaluate(p)?.cost;
            }
        }
        Ok(out)
    }
}

/// Local policies, their lifted profile and the composite cost values.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredInit {
    pub local: Vec<AgentPolicy>,
    pub policy: JointPolicy,
    pub cost_values: Vec<f64>,
}

/// Feasible start for a game with independent transitions and additive
/// constraints: each agent minimizes its worst own constraint contribution.
///
/// With one constraint this is a cost-minimizing backward induction per
/// agent; with several, a min-max linear program over the agent's
/// occupancy measures. Fails with [`Error::InfeasibleGame`] if the summed
/// costs still exceed a threshold.
pub fn feasible_init_independent(game: &FactoredGame) -> Result<FactoredInit> {
    game.validate()?;
    let mut local = Vec::with_capacity(game.agents.len());
    for (i, ag) in game.agents.iter().enumerate() {
        let policy = match ag.costs.len() {
            0 => AgentPolicy::deterministic(
                game.horizon,
                ag.n_states,
                ag.n_actions,
                &vec![0; game.horizon * ag.n_states],
            )?,
            1 => {
                let model = game.local_model(i, &ag.costs[0])?;
                let neg: Vec<f64> = ag.costs[0].iter().map(|c| -c).collect();
                solve_mdp(&model, &neg)?.policy
            }
            _ => min_max_cost_policy(&game.local_model(i, &ag.costs[0])?, &ag.costs)?,
        };
        local.push(policy);
    }
    let cost_values = game.composite_costs(&local)?;
    for (c, (&v, &alpha)) in cost_values.iter().zip(&game.thresholds).enumerate() {
        if v > alpha + LP_RESIDUAL_TOL {
            return Err(Error::InfeasibleGame(format!(
                "constraint {c}: independent minimizers reach {v}, threshold {alpha}"
            )));
        }
    }
    let policy = game.lift(&local)?;
    Ok(FactoredInit {
        local,
        policy,
        cost_values,
    })
}

/// Policy minimizing the largest of several expected costs.
fn min_max_cost_policy(model: &Cmdp, costs: &[Vec<f64>]) -> Result<AgentPolicy> {
    let mut lp = LinearProgram::minimize();
    let vars = OccupancyVars::add(&mut lp, model, |_| 0.0);
    let bound = lp.var(1.0, 0.0, f64::INFINITY);
    for table in costs {
        let mut terms = vars.terms(model, table);
        terms.push((bound, -1.0));
        lp.constraint(&terms, Relation::Le, 0.0);
    }
    let sol = lp.solve()?;
    Ok(vars.recover(model, &sol.values)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::random::random_cooperative_game;
    use crate::tabular::evaluate;
    use crate::tabular::model::tests::matrix_game;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const A: [f64; 4] = [0.75, 0.5, 0.5, 1.0];
    const B: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

    #[test]
    fn counterexample_picks_first_zero_cost_cell() {
        let g = matrix_game(&A, &B, 2, 0.5);
        let p = feasible_init_single_constraint(&g).unwrap();
        assert_eq!(p.agent(0).as_deterministic(), Some(vec![0]));
        assert_eq!(p.agent(1).as_deterministic(), Some(vec![0]));
        assert_eq!(evaluate(&g, &p).unwrap().cost_values, vec![0.0]);
    }

    #[test]
    fn ties_go_to_first_actions() {
        let g = matrix_game(&A, &[0.0; 4], 2, 0.5);
        assert_eq!(
            feasible_init_single_constraint(&g).unwrap(),
            g.first_action_policy()
        );
    }

    #[test]
    fn infeasible_game_is_reported() {
        let g = matrix_game(&A, &[1.0, 0.8, 0.9, 0.7], 2, 0.5);
        assert!(matches!(
            feasible_init_single_constraint(&g),
            Err(Error::InfeasibleGame(_))
        ));
    }

    #[test]
    fn joint_minimum_matches_enumeration() {
        // with H = 1 and one state the joint minimum is the smallest cell
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let g = random_cooperative_game(&mut rng, &[2, 3], 2, 2, 2.0);
            let p = feasible_init_single_constraint(&g).unwrap();
            let v = evaluate(&g, &p).unwrap().cost_values[0];
            // every deterministic joint policy costs at least as much
            let n = g.n_joint();
            let mut best = f64::INFINITY;
            for code in 0..n.pow((g.horizon() * g.n_states()) as u32) {
                let mut c = code;
                let choice: Vec<usize> = (0..g.horizon() * g.n_states())
                    .map(|_| {
                        let j = c % n;
                        c /= n;
                        j
                    })
                    .collect();
                let agents = (0..2)
                    .map(|i| {
                        let own: Vec<usize> = choice
                            .iter()
                            .map(|&j| g.joint_space().action_of(j, i))
                            .collect();
                        AgentPolicy::deterministic(g.horizon(), g.n_states(), g.n_actions(i), &own)
                            .unwrap()
                    })
                    .collect();
                best = best.min(evaluate(&g, &JointPolicy::new(agents)).unwrap().cost_values[0]);
            }
            assert!((v - best).abs() < 1e-10, "{v} vs {best}");
        }
    }

    fn bandit_agent(reward: [f64; 2], costs: Vec<[f64; 2]>) -> FactoredAgent {
        FactoredAgent {
            n_states: 1,
            n_actions: 2,
            transitions: Transitions::from_dense(1, &[1.0, 1.0]).unwrap(),
            reward: reward.to_vec(),
            costs: costs.into_iter().map(|c| c.to_vec()).collect(),
            initial_dist: vec![1.0],
        }
    }

    #[test]
    fn additive_composition() {
        let game = FactoredGame {
            horizon: 1,
            agents: vec![
                bandit_agent([1.0, 0.0], vec![[0.6, 0.2]]),
                bandit_agent([0.0, 1.0], vec![[0.1, 0.4]]),
            ],
            thresholds: vec![0.5],
        };
        let init = feasible_init_independent(&game).unwrap();
        assert!((init.cost_values[0] - 0.3).abs() < 1e-12);
        let full = game.to_cmpg().unwrap();
        let v = evaluate(&full, &init.policy).unwrap();
        assert!((v.cost_values[0] - 0.3).abs() < 1e-12);
        let tight = FactoredGame {
            thresholds: vec![0.25],
            ..game
        };
        assert!(matches!(
            feasible_init_independent(&tight),
            Err(Error::InfeasibleGame(_))
        ));
    }

    #[test]
    fn zero_costs_take_first_actions() {
        let game = FactoredGame {
            horizon: 1,
            agents: vec![bandit_agent([1.0, 0.0], vec![[0.0, 0.0]]); 2],
            thresholds: vec![0.0],
        };
        let init = feasible_init_independent(&game).unwrap();
        for p in &init.local {
            assert_eq!(p.as_deterministic(), Some(vec![0]));
        }
    }

    #[test]
    fn min_max_mixes_competing_constraints() {
        // constraint 0 hates action 0, constraint 1 hates action 1: the
        // min-max policy is uniform with worst cost 0.5
        let game = FactoredGame {
            horizon: 1,
            agents: vec![bandit_agent([0.0, 0.0], vec![[1.0, 0.0], [0.0, 1.0]])],
            thresholds: vec![0.5, 0.5],
        };
        let init = feasible_init_independent(&game).unwrap();
        assert!((init.local[0].prob(0, 0, 0) - 0.5).abs() < 1e-9);
        for v in init.cost_values {
            assert!((v - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn product_game_matches_local_dynamics() {
        let mk = |p: f64| FactoredAgent {
            n_states: 2,
            n_actions: 2,
            transitions: Transitions::from_dense(
                2,
                &[
                    1.0 - p,
                    p,
                    1.0,
                    0.0,
                    0.0,
                    1.0,
                    0.5,
                    0.5,
                    1.0,
                    0.0,
                    1.0,
                    0.0,
                    0.3,
                    0.7,
                    0.0,
                    1.0,
                ],
            )
            .unwrap(),
            reward: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
            costs: vec![vec![0.0, 0.5, 0.25, 0.0, 0.5, 0.0, 0.0, 0.25]],
            initial_dist: vec![0.6, 0.4],
        };
        let game = FactoredGame {
            horizon: 2,
            agents: vec![mk(0.3), mk(0.9)],
            thresholds: vec![1.0],
        };
        let full = game.to_cmpg().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let local: Vec<AgentPolicy> = (0..2)
                .map(|_| crate::envs::random::random_policy(&mut rng, 2, 2, 2))
                .collect();
            let joint = game.lift(&local).unwrap();
            let v = evaluate(&full, &joint).unwrap();
            let c = game.composite_costs(&local).unwrap();
            assert!((v.cost_values[0] - c[0]).abs() < 1e-12);
            for i in 0..2 {
                let own = game
                    .local_model(i, &game.agents[i].costs[0])
                    .unwrap()
                    .evaluate(&local[i])
                    .unwrap();
                assert!((v.reward_values[i] - own.reward).abs() < 1e-12);
            }
        }
    }
}
