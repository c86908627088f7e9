use crate::error::{Error, Result};
use crate::tabular::joint::{CountTables, JointSpace};
use crate::tabular::policy::{AgentPolicy, JointPolicy};
use crate::tabular::transitions::{check_simplex, row_index, Transitions};

const RANGE_TOL: f64 = 1e-12;

/// Raw ingredients of a game; validated by [`Cmpg::new`].
///
/// Stage tables are dense and row-major `[h][s][joint]`; transition rows are
/// indexed the same way.
#[derive(Clone, Debug)]
pub struct CmpgParts {
    pub n_states: usize,
    pub actions_per_agent: Vec<usize>,
    pub horizon: usize,
    pub transitions: Transitions,
    pub rewards: Vec<Vec<f64>>,
    pub costs: Vec<Vec<f64>>,
    pub thresholds: Vec<f64>,
    pub initial_dist: Vec<f64>,
}

/// A finite-horizon tabular constrained Markov potential game.
#[derive(Clone, Debug, PartialEq)]
pub struct Cmpg {
    n_states: usize,
    horizon: usize,
    space: JointSpace,
    transitions: Transitions,
    rewards: Vec<Vec<f64>>,
    costs: Vec<Vec<f64>>,
    thresholds: Vec<f64>,
    initial_dist: Vec<f64>,
    cooperative: bool,
    counts: Option<CountTables>,
}

impl Cmpg {
    pub fn new(parts: CmpgParts) -> Result<Self> {
        let CmpgParts {
            n_states,
            actions_per_agent,
            horizon,
            transitions,
            rewards,
            costs,
            thresholds,
            initial_dist,
        } = parts;
        if n_states == 0 || horizon == 0 {
            return Err(Error::InvalidModel(
                "need at least one state and one step".into(),
            ));
        }
        let space = JointSpace::new(&actions_per_agent)?;
        let table = horizon * n_states * space.size();
        if transitions.n_states() != n_states || transitions.n_rows() != table {
            return Err(Error::Dimension(format!(
                "transitions have {} rows over {} states, expected {table} rows over {n_states}",
                transitions.n_rows(),
                transitions.n_states()
            )));
        }
        if rewards.len() != space.n_agents() {
            return Err(Error::Dimension(format!(
                "{} reward tables for {} agents",
                rewards.len(),
                space.n_agents()
            )));
        }
        for (i, r) in rewards.iter().enumerate() {
            check_stage(&format!("reward of agent {i}"), r, table)?;
        }
        if costs.len() != thresholds.len() {
            return Err(Error::Dimension(format!(
                "{} cost tables but {} thresholds",
                costs.len(),
                thresholds.len()
            )));
        }
        for (j, c) in costs.iter().enumerate() {
            check_stage(&format!("cost {j}"), c, table)?;
        }
        for (j, &a) in thresholds.iter().enumerate() {
            if !(a >= -RANGE_TOL && a <= horizon as f64 + RANGE_TOL) {
                return Err(Error::InvalidModel(format!(
                    "threshold {j} = {a} outside [0, {horizon}]"
                )));
            }
        }
        if initial_dist.len() != n_states {
            return Err(Error::Dimension(format!(
                "initial distribution has {} entries for {n_states} states",
                initial_dist.len()
            )));
        }
        check_simplex("initial distribution", &initial_dist)?;
        let cooperative = rewards.windows(2).all(|w| w[0] == w[1]);
        Ok(Self {
            n_states,
            horizon,
            space,
            transitions,
            rewards,
            costs,
            thresholds,
            initial_dist,
            cooperative,
            counts: None,
        })
    }

    /// Declares that stage data depend on opponents only through action
    /// counts, enabling count-convolution marginalization. The claim is
    /// checked exhaustively against the dense tables.
    pub fn with_count_symmetry(mut self) -> Result<Self> {
        let tables = CountTables::new(&self.space)?;
        self.check_count_symmetry(&tables)?;
        self.counts = Some(tables);
        Ok(self)
    }

    fn check_count_symmetry(&self, t: &CountTables) -> Result<()> {
        let n_joint = self.space.size();
        for h in 0..self.horizon {
            for s in 0..self.n_states {
                let base = (h * self.n_states + s) * n_joint;
                for joint in 0..n_joint {
                    let slot = t.slot(t.code_of_joint(&self.space, joint));
                    let rep = t.slot_joint(slot);
                    if rep == joint {
                        continue;
                    }
                    for (j, c) in self.costs.iter().enumerate() {
                        if (c[base + joint] - c[base + rep]).abs() > RANGE_TOL {
                            return Err(Error::InvalidModel(format!(
                                "cost {j} is not count-symmetric at step {h}, state {s}"
                            )));
                        }
                    }
                    let a = self.transitions.dense_row(base + joint);
                    let b = self.transitions.dense_row(base + rep);
                    if a.iter().zip(&b).any(|(x, y)| (x - y).abs() > RANGE_TOL) {
                        return Err(Error::InvalidModel(format!(
                            "transitions are not count-symmetric at step {h}, state {s}"
                        )));
                    }
                    for i in 0..self.space.n_agents() {
                        let own = self.space.action_of(joint, i);
                        let (rj, ri) = t.rep(slot, own);
                        if (self.rewards[i][base + joint] - self.rewards[ri][base + rj]).abs()
                            > RANGE_TOL
                        {
                            return Err(Error::InvalidModel(format!(
                                "reward of agent {i} is not count-symmetric at step {h}, state {s}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Drops count tables so every marginalization enumerates joint actions.
    pub fn without_count_symmetry(mut self) -> Self {
        self.counts = None;
        self
    }

    pub fn n_agents(&self) -> usize {
        self.space.n_agents()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn actions_per_agent(&self) -> &[usize] {
        self.space.sizes()
    }

    pub fn n_actions(&self, agent: usize) -> usize {
        self.space.sizes()[agent]
    }

    pub fn joint_space(&self) -> &JointSpace {
        &self.space
    }

    pub fn n_joint(&self) -> usize {
        self.space.size()
    }

    pub fn n_constraints(&self) -> usize {
        self.costs.len()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn transitions(&self) -> &Transitions {
        &self.transitions
    }

    pub fn is_cooperative(&self) -> bool {
        self.cooperative
    }

    pub fn count_tables(&self) -> Option<&CountTables> {
        self.counts.as_ref()
    }

    pub fn is_count_symmetric(&self) -> bool {
        self.counts.is_some()
    }

    /// Row index for `(h, s, joint)` in stage tables and transitions.
    #[inline]
    pub fn index(&self, h: usize, s: usize, joint: usize) -> usize {
        row_index(self.n_states, self.space.size(), h, s, joint)
    }

    #[inline]
    pub fn reward(&self, agent: usize, h: usize, s: usize, joint: usize) -> f64 {
        self.rewards[agent][self.index(h, s, joint)]
    }

    #[inline]
    pub fn cost(&self, j: usize, h: usize, s: usize, joint: usize) -> f64 {
        self.costs[j][self.index(h, s, joint)]
    }

    pub fn reward_table(&self, agent: usize) -> &[f64] {
        &self.rewards[agent]
    }

    pub fn cost_table(&self, j: usize) -> &[f64] {
        &self.costs[j]
    }

    /// Checks that a joint policy matches this game's shape.
    pub fn check_policy(&self, policy: &JointPolicy) -> Result<()> {
        if policy.n_agents() != self.n_agents() {
            return Err(Error::Dimension(format!(
                "policy has {} agents, game has {}",
                policy.n_agents(),
                self.n_agents()
            )));
        }
        for (i, p) in policy.agents.iter().enumerate() {
            self.check_agent_policy(i, p)?;
        }
        Ok(())
    }

    pub fn check_agent_policy(&self, agent: usize, p: &AgentPolicy) -> Result<()> {
        if agent >= self.n_agents() {
            return Err(Error::Dimension(format!("agent {agent} out of range")));
        }
        if p.horizon() != self.horizon
            || p.n_states() != self.n_states
            || p.n_actions() != self.n_actions(agent)
        {
            return Err(Error::Dimension(format!(
                "policy of agent {agent} has shape (H={}, S={}, A={}), game expects (H={}, S={}, A={})",
                p.horizon(),
                p.n_states(),
                p.n_actions(),
                self.horizon,
                self.n_states,
                self.n_actions(agent)
            )));
        }
        Ok(())
    }

    /// Every agent plays its first action everywhere.
    pub fn first_action_policy(&self) -> JointPolicy {
        JointPolicy::new(
            (0..self.n_agents())
                .map(|i| {
                    AgentPolicy::deterministic(
                        self.horizon,
                        self.n_states,
                        self.n_actions(i),
                        &vec![0; self.horizon * self.n_states],
                    )
                    .expect("valid shape")
                })
                .collect(),
        )
    }

    pub fn uniform_policy(&self) -> JointPolicy {
        JointPolicy::new(
            (0..self.n_agents())
                .map(|i| AgentPolicy::uniform(self.horizon, self.n_states, self.n_actions(i)))
                .collect(),
        )
    }

    /// Same game with new constraint thresholds; count symmetry is kept.
    pub fn with_thresholds(self, thresholds: Vec<f64>) -> Result<Cmpg> {
        let (mut parts, symmetric) = self.into_parts();
        parts.thresholds = thresholds;
        let game = Cmpg::new(parts)?;
        if symmetric {
            game.with_count_symmetry()
        } else {
            Ok(game)
        }
    }

    pub(crate) fn into_parts(self) -> (CmpgParts, bool) {
        let symmetric = self.counts.is_some();
        (
            CmpgParts {
                n_states: self.n_states,
                actions_per_agent: self.space.sizes().to_vec(),
                horizon: self.horizon,
                transitions: self.transitions,
                rewards: self.rewards,
                costs: self.costs,
                thresholds: self.thresholds,
                initial_dist: self.initial_dist,
            },
            symmetric,
        )
    }
}

fn check_stage(what: &str, table: &[f64], expected: usize) -> Result<()> {
    if table.len() != expected {
        return Err(Error::Dimension(format!(
            "{what} has {} entries, expected {expected}",
            table.len()
        )));
    }
    if let Some(x) = table
        .iter()
        .find(|x| !(**x >= -RANGE_TOL && **x <= 1.0 + RANGE_TOL))
    {
        return Err(Error::InvalidModel(format!(
            "{what} has entry {x} outside [0, 1]"
        )));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Single-state one-step game with shared reward `a` and one cost `b`.
    pub(crate) fn matrix_game(a: &[f64], b: &[f64], m: usize, alpha: f64) -> Cmpg {
        Cmpg::new(CmpgParts {
            n_states: 1,
            actions_per_agent: vec![m, m],
            horizon: 1,
            transitions: Transitions::from_dense(1, &vec![1.0; m * m]).unwrap(),
            rewards: vec![a.to_vec(), a.to_vec()],
            costs: vec![b.to_vec()],
            thresholds: vec![alpha],
            initial_dist: vec![1.0],
        })
        .unwrap()
    }

    #[test]
    fn validation() {
        let g = matrix_game(&[0.5, 0.2, 0.2, 1.0], &[0.0, 0.0, 0.0, 1.0], 2, 0.5);
        assert!(g.is_cooperative());
        assert_eq!(g.n_joint(), 4);
        let (mut parts, _) = g.clone().into_parts();
        parts.rewards[0][0] = 1.5;
        assert!(matches!(Cmpg::new(parts), Err(Error::InvalidModel(_))));
        let (mut parts, _) = g.clone().into_parts();
        parts.thresholds[0] = 2.0;
        assert!(Cmpg::new(parts).is_err());
        let (mut parts, _) = g.clone().into_parts();
        parts.initial_dist = vec![0.5];
        assert!(Cmpg::new(parts).is_err());
        let (mut parts, _) = g.into_parts();
        parts.costs[0].pop();
        assert!(matches!(Cmpg::new(parts), Err(Error::Dimension(_))));
    }

    #[test]
    fn non_cooperative_flag() {
        let g = matrix_game(&[0.5, 0.2, 0.2, 1.0], &[0.0; 4], 2, 0.5);
        let (mut parts, _) = g.into_parts();
        parts.rewards[1][0] = 0.1;
        assert!(!Cmpg::new(parts).unwrap().is_cooperative());
    }

    #[test]
    fn policy_shape_checks() {
        let g = matrix_game(&[0.0; 4], &[0.0; 4], 2, 0.5);
        let bad = JointPolicy::new(vec![
            AgentPolicy::uniform(1, 1, 3),
            AgentPolicy::uniform(1, 1, 2),
        ]);
        assert!(matches!(g.check_policy(&bad), Err(Error::Dimension(_))));
        assert!(g.check_policy(&g.uniform_policy()).is_ok());
    }

    #[test]
    fn asymmetric_game_rejects_count_symmetry() {
        let g = matrix_game(&[0.5, 0.2, 0.3, 1.0], &[0.0; 4], 2, 0.5);
        assert!(g.clone().with_count_symmetry().is_err());
        let sym = matrix_game(&[0.5, 0.2, 0.2, 1.0], &[0.0, 0.3, 0.3, 1.0], 2, 0.5);
        assert!(sym.with_count_symmetry().is_ok());
    }
}
