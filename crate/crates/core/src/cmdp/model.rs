use rand::Rng;

use crate::error::{Error, Result};
use crate::tabular::transitions::{row_index, sample_index, Transitions};
use crate::tabular::{AgentPolicy, Cmpg, CmpgParts, GameDocument};

/// Ingredients of a single-agent constrained model; validated by [`Cmdp::new`].
#[derive(Clone, Debug)]
pub struct CmdpParts {
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: usize,
    pub transitions: Transitions,
    /// `[h][s][a]`
    pub reward: Vec<f64>,
    /// `[h][s][a]`
    pub cost: Vec<f64>,
    pub threshold: f64,
    pub initial_dist: Vec<f64>,
}

/// Finite-horizon tabular CMDP with a single constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct Cmdp {
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    transitions: Transitions,
    reward: Vec<f64>,
    cost: Vec<f64>,
    threshold: f64,
    initial_dist: Vec<f64>,
}

/// Values of a policy for the reward and the cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmdpValues {
    pub reward: f64,
    pub cost: f64,
}

impl Cmdp {
    pub fn new(parts: CmdpParts) -> Result<Self> {
        let game = Cmpg::new(CmpgParts {
            n_states: parts.n_states,
            actions_per_agent: vec![parts.n_actions],
            horizon: parts.horizon,
            transitions: parts.transitions,
            rewards: vec![parts.reward],
            costs: vec![parts.cost],
            thresholds: vec![parts.threshold],
            initial_dist: parts.initial_dist,
        })?;
        Self::from_game(game)
    }

    /// Views a one-agent, one-constraint game as a CMDP.
    pub fn from_game(game: Cmpg) -> Result<Self> {
        if game.n_agents() != 1 || game.n_constraints() != 1 {
            return Err(Error::Unsupported(format!(
                "a CMDP needs one agent and one constraint, got {} and {}",
                game.n_agents(),
                game.n_constraints()
            )));
        }
        let (mut p, _) = game.into_parts();
        Ok(Self {
            n_states: p.n_states,
            n_actions: p.actions_per_agent[0],
            horizon: p.horizon,
            transitions: p.transitions,
            reward: p.rewards.pop().unwrap(),
            cost: p.costs.pop().unwrap(),
            threshold: p.thresholds[0],
            initial_dist: p.initial_dist,
        })
    }

    pub fn to_game(&self) -> Cmpg {
        Cmpg::new(CmpgParts {
            n_states: self.n_states,
            actions_per_agent: vec![self.n_actions],
            horizon: self.horizon,
            transitions: self.transitions.clone(),
            rewards: vec![self.reward.clone()],
            costs: vec![self.cost.clone()],
            thresholds: vec![self.threshold],
            initial_dist: self.initial_dist.clone(),
        })
        .expect("a valid CMDP is a valid one-agent game")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&GameDocument::from_game(
            &self.to_game(),
        ))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_game(Cmpg::from_json(text)?)
    }

    /// Same model with a different threshold.
    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        if !(0.0..=self.horizon as f64).contains(&threshold) {
            return Err(Error::InvalidModel(format!(
                "threshold {threshold} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(Self {
            threshold,
            ..self.clone()
        })
    }

    pub(crate) fn with_transitions(&self, transitions: Transitions) -> Self {
        Self {
            transitions,
            ..self.clone()
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn transitions(&self) -> &Transitions {
        &self.transitions
    }

    pub fn reward(&self) -> &[f64] {
        &self.reward
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    /// Number of `(h, s, a)` entries.
    pub fn table_len(&self) -> usize {
        self.horizon * self.n_states * self.n_actions
    }

    #[inline]
    pub fn index(&self, h: usize, s: usize, a: usize) -> usize {
        row_index(self.n_states, self.n_actions, h, s, a)
    }

    pub fn check_policy(&self, p: &AgentPolicy) -> Result<()> {
        if p.horizon() != self.horizon
            || p.n_states() != self.n_states
            || p.n_actions() != self.n_actions
        {
            return Err(Error::Dimension(format!(
                "policy shape (H={}, S={}, A={}) does not match model (H={}, S={}, A={})",
                p.horizon(),
                p.n_states(),
                p.n_actions(),
                self.horizon,
                self.n_states,
                self.n_actions
            )));
        }
        Ok(())
    }

    fn check_stage(&self, stage: &[f64]) -> Result<()> {
        if stage.len() != self.table_len() {
            return Err(Error::Dimension(format!(
                "stage table has {} entries, expected {}",
                stage.len(),
                self.table_len()
            )));
        }
        Ok(())
    }

    /// Value of an arbitrary stage table under `policy`.
    pub fn evaluate_stage(&self, policy: &AgentPolicy, stage: &[f64]) -> Result<f64> {
        self.check_policy(policy)?;
        self.check_stage(stage)?;
        Ok(self.value_unchecked(policy, stage))
    }

    fn value_unchecked(&self, policy: &AgentPolicy, stage: &[f64]) -> f64 {
        let ns = self.n_states;
        let mut next = vec![0.0; ns];
        let mut cur = vec![0.0; ns];
        for h in (0..self.horizon).rev() {
            for (s, v) in cur.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (a, &p) in policy.dist(h, s).iter().enumerate() {
                    if p > 0.0 {
                        let idx = self.index(h, s, a);
                        acc += p * (stage[idx] + self.transitions.expect(idx, &next));
                    }
                }
                *v = acc;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        next.iter()
            .zip(&self.initial_dist)
            .map(|(v, m)| v * m)
            .sum()
    }

    pub fn evaluate(&self, policy: &AgentPolicy) -> Result<CmdpValues> {
        self.check_policy(policy)?;
        Ok(CmdpValues {
            reward: self.value_unchecked(policy, &self.reward),
            cost: self.value_unchecked(policy, &self.cost),
        })
    }

    /// Cumulative reward and cost of one sampled episode.
    pub fn sample_returns<R: Rng + ?Sized>(&self, policy: &AgentPolicy, rng: &mut R) -> (f64, f64) {
        let mut s = sample_index(&self.initial_dist, rng.gen());
        let (mut r, mut c) = (0.0, 0.0);
        for h in 0..self.horizon {
            let a = sample_index(policy.dist(h, s), rng.gen());
            let idx = self.index(h, s, a);
            r += self.reward[idx];
            c += self.cost[idx];
            s = self.transitions.sample(idx, rng.gen());
        }
        (r, c)
    }

    /// Forward-reachable states per step under some policy.
    pub fn reachable(&self) -> Vec<Vec<bool>> {
        let ns = self.n_states;
        let mut out = vec![vec![false; ns]; self.horizon];
        for (s, &m) in self.initial_dist.iter().enumerate() {
            out[0][s] = m > 0.0;
        }
        for h in 0..self.horizon - 1 {
            for s in 0..ns {
                if !out[h][s] {
                    continue;
                }
                for a in 0..self.n_actions {
                    let (targets, _) = self.transitions.row(self.index(h, s, a));
                    for &t in targets {
                        out[h + 1][t] = true;
                    }
                }
            }
        }
        out
    }

    /// Smallest achievable expected cost.
    pub fn min_cost(&self) -> f64 {
        let neg: Vec<f64> = self.cost.iter().map(|c| -c).collect();
        -crate::cmdp::mdp::solve_mdp(self, &neg)
            .expect("stage table has the model's shape")
            .value
    }

    /// Best achievable slack `threshold - min cost`.
    pub fn slater_constant(&self) -> f64 {
        self.threshold - self.min_cost()
    }
}
