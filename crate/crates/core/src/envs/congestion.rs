use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{AgentPolicy, Cmpg, CmpgParts, JointPolicy, JointSpace, Transitions};

pub const SAFE: usize = 0;
pub const UNSAFE: usize = 1;
pub const N_ROUTES: usize = 4;

/// Two-state congestion game: agents are paid for sharing a route, crowding
/// one route makes the system unsafe, and only an even split restores it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CongestionConfig {
    pub n_agents: usize,
    /// Per-route weights in the safe state, strictly increasing.
    pub weights_safe: [f64; N_ROUTES],
    /// Per-route weights in the unsafe state, strictly increasing.
    pub weights_unsafe: [f64; N_ROUTES],
    /// Subtracted from unsafe-state payments.
    pub offset: f64,
    pub horizon: usize,
    pub alpha: f64,
    /// Probability of starting in the safe state.
    pub initial_safe: f64,
    /// Multiplies raw rewards; `None` picks `1 / (n_agents * largest safe weight)`.
    pub reward_scale: Option<f64>,
}

impl Default for CongestionConfig {
    fn default() -> Self {
        Self {
            n_agents: 8,
            weights_safe: [1.0, 2.0, 3.0, 4.0],
            weights_unsafe: [0.5, 1.0, 1.5, 2.0],
            offset: 3.0,
            horizon: 2,
            alpha: 0.5,
            initial_safe: 0.5,
            reward_scale: None,
        }
    }
}

impl CongestionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 || self.horizon == 0 {
            return Err(Error::Config("need at least one agent and one step".into()));
        }
        for w in [&self.weights_safe, &self.weights_unsafe] {
            if w.iter().any(|x| !(*x > 0.0) || !x.is_finite()) || w.windows(2).any(|p| p[0] >= p[1])
            {
                return Err(Error::Config(format!(
                    "weights {w:?} must be positive and strictly increasing"
                )));
            }
        }
        if !(self.offset >= 0.0) {
            return Err(Error::Config(format!(
                "offset {} must be non-negative",
                self.offset
            )));
        }
        for a in 0..N_ROUTES {
            for k in 1..=self.n_agents {
                let k = k as f64;
                if k * self.weights_safe[a] <= k * self.weights_unsafe[a] - self.offset {
                    return Err(Error::Config(format!(
                        "route {a}: the safe state must pay more than the unsafe one"
                    )));
                }
            }
        }
        let scale = self.scale();
        let top = self.n_agents as f64
            * self.weights_safe[N_ROUTES - 1].max(self.weights_unsafe[N_ROUTES - 1]);
        if !(scale > 0.0) || scale * top > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "reward scale {scale} does not map rewards into [0, 1]"
            )));
        }
        if !(0.0..=1.0).contains(&self.initial_safe) {
            return Err(Error::Config(
                "initial safe probability outside [0, 1]".into(),
            ));
        }
        if !(0.0..=self.horizon as f64).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "threshold {} outside [0, {}]",
                self.alpha, self.horizon
            )));
        }
        Ok(())
    }

    pub fn scale(&self) -> f64 {
        self.reward_scale
            .unwrap_or(1.0 / (self.n_agents as f64 * self.weights_safe[N_ROUTES - 1]))
    }

    /// Raw payment to an agent on a route shared by `count` agents.
    pub fn raw_reward(&self, state: usize, route: usize, count: usize) -> f64 {
        let k = count as f64;
        if state == SAFE {
            k * self.weights_safe[route]
        } else {
            (k * self.weights_unsafe[route] - self.offset).max(0.0)
        }
    }

    /// Successor state given the route counts.
    pub fn next_state(&self, state: usize, counts: &[usize]) -> usize {
        let top = counts.iter().copied().max().unwrap_or(0) as f64;
        let n = self.n_agents as f64;
        match state {
            SAFE if top > n / 2.0 => UNSAFE,
            SAFE => SAFE,
            _ if top <= n / 4.0 => SAFE,
            _ => UNSAFE,
        }
    }

    /// Stage cost: crowding in the unsafe state at the first step.
    pub fn stage_cost(&self, h: usize, state: usize, counts: &[usize]) -> f64 {
        let top = counts.iter().copied().max().unwrap_or(0) as f64;
        if h == 0 && state == UNSAFE && top > self.n_agents as f64 / 2.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// The congestion game with count symmetry enabled, so marginals over the
/// other agents are computed from route-count distributions.
pub fn build_congestion_game(cfg: &CongestionConfig) -> Result<Cmpg> {
    cfg.validate()?;
    let n = cfg.n_agents;
    let space = JointSpace::new(&vec![N_ROUTES; n])?;
    let nj = space.size();
    let (hz, ns) = (cfg.horizon, 2);
    let scale = cfg.scale();
    let len = hz * ns * nj;
    let mut rows = Vec::with_capacity(len);
    let mut rewards = vec![Vec::with_capacity(len); n];
    let mut cost = Vec::with_capacity(len);
    let mut counts = [0usize; N_ROUTES];
    for h in 0..hz {
        for s in 0..ns {
            for j in 0..nj {
                let actions = space.decode(j);
                counts.fill(0);
                for &a in &actions {
                    counts[a] += 1;
                }
                rows.push(vec![(cfg.next_state(s, &counts), 1.0)]);
                for (i, &a) in actions.iter().enumerate() {
                    rewards[i].push(scale * cfg.raw_reward(s, a, counts[a]));
                }
                cost.push(cfg.stage_cost(h, s, &counts));
            }
        }
    }
    Cmpg::new(CmpgParts {
        n_states: ns,
        actions_per_agent: vec![N_ROUTES; n],
        horizon: hz,
        transitions: Transitions::from_rows(ns, rows)?,
        rewards,
        costs: vec![cost],
        thresholds: vec![cfg.alpha],
        initial_dist: vec![cfg.initial_safe, 1.0 - cfg.initial_safe],
    })?
    .with_count_symmetry()
}

/// Cost-free starting profile: at the first step agent `i` takes route
/// `i mod 4` in the unsafe state, spreading agents as evenly as possible;
/// every other row is uniform.
pub fn even_split_policy(cfg: &CongestionConfig) -> Result<JointPolicy> {
    cfg.validate()?;
    let uniform = vec![1.0 / N_ROUTES as f64; N_ROUTES];
    let agents = (0..cfg.n_agents)
        .map(|i| {
            let mut p = AgentPolicy::stationary(cfg.horizon, 2, &uniform)?;
            let mut row = [0.0; N_ROUTES];
            row[i % N_ROUTES] = 1.0;
            p.set_dist(0, UNSAFE, &row)?;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JointPolicy::new(agents))
}
