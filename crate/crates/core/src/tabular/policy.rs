use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::transitions::SIMPLEX_TOL;

/// A Markov policy for one agent: an action distribution per step and state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAgentPolicy")]
pub struct AgentPolicy {
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    /// Row-major `[h][s][a]`.
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawAgentPolicy {
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl TryFrom<RawAgentPolicy> for AgentPolicy {
    type Error = Error;
    fn try_from(raw: RawAgentPolicy) -> Result<Self> {
        AgentPolicy::new(raw.horizon, raw.n_states, raw.n_actions, raw.probs)
    }
}

impl AgentPolicy {
    pub fn new(horizon: usize, n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if horizon == 0 || n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidPolicy("empty policy shape".into()));
        }
        if probs.len() != horizon * n_states * n_actions {
            return Err(Error::Dimension(format!(
                "policy buffer has {} entries, expected {}",
                probs.len(),
                horizon * n_states * n_actions
            )));
        }
        let policy = Self {
            horizon,
            n_states,
            n_actions,
            probs,
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Uniform over actions everywhere.
    pub fn uniform(horizon: usize, n_states: usize, n_actions: usize) -> Self {
        let p = 1.0 / n_actions as f64;
        Self {
            horizon,
            n_states,
            n_actions,
            probs: vec![p; horizon * n_states * n_actions],
        }
    }

    /// Deterministic policy from an `[h][s]` table of actions.
    pub fn deterministic(
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        actions: &[usize],
    ) -> Result<Self> {
        if actions.len() != horizon * n_states {
            return Err(Error::Dimension(format!(
                "action table has {} entries, expected {}",
                actions.len(),
                horizon * n_states
            )));
        }
        let mut probs = vec![0.0; horizon * n_states * n_actions];
        for (i, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::InvalidPolicy(format!("action {a} out of range")));
            }
            probs[i * n_actions + a] = 1.0;
        }
        Ok(Self {
            horizon,
            n_states,
            n_actions,
            probs,
        })
    }

    /// Same distribution at every step and state.
    pub fn stationary(horizon: usize, n_states: usize, dist: &[f64]) -> Result<Self> {
        let probs = dist.repeat(horizon * n_states);
        Self::new(horizon, n_states, dist.len(), probs)
    }

    fn validate(&self) -> Result<()> {
        for h in 0..self.horizon {
            for s in 0..self.n_states {
                let row = self.dist(h, s);
                let mut sum = 0.0;
                for &p in row {
                    if !(p >= 0.0) || !p.is_finite() {
                        return Err(Error::InvalidPolicy(format!(
                            "negative or non-finite probability at step {h}, state {s}"
                        )));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > SIMPLEX_TOL {
                    return Err(Error::InvalidPolicy(format!(
                        "row at step {h}, state {s} sums to {sum}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn dist(&self, h: usize, s: usize) -> &[f64] {
        let lo = (h * self.n_states + s) * self.n_actions;
        &self.probs[lo..lo + self.n_actions]
    }

    #[inline]
    pub fn prob(&self, h: usize, s: usize, a: usize) -> f64 {
        self.probs[(h * self.n_states + s) * self.n_actions + a]
    }

    /// Replaces one row; the row must be a distribution.
    pub fn set_dist(&mut self, h: usize, s: usize, dist: &[f64]) -> Result<()> {
        if dist.len() != self.n_actions {
            return Err(Error::Dimension(format!(
                "row of length {} for {} actions",
                dist.len(),
                self.n_actions
            )));
        }
        crate::tabular::transitions::check_simplex("policy row", dist)
            .map_err(|e| Error::InvalidPolicy(e.to_string()))?;
        let lo = (h * self.n_states + s) * self.n_actions;
        self.probs[lo..lo + self.n_actions].copy_from_slice(dist);
        Ok(())
    }

    /// The action table if every row is a point mass.
    pub fn as_deterministic(&self) -> Option<Vec<usize>> {
        self.probs
            .chunks(self.n_actions)
            .map(|row| row.iter().position(|&p| p == 1.0))
            .collect()
    }

    pub fn same_shape(&self, other: &AgentPolicy) -> bool {
        self.horizon == other.horizon
            && self.n_states == other.n_states
            && self.n_actions == other.n_actions
    }

    /// Largest absolute difference between two same-shaped policies.
    pub fn max_abs_diff(&self, other: &AgentPolicy) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Product policy profile: one independent policy per agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointPolicy {
    pub agents: Vec<AgentPolicy>,
}

impl JointPolicy {
    pub fn new(agents: Vec<AgentPolicy>) -> Self {
        Self { agents }
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agent(&self, i: usize) -> &AgentPolicy {
        &self.agents[i]
    }

    /// Copy of this profile with agent `i` replaced.
    pub fn with_agent(&self, i: usize, policy: AgentPolicy) -> JointPolicy {
        let mut agents = self.agents.clone();
        agents[i] = policy;
        JointPolicy { agents }
    }

    /// Per-agent action distributions at `(h, s)`.
    pub fn dists(&self, h: usize, s: usize) -> Vec<&[f64]> {
        self.agents.iter().map(|p| p.dist(h, s)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
