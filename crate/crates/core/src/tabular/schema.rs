//! JSON document format for games.
//!
//! ```json
//! {
//!   "n_agents": 2,
//!   "states": 1,
//!   "actions_per_agent": [2, 2],
//!   "horizon": 1,
//!   "transitions": [[[[1.0], [1.0], [1.0], [1.0]]]],
//!   "rewards": [[[[0.75, 0.5, 0.5, 1.0]]], [[[0.75, 0.5, 0.5, 1.0]]]],
//!   "costs": [[[[0.0, 0.0, 0.0, 1.0]]]],
//!   "thresholds": [0.5],
//!   "initial_dist": [1.0]
//! }
//! ```
//!
//! `transitions[h][s][a][s']`, `rewards[i][h][s][a]` and `costs[j][h][s][a]`
//! index joint actions `a` lexicographically with agent 0 most significant.
//! The optional `count_symmetric` flag turns on count marginalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::model::{Cmpg, CmpgParts};
use crate::tabular::transitions::Transitions;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameDocument {
    pub n_agents: usize,
    pub states: usize,
    pub actions_per_agent: Vec<usize>,
    pub horizon: usize,
    pub transitions: Vec<Vec<Vec<Vec<f64>>>>,
    pub rewards: Vec<Vec<Vec<Vec<f64>>>>,
    pub costs: Vec<Vec<Vec<Vec<f64>>>>,
    pub thresholds: Vec<f64>,
    pub initial_dist: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub count_symmetric: bool,
}

fn nest(flat: &[f64], horizon: usize, states: usize) -> Vec<Vec<Vec<f64>>> {
    let width = flat.len() / (horizon * states);
    flat.chunks(states * width)
        .map(|step| step.chunks(width).map(<[f64]>::to_vec).collect())
        .collect()
}

fn flatten(
    what: &str,
    nested: &[Vec<Vec<f64>>],
    horizon: usize,
    states: usize,
    width: usize,
) -> Result<Vec<f64>> {
    if nested.len() != horizon
        || nested
            .iter()
            .any(|step| step.len() != states || step.iter().any(|r| r.len() != width))
    {
        return Err(Error::Dimension(format!(
            "{what} must have shape [{horizon}][{states}][{width}]"
        )));
    }
    Ok(nested.iter().flatten().flatten().copied().collect())
}

impl GameDocument {
    pub fn from_game(game: &Cmpg) -> Self {
        let (hz, ns, nj) = (game.horizon(), game.n_states(), game.n_joint());
        let t = game.transitions();
        let transitions = (0..hz)
            .map(|h| {
                (0..ns)
                    .map(|s| (0..nj).map(|a| t.dense_row(game.index(h, s, a))).collect())
                    .collect()
            })
            .collect();
        Self {
            n_agents: game.n_agents(),
            states: ns,
            actions_per_agent: game.actions_per_agent().to_vec(),
            horizon: hz,
            transitions,
            rewards: (0..game.n_agents())
                .map(|i| nest(game.reward_table(i), hz, ns))
                .collect(),
            costs: (0..game.n_constraints())
                .map(|j| nest(game.cost_table(j), hz, ns))
                .collect(),
            thresholds: game.thresholds().to_vec(),
            initial_dist: game.initial_dist().to_vec(),
            count_symmetric: game.is_count_symmetric(),
        }
    }

    pub fn into_game(self) -> Result<Cmpg> {
        if self.actions_per_agent.len() != self.n_agents {
            return Err(Error::Dimension(format!(
                "actions_per_agent lists {} agents, n_agents is {}",
                self.actions_per_agent.len(),
                self.n_agents
            )));
        }
        let nj: usize = self.actions_per_agent.iter().product();
        let (hz, ns) = (self.horizon, self.states);
        if self.transitions.len() != hz {
            return Err(Error::Dimension(format!(
                "transitions must have {hz} steps"
            )));
        }
        let mut dense = Vec::with_capacity(hz * ns * nj * ns);
        for step in &self.transitions {
            if step.len() != ns {
                return Err(Error::Dimension(format!(
                    "transitions must have {ns} states per step"
                )));
            }
            for row in step {
                if row.len() != nj || row.iter().any(|r| r.len() != ns) {
                    return Err(Error::Dimension(format!(
                        "each transition block must be [{nj}][{ns}]"
                    )));
                }
                for r in row {
                    dense.extend_from_slice(r);
                }
            }
        }
        let game = Cmpg::new(CmpgParts {
            n_states: ns,
            actions_per_agent: self.actions_per_agent,
            horizon: hz,
            transitions: Transitions::from_dense(ns, &dense)?,
            rewards: self
                .rewards
                .iter()
                .map(|r| flatten("rewards", r, hz, ns, nj))
                .collect::<Result<_>>()?,
            costs: self
                .costs
                .iter()
                .map(|c| flatten("costs", c, hz, ns, nj))
                .collect::<Result<_>>()?,
            thresholds: self.thresholds,
            initial_dist: self.initial_dist,
        })?;
        if self.count_symmetric {
            game.with_count_symmetry()
        } else {
            Ok(game)
        }
    }
}

impl Cmpg {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&GameDocument::from_game(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<GameDocument>(text)?.into_game()
    }
}
