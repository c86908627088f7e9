use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{AgentPolicy, Cmpg, CmpgParts, JointPolicy, Transitions};

/// Moves in action order.
pub const UP: usize = 0;
pub const RIGHT: usize = 1;
pub const DOWN: usize = 2;
pub const LEFT: usize = 3;
const MOVES: [(i64, i64); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];

/// A cell that pays when entered.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bonus {
    pub cell: [usize; 2],
    pub reward: f64,
}

/// Two-agent grid with a shared goal; cells are `[x, y]`, `y = 0` the bottom row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridWorldConfig {
    pub width: usize,
    pub height: usize,
    pub start: [usize; 2],
    pub target: [usize; 2],
    pub target_reward: f64,
    pub bonuses: Vec<Bonus>,
    pub horizon: usize,
    pub alpha: f64,
    /// Multiplies raw rewards; `None` picks `1 / (2 * largest cell reward)`.
    pub reward_scale: Option<f64>,
    /// An agent that reaches the target stays there.
    pub absorbing_target: bool,
    /// Bumping into a wall re-pays the current cell's reward.
    pub pay_on_stay: bool,
}

impl Default for GridWorldConfig {
    fn default() -> Self {
        Self {
            width: 4,
            height: 4,
            start: [0, 0],
            target: [3, 2],
            target_reward: 10.0,
            bonuses: vec![
                Bonus {
                    cell: [1, 0],
                    reward: 2.0,
                },
                Bonus {
                    cell: [0, 1],
                    reward: 1.0,
                },
            ],
            horizon: 6,
            alpha: 0.1,
            reward_scale: None,
            absorbing_target: true,
            pay_on_stay: false,
        }
    }
}

impl GridWorldConfig {
    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn cell_index(&self, cell: [usize; 2]) -> usize {
        cell[1] * self.width + cell[0]
    }

    pub fn cell_of(&self, index: usize) -> [usize; 2] {
        [index % self.width, index / self.width]
    }

    fn inside(&self, cell: [usize; 2]) -> bool {
        cell[0] < self.width && cell[1] < self.height
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.horizon == 0 {
            return Err(Error::Config("grid and horizon must be non-empty".into()));
        }
        for c in std::iter::once(&self.start)
            .chain([&self.target])
            .chain(self.bonuses.iter().map(|b| &b.cell))
        {
            if !self.inside(*c) {
                return Err(Error::Config(format!(
                    "cell {c:?} outside the {}x{} grid",
                    self.width, self.height
                )));
            }
        }
        if self.start == self.target {
            return Err(Error::Config("start and target coincide".into()));
        }
        if self
            .bonuses
            .iter()
            .any(|b| b.cell == self.target || b.cell == self.start)
        {
            return Err(Error::Config(
                "bonus cells must differ from start and target".into(),
            ));
        }
        if self
            .cell_rewards()
            .iter()
            .any(|r| !r.is_finite() || *r < 0.0)
        {
            return Err(Error::Config(
                "cell rewards must be finite and non-negative".into(),
            ));
        }
        let scale = self.scale();
        if !(scale > 0.0) || 2.0 * scale * self.max_cell_reward() > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "reward scale {scale} does not map rewards into [0, 1]"
            )));
        }
        if !(0.0..=self.horizon as f64).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "threshold {} outside [0, {}]",
                self.alpha, self.horizon
            )));
        }
        let dist = self.start[0].abs_diff(self.target[0]) + self.start[1].abs_diff(self.target[1]);
        if dist > self.horizon {
            warn!(
                "horizon {} is shorter than the {dist} moves to the target",
                self.horizon
            );
        }
        Ok(())
    }

    /// Raw reward of entering each cell.
    pub fn cell_rewards(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.n_cells()];
        r[self.cell_index(self.target)] = self.target_reward;
        for b in &self.bonuses {
            r[self.cell_index(b.cell)] += b.reward;
        }
        r
    }

    fn max_cell_reward(&self) -> f64 {
        self.cell_rewards().into_iter().fold(0.0, f64::max)
    }

    pub fn scale(&self) -> f64 {
        self.reward_scale.unwrap_or_else(|| {
            let m = self.max_cell_reward();
            if m > 0.0 {
                1.0 / (2.0 * m)
            } else {
                1.0
            }
        })
    }

    /// Cell reached from `pos` by `action`; walls keep the agent in place.
    pub fn step(&self, pos: usize, action: usize) -> usize {
        if self.absorbing_target && pos == self.cell_index(self.target) {
            return pos;
        }
        let [x, y] = self.cell_of(pos);
        let (dx, dy) = MOVES[action];
        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
        if nx < 0 || ny < 0 || nx >= self.width as i64 || ny >= self.height as i64 {
            pos
        } else {
            self.cell_index([nx as usize, ny as usize])
        }
    }

    /// Joint state of the two positions, first agent most significant.
    pub fn state_index(&self, pos: [usize; 2]) -> usize {
        pos[0] * self.n_cells() + pos[1]
    }
}

/// Cooperative two-agent grid world with a collision constraint.
///
/// Each agent is paid the reward of the cell it enters (scaled); both are
/// paid the sum. A step costs 1 when both agents land on the same cell
/// other than the start and target.
pub fn build_grid_world(cfg: &GridWorldConfig) -> Result<Cmpg> {
    cfg.validate()?;
    let nc = cfg.n_cells();
    let ns = nc * nc;
    let (hz, nj) = (cfg.horizon, 16);
    let cell_reward = cfg.cell_rewards();
    let scale = cfg.scale();
    let (start, target) = (cfg.cell_index(cfg.start), cfg.cell_index(cfg.target));
    let paid = |from: usize, to: usize| {
        if from != to || cfg.pay_on_stay {
            cell_reward[to]
        } else {
            0.0
        }
    };
    let mut rows = Vec::with_capacity(hz * ns * nj);
    let mut reward = Vec::with_capacity(hz * ns * nj);
    let mut cost = Vec::with_capacity(hz * ns * nj);
    for _ in 0..hz {
        for s in 0..ns {
            let (p1, p2) = (s / nc, s % nc);
            for j in 0..nj {
                let (n1, n2) = (cfg.step(p1, j / 4), cfg.step(p2, j % 4));
                rows.push(vec![(cfg.state_index([n1, n2]), 1.0)]);
                reward.push(scale * (paid(p1, n1) + paid(p2, n2)));
                cost.push(if n1 == n2 && n1 != start && n1 != target {
                    1.0
                } else {
                    0.0
                });
            }
        }
    }
    let mut initial_dist = vec![0.0; ns];
    initial_dist[cfg.state_index([start, start])] = 1.0;
    Cmpg::new(CmpgParts {
        n_states: ns,
        actions_per_agent: vec![4, 4],
        horizon: hz,
        transitions: Transitions::from_rows(ns, rows)?,
        rewards: vec![reward.clone(), reward],
        costs: vec![cost],
        thresholds: vec![cfg.alpha],
        initial_dist,
    })
}

/// Markov policy of one agent that follows the weighted routes from the
/// start. Each route is a move sequence; positions no route visits and
/// steps after a route ends take the first move.
pub fn route_policy(
    cfg: &GridWorldConfig,
    agent: usize,
    routes: &[(f64, Vec<usize>)],
) -> Result<AgentPolicy> {
    cfg.validate()?;
    if agent > 1 {
        return Err(Error::Dimension(format!(
            "the grid world has two agents, got agent {agent}"
        )));
    }
    let total: f64 = routes.iter().map(|r| r.0).sum();
    if routes.is_empty() || (total - 1.0).abs() > 1e-12 || routes.iter().any(|r| r.0 < 0.0) {
        return Err(Error::InvalidPolicy(
            "route weights must form a distribution".into(),
        ));
    }
    let nc = cfg.n_cells();
    let hz = cfg.horizon;
    // weight[h][pos][action]
    let mut weight = vec![[0.0f64; 4]; hz * nc];
    for (w, moves) in routes {
        if moves.len() > hz || moves.iter().any(|&a| a >= 4) {
            return Err(Error::InvalidPolicy(format!(
                "route {moves:?} is not a move sequence within the horizon"
            )));
        }
        let mut pos = cfg.cell_index(cfg.start);
        for (h, &a) in moves.iter().enumerate() {
            weight[h * nc + pos][a] += w;
            pos = cfg.step(pos, a);
        }
    }
    let ns = nc * nc;
    let mut probs = Vec::with_capacity(hz * ns * 4);
    for h in 0..hz {
        for s in 0..ns {
            let own = if agent == 0 { s / nc } else { s % nc };
            let w = weight[h * nc + own];
            let sum: f64 = w.iter().sum();
            if sum > 0.0 {
                probs.extend(w.iter().map(|x| x / sum));
            } else {
                probs.extend([1.0, 0.0, 0.0, 0.0]);
            }
        }
    }
    AgentPolicy::new(hz, ns, 4, probs)
}

/// On the default layout: the first agent runs along the bottom row and up
/// to the target; the second goes up first with probability 0.9 and right
/// first with probability 0.1, colliding with the first once in the latter
/// case.
pub fn example_route_pair(cfg: &GridWorldConfig) -> Result<JointPolicy> {
    let first = route_policy(cfg, 0, &[(1.0, vec![RIGHT, RIGHT, RIGHT, UP, UP])])?;
    let second = route_policy(
        cfg,
        1,
        &[
            (0.1, vec![RIGHT, UP, UP, RIGHT, RIGHT]),
            (0.9, vec![UP, UP, RIGHT, RIGHT, RIGHT]),
        ],
    )?;
    Ok(JointPolicy::new(vec![first, second]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::evaluate;

    #[test]
    fn example_pair_collides_once_with_probability_tenth() {
        let cfg = GridWorldConfig::default();
        let g = build_grid_world(&cfg).unwrap();
        assert_eq!(g.n_states(), 256);
        assert!(g.is_cooperative());
        let v = evaluate(&g, &example_route_pair(&cfg).unwrap()).unwrap();
        assert!((v.cost_values[0] - 0.1).abs() < 1e-12);
        // agent 1 earns 2 + 10, agent 2 earns 0.1 * (2 + 10) + 0.9 * (1 + 10)
        let raw = 12.0 + 0.1 * 12.0 + 0.9 * 11.0;
        assert!((v.reward_values[0] - raw / 20.0).abs() < 1e-12);
    }

    #[test]
    fn collision_rules() {
        let cfg = GridWorldConfig::default();
        let g = build_grid_world(&cfg).unwrap();
        let nc = cfg.n_cells();
        let at =
            |a: [usize; 2], b: [usize; 2]| cfg.state_index([cfg.cell_index(a), cfg.cell_index(b)]);
        // both bump into the bottom wall on distinct cells
        assert_eq!(g.cost(0, 0, at([1, 0], [2, 0]), DOWN * 4 + DOWN), 0.0);
        // both enter (1, 1)
        assert_eq!(g.cost(0, 2, at([1, 0], [0, 1]), UP * 4 + RIGHT), 1.0);
        // swapping cells is not a collision
        assert_eq!(g.cost(0, 0, at([1, 0], [2, 0]), RIGHT * 4 + LEFT), 0.0);
        // meeting at the start or the target is free
        assert_eq!(g.cost(0, 0, at([1, 0], [0, 1]), LEFT * 4 + DOWN), 0.0);
        assert_eq!(g.cost(0, 0, at([3, 1], [2, 2]), UP * 4 + RIGHT), 0.0);
        assert_eq!(nc, 16);
    }

    #[test]
    fn target_pays_once_and_absorbs() {
        let cfg = GridWorldConfig::default();
        let g = build_grid_world(&cfg).unwrap();
        let t = cfg.cell_index(cfg.target);
        let s = cfg.state_index([t, cfg.cell_index([0, 3])]);
        for j in 0..16 {
            let row = g.transitions().row(g.index(0, s, j));
            assert_eq!(
                cfg.state_index([t, cfg.step(cfg.cell_index([0, 3]), j % 4)]),
                row.0[0]
            );
            assert_eq!(g.reward(0, 0, s, j), 0.0);
        }
    }

    #[test]
    fn swap_symmetry() {
        let cfg = GridWorldConfig::default();
        let g = build_grid_world(&cfg).unwrap();
        let nc = cfg.n_cells();
        for h in [0, 3] {
            for s in 0..nc * nc {
                let swapped = (s % nc) * nc + s / nc;
                for j in 0..16 {
                    let js = (j % 4) * 4 + j / 4;
                    assert_eq!(g.cost(0, h, s, j), g.cost(0, h, swapped, js));
                    assert_eq!(g.reward(0, h, s, j), g.reward(1, h, swapped, js));
                }
            }
        }
    }

    #[test]
    fn config_validation_and_json() {
        let cfg = GridWorldConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<GridWorldConfig>(&text).unwrap(), cfg);
        let partial: GridWorldConfig = serde_json::from_str(r#"{"alpha": 0.3}"#).unwrap();
        assert_eq!(partial.alpha, 0.3);
        assert!(build_grid_world(&GridWorldConfig {
            target: [0, 0],
            ..cfg.clone()
        })
        .is_err());
        assert!(build_grid_world(&GridWorldConfig {
            start: [4, 0],
            ..cfg.clone()
        })
        .is_err());
        assert!(build_grid_world(&GridWorldConfig {
            reward_scale: Some(0.1),
            ..cfg.clone()
        })
        .is_err());
        let g = build_grid_world(&cfg).unwrap();
        assert_eq!(Cmpg::from_json(&g.to_json().unwrap()).unwrap(), g);
    }
}
