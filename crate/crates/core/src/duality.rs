//! Lagrangian duality for two-agent, one-state, one-step constrained games.
//!
//! Numbers are reported on the raw reward scale of the matrices; the
//! wrapped game divides rewards by their largest magnitude.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ca::verify_nash;
use crate::error::{Error, Result};
use crate::tabular::{AgentPolicy, Cmpg, CmpgParts, JointPolicy, Transitions};

/// Cost slack allowed when classifying a policy as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Dual values within this of the optimum count as maximizers.
pub const ARGMAX_TOL: f64 = 1e-9;
/// Largest action count for which mixed maximizers are enumerated.
const MAX_SUPPORT_ENUMERATION: usize = 6;

/// Shared reward matrix, cost matrix and threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BimatrixCmpg {
    pub reward: Vec<Vec<f64>>,
    pub cost: Vec<Vec<f64>>,
    pub alpha: f64,
}

impl BimatrixCmpg {
    pub fn new(reward: Vec<Vec<f64>>, cost: Vec<Vec<f64>>, alpha: f64) -> Result<Self> {
        let g = Self {
            reward,
            cost,
            alpha,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let rows = self.reward.len();
        let cols = self.reward.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::Empty("reward matrix"));
        }
        let rect = |m: &Vec<Vec<f64>>| m.len() == rows && m.iter().all(|r| r.len() == cols);
        if !rect(&self.reward) || !rect(&self.cost) {
            return Err(Error::Dimension(format!(
                "matrices must both be {rows}x{cols}"
            )));
        }
        if self
            .reward
            .iter()
            .flatten()
            .any(|x| !x.is_finite() || *x < 0.0)
        {
            return Err(Error::InvalidModel(
                "rewards must be finite and non-negative".into(),
            ));
        }
        if self.cost.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidModel("costs must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidModel(format!(
                "threshold {} outside [0, 1]",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.reward.len()
    }

    pub fn cols(&self) -> usize {
        self.reward[0].len()
    }

    /// Factor dividing raw rewards into `[0, 1]`.
    pub fn scale(&self) -> f64 {
        let m = self
            .reward
            .iter()
            .flatten()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }

    /// The cooperative game with rewards divided by [`Self::scale`].
    pub fn to_cmpg(&self) -> Result<Cmpg> {
        self.validate()?;
        let scale = self.scale();
        let (m1, m2) = (self.rows(), self.cols());
        let reward: Vec<f64> = self.reward.iter().flatten().map(|x| x / scale).collect();
        Cmpg::new(CmpgParts {
            n_states: 1,
            actions_per_agent: vec![m1, m2],
            horizon: 1,
            transitions: Transitions::from_dense(1, &vec![1.0; m1 * m2])?,
            rewards: vec![reward.clone(), reward],
            costs: vec![self.cost.iter().flatten().copied().collect()],
            thresholds: vec![self.alpha],
            initial_dist: vec![1.0],
        })
    }

    /// `x^T M y` for a raw matrix.
    fn bilinear(m: &[Vec<f64>], x: &[f64], y: &[f64]) -> f64 {
        m.iter()
            .zip(x)
            .map(|(row, xi)| xi * row.iter().zip(y).map(|(v, yj)| v * yj).sum::<f64>())
            .sum()
    }

    pub fn reward_value(&self, x: &[f64], y: &[f64]) -> f64 {
        Self::bilinear(&self.reward, x, y)
    }

    pub fn cost_value(&self, x: &[f64], y: &[f64]) -> f64 {
        Self::bilinear(&self.cost, x, y)
    }

    /// `reward + lambda * (alpha - cost)` at a mixed pair.
    pub fn lagrangian(&self, x: &[f64], y: &[f64], lambda: f64) -> f64 {
        self.reward_value(x, y) + lambda * (self.alpha - self.cost_value(x, y))
    }

    fn lines(&self) -> impl Iterator<Item = ((usize, usize), f64, f64)> + '_ {
        (0..self.rows()).flat_map(move |i| {
            (0..self.cols()).map(move |j| ((i, j), self.reward[i][j], self.alpha - self.cost[i][j]))
        })
    }

    /// Default right end of the multiplier search.
    pub fn default_lambda_max(&self) -> f64 {
        let slack = self
            .lines()
            .map(|(_, _, s)| s.abs())
            .filter(|&s| s > 0.0)
            .fold(f64::INFINITY, f64::min);
        if slack.is_finite() {
            2.0 * self.scale() / slack
        } else {
            1.0
        }
    }
}

/// Dual function value and the first maximizing pure pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualValue {
    pub value: f64,
    pub joint: (usize, usize),
}

/// `max` over pure pairs of the Lagrangian. A bilinear form on a product of
/// simplices peaks at a vertex, so pure pairs suffice. Ties keep the first
/// pair in row-major order.
pub fn dual_function(game: &BimatrixCmpg, lambda: f64) -> Result<DualValue> {
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!(
            "multiplier must be non-negative, got {lambda}"
        )));
    }
    let mut best = DualValue {
        value: f64::NEG_INFINITY,
        joint: (0, 0),
    };
    for (joint, r, s) in game.lines() {
        let v = r + lambda * s;
        if v > best.value {
            best = DualValue { value: v, joint };
        }
    }
    Ok(best)
}

/// A maximizer of the Lagrangian at the dual optimum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualMaximizer {
    pub row_dist: Vec<f64>,
    pub col_dist: Vec<f64>,
    /// Set for pure pairs.
    pub pure: Option<(usize, usize)>,
    pub reward: f64,
    pub cost: f64,
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualSolution {
    pub lambda: f64,
    pub value: f64,
    /// Pure maximizers first (row-major), then uniform mixtures over
    /// rectangles of maximizers.
    pub maximizers: Vec<DualMaximizer>,
}

/// Minimizes the dual function on `[0, lambda_max]`.
///
/// The dual is the upper envelope of one line per pure pair, so its minimum
/// sits at an endpoint or at a crossing of two lines; every such candidate
/// is evaluated and the smallest multiplier among the minimizers is kept.
pub fn solve_dual(game: &BimatrixCmpg, lambda_max: f64) -> Result<DualSolution> {
    if !(lambda_max >= 0.0) || !lambda_max.is_finite() {
        return Err(Error::Config(format!(
            "invalid multiplier range [0, {lambda_max}]"
        )));
    }
    let lines: Vec<_> = game.lines().collect();
    let mut candidates = vec![0.0, lambda_max];
    for (k, &(_, rk, sk)) in lines.iter().enumerate() {
        for &(_, rl, sl) in &lines[k + 1..] {
            if sk != sl {
                let x = (rl - rk) / (sk - sl);
                if x > 0.0 && x < lambda_max {
                    candidates.push(x);
                }
            }
        }
    }
    candidates.sort_by(f64::total_cmp);
    let mut lambda = 0.0;
    let mut value = f64::INFINITY;
    for &x in &candidates {
        let v = dual_function(game, x)?.value;
        if !value.is_finite() || v < value - ARGMAX_TOL * value.abs().max(1.0) {
            lambda = x;
            value = v;
        }
    }
    let maximizers = lagrangian_maximizers(game, lambda, value);
    Ok(DualSolution {
        lambda,
        value,
        maximizers,
    })
}

fn lagrangian_maximizers(game: &BimatrixCmpg, lambda: f64, value: f64) -> Vec<DualMaximizer> {
    let (m1, m2) = (game.rows(), game.cols());
    let tol = ARGMAX_TOL * value.abs().max(1.0);
    let hit: Vec<Vec<bool>> = (0..m1)
        .map(|i| {
            (0..m2)
                .map(|j| game.reward[i][j] + lambda * (game.alpha - game.cost[i][j]) >= value - tol)
                .collect()
        })
        .collect();
    let describe = |x: Vec<f64>, y: Vec<f64>, pure| {
        let (reward, cost) = (game.reward_value(&x, &y), game.cost_value(&x, &y));
        DualMaximizer {
            row_dist: x,
            col_dist: y,
            pure,
            reward,
            cost,
            feasible: cost <= game.alpha + FEASIBILITY_TOL,
        }
    };
    let mut out = Vec::new();
    for i in 0..m1 {
        for j in 0..m2 {
            if hit[i][j] {
                out.push(describe(unit(m1, i), unit(m2, j), Some((i, j))));
            }
        }
    }
    // a product policy maximizes the Lagrangian iff its support rectangle
    // consists of maximizing pairs
    if m1 <= MAX_SUPPORT_ENUMERATION && m2 <= MAX_SUPPORT_ENUMERATION {
        for rows in 1u32..(1 << m1) {
            for cols in 1u32..(1 << m2) {
                if rows.count_ones() + cols.count_ones() == 2 {
                    continue;
                }
                let ok = (0..m1)
                    .filter(|i| rows >> i & 1 == 1)
                    .all(|i| (0..m2).filter(|j| cols >> j & 1 == 1).all(|j| hit[i][j]));
                if ok {
                    out.push(describe(uniform_on(m1, rows), uniform_on(m2, cols), None));
                }
            }
        }
    }
    out
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

fn uniform_on(n: usize, mask: u32) -> Vec<f64> {
    let w = 1.0 / mask.count_ones() as f64;
    (0..n)
        .map(|i| if mask >> i & 1 == 1 { w } else { 0.0 })
        .collect()
}

/// Best feasible mixed pair of a 2x2 game, as probabilities of the second
/// action of each agent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrimalSolution {
    pub value: f64,
    pub p: f64,
    pub q: f64,
}

/// Primal optimum of a 2x2 game.
///
/// For each of `resolution + 1` values of `p` the best `q` is exact (the
/// objective and constraint are affine in `q`), and the best grid point is
/// refined by a golden-section search on the neighbouring cells.
pub fn solve_primal_grid(game: &BimatrixCmpg, resolution: usize) -> Result<PrimalSolution> {
    if game.rows() != 2 || game.cols() != 2 {
        return Err(Error::Unsupported(
            "the primal grid search handles 2x2 games".into(),
        ));
    }
    if resolution < 2 {
        return Err(Error::Config(format!("resolution {resolution} too coarse")));
    }
    let step = 1.0 / resolution as f64;
    let mut best: Option<PrimalSolution> = None;
    for k in 0..=resolution {
        if let Some(s) = best_column(game, k as f64 * step) {
            if best.is_none_or(|b| s.value > b.value) {
                best = Some(s);
            }
        }
    }
    let mut best = best.ok_or(Error::Infeasible)?;
    let (mut lo, mut hi) = ((best.p - step).max(0.0), (best.p + step).min(1.0));
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let f = |p: f64| best_column(game, p).map_or(f64::NEG_INFINITY, |s| s.value);
    for _ in 0..200 {
        let a = hi - golden * (hi - lo);
        let b = lo + golden * (hi - lo);
        if f(a) >= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    if let Some(s) = best_column(game, (lo + hi) / 2.0) {
        if s.value > best.value {
            best = s;
        }
    }
    Ok(best)
}

/// Best feasible `q` for a fixed `p`, if any.
fn best_column(game: &BimatrixCmpg, p: f64) -> Option<PrimalSolution> {
    let x = [1.0 - p, p];
    let at = |q: f64| {
        (
            game.reward_value(&x, &[1.0 - q, q]),
            game.cost_value(&x, &[1.0 - q, q]),
        )
    };
    let ((r0, c0), (r1, c1)) = (at(0.0), at(1.0));
    // feasible q form an interval: c0 + (c1 - c0) q <= alpha
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let slope = c1 - c0;
    if slope.abs() < 1e-15 {
        if c0 > game.alpha + FEASIBILITY_TOL {
            return None;
        }
    } else {
        let cross = (game.alpha - c0) / slope;
        if slope > 0.0 {
            hi = hi.min(cross);
        } else {
            lo = lo.max(cross);
        }
        if lo > hi {
            return None;
        }
    }
    let q = if r1 > r0 { hi } else { lo };
    Some(PrimalSolution {
        value: r0 + (r1 - r0) * q,
        p,
        q,
    })
}

/// Lagrangian-maximizing policy together with its equilibrium diagnosis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximizerRow {
    #[serde(flatten)]
    pub maximizer: DualMaximizer,
    /// Largest unilateral constrained improvement, raw scale; only for
    /// feasible policies.
    pub nash_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityReport {
    pub game: BimatrixCmpg,
    pub primal_value: f64,
    pub primal_policy: (Vec<f64>, Vec<f64>),
    pub dual_lambda: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub maximizers: Vec<MaximizerRow>,
    pub remarks: Vec<String>,
    /// `(lambda, d(lambda))` samples for plotting.
    #[serde(skip)]
    pub trace: Vec<(f64, f64)>,
}

/// Number of trace samples and their range.
pub const TRACE_POINTS: usize = 1000;
pub const TRACE_LAMBDA_MAX: f64 = 2.0;
/// Grid resolution of the primal search inside the report.
pub const REPORT_RESOLUTION: usize = 2000;

/// Primal and dual optima, their gap, and a Nash check of every dual maximizer.
pub fn duality_gap_report(game: &BimatrixCmpg) -> Result<DualityReport> {
    let primal = solve_primal_grid(game, REPORT_RESOLUTION)?;
    let dual = solve_dual(game, game.default_lambda_max())?;
    let cmpg = game.to_cmpg()?;
    let scale = game.scale();
    let mut maximizers = Vec::with_capacity(dual.maximizers.len());
    for m in dual.maximizers {
        let nash_gap = if m.feasible {
            let profile = JointPolicy::new(vec![
                AgentPolicy::stationary(1, 1, &m.row_dist)?,
                AgentPolicy::stationary(1, 1, &m.col_dist)?,
            ]);
            Some(verify_nash(&cmpg, &profile, FEASIBILITY_TOL)?.epsilon * scale)
        } else {
            None
        };
        maximizers.push(MaximizerRow {
            maximizer: m,
            nash_gap,
        });
    }
    let trace = dual_trace(game, TRACE_LAMBDA_MAX, TRACE_POINTS)?;
    let gap = dual.value - primal.value;
    let mut remarks = Vec::new();
    if maximizers.iter().any(|m| !m.maximizer.feasible) {
        remarks
            .push("some Lagrangian maximizers at the dual optimum violate the constraint".into());
    }
    if maximizers
        .iter()
        .any(|m| m.nash_gap.is_some_and(|g| g > FEASIBILITY_TOL))
    {
        remarks.push("some feasible Lagrangian maximizers are not Nash policies".into());
    }
    if gap > 1e-6 {
        remarks.push(format!(
            "strong duality fails: dual optimum {} exceeds primal optimum {:.6}",
            dual.value, primal.value
        ));
    }
    Ok(DualityReport {
        game: game.clone(),
        primal_value: primal.value,
        primal_policy: (
            vec![1.0 - primal.p, primal.p],
            vec![1.0 - primal.q, primal.q],
        ),
        dual_lambda: dual.lambda,
        dual_value: dual.value,
        gap,
        maximizers,
        remarks,
        trace,
    })
}

/// `points` equally spaced samples of the dual function on `[0, lambda_max]`.
pub fn dual_trace(game: &BimatrixCmpg, lambda_max: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    if points < 2 {
        return Err(Error::Config("a trace needs at least two points".into()));
    }
    (0..points)
        .map(|k| {
            let l = lambda_max * k as f64 / (points - 1) as f64;
            Ok((l, dual_function(game, l)?.value))
        })
        .collect()
}

/// Writes a `lambda,d_lambda` CSV.
pub fn write_dual_trace(trace: &[(f64, f64)], mut out: impl Write) -> Result<()> {
    writeln!(out, "lambda,d_lambda")?;
    for (l, d) in trace {
        writeln!(out, "{l},{d}")?;
    }
    Ok(())
}
