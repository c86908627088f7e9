use std::collections::HashMap;
use std::io::Write;

use crate::cmdp::generative::{build_empirical_cmdp, GenerativeModel};
use crate::cmdp::mdp::Workspace;
use crate::cmdp::Cmdp;
use crate::error::{Error, Result};
use crate::occupancy::{
    occupancy_from_policy, policy_from_occupancy, weighted_average, OccupancyMeasure,
};
use crate::tabular::AgentPolicy;

/// Parameters of the projected dual-descent solver.
///
/// [`PrimalDualConfig::new`] derives every quantity from the accuracy,
/// confidence and Slater constant. The derived iteration and sample counts
/// are astronomically large for small tolerances, so both can be replaced
/// with [`with_iterations`](Self::with_iterations) and
/// [`with_samples`](Self::with_samples); the derived values stay available
/// in `formula_iterations` and `formula_samples`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalDualConfig {
    pub epsilon_prime: f64,
    pub delta_prime: f64,
    pub slater: f64,
    pub horizon: usize,
    /// Threshold tightening.
    pub margin: f64,
    /// Optimization accuracy on the empirical model.
    pub eps_opt: f64,
    /// Upper end of the dual projection interval.
    pub dual_bound: f64,
    pub iterations: u64,
    pub step_size: f64,
    /// Draws per `(h, s, a)` for the empirical model.
    pub samples: u64,
    pub formula_iterations: f64,
    pub formula_samples: f64,
}

fn ceil_count(x: f64) -> u64 {
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        (x.ceil() as u64).max(1)
    }
}

impl PrimalDualConfig {
    pub fn new(
        epsilon_prime: f64,
        delta_prime: f64,
        slater: f64,
        horizon: usize,
        n_states: usize,
        n_actions: usize,
    ) -> Result<Self> {
        if !(slater > 0.0) {
            return Err(Error::Config(format!(
                "Slater constant must be positive, got {slater}"
            )));
        }
        if !(epsilon_prime > 0.0 && epsilon_prime <= horizon as f64) {
            return Err(Error::Config(format!(
                "accuracy {epsilon_prime} outside (0, {horizon}]"
            )));
        }
        if !(delta_prime > 0.0 && delta_prime < 1.0) {
            return Err(Error::Config(format!(
                "confidence {delta_prime} outside (0, 1)"
            )));
        }
        let h = horizon as f64;
        let margin = epsilon_prime * slater / (16.0 * h);
        let eps_opt = margin / 5.0;
        let dual_bound = 8.0 * h / slater;
        let formula_iterations = (dual_bound * dual_bound * h * h / (eps_opt * eps_opt))
            * (1.0 + 16.0 / (9.0 * dual_bound * dual_bound));
        let target = 4.0 * margin / 5.0;
        let ns = n_states as f64;
        let formula_samples = (2.0 * ns * ns * n_actions as f64 * h / (delta_prime / 5.0)).ln()
            * h.powi(4)
            / (target * target);
        let iterations = ceil_count(formula_iterations);
        let cfg = Self {
            epsilon_prime,
            delta_prime,
            slater,
            horizon,
            margin,
            eps_opt,
            dual_bound,
            iterations,
            step_size: dual_bound / ((iterations as f64).sqrt() * h),
            samples: ceil_count(formula_samples),
            formula_iterations,
            formula_samples,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replaces the iteration count and rescales the step size to match.
    pub fn with_iterations(mut self, iterations: u64) -> Self {
        self.iterations = iterations;
        self.step_size = self.dual_bound / ((iterations as f64).sqrt() * self.horizon as f64);
        self
    }

    pub fn with_samples(mut self, samples: u64) -> Self {
        self.samples = samples;
        self
    }

    /// Tightened threshold used on the empirical model.
    pub fn alpha_prime(&self, alpha: f64) -> f64 {
        alpha - self.margin
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.horizon as f64;
        let checks = [
            (
                self.margin < self.slater / 2.0,
                "margin must be below half the Slater constant",
            ),
            (
                self.eps_opt < self.margin,
                "optimization accuracy must be below the margin",
            ),
            (
                self.dual_bound > 2.0 * h / self.slater,
                "dual bound must exceed 2H / Slater",
            ),
            (self.iterations >= 1, "need at least one iteration"),
            (self.samples >= 1, "need at least one sample per entry"),
            (
                self.step_size > 0.0 && self.step_size.is_finite(),
                "step size must be positive",
            ),
        ];
        match checks.iter().find(|c| !c.0) {
            Some((_, msg)) => Err(Error::Config((*msg).into())),
            None => Ok(()),
        }
    }
}

/// Iterates, dual trace and averaged policy of one primal-dual run.
#[derive(Clone, Debug)]
pub struct PrimalDualOutput {
    /// Distinct deterministic best responses in order of first appearance.
    pub policies: Vec<AgentPolicy>,
    /// Values `(reward, cost)` of each distinct policy on the solved model.
    pub policy_values: Vec<(f64, f64)>,
    /// Iterate `t` is `policies[sequence[t]]`.
    pub sequence: Vec<u32>,
    /// `lambdas[t]` is the multiplier used at iterate `t`; the last entry is
    /// the multiplier after the final update.
    pub lambdas: Vec<f64>,
    pub threshold: f64,
    pub averaged: AgentPolicy,
    pub averaged_occupancy: OccupancyMeasure,
    pub reward_value: f64,
    pub cost_value: f64,
}

impl PrimalDualOutput {
    pub fn iterations(&self) -> usize {
        self.sequence.len()
    }

    pub fn iterate(&self, t: usize) -> &AgentPolicy {
        &self.policies[self.sequence[t] as usize]
    }

    /// `sum_t (lambda_t - lambda) * (threshold - cost_t)`.
    pub fn dual_regret(&self, lambda: f64) -> f64 {
        self.sequence
            .iter()
            .zip(&self.lambdas)
            .map(|(&k, &l)| (l - lambda) * (self.threshold - self.policy_values[k as usize].1))
            .sum()
    }

    pub fn max_lambda(&self) -> f64 {
        self.lambdas.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with columns `t,lambda,V_hat_r,V_hat_c`.
    pub fn write_dual_trace<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,lambda,V_hat_r,V_hat_c")?;
        for (t, (&k, &l)) in self.sequence.iter().zip(&self.lambdas).enumerate() {
            let (r, c) = self.policy_values[k as usize];
            writeln!(w, "{t},{l},{r},{c}")?;
        }
        Ok(())
    }
}

/// Projected dual descent with exact best responses on `model`, whose
/// threshold is taken as the tightened one. The returned policy is the
/// occupancy average of all iterates.
pub fn primal_dual_solve(model: &Cmdp, cfg: &PrimalDualConfig) -> Result<PrimalDualOutput> {
    cfg.validate()?;
    if model.horizon() != cfg.horizon {
        return Err(Error::Config(format!(
            "configuration horizon {} does not match model horizon {}",
            cfg.horizon,
            model.horizon()
        )));
    }
    let iterations = usize::try_from(cfg.iterations)
        .ok()
        .filter(|&t| t <= u32::MAX as usize)
        .ok_or_else(|| Error::Config(format!("{} iterations is not runnable", cfg.iterations)))?;
    let threshold = model.threshold();
    let (reward, cost) = (model.reward(), model.cost());
    let mut ws = Workspace::new(model);
    let mut ids: HashMap<Vec<usize>, u32> = HashMap::new();
    let mut policies = Vec::new();
    let mut policy_values = Vec::new();
    let mut occupancies = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut sequence = Vec::with_capacity(iterations);
    let mut lambdas = Vec::with_capacity(iterations + 1);
    let mut last: Option<(Vec<usize>, u32)> = None;
    let mut lambda = 0.0f64;
    for _ in 0..iterations {
        ws.solve(model, |i| reward[i] - lambda * cost[i]);
        let id = match &last {
            Some((acts, id)) if *acts == ws.actions => *id,
            _ => {
                let id = match ids.get(&ws.actions) {
                    Some(&id) => id,
                    None => {
                        let p = AgentPolicy::deterministic(
                            model.horizon(),
                            model.n_states(),
                            model.n_actions(),
                            &ws.actions,
                        )?;
                        let v = model.evaluate(&p)?;
                        occupancies.push(occupancy_from_policy(model, &p)?);
                        policy_values.push((v.reward, v.cost));
                        policies.push(p);
                        counts.push(0);
                        let id = (policies.len() - 1) as u32;
                        ids.insert(ws.actions.clone(), id);
                        id
                    }
                };
                last = Some((ws.actions.clone(), id));
                id
            }
        };
        sequence.push(id);
        lambdas.push(lambda);
        counts[id as usize] += 1;
        let gradient = threshold - policy_values[id as usize].1;
        lambda = (lambda - cfg.step_size * gradient).clamp(0.0, cfg.dual_bound);
    }
    lambdas.push(lambda);
    let total = iterations as f64;
    let averaged_occupancy = weighted_average(
        occupancies
            .iter()
            .zip(&counts)
            .map(|(o, &c)| (o, c as f64 / total)),
    )?;
    let averaged = policy_from_occupancy(&averaged_occupancy);
    let values = model.evaluate(&averaged)?;
    Ok(PrimalDualOutput {
        policies,
        policy_values,
        sequence,
        lambdas,
        threshold,
        averaged,
        averaged_occupancy,
        reward_value: values.reward,
        cost_value: values.cost,
    })
}

/// Result of solving a CMDP known only through a generative model.
#[derive(Clone, Debug)]
pub struct GenerativeSolution {
    pub policy: AgentPolicy,
    pub empirical: Cmdp,
    pub run: PrimalDualOutput,
    pub draws: u64,
}

/// Builds the empirical model with the configured sample count and runs the
/// primal-dual solver on it with the threshold tightened by the margin.
pub fn solve_cmdp_generative(
    gen: &mut GenerativeModel<'_>,
    alpha: f64,
    cfg: &PrimalDualConfig,
) -> Result<GenerativeSolution> {
    cfg.validate()?;
    let alpha_prime = cfg.alpha_prime(alpha);
    if alpha_prime < 0.0 {
        return Err(Error::Config(format!(
            "threshold {alpha} is below the margin {}",
            cfg.margin
        )));
    }
    let samples = usize::try_from(cfg.samples)
        .map_err(|_| Error::Config(format!("{} samples is not runnable", cfg.samples)))?;
    let before = gen.total_draws();
    let empirical = build_empirical_cmdp(gen, samples, alpha_prime)?;
    let run = primal_dual_solve(&empirical, cfg)?;
    Ok(GenerativeSolution {
        policy: run.averaged.clone(),
        empirical,
        draws: gen.total_draws() - before,
        run,
    })
}
