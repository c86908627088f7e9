use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cmdp::{
    online_to_batch_select, primal_dual_solve, solve_cmdp_generative, solve_cmdp_lp, Cmdp,
    GenerativeModel, PrimalDualConfig, ValueSource,
};
use crate::error::Result;
use crate::tabular::AgentPolicy;

/// Where in a coordinate-ascent run a solve is requested.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveContext {
    pub agent: usize,
    pub cycle: usize,
}

#[derive(Clone, Debug)]
pub struct SolverOutput {
    pub policy: AgentPolicy,
    /// Generative-model draws consumed.
    pub draws: u64,
    /// Environment episodes consumed.
    pub episodes: u64,
}

impl SolverOutput {
    fn exact(policy: AgentPolicy) -> Self {
        Self {
            policy,
            draws: 0,
            episodes: 0,
        }
    }
}

/// Approximate best response for an induced CMDP. Implementations must
/// return policies that satisfy the model's constraint (exactly or with the
/// solver's stated probability).
pub trait CmdpSolver {
    fn name(&self) -> &'static str;
    fn solve(&mut self, model: &Cmdp, ctx: SolveContext) -> Result<SolverOutput>;
}

/// Exact linear-programming solver.
#[derive(Clone, Copy, Debug, Default)]
pub struct LpSolver;

impl CmdpSolver for LpSolver {
    fn name(&self) -> &'static str {
        "lp"
    }

    fn solve(&mut self, model: &Cmdp, _ctx: SolveContext) -> Result<SolverOutput> {
        Ok(SolverOutput::exact(solve_cmdp_lp(model)?.policy))
    }
}

/// Primal-dual on the known model with the threshold tightened by the
/// configured margin. Near-boundary optima can be cut off by the tightening.
#[derive(Clone, Debug)]
pub struct PrimalDualSolver {
    pub epsilon_prime: f64,
    pub slater: f64,
    pub iterations: Option<u64>,
}

impl CmdpSolver for PrimalDualSolver {
    fn name(&self) -> &'static str {
        "primal_dual"
    }

    fn solve(&mut self, model: &Cmdp, _ctx: SolveContext) -> Result<SolverOutput> {
        let mut cfg = PrimalDualConfig::new(
            self.epsilon_prime,
            0.5,
            self.slater,
            model.horizon(),
            model.n_states(),
            model.n_actions(),
        )?;
        if let Some(t) = self.iterations {
            cfg = cfg.with_iterations(t);
        }
        let tightened = model.with_threshold(cfg.alpha_prime(model.threshold()).max(0.0))?;
        Ok(SolverOutput::exact(
            primal_dual_solve(&tightened, &cfg)?.averaged,
        ))
    }
}

/// Empirical-model primal-dual through a generative model of the induced
/// transitions.
#[derive(Clone, Debug)]
pub struct GenerativeSolver {
    pub epsilon_prime: f64,
    pub delta_prime: f64,
    pub slater: f64,
    pub iterations: Option<u64>,
    pub samples: Option<u64>,
    rng: ChaCha8Rng,
}

impl GenerativeSolver {
    pub fn new(epsilon_prime: f64, delta_prime: f64, slater: f64, seed: u64) -> Self {
        Self {
            epsilon_prime,
            delta_prime,
            slater,
            iterations: None,
            samples: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn with_iterations(mut self, t: u64) -> Self {
        self.iterations = Some(t);
        self
    }

    pub fn with_samples(mut self, n: u64) -> Self {
        self.samples = Some(n);
        self
    }

    pub fn config(&self, model: &Cmdp) -> Result<PrimalDualConfig> {
        let mut cfg = PrimalDualConfig::new(
            self.epsilon_prime,
            self.delta_prime,
            self.slater,
            model.horizon(),
            model.n_states(),
            model.n_actions(),
        )?;
        if let Some(t) = self.iterations {
            cfg = cfg.with_iterations(t);
        }
        if let Some(n) = self.samples {
            cfg = cfg.with_samples(n);
        }
        Ok(cfg)
    }
}

impl CmdpSolver for GenerativeSolver {
    fn name(&self) -> &'static str {
        "generative"
    }

    fn solve(&mut self, model: &Cmdp, _ctx: SolveContext) -> Result<SolverOutput> {
        let cfg = self.config(model)?;
        let mut gen = GenerativeModel::new(model, self.rng.gen());
        let sol = solve_cmdp_generative(&mut gen, model.threshold(), &cfg)?;
        Ok(SolverOutput {
            policy: sol.policy,
            draws: sol.draws,
            episodes: 0,
        })
    }
}

/// Selects the best of a caller-supplied stream of safe policies by
/// Monte-Carlo evaluation with a fixed number of episodes per policy.
pub struct SafeStreamSolver<F> {
    provider: F,
    episodes: usize,
    rng: ChaCha8Rng,
}

impl<F> SafeStreamSolver<F>
where
    F: FnMut(&Cmdp, SolveContext) -> Vec<AgentPolicy>,
{
    pub fn new(provider: F, episodes: usize, seed: u64) -> Self {
        Self {
            provider,
            episodes,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl<F> CmdpSolver for SafeStreamSolver<F>
where
    F: FnMut(&Cmdp, SolveContext) -> Vec<AgentPolicy>,
{
    fn name(&self) -> &'static str {
        "safe_stream"
    }

    fn solve(&mut self, model: &Cmdp, ctx: SolveContext) -> Result<SolverOutput> {
        let stream = (self.provider)(model, ctx);
        let sel = online_to_batch_select(
            &stream,
            ValueSource::Sampled {
                model,
                episodes: self.episodes,
            },
            &mut self.rng,
        )?;
        Ok(SolverOutput {
            policy: sel.policy,
            draws: 0,
            episodes: sel.episodes,
        })
    }
}
