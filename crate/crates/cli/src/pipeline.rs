//! Runs one configured experiment and writes its artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use serde::Serialize;
use serde_json::json;

use cmpg::ca::{
    ca_cmpg_explore, ca_cmpg_known, feasible_init_single_constraint, slater_constant, verify_nash,
    CaOutcome, CmdpSolver, ExploreConfig, GenerativeSolver, LpSolver, NashReport, PrimalDualSolver,
    RunTrace,
};
use cmpg::duality::{duality_gap_report, write_dual_trace};
use cmpg::envs::even_split_policy;
use cmpg::{evaluate, Cmpg, JointPolicy};

use crate::config::{Algorithm, Environment, ExperimentConfig, InitSpec, SolverKind};

/// Profiles used to estimate the Slater constant when none is configured.
const SLATER_PROFILES: usize = 64;
/// Feasibility tolerance of the final Nash check.
const VERIFY_TOL: f64 = 1e-8;

pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Artifacts> {
    let env = cfg.environment.build()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut artifacts = Artifacts {
        dir: out.to_path_buf(),
        files: Vec::new(),
    };
    match cfg.algorithm {
        Algorithm::DualityReport => duality(&env, &mut artifacts)?,
        Algorithm::CaKnown | Algorithm::CaExplore => coordinate_ascent(cfg, &env, &mut artifacts)?,
        Algorithm::Verify => verify(cfg, &env, &mut artifacts)?,
    }
    Ok(artifacts)
}

impl Artifacts {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn trace(&mut self, trace: &RunTrace) -> Result<()> {
        let mut w = self.create("run_trace.csv")?;
        trace.write_run_csv(&mut w)?;
        w.flush()?;
        let mut w = self.create("cost_curve.csv")?;
        trace.write_cost_csv(&mut w)?;
        w.flush()?;
        let mut w = self.create("gap_curve.csv")?;
        trace.write_gap_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

fn duality(env: &Environment, artifacts: &mut Artifacts) -> Result<()> {
    let Some(bm) = &env.bimatrix else {
        bail!("duality_report needs a bimatrix environment");
    };
    let report = duality_gap_report(bm)?;
    info!(
        "primal {:.6}, dual {:.6} at lambda {:.6}, gap {:.6}",
        report.primal_value, report.dual_value, report.dual_lambda, report.gap
    );
    let mut w = artifacts.create("dual_trace.csv")?;
    write_dual_trace(&report.trace, &mut w)?;
    w.flush()?;
    artifacts.json("report.json", &report)
}

fn initial_policy(cfg: &ExperimentConfig, env: &Environment) -> Result<JointPolicy> {
    let game = &env.game;
    let policy = match &cfg.init {
        InitSpec::Cheapest => feasible_init_single_constraint(game)?,
        InitSpec::FirstAction => game.first_action_policy(),
        InitSpec::Uniform => game.uniform_policy(),
        InitSpec::EvenSplit => match &env.congestion {
            Some(c) => even_split_policy(c)?,
            None => bail!("the even_split start only applies to the congestion game"),
        },
        InitSpec::File(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            JointPolicy::from_json(&text)
                .with_context(|| format!("loading policy {}", p.display()))?
        }
    };
    game.check_policy(&policy)?;
    Ok(policy)
}

fn slater(cfg: &ExperimentConfig, game: &Cmpg, seed: u64) -> Result<f64> {
    if let Some(z) = cfg.slater {
        return Ok(z);
    }
    let est = slater_constant(game, SLATER_PROFILES, seed)?;
    info!(
        "Slater constant {} {:.6}",
        if est.exact {
            "computed as"
        } else {
            "estimated from above as"
        },
        est.value
    );
    if est.value.is_nan() || est.value <= 0.0 {
        bail!(cmpg::Error::InfeasibleGame(format!(
            "no strictly feasible slack found (Slater estimate {})",
            est.value
        )));
    }
    Ok(est.value)
}

fn solver(
    cfg: &ExperimentConfig,
    game: &Cmpg,
    accuracy: f64,
    delta: f64,
    seed: u64,
) -> Result<Box<dyn CmdpSolver>> {
    Ok(match cfg.solver {
        SolverKind::Lp => Box::new(LpSolver),
        SolverKind::PrimalDual => Box::new(PrimalDualSolver {
            epsilon_prime: accuracy,
            slater: slater(cfg, game, seed)?,
            iterations: cfg.iterations,
        }),
        SolverKind::Generative => {
            let mut s = GenerativeSolver::new(accuracy, delta, slater(cfg, game, seed)?, seed);
            if let Some(t) = cfg.iterations {
                s = s.with_iterations(t);
            }
            if let Some(n) = cfg.samples {
                s = s.with_samples(n);
            }
            Box::new(s)
        }
    })
}

#[derive(Serialize)]
struct RunSummary<'a> {
    algorithm: Algorithm,
    solver: &'static str,
    epsilon: f64,
    seed: Option<u64>,
    cycles: usize,
    accepted_updates: usize,
    converged: bool,
    episodes: u64,
    steps: u64,
    draws: u64,
    thresholds: &'a [f64],
    reward_values: Vec<f64>,
    cost_values: Vec<f64>,
    nash: Option<NashReport>,
}

fn coordinate_ascent(
    cfg: &ExperimentConfig,
    env: &Environment,
    artifacts: &mut Artifacts,
) -> Result<()> {
    let game = &env.game;
    let epsilon = cfg.epsilon.context("epsilon is required")?;
    let init = initial_policy(cfg, env)?;
    let (outcome, solver_name) = if cfg.algorithm == Algorithm::CaKnown {
        let seed = cfg.seed.unwrap_or(0);
        let mut s = solver(cfg, game, epsilon / 2.0, cfg.delta.unwrap_or(0.1), seed)?;
        let name = s.name();
        (
            ca_cmpg_known(game, &init, epsilon, cfg.max_cycles, s.as_mut())?,
            name,
        )
    } else {
        let seed = cfg.seed.context("ca_explore needs an explicit seed")?;
        let delta = cfg.delta.context("delta is required")?;
        let mut ex = ExploreConfig::new(epsilon, delta, game.n_agents(), game.horizon(), seed)?;
        if let Some(m) = cfg.episodes {
            ex = ex.with_episodes(m);
        }
        if let Some(c) = cfg.max_cycles {
            ex = ex.with_max_cycles(c);
        }
        let mut s = solver(
            cfg,
            game,
            ex.solver_accuracy(),
            ex.solver_delta,
            seed.wrapping_add(1),
        )?;
        let name = s.name();
        (ca_cmpg_explore(game, &init, &ex, s.as_mut())?, name)
    };
    let CaOutcome { policy, trace } = outcome;
    info!(
        "{} cycles, {} updates, converged {}",
        trace.cycles.len(),
        trace.accepted_updates(),
        trace.converged
    );
    artifacts.trace(&trace)?;
    let values = evaluate(game, &policy)?;
    let nash = match verify_nash(game, &policy, VERIFY_TOL) {
        Ok(r) => Some(r),
        Err(e) => {
            log::warn!("final policy could not be verified: {e}");
            None
        }
    };
    let summary = RunSummary {
        algorithm: cfg.algorithm,
        solver: solver_name,
        epsilon,
        seed: cfg.seed,
        cycles: trace.cycles.len(),
        accepted_updates: trace.accepted_updates(),
        converged: trace.converged,
        episodes: trace.total_episodes(),
        steps: trace.total_steps(),
        draws: trace.total_draws(),
        thresholds: game.thresholds(),
        reward_values: values.reward_values,
        cost_values: values.cost_values,
        nash,
    };
    artifacts.json("report.json", &summary)?;
    let mut w = artifacts.create("final_policy.json")?;
    w.write_all(policy.to_json()?.as_bytes())?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn verify(cfg: &ExperimentConfig, env: &Environment, artifacts: &mut Artifacts) -> Result<()> {
    let policy = initial_policy(cfg, env)?;
    let report = verify_nash(&env.game, &policy, VERIFY_TOL)?;
    let values = evaluate(&env.game, &policy)?;
    info!("largest deviation gain {:.3e}", report.epsilon);
    let mut doc = json!({
        "nash": report,
        "reward_values": values.reward_values,
        "cost_values": values.cost_values,
        "thresholds": env.game.thresholds(),
    });
    if let Some(eps) = cfg.epsilon {
        doc["epsilon"] = json!(eps);
        doc["is_nash"] = json!(report.is_nash(eps));
    }
    artifacts.json("report.json", &doc)
}
