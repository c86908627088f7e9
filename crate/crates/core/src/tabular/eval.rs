use crate::error::{Error, Result};
use crate::tabular::model::Cmpg;
use crate::tabular::policy::{AgentPolicy, JointPolicy};

/// How opponent actions are summed out at a single `(h, s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Marginalizer {
    /// Count convolution when the game carries count tables, else enumeration.
    #[default]
    Auto,
    /// Enumerate joint actions with positive probability.
    Naive,
    /// Convolve per-agent distributions into count distributions.
    Counts,
}

impl Marginalizer {
    fn use_counts(self, game: &Cmpg) -> Result<bool> {
        match self {
            Marginalizer::Auto => Ok(game.is_count_symmetric()),
            Marginalizer::Naive => Ok(false),
            Marginalizer::Counts if game.is_count_symmetric() => Ok(true),
            Marginalizer::Counts => Err(Error::Unsupported(
                "count marginalization on a game without count symmetry".into(),
            )),
        }
    }
}

/// Expected stage quantities under a product distribution at one `(h, s)`.
#[derive(Clone, Debug)]
pub(crate) struct JointStage {
    pub rewards: Vec<f64>,
    pub costs: Vec<f64>,
    pub next: Vec<f64>,
}

/// Expected stage quantities for one agent's fixed action, opponents marginalized.
#[derive(Clone, Debug)]
pub(crate) struct ActionStage {
    pub reward: f64,
    pub costs: Vec<f64>,
    pub next: Vec<f64>,
}

pub(crate) fn joint_stage(
    game: &Cmpg,
    h: usize,
    s: usize,
    dists: &[&[f64]],
    counts: bool,
) -> JointStage {
    let n = game.n_agents();
    let k = game.n_constraints();
    let mut out = JointStage {
        rewards: vec![0.0; n],
        costs: vec![0.0; k],
        next: vec![0.0; game.n_states()],
    };
    let reward_agents = if game.is_cooperative() { 1 } else { n };
    if counts {
        let t = game.count_tables().expect("count tables present");
        for (code, p) in t.convolve(dists, None) {
            let joint = t.slot_joint(t.slot(code));
            let idx = game.index(h, s, joint);
            for (j, c) in out.costs.iter_mut().enumerate() {
                *c += p * game.cost_table(j)[idx];
            }
            game.transitions().accumulate(idx, p, &mut out.next);
        }
        for i in 0..reward_agents {
            let mut acc = 0.0;
            for (code, p) in t.convolve(dists, Some(i)) {
                for (a, &q) in dists[i].iter().enumerate() {
                    if q > 0.0 {
                        let (rj, ri) = t.rep(t.slot(code + t.unit(a)), a);
                        acc += p * q * game.reward(ri, h, s, rj);
                    }
                }
            }
            out.rewards[i] = acc;
        }
    } else {
        game.joint_space()
            .for_each_profile(dists, None, |joint, p| {
                let idx = game.index(h, s, joint);
                for i in 0..reward_agents {
                    out.rewards[i] += p * game.reward_table(i)[idx];
                }
                for (j, c) in out.costs.iter_mut().enumerate() {
                    *c += p * game.cost_table(j)[idx];
                }
                game.transitions().accumulate(idx, p, &mut out.next);
            });
    }
    if reward_agents == 1 {
        let r = out.rewards[0];
        out.rewards.iter_mut().for_each(|x| *x = r);
    }
    out
}

pub(crate) fn agent_stage(
    game: &Cmpg,
    h: usize,
    s: usize,
    agent: usize,
    dists: &[&[f64]],
    counts: bool,
) -> Vec<ActionStage> {
    let m = game.n_actions(agent);
    let k = game.n_constraints();
    let mut out: Vec<ActionStage> = (0..m)
        .map(|_| ActionStage {
            reward: 0.0,
            costs: vec![0.0; k],
            next: vec![0.0; game.n_states()],
        })
        .collect();
    if counts {
        let t = game.count_tables().expect("count tables present");
        let others = t.convolve(dists, Some(agent));
        for (a, stage) in out.iter_mut().enumerate() {
            for &(code, p) in &others {
                let slot = t.slot(code + t.unit(a));
                let (rj, ri) = t.rep(slot, a);
                stage.reward += p * game.reward(ri, h, s, rj);
                let idx = game.index(h, s, t.slot_joint(slot));
                for (j, c) in stage.costs.iter_mut().enumerate() {
                    *c += p * game.cost_table(j)[idx];
                }
                game.transitions().accumulate(idx, p, &mut stage.next);
            }
        }
    } else {
        for (a, stage) in out.iter_mut().enumerate() {
            game.joint_space()
                .for_each_profile(dists, Some((agent, a)), |joint, p| {
                    let idx = game.index(h, s, joint);
                    stage.reward += p * game.reward_table(agent)[idx];
                    for (j, c) in stage.costs.iter_mut().enumerate() {
                        *c += p * game.cost_table(j)[idx];
                    }
                    game.transitions().accumulate(idx, p, &mut stage.next);
                });
        }
    }
    out
}

/// Per-step value tables `[h][s]` for every reward and cost signal.
#[derive(Clone, Debug, PartialEq)]
pub struct StepValues {
    pub rewards: Vec<Vec<f64>>,
    pub costs: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub reward_values: Vec<f64>,
    pub cost_values: Vec<f64>,
    pub step_values: Option<StepValues>,
}

/// Exact values of every agent's reward and every cost by backward induction.
pub fn evaluate(game: &Cmpg, policy: &JointPolicy) -> Result<EvalResult> {
    evaluate_with(game, policy, Marginalizer::Auto, false)
}

/// [`evaluate`] with an explicit marginalizer and optional per-step tables.
pub fn evaluate_with(
    game: &Cmpg,
    policy: &JointPolicy,
    how: Marginalizer,
    keep_steps: bool,
) -> Result<EvalResult> {
    game.check_policy(policy)?;
    let counts = how.use_counts(game)?;
    let (n, k, ns, hz) = (
        game.n_agents(),
        game.n_constraints(),
        game.n_states(),
        game.horizon(),
    );
    let mut r_tab = vec![vec![0.0; (hz + 1) * ns]; n];
    let mut c_tab = vec![vec![0.0; (hz + 1) * ns]; k];
    for h in (0..hz).rev() {
        for s in 0..ns {
            let st = joint_stage(game, h, s, &policy.dists(h, s), counts);
            let at = h * ns + s;
            let nx = (h + 1) * ns;
            for i in 0..n {
                let cont: f64 = st
                    .next
                    .iter()
                    .zip(&r_tab[i][nx..nx + ns])
                    .map(|(p, v)| p * v)
                    .sum();
                r_tab[i][at] = st.rewards[i] + cont;
            }
            for j in 0..k {
                let cont: f64 = st
                    .next
                    .iter()
                    .zip(&c_tab[j][nx..nx + ns])
                    .map(|(p, v)| p * v)
                    .sum();
                c_tab[j][at] = st.costs[j] + cont;
            }
        }
    }
    let mu = game.initial_dist();
    let start = |tab: &Vec<f64>| tab[..ns].iter().zip(mu).map(|(v, p)| v * p).sum::<f64>();
    let reward_values = r_tab.iter().map(start).collect();
    let cost_values = c_tab.iter().map(start).collect();
    let step_values = keep_steps.then(|| {
        let trim = |mut t: Vec<f64>| {
            t.truncate(hz * ns);
            t
        };
        StepValues {
            rewards: r_tab.into_iter().map(trim).collect(),
            costs: c_tab.into_iter().map(trim).collect(),
        }
    });
    Ok(EvalResult {
        reward_values,
        cost_values,
        step_values,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// `alpha_j - V^{c_j}` per constraint.
    pub slacks: Vec<f64>,
}

pub fn is_feasible(game: &Cmpg, policy: &JointPolicy, tol: f64) -> Result<Feasibility> {
    let eval = evaluate(game, policy)?;
    Ok(feasibility_of(game, &eval.cost_values, tol))
}

pub(crate) fn feasibility_of(game: &Cmpg, cost_values: &[f64], tol: f64) -> Feasibility {
    let slacks: Vec<f64> = game
        .thresholds()
        .iter()
        .zip(cost_values)
        .map(|(a, v)| a - v)
        .collect();
    Feasibility {
        feasible: slacks.iter().all(|&s| s >= -tol),
        slacks,
    }
}

/// Change in `agent`'s value when it alone switches to `deviation`; in a
/// cooperative game this is the change in the potential.
pub fn potential_gap(
    game: &Cmpg,
    policy: &JointPolicy,
    deviation: &AgentPolicy,
    agent: usize,
) -> Result<f64> {
    if !game.is_cooperative() {
        return Err(Error::Unsupported(
            "potential differences are only computable for cooperative games".into(),
        ));
    }
    game.check_policy(policy)?;
    game.check_agent_policy(agent, deviation)?;
    let base = evaluate(game, policy)?.reward_values[agent];
    let dev = evaluate(game, &policy.with_agent(agent, deviation.clone()))?.reward_values[agent];
    Ok(dev - base)
}
