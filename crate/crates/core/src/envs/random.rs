//! Random instances for tests and benchmarks.

use rand::Rng;

use crate::cmdp::{Cmdp, CmdpParts};
use crate::tabular::{Cmpg, CmpgParts, Transitions};

fn simplex(rng: &mut (impl Rng + ?Sized), n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.05).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

fn random_rows(rng: &mut (impl Rng + ?Sized), rows: usize, ns: usize) -> Transitions {
    Transitions::from_rows(
        ns,
        (0..rows)
            .map(|_| simplex(rng, ns).into_iter().enumerate().collect())
            .collect(),
    )
    .expect("normalized rows")
}

/// CMDP with dense random transitions, rewards and costs in [0, 1].
pub fn random_cmdp(
    rng: &mut (impl Rng + ?Sized),
    ns: usize,
    na: usize,
    hz: usize,
    threshold: f64,
) -> Cmdp {
    let rows = hz * ns * na;
    Cmdp::new(CmdpParts {
        n_states: ns,
        n_actions: na,
        horizon: hz,
        transitions: random_rows(rng, rows, ns),
        reward: (0..rows).map(|_| rng.gen()).collect(),
        cost: (0..rows).map(|_| rng.gen()).collect(),
        threshold,
        initial_dist: simplex(rng, ns),
    })
    .expect("random model is valid")
}

/// Random CMDP whose threshold leaves slack `slack` above the minimum
/// achievable cost (capped at the horizon).
pub fn random_strictly_feasible_cmdp(
    rng: &mut (impl Rng + ?Sized),
    ns: usize,
    na: usize,
    hz: usize,
    slack: f64,
) -> Cmdp {
    let m = random_cmdp(rng, ns, na, hz, hz as f64);
    let alpha = (m.min_cost() + slack).min(hz as f64);
    m.with_threshold(alpha).expect("threshold within range")
}

/// Random game with a shared reward for all agents and one cost.
pub fn random_cooperative_game(
    rng: &mut (impl Rng + ?Sized),
    actions: &[usize],
    ns: usize,
    hz: usize,
    threshold: f64,
) -> Cmpg {
    let nj: usize = actions.iter().product();
    let rows = hz * ns * nj;
    let reward: Vec<f64> = (0..rows).map(|_| rng.gen()).collect();
    Cmpg::new(CmpgParts {
        n_states: ns,
        actions_per_agent: actions.to_vec(),
        horizon: hz,
        transitions: random_rows(rng, rows, ns),
        rewards: vec![reward; actions.len()],
        costs: vec![(0..rows).map(|_| rng.gen()).collect()],
        thresholds: vec![threshold],
        initial_dist: simplex(rng, ns),
    })
    .expect("random game is valid")
}

/// Random game with independent per-agent rewards and one cost.
pub fn random_general_game(
    rng: &mut (impl Rng + ?Sized),
    actions: &[usize],
    ns: usize,
    hz: usize,
    threshold: f64,
) -> Cmpg {
    let nj: usize = actions.iter().product();
    let rows = hz * ns * nj;
    Cmpg::new(CmpgParts {
        n_states: ns,
        actions_per_agent: actions.to_vec(),
        horizon: hz,
        transitions: random_rows(rng, rows, ns),
        rewards: (0..actions.len())
            .map(|_| (0..rows).map(|_| rng.gen()).collect())
            .collect(),
        costs: vec![(0..rows).map(|_| rng.gen()).collect()],
        thresholds: vec![threshold],
        initial_dist: simplex(rng, ns),
    })
    .expect("random game is valid")
}

/// Random policy with full support.
pub fn random_policy(
    rng: &mut (impl Rng + ?Sized),
    hz: usize,
    ns: usize,
    na: usize,
) -> crate::tabular::AgentPolicy {
    let probs = (0..hz * ns).flat_map(|_| simplex(rng, na)).collect();
    crate::tabular::AgentPolicy::new(hz, ns, na, probs).expect("normalized rows")
}

/// Random deterministic policy.
pub fn random_deterministic_policy(
    rng: &mut (impl Rng + ?Sized),
    hz: usize,
    ns: usize,
    na: usize,
) -> crate::tabular::AgentPolicy {
    let actions: Vec<usize> = (0..hz * ns).map(|_| rng.gen_range(0..na)).collect();
    crate::tabular::AgentPolicy::deterministic(hz, ns, na, &actions).expect("valid actions")
}

/// Random product policy for a game.
pub fn random_joint_policy(
    rng: &mut (impl Rng + ?Sized),
    game: &Cmpg,
) -> crate::tabular::JointPolicy {
    crate::tabular::JointPolicy::new(
        (0..game.n_agents())
            .map(|i| random_policy(rng, game.horizon(), game.n_states(), game.n_actions(i)))
            .collect(),
    )
}
