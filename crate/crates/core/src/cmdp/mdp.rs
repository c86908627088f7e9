use crate::cmdp::Cmdp;
use crate::error::{Error, Result};
use crate::tabular::AgentPolicy;

/// Actions whose Q-value is within this of the best count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MdpSolution {
    pub policy: AgentPolicy,
    pub value: f64,
    /// Optimal action per `(h, s)`.
    pub actions: Vec<usize>,
}

/// Maximizes the expected sum of `stage` by backward induction, ignoring
/// the constraint. Ties go to the lowest action index.
pub fn solve_mdp(model: &Cmdp, stage: &[f64]) -> Result<MdpSolution> {
    if stage.len() != model.table_len() {
        return Err(Error::Dimension(format!(
            "stage table has {} entries, expected {}",
            stage.len(),
            model.table_len()
        )));
    }
    let mut ws = Workspace::new(model);
    let value = ws.solve(model, |idx| stage[idx]);
    let actions = ws.actions.clone();
    let policy = AgentPolicy::deterministic(
        model.horizon(),
        model.n_states(),
        model.n_actions(),
        &actions,
    )?;
    Ok(MdpSolution {
        policy,
        value,
        actions,
    })
}

/// Reusable buffers for repeated solves on one model.
pub(crate) struct Workspace {
    next: Vec<f64>,
    cur: Vec<f64>,
    pub(crate) actions: Vec<usize>,
}

impl Workspace {
    pub(crate) fn new(model: &Cmdp) -> Self {
        Self {
            next: vec![0.0; model.n_states()],
            cur: vec![0.0; model.n_states()],
            actions: vec![0; model.horizon() * model.n_states()],
        }
    }

    /// Fills `actions` with an optimal deterministic policy and returns its value.
    pub(crate) fn solve(&mut self, model: &Cmdp, stage: impl Fn(usize) -> f64) -> f64 {
        let (ns, na) = (model.n_states(), model.n_actions());
        self.next.iter_mut().for_each(|v| *v = 0.0);
        for h in (0..model.horizon()).rev() {
            for s in 0..ns {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for a in 0..na {
                    let idx = model.index(h, s, a);
                    let q = stage(idx) + model.transitions().expect(idx, &self.next);
                    if q > best + TIE_TOL {
                        best = q;
                        arg = a;
                    }
                }
                self.cur[s] = best;
                self.actions[h * ns + s] = arg;
            }
            std::mem::swap(&mut self.cur, &mut self.next);
        }
        self.next
            .iter()
            .zip(model.initial_dist())
            .map(|(v, m)| v * m)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmdp::model::tests::bandit;
    use crate::envs::random::{random_cmdp, random_policy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn picks_best_arm() {
        let m = bandit([0.5, 1.0], [0.0, 0.0], 1.0);
        let sol = solve_mdp(&m, &[1.0, 2.0]).unwrap();
        assert_eq!(sol.actions, vec![1]);
        assert_eq!(sol.value, 2.0);
    }

    #[test]
    fn ties_go_to_first_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_cmdp(&mut rng, 3, 3, 4, 1.0);
        let sol = solve_mdp(&m, &vec![0.25; m.table_len()]).unwrap();
        assert!(sol.actions.iter().all(|&a| a == 0));
        assert!((sol.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dominates_random_policies() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_cmdp(&mut rng, 4, 3, 3, 1.0);
        let sol = solve_mdp(&m, m.reward()).unwrap();
        let check = m.evaluate(&sol.policy).unwrap().reward;
        assert!((check - sol.value).abs() < 1e-12);
        for _ in 0..100 {
            let v = m
                .evaluate(&random_policy(&mut rng, 3, 4, 3))
                .unwrap()
                .reward;
            assert!(v <= sol.value + 1e-12);
        }
    }

    #[test]
    fn shape_error() {
        let m = bandit([0.5, 1.0], [0.0, 0.0], 1.0);
        assert!(matches!(solve_mdp(&m, &[1.0]), Err(Error::Dimension(_))));
    }
}
