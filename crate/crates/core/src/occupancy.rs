//! State-action occupancy measures of single-agent finite-horizon models.

use std::io::Write;

use crate::cmdp::Cmdp;
use crate::error::{Error, Result};
use crate::tabular::AgentPolicy;

/// Below this per-state mass the recovered policy is uniform.
pub const ZERO_MASS: f64 = 1e-14;

/// `rho[h][s][a]`, stored densely in the same layout as CMDP stage tables.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyMeasure {
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    rho: Vec<f64>,
}

impl OccupancyMeasure {
    pub fn new(horizon: usize, n_states: usize, n_actions: usize, rho: Vec<f64>) -> Result<Self> {
        if rho.len() != horizon * n_states * n_actions {
            return Err(Error::Dimension(format!(
                "occupancy buffer has {} entries, expected {}",
                rho.len(),
                horizon * n_states * n_actions
            )));
        }
        if let Some(x) = rho.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidPolicy(format!(
                "occupancy entry {x} is negative or non-finite"
            )));
        }
        Ok(Self {
            horizon,
            n_states,
            n_actions,
            rho,
        })
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

    pub fn values(&self) -> &[f64] {
        &self.rho
    }

    #[inline]
    pub fn get(&self, h: usize, s: usize, a: usize) -> f64 {
        self.rho[(h * self.n_states + s) * self.n_actions + a]
    }

    /// Total mass at each step.
    pub fn step_masses(&self) -> Vec<f64> {
        self.rho
            .chunks(self.n_states * self.n_actions)
            .map(|c| c.iter().sum())
            .collect()
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.horizon == other.horizon
            && self.n_states == other.n_states
            && self.n_actions == other.n_actions
    }

    /// Largest violation of the flow equations of `model`, including the
    /// initial-distribution condition at the first step.
    pub fn flow_residual(&self, model: &Cmdp) -> Result<f64> {
        check_model_shape(model, self.horizon, self.n_states, self.n_actions)?;
        let (ns, na) = (self.n_states, self.n_actions);
        let mut worst: f64 = 0.0;
        let mut inflow = model.initial_dist().to_vec();
        for h in 0..self.horizon {
            let mut next = vec![0.0; ns];
            for s in 0..ns {
                let mut out = 0.0;
                for a in 0..na {
                    let r = self.get(h, s, a);
                    out += r;
                    if r != 0.0 {
                        model
                            .transitions()
                            .accumulate(model.index(h, s, a), r, &mut next);
                    }
                }
                worst = worst.max((out - inflow[s]).abs());
            }
            inflow = next;
        }
        Ok(worst)
    }

    /// CSV with columns `h,s,a,rho`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "h,s,a,rho")?;
        for h in 0..self.horizon {
            for s in 0..self.n_states {
                for a in 0..self.n_actions {
                    writeln!(w, "{h},{s},{a},{}", self.get(h, s, a))?;
                }
            }
        }
        Ok(())
    }
}

fn check_model_shape(model: &Cmdp, hz: usize, ns: usize, na: usize) -> Result<()> {
    if model.horizon() != hz || model.n_states() != ns || model.n_actions() != na {
        return Err(Error::Dimension(format!(
            "occupancy shape (H={hz}, S={ns}, A={na}) does not match model (H={}, S={}, A={})",
            model.horizon(),
            model.n_states(),
            model.n_actions()
        )));
    }
    Ok(())
}

/// Occupancy of `policy` in `model`, built by the forward recursion.
pub fn occupancy_from_policy(model: &Cmdp, policy: &AgentPolicy) -> Result<OccupancyMeasure> {
    model.check_policy(policy)?;
    let (hz, ns, na) = (model.horizon(), model.n_states(), model.n_actions());
    let mut rho = vec![0.0; hz * ns * na];
    let mut state_mass = model.initial_dist().to_vec();
    for h in 0..hz {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            if state_mass[s] == 0.0 {
                continue;
            }
            for (a, &p) in policy.dist(h, s).iter().enumerate() {
                let idx = model.index(h, s, a);
                let r = state_mass[s] * p;
                rho[idx] = r;
                if r != 0.0 {
                    model.transitions().accumulate(idx, r, &mut next);
                }
            }
        }
        state_mass = next;
    }
    OccupancyMeasure::new(hz, ns, na, rho)
}

/// Policy inducing `occ`: normalize each state's row, uniform where the
/// state carries no mass.
pub fn policy_from_occupancy(occ: &OccupancyMeasure) -> AgentPolicy {
    let na = occ.n_actions;
    let uniform = 1.0 / na as f64;
    let mut probs = Vec::with_capacity(occ.rho.len());
    for row in occ.rho.chunks(na) {
        let mass: f64 = row.iter().sum();
        if mass < ZERO_MASS {
            probs.extend(std::iter::repeat_n(uniform, na));
        } else {
            let start = probs.len();
            probs.extend(row.iter().map(|r| r / mass));
            let sum: f64 = probs[start..].iter().sum();
            // Pull the row back onto the simplex after division round-off.
            let fix = 1.0 - sum;
            if fix != 0.0 {
                let k = (start..start + na)
                    .max_by(|&i, &j| probs[i].total_cmp(&probs[j]))
                    .expect("non-empty row");
                probs[k] += fix;
            }
        }
    }
    AgentPolicy::new(occ.horizon, occ.n_states, na, probs).expect("normalized rows")
}

/// `sum_h sum_{s,a} rho_h(s,a) * stage_h(s,a)`.
pub fn value_from_occupancy(occ: &OccupancyMeasure, stage: &[f64]) -> Result<f64> {
    if stage.len() != occ.rho.len() {
        return Err(Error::Dimension(format!(
            "stage table has {} entries, occupancy has {}",
            stage.len(),
            occ.rho.len()
        )));
    }
    Ok(occ.rho.iter().zip(stage).map(|(r, l)| r * l).sum())
}

/// Elementwise mean.
pub fn average_occupancies(list: &[OccupancyMeasure]) -> Result<OccupancyMeasure> {
    let w = 1.0 / list.len().max(1) as f64;
    weighted_average(list.iter().map(|o| (o, w)))
}

/// `sum_k w_k * rho_k`; weights are expected to sum to one.
pub fn weighted_average<'a>(
    items: impl IntoIterator<Item = (&'a OccupancyMeasure, f64)>,
) -> Result<OccupancyMeasure> {
    let mut iter = items.into_iter();
    let (first, w0) = iter.next().ok_or(Error::Empty("occupancy list"))?;
    let mut rho: Vec<f64> = first.rho.iter().map(|r| r * w0).collect();
    for (occ, w) in iter {
        if !occ.same_shape(first) {
            return Err(Error::Dimension(
                "occupancy measures differ in shape".into(),
            ));
        }
        for (acc, r) in rho.iter_mut().zip(&occ.rho) {
            *acc += w * r;
        }
    }
    OccupancyMeasure::new(first.horizon, first.n_states, first.n_actions, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmdp::model::tests::bandit;
    use crate::cmdp::CmdpParts;
    use crate::envs::random::{random_cmdp, random_policy};
    use crate::tabular::Transitions;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_state() {
        let m = bandit([0.0, 1.0], [0.0, 1.0], 0.5);
        let p = AgentPolicy::stationary(1, 1, &[0.3, 0.7]).unwrap();
        let occ = occupancy_from_policy(&m, &p).unwrap();
        assert_eq!(occ.values(), &[0.3, 0.7]);
        assert_eq!(policy_from_occupancy(&occ), p);
    }

    #[test]
    fn deterministic_chain_gives_indicator_path() {
        // action 0 stays, action 1 moves to the other state
        let m = Cmdp::new(CmdpParts {
            n_states: 2,
            n_actions: 2,
            horizon: 3,
            transitions: Transitions::from_rows(
                2,
                (0..3)
                    .flat_map(|_| {
                        [
                            vec![(0, 1.0)],
                            vec![(1, 1.0)],
                            vec![(1, 1.0)],
                            vec![(0, 1.0)],
                        ]
                    })
                    .collect(),
            )
            .unwrap(),
            reward: vec![0.0; 12],
            cost: vec![0.0; 12],
            threshold: 0.0,
            initial_dist: vec![1.0, 0.0],
        })
        .unwrap();
        let p = AgentPolicy::deterministic(3, 2, 2, &[1, 0, 0, 0, 0, 0]).unwrap();
        let occ = occupancy_from_policy(&m, &p).unwrap();
        assert_eq!(
            occ.values(),
            &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]
        );
        assert_eq!(occ.flow_residual(&m).unwrap(), 0.0);
    }

    #[test]
    fn zero_mass_rows_are_uniform() {
        let occ =
            OccupancyMeasure::new(1, 2, 4, vec![0.1, 0.2, 0.3, 0.4, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let p = policy_from_occupancy(&occ);
        assert_eq!(p.dist(0, 1), &[0.25; 4]);
        assert!((p.dist(0, 0)[3] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn constant_stage_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_cmdp(&mut rng, 3, 2, 4, 1.0);
        let occ = occupancy_from_policy(&m, &random_policy(&mut rng, 4, 3, 2)).unwrap();
        assert_eq!(value_from_occupancy(&occ, &[0.0; 24]).unwrap(), 0.0);
        assert!((value_from_occupancy(&occ, &[1.0; 24]).unwrap() - 4.0).abs() < 1e-12);
        assert!(value_from_occupancy(&occ, &[1.0]).is_err());
    }

    #[test]
    fn averaging() {
        let a = OccupancyMeasure::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
        let b = OccupancyMeasure::new(1, 1, 2, vec![0.0, 1.0]).unwrap();
        assert_eq!(average_occupancies(std::slice::from_ref(&a)).unwrap(), a);
        assert_eq!(
            average_occupancies(&[a.clone(), b]).unwrap().values(),
            &[0.5, 0.5]
        );
        assert!(matches!(average_occupancies(&[]), Err(Error::Empty(_))));
        let c = OccupancyMeasure::new(2, 1, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(average_occupancies(&[a, c]).is_err());
    }

    #[test]
    fn csv_dump() {
        let occ = OccupancyMeasure::new(1, 1, 2, vec![0.25, 0.75]).unwrap();
        let mut buf = Vec::new();
        occ.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "h,s,a,rho\n0,0,0,0.25\n0,0,1,0.75\n"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn recursion_preserves_mass_and_flow(seed in any::<u64>(), ns in 1usize..5, na in 1usize..4, hz in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_cmdp(&mut rng, ns, na, hz, 0.0);
            let occ = occupancy_from_policy(&m, &random_policy(&mut rng, hz, ns, na)).unwrap();
            for mass in occ.step_masses() {
                prop_assert!((mass - 1.0).abs() < 1e-10);
            }
            prop_assert!(occ.flow_residual(&m).unwrap() < 1e-12);
        }

        #[test]
        fn convex_combinations_stay_valid(seed in any::<u64>(), k in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_cmdp(&mut rng, 3, 3, 3, 0.0);
            let occs: Vec<_> = (0..k).map(|_| occupancy_from_policy(&m, &random_policy(&mut rng, 3, 3, 3)).unwrap()).collect();
            let w: Vec<f64> = (0..k).map(|_| rand::Rng::gen::<f64>(&mut rng) + 0.01).collect();
            let total: f64 = w.iter().sum();
            let mix = weighted_average(occs.iter().zip(w.iter().map(|x| x / total))).unwrap();
            prop_assert!(mix.flow_residual(&m).unwrap() < 1e-12);
        }

        #[test]
        fn uniform_branch_never_changes_values(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = random_cmdp(&mut rng, 3, 2, 3, 0.0);
            // make state 2 unreachable by routing every transition to states 0 and 1
            let rows = (0..base.transitions().n_rows())
                .map(|r| {
                    let d = base.transitions().dense_row(r);
                    vec![(0, d[0] + d[2]), (1, d[1])]
                })
                .collect();
            let m = base.with_transitions(Transitions::from_rows(3, rows).unwrap());
            let mut mu = m.initial_dist().to_vec();
            mu[0] += mu[2];
            mu[2] = 0.0;
            let m = Cmdp::new(CmdpParts {
                n_states: 3, n_actions: 2, horizon: 3,
                transitions: m.transitions().clone(),
                reward: m.reward().to_vec(), cost: m.cost().to_vec(),
                threshold: 0.0, initial_dist: mu,
            }).unwrap();
            let pol = random_policy(&mut rng, 3, 3, 2);
            let mut perturbed = policy_from_occupancy(&occupancy_from_policy(&m, &pol).unwrap());
            for h in 0..3 {
                perturbed.set_dist(h, 2, &[1.0, 0.0]).unwrap();
            }
            let a = m.evaluate(&pol).unwrap();
            let b = m.evaluate(&perturbed).unwrap();
            prop_assert!((a.reward - b.reward).abs() < 1e-12);
            prop_assert!((a.cost - b.cost).abs() < 1e-12);
        }
    }
}
