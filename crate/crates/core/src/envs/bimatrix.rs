use crate::duality::BimatrixCmpg;
use crate::error::Result;
use crate::tabular::Cmpg;

/// Shared reward `[[3, 2], [2, 4]]`, cost only on the second-second pair,
/// threshold 1/2: the Lagrangian dual is strictly above the primal optimum.
pub fn counterexample() -> BimatrixCmpg {
    BimatrixCmpg::new(
        vec![vec![3.0, 2.0], vec![2.0, 4.0]],
        vec![vec![0.0, 0.0], vec![0.0, 1.0]],
        0.5,
    )
    .expect("fixed matrices are valid")
}

/// Same cost and threshold with reward `[[3, 3], [3, 4]]`: no duality gap,
/// but a feasible Lagrangian maximizer that is not an equilibrium.
pub fn zero_gap_example() -> BimatrixCmpg {
    BimatrixCmpg::new(
        vec![vec![3.0, 3.0], vec![3.0, 4.0]],
        vec![vec![0.0, 0.0], vec![0.0, 1.0]],
        0.5,
    )
    .expect("fixed matrices are valid")
}

/// Two-agent, one-state, one-step game from raw matrices; rewards are
/// divided by their largest magnitude.
pub fn build_bimatrix(reward: Vec<Vec<f64>>, cost: Vec<Vec<f64>>, alpha: f64) -> Result<Cmpg> {
    BimatrixCmpg::new(reward, cost, alpha)?.to_cmpg()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ca::verify_nash;
    use crate::envs::random::random_joint_policy;
    use crate::tabular::is_feasible;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_reward_without_cost_is_always_feasible() {
        let g = build_bimatrix(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0; 2]; 2],
            0.0,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert!(
                is_feasible(&g, &random_joint_policy(&mut rng, &g), 0.0)
                    .unwrap()
                    .feasible
            );
        }
    }

    #[test]
    fn constant_reward_everything_is_nash() {
        let g = build_bimatrix(vec![vec![2.0; 3]; 3], vec![vec![0.5; 3]; 3], 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let r = verify_nash(&g, &random_joint_policy(&mut rng, &g), 1e-9).unwrap();
            assert!(r.epsilon.abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_out_of_range_input() {
        assert!(build_bimatrix(vec![vec![-1.0, 0.0]], vec![vec![0.0, 0.0]], 0.5).is_err());
        assert!(build_bimatrix(vec![vec![1.0, 0.0]], vec![vec![0.0, 1.5]], 0.5).is_err());
        assert!(build_bimatrix(vec![vec![1.0, 0.0]], vec![vec![0.0]], 0.5).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = counterexample();
        let back: BimatrixCmpg = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        let c = g.to_cmpg().unwrap();
        assert_eq!(Cmpg::from_json(&c.to_json().unwrap()).unwrap(), c);
    }
}
