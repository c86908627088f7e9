use rand::Rng;

use crate::cmdp::Cmdp;
use crate::error::{Error, Result};
use crate::tabular::AgentPolicy;

/// Source of safe policies for one CMDP, such as the iterates of a
/// no-regret safe exploration algorithm. Every yielded policy must satisfy
/// the model's constraint.
pub trait SafePolicyStream {
    /// Next policy for `model`, or `None` when the stream is exhausted.
    fn next_policy(&mut self, model: &Cmdp) -> Option<AgentPolicy>;
}

/// Stream over a fixed list of policies, ignoring the model.
#[derive(Clone, Debug, Default)]
pub struct FixedStream {
    policies: std::collections::VecDeque<AgentPolicy>,
}

impl FixedStream {
    pub fn new(policies: Vec<AgentPolicy>) -> Self {
        Self {
            policies: policies.into(),
        }
    }
}

impl SafePolicyStream for FixedStream {
    fn next_policy(&mut self, _model: &Cmdp) -> Option<AgentPolicy> {
        self.policies.pop_front()
    }
}

/// How candidate policies are scored.
#[derive(Clone, Copy, Debug)]
pub enum ValueSource<'a> {
    /// Exact dynamic-programming values.
    Exact(&'a Cmdp),
    /// Mean return over this many sampled episodes per policy.
    Sampled { model: &'a Cmdp, episodes: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub policy: AgentPolicy,
    pub estimates: Vec<f64>,
    pub episodes: u64,
}

/// Episodes per policy for the selection guarantee with regret coefficient `c`:
/// `16 H^2 / eps^2 * ln(2c / (eps * delta))`.
pub fn selection_episodes(epsilon: f64, delta: f64, horizon: usize, c: f64) -> Result<usize> {
    if !(epsilon > 0.0 && delta > 0.0 && delta < 1.0 && c > 0.0) {
        return Err(Error::Config(format!(
            "selection needs eps > 0, delta in (0, 1) and c > 0, got {epsilon}, {delta}, {c}"
        )));
    }
    let h = horizon as f64;
    let m = 16.0 * h * h / (epsilon * epsilon) * (2.0 * c / (epsilon * delta)).ln();
    Ok(m.ceil().max(1.0) as usize)
}

/// Picks the policy with the highest (estimated) reward value; ties go to
/// the earliest.
pub fn online_to_batch_select<R: Rng + ?Sized>(
    stream: &[AgentPolicy],
    source: ValueSource<'_>,
    rng: &mut R,
) -> Result<Selection> {
    if stream.is_empty() {
        return Err(Error::Empty("policy stream"));
    }
    let mut estimates = Vec::with_capacity(stream.len());
    let mut episodes = 0u64;
    for p in stream {
        let v = match source {
            ValueSource::Exact(model) => model.evaluate(p)?.reward,
            ValueSource::Sampled { model, episodes: m } => {
                if m == 0 {
                    return Err(Error::Config("need at least one episode per policy".into()));
                }
                model.check_policy(p)?;
                let total: f64 = (0..m).map(|_| model.sample_returns(p, rng).0).sum();
                episodes += m as u64;
                total / m as f64
            }
        };
        estimates.push(v);
    }
    let mut index = 0;
    for (i, &v) in estimates.iter().enumerate() {
        if v > estimates[index] {
            index = i;
        }
    }
    Ok(Selection {
        index,
        policy: stream[index].clone(),
        estimates,
        episodes,
    })
}

/// Drains up to `limit` policies from `stream` and selects among them.
pub fn select_from_stream<S: SafePolicyStream + ?Sized, R: Rng + ?Sized>(
    stream: &mut S,
    model: &Cmdp,
    limit: usize,
    source: ValueSource<'_>,
    rng: &mut R,
) -> Result<Selection> {
    let mut policies = Vec::new();
    while policies.len() < limit {
        match stream.next_policy(model) {
            Some(p) => policies.push(p),
            None => break,
        }
    }
    online_to_batch_select(&policies, source, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmdp::model::tests::bandit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arm(p: f64) -> AgentPolicy {
        AgentPolicy::stationary(1, 1, &[1.0 - p, p]).unwrap()
    }

    #[test]
    fn lone_policy() {
        let m = bandit([0.0, 1.0], [0.0, 0.0], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sel = online_to_batch_select(
            &[arm(0.3)],
            ValueSource::Sampled {
                model: &m,
                episodes: 5,
            },
            &mut rng,
        )
        .unwrap();
        assert_eq!(sel.index, 0);
        assert_eq!(sel.episodes, 5);
        assert!(matches!(
            online_to_batch_select(&[], ValueSource::Exact(&m), &mut rng),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn exact_mode_and_ties() {
        let m = bandit([0.0, 1.0], [0.0, 0.0], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sel = online_to_batch_select(
            &[arm(0.2), arm(0.9), arm(0.9)],
            ValueSource::Exact(&m),
            &mut rng,
        )
        .unwrap();
        assert_eq!(sel.index, 1);
        assert_eq!(sel.episodes, 0);
    }

    #[test]
    fn separated_values_are_found() {
        let m = bandit([0.0, 1.0], [0.0, 0.0], 1.0);
        let mut wins = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sel = online_to_batch_select(
                &[arm(0.2), arm(0.9)],
                ValueSource::Sampled {
                    model: &m,
                    episodes: 10_000,
                },
                &mut rng,
            )
            .unwrap();
            wins += usize::from(sel.index == 1);
        }
        assert!(wins >= 99);
    }

    #[test]
    fn stream_interface() {
        let m = bandit([0.0, 1.0], [0.0, 0.0], 1.0);
        let mut s = FixedStream::new(vec![arm(0.1), arm(0.5), arm(0.4)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sel = select_from_stream(&mut s, &m, 2, ValueSource::Exact(&m), &mut rng).unwrap();
        assert_eq!(sel.index, 1);
        assert_eq!(sel.estimates.len(), 2);
    }

    #[test]
    fn episode_formula() {
        let m = selection_episodes(0.1, 0.05, 2, 10.0).unwrap();
        let expect = 16.0 * 4.0 / 0.01 * (20.0f64 / 0.005).ln();
        assert_eq!(m, expect.ceil() as usize);
        assert!(selection_episodes(0.0, 0.05, 2, 1.0).is_err());
    }
}
