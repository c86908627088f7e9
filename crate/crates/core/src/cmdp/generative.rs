use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cmdp::Cmdp;
use crate::error::{Error, Result};
use crate::tabular::Transitions;

/// Sampling oracle over a model's transitions with per-entry draw counters.
///
/// Rewards, costs and shape of the wrapped model are treated as known;
/// only transitions are accessed through [`GenerativeModel::sample`].
#[derive(Clone, Debug)]
pub struct GenerativeModel<'a> {
    model: &'a Cmdp,
    rng: ChaCha8Rng,
    counts: Vec<u64>,
}

impl<'a> GenerativeModel<'a> {
    pub fn new(model: &'a Cmdp, seed: u64) -> Self {
        Self::with_rng(model, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(model: &'a Cmdp, rng: ChaCha8Rng) -> Self {
        Self {
            model,
            rng,
            counts: vec![0; model.table_len()],
        }
    }

    /// The wrapped model; callers use it for shape, rewards and costs.
    pub fn known(&self) -> &'a Cmdp {
        self.model
    }

    /// One successor draw for step `h`, state `s`, action `a`.
    pub fn sample(&mut self, h: usize, s: usize, a: usize) -> usize {
        let idx = self.model.index(h, s, a);
        self.counts[idx] += 1;
        self.model.transitions().sample(idx, self.rng.gen())
    }

    pub fn count(&self, h: usize, s: usize, a: usize) -> u64 {
        self.counts[self.model.index(h, s, a)]
    }

    pub fn total_draws(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Empirical model from `n` draws per `(h, s, a)`, with known rewards and
/// costs and the given threshold.
pub fn build_empirical_cmdp(
    gen: &mut GenerativeModel<'_>,
    n: usize,
    alpha_prime: f64,
) -> Result<Cmdp> {
    if n == 0 {
        return Err(Error::Config("need at least one sample per entry".into()));
    }
    let model = gen.known();
    let (hz, ns, na) = (model.horizon(), model.n_states(), model.n_actions());
    let mut rows = Vec::with_capacity(model.table_len());
    let mut tally = vec![0u64; ns];
    for h in 0..hz {
        for s in 0..ns {
            for a in 0..na {
                tally.iter_mut().for_each(|t| *t = 0);
                for _ in 0..n {
                    tally[gen.sample(h, s, a)] += 1;
                }
                rows.push(
                    tally
                        .iter()
                        .enumerate()
                        .filter(|(_, &c)| c > 0)
                        .map(|(t, &c)| (t, c as f64 / n as f64))
                        .collect(),
                );
            }
        }
    }
    let rows = Transitions::from_rows(ns, rows)?;
    model.with_transitions(rows).with_threshold(alpha_prime)
}
