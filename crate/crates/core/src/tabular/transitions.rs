use crate::error::{Error, Result};

pub(crate) const SIMPLEX_TOL: f64 = 1e-12;

/// Row-stochastic transition kernel stored as compressed sparse rows.
///
/// Row `r` is a distribution over successor states. Callers decide how
/// rows map onto `(h, s, a)` triples; both models here use
/// `(h * n_states + s) * n_actions + a`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transitions {
    n_states: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    probs: Vec<f64>,
}

impl Transitions {
    /// Builds from sparse rows. Duplicate targets are merged, zeros dropped.
    pub fn from_rows(n_states: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut targets = Vec::new();
        let mut probs = Vec::new();
        offsets.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(t, _)| t);
            let mut sum = 0.0;
            let start = targets.len();
            for (t, p) in row {
                if t >= n_states {
                    return Err(Error::InvalidModel(format!(
                        "transition row {r} targets state {t} but there are {n_states} states"
                    )));
                }
                if !(p >= 0.0) || !p.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "transition row {r} has invalid probability {p}"
                    )));
                }
                sum += p;
                if p == 0.0 {
                    continue;
                }
                if targets.len() > start && *targets.last().unwrap() == t {
                    *probs.last_mut().unwrap() += p;
                } else {
                    targets.push(t);
                    probs.push(p);
                }
            }
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::InvalidModel(format!(
                    "transition row {r} sums to {sum}"
                )));
            }
            offsets.push(targets.len());
        }
        Ok(Self {
            n_states,
            offsets,
            targets,
            probs,
        })
    }

    /// Builds from a dense buffer of `n_rows * n_states` probabilities.
    pub fn from_dense(n_states: usize, dense: &[f64]) -> Result<Self> {
        if n_states == 0 || !dense.len().is_multiple_of(n_states) {
            return Err(Error::Dimension(format!(
                "dense transition buffer of length {} is not a multiple of {n_states}",
                dense.len()
            )));
        }
        let rows = dense
            .chunks(n_states)
            .map(|row| row.iter().copied().enumerate().collect())
            .collect();
        Self::from_rows(n_states, rows)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Successor states and their probabilities for row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.offsets[r], self.offsets[r + 1]);
        (&self.targets[lo..hi], &self.probs[lo..hi])
    }

    pub fn dense_row(&self, r: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_states];
        let (t, p) = self.row(r);
        for (&s, &q) in t.iter().zip(p) {
            out[s] = q;
        }
        out
    }

    /// Expected value of `v` under row `r`.
    #[inline]
    pub fn expect(&self, r: usize, v: &[f64]) -> f64 {
        let (t, p) = self.row(r);
        t.iter().zip(p).map(|(&s, &q)| q * v[s]).sum()
    }

    /// Adds `weight * P(.|row)` into `acc`.
    #[inline]
    pub fn accumulate(&self, r: usize, weight: f64, acc: &mut [f64]) {
        let (t, p) = self.row(r);
        for (&s, &q) in t.iter().zip(p) {
            acc[s] += weight * q;
        }
    }

    /// Draws a successor given a uniform variate in [0, 1).
    pub fn sample(&self, r: usize, u: f64) -> usize {
        let (t, p) = self.row(r);
        let mut acc = 0.0;
        for (&s, &q) in t.iter().zip(p) {
            acc += q;
            if u < acc {
                return s;
            }
        }
        *t.last().expect("transition rows are never empty")
    }

    pub fn is_deterministic(&self) -> bool {
        (0..self.n_rows()).all(|r| self.offsets[r + 1] - self.offsets[r] == 1)
    }
}

/// Index of the row for step `h`, state `s`, action `a`.
#[inline]
pub(crate) fn row_index(n_states: usize, n_actions: usize, h: usize, s: usize, a: usize) -> usize {
    (h * n_states + s) * n_actions + a
}

/// Checks a probability vector against the simplex tolerance.
pub(crate) fn check_simplex(what: &str, p: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for &x in p {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::InvalidModel(format!(
                "{what}: invalid probability {x}"
            )));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidModel(format!("{what}: sums to {sum}")));
    }
    Ok(())
}

/// Draws an index from a probability vector given a uniform variate.
pub(crate) fn sample_index(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &q) in p.iter().enumerate() {
        if q > 0.0 {
            acc += q;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}
