//! Joint-action indexing and opponent marginalization.
//!
//! Joint actions use mixed radix with agent 0 most significant, so for two
//! agents the pair `(i, j)` is index `i * m2 + j`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct JointSpace {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl JointSpace {
    pub fn new(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidModel(
                "every agent needs at least one action".into(),
            ));
        }
        let mut strides = vec![1; sizes.len()];
        let mut size: usize = 1;
        for i in (0..sizes.len()).rev() {
            strides[i] = size;
            size = size
                .checked_mul(sizes[i])
                .ok_or_else(|| Error::InvalidModel("joint action space too large".into()))?;
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            strides,
            size,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn stride(&self, agent: usize) -> usize {
        self.strides[agent]
    }

    pub fn encode(&self, actions: &[usize]) -> usize {
        actions.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn decode(&self, joint: usize) -> Vec<usize> {
        (0..self.sizes.len())
            .map(|i| self.action_of(joint, i))
            .collect()
    }

    #[inline]
    pub fn action_of(&self, joint: usize, agent: usize) -> usize {
        (joint / self.strides[agent]) % self.sizes[agent]
    }

    /// Calls `f(joint, prob)` for every joint action with positive product
    /// probability. If `fixed = Some((i, a))`, agent `i` is pinned to `a`
    /// and its own distribution is ignored.
    pub fn for_each_profile(
        &self,
        dists: &[&[f64]],
        fixed: Option<(usize, usize)>,
        mut f: impl FnMut(usize, f64),
    ) {
        self.visit(0, 0, 1.0, dists, fixed, &mut f);
    }

    fn visit(
        &self,
        agent: usize,
        acc: usize,
        prob: f64,
        dists: &[&[f64]],
        fixed: Option<(usize, usize)>,
        f: &mut impl FnMut(usize, f64),
    ) {
        if agent == self.sizes.len() {
            f(acc, prob);
            return;
        }
        if let Some((i, a)) = fixed {
            if i == agent {
                self.visit(
                    agent + 1,
                    acc + a * self.strides[agent],
                    prob,
                    dists,
                    fixed,
                    f,
                );
                return;
            }
        }
        for (a, &p) in dists[agent].iter().enumerate() {
            if p > 0.0 {
                self.visit(
                    agent + 1,
                    acc + a * self.strides[agent],
                    prob * p,
                    dists,
                    fixed,
                    f,
                );
            }
        }
    }
}

/// Lookup tables for games whose stage data depend on the joint action only
/// through the action counts (plus the agent's own action).
#[derive(Clone, Debug, PartialEq)]
pub struct CountTables {
    n_agents: usize,
    n_actions: usize,
    radix: usize,
    /// Count code -> slot, `u32::MAX` where the counts do not sum to `n_agents`.
    slot_of_code: Vec<u32>,
    /// For each slot and action `a` with positive count: a joint action in that
    /// class and an agent playing `a` in it.
    reps: Vec<Option<(usize, usize)>>,
    /// A representative joint per slot.
    slot_joint: Vec<usize>,
}

impl CountTables {
    pub(crate) fn new(space: &JointSpace) -> Result<Self> {
        let n = space.n_agents();
        let m = space.sizes()[0];
        if space.sizes().iter().any(|&k| k != m) {
            return Err(Error::InvalidModel(
                "count symmetry needs the same action set for every agent".into(),
            ));
        }
        let radix = n + 1;
        let n_codes = radix
            .checked_pow(m as u32)
            .filter(|&c| c <= 1 << 24)
            .ok_or_else(|| Error::InvalidModel("count table too large".into()))?;
        let mut slot_of_code = vec![u32::MAX; n_codes];
        let mut reps: Vec<Option<(usize, usize)>> = Vec::new();
        let mut slot_joint = Vec::new();
        let mut counts = vec![0usize; m];
        for joint in 0..space.size() {
            counts.iter_mut().for_each(|c| *c = 0);
            for i in 0..n {
                counts[space.action_of(joint, i)] += 1;
            }
            let code = encode_counts(&counts, radix);
            if slot_of_code[code] == u32::MAX {
                let slot = slot_joint.len();
                slot_of_code[code] = slot as u32;
                slot_joint.push(joint);
                for a in 0..m {
                    let agent = (0..n).find(|&i| space.action_of(joint, i) == a);
                    reps.push(agent.map(|i| (joint, i)));
                }
            }
        }
        Ok(Self {
            n_agents: n,
            n_actions: m,
            radix,
            slot_of_code,
            reps,
            slot_joint,
        })
    }

    pub fn n_slots(&self) -> usize {
        self.slot_joint.len()
    }

    #[inline]
    pub(crate) fn slot(&self, code: usize) -> usize {
        self.slot_of_code[code] as usize
    }

    #[inline]
    pub(crate) fn slot_joint(&self, slot: usize) -> usize {
        self.slot_joint[slot]
    }

    #[inline]
    pub(crate) fn rep(&self, slot: usize, action: usize) -> (usize, usize) {
        self.reps[slot * self.n_actions + action].expect("action present in count class")
    }

    #[inline]
    pub(crate) fn unit(&self, action: usize) -> usize {
        self.radix.pow(action as u32)
    }

    pub(crate) fn code_of_joint(&self, space: &JointSpace, joint: usize) -> usize {
        let mut code = 0;
        for i in 0..self.n_agents {
            code += self.unit(space.action_of(joint, i));
        }
        code
    }

    /// Decodes a count code into per-action counts.
    pub fn counts_of_code(&self, mut code: usize) -> Vec<usize> {
        let mut out = vec![0; self.n_actions];
        for c in out.iter_mut() {
            *c = code % self.radix;
            code /= self.radix;
        }
        out
    }

    /// Distribution over count codes of all agents except `skip`.
    pub(crate) fn convolve(&self, dists: &[&[f64]], skip: Option<usize>) -> Vec<(usize, f64)> {
        let mut cur = vec![(0usize, 1.0f64)];
        let mut buf = vec![0.0; self.slot_of_code.len()];
        let mut touched = Vec::new();
        for (i, d) in dists.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            for &(code, p) in &cur {
                for (a, &q) in d.iter().enumerate() {
                    if q > 0.0 {
                        let c = code + self.unit(a);
                        if buf[c] == 0.0 {
                            touched.push(c);
                        }
                        buf[c] += p * q;
                    }
                }
            }
            touched.sort_unstable();
            cur = touched
                .iter()
                .map(|&c| (c, std::mem::take(&mut buf[c])))
                .collect();
            touched.clear();
        }
        cur
    }
}

fn encode_counts(counts: &[usize], radix: usize) -> usize {
    counts.iter().rev().fold(0, |acc, &c| acc * radix + c)
}
