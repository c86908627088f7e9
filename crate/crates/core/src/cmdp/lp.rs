use crate::cmdp::Cmdp;
use crate::error::{Error, Result};
use crate::linprog::{LinearProgram, Relation};
use crate::occupancy::{policy_from_occupancy, OccupancyMeasure};
use crate::tabular::AgentPolicy;

/// Residual allowed on flow, normalization and threshold after solving.
pub const LP_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub policy: AgentPolicy,
    pub occupancy: OccupancyMeasure,
    /// Exact values of `policy` in the model.
    pub reward_value: f64,
    pub cost_value: f64,
}

/// Maximizes expected reward subject to the cost threshold by linear
/// programming over occupancy measures. Fails with [`Error::Infeasible`]
/// when no policy meets the threshold.
pub fn solve_cmdp_lp(model: &Cmdp) -> Result<LpSolution> {
    let mut lp = LinearProgram::maximize();
    let vars = OccupancyVars::add(&mut lp, model, |idx| model.reward()[idx]);
    lp.constraint(
        &vars.terms(model, model.cost()),
        Relation::Le,
        model.threshold(),
    );
    let sol = lp.solve()?;
    let (occupancy, policy) = vars.recover(model, &sol.values)?;
    let values = model.evaluate(&policy)?;
    if values.cost > model.threshold() + LP_RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "recovered policy has cost {} above threshold {}",
            values.cost,
            model.threshold()
        )));
    }
    Ok(LpSolution {
        policy,
        occupancy,
        reward_value: values.reward,
        cost_value: values.cost,
    })
}

/// Occupancy variables of one model inside a linear program, restricted to
/// reachable `(h, s)` pairs, with the flow constraints already added.
pub(crate) struct OccupancyVars {
    /// First action's variable per `h * ns + s`, `usize::MAX` if unreachable.
    first: Vec<usize>,
}

impl OccupancyVars {
    pub(crate) fn add(
        lp: &mut LinearProgram,
        model: &Cmdp,
        objective: impl Fn(usize) -> f64,
    ) -> Self {
        let (hz, ns, na) = (model.horizon(), model.n_states(), model.n_actions());
        let reachable = model.reachable();
        let mut first = vec![usize::MAX; hz * ns];
        for h in 0..hz {
            for s in 0..ns {
                if reachable[h][s] {
                    first[h * ns + s] = lp.var(objective(model.index(h, s, 0)), 0.0, f64::INFINITY);
                    for a in 1..na {
                        lp.var(objective(model.index(h, s, a)), 0.0, f64::INFINITY);
                    }
                }
            }
        }
        let mut flows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); hz * ns];
        for h in 0..hz {
            for s in 0..ns {
                let base = first[h * ns + s];
                if base == usize::MAX {
                    continue;
                }
                for a in 0..na {
                    flows[h * ns + s].push((base + a, 1.0));
                    if h + 1 < hz {
                        let (targets, probs) = model.transitions().row(model.index(h, s, a));
                        for (&t, &p) in targets.iter().zip(probs) {
                            flows[(h + 1) * ns + t].push((base + a, -p));
                        }
                    }
                }
            }
        }
        for (hs, terms) in flows.iter().enumerate() {
            if first[hs] == usize::MAX {
                continue;
            }
            let rhs = if hs < ns {
                model.initial_dist()[hs]
            } else {
                0.0
            };
            lp.constraint(terms, Relation::Eq, rhs);
        }
        Self { first }
    }

    /// Linear terms of the expected sum of a stage table.
    pub(crate) fn terms(&self, model: &Cmdp, table: &[f64]) -> Vec<(usize, f64)> {
        let (hz, ns, na) = (model.horizon(), model.n_states(), model.n_actions());
        let mut out = Vec::new();
        for h in 0..hz {
            for s in 0..ns {
                let base = self.first[h * ns + s];
                if base != usize::MAX {
                    out.extend((0..na).map(|a| (base + a, table[model.index(h, s, a)])));
                }
            }
        }
        out
    }

    /// Occupancy and policy from a solution, with the flow residual checked.
    pub(crate) fn recover(
        &self,
        model: &Cmdp,
        values: &[f64],
    ) -> Result<(OccupancyMeasure, AgentPolicy)> {
        let (hz, ns, na) = (model.horizon(), model.n_states(), model.n_actions());
        let mut rho = vec![0.0; hz * ns * na];
        for h in 0..hz {
            for s in 0..ns {
                let base = self.first[h * ns + s];
                if base == usize::MAX {
                    continue;
                }
                for a in 0..na {
                    let v = values[base + a];
                    if v < -LP_RESIDUAL_TOL {
                        return Err(Error::Numerical(format!("occupancy entry {v} is negative")));
                    }
                    rho[model.index(h, s, a)] = v.max(0.0);
                }
            }
        }
        let occupancy = OccupancyMeasure::new(hz, ns, na, rho)?;
        let residual = occupancy.flow_residual(model)?;
        if residual > LP_RESIDUAL_TOL {
            return Err(Error::Numerical(format!(
                "occupancy flow residual {residual:e}"
            )));
        }
        let policy = policy_from_occupancy(&occupancy);
        Ok((occupancy, policy))
    }
}
