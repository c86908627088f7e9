#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Tabular finite-horizon constrained Markov potential games.
//!
//! The crate covers exact evaluation of product policies, reduction of a
//! game to the constrained MDP faced by one agent, exact and sample-based
//! CMDP solvers, coordinate-ascent Nash search with feasible iterates,
//! Lagrangian duality tools for bimatrix games, and the two benchmark
//! environments (a two-agent grid world and an eight-agent congestion game).

pub mod ca;
pub mod cmdp;
pub mod duality;
pub mod envs;
pub mod error;
mod linprog;
pub mod occupancy;
pub mod tabular;

pub use cmdp::{induce_cmdp, solve_cmdp_lp, solve_mdp, Cmdp, CmdpParts, PrimalDualConfig};
pub use error::{Error, Result};
pub use occupancy::OccupancyMeasure;
pub use tabular::{
    evaluate, is_feasible, AgentPolicy, Cmpg, CmpgParts, EvalResult, JointPolicy, Transitions,
};
